//! Structured mesh generators for the built-in domains.

use super::{DomainSpec, Mesh};
use crate::{Error, Result};

/// Number of vertices on disk ring `j` (rings are 1-based).
const DISK_RING_FACTOR: usize = 8;

/// Generates a conforming triangulation of `spec` at refinement level `n`.
///
/// For the square and the L-shape, `n` counts subdivisions per unit length
/// and every grid square is split along the same diagonal (lower-left to
/// upper-right). The disk uses `n` concentric rings with `8 j` vertices on
/// ring `j`, so boundary vertices sit exactly on the unit circle and the
/// mesh size is proportional to `1/n` for every domain.
pub fn generate_mesh(spec: &DomainSpec, n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidInput("refinement parameter N must be >= 1".into()));
    }
    match spec {
        DomainSpec::UnitSquare => unit_square(n),
        DomainSpec::LShape => l_shape(n),
        DomainSpec::Disk => disk(n),
        DomainSpec::Imported(path) => {
            Err(Error::InvalidInput(format!(
                "imported domain {} cannot be generated; use import_mesh",
                path.display()
            )))
        }
    }
}

fn unit_square(n: usize) -> Result<Mesh> {
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
    }
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            cells.push([a, b, c]);
            cells.push([a, c, d]);
        }
    }
    Mesh::from_raw(vertices, cells, Some(n))
}

fn l_shape(n: usize) -> Result<Mesh> {
    let m = 2 * n; // subdivisions across the full (-1,1) span
    let coord = |i: usize| -1.0 + i as f64 / n as f64 * 1.0;
    let keep = |i: usize, j: usize| {
        // Square (i, j) has centroid ((i+0.5)/n - 1, (j+0.5)/n - 1); drop the
        // third quadrant [-1,0]^2.
        !(i < n && j < n)
    };
    let mut vmap = vec![usize::MAX; (m + 1) * (m + 1)];
    let mut vertices = Vec::new();
    let mut cells = Vec::new();
    let raw = |i: usize, j: usize| j * (m + 1) + i;
    for j in 0..m {
        for i in 0..m {
            if !keep(i, j) {
                continue;
            }
            for (ii, jj) in [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)] {
                let r = raw(ii, jj);
                if vmap[r] == usize::MAX {
                    vmap[r] = vertices.len();
                    vertices.push([coord(ii), coord(jj)]);
                }
            }
            let (a, b, c, d) = (
                vmap[raw(i, j)],
                vmap[raw(i + 1, j)],
                vmap[raw(i + 1, j + 1)],
                vmap[raw(i, j + 1)],
            );
            cells.push([a, b, c]);
            cells.push([a, c, d]);
        }
    }
    Mesh::from_raw(vertices, cells, Some(n))
}

fn disk(n: usize) -> Result<Mesh> {
    // Center vertex, then ring j at radius j/n with 8j equispaced vertices.
    let ring_start = |j: usize| 1 + 4 * j * (j - 1); // 1 + sum_{i<j} 8i
    let ring_len = |j: usize| DISK_RING_FACTOR * j;
    let mut vertices = vec![[0.0, 0.0]];
    for j in 1..=n {
        let r = j as f64 / n as f64;
        let len = ring_len(j);
        for i in 0..len {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / len as f64;
            vertices.push([r * theta.cos(), r * theta.sin()]);
        }
    }

    let mut cells = Vec::with_capacity(8 * n * n);
    // Central fan.
    for i in 0..ring_len(1) {
        cells.push([0, ring_start(1) + i, ring_start(1) + (i + 1) % ring_len(1)]);
    }
    // Annulus strips, zipped by angular position.
    for j in 2..=n {
        let (inner, outer) = (ring_start(j - 1), ring_start(j));
        let (m_in, m_out) = (ring_len(j - 1), ring_len(j));
        let (mut i, mut o) = (0usize, 0usize);
        while i < m_in || o < m_out {
            // Compare the next fence angles (i+1)/m_in vs (o+1)/m_out exactly
            // in integers; ties advance the outer ring.
            let advance_outer = o < m_out && (i == m_in || (o + 1) * m_in <= (i + 1) * m_out);
            let iv = inner + i % m_in;
            if advance_outer {
                let ov = outer + o % m_out;
                let ov2 = outer + (o + 1) % m_out;
                cells.push([iv, ov, ov2]);
                o += 1;
            } else {
                let ov = outer + o % m_out;
                let iv2 = inner + (i + 1) % m_in;
                cells.push([iv, ov, iv2]);
                i += 1;
            }
        }
    }
    Mesh::from_raw(vertices, cells, Some(n))
}
