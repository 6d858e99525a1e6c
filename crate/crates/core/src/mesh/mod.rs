//! Conforming triangulations of the 2D test domains.
//!
//! All meshes expose oriented edge topology: every edge is stored once with
//! its vertices in ascending index order, and each cell records, per local
//! edge, the global edge index together with the sign relating the cell's
//! outward normal to the global edge normal. Normal-continuity of
//! Raviart-Thomas fields across edges reduces to this sign bookkeeping.

mod generate;
mod io;

pub use generate::generate_mesh;
pub use io::{import_mesh, read_mesh, write_mesh};

use crate::{Error, Result};
use serde::Serialize;
use std::path::PathBuf;

/// The computational domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainSpec {
    /// (0,1)²
    #[serde(rename = "square")]
    UnitSquare,
    /// (−1,1)² \ [−1,0]²
    LShape,
    /// Unit circle centered at the origin, approximated by inscribed polygons.
    Disk,
    /// A mesh loaded from the ASCII exchange format.
    Imported(PathBuf),
}

impl DomainSpec {
    pub fn name(&self) -> &'static str {
        match self {
            DomainSpec::UnitSquare => "square",
            DomainSpec::LShape => "lshape",
            DomainSpec::Disk => "disk",
            DomainSpec::Imported(_) => "imported",
        }
    }
}

/// Incidence of a cell on one of its edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellEdge {
    /// Global edge index.
    pub edge: usize,
    /// +1 if the cell's outward normal on this edge equals the global edge
    /// normal (the ascending-vertex direction rotated by −90°), −1 otherwise.
    pub sign: f64,
}

/// A conforming triangulation with oriented edge topology.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// Vertex-index triples, positively oriented (counterclockwise).
    pub cells: Vec<[usize; 3]>,
    /// Unique edges as `[low, high]` vertex pairs, sorted lexicographically.
    pub edges: Vec<[usize; 2]>,
    /// Per cell: the three edges opposite local vertices 0, 1, 2.
    pub cell_edges: Vec<[CellEdge; 3]>,
    pub boundary_edge: Vec<bool>,
    /// Refinement parameter for generated meshes, `None` for imported ones.
    pub refinement: Option<usize>,
    /// Mesh size: the largest cell diameter.
    pub h: f64,
}

impl Mesh {
    /// Builds a mesh from raw vertices and cells, deriving edge topology and
    /// validating conformity and orientation.
    pub fn from_raw(
        vertices: Vec<[f64; 2]>,
        cells: Vec<[usize; 3]>,
        refinement: Option<usize>,
    ) -> Result<Self> {
        if vertices.is_empty() || cells.is_empty() {
            return Err(Error::NonConforming("empty vertex or cell list".into()));
        }
        for (c, cell) in cells.iter().enumerate() {
            for &v in cell {
                if v >= vertices.len() {
                    return Err(Error::NonConforming(format!(
                        "cell {c} references vertex {v} out of range"
                    )));
                }
            }
            if cell[0] == cell[1] || cell[1] == cell[2] || cell[0] == cell[2] {
                return Err(Error::NonConforming(format!("cell {c} repeats a vertex")));
            }
        }

        // Orientation first: inverted cells are reported as such, not as
        // conformity failures.
        for c in 0..cells.len() {
            let [p0, p1, p2] = cell_coords(&vertices, &cells[c]);
            if signed_area(p0, p1, p2) <= 0.0 {
                return Err(Error::InvertedCell(c));
            }
        }

        let mut sorted_cells: Vec<[usize; 3]> = cells
            .iter()
            .map(|c| {
                let mut s = *c;
                s.sort_unstable();
                s
            })
            .collect();
        sorted_cells.sort_unstable();
        for w in sorted_cells.windows(2) {
            if w[0] == w[1] {
                return Err(Error::NonConforming(format!(
                    "duplicate cell ({}, {}, {})",
                    w[0][0], w[0][1], w[0][2]
                )));
            }
        }

        // Global edges in ascending-vertex order, numbered lexicographically.
        let mut keys: Vec<[usize; 2]> = Vec::with_capacity(3 * cells.len());
        for cell in &cells {
            for l in 0..3 {
                let a = cell[(l + 1) % 3];
                let b = cell[(l + 2) % 3];
                keys.push([a.min(b), a.max(b)]);
            }
        }
        keys.sort_unstable();
        keys.dedup();
        let edge_index = |a: usize, b: usize| -> usize {
            let key = [a.min(b), a.max(b)];
            keys.binary_search(&key).expect("edge key must exist")
        };

        let mut incidence = vec![0usize; keys.len()];
        let mut cell_edges = Vec::with_capacity(cells.len());
        for cell in &cells {
            let mut entry = [CellEdge { edge: 0, sign: 1.0 }; 3];
            for l in 0..3 {
                let a = cell[(l + 1) % 3];
                let b = cell[(l + 2) % 3];
                let e = edge_index(a, b);
                incidence[e] += 1;
                entry[l] = CellEdge { edge: e, sign: if a < b { 1.0 } else { -1.0 } };
            }
            cell_edges.push(entry);
        }

        let mut boundary_edge = vec![false; keys.len()];
        for (e, &count) in incidence.iter().enumerate() {
            match count {
                1 => boundary_edge[e] = true,
                2 => {}
                n => {
                    return Err(Error::NonConforming(format!(
                        "edge ({}, {}) shared by {n} cells",
                        keys[e][0], keys[e][1]
                    )))
                }
            }
        }

        let mut h: f64 = 0.0;
        for cell in &cells {
            let [p0, p1, p2] = cell_coords(&vertices, cell);
            h = h.max(dist(p0, p1)).max(dist(p1, p2)).max(dist(p2, p0));
        }

        Ok(Mesh {
            vertices,
            cells,
            edges: keys,
            cell_edges,
            boundary_edge,
            refinement,
            h,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_boundary_edges(&self) -> usize {
        self.boundary_edge.iter().filter(|&&b| b).count()
    }

    /// Coordinates of the three vertices of cell `c`.
    pub fn cell_coords(&self, c: usize) -> [[f64; 2]; 3] {
        cell_coords(&self.vertices, &self.cells[c])
    }

    /// Affine map data of cell `c`: columns of the Jacobian and its
    /// determinant (twice the cell area; positive for valid cells).
    pub fn jacobian(&self, c: usize) -> ([[f64; 2]; 2], f64) {
        let [p0, p1, p2] = self.cell_coords(c);
        let j = [
            [p1[0] - p0[0], p2[0] - p0[0]],
            [p1[1] - p0[1], p2[1] - p0[1]],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        (j, det)
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        0.5 * self.jacobian(c).1
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_area(c)).sum()
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        dist(self.vertices[a], self.vertices[b])
    }

    /// Unit normal of edge `e` in the global convention: the ascending-vertex
    /// direction rotated by −90°.
    pub fn edge_normal(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        let len = dist(pa, pb);
        [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len]
    }

    /// Smallest interior angle over all cells, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        let mut min = f64::INFINITY;
        for c in 0..self.n_cells() {
            let p = self.cell_coords(c);
            for i in 0..3 {
                let a = p[i];
                let b = p[(i + 1) % 3];
                let d = p[(i + 2) % 3];
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [d[0] - a[0], d[1] - a[1]];
                let dot = u[0] * v[0] + u[1] * v[1];
                let cross = u[0] * v[1] - u[1] * v[0];
                min = min.min(cross.atan2(dot).abs());
            }
        }
        min.to_degrees()
    }

    /// Checks the Euler-type identity E = (3 C + B) / 2.
    pub fn edge_count_identity_holds(&self) -> bool {
        2 * self.n_edges() == 3 * self.n_cells() + self.n_boundary_edges()
    }
}

fn cell_coords(vertices: &[[f64; 2]], cell: &[usize; 3]) -> [[f64; 2]; 3] {
    [vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]]
}

fn signed_area(p0: [f64; 2], p1: [f64; 2], p2: [f64; 2]) -> f64 {
    0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_n1_counts() {
        let m = generate_mesh(&DomainSpec::UnitSquare, 1).unwrap();
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(m.n_cells(), 2);
        assert_eq!(m.n_edges(), 5);
        assert!(m.edge_count_identity_holds());
    }

    #[test]
    fn unit_square_n2_counts() {
        let m = generate_mesh(&DomainSpec::UnitSquare, 2).unwrap();
        assert_eq!(m.n_vertices(), 9);
        assert_eq!(m.n_cells(), 8);
        assert_eq!(m.n_edges(), 16);
    }

    #[test]
    fn unit_square_counts_formula() {
        for n in [3, 5, 8] {
            let m = generate_mesh(&DomainSpec::UnitSquare, n).unwrap();
            assert_eq!(m.n_cells(), 2 * n * n);
            assert_eq!(m.n_vertices(), (n + 1) * (n + 1));
            assert!(m.edge_count_identity_holds());
            assert!((m.total_area() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn lshape_n2_cell_count() {
        let m = generate_mesh(&DomainSpec::LShape, 2).unwrap();
        assert_eq!(m.n_cells(), 24);
        assert!((m.total_area() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn disk_boundary_vertices_on_circle() {
        let m = generate_mesh(&DomainSpec::Disk, 4).unwrap();
        assert_eq!(m.n_cells(), 8 * 16);
        let mut on_boundary = 0;
        for (e, &is_b) in m.boundary_edge.iter().enumerate() {
            if !is_b {
                continue;
            }
            for &v in &m.edges[e] {
                let [x, y] = m.vertices[v];
                assert!((x * x + y * y - 1.0).abs() < 4.0 * f64::EPSILON);
                on_boundary += 1;
            }
        }
        assert!(on_boundary > 0);
    }

    #[test]
    fn rejects_n_zero() {
        assert!(generate_mesh(&DomainSpec::UnitSquare, 0).is_err());
    }

    #[test]
    fn detects_duplicate_cell() {
        let verts = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let cells = vec![[0, 1, 2], [0, 1, 2]];
        match Mesh::from_raw(verts, cells, None) {
            Err(Error::NonConforming(_)) => {}
            other => panic!("expected NonConforming, got {other:?}"),
        }
    }

    #[test]
    fn detects_inverted_cell() {
        let verts = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let cells = vec![[0, 2, 1]];
        match Mesh::from_raw(verts, cells, None) {
            Err(Error::InvertedCell(0)) => {}
            other => panic!("expected InvertedCell, got {other:?}"),
        }
    }

    #[test]
    fn detects_edge_shared_three_times() {
        let verts = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [-1.0, 0.5]];
        let cells = vec![[0, 1, 2], [1, 3, 2], [0, 2, 4]];
        // Edge (0,2) belongs to cells 0 and 2; add a third user.
        let cells_bad = [cells.as_slice(), &[[0, 2, 3]]].concat();
        assert!(Mesh::from_raw(verts.clone(), cells, None).is_ok());
        assert!(matches!(
            Mesh::from_raw(verts, cells_bad, None),
            Err(Error::NonConforming(_)) | Err(Error::InvertedCell(_))
        ));
    }

    #[test]
    fn shape_regularity_and_h_scaling() {
        for spec in [DomainSpec::UnitSquare, DomainSpec::LShape, DomainSpec::Disk] {
            let mut ratios = Vec::new();
            for n in [2usize, 4, 8, 16, 32, 64] {
                let m = generate_mesh(&spec, n).unwrap();
                assert!(m.edge_count_identity_holds(), "{spec:?} N={n}");
                assert!(
                    m.min_angle_deg() >= 20.0,
                    "{spec:?} N={n}: min angle {}",
                    m.min_angle_deg()
                );
                ratios.push(m.h * n as f64);
            }
            let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().cloned().fold(0.0_f64, f64::max);
            assert!(lo > 0.1 && hi < 4.0, "{spec:?}: h*N in [{lo}, {hi}]");
            // h*N stays within a fixed band: proportionality constant per domain.
            assert!(hi / lo < 2.5, "{spec:?}: h*N spread {}", hi / lo);
        }
    }

    #[test]
    fn cell_edge_signs_are_consistent() {
        // Interior edges must be seen with opposite outward normals by the
        // two incident cells, hence opposite signs.
        let m = generate_mesh(&DomainSpec::UnitSquare, 3).unwrap();
        let mut seen: Vec<Vec<f64>> = vec![Vec::new(); m.n_edges()];
        for ce in &m.cell_edges {
            for entry in ce {
                seen[entry.edge].push(entry.sign);
            }
        }
        for (e, signs) in seen.iter().enumerate() {
            if m.boundary_edge[e] {
                assert_eq!(signs.len(), 1);
            } else {
                assert_eq!(signs.len(), 2);
                assert_eq!(signs[0] * signs[1], -1.0, "edge {e}");
            }
        }
    }
}
