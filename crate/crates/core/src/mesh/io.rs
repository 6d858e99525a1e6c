//! ASCII exchange format for triangulations.
//!
//! Layout:
//!
//! ```text
//! mesh 2 tri
//! vertices <count>
//! <x> <y>          (one line per vertex)
//! cells <count>
//! <i> <j> <k>      (0-based vertex indices, one line per cell)
//! ```
//!
//! Coordinates are written with Rust's shortest round-trip float formatting,
//! so export followed by import reproduces the vertex set bit-identically.

use super::Mesh;
use crate::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

pub const MESH_HEADER: &str = "mesh 2 tri";

/// Serializes a mesh to the exchange format.
pub fn mesh_to_string(mesh: &Mesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MESH_HEADER}");
    let _ = writeln!(out, "vertices {}", mesh.n_vertices());
    for v in &mesh.vertices {
        let _ = writeln!(out, "{} {}", v[0], v[1]);
    }
    let _ = writeln!(out, "cells {}", mesh.n_cells());
    for c in &mesh.cells {
        let _ = writeln!(out, "{} {} {}", c[0], c[1], c[2]);
    }
    out
}

/// Writes a mesh to `path` in the exchange format.
pub fn write_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    std::fs::write(path, mesh_to_string(mesh))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Parses a mesh from exchange-format text, rebuilding edge topology and
/// validating all invariants.
pub fn mesh_from_str(text: &str) -> Result<Mesh> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut next = |what: &str| -> Result<(usize, &str)> {
        lines
            .next()
            .ok_or_else(|| Error::MeshParse(format!("unexpected end of file, expected {what}")))
    };

    let (_, header) = next("header")?;
    if header.trim() != MESH_HEADER {
        return Err(Error::MeshParse(format!("bad header {header:?}, expected {MESH_HEADER:?}")));
    }

    let (ln, vline) = next("vertex count")?;
    let nv = parse_count(vline, "vertices", ln)?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, line) = next("vertex line")?;
        let mut it = line.split_whitespace();
        let x = parse_f64(it.next(), ln)?;
        let y = parse_f64(it.next(), ln)?;
        if it.next().is_some() {
            return Err(Error::MeshParse(format!("line {}: trailing tokens", ln + 1)));
        }
        vertices.push([x, y]);
    }

    let (ln, cline) = next("cell count")?;
    let nc = parse_count(cline, "cells", ln)?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (ln, line) = next("cell line")?;
        let mut it = line.split_whitespace();
        let mut cell = [0usize; 3];
        for slot in &mut cell {
            *slot = parse_usize(it.next(), ln)?;
        }
        if it.next().is_some() {
            return Err(Error::MeshParse(format!("line {}: trailing tokens", ln + 1)));
        }
        cells.push(cell);
    }

    Mesh::from_raw(vertices, cells, None)
}

/// Reads a mesh from a file in the exchange format.
pub fn read_mesh(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    mesh_from_str(&text)
}

/// Alias for [`read_mesh`] matching the operation vocabulary.
pub fn import_mesh(path: &Path) -> Result<Mesh> {
    read_mesh(path)
}

fn parse_count(line: &str, keyword: &str, ln: usize) -> Result<usize> {
    let mut it = line.split_whitespace();
    match (it.next(), it.next(), it.next()) {
        (Some(kw), Some(n), None) if kw == keyword => n
            .parse()
            .map_err(|_| Error::MeshParse(format!("line {}: bad count {n:?}", ln + 1))),
        _ => Err(Error::MeshParse(format!(
            "line {}: expected \"{keyword} <count>\", got {line:?}",
            ln + 1
        ))),
    }
}

fn parse_f64(tok: Option<&str>, ln: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| Error::MeshParse(format!("line {}: missing number", ln + 1)))?;
    tok.parse()
        .map_err(|_| Error::MeshParse(format!("line {}: bad float {tok:?}", ln + 1)))
}

fn parse_usize(tok: Option<&str>, ln: usize) -> Result<usize> {
    let tok = tok.ok_or_else(|| Error::MeshParse(format!("line {}: missing index", ln + 1)))?;
    tok.parse()
        .map_err(|_| Error::MeshParse(format!("line {}: bad index {tok:?}", ln + 1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, DomainSpec};

    #[test]
    fn round_trip_is_identical() {
        let m = generate_mesh(&DomainSpec::UnitSquare, 2).unwrap();
        let text = mesh_to_string(&m);
        let m2 = mesh_from_str(&text).unwrap();
        assert_eq!(m.vertices, m2.vertices);
        assert_eq!(m.cells, m2.cells);
        assert_eq!(m.edges, m2.edges);
        // Second round trip is byte-identical.
        assert_eq!(text, mesh_to_string(&m2));
    }

    #[test]
    fn repeated_cell_is_rejected() {
        let text = "mesh 2 tri\nvertices 3\n0 0\n1 0\n0 1\ncells 2\n0 1 2\n0 1 2\n";
        match mesh_from_str(text) {
            Err(Error::NonConforming(_)) => {}
            other => panic!("expected NonConforming, got {other:?}"),
        }
    }

    #[test]
    fn clockwise_cell_is_rejected() {
        let text = "mesh 2 tri\nvertices 3\n0 0\n1 0\n0 1\ncells 1\n0 2 1\n";
        match mesh_from_str(text) {
            Err(Error::InvertedCell(0)) => {}
            other => panic!("expected InvertedCell, got {other:?}"),
        }
    }

    #[test]
    fn bad_header_is_rejected() {
        assert!(matches!(mesh_from_str("mesh 3 tet\n"), Err(Error::MeshParse(_))));
    }
}
