//! Legacy ASCII VTK output of eigenmode displacement fields.
//!
//! The discontinuous cellwise field is sampled at mesh vertices by
//! averaging the values from all adjacent cells — adequate for magnitude
//! plots, not a conforming representation.

use crate::assembly::{eval_u_at, Assembler};
use crate::mesh::Mesh;
use crate::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Reference coordinates of the three local vertices.
const LOCAL_VERTEX_COORDS: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Averages a displacement coefficient vector to per-vertex values.
pub fn vertex_average_u(asm: &Assembler, coeffs: &[f64]) -> Vec<[f64; 2]> {
    let mesh = asm.mesh;
    let mut sums = vec![[0.0; 2]; mesh.n_vertices()];
    let mut counts = vec![0usize; mesh.n_vertices()];
    for c in 0..mesh.n_cells() {
        for (local, &v) in mesh.cells[c].iter().enumerate() {
            let [xr, yr] = LOCAL_VERTEX_COORDS[local];
            let val = eval_u_at(asm, coeffs, c, xr, yr);
            sums[v][0] += val[0];
            sums[v][1] += val[1];
            counts[v] += 1;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        if n > 0 {
            s[0] /= n as f64;
            s[1] /= n as f64;
        }
    }
    sums
}

/// Renders a mesh plus one per-vertex vector field as a legacy ASCII
/// unstructured grid.
pub fn vtk_string(mesh: &Mesh, field_name: &str, field: &[[f64; 2]]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 3.0");
    let _ = writeln!(out, "displacement eigenmode");
    let _ = writeln!(out, "ASCII");
    let _ = writeln!(out, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(out, "POINTS {} double", mesh.n_vertices());
    for v in &mesh.vertices {
        let _ = writeln!(out, "{} {} 0", v[0], v[1]);
    }
    let _ = writeln!(out, "CELLS {} {}", mesh.n_cells(), 4 * mesh.n_cells());
    for c in &mesh.cells {
        let _ = writeln!(out, "3 {} {} {}", c[0], c[1], c[2]);
    }
    let _ = writeln!(out, "CELL_TYPES {}", mesh.n_cells());
    for _ in 0..mesh.n_cells() {
        let _ = writeln!(out, "5");
    }
    let _ = writeln!(out, "POINT_DATA {}", mesh.n_vertices());
    let _ = writeln!(out, "VECTORS {field_name} double");
    for v in field {
        let _ = writeln!(out, "{} {} 0", v[0], v[1]);
    }
    out
}

/// Writes one eigenmode to `path`.
pub fn write_vtk(mesh: &Mesh, field_name: &str, field: &[[f64; 2]], path: &Path) -> Result<()> {
    if field.len() != mesh.n_vertices() {
        return Err(Error::DimensionMismatch(format!(
            "field has {} entries for {} vertices",
            field.len(),
            mesh.n_vertices()
        )));
    }
    std::fs::write(path, vtk_string(mesh, field_name, field))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, DomainSpec};

    #[test]
    fn vtk_layout_is_wellformed() {
        let mesh = generate_mesh(&DomainSpec::UnitSquare, 1).unwrap();
        let field = vec![[1.0, -2.0]; mesh.n_vertices()];
        let text = vtk_string(&mesh, "u_mode_1", &field);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 3.0");
        assert_eq!(lines[3], "DATASET UNSTRUCTURED_GRID");
        assert!(lines.contains(&"POINTS 4 double"));
        assert!(lines.contains(&"CELLS 2 8"));
        assert!(lines.contains(&"VECTORS u_mode_1 double"));
        assert!(text.ends_with("1 -2 0\n"));
    }

    #[test]
    fn vertex_average_of_constant_field_is_exact() {
        let mesh = generate_mesh(&DomainSpec::UnitSquare, 2).unwrap();
        let asm = Assembler::new(&mesh, 1).unwrap();
        let coeffs = crate::assembly::l2_project(&asm, &|_, _| [0.75, -0.25]);
        let avg = vertex_average_u(&asm, &coeffs);
        for v in avg {
            assert!((v[0] - 0.75).abs() < 1e-12);
            assert!((v[1] + 0.25).abs() < 1e-12);
        }
    }
}
