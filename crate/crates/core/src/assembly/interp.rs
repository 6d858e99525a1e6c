//! Raviart-Thomas interpolation, cellwise L² projection, and pointwise
//! evaluation of discrete fields.

use super::Assembler;
use crate::quadrature::{gauss_legendre, legendre};
use nalgebra::{Cholesky, DMatrix, DVector};

/// Tensor-valued callback: `tau(x, y)[r]` is row `r` of the tensor.
pub type TensorField<'f> = &'f dyn Fn(f64, f64) -> [[f64; 2]; 2];
/// Vector-valued callback.
pub type VectorField<'f> = &'f dyn Fn(f64, f64) -> [f64; 2];

/// Computes the moment-DOF interpolant of a smooth tensor field, returning
/// pseudostress coefficients of length `n_rho`.
///
/// Edge moments integrate the physical normal component against Legendre
/// polynomials in the ascending-vertex edge parameter; interior moments are
/// the covariant pullbacks of the reference moments.
pub fn rt_interpolate(asm: &Assembler, tau: TensorField) -> Vec<f64> {
    let mesh = asm.mesh;
    let k = asm.k;
    let mut coeffs = vec![0.0; asm.dofs.n_rho];
    let (nodes, weights) = gauss_legendre(k + 3);

    for e in 0..mesh.n_edges() {
        let [a, b] = mesh.edges[e];
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let half = [0.5 * (pb[0] - pa[0]), 0.5 * (pb[1] - pa[1])];
        let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        let len = 2.0 * (half[0] * half[0] + half[1] * half[1]).sqrt();
        let normal = mesh.edge_normal(e);
        for (t, w) in nodes.iter().zip(&weights) {
            let x = mid[0] + t * half[0];
            let y = mid[1] + t * half[1];
            let rows = tau(x, y);
            for q in 0..=k {
                let lq = legendre(q, *t);
                for (r, row) in rows.iter().enumerate() {
                    let flux = row[0] * normal[0] + row[1] * normal[1];
                    coeffs[asm.dofs.rho_dof(r, asm.dofs.scalar_edge_dof(e, q))] +=
                        0.5 * len * w * flux * lq;
                }
            }
        }
    }

    if let Some(basis) = &asm.elem.interior_moment_basis {
        let quad = &asm.elem.quad;
        for c in 0..mesh.n_cells() {
            let piola = asm.piola(c).expect("validated mesh");
            let p0 = mesh.vertices[mesh.cells[c][0]];
            for g in 0..quad.len() {
                let (xr, yr) = quad.xy(g);
                let p = piola.push_point(p0, xr, yr);
                let rows = tau(p[0], p[1]);
                let w = quad.weights[g] * piola.det;
                for (j, pj) in basis.functions.iter().enumerate() {
                    let pj_val = pj.eval(xr, yr);
                    for comp in 0..2 {
                        // Covariant weight J^{-T} (p_j e_comp).
                        let wvec = piola.covariant(if comp == 0 {
                            [pj_val, 0.0]
                        } else {
                            [0.0, pj_val]
                        });
                        for (r, row) in rows.iter().enumerate() {
                            let local = 2 * j + comp;
                            coeffs[asm.dofs.rho_dof(r, asm.dofs.scalar_cell_dof(c, local))] +=
                                w * (row[0] * wvec[0] + row[1] * wvec[1]);
                        }
                    }
                }
            }
        }
    }

    coeffs
}

/// Cellwise L²-orthogonal projection of a vector field onto the
/// displacement space, returning coefficients of length `n_u`.
pub fn l2_project(asm: &Assembler, v: VectorField) -> Vec<f64> {
    let mesh = asm.mesh;
    let quad = &asm.elem.quad;
    let d_p = asm.dofs.d_p;
    let mut coeffs = vec![0.0; asm.dofs.n_u];

    // Reference-cell mass of the (scaled) displacement basis.
    let mut ref_mass = DMatrix::zeros(d_p, d_p);
    for j in 0..d_p {
        for jp in 0..d_p {
            ref_mass[(j, jp)] = (0..quad.len())
                .map(|g| {
                    let (x, y) = quad.xy(g);
                    quad.weights[g] * asm.u_functions[j].eval(x, y) * asm.u_functions[jp].eval(x, y)
                })
                .sum();
        }
    }
    let chol = Cholesky::new(ref_mass).expect("reference mass is SPD");

    for c in 0..mesh.n_cells() {
        let piola = asm.piola(c).expect("validated mesh");
        let p0 = mesh.vertices[mesh.cells[c][0]];
        let mut rhs = [DVector::zeros(d_p), DVector::zeros(d_p)];
        for g in 0..quad.len() {
            let (xr, yr) = quad.xy(g);
            let p = piola.push_point(p0, xr, yr);
            let val = v(p[0], p[1]);
            for j in 0..d_p {
                let uj = asm.u_functions[j].eval(xr, yr);
                rhs[0][j] += quad.weights[g] * val[0] * uj;
                rhs[1][j] += quad.weights[g] * val[1] * uj;
            }
        }
        // det J cancels between the cell mass and the cell right-hand side.
        for comp in 0..2 {
            let sol = chol.solve(&rhs[comp]);
            for j in 0..d_p {
                coeffs[asm.dofs.u_dof(comp, c, j)] = sol[j];
            }
        }
    }

    coeffs
}

/// Evaluates the pseudostress field at a reference point of a cell;
/// returns the tensor rows.
pub fn eval_rho_at(asm: &Assembler, coeffs: &[f64], cell: usize, xr: f64, yr: f64) -> [[f64; 2]; 2] {
    let piola = asm.piola(cell).expect("validated mesh");
    let dofs = asm.cell_dofs(cell);
    let vals = asm.elem.eval_values(xr, yr);
    let mut rows = [[0.0; 2]; 2];
    for (m, v) in vals.iter().enumerate() {
        let phys = piola.vector(*v);
        for r in 0..2 {
            let coeff = coeffs[asm.dofs.rho_dof(r, dofs.scalars[m])] * dofs.signs[m];
            rows[r][0] += coeff * phys[0];
            rows[r][1] += coeff * phys[1];
        }
    }
    rows
}

/// Row-wise divergence of the pseudostress field at a reference point.
pub fn eval_rho_div_at(asm: &Assembler, coeffs: &[f64], cell: usize, xr: f64, yr: f64) -> [f64; 2] {
    let piola = asm.piola(cell).expect("validated mesh");
    let dofs = asm.cell_dofs(cell);
    let divs = asm.elem.eval_divs(xr, yr);
    let mut out = [0.0; 2];
    for (m, d) in divs.iter().enumerate() {
        let phys = piola.divergence(*d);
        for r in 0..2 {
            out[r] += coeffs[asm.dofs.rho_dof(r, dofs.scalars[m])] * dofs.signs[m] * phys;
        }
    }
    out
}

/// Evaluates the displacement field at a reference point of a cell.
pub fn eval_u_at(asm: &Assembler, coeffs: &[f64], cell: usize, xr: f64, yr: f64) -> [f64; 2] {
    let mut out = [0.0; 2];
    for j in 0..asm.dofs.d_p {
        let uj = asm.u_functions[j].eval(xr, yr);
        for comp in 0..2 {
            out[comp] += coeffs[asm.dofs.u_dof(comp, cell, j)] * uj;
        }
    }
    out
}
