//! Dense brute-force reference implementations for the test suite.
//!
//! This path shares only mesh connectivity and DOF numbering with the
//! production assembly: basis functions are rebuilt per cell from a scaled
//! physical monomial spanning set by inverting the cell's DOF matrix (no
//! reference tables, no Piola transform), scalar bases are re-orthonormalized
//! by classical Gram-Schmidt, and integration uses collapsed-coordinate
//! Gauss rules instead of the symmetric triangle rules. Eigenvalues come
//! from a dense solve of the full bordered pencil. Agreement with the
//! sparse path is asserted by the tests, never assumed.

use crate::assembly::{DofMap, MaterialParams};
use crate::elements::poly::{monomials_of_degree, monomials_upto, Poly2};
use crate::elements::pk_dim;
use crate::mesh::Mesh;
use crate::quadrature::{gauss_legendre, gauss_legendre_unit, legendre};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Size cap for dense assembly (ρ plus u DOFs).
pub const DENSE_ASSEMBLE_CAP: usize = 2000;
/// Size cap for the dense eigensolve.
pub const DENSE_EIG_CAP: usize = 600;

/// Densely assembled blocks in the same DOF ordering as the sparse path.
#[derive(Debug, Clone)]
pub struct DenseSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub m: DMatrix<f64>,
    pub c: DVector<f64>,
    pub n_rho: usize,
    pub n_u: usize,
}

/// Collapsed-coordinate Gauss rule on the reference triangle, exact to
/// `degree`; deliberately not the symmetric rule of the main path.
fn duffy_rule(degree: usize) -> (Vec<[f64; 2]>, Vec<f64>) {
    let (xu, wu) = gauss_legendre_unit(degree / 2 + 1);
    let (xv, wv) = gauss_legendre_unit(degree / 2 + 2);
    let mut pts = Vec::with_capacity(xu.len() * xv.len());
    let mut wts = Vec::with_capacity(pts.capacity());
    for (&u, &a) in xu.iter().zip(&wu) {
        for (&v, &b) in xv.iter().zip(&wv) {
            pts.push([u * (1.0 - v), v]);
            wts.push(a * b * (1.0 - v));
        }
    }
    (pts, wts)
}

/// Classical Gram-Schmidt orthonormalization of the monomial basis of P_k
/// on the reference triangle, using the collapsed rule for inner products.
fn gram_schmidt_basis(k: usize, degree: usize) -> Vec<Poly2> {
    let (pts, wts) = duffy_rule(degree.max(2 * k));
    let dot = |p: &Poly2, q: &Poly2| -> f64 {
        pts.iter()
            .zip(&wts)
            .map(|(x, w)| w * p.eval(x[0], x[1]) * q.eval(x[0], x[1]))
            .sum()
    };
    let mut basis: Vec<Poly2> = Vec::new();
    for &(px, py) in &monomials_upto(k) {
        let mut p = Poly2::monomial(px, py);
        for _ in 0..2 {
            let snapshot: Vec<(Poly2, f64)> =
                basis.iter().map(|q| (q.clone(), dot(&p, q))).collect();
            for (q, c) in snapshot {
                p.add_assign_scaled(&q.scaled(-1.0), c);
                p.compress();
            }
        }
        let norm = dot(&p, &p).sqrt();
        basis.push(p.scaled(1.0 / norm));
    }
    basis
}

/// One cell's worth of oracle data: local basis evaluations at the
/// integration points.
struct CellBasis {
    /// values[i][g] — physical value of the local basis dual to global DOF
    /// slot `i` (reference DOF order, signs baked in).
    values: Vec<Vec<[f64; 2]>>,
    divs: Vec<Vec<f64>>,
    /// Physical quadrature points and weights.
    weights: Vec<f64>,
    /// Reference coordinates of those points (for the displacement basis).
    ref_pts: Vec<[f64; 2]>,
}

fn cell_geometry(mesh: &Mesh, c: usize) -> ([f64; 2], [[f64; 2]; 2], f64, [f64; 2], f64) {
    let [p0, p1, p2] = mesh.cell_coords(c);
    let jac = [
        [p1[0] - p0[0], p2[0] - p0[0]],
        [p1[1] - p0[1], p2[1] - p0[1]],
    ];
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    let centroid = [
        (p0[0] + p1[0] + p2[0]) / 3.0,
        (p0[1] + p1[1] + p2[1]) / 3.0,
    ];
    let scale = det.abs().sqrt();
    (p0, jac, det, centroid, scale)
}

/// Builds the local dual basis of the *global* DOF functionals by solving
/// the per-cell DOF matrix, then tabulates it.
fn build_cell_basis(
    mesh: &Mesh,
    c: usize,
    k: usize,
    interior_weights: &[Poly2],
) -> Result<CellBasis> {
    let (p0, jac, det, centroid, scale) = cell_geometry(mesh, c);
    let d = (k + 1) * (k + 3);

    // Spanning set in centered, scaled coordinates ξ = (x − cx)/s.
    let mut span: Vec<(Poly2, Poly2)> = Vec::with_capacity(d);
    for &(px, py) in &monomials_upto(k) {
        span.push((Poly2::monomial(px, py), Poly2::zero()));
        span.push((Poly2::zero(), Poly2::monomial(px, py)));
    }
    for &(px, py) in &monomials_of_degree(k) {
        span.push((Poly2::monomial(px + 1, py), Poly2::monomial(px, py + 1)));
    }
    let to_local = |x: f64, y: f64| ((x - centroid[0]) / scale, (y - centroid[1]) / scale);
    let eval_span = |j: usize, x: f64, y: f64| -> [f64; 2] {
        let (xi, eta) = to_local(x, y);
        [span[j].0.eval(xi, eta), span[j].1.eval(xi, eta)]
    };
    let div_span: Vec<Poly2> = span
        .iter()
        .map(|(sx, sy)| {
            let mut dsum = sx.dx();
            dsum.add_assign_scaled(&sy.dy(), 1.0);
            dsum.compress();
            dsum
        })
        .collect();
    let eval_div = |j: usize, x: f64, y: f64| -> f64 {
        let (xi, eta) = to_local(x, y);
        div_span[j].eval(xi, eta) / scale
    };

    // Inverse affine map; row `comp` of J^{-1} is the covariant image
    // J^{-T} e_comp used by the interior moment weights.
    let inv = [
        [jac[1][1] / det, -jac[0][1] / det],
        [-jac[1][0] / det, jac[0][0] / det],
    ];

    // DOF matrix: rows are global functionals, columns span functions.
    let (edge_nodes, edge_wts) = gauss_legendre(k + 4);
    let mut dmat = DMatrix::zeros(d, d);
    for l in 0..3 {
        let e = mesh.cell_edges[c][l].edge;
        let [va, vb] = mesh.edges[e];
        let (pa, pb) = (mesh.vertices[va], mesh.vertices[vb]);
        let len = mesh.edge_length(e);
        let normal = mesh.edge_normal(e);
        for q in 0..=k {
            let row = l * (k + 1) + q;
            for j in 0..d {
                let mut acc = 0.0;
                for (t, w) in edge_nodes.iter().zip(&edge_wts) {
                    let x = 0.5 * (pa[0] + pb[0]) + 0.5 * t * (pb[0] - pa[0]);
                    let y = 0.5 * (pa[1] + pb[1]) + 0.5 * t * (pb[1] - pa[1]);
                    let v = eval_span(j, x, y);
                    acc += w * (v[0] * normal[0] + v[1] * normal[1]) * legendre(q, *t);
                }
                dmat[(row, j)] = 0.5 * len * acc;
            }
        }
    }
    let (ref_pts, ref_wts) = duffy_rule(2 * (k + 2));
    if k >= 1 {
        for (rp, rw) in ref_pts.iter().zip(&ref_wts) {
            let x = p0[0] + jac[0][0] * rp[0] + jac[0][1] * rp[1];
            let y = p0[1] + jac[1][0] * rp[0] + jac[1][1] * rp[1];
            for (jj, pw) in interior_weights.iter().enumerate() {
                let pval = pw.eval(rp[0], rp[1]);
                for comp in 0..2 {
                    let row = 3 * (k + 1) + 2 * jj + comp;
                    let wvec = [inv[comp][0] * pval, inv[comp][1] * pval];
                    for j in 0..d {
                        let v = eval_span(j, x, y);
                        dmat[(row, j)] += rw * det * (v[0] * wvec[0] + v[1] * wvec[1]);
                    }
                }
            }
        }
    }

    let dinv = dmat
        .try_inverse()
        .ok_or_else(|| Error::FactorizationFailed(format!("oracle DOF matrix singular on cell {c}")))?;

    // Tabulate the dual basis at the physical integration points.
    let mut values = vec![vec![[0.0; 2]; ref_pts.len()]; d];
    let mut divs = vec![vec![0.0; ref_pts.len()]; d];
    let mut weights = Vec::with_capacity(ref_pts.len());
    for (g, (rp, rw)) in ref_pts.iter().zip(&ref_wts).enumerate() {
        let x = p0[0] + jac[0][0] * rp[0] + jac[0][1] * rp[1];
        let y = p0[1] + jac[1][0] * rp[0] + jac[1][1] * rp[1];
        weights.push(rw * det);
        for i in 0..d {
            let mut val = [0.0; 2];
            let mut dv = 0.0;
            for j in 0..d {
                let coeff = dinv[(j, i)];
                if coeff == 0.0 {
                    continue;
                }
                let s = eval_span(j, x, y);
                val[0] += coeff * s[0];
                val[1] += coeff * s[1];
                dv += coeff * eval_div(j, x, y);
            }
            values[i][g] = val;
            divs[i][g] = dv;
        }
    }

    Ok(CellBasis { values, divs, weights, ref_pts })
}

/// Assembles all blocks densely through the independent code path.
pub fn dense_assemble(mesh: &Mesh, k: usize, material: &MaterialParams) -> Result<DenseSystem> {
    let dofs = DofMap::new(mesh, k);
    let total = dofs.n_rho + dofs.n_u;
    if total > DENSE_ASSEMBLE_CAP {
        return Err(Error::OracleSizeExceeded { dofs: total, cap: DENSE_ASSEMBLE_CAP });
    }

    // Re-derived scalar bases: interior moment weights (P_{k-1}) and the
    // displacement basis (P_k scaled so constants are 1).
    let interior_weights = if k >= 1 { gram_schmidt_basis(k - 1, 2 * (k + 2)) } else { Vec::new() };
    let u_basis: Vec<Poly2> = gram_schmidt_basis(k, 2 * (k + 2))
        .into_iter()
        .map(|p| p.scaled(std::f64::consts::FRAC_1_SQRT_2))
        .collect();
    debug_assert_eq!(u_basis.len(), pk_dim(k));

    let mut a = DMatrix::zeros(dofs.n_rho, dofs.n_rho);
    let mut b = DMatrix::zeros(dofs.n_u, dofs.n_rho);
    let mut m = DMatrix::zeros(dofs.n_u, dofs.n_u);
    let mut cvec = DVector::zeros(dofs.n_rho);

    let inv_mu = 1.0 / material.mu;
    let trace_orig = if material.is_limit() { 0.0 } else { material.trace_coeff_original()? };

    for c in 0..mesh.n_cells() {
        let local = build_cell_basis(mesh, c, k, &interior_weights)?;
        let d = local.values.len();
        // Global scalar DOFs in reference order (signs are baked into the
        // local basis, so no sign factors appear here).
        let mut globals = Vec::with_capacity(d);
        for l in 0..3 {
            let e = mesh.cell_edges[c][l].edge;
            for q in 0..=k {
                globals.push(dofs.scalar_edge_dof(e, q));
            }
        }
        for j in 0..k * (k + 1) {
            globals.push(dofs.scalar_cell_dof(c, j));
        }

        for mi in 0..d {
            for mj in 0..d {
                let (mut sxx, mut sxy, mut syx, mut syy) = (0.0, 0.0, 0.0, 0.0);
                for g in 0..local.weights.len() {
                    let w = local.weights[g];
                    let u = local.values[mi][g];
                    let v = local.values[mj][g];
                    sxx += w * u[0] * v[0];
                    sxy += w * u[0] * v[1];
                    syx += w * u[1] * v[0];
                    syy += w * u[1] * v[1];
                }
                let dot = sxx + syy;
                for r in 0..2 {
                    for rp in 0..2 {
                        let tr = [[sxx, sxy], [syx, syy]][r][rp];
                        let v = if material.is_limit() {
                            // Pointwise deviator pairing: Φᵈ:Ψᵈ = Φ:Ψ − ½ trΦ trΨ.
                            inv_mu * ((if r == rp { dot } else { 0.0 }) - 0.5 * tr)
                        } else {
                            inv_mu * (if r == rp { dot } else { 0.0 }) - trace_orig * tr
                        };
                        a[(dofs.rho_dof(r, globals[mi]), dofs.rho_dof(rp, globals[mj]))] += v;
                    }
                }
            }
        }

        for jj in 0..dofs.d_p {
            for mi in 0..d {
                let mut acc = 0.0;
                for g in 0..local.weights.len() {
                    let rp = local.ref_pts[g];
                    acc += local.weights[g] * u_basis[jj].eval(rp[0], rp[1]) * local.divs[mi][g];
                }
                for comp in 0..2 {
                    b[(dofs.u_dof(comp, c, jj), dofs.rho_dof(comp, globals[mi]))] += acc;
                }
            }
            for jp in 0..dofs.d_p {
                let mut acc = 0.0;
                for g in 0..local.weights.len() {
                    let rp = local.ref_pts[g];
                    acc += local.weights[g]
                        * u_basis[jj].eval(rp[0], rp[1])
                        * u_basis[jp].eval(rp[0], rp[1]);
                }
                for comp in 0..2 {
                    m[(dofs.u_dof(comp, c, jj), dofs.u_dof(comp, c, jp))] += acc;
                }
            }
        }

        for mi in 0..d {
            let mut acc = [0.0; 2];
            for g in 0..local.weights.len() {
                acc[0] += local.weights[g] * local.values[mi][g][0];
                acc[1] += local.weights[g] * local.values[mi][g][1];
            }
            cvec[dofs.rho_dof(0, globals[mi])] += acc[0];
            cvec[dofs.rho_dof(1, globals[mi])] += acc[1];
        }
    }

    Ok(DenseSystem { a, b, m, c: cvec, n_rho: dofs.n_rho, n_u: dofs.n_u })
}

/// Dense generalized eigensolve of the full bordered pencil: all finite,
/// real, positive eigenvalues in ascending order.
pub fn dense_eig(sys: &DenseSystem) -> Result<Vec<f64>> {
    let total = sys.n_rho + sys.n_u;
    if total > DENSE_EIG_CAP {
        return Err(Error::OracleSizeExceeded { dofs: total, cap: DENSE_EIG_CAP });
    }
    let n = total + 1;
    let mut k_mat = DMatrix::zeros(n, n);
    k_mat.view_mut((0, 0), (sys.n_rho, sys.n_rho)).copy_from(&sys.a);
    k_mat
        .view_mut((sys.n_rho, 0), (sys.n_u, sys.n_rho))
        .copy_from(&sys.b);
    k_mat
        .view_mut((0, sys.n_rho), (sys.n_rho, sys.n_u))
        .copy_from(&sys.b.transpose());
    for i in 0..sys.n_rho {
        k_mat[(i, n - 1)] = sys.c[i];
        k_mat[(n - 1, i)] = sys.c[i];
    }
    let mut m_hat = DMatrix::zeros(n, n);
    m_hat
        .view_mut((sys.n_rho, sys.n_rho), (sys.n_u, sys.n_u))
        .copy_from(&(-&sys.m));

    // Finite pencil eigenvalues are the reciprocals of nonzero eigenvalues
    // of K⁻¹ M̂.
    let lu = k_mat.lu();
    let t = lu
        .solve(&m_hat)
        .ok_or_else(|| Error::FactorizationFailed("oracle pencil is singular".into()))?;
    let eigs = t.complex_eigenvalues();

    let scale = eigs.iter().map(|z| z.norm()).fold(0.0_f64, f64::max).max(1e-300);
    let mut kappas = Vec::new();
    for z in eigs.iter() {
        if z.norm() <= 1e-10 * scale {
            continue; // infinite pencil eigenvalue
        }
        if z.im.abs() > 1e-10 * scale {
            return Err(Error::FactorizationFailed(format!(
                "oracle spectrum not real: {z}"
            )));
        }
        let kappa = 1.0 / z.re;
        if kappa > 0.0 {
            kappas.push(kappa);
        }
    }
    kappas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(kappas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::build_lame;
    use crate::mesh::{generate_mesh, DomainSpec};

    #[test]
    fn size_caps_enforced() {
        let mesh = generate_mesh(&DomainSpec::UnitSquare, 16).unwrap();
        let material = build_lame(1.0, 0.35).unwrap();
        assert!(matches!(
            dense_assemble(&mesh, 1, &material),
            Err(Error::OracleSizeExceeded { .. })
        ));
    }

    #[test]
    fn gram_schmidt_is_orthonormal() {
        let basis = gram_schmidt_basis(2, 6);
        let (pts, wts) = duffy_rule(6);
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                let dot: f64 = pts
                    .iter()
                    .zip(&wts)
                    .map(|(p, w)| w * basis[i].eval(p[0], p[1]) * basis[j].eval(p[0], p[1]))
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-12);
            }
        }
    }
}
