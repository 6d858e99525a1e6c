//! Reference-element machinery: Raviart-Thomas and polynomial bases on the
//! reference triangle, moment degrees of freedom, and the Piola transform.
//!
//! The reference triangle has vertices (0,0), (1,0), (0,1). Local edge `l`
//! runs from vertex `(l+1) % 3` to vertex `(l+2) % 3`, which traverses the
//! boundary counterclockwise, so the outward normal is the edge direction
//! rotated by −90°.
//!
//! Degrees of freedom of `RT_k` are ordered edge-first:
//!
//! * `l * (k+1) + q` — moment of the normal component on edge `l` against
//!   the Legendre polynomial of degree `q` in the edge parameter;
//! * `3 * (k+1) + 2 * j + comp` — interior moment of component `comp`
//!   against the `j`-th orthonormal polynomial of degree <= k−1.
//!
//! The dual basis is obtained by inverting the generalized Vandermonde
//! matrix of these functionals applied to a monomial spanning set of
//! `RT_k = (P_k)² ⊕ P̃_k · x`.

pub mod poly;

use crate::quadrature::{self, gauss_legendre, legendre, triangle_rule, QuadratureRule};
use crate::{Error, Result};
use nalgebra::DMatrix;
use poly::{monomials_of_degree, monomials_upto, Poly2, VecPoly2};

/// Highest supported polynomial order.
pub const MAX_ORDER: usize = 2;

/// Reference triangle vertices.
pub const REF_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Local edge `l` connects these local vertices (counterclockwise).
pub const REF_EDGE_VERTICES: [[usize; 2]; 3] = [[1, 2], [2, 0], [0, 1]];

/// Quadrature degree used for all assembly integrals at order `k`: one
/// order above the minimum needed for exactness on affine cells.
pub fn assembly_quadrature_degree(k: usize) -> usize {
    2 * (k + 1) + 2
}

/// Dimension of scalar P_k on the triangle.
pub fn pk_dim(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Dimension of RT_k on the triangle.
pub fn rt_dim(k: usize) -> usize {
    (k + 1) * (k + 3)
}

fn check_order(k: usize) -> Result<()> {
    if k > MAX_ORDER {
        return Err(Error::InvalidInput(format!(
            "unsupported polynomial order k = {k}; supported k <= {MAX_ORDER}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Orthonormal scalar bases
// ---------------------------------------------------------------------------

/// An L²-orthonormal basis of P_k on the reference triangle.
#[derive(Debug, Clone)]
pub struct PkBasis {
    pub k: usize,
    pub dim: usize,
    pub functions: Vec<Poly2>,
}

impl PkBasis {
    pub fn eval_all(&self, x: f64, y: f64) -> Vec<f64> {
        self.functions.iter().map(|p| p.eval(x, y)).collect()
    }
}

/// Builds the orthonormal P_k basis by Cholesky factorization of the exact
/// monomial Gram matrix. The result is the unique orthonormal basis with
/// positive leading coefficients, so it is reproducible bit-for-bit.
pub fn reference_pk_basis(k: usize) -> Result<PkBasis> {
    check_order(k)?;
    let monos = monomials_upto(k);
    let dim = monos.len();
    let gram = DMatrix::from_fn(dim, dim, |i, j| {
        quadrature::exact_monomial_integral(
            (monos[i].0 + monos[j].0) as usize,
            (monos[i].1 + monos[j].1) as usize,
        )
    });
    let chol = nalgebra::Cholesky::new(gram)
        .ok_or_else(|| Error::InvalidInput("monomial Gram matrix not SPD".into()))?;
    // Rows of L^{-1} hold the orthonormal coefficients.
    let linv = chol
        .l()
        .solve_lower_triangular(&DMatrix::identity(dim, dim))
        .expect("triangular solve with positive diagonal");
    let mut functions = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut p = Poly2::zero();
        for (j, &(px, py)) in monos.iter().enumerate() {
            let c = linv[(i, j)];
            if c != 0.0 {
                p.add_assign_scaled(&Poly2 { terms: vec![poly::Term { coeff: c, px, py }] }, 1.0);
            }
        }
        p.compress();
        functions.push(p);
    }
    Ok(PkBasis { k, dim, functions })
}

// ---------------------------------------------------------------------------
// RT_k moment DOFs and the dual basis
// ---------------------------------------------------------------------------

/// The moment DOF functionals of RT_k on the reference triangle, realized
/// through quadrature that is exact for the fields they are applied to here.
#[derive(Debug, Clone)]
pub struct DofSet {
    pub k: usize,
    edge_nodes: Vec<f64>,
    edge_weights: Vec<f64>,
    interior_basis: Option<PkBasis>,
    tri_quad: QuadratureRule,
}

impl DofSet {
    pub fn new(k: usize) -> Result<Self> {
        check_order(k)?;
        let (edge_nodes, edge_weights) = gauss_legendre(k + 3);
        let interior_basis = if k >= 1 { Some(reference_pk_basis(k - 1)?) } else { None };
        let tri_quad = triangle_rule(assembly_quadrature_degree(k))?;
        Ok(DofSet { k, edge_nodes, edge_weights, interior_basis, tri_quad })
    }

    pub fn count(&self) -> usize {
        rt_dim(self.k)
    }

    /// Applies every DOF functional to a vector field on the reference cell.
    pub fn apply(&self, f: &mut dyn FnMut(f64, f64) -> [f64; 2]) -> Vec<f64> {
        let k = self.k;
        let mut out = Vec::with_capacity(self.count());
        for l in 0..3 {
            let [a, b] = REF_EDGE_VERTICES[l];
            let (pa, pb) = (REF_VERTICES[a], REF_VERTICES[b]);
            let tangent = [pb[0] - pa[0], pb[1] - pa[1]];
            let len = (tangent[0] * tangent[0] + tangent[1] * tangent[1]).sqrt();
            let normal = [tangent[1] / len, -tangent[0] / len];
            for q in 0..=k {
                let mut moment = 0.0;
                for (t, w) in self.edge_nodes.iter().zip(&self.edge_weights) {
                    let x = 0.5 * (pa[0] + pb[0]) + 0.5 * t * tangent[0];
                    let y = 0.5 * (pa[1] + pb[1]) + 0.5 * t * tangent[1];
                    let v = f(x, y);
                    moment += w * (v[0] * normal[0] + v[1] * normal[1]) * legendre(q, *t);
                }
                out.push(moment * 0.5 * len);
            }
        }
        if let Some(basis) = &self.interior_basis {
            let start = out.len();
            out.resize(start + 2 * basis.dim, 0.0);
            for (g, (&[_, bx, by], &w)) in
                self.tri_quad.points.iter().zip(&self.tri_quad.weights).enumerate()
            {
                let _ = g;
                let v = f(bx, by);
                for (j, p) in basis.functions.iter().enumerate() {
                    let pj = p.eval(bx, by);
                    out[start + 2 * j] += w * v[0] * pj;
                    out[start + 2 * j + 1] += w * v[1] * pj;
                }
            }
        }
        out
    }
}

/// The RT_k reference element: dual basis, divergences, and tables at the
/// assembly quadrature points.
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub k: usize,
    pub dim: usize,
    /// Dual basis functions, exact symbolic form.
    pub functions: Vec<VecPoly2>,
    /// Their (symbolic) divergences; each lies in P_k.
    pub divergences: Vec<Poly2>,
    /// Condition number of the moment Vandermonde matrix.
    pub vandermonde_cond: f64,
    /// Assembly quadrature rule of degree `2(k+1)+2`.
    pub quad: QuadratureRule,
    /// `values[i][g]` — basis `i` at quadrature point `g`.
    pub values: Vec<Vec<[f64; 2]>>,
    /// `divs[i][g]` — divergence of basis `i` at quadrature point `g`.
    pub divs: Vec<Vec<f64>>,
    /// `∫ φ̂_i` over the reference triangle.
    pub integrals: Vec<[f64; 2]>,
    /// Orthonormal P_{k−1} basis defining the interior moments (k >= 1).
    pub interior_moment_basis: Option<PkBasis>,
}

impl ReferenceElement {
    pub fn n_edge_dofs(&self) -> usize {
        3 * (self.k + 1)
    }

    pub fn n_interior_dofs(&self) -> usize {
        self.k * (self.k + 1)
    }

    /// Evaluates all basis functions at a reference point.
    pub fn eval_values(&self, x: f64, y: f64) -> Vec<[f64; 2]> {
        self.functions.iter().map(|f| f.eval(x, y)).collect()
    }

    pub fn eval_divs(&self, x: f64, y: f64) -> Vec<f64> {
        self.divergences.iter().map(|d| d.eval(x, y)).collect()
    }
}

/// Maximum acceptable condition number of the moment Vandermonde matrix.
const VANDERMONDE_COND_LIMIT: f64 = 1e8;

/// Constructs the RT_k dual basis by inverting the moment Vandermonde
/// matrix over the monomial spanning set.
pub fn reference_rt_basis(k: usize) -> Result<ReferenceElement> {
    check_order(k)?;
    let span = rt_spanning_set(k);
    let dim = span.len();
    debug_assert_eq!(dim, rt_dim(k));

    let dofs = DofSet::new(k)?;
    let mut vandermonde = DMatrix::zeros(dim, dim);
    for (j, s) in span.iter().enumerate() {
        let col = dofs.apply(&mut |x, y| s.eval(x, y));
        for (i, v) in col.iter().enumerate() {
            vandermonde[(i, j)] = *v;
        }
    }

    let sv = vandermonde.clone().svd(false, false).singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !cond.is_finite() || cond > VANDERMONDE_COND_LIMIT {
        return Err(Error::SingularVandermonde { order: k, cond });
    }

    let inv = vandermonde
        .try_inverse()
        .ok_or(Error::SingularVandermonde { order: k, cond })?;

    let mut functions = Vec::with_capacity(dim);
    let mut divergences = Vec::with_capacity(dim);
    for m in 0..dim {
        let mut f = VecPoly2::zero();
        for (j, s) in span.iter().enumerate() {
            let c = inv[(j, m)];
            if c != 0.0 {
                f.add_assign_scaled(s, c);
            }
        }
        f.compress();
        divergences.push(f.divergence());
        functions.push(f);
    }

    let quad = triangle_rule(assembly_quadrature_degree(k))?;
    let mut values = Vec::with_capacity(dim);
    let mut divs = Vec::with_capacity(dim);
    let mut integrals = Vec::with_capacity(dim);
    for m in 0..dim {
        let mut vals = Vec::with_capacity(quad.len());
        let mut dvals = Vec::with_capacity(quad.len());
        let mut integral = [0.0; 2];
        for g in 0..quad.len() {
            let (x, y) = quad.xy(g);
            let v = functions[m].eval(x, y);
            vals.push(v);
            dvals.push(divergences[m].eval(x, y));
            integral[0] += quad.weights[g] * v[0];
            integral[1] += quad.weights[g] * v[1];
        }
        values.push(vals);
        divs.push(dvals);
        integrals.push(integral);
    }

    Ok(ReferenceElement {
        k,
        dim,
        functions,
        divergences,
        vandermonde_cond: cond,
        quad,
        values,
        divs,
        integrals,
        interior_moment_basis: if k >= 1 { Some(reference_pk_basis(k - 1)?) } else { None },
    })
}

/// Monomial spanning set of RT_k: (m, 0) and (0, m) for deg(m) <= k, then
/// x * m̃ for deg(m̃) = k.
fn rt_spanning_set(k: usize) -> Vec<VecPoly2> {
    let mut span = Vec::with_capacity(rt_dim(k));
    for &(px, py) in &monomials_upto(k) {
        span.push(VecPoly2 { x: Poly2::monomial(px, py), y: Poly2::zero() });
        span.push(VecPoly2 { x: Poly2::zero(), y: Poly2::monomial(px, py) });
    }
    for &(px, py) in &monomials_of_degree(k) {
        span.push(VecPoly2 {
            x: Poly2::monomial(px + 1, py),
            y: Poly2::monomial(px, py + 1),
        });
    }
    span
}

// ---------------------------------------------------------------------------
// Piola transform
// ---------------------------------------------------------------------------

/// Contravariant Piola data of an affine cell map `F(x̂) = p0 + J x̂`.
#[derive(Debug, Clone, Copy)]
pub struct Piola {
    pub jac: [[f64; 2]; 2],
    pub det: f64,
    inv_t: [[f64; 2]; 2],
}

impl Piola {
    /// Builds the transform, rejecting degenerate cells
    /// (|det J| < 1e−14 · h² with h the longest Jacobian column).
    pub fn new(jac: [[f64; 2]; 2]) -> Result<Self> {
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let h2 = (jac[0][0] * jac[0][0] + jac[1][0] * jac[1][0])
            .max(jac[0][1] * jac[0][1] + jac[1][1] * jac[1][1]);
        if det.abs() < 1e-14 * h2 || h2 == 0.0 {
            return Err(Error::DegenerateCell(usize::MAX));
        }
        let inv_t = [
            [jac[1][1] / det, -jac[1][0] / det],
            [-jac[0][1] / det, jac[0][0] / det],
        ];
        Ok(Piola { jac, det, inv_t })
    }

    /// Contravariant map of a vector value: `(1/det J) J v̂`.
    pub fn vector(&self, v: [f64; 2]) -> [f64; 2] {
        [
            (self.jac[0][0] * v[0] + self.jac[0][1] * v[1]) / self.det,
            (self.jac[1][0] * v[0] + self.jac[1][1] * v[1]) / self.det,
        ]
    }

    /// Divergence transforms with the inverse Jacobian determinant.
    pub fn divergence(&self, d: f64) -> f64 {
        d / self.det
    }

    /// Covariant map `J^{-T} v̂`; interior moment weights transform this way.
    pub fn covariant(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.inv_t[0][0] * v[0] + self.inv_t[0][1] * v[1],
            self.inv_t[1][0] * v[0] + self.inv_t[1][1] * v[1],
        ]
    }

    /// Physical coordinates of a reference point.
    pub fn push_point(&self, p0: [f64; 2], x: f64, y: f64) -> [f64; 2] {
        [
            p0[0] + self.jac[0][0] * x + self.jac[0][1] * y,
            p0[1] + self.jac[1][0] * x + self.jac[1][1] * y,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rt_dimensions() {
        assert_eq!(reference_rt_basis(0).unwrap().dim, 3);
        assert_eq!(reference_rt_basis(1).unwrap().dim, 8);
        assert_eq!(reference_rt_basis(2).unwrap().dim, 15);
        assert!(reference_rt_basis(3).is_err());
    }

    #[test]
    fn pk_dimensions_and_orthonormality() {
        for k in 0..=MAX_ORDER {
            let basis = reference_pk_basis(k).unwrap();
            assert_eq!(basis.dim, pk_dim(k));
            let quad = triangle_rule(2 * k.max(1)).unwrap();
            for i in 0..basis.dim {
                for j in 0..basis.dim {
                    let dot = quad.integrate(|x, y| {
                        basis.functions[i].eval(x, y) * basis.functions[j].eval(x, y)
                    });
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-12, "k={k} ({i},{j}): {dot}");
                }
            }
        }
    }

    #[test]
    fn p0_basis_is_sqrt_two() {
        let basis = reference_pk_basis(0).unwrap();
        assert_eq!(basis.dim, 1);
        assert!((basis.functions[0].eval(0.2, 0.3) - 2.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn dof_basis_duality() {
        for k in 0..=MAX_ORDER {
            let elem = reference_rt_basis(k).unwrap();
            let dofs = DofSet::new(k).unwrap();
            for (m, f) in elem.functions.iter().enumerate() {
                let applied = dofs.apply(&mut |x, y| f.eval(x, y));
                for (i, v) in applied.iter().enumerate() {
                    let expect = if i == m { 1.0 } else { 0.0 };
                    assert!(
                        (v - expect).abs() < 1e-12,
                        "k={k}: dof {i} on basis {m}: {v}"
                    );
                }
            }
        }
    }

    #[test]
    fn divergence_lies_in_pk() {
        // Project div(φ) onto the orthonormal P_k basis and compare pointwise.
        for k in 0..=MAX_ORDER {
            let elem = reference_rt_basis(k).unwrap();
            let pk = reference_pk_basis(k).unwrap();
            let quad = triangle_rule(2 * (k + 1) + 2).unwrap();
            for d in &elem.divergences {
                let coeffs: Vec<f64> = pk
                    .functions
                    .iter()
                    .map(|p| quad.integrate(|x, y| d.eval(x, y) * p.eval(x, y)))
                    .collect();
                for g in 0..quad.len() {
                    let (x, y) = quad.xy(g);
                    let projected: f64 = pk
                        .functions
                        .iter()
                        .zip(&coeffs)
                        .map(|(p, c)| c * p.eval(x, y))
                        .sum();
                    assert!((projected - d.eval(x, y)).abs() < 1e-12, "k={k}");
                }
            }
        }
    }

    #[test]
    fn rt0_characterization() {
        // Lowest order: constant divergence, unit flux on exactly one edge.
        let elem = reference_rt_basis(0).unwrap();
        for (m, d) in elem.divergences.iter().enumerate() {
            let v0 = d.eval(0.1, 0.1);
            let v1 = d.eval(0.5, 0.3);
            assert!((v0 - v1).abs() < 1e-13, "basis {m} divergence not constant");
        }
        let dofs = DofSet::new(0).unwrap();
        for (m, f) in elem.functions.iter().enumerate() {
            let fluxes = dofs.apply(&mut |x, y| f.eval(x, y));
            let unit: Vec<usize> =
                (0..3).filter(|&l| (fluxes[l] - 1.0).abs() < 1e-12).collect();
            assert_eq!(unit, vec![m]);
        }
    }

    #[test]
    fn vandermonde_is_well_conditioned() {
        for k in 0..=MAX_ORDER {
            let elem = reference_rt_basis(k).unwrap();
            assert!(elem.vandermonde_cond < 1e4, "k={k}: {}", elem.vandermonde_cond);
        }
    }

    #[test]
    fn piola_identity_map_is_identity() {
        let p = Piola::new([[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let v = [0.3, -0.7];
        assert_eq!(p.vector(v), v);
        assert_eq!(p.divergence(2.5), 2.5);
    }

    #[test]
    fn piola_uniform_scaling() {
        // F = 2 I: values pick up 2/det = 1/2, divergences 1/det = 1/4.
        let p = Piola::new([[2.0, 0.0], [0.0, 2.0]]).unwrap();
        let elem = reference_rt_basis(0).unwrap();
        let v = elem.functions[0].eval(0.25, 0.25);
        let d = elem.divergences[0].eval(0.25, 0.25);
        let vp = p.vector(v);
        assert!((vp[0] - 0.5 * v[0]).abs() < 1e-15);
        assert!((vp[1] - 0.5 * v[1]).abs() < 1e-15);
        assert!((p.divergence(d) - 0.25 * d).abs() < 1e-15);
    }

    #[test]
    fn degenerate_cell_rejected() {
        assert!(Piola::new([[1.0, 1.0], [1.0, 1.0]]).is_err());
    }
}
