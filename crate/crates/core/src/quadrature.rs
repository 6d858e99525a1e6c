//! Quadrature rules on the reference triangle and the segment.
//!
//! The reference triangle has vertices (0,0), (1,0), (0,1) and area 1/2.
//! Rules are symmetric under the affine symmetries of the triangle, have
//! strictly positive weights, and are exact for all bivariate polynomials
//! up to their stated degree. Low degrees use the classic closed-form
//! rules; degrees above 5 are built by symmetrizing a collapsed-coordinate
//! Gauss product rule, which keeps every coefficient reproducible from
//! machine-precision Gauss-Legendre nodes.

use crate::{Error, Result};

/// Highest polynomial degree for which a triangle rule is provided.
pub const MAX_DEGREE: usize = 10;

/// A quadrature rule on the reference triangle.
///
/// Points are stored in barycentric coordinates `(b0, b1, b2)` with
/// `b0 + b1 + b2 = 1`; the Cartesian point is `(b1, b2)`. Weights sum to
/// the reference area 1/2.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Cartesian coordinates (x, y) of point `i` on the reference triangle.
    pub fn xy(&self, i: usize) -> (f64, f64) {
        (self.points[i][1], self.points[i][2])
    }

    /// Applies the rule to `f(x, y)` on the reference triangle.
    pub fn integrate(&self, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p[1], p[2]))
            .sum()
    }
}

/// Returns a symmetric positive rule exact to (at least) `degree`.
pub fn triangle_rule(degree: usize) -> Result<QuadratureRule> {
    if degree > MAX_DEGREE {
        return Err(Error::InvalidInput(format!(
            "quadrature degree {degree} above supported maximum {MAX_DEGREE}"
        )));
    }
    Ok(match degree {
        0 | 1 => centroid_rule(),
        2 => three_point_rule(),
        3..=5 => seven_point_rule(),
        d => symmetrized_product_rule(d),
    })
}

fn centroid_rule() -> QuadratureRule {
    QuadratureRule {
        points: vec![[1.0 / 3.0; 3]],
        weights: vec![0.5],
        degree: 1,
    }
}

fn three_point_rule() -> QuadratureRule {
    let a = 2.0 / 3.0;
    let b = 1.0 / 6.0;
    QuadratureRule {
        points: vec![[a, b, b], [b, a, b], [b, b, a]],
        weights: vec![1.0 / 6.0; 3],
        degree: 2,
    }
}

/// Classic 7-point degree-5 rule; all coefficients are algebraic in √15.
fn seven_point_rule() -> QuadratureRule {
    let s15 = 15.0_f64.sqrt();
    let a1 = (6.0 - s15) / 21.0;
    let a2 = (6.0 + s15) / 21.0;
    // Weights relative to unit total, scaled by the triangle area 1/2.
    let w0 = 0.5 * 9.0 / 40.0;
    let w1 = 0.5 * (155.0 - s15) / 1200.0;
    let w2 = 0.5 * (155.0 + s15) / 1200.0;
    let mut points = vec![[1.0 / 3.0; 3]];
    let mut weights = vec![w0];
    for (a, w) in [(a1, w1), (a2, w2)] {
        let c = 1.0 - 2.0 * a;
        points.extend_from_slice(&[[c, a, a], [a, c, a], [a, a, c]]);
        weights.extend_from_slice(&[w, w, w]);
    }
    QuadratureRule { points, weights, degree: 5 }
}

/// Gauss product rule on the collapsed square, symmetrized over the six
/// barycentric permutations so the point set is invariant under the
/// triangle's symmetry group.
fn symmetrized_product_rule(degree: usize) -> QuadratureRule {
    // Map (u, v) in [0,1]^2 to (x, y) = (u(1-v), v) with Jacobian (1-v).
    // x^a y^b pulls back to u^a (1-v)^(a+1) v^b, so exactness needs
    // u-degree `degree` and v-degree `degree + 1`.
    let gu = gauss_legendre_unit(degree / 2 + 1);
    let gv = gauss_legendre_unit(degree / 2 + 2);
    let mut points = Vec::with_capacity(6 * gu.0.len() * gv.0.len());
    let mut weights = Vec::with_capacity(points.capacity());
    for (&u, &wu) in gu.0.iter().zip(&gu.1) {
        for (&v, &wv) in gv.0.iter().zip(&gv.1) {
            let (x, y) = (u * (1.0 - v), v);
            let w = wu * wv * (1.0 - v) / 6.0;
            let b = [1.0 - x - y, x, y];
            for perm in PERMS {
                points.push([b[perm[0]], b[perm[1]], b[perm[2]]]);
                weights.push(w);
            }
        }
    }
    QuadratureRule { points, weights, degree }
}

const PERMS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Gauss-Legendre nodes and weights on [-1, 1].
///
/// Nodes are found by Newton iteration from the Chebyshev initial guess;
/// for the small `n` used here this converges to machine precision in a
/// handful of steps.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one Gauss point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Gauss-Legendre rule mapped to [0, 1].
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    (
        x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        w.iter().map(|t| 0.5 * t).collect(),
    )
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Evaluates the Legendre polynomial P_q at `x` in [-1, 1].
pub fn legendre(q: usize, x: f64) -> f64 {
    match q {
        0 => 1.0,
        1 => x,
        _ => {
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=q {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

/// Exact integral of x^a y^b over the reference triangle: a! b! / (a+b+2)!.
pub fn exact_monomial_integral(a: usize, b: usize) -> f64 {
    // Evaluate the factorial ratio as a running product to stay exact in f64.
    let mut value = 1.0;
    // 1 / (a+b+2)! * a! = 1 / prod_{j=a+1}^{a+b+2} j
    for j in (a + 1)..=(a + b + 2) {
        value /= j as f64;
    }
    for j in 1..=b {
        value *= j as f64;
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_rule(rule: &QuadratureRule, degree: usize, tol: f64) {
        for a in 0..=degree {
            for b in 0..=(degree - a) {
                let exact = exact_monomial_integral(a, b);
                let got = rule.integrate(|x, y| x.powi(a as i32) * y.powi(b as i32));
                assert!(
                    (got - exact).abs() <= tol * exact.abs(),
                    "deg {degree}: x^{a} y^{b}: got {got:.17}, want {exact:.17}"
                );
            }
        }
    }

    #[test]
    fn degree_one_is_centroid() {
        let r = triangle_rule(1).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.weights[0], 0.5);
        assert_eq!(r.points[0], [1.0 / 3.0; 3]);
        check_rule(&r, 1, 1e-14);
    }

    #[test]
    fn degree_two_is_three_points() {
        let r = triangle_rule(2).unwrap();
        assert_eq!(r.len(), 3);
        check_rule(&r, 2, 1e-14);
    }

    #[test]
    fn all_rules_exact_to_declared_degree() {
        for degree in 1..=MAX_DEGREE {
            let r = triangle_rule(degree).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0), "deg {degree}: negative weight");
            let total: f64 = r.weights.iter().sum();
            assert!((total - 0.5).abs() < 1e-14);
            check_rule(&r, degree, 1e-14);
        }
    }

    #[test]
    fn degree_above_max_is_rejected() {
        assert!(triangle_rule(MAX_DEGREE + 1).is_err());
    }

    #[test]
    fn rules_are_symmetric_point_sets() {
        // Swapping x and y maps the rule onto itself, so any asymmetric
        // integrand must integrate identically in both orientations.
        for degree in [2, 5, 6, 8] {
            let r = triangle_rule(degree).unwrap();
            let f = r.integrate(|x, y| x * x * y + 0.3 * x);
            let g = r.integrate(|x, y| y * y * x + 0.3 * y);
            assert!((f - g).abs() < 1e-15, "degree {degree} not symmetric");
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..=8 {
            let (x, w) = gauss_legendre(n);
            assert_eq!(x.len(), n);
            for d in 0..(2 * n) {
                let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(d as i32)).sum();
                let exact = if d % 2 == 0 { 2.0 / (d as f64 + 1.0) } else { 0.0 };
                assert!((got - exact).abs() < 1e-13, "n={n} d={d}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn legendre_orthogonality_on_gauss_points() {
        let (x, w) = gauss_legendre(8);
        for p in 0..4 {
            for q in 0..4 {
                let dot: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(xi, wi)| wi * legendre(p, *xi) * legendre(q, *xi))
                    .sum();
                let exact = if p == q { 2.0 / (2.0 * p as f64 + 1.0) } else { 0.0 };
                assert!((dot - exact).abs() < 1e-13);
            }
        }
    }
}
