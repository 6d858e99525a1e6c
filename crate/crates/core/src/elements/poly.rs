//! Sparse bivariate polynomials with exact symbolic differentiation.
//!
//! Basis construction works on these exact representations so that
//! divergences and derivatives carry no quadrature error; only the final
//! coefficients are subject to floating-point rounding.

/// One monomial term `coeff * x^px * y^py`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub px: u32,
    pub py: u32,
}

/// A scalar polynomial in two variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Poly2 {
    pub terms: Vec<Term>,
}

impl Poly2 {
    pub fn zero() -> Self {
        Poly2 { terms: Vec::new() }
    }

    pub fn monomial(px: u32, py: u32) -> Self {
        Poly2 { terms: vec![Term { coeff: 1.0, px, py }] }
    }

    pub fn constant(c: f64) -> Self {
        Poly2 { terms: vec![Term { coeff: c, px: 0, py: 0 }] }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * x.powi(t.px as i32) * y.powi(t.py as i32))
            .sum()
    }

    pub fn dx(&self) -> Poly2 {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.px > 0)
            .map(|t| Term { coeff: t.coeff * t.px as f64, px: t.px - 1, py: t.py })
            .collect();
        Poly2 { terms }
    }

    pub fn dy(&self) -> Poly2 {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.py > 0)
            .map(|t| Term { coeff: t.coeff * t.py as f64, px: t.px, py: t.py - 1 })
            .collect();
        Poly2 { terms }
    }

    pub fn scaled(&self, s: f64) -> Poly2 {
        Poly2 {
            terms: self.terms.iter().map(|t| Term { coeff: t.coeff * s, ..*t }).collect(),
        }
    }

    pub fn add_assign_scaled(&mut self, other: &Poly2, s: f64) {
        for t in &other.terms {
            self.terms.push(Term { coeff: t.coeff * s, ..*t });
        }
    }

    /// Merges terms with identical exponents. Summation order is fixed by
    /// the (px, py) sort, keeping results reproducible.
    pub fn compress(&mut self) {
        self.terms.sort_by_key(|t| (t.px, t.py));
        let mut merged: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            match merged.last_mut() {
                Some(last) if last.px == t.px && last.py == t.py => last.coeff += t.coeff,
                _ => merged.push(*t),
            }
        }
        merged.retain(|t| t.coeff != 0.0);
        self.terms = merged;
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.px + t.py).max().unwrap_or(0)
    }
}

/// A vector-valued polynomial (two scalar components).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VecPoly2 {
    pub x: Poly2,
    pub y: Poly2,
}

impl VecPoly2 {
    pub fn zero() -> Self {
        VecPoly2 { x: Poly2::zero(), y: Poly2::zero() }
    }

    pub fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        [self.x.eval(x, y), self.y.eval(x, y)]
    }

    pub fn divergence(&self) -> Poly2 {
        let mut d = self.x.dx();
        d.add_assign_scaled(&self.y.dy(), 1.0);
        d.compress();
        d
    }

    pub fn add_assign_scaled(&mut self, other: &VecPoly2, s: f64) {
        self.x.add_assign_scaled(&other.x, s);
        self.y.add_assign_scaled(&other.y, s);
    }

    pub fn compress(&mut self) {
        self.x.compress();
        self.y.compress();
    }
}

/// All monomial exponent pairs of total degree <= k, ordered by degree and
/// then by descending x-exponent.
pub fn monomials_upto(k: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for d in 0..=k as u32 {
        for py in 0..=d {
            out.push((d - py, py));
        }
    }
    out
}

/// Monomial exponent pairs of total degree exactly k.
pub fn monomials_of_degree(k: usize) -> Vec<(u32, u32)> {
    (0..=k as u32).map(|py| (k as u32 - py, py)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divergence_of_linear_field() {
        // v = (x + 2y, 3y): div = 1 + 3 = 4
        let v = VecPoly2 {
            x: Poly2 {
                terms: vec![
                    Term { coeff: 1.0, px: 1, py: 0 },
                    Term { coeff: 2.0, px: 0, py: 1 },
                ],
            },
            y: Poly2 { terms: vec![Term { coeff: 3.0, px: 0, py: 1 }] },
        };
        let d = v.divergence();
        assert_eq!(d.terms.len(), 1);
        assert_eq!(d.eval(0.3, 0.7), 4.0);
    }

    #[test]
    fn monomial_counts() {
        assert_eq!(monomials_upto(0).len(), 1);
        assert_eq!(monomials_upto(1).len(), 3);
        assert_eq!(monomials_upto(2).len(), 6);
        assert_eq!(monomials_of_degree(2).len(), 3);
    }

    #[test]
    fn compress_merges_duplicates() {
        let mut p = Poly2 {
            terms: vec![
                Term { coeff: 1.0, px: 1, py: 1 },
                Term { coeff: 2.0, px: 1, py: 1 },
                Term { coeff: 0.5, px: 0, py: 0 },
            ],
        };
        p.compress();
        assert_eq!(p.terms.len(), 2);
        assert_eq!(p.eval(1.0, 1.0), 3.5);
    }
}
