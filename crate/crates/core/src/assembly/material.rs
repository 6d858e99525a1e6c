//! Material parameters of isotropic linear elasticity.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Lamé parameters derived from Young's modulus and the Poisson ratio.
///
/// `lambda = None` marks the incompressible limit (ν = 1/2, λ = ∞), where
/// the trace term of the constitutive bilinear form vanishes identically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub e: f64,
    pub nu: f64,
    pub mu: f64,
    pub lambda: Option<f64>,
}

/// Spatial dimension of the solver.
pub const DIM: f64 = 2.0;

impl MaterialParams {
    pub fn is_limit(&self) -> bool {
        self.lambda.is_none()
    }

    /// Trace coefficient of the original form:
    /// `(λ+μ) / (μ (nλ + (n+1)μ))`. Undefined in the limit regime.
    pub fn trace_coeff_original(&self) -> Result<f64> {
        let lambda = self.lambda.ok_or_else(|| {
            Error::InvalidInput(
                "the original form of a(·,·) is undefined at λ = ∞; use the deviatoric form"
                    .into(),
            )
        })?;
        Ok((lambda + self.mu) / (self.mu * (DIM * lambda + (DIM + 1.0) * self.mu)))
    }

    /// Trace coefficient of the deviatoric form:
    /// `1 / (n (nλ + (n+1)μ))`, zero in the limit regime.
    pub fn trace_coeff_deviatoric(&self) -> f64 {
        match self.lambda {
            Some(lambda) => 1.0 / (DIM * (DIM * lambda + (DIM + 1.0) * self.mu)),
            None => 0.0,
        }
    }
}

/// Computes the Lamé coefficients λ = Eν/((1+ν)(1−2ν)) and μ = E/(2(1+ν)).
///
/// ν = 1/2 yields the limit flag instead of a finite λ.
pub fn build_lame(e: f64, nu: f64) -> Result<MaterialParams> {
    if !(e > 0.0) {
        return Err(Error::InvalidInput(format!("Young's modulus must be positive, got {e}")));
    }
    if !(0.0..=0.5).contains(&nu) {
        return Err(Error::InvalidInput(format!("Poisson ratio must lie in [0, 1/2], got {nu}")));
    }
    let mu = e / (2.0 * (1.0 + nu));
    let lambda = if nu == 0.5 {
        None
    } else {
        Some(e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)))
    };
    Ok(MaterialParams { e, nu, mu, lambda })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nu_035() {
        let m = build_lame(1.0, 0.35).unwrap();
        assert!((m.lambda.unwrap() - 0.864197530864198).abs() < 1e-12);
        assert!((m.mu - 0.37037037037037035).abs() < 1e-12);
    }

    #[test]
    fn nu_half_is_limit() {
        let m = build_lame(1.0, 0.5).unwrap();
        assert!(m.is_limit());
        assert!((m.mu - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.trace_coeff_deviatoric(), 0.0);
        assert!(m.trace_coeff_original().is_err());
    }

    #[test]
    fn nu_zero() {
        let m = build_lame(1.0, 0.0).unwrap();
        assert_eq!(m.lambda, Some(0.0));
        assert_eq!(m.mu, 0.5);
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(build_lame(0.0, 0.3).is_err());
        assert!(build_lame(1.0, 0.6).is_err());
        assert!(build_lame(1.0, -0.1).is_err());
    }
}
