use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Couplings `mu`, `lambda` and the ratio `rho = mu / lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GribovParams {
    pub mu: f64,
    pub lambda: f64,
    /// `None` exactly when `lambda == 0`.
    pub rho: Option<f64>,
}

impl GribovParams {
    pub fn new(mu: f64, lambda: f64) -> Result<Self> {
        if !mu.is_finite() || !lambda.is_finite() {
            return Err(Error::Parameter(format!("non-finite couplings mu={mu}, lambda={lambda}")));
        }
        let rho = if lambda != 0.0 { Some(mu / lambda) } else { None };
        Ok(Self { mu, lambda, rho })
    }

    /// `rho`, or a parameter error when `lambda == 0`.
    pub fn rho(&self) -> Result<f64> {
        self.rho
            .ok_or_else(|| Error::Parameter("rho = mu/lambda is undefined for lambda = 0".into()))
    }

    /// Rejects anything but `mu > 0`, `lambda > 0`.
    pub fn require_positive(&self) -> Result<()> {
        if self.mu > 0.0 && self.lambda > 0.0 {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "need mu > 0 and lambda > 0, got mu={}, lambda={}",
                self.mu, self.lambda
            )))
        }
    }

    /// Same spectrum, `lambda >= 0`. The sign of lambda is a parity similarity.
    pub fn normalized(&self) -> Self {
        Self::new(self.mu, self.lambda.abs()).expect("finite")
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.mu, lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_present_iff_lambda_nonzero() {
        let p = GribovParams::new(1.0, 0.0).unwrap();
        assert!(p.rho.is_none());
        assert!(p.rho().is_err());
        let p = GribovParams::new(0.7, 0.3).unwrap();
        assert!((p.rho.unwrap() * p.lambda - p.mu).abs() <= f64::EPSILON);
    }

    #[test]
    fn positivity_gate() {
        assert!(GribovParams::new(1.0, -0.5).unwrap().require_positive().is_err());
        assert!(GribovParams::new(0.0, 0.5).unwrap().require_positive().is_err());
        assert!(GribovParams::new(1.0, 0.5).unwrap().require_positive().is_ok());
        assert!(GribovParams::new(f64::NAN, 0.5).is_err());
    }
}
