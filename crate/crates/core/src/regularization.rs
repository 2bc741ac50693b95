//! Separable nonsmooth terms and their closed-form proximal maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `R(x)` of the composite objective. `mu` is the sparsity weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularizer {
    /// `mu * ||x||_1 + indicator(x >= 0)`.
    L1NonNeg { mu: f64 },
    /// `mu * ||x||_1`.
    L1 { mu: f64 },
    /// `indicator(x >= 0)`.
    NonNeg,
    Zero,
}

impl Regularizer {
    pub fn l1_nonneg(mu: f64) -> Result<Self> {
        let r = Regularizer::L1NonNeg { mu };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Regularizer::L1NonNeg { mu } | Regularizer::L1 { mu } if !(mu >= 0.0) || !mu.is_finite() => {
                Err(Error::config(format!("regularization weight must be >= 0, got {mu}")))
            }
            _ => Ok(()),
        }
    }

    pub fn mu(&self) -> f64 {
        match *self {
            Regularizer::L1NonNeg { mu } | Regularizer::L1 { mu } => mu,
            _ => 0.0,
        }
    }

    pub fn has_nonnegativity(&self) -> bool {
        matches!(self, Regularizer::L1NonNeg { .. } | Regularizer::NonNeg)
    }

    /// Scalar prox of `step * R` at `v`.
    #[inline]
    pub fn prox_scalar(&self, v: f64, step: f64) -> f64 {
        match *self {
            Regularizer::Zero => v,
            Regularizer::NonNeg => v.max(0.0),
            Regularizer::L1 { mu } => {
                let t = step * mu;
                if v > t {
                    v - t
                } else if v < -t {
                    v + t
                } else {
                    0.0
                }
            }
            Regularizer::L1NonNeg { mu } => (v - step * mu).max(0.0),
        }
    }

    /// `argmin_u step * R(u) + 0.5 * ||u - v||^2`, written into `v`.
    pub fn prox_in_place(&self, v: &mut [f64], step: f64) -> Result<()> {
        check_step(step)?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::arg("prox input has non-finite entries"));
        }
        for x in v.iter_mut() {
            *x = self.prox_scalar(*x, step);
        }
        Ok(())
    }

    pub fn prox(&self, v: &[f64], step: f64) -> Result<Vec<f64>> {
        let mut out = v.to_vec();
        self.prox_in_place(&mut out, step)?;
        Ok(out)
    }

    /// `R(x)`; `f64::INFINITY` when a constrained component is negative.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("regularizer input has non-finite entries"));
        }
        if self.has_nonnegativity() && x.iter().any(|&v| v < 0.0) {
            return Ok(f64::INFINITY);
        }
        Ok(self.mu() * x.iter().map(|v| v.abs()).sum::<f64>())
    }
}

fn check_step(step: f64) -> Result<()> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::arg(format!("prox step must be positive, got {step}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let r = Regularizer::L1NonNeg { mu: 0.2 };
        let u = r.prox(&[0.5, -0.3, 0.1], 1.0).unwrap();
        assert!((u[0] - 0.3).abs() < 1e-15);
        assert_eq!(&u[1..], &[0.0, 0.0]);

        let l1 = Regularizer::L1 { mu: 1.0 };
        assert_eq!(l1.prox(&[2.0, -2.0, 0.5], 0.5).unwrap(), vec![1.5, -1.5, 0.0]);
        assert_eq!(Regularizer::NonNeg.prox(&[-1.0, 1.0], 3.0).unwrap(), vec![0.0, 1.0]);
        assert_eq!(Regularizer::Zero.prox(&[-1.0, 7.0], 9.0).unwrap(), vec![-1.0, 7.0]);
    }

    #[test]
    fn prox_of_zero_is_zero() {
        for r in [
            Regularizer::L1NonNeg { mu: 3.0 },
            Regularizer::L1 { mu: 3.0 },
            Regularizer::NonNeg,
            Regularizer::Zero,
        ] {
            assert_eq!(r.prox(&[0.0; 4], 2.5).unwrap(), vec![0.0; 4]);
        }
    }

    #[test]
    fn prox_errors() {
        let r = Regularizer::NonNeg;
        assert!(matches!(r.prox(&[1.0], 0.0), Err(Error::Argument(_))));
        assert!(matches!(r.prox(&[1.0], -1.0), Err(Error::Argument(_))));
        assert!(matches!(r.prox(&[f64::NAN], 1.0), Err(Error::Argument(_))));
        assert!(Regularizer::l1_nonneg(-1.0).is_err());
    }

    #[test]
    fn eval_cases() {
        let r = Regularizer::L1NonNeg { mu: 1.0 };
        assert_eq!(r.eval(&[1.0, 2.0, 0.0]).unwrap(), 3.0);
        assert_eq!(r.eval(&[1.0, -1e-9, 0.0]).unwrap(), f64::INFINITY);
        assert_eq!(Regularizer::NonNeg.eval(&[0.0, 4.0]).unwrap(), 0.0);
        assert_eq!(Regularizer::L1 { mu: 2.0 }.eval(&[-1.0, 1.0]).unwrap(), 4.0);
    }

    #[test]
    fn zero_mu_is_projection() {
        let r = Regularizer::L1NonNeg { mu: 0.0 };
        assert_eq!(r.prox(&[-2.0, 0.7], 1.0).unwrap(), vec![0.0, 0.7]);
    }
}
