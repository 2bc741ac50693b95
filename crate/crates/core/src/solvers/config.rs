use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How `elapsed` is measured for time budgets, checkpoints and traces.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockKind {
    /// Wall-clock seconds.
    #[default]
    Wall,
    /// Operator work: 1.0 is one full gradient (every angle projected and
    /// back-projected once). Deterministic, so runs are byte-reproducible.
    Work,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Telemetry {
    #[default]
    Basic,
    /// Also evaluate the full objective `F(x_k)` every iteration.
    Full,
}

/// Hyperparameters shared by the three solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Trial step at every iteration (and the fixed FB step).
    pub alpha0: f64,
    /// Backtracking factor in (0, 1).
    pub beta: f64,
    /// Initial (and, for the fixed-batch solver, constant) mini-batch size.
    pub n0: usize,
    /// Batch-size cap; `None` means all angles.
    pub n_max: Option<usize>,
    /// Schedule constant; `None` derives the value that makes the first epoch use `n0`.
    pub c: Option<f64>,
    /// `r` in `eps_k = r^k`.
    pub eps_ratio: f64,
    pub epochs: usize,
    /// Budget in clock units, checked between iterations.
    pub time_budget: Option<f64>,
    pub max_backtracks: usize,
    pub seed: u64,
    /// Upper step bound; defaults to `alpha0`.
    pub alpha_max: Option<f64>,
    /// Optional Lipschitz estimate of the full fidelity gradient, used only for warnings.
    pub lipschitz_estimate: Option<f64>,
    pub clock: ClockKind,
    pub telemetry: Telemetry,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            alpha0: 1e-3,
            beta: 0.5,
            n0: 8,
            n_max: None,
            c: None,
            eps_ratio: 0.99,
            epochs: 15,
            time_budget: None,
            max_backtracks: 60,
            seed: 0,
            alpha_max: None,
            lipschitz_estimate: None,
            clock: ClockKind::Wall,
            telemetry: Telemetry::Basic,
        }
    }
}

impl SolverConfig {
    pub fn n_max_for(&self, n_theta: usize) -> usize {
        self.n_max.unwrap_or(n_theta)
    }

    /// First trial step of each line search.
    pub fn initial_step(&self) -> f64 {
        match self.alpha_max {
            Some(m) => self.alpha0.min(m),
            None => self.alpha0,
        }
    }

    /// Validate against a problem with `n_theta` blocks; returns non-fatal warnings.
    pub fn validate(&self, n_theta: usize) -> Result<Vec<String>> {
        if !(self.alpha0 > 0.0) || !self.alpha0.is_finite() {
            return Err(Error::config(format!("alpha0 must be positive, got {}", self.alpha0)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::config(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        if !(self.eps_ratio > 0.0 && self.eps_ratio < 1.0) {
            return Err(Error::config(format!(
                "eps_ratio must lie in (0, 1), got {}",
                self.eps_ratio
            )));
        }
        let n_max = self.n_max_for(n_theta);
        if self.n0 == 0 || self.n0 > n_max || n_max > n_theta {
            return Err(Error::config(format!(
                "need 0 < n0 <= n_max <= n_theta, got n0={}, n_max={}, n_theta={}",
                self.n0, n_max, n_theta
            )));
        }
        if let Some(c) = self.c {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::config(format!("schedule constant C must be positive, got {c}")));
            }
        }
        if let Some(m) = self.alpha_max {
            if !(m > 0.0) {
                return Err(Error::config("alpha_max must be positive"));
            }
        }
        if let Some(b) = self.time_budget {
            if !(b >= 0.0) {
                return Err(Error::config("time budget must be nonnegative"));
            }
        }
        let mut warnings = Vec::new();
        if let Some(l) = self.lipschitz_estimate {
            let cap = self.alpha_max.unwrap_or(self.alpha0);
            if l > 0.0 && cap > 1.0 / (2.0 * l) {
                warnings.push(format!(
                    "largest step {cap:e} exceeds 1/(2L) = {:e}; convergence theory does not cover it",
                    1.0 / (2.0 * l)
                ));
            }
        }
        Ok(warnings)
    }
}
