//! Mini-batch size growth and uniform angle sampling.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::AngleSubset;
use crate::solvers::SolverConfig;

/// `N_t = min(n_max, max(ceil(C / eps_{k_hat + ceil(n / N_{t-1})}), N0))`
/// with `eps_j = r^j` and `n` the number of angles, never below `N_{t-1}`.
///
/// The raw formula can shrink the batch after a jump of more than a factor two
/// (the index `k_hat + ceil(n / N_{t-1})` then moves backwards), so the result
/// is clamped to keep the sequence nondecreasing.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchSchedule {
    pub n_theta: usize,
    pub n0: usize,
    pub n_max: usize,
    pub c: f64,
    pub eps_ratio: f64,
}

impl BatchSchedule {
    pub fn new(cfg: &SolverConfig, n_theta: usize) -> Result<Self> {
        cfg.validate(n_theta)?;
        let n_max = cfg.n_max_for(n_theta);
        let c = match cfg.c {
            Some(c) => c,
            None => default_c(cfg.n0, n_theta, cfg.eps_ratio),
        };
        Ok(BatchSchedule {
            n_theta,
            n0: cfg.n0,
            n_max,
            c,
            eps_ratio: cfg.eps_ratio,
        })
    }

    pub fn eps(&self, j: usize) -> f64 {
        self.eps_ratio.powf(j as f64)
    }

    /// Batch size given the `eps` value selected for this epoch.
    pub fn size_for_eps(&self, eps: f64) -> usize {
        let raw = self.c / eps;
        if !raw.is_finite() || raw >= self.n_max as f64 {
            return self.n_max;
        }
        (raw.ceil() as usize).max(self.n0).min(self.n_max)
    }

    /// `N_t` from the previous size and the iteration counter at the start of the epoch.
    /// Epoch 1 uses `n_prev = n0` and `k_hat = 0`.
    pub fn size(&self, n_prev: usize, k_hat: usize) -> usize {
        let j = k_hat + self.n_theta.div_ceil(n_prev.max(1));
        self.size_for_eps(self.eps(j)).max(n_prev.min(self.n_max))
    }

    /// The whole batch-size sequence for `epochs` epochs. It depends only on the
    /// configuration, so it can be planned before any data is touched.
    pub fn plan(&self, epochs: usize) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(epochs);
        let mut n_prev = self.n0;
        let mut k_hat = 0;
        for _ in 0..epochs {
            let n = self.size(n_prev, k_hat);
            sizes.push(n);
            k_hat += self.n_theta.div_ceil(n);
            n_prev = n;
        }
        sizes
    }
}

/// Largest `C` for which the first epoch's formula value is exactly `n0`.
pub fn default_c(n0: usize, n_theta: usize, eps_ratio: f64) -> f64 {
    let eps = eps_ratio.powf(n_theta.div_ceil(n0) as f64);
    let mut c = n0 as f64 * eps;
    while (c / eps).ceil() > n0 as f64 {
        c = c.next_down();
    }
    c
}

/// `size` distinct angle indices drawn uniformly without replacement.
pub fn sample_minibatch<R: Rng + ?Sized>(rng: &mut R, n_theta: usize, size: usize) -> Result<AngleSubset> {
    if size == 0 || size > n_theta {
        return Err(Error::arg(format!(
            "cannot draw {size} distinct angles out of {n_theta}"
        )));
    }
    let picked = rand::seq::index::sample(rng, n_theta, size).into_vec();
    AngleSubset::new(picked, n_theta)
}
