//! Backtracking on the forward-backward step.

use crate::error::Result;
use crate::geometry::AngleSubset;
use crate::objective::BlockObjective;
use crate::regularization::Regularizer;

#[derive(Clone, Debug, PartialEq)]
pub struct LineSearchOutcome {
    /// `prox_{alpha R}(x - alpha g)` at the last step tried.
    pub x_bar: Vec<f64>,
    /// Last step tried; the accepted one when `accepted`.
    pub alpha: f64,
    /// Number of `alpha <- beta * alpha` reductions performed.
    pub backtracks: usize,
    pub accepted: bool,
    /// Objective evaluations made (one per trial step).
    pub evaluations: usize,
}

/// Shrink `alpha` from `alpha_start` until
/// `f(x_bar) <= f(x) + <g, x_bar - x> + ||x_bar - x||^2 / (2 alpha)`.
///
/// Equality is accepted. After `max_backtracks` reductions the search gives up
/// and returns `accepted = false`.
#[allow(clippy::too_many_arguments)]
pub fn line_search<P: BlockObjective + ?Sized>(
    problem: &P,
    subset: &AngleSubset,
    reg: &Regularizer,
    x: &[f64],
    f_x: f64,
    grad: &[f64],
    alpha_start: f64,
    beta: f64,
    max_backtracks: usize,
) -> Result<LineSearchOutcome> {
    let mut alpha = alpha_start;
    let mut backtracks = 0;
    let mut x_bar = vec![0.0; x.len()];
    loop {
        for ((xb, xi), gi) in x_bar.iter_mut().zip(x).zip(grad) {
            *xb = xi - alpha * gi;
        }
        reg.prox_in_place(&mut x_bar, alpha)?;

        let mut lin = 0.0;
        let mut sq = 0.0;
        for ((xb, xi), gi) in x_bar.iter().zip(x).zip(grad) {
            let d = xb - xi;
            lin += gi * d;
            sq += d * d;
        }
        let f_bar = problem.value(&x_bar, subset)?;
        if f_bar <= f_x + lin + sq / (2.0 * alpha) {
            return Ok(LineSearchOutcome {
                x_bar,
                alpha,
                backtracks,
                accepted: true,
                evaluations: backtracks + 1,
            });
        }
        if backtracks == max_backtracks {
            return Ok(LineSearchOutcome {
                x_bar,
                alpha,
                backtracks,
                accepted: false,
                evaluations: backtracks + 1,
            });
        }
        alpha *= beta;
        backtracks += 1;
    }
}
