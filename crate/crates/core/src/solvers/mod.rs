//! FB-LISA and its baselines.
//!
//! All three solvers work on any [`BlockObjective`] plus a [`Regularizer`]:
//!
//! * [`fblisa_run`]: stochastic forward-backward with a backtracking line search
//!   (trial step reset to `alpha0` every iteration) and a mini-batch size that
//!   grows epoch by epoch following [`BatchSchedule`].
//! * [`proxsgd_run`]: the same loop with the batch size frozen at `n0`.
//! * [`fb_run`]: deterministic full-gradient forward-backward with a fixed step.

mod config;
mod line_search;
mod schedule;
mod trace;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use config::{ClockKind, SolverConfig, Telemetry};
pub use line_search::{line_search, LineSearchOutcome};
pub use schedule::{default_c, sample_minibatch, BatchSchedule};
pub use trace::{read_trace_csv, write_trace_csv, TRACE_HEADER};

use crate::error::{Error, Result};
use crate::geometry::{AngleSubset, Sinogram};
use crate::grid::ImageGrid;
use crate::objective::{BlockObjective, TomoProblem};
use crate::regularization::Regularizer;

/// RNG stream used for mini-batch sampling (noise uses another stream).
pub const SAMPLING_STREAM: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    FbLisa,
    Fb,
    ProxSgd,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::FbLisa, Method::ProxSgd, Method::Fb];

    pub fn name(self) -> &'static str {
        match self {
            Method::FbLisa => "fblisa",
            Method::Fb => "fb",
            Method::ProxSgd => "proxsgd",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fblisa" => Ok(Method::FbLisa),
            "fb" => Ok(Method::Fb),
            "proxsgd" => Ok(Method::ProxSgd),
            other => Err(Error::config(format!(
                "unknown solver '{other}' (expected fblisa, fb or proxsgd)"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Telemetry for one inner iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// Epoch, starting at 1.
    pub t: usize,
    pub batch_size: usize,
    pub alpha_accepted: f64,
    pub backtracks: usize,
    /// `f_S(x_k)` on this iteration's mini-batch.
    pub sub_objective: f64,
    /// `F(x_k)`, only with [`Telemetry::Full`].
    pub full_objective: Option<f64>,
    /// Clock reading after the iteration.
    pub elapsed: f64,
    /// `||x_k - x_bar_k|| / alpha_k`.
    pub grad_map_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    EpochsExhausted,
    TimeBudget,
    /// The line search ran out of backtracks; `x_final` is the last accepted iterate.
    BacktrackCapHit,
}

#[derive(Clone, Debug)]
pub struct SolverResult {
    pub x_final: Vec<f64>,
    pub trace: Vec<IterationRecord>,
    pub termination: Termination,
    pub warnings: Vec<String>,
}

impl SolverResult {
    pub fn batch_sizes(&self) -> Vec<usize> {
        self.trace.iter().map(|r| r.batch_size).collect()
    }
}

/// Called after every iteration with its record and the new iterate.
pub type Observer<'a> = dyn FnMut(&IterationRecord, &[f64]) + 'a;

struct Clock {
    kind: ClockKind,
    start: Instant,
    angle_ops: u64,
    n_theta: usize,
}

impl Clock {
    fn new(kind: ClockKind, n_theta: usize) -> Self {
        Clock {
            kind,
            start: Instant::now(),
            angle_ops: 0,
            n_theta,
        }
    }

    /// Record `n` single-angle projections or back-projections.
    fn charge(&mut self, n: usize) {
        self.angle_ops += n as u64;
    }

    fn elapsed(&self) -> f64 {
        match self.kind {
            ClockKind::Wall => self.start.elapsed().as_secs_f64(),
            ClockKind::Work => self.angle_ops as f64 / (2 * self.n_theta) as f64,
        }
    }

    fn over(&self, budget: Option<f64>) -> bool {
        budget.is_some_and(|b| self.elapsed() >= b)
    }
}

/// `F(x) = f(x) + R(x)` using the full data set; `INFINITY` when infeasible.
pub fn composite_objective<P: BlockObjective + ?Sized>(problem: &P, x: &[f64], reg: &Regularizer) -> Result<f64> {
    let r = reg.eval(x)?;
    let f = problem.value(x, &AngleSubset::full(problem.n_blocks()))?;
    Ok(f + r)
}

/// `0.5 * ||Ax - b||^2 + R(x)` for an image.
pub fn full_objective(x: &ImageGrid, b: &Sinogram, reg: &Regularizer) -> Result<f64> {
    let problem = TomoProblem::new(x.spec().clone(), b.clone())?;
    composite_objective(&problem, x.values(), reg)
}

fn check_start<P: BlockObjective + ?Sized>(problem: &P, x0: &[f64], reg: &Regularizer) -> Result<()> {
    if x0.len() != problem.dim() {
        return Err(Error::config(format!(
            "initial iterate has {} values, problem dimension is {}",
            x0.len(),
            problem.dim()
        )));
    }
    reg.validate()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Clone, Copy)]
enum BatchPolicy {
    Growing,
    Fixed,
}

fn run_stochastic<P: BlockObjective + ?Sized>(
    problem: &P,
    x0: &[f64],
    reg: &Regularizer,
    cfg: &SolverConfig,
    policy: BatchPolicy,
    observer: &mut Observer<'_>,
) -> Result<SolverResult> {
    check_start(problem, x0, reg)?;
    let n_theta = problem.n_blocks();
    let warnings = cfg.validate(n_theta)?;
    for w in &warnings {
        log::warn!("{w}");
    }
    let schedule = BatchSchedule::new(cfg, n_theta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(SAMPLING_STREAM);
    let mut clock = Clock::new(cfg.clock, n_theta);
    let alpha_start = cfg.initial_step();

    let mut x = x0.to_vec();
    let mut trace = Vec::new();
    let mut k = 0;
    let mut k_hat = 0;
    let mut n_prev = cfg.n0;
    let mut termination = Termination::EpochsExhausted;

    'epochs: for t in 1..=cfg.epochs {
        let n_t = match policy {
            BatchPolicy::Growing => schedule.size(n_prev, k_hat),
            BatchPolicy::Fixed => cfg.n0,
        };
        for _ in 0..n_theta.div_ceil(n_t) {
            if k > 0 && clock.over(cfg.time_budget) {
                termination = Termination::TimeBudget;
                break 'epochs;
            }
            let subset = sample_minibatch(&mut rng, n_theta, n_t)?;
            let full_objective = match cfg.telemetry {
                Telemetry::Full => Some(composite_objective(problem, &x, reg)?),
                Telemetry::Basic => None,
            };
            let (f_x, grad) = problem.value_and_gradient(&x, &subset)?;
            clock.charge(2 * n_t);
            let ls = line_search(
                problem,
                &subset,
                reg,
                &x,
                f_x,
                &grad,
                alpha_start,
                cfg.beta,
                cfg.max_backtracks,
            )?;
            clock.charge(n_t * ls.evaluations);
            let record = IterationRecord {
                k,
                t,
                batch_size: n_t,
                alpha_accepted: ls.alpha,
                backtracks: ls.backtracks,
                sub_objective: f_x,
                full_objective,
                elapsed: clock.elapsed(),
                grad_map_norm: dist(&x, &ls.x_bar) / ls.alpha,
            };
            if !ls.accepted {
                trace.push(record);
                termination = Termination::BacktrackCapHit;
                break 'epochs;
            }
            x = ls.x_bar;
            observer(&record, &x);
            trace.push(record);
            k += 1;
        }
        k_hat = k;
        n_prev = n_t;
    }

    Ok(SolverResult {
        x_final: x,
        trace,
        termination,
        warnings,
    })
}

/// FB-LISA: growing mini-batches, line search, step reset to `alpha0` each iteration.
pub fn fblisa_run<P: BlockObjective + ?Sized>(
    problem: &P,
    x0: &[f64],
    reg: &Regularizer,
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    run_stochastic(problem, x0, reg, cfg, BatchPolicy::Growing, &mut |_, _| {})
}

/// Fixed-batch stochastic proximal gradient (batch size `n0`) with the same line search.
pub fn proxsgd_run<P: BlockObjective + ?Sized>(
    problem: &P,
    x0: &[f64],
    reg: &Regularizer,
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    run_stochastic(problem, x0, reg, cfg, BatchPolicy::Fixed, &mut |_, _| {})
}

/// Full-gradient forward-backward with constant step `alpha0`, one epoch per iteration.
pub fn fb_run<P: BlockObjective + ?Sized>(
    problem: &P,
    x0: &[f64],
    reg: &Regularizer,
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    run_fb(problem, x0, reg, cfg, &mut |_, _| {})
}

fn run_fb<P: BlockObjective + ?Sized>(
    problem: &P,
    x0: &[f64],
    reg: &Regularizer,
    cfg: &SolverConfig,
    observer: &mut Observer<'_>,
) -> Result<SolverResult> {
    check_start(problem, x0, reg)?;
    if !(cfg.alpha0 > 0.0) || !cfg.alpha0.is_finite() {
        return Err(Error::config(format!("alpha0 must be positive, got {}", cfg.alpha0)));
    }
    let n_theta = problem.n_blocks();
    let mut warnings = Vec::new();
    if let Some(l) = cfg.lipschitz_estimate {
        if l > 0.0 && cfg.alpha0 > 2.0 / l {
            warnings.push(format!(
                "fixed step {:e} exceeds 2/L = {:e}; forward-backward will diverge",
                cfg.alpha0,
                2.0 / l
            ));
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let full = AngleSubset::full(n_theta);
    let alpha = cfg.alpha0;
    let mut clock = Clock::new(cfg.clock, n_theta);
    let mut x = x0.to_vec();
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut termination = Termination::EpochsExhausted;
    for k in 0..cfg.epochs {
        if k > 0 && clock.over(cfg.time_budget) {
            termination = Termination::TimeBudget;
            break;
        }
        let (f_x, grad) = problem.value_and_gradient(&x, &full)?;
        clock.charge(2 * n_theta);
        let mut x_next: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi - alpha * gi).collect();
        reg.prox_in_place(&mut x_next, alpha)?;
        let full_objective = match cfg.telemetry {
            Telemetry::Full => Some(f_x + reg.eval(&x)?),
            Telemetry::Basic => None,
        };
        let record = IterationRecord {
            k,
            t: k + 1,
            batch_size: n_theta,
            alpha_accepted: alpha,
            backtracks: 0,
            sub_objective: f_x,
            full_objective,
            elapsed: clock.elapsed(),
            grad_map_norm: dist(&x, &x_next) / alpha,
        };
        x = x_next;
        observer(&record, &x);
        trace.push(record);
    }
    Ok(SolverResult {
        x_final: x,
        trace,
        termination,
        warnings,
    })
}

/// Run `method`, calling `observer` after every accepted iteration.
pub fn solve<P: BlockObjective + ?Sized>(
    method: Method,
    problem: &P,
    x0: &[f64],
    reg: &Regularizer,
    cfg: &SolverConfig,
    observer: &mut Observer<'_>,
) -> Result<SolverResult> {
    match method {
        Method::FbLisa => run_stochastic(problem, x0, reg, cfg, BatchPolicy::Growing, observer),
        Method::ProxSgd => run_stochastic(problem, x0, reg, cfg, BatchPolicy::Fixed, observer),
        Method::Fb => run_fb(problem, x0, reg, cfg, observer),
    }
}

/// Reconstruct an image from a sinogram, starting at `x0`.
pub fn reconstruct(
    method: Method,
    b: &Sinogram,
    x0: &ImageGrid,
    reg: &Regularizer,
    cfg: &SolverConfig,
) -> Result<(ImageGrid, SolverResult)> {
    let problem = TomoProblem::new(x0.spec().clone(), b.clone())?;
    let result = solve(method, &problem, x0.values(), reg, cfg, &mut |_, _| {})?;
    let image = x0.with_values(result.x_final.clone())?;
    Ok((image, result))
}
