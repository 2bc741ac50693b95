//! Command pipeline behind the `stomo` binary.
//!
//! Every verb is also a plain function so it can be driven from code. Exit codes:
//! 0 success, 2 configuration error, 3 solver abort (line-search backtrack cap),
//! 4 I/O or file-format error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{
    ExperimentConfig, GeometryChoice, GeometrySection, NoiseSection, OutputSection, PhantomChoice, PhantomSection,
    SolverSection,
};
use crate::container;
use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::metrics::{relative_error, MetricsReport};
use crate::objective::TomoProblem;
use crate::simulation::{make_phantom, simulate_phantom_scan, NoiseKind};
use crate::solvers::{solve, write_trace_csv, ClockKind, Method, SolverConfig, SolverResult, Termination};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER_ABORT: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Environment variable consulted when `--threads` is absent.
pub const THREADS_ENV: &str = "STOMO_THREADS";

/// Header of the checkpoint comparison table.
pub const TABLE_HEADER: &str = "method,checkpoint_s,re,psnr_db,ssim";
pub const RE_VS_TIME_HEADER: &str = "method,elapsed_s,re";

/// Default `case` budget in work units (one unit is one full-data gradient).
pub const CASE_BUDGET: f64 = 15.0;

/// Power iterations used to estimate `||A||^2` for the fixed FB step.
const POWER_ITERS: usize = 30;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Argument(_) | Error::SizeGuard { .. } => EXIT_CONFIG,
        Error::Io(_) | Error::Format(_) => EXIT_IO,
    }
}

#[derive(Debug, Parser)]
#[command(name = "stomo", version, about = "Sparse-view tomography with FB-LISA")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads for the projector (falls back to STOMO_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render the phantom and write it with its simulated sinogram.
    Simulate(RunArgs),
    /// Reconstruct from a previously simulated sinogram.
    Reconstruct(RunArgs),
    /// Compare a reconstruction with a ground truth.
    Evaluate(EvalArgs),
    /// Run a built-in experiment: simulate, run every solver, tabulate.
    Case(CaseArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides every seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub recon: PathBuf,
    pub gt: PathBuf,
    /// Where `metrics.txt` and `metrics.csv` go; defaults to the reconstruction's directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CaseArgs {
    /// 1: 36 angles noiseless, 2: 36 angles 2% noise, 3: 72 angles 2% noise.
    pub id: u32,
    #[arg(long, value_enum, default_value_t = Scale::Desk)]
    pub scale: Scale,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Budget per solver in work units.
    #[arg(long, default_value_t = CASE_BUDGET)]
    pub budget: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scale {
    /// 128x128 parallel beam.
    Desk,
    /// 48^3 cone beam.
    Small3d,
}

impl Scale {
    fn name(self) -> &'static str {
        match self {
            Scale::Desk => "desk",
            Scale::Small3d => "small3d",
        }
    }
}

/// Resolve the worker count: `--threads`, then `STOMO_THREADS`, then rayon's default.
pub fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) if !v.trim().is_empty() => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::config(format!("{THREADS_ENV}={v:?} is not a thread count")))?,
            ),
            _ => None,
        },
    };
    if n == Some(0) {
        return Err(Error::config("thread count must be >= 1"));
    }
    Ok(n)
}

/// What a verb produced: console text and the process exit code.
#[derive(Debug)]
pub struct Outcome {
    pub summary: String,
    pub code: i32,
}

/// Parse-independent entry point used by the binary.
pub fn run(cli: Cli) -> Result<Outcome> {
    let threads = thread_count(cli.threads)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::config(format!("cannot start thread pool: {e}")))?;
    pool.install(|| dispatch(cli.command))
}

fn dispatch(command: Command) -> Result<Outcome> {
    match command {
        Command::Simulate(a) => {
            let (cfg, out) = load_run(&a)?;
            let summary = cmd_simulate(&cfg, &out)?;
            Ok(Outcome { summary, code: EXIT_OK })
        }
        Command::Reconstruct(a) => {
            let (cfg, out) = load_run(&a)?;
            let r = cmd_reconstruct(&cfg, &out)?;
            let code = match r.termination {
                Termination::BacktrackCapHit => EXIT_SOLVER_ABORT,
                _ => EXIT_OK,
            };
            Ok(Outcome { summary: r.summary, code })
        }
        Command::Evaluate(a) => {
            let out = match a.out_dir {
                Some(d) => d,
                None => a.recon.parent().map(Path::to_path_buf).unwrap_or_default(),
            };
            let report = cmd_evaluate(&a.recon, &a.gt, Some(&out))?;
            Ok(Outcome {
                summary: report.to_key_values(),
                code: EXIT_OK,
            })
        }
        Command::Case(a) => {
            let out = a
                .out_dir
                .unwrap_or_else(|| PathBuf::from(format!("case{}_{}", a.id, a.scale.name())));
            let r = cmd_case(a.id, a.scale, a.seed, a.budget, &out)?;
            let code = if r.aborted.is_empty() { EXIT_OK } else { EXIT_SOLVER_ABORT };
            Ok(Outcome { summary: r.summary, code })
        }
    }
}

fn load_run(a: &RunArgs) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.reseed(seed);
    }
    let out = a.out_dir.clone().unwrap_or_else(|| cfg.outputs.dir.clone());
    Ok((cfg, out))
}

fn noise_label(kind: &NoiseKind) -> String {
    match kind {
        NoiseKind::None => "none".into(),
        NoiseKind::Gaussian { rel_std } => format!("gaussian(rel_std={rel_std})"),
    }
}

/// Render the phantom and its sinogram into `out_dir`. Returns the one-line summary.
pub fn cmd_simulate(cfg: &ExperimentConfig, out_dir: &Path) -> Result<String> {
    let spec = cfg.phantom.spec();
    let geom = cfg.scan_geometry()?;
    let phantom = make_phantom(&spec)?;
    let noise = cfg.noise_spec()?;
    let sino = simulate_phantom_scan(&spec, &geom, &noise, cfg.phantom.oversample)?;
    fs::create_dir_all(out_dir)?;
    container::save_image(out_dir.join(&cfg.outputs.phantom), &phantom)?;
    container::save_sinogram(out_dir.join(&cfg.outputs.sinogram), &sino)?;
    let [nx, ny, nz] = spec.dims;
    Ok(format!(
        "simulated {nx}x{ny}x{nz} phantom, n_theta={}, noise={}, seed={}",
        geom.n_theta(),
        noise_label(&noise.kind),
        noise.seed
    ))
}

/// Metrics of the iterate current at a clock mark.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub mark: f64,
    pub report: MetricsReport,
}

/// A solver run plus metrics at clock marks and the RE after every iteration.
#[derive(Debug)]
pub struct TrackedRun {
    pub result: SolverResult,
    pub checkpoints: Vec<Checkpoint>,
    /// `(elapsed, RE)` starting with the initial iterate at time 0.
    pub re_curve: Vec<(f64, f64)>,
}

/// Run `method` and score, for every mark, the last iterate whose clock reading
/// does not exceed it. Without a ground truth only the solver result is filled.
pub fn run_tracked(
    method: Method,
    problem: &TomoProblem,
    x0: &ImageGrid,
    reg: &crate::regularization::Regularizer,
    cfg: &SolverConfig,
    marks: &[f64],
    gt: Option<&ImageGrid>,
) -> Result<TrackedRun> {
    let mut snaps: Vec<Vec<f64>> = vec![x0.values().to_vec(); marks.len()];
    let mut re_curve = Vec::new();
    let mut failure = None;
    if let Some(gt) = gt {
        re_curve.push((0.0, relative_error(x0, gt)?));
    }
    let result = {
        let mut observe = |rec: &crate::solvers::IterationRecord, x: &[f64]| {
            for (mark, snap) in marks.iter().zip(snaps.iter_mut()) {
                if rec.elapsed <= *mark {
                    snap.copy_from_slice(x);
                }
            }
            if let Some(gt) = gt {
                let re = x0.with_values(x.to_vec()).and_then(|img| relative_error(&img, gt));
                match re {
                    Ok(re) => re_curve.push((rec.elapsed, re)),
                    Err(e) => failure = Some(e),
                }
            }
        };
        solve(method, problem, x0.values(), reg, cfg, &mut observe)?
    };
    if let Some(e) = failure {
        return Err(e);
    }
    let mut checkpoints = Vec::new();
    if let Some(gt) = gt {
        for (mark, snap) in marks.iter().zip(snaps) {
            let img = x0.with_values(snap)?;
            checkpoints.push(Checkpoint {
                mark: *mark,
                report: MetricsReport::evaluate(&img, gt)?,
            });
        }
    }
    Ok(TrackedRun {
        result,
        checkpoints,
        re_curve,
    })
}

/// Solver settings for `method`; FB without an explicit step uses `1/L` from power iteration.
pub fn solver_settings(section: &SolverSection, problem: &TomoProblem) -> Result<SolverConfig> {
    let mut cfg = section.solver_config();
    if section.name == Method::Fb && (section.alpha0.is_none() || section.lipschitz_estimate.is_none()) {
        let l = problem.projector().norm_sq_estimate(POWER_ITERS)?;
        if section.lipschitz_estimate.is_none() {
            cfg.lipschitz_estimate = Some(l);
        }
        if section.alpha0.is_none() && l > 0.0 {
            cfg.alpha0 = 1.0 / l;
        }
    }
    Ok(cfg)
}

fn table_rows(method: Method, checkpoints: &[Checkpoint], out: &mut String) {
    for c in checkpoints {
        let _ = writeln!(out, "{},{},{}", method.name(), c.mark, c.report.csv_row());
    }
}

#[derive(Debug)]
pub struct ReconstructOutcome {
    pub summary: String,
    pub termination: Termination,
    pub image: ImageGrid,
}

/// Reconstruct from the sinogram in `out_dir`, writing the volume, the trace and,
/// when the phantom file is present and checkpoints are configured, `checkpoints.csv`.
pub fn cmd_reconstruct(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ReconstructOutcome> {
    let sino = container::load_sinogram(out_dir.join(&cfg.outputs.sinogram))?;
    let grid = cfg.grid()?;
    let problem = TomoProblem::new(grid.clone(), sino)?;
    let reg = cfg.solver.regularizer()?;
    let scfg = solver_settings(&cfg.solver, &problem)?;
    let x0 = ImageGrid::zeros(grid)?;
    let phantom_path = out_dir.join(&cfg.outputs.phantom);
    let gt = if !cfg.outputs.checkpoints.is_empty() && phantom_path.exists() {
        Some(container::load_image(&phantom_path)?)
    } else {
        None
    };
    let method = cfg.solver.name;
    let run = run_tracked(method, &problem, &x0, &reg, &scfg, &cfg.outputs.checkpoints, gt.as_ref())?;
    let image = x0.with_values(run.result.x_final.clone())?;
    container::save_image(out_dir.join(&cfg.outputs.volume), &image)?;
    let mut trace = Vec::new();
    write_trace_csv(&mut trace, &run.result.trace)?;
    fs::write(out_dir.join(&cfg.outputs.trace), trace)?;
    if gt.is_some() {
        let mut table = format!("{TABLE_HEADER}\n");
        table_rows(method, &run.checkpoints, &mut table);
        fs::write(out_dir.join("checkpoints.csv"), table)?;
    }
    let last = run.result.trace.last();
    let summary = format!(
        "{method}: {} iterations, {} epochs, final batch {}, elapsed {:.4}, termination {:?}",
        run.result.trace.len(),
        last.map_or(0, |r| r.t),
        last.map_or(0, |r| r.batch_size),
        last.map_or(0.0, |r| r.elapsed),
        run.result.termination
    );
    Ok(ReconstructOutcome {
        summary,
        termination: run.result.termination,
        image,
    })
}

/// Score `recon` against `gt`; with `out_dir`, also write `metrics.txt` and `metrics.csv`.
pub fn cmd_evaluate(recon: &Path, gt: &Path, out_dir: Option<&Path>) -> Result<MetricsReport> {
    let x = container::load_image(recon)?;
    let x_gt = container::load_image(gt)?;
    let report = MetricsReport::evaluate(&x, &x_gt)?;
    if let Some(dir) = out_dir {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
        fs::write(dir.join("metrics.txt"), report.to_key_values())?;
        fs::write(dir.join("metrics.csv"), report.to_csv())?;
    }
    Ok(report)
}

/// The built-in experiment configurations. The solver section is FB-LISA's;
/// `cmd_case` swaps in the other methods with the same settings.
pub fn case_config(id: u32, scale: Scale, seed: u64) -> Result<ExperimentConfig> {
    let (n_theta, rel_std, mu) = match id {
        1 => (36, 0.0, 2.0),
        2 => (36, 0.02, 1.0),
        3 => (72, 0.02, 1.0),
        _ => return Err(Error::config(format!("unknown case {id} (expected 1, 2 or 3)"))),
    };
    let (kind, dims, geometry) = match scale {
        Scale::Desk => (PhantomChoice::SheppLogan2d, [128, 128, 1], GeometryChoice::Parallel2D),
        Scale::Small3d => (PhantomChoice::SheppLogan3d, [48, 48, 48], GeometryChoice::ConeBeam3D),
    };
    let mut solver = SolverSection::new(Method::FbLisa);
    solver.mu = mu;
    solver.seed = seed;
    let cfg = ExperimentConfig {
        phantom: PhantomSection::new(kind, dims),
        geometry: GeometrySection {
            kind: geometry,
            n_theta,
            det_cols: None,
            det_rows: None,
            detector_spacing: None,
            source_distance: None,
            detector_distance: None,
        },
        noise: if rel_std > 0.0 {
            NoiseSection::gaussian(rel_std, seed)
        } else {
            NoiseSection { seed, ..NoiseSection::default() }
        },
        solver,
        outputs: OutputSection::default(),
    };
    Ok(cfg)
}

#[derive(Debug)]
pub struct CaseOutcome {
    pub summary: String,
    /// Comparison table text, header included.
    pub table: String,
    /// Methods that stopped on the backtrack cap.
    pub aborted: Vec<Method>,
}

/// Simulate case `id`, run every solver under the same work budget, and write
/// `config.toml`, the phantom and sinogram, `recon_<method>.stomo`,
/// `trace_<method>.csv`, `table.csv` and `re_vs_time.csv` into `out_dir`.
pub fn cmd_case(id: u32, scale: Scale, seed: u64, budget: f64, out_dir: &Path) -> Result<CaseOutcome> {
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(Error::config(format!("budget must be positive, got {budget}")));
    }
    let mut cfg = case_config(id, scale, seed)?;
    cfg.solver.clock = ClockKind::Work;
    cfg.solver.time_budget = Some(budget);
    cfg.solver.epochs = Some(1_000_000);
    cfg.outputs.checkpoints = vec![budget / 3.0, 2.0 * budget / 3.0, budget];
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("config.toml"), cfg.to_toml()?)?;
    let sim = cmd_simulate(&cfg, out_dir)?;

    let gt = container::load_image(out_dir.join(&cfg.outputs.phantom))?;
    let sino = container::load_sinogram(out_dir.join(&cfg.outputs.sinogram))?;
    let grid = cfg.grid()?;
    let problem = TomoProblem::new(grid.clone(), sino)?;
    let x0 = ImageGrid::zeros(grid)?;

    let mut table = format!("{TABLE_HEADER}\n");
    let mut curve = format!("{RE_VS_TIME_HEADER}\n");
    let mut aborted = Vec::new();
    let mut summary = format!("case {id} ({}): {sim}\n", scale.name());
    summary.push_str(&table);
    for method in Method::ALL {
        let mut section = cfg.solver.clone();
        section.name = method;
        let reg = section.regularizer()?;
        let scfg = solver_settings(&section, &problem)?;
        let run = run_tracked(method, &problem, &x0, &reg, &scfg, &cfg.outputs.checkpoints, Some(&gt))?;
        let image = x0.with_values(run.result.x_final.clone())?;
        container::save_image(out_dir.join(format!("recon_{}.stomo", method.name())), &image)?;
        let mut trace = Vec::new();
        write_trace_csv(&mut trace, &run.result.trace)?;
        fs::write(out_dir.join(format!("trace_{}.csv", method.name())), trace)?;
        let mut rows = String::new();
        table_rows(method, &run.checkpoints, &mut rows);
        table.push_str(&rows);
        summary.push_str(&rows);
        for (t, re) in &run.re_curve {
            let _ = writeln!(curve, "{},{t},{re}", method.name());
        }
        if run.result.termination == Termination::BacktrackCapHit {
            aborted.push(method);
        }
    }
    fs::write(out_dir.join("table.csv"), &table)?;
    fs::write(out_dir.join("re_vs_time.csv"), curve)?;
    Ok(CaseOutcome {
        summary: summary.trim_end().to_string(),
        table,
        aborted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::config("x")), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Format("x".into())), EXIT_IO);
        let io = std::io::Error::new(std::io::ErrorKind::NotFound, "x");
        assert_eq!(exit_code(&Error::Io(io)), EXIT_IO);
    }

    #[test]
    fn case_configs() {
        let c = case_config(3, Scale::Desk, 5).unwrap();
        assert_eq!(c.geometry.n_theta, 72);
        assert_eq!(c.solver.mu, 1.0);
        assert_eq!(c.noise.seed, 5);
        assert!(matches!(case_config(4, Scale::Desk, 0), Err(Error::Config(_))));
        let c = case_config(1, Scale::Small3d, 0).unwrap();
        assert_eq!(c.phantom.dims, [48, 48, 48]);
        c.scan_geometry().unwrap();
    }

    #[test]
    fn thread_flag_wins() {
        assert_eq!(thread_count(Some(3)).unwrap(), Some(3));
        assert!(thread_count(Some(0)).is_err());
    }

    #[test]
    fn parses_verbs() {
        let cli = Cli::try_parse_from(["stomo", "case", "2", "--scale", "small3d", "--seed", "7", "--threads", "2"]).unwrap();
        assert_eq!(cli.threads, Some(2));
        match cli.command {
            Command::Case(a) => {
                assert_eq!((a.id, a.scale, a.seed), (2, Scale::Small3d, 7));
            }
            other => panic!("{other:?}"),
        }
        assert!(Cli::try_parse_from(["stomo", "simulate"]).is_err());
    }
}
