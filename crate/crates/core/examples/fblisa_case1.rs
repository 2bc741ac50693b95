//! One FB-LISA reconstruction of the noiseless 36-angle desk problem. Prints
//! progress and writes the trace CSV and the reconstruction.
//!
//! ```text
//! cargo run --release --example fblisa_case1 -- [epochs]
//! ```

use stomo::cli::{case_config, Scale};
use stomo::container;
use stomo::metrics::MetricsReport;
use stomo::simulation::{make_phantom, simulate_phantom_scan};
use stomo::solvers::{write_trace_csv, Telemetry};
use stomo::{reconstruct, ImageGrid, Method};

fn main() -> stomo::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(15);
    let cfg = case_config(1, Scale::Desk, 0)?;
    let spec = cfg.phantom.spec();
    let gt = make_phantom(&spec)?;
    let sino = simulate_phantom_scan(&spec, &cfg.scan_geometry()?, &cfg.noise_spec()?, 1)?;

    let mut solver = cfg.solver.solver_config();
    solver.epochs = epochs;
    solver.telemetry = Telemetry::Full;
    let x0 = ImageGrid::zeros(gt.spec().clone())?;
    let (x, result) = reconstruct(Method::FbLisa, &sino, &x0, &cfg.solver.regularizer()?, &solver)?;

    for r in result.trace.iter().filter(|r| r.k % 10 == 0) {
        println!(
            "k {:>3} epoch {:>2} batch {:>2} alpha {:.2e} backtracks {} F {:.4e}",
            r.k,
            r.t,
            r.batch_size,
            r.alpha_accepted,
            r.backtracks,
            r.full_objective.unwrap_or(f64::NAN)
        );
    }
    print!("{}", MetricsReport::evaluate(&x, &gt)?.to_key_values());

    write_trace_csv(std::fs::File::create("fblisa_case1_trace.csv")?, &result.trace)?;
    container::save_image("fblisa_case1.stomo", &x)?;
    Ok(())
}
