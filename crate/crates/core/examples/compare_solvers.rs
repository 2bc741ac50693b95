//! FB-LISA against fixed-batch proxsgd and fixed-step FB on a desk-scale case,
//! 15 epochs each, several sampling seeds. Reports RE after 5 and 15 epochs.
//!
//! ```text
//! cargo run --release --example compare_solvers -- [n_seeds] [case]
//! ```

use stomo::cli::{case_config, solver_settings, Scale};
use stomo::metrics::relative_error;
use stomo::objective::TomoProblem;
use stomo::simulation::{make_phantom, simulate_phantom_scan};
use stomo::solvers::{solve, IterationRecord, Method};
use stomo::ImageGrid;

const EPOCHS: usize = 15;

fn main() -> stomo::Result<()> {
    let n_seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let case: u32 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let cfg = case_config(case, Scale::Desk, 0)?;
    let spec = cfg.phantom.spec();
    let gt = make_phantom(&spec)?;
    let sino = simulate_phantom_scan(&spec, &cfg.scan_geometry()?, &cfg.noise_spec()?, 1)?;
    let problem = TomoProblem::new(gt.spec().clone(), sino)?;
    let reg = cfg.solver.regularizer()?;
    let x0 = ImageGrid::zeros(gt.spec().clone())?;

    println!("method,seed,re_epoch5,re_epoch15,iterations,final_batch");
    for method in Method::ALL {
        let seeds = if method == Method::Fb { 1 } else { n_seeds };
        for seed in 0..seeds {
            let mut section = cfg.solver.clone();
            section.name = method;
            section.seed = seed;
            section.epochs = Some(EPOCHS);
            let scfg = solver_settings(&section, &problem)?;
            let mut at_third = x0.values().to_vec();
            let mut observe = |r: &IterationRecord, x: &[f64]| {
                if r.t <= EPOCHS / 3 {
                    at_third.copy_from_slice(x);
                }
            };
            let res = solve(method, &problem, x0.values(), &reg, &scfg, &mut observe)?;
            let re_third = relative_error(&x0.with_values(at_third)?, &gt)?;
            let re_final = relative_error(&x0.with_values(res.x_final.clone())?, &gt)?;
            println!(
                "{method},{seed},{re_third:.5},{re_final:.5},{},{}",
                res.trace.len(),
                res.trace.last().map_or(0, |r| r.batch_size)
            );
        }
    }
    Ok(())
}
