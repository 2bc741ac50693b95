//! The growing mini-batch schedule for 36 angles with the default settings
//! (N0 = 8, eps_k = 0.99^k), and how the constant C changes it.

use stomo::solvers::default_c;
use stomo::{BatchSchedule, SolverConfig};

fn main() -> stomo::Result<()> {
    let n_theta = 36;
    let cfg = SolverConfig::default();
    let sched = BatchSchedule::new(&cfg, n_theta)?;
    println!("default C = {:.6}", default_c(cfg.n0, n_theta, cfg.eps_ratio));
    println!("batch sizes over 30 epochs: {:?}", sched.plan(30));

    for c in [8.0, 12.0, 20.0] {
        let s = BatchSchedule::new(&SolverConfig { c: Some(c), ..cfg.clone() }, n_theta)?;
        println!("C = {c}: {:?}", s.plan(15));
    }
    Ok(())
}
