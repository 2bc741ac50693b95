//! RE, PSNR and SSIM of degraded copies of a phantom.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use stomo::metrics::{MetricsReport, METRICS_CSV_HEADER};
use stomo::simulation::{make_phantom, PhantomSpec};

fn main() -> stomo::Result<()> {
    let gt = make_phantom(&PhantomSpec::shepp_logan_2d(128))?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    println!("case,{METRICS_CSV_HEADER}");
    for sigma in [0.0, 0.01, 0.05, 0.2] {
        let values = gt
            .values()
            .iter()
            .map(|v| v + if sigma > 0.0 { Normal::new(0.0, sigma).unwrap().sample(&mut rng) } else { 0.0 })
            .collect();
        let r = MetricsReport::evaluate(&gt.with_values(values)?, &gt)?;
        println!("noise {sigma},{}", r.csv_row());
    }
    let dimmed = gt.with_values(gt.values().iter().map(|v| 0.8 * v).collect())?;
    println!("scaled 0.8,{}", MetricsReport::evaluate(&dimmed, &gt)?.csv_row());
    Ok(())
}
