//! A small 3D cone-beam reconstruction: 32^3 Shepp-Logan, 36 angles, 2% noise.
//!
//! ```text
//! cargo run --release --example cone_beam_small3d
//! ```

use stomo::metrics::MetricsReport;
use stomo::simulation::{make_angles, make_phantom, simulate_phantom_scan, NoiseSpec, PhantomSpec};
use stomo::{reconstruct, ImageGrid, Method, Regularizer, ScanGeometry, SolverConfig};

fn main() -> stomo::Result<()> {
    let spec = PhantomSpec::shepp_logan_3d(32);
    let gt = make_phantom(&spec)?;
    let geom = ScanGeometry::cone_covering(gt.spec(), make_angles(36), 4.0)?;
    println!(
        "detector {} x {}, {:?}",
        geom.det_rows(),
        geom.det_cols,
        geom.kind
    );
    let sino = simulate_phantom_scan(&spec, &geom, &NoiseSpec::gaussian(0.02, 0), 1)?;

    let cfg = SolverConfig {
        epochs: 10,
        ..SolverConfig::default()
    };
    let x0 = ImageGrid::zeros(gt.spec().clone())?;
    let (x, res) = reconstruct(Method::FbLisa, &sino, &x0, &Regularizer::l1_nonneg(1.0)?, &cfg)?;
    println!("{} iterations, batch sizes {:?}", res.trace.len(), {
        let mut b = res.batch_sizes();
        b.dedup();
        b
    });
    print!("{}", MetricsReport::evaluate(&x, &gt)?.to_key_values());
    Ok(())
}
