//! Render a Shepp-Logan phantom, scan it with 36 parallel-beam angles plus 2%
//! noise, and write both to container files.
//!
//! ```text
//! cargo run --example phantom_scan -- [out_dir]
//! ```

use std::path::PathBuf;

use stomo::container;
use stomo::simulation::{make_angles, make_phantom, simulate_phantom_scan, NoiseSpec, PhantomSpec};
use stomo::ScanGeometry;

fn main() -> stomo::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "phantom_scan_out".into()));
    std::fs::create_dir_all(&out)?;

    let spec = PhantomSpec::shepp_logan_2d(128);
    let phantom = make_phantom(&spec)?;
    let geom = ScanGeometry::parallel_covering(phantom.spec(), make_angles(36))?;
    // data from a 2x finer rendering, so the reconstruction grid does not generate its own data
    let sino = simulate_phantom_scan(&spec, &geom, &NoiseSpec::gaussian(0.02, 0), 2)?;

    println!(
        "phantom {:?}, values in [{}, {}]",
        phantom.spec().dims,
        phantom.min(),
        phantom.max()
    );
    println!(
        "sinogram {} angles x {} detector cells, max reading {:.3}",
        geom.n_theta(),
        geom.n_p(),
        sino.values().iter().cloned().fold(f64::MIN, f64::max)
    );

    container::save_image(out.join("phantom.stomo"), &phantom)?;
    container::save_sinogram(out.join("sinogram.stomo"), &sino)?;
    let back = container::load_sinogram(out.join("sinogram.stomo"))?;
    assert_eq!(back.values(), sino.values());
    println!("wrote {}", out.display());
    Ok(())
}
