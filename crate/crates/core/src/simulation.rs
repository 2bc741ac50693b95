//! Synthetic phantoms and simulated scans.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AngleSubset, ScanGeometry, Sinogram};
use crate::grid::{GridSpec, ImageGrid};
use crate::projector::Projector;

/// RNG stream used for measurement noise.
pub const NOISE_STREAM: u64 = 1;

/// `n_theta` equispaced angles in `[0, 2pi)`, starting at 0.
pub fn make_angles(n_theta: usize) -> Vec<f64> {
    (0..n_theta).map(|i| TAU * i as f64 / n_theta as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disk {
    /// World coordinates of the center (x, y).
    pub center: [f64; 2],
    pub radius: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhantomKind {
    #[serde(rename = "shepp_logan_2d")]
    SheppLogan2d,
    #[serde(rename = "shepp_logan_3d")]
    SheppLogan3d,
    /// Sum of uniform disks, extruded along z for volumes.
    Disks { disks: Vec<Disk> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    #[serde(flatten)]
    pub kind: PhantomKind,
    pub dims: [usize; 3],
    #[serde(default = "unit_voxels")]
    pub voxel_size: [f64; 3],
}

fn unit_voxels() -> [f64; 3] {
    [1.0; 3]
}

impl PhantomSpec {
    pub fn shepp_logan_2d(n: usize) -> Self {
        PhantomSpec {
            kind: PhantomKind::SheppLogan2d,
            dims: [n, n, 1],
            voxel_size: unit_voxels(),
        }
    }

    pub fn shepp_logan_3d(n: usize) -> Self {
        PhantomSpec {
            kind: PhantomKind::SheppLogan3d,
            dims: [n, n, n],
            voxel_size: unit_voxels(),
        }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::centered(self.dims, self.voxel_size)
    }

    /// The same object on a grid refined `factor` times along every non-singleton axis.
    pub fn refined(&self, factor: usize) -> Self {
        let mut out = self.clone();
        for a in 0..3 {
            if self.dims[a] > 1 {
                out.dims[a] *= factor;
                out.voxel_size[a] /= factor as f64;
            }
        }
        out
    }
}

// Modified (high-contrast) Shepp-Logan ellipses:
// value, semi-axes a b, center x0 y0, rotation in degrees.
const SHEPP_LOGAN_2D: [[f64; 6]; 10] = [
    [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
    [-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0],
    [-0.2, 0.11, 0.31, 0.22, 0.0, -18.0],
    [-0.2, 0.16, 0.41, -0.22, 0.0, 18.0],
    [0.1, 0.21, 0.25, 0.0, 0.35, 0.0],
    [0.1, 0.046, 0.046, 0.0, 0.1, 0.0],
    [0.1, 0.046, 0.046, 0.0, -0.1, 0.0],
    [0.1, 0.046, 0.023, -0.08, -0.605, 0.0],
    [0.1, 0.023, 0.023, 0.0, -0.606, 0.0],
    [0.1, 0.023, 0.046, 0.06, -0.605, 0.0],
];

// Modified 3D Shepp-Logan ellipsoids:
// value, semi-axes a b c, center x0 y0 z0, Euler angles phi theta psi (degrees).
const SHEPP_LOGAN_3D: [[f64; 10]; 10] = [
    [1.0, 0.69, 0.92, 0.81, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [-0.8, 0.6624, 0.874, 0.78, 0.0, -0.0184, 0.0, 0.0, 0.0, 0.0],
    [-0.2, 0.11, 0.31, 0.22, 0.22, 0.0, 0.0, -18.0, 0.0, 10.0],
    [-0.2, 0.16, 0.41, 0.28, -0.22, 0.0, 0.0, 18.0, 0.0, 10.0],
    [0.1, 0.21, 0.25, 0.41, 0.0, 0.35, -0.15, 0.0, 0.0, 0.0],
    [0.1, 0.046, 0.046, 0.05, 0.0, 0.1, 0.25, 0.0, 0.0, 0.0],
    [0.1, 0.046, 0.046, 0.05, 0.0, -0.1, 0.25, 0.0, 0.0, 0.0],
    [0.1, 0.046, 0.023, 0.05, -0.08, -0.605, 0.0, 0.0, 0.0, 0.0],
    [0.1, 0.023, 0.023, 0.02, 0.0, -0.606, 0.0, 0.0, 0.0, 0.0],
    [0.1, 0.023, 0.046, 0.02, 0.06, -0.605, 0.0, 0.0, 0.0, 0.0],
];

fn shepp_logan_2d_at(x: f64, y: f64) -> f64 {
    SHEPP_LOGAN_2D
        .iter()
        .filter(|e| {
            let (s, c) = e[5].to_radians().sin_cos();
            let dx = x - e[3];
            let dy = y - e[4];
            let u = dx * c + dy * s;
            let v = -dx * s + dy * c;
            (u / e[1]).powi(2) + (v / e[2]).powi(2) <= 1.0
        })
        .map(|e| e[0])
        .sum()
}

fn shepp_logan_3d_at(p: [f64; 3]) -> f64 {
    SHEPP_LOGAN_3D
        .iter()
        .filter(|e| {
            let (sphi, cphi) = e[7].to_radians().sin_cos();
            let (sth, cth) = e[8].to_radians().sin_cos();
            let (spsi, cpsi) = e[9].to_radians().sin_cos();
            let rot = [
                [cpsi * cphi - cth * sphi * spsi, cpsi * sphi + cth * cphi * spsi, spsi * sth],
                [-spsi * cphi - cth * sphi * cpsi, -spsi * sphi + cth * cphi * cpsi, cpsi * sth],
                [sth * sphi, -sth * cphi, cth],
            ];
            let d = [p[0] - e[4], p[1] - e[5], p[2] - e[6]];
            let q: Vec<f64> = rot
                .iter()
                .map(|r| r[0] * d[0] + r[1] * d[1] + r[2] * d[2])
                .collect();
            (q[0] / e[1]).powi(2) + (q[1] / e[2]).powi(2) + (q[2] / e[3]).powi(2) <= 1.0
        })
        .map(|e| e[0])
        .sum()
}

/// Point-sampled phantom at voxel centers. Shepp-Logan coordinates are
/// normalized to `[-1, 1]` over the grid; overlaps summing below zero are clipped.
pub fn make_phantom(spec: &PhantomSpec) -> Result<ImageGrid> {
    let grid = spec.grid()?;
    let [nx, ny, nz] = grid.dims;
    let half = [
        nx as f64 * grid.voxel_size[0] / 2.0,
        ny as f64 * grid.voxel_size[1] / 2.0,
        nz as f64 * grid.voxel_size[2] / 2.0,
    ];
    let needs = |axes: &[usize]| -> Result<()> {
        if axes.iter().any(|&a| grid.dims[a] < 16) {
            return Err(Error::config(format!(
                "Shepp-Logan phantom needs at least 16 voxels per axis, got {:?}",
                grid.dims
            )));
        }
        Ok(())
    };
    match &spec.kind {
        PhantomKind::SheppLogan2d => {
            needs(&[0, 1])?;
            if nz != 1 {
                return Err(Error::config("2D Shepp-Logan phantom needs nz = 1"));
            }
        }
        PhantomKind::SheppLogan3d => needs(&[0, 1, 2])?,
        PhantomKind::Disks { disks } => {
            if disks.iter().any(|d| !(d.radius >= 0.0)) {
                return Err(Error::config("disk radius must be nonnegative"));
            }
        }
    }

    let mut values = vec![0.0; grid.len()];
    for iz in 0..nz {
        for iy in 0..ny {
            for ix in 0..nx {
                let p = grid.voxel_center(ix, iy, iz);
                let v = match &spec.kind {
                    PhantomKind::SheppLogan2d => shepp_logan_2d_at(p[0] / half[0], p[1] / half[1]),
                    PhantomKind::SheppLogan3d => {
                        shepp_logan_3d_at([p[0] / half[0], p[1] / half[1], p[2] / half[2]])
                    }
                    PhantomKind::Disks { disks } => disks
                        .iter()
                        .filter(|d| {
                            let dx = p[0] - d.center[0];
                            let dy = p[1] - d.center[1];
                            dx * dx + dy * dy <= d.radius * d.radius
                        })
                        .map(|d| d.value)
                        .sum(),
                };
                values[grid.index(ix, iy, iz)] = v.max(0.0);
            }
        }
    }
    ImageGrid::new(grid, values)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    /// Zero-mean Gaussian with standard deviation `rel_std * max|A x|`.
    Gaussian { rel_std: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub kind: NoiseKind,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            kind: NoiseKind::None,
            seed: 0,
        }
    }

    pub fn gaussian(rel_std: f64, seed: u64) -> Self {
        NoiseSpec {
            kind: NoiseKind::Gaussian { rel_std },
            seed,
        }
    }
}

/// Add noise to clean data in place.
pub fn add_noise(clean: &mut [f64], noise: &NoiseSpec) -> Result<()> {
    match noise.kind {
        NoiseKind::None => Ok(()),
        NoiseKind::Gaussian { rel_std } => {
            if !(rel_std >= 0.0) || !rel_std.is_finite() {
                return Err(Error::config(format!("noise level must be >= 0, got {rel_std}")));
            }
            let peak = clean.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let sigma = rel_std * peak;
            if sigma == 0.0 {
                return Ok(());
            }
            let normal = Normal::new(0.0, sigma).map_err(|e| Error::config(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
            rng.set_stream(NOISE_STREAM);
            for v in clean.iter_mut() {
                *v += normal.sample(&mut rng);
            }
            Ok(())
        }
    }
}

/// `b = A x` over all angles, plus noise.
pub fn simulate_scan(phantom: &ImageGrid, geom: &ScanGeometry, noise: &NoiseSpec) -> Result<Sinogram> {
    let proj = Projector::new(phantom.spec().clone(), geom.clone())?;
    let mut b = proj.forward(phantom.values(), &AngleSubset::full(geom.n_theta()))?;
    add_noise(&mut b, noise)?;
    Sinogram::new(geom.clone(), b)
}

/// Simulate from the phantom rendered `oversample` times finer than the
/// reconstruction grid, so data and reconstruction do not share a discretization.
pub fn simulate_phantom_scan(
    spec: &PhantomSpec,
    geom: &ScanGeometry,
    noise: &NoiseSpec,
    oversample: usize,
) -> Result<Sinogram> {
    if oversample == 0 {
        return Err(Error::config("oversampling factor must be >= 1"));
    }
    let phantom = make_phantom(&spec.refined(oversample))?;
    simulate_scan(&phantom, geom, noise)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        let a = make_angles(4);
        assert_eq!(a[0], 0.0);
        assert!((a[1] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((a[2] - std::f64::consts::PI).abs() < 1e-15);
        assert!((a[3] - 3.0 * std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        for (n, deg) in [(36, 10.0_f64), (72, 5.0)] {
            let a = make_angles(n);
            for w in a.windows(2) {
                assert!(((w[1] - w[0]).to_degrees() - deg).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn empty_disks_is_zero() {
        let spec = PhantomSpec {
            kind: PhantomKind::Disks { disks: vec![] },
            dims: [8, 8, 1],
            voxel_size: [1.0; 3],
        };
        assert!(make_phantom(&spec).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn disk_area() {
        let r = 50.0;
        let spec = PhantomSpec {
            kind: PhantomKind::Disks {
                disks: vec![Disk {
                    center: [0.0, 0.0],
                    radius: r,
                    value: 1.0,
                }],
            },
            dims: [256, 256, 1],
            voxel_size: [1.0; 3],
        };
        let img = make_phantom(&spec).unwrap();
        let area: f64 = img.values().iter().sum::<f64>() * img.spec().voxel_volume();
        let exact = std::f64::consts::PI * r * r;
        assert!(((area - exact) / exact).abs() < 0.02, "{area} vs {exact}");
    }

    #[test]
    fn shepp_logan_range() {
        let img = make_phantom(&PhantomSpec::shepp_logan_2d(128)).unwrap();
        assert!(img.min() >= 0.0);
        assert!(img.max() <= 1.0);
        assert_eq!(img.max(), 1.0);
        let vol = make_phantom(&PhantomSpec::shepp_logan_3d(24)).unwrap();
        assert!(vol.min() >= 0.0 && vol.max() <= 1.0);
        assert!(vol.values().iter().any(|&v| v > 0.0));
    }

    #[test]
    fn shepp_logan_needs_resolution() {
        assert!(make_phantom(&PhantomSpec::shepp_logan_2d(8)).is_err());
    }

    #[test]
    fn refined_keeps_extent() {
        let s = PhantomSpec::shepp_logan_2d(32).refined(2);
        assert_eq!(s.dims, [64, 64, 1]);
        assert_eq!(s.voxel_size, [0.5, 0.5, 1.0]);
    }
}
