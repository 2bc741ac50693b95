#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stomo::cli::{case_config, Scale};
use stomo::simulation::{make_angles, make_phantom, simulate_phantom_scan};
use stomo::*;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Parallel-beam problem on an `n x n` unit grid with `n_theta` angles and
/// data `b = A x_true` for a random nonnegative `x_true`.
pub fn parallel_problem(n: usize, n_theta: usize, seed: u64) -> (TomoProblem, Vec<f64>) {
    let grid = GridSpec::unit(n, n, 1).unwrap();
    let geom = ScanGeometry::parallel_covering(&grid, make_angles(n_theta)).unwrap();
    let proj = Projector::new(grid.clone(), geom.clone()).unwrap();
    let mut r = rng(seed);
    let x_true = uniform_vec(&mut r, grid.len(), 0.0, 1.0);
    let b = proj.forward(&x_true, &AngleSubset::full(n_theta)).unwrap();
    let sino = Sinogram::new(geom, b).unwrap();
    (TomoProblem::new(grid, sino).unwrap(), x_true)
}

/// The 4x4 dense test problem: 6 angles, explicit matrix.
pub fn dense_4x4() -> (TomoProblem, DenseBlockProblem) {
    let (tomo, _) = parallel_problem(4, 6, 11);
    let dense = DenseBlockProblem::from_tomo(&tomo).unwrap();
    (tomo, dense)
}

pub fn to_nalgebra(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows, m.cols, &m.data)
}

/// Largest squared singular value of the rows of `m` belonging to `blocks`
/// (blocks of `block_rows` consecutive rows).
pub fn sigma_max_sq(m: &DenseMatrix, blocks: &[usize], block_rows: usize) -> f64 {
    let mut data = Vec::with_capacity(blocks.len() * block_rows * m.cols);
    for &b in blocks {
        for r in b * block_rows..(b + 1) * block_rows {
            data.extend_from_slice(m.row(r));
        }
    }
    let sub = DMatrix::from_row_slice(blocks.len() * block_rows, m.cols, &data);
    let s = sub.singular_values();
    let top = s.iter().cloned().fold(0.0, f64::max);
    top * top
}

/// Lipschitz constant of the gradient of the scaled sub-sampled fidelity on `blocks`.
pub fn subset_lipschitz(m: &DenseMatrix, n_blocks: usize, blocks: &[usize]) -> f64 {
    let block_rows = m.rows / n_blocks;
    n_blocks as f64 / blocks.len() as f64 * sigma_max_sq(m, blocks, block_rows)
}

/// Case 1 at desk scale: ground truth and the noiseless 36-angle problem.
pub fn desk_case1() -> (ImageGrid, TomoProblem, Regularizer) {
    let cfg = case_config(1, Scale::Desk, 0).unwrap();
    let spec = cfg.phantom.spec();
    let gt = make_phantom(&spec).unwrap();
    let sino = simulate_phantom_scan(&spec, &cfg.scan_geometry().unwrap(), &cfg.noise_spec().unwrap(), 1).unwrap();
    let problem = TomoProblem::new(gt.spec().clone(), sino).unwrap();
    (gt, problem, cfg.solver.regularizer().unwrap())
}

/// Brute-force `argmin_u step * R(u) + 0.5 (u - v)^2` on a grid of spacing `h`.
/// Every kind here shrinks toward zero, so the search runs between 0 and `v`.
pub fn brute_prox(reg: &Regularizer, v: f64, step: f64, h: f64) -> f64 {
    let (lo, hi) = if v < 0.0 { (v, 0.0) } else { (0.0, v) };
    let n = ((hi - lo) / h).ceil() as usize;
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=n {
        let u = if i == n { hi } else { lo + i as f64 * h };
        let r = match *reg {
            Regularizer::L1NonNeg { mu } if u >= 0.0 => mu * u,
            Regularizer::L1NonNeg { .. } | Regularizer::NonNeg if u < 0.0 => f64::INFINITY,
            Regularizer::L1 { mu } => mu * u.abs(),
            _ => 0.0,
        };
        let obj = step * r + 0.5 * (u - v) * (u - v);
        if obj < best.0 {
            best = (obj, u);
        }
    }
    best.1
}

/// Direct SSIM: an explicit 11x11 (or 11x11x11) Gaussian window at every pixel,
/// clamped indices at the borders, weighted moments computed about the local mean.
pub fn ssim_reference(x: &ImageGrid, y: &ImageGrid, peak: f64) -> f64 {
    let [nx, ny, nz] = x.spec().dims;
    let g: Vec<f64> = (-5..=5).map(|d: i32| (-(d * d) as f64 / (2.0 * 1.5 * 1.5)).exp()).collect();
    let zr: Vec<i64> = if nz > 1 { (-5..=5).collect() } else { vec![0] };
    let mut wsum = 0.0;
    for &dz in &zr {
        for a in &g {
            for b in &g {
                wsum += a * b * if nz > 1 { g[(dz + 5) as usize] } else { 1.0 };
            }
        }
    }
    let c1 = (0.01 * peak) * (0.01 * peak);
    let c2 = (0.03 * peak) * (0.03 * peak);
    let clamp = |i: i64, n: usize| i.clamp(0, n as i64 - 1) as usize;
    let (xv, yv) = (x.values(), y.values());
    let mut total = 0.0;
    for iz in 0..nz {
        for iy in 0..ny {
            for ix in 0..nx {
                let mut samples = Vec::with_capacity(121 * zr.len());
                for &dz in &zr {
                    for dy in -5i64..=5 {
                        for dx in -5i64..=5 {
                            let w = g[(dx + 5) as usize]
                                * g[(dy + 5) as usize]
                                * if nz > 1 { g[(dz + 5) as usize] } else { 1.0 }
                                / wsum;
                            let idx = (clamp(iz as i64 + dz, nz) * ny + clamp(iy as i64 + dy, ny)) * nx
                                + clamp(ix as i64 + dx, nx);
                            samples.push((w, xv[idx], yv[idx]));
                        }
                    }
                }
                let mx: f64 = samples.iter().map(|(w, a, _)| w * a).sum();
                let my: f64 = samples.iter().map(|(w, _, b)| w * b).sum();
                let vx: f64 = samples.iter().map(|(w, a, _)| w * (a - mx) * (a - mx)).sum();
                let vy: f64 = samples.iter().map(|(w, _, b)| w * (b - my) * (b - my)).sum();
                let cxy: f64 = samples.iter().map(|(w, a, b)| w * (a - mx) * (b - my)).sum();
                total += (2.0 * mx * my + c1) * (2.0 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            }
        }
    }
    total / (nx * ny * nz) as f64
}
