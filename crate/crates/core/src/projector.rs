//! Ray-driven projector with exact intersection lengths and its matched adjoint.
//!
//! Every ray is a segment `p0 -> p1`. The segment is clipped to the grid box,
//! then walked through the voxel planes it crosses (Siddon traversal): the
//! parametric crossing positions of the three plane families are merged in
//! increasing order, and each interval between consecutive crossings is
//! charged to the voxel containing its midpoint. The forward and adjoint
//! operators call the same traversal, so they use identical weights.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{AngleSubset, ScanGeometry};
use crate::grid::{GridSpec, ImageGrid};

/// Largest `rows * cols` that [`Projector::assemble_dense`] will build.
pub const DENSE_LIMIT: usize = 1_000_000;

// Angles whose adjoint contributions are accumulated in parallel before being
// summed in order. Fixed so results do not depend on the thread count.
const ADJOINT_GROUP: usize = 8;

/// Walk the voxels crossed by segment `p0 -> p1`, calling `visit(voxel, length)`.
pub fn trace_segment(grid: &GridSpec, p0: [f64; 3], p1: [f64; 3], mut visit: impl FnMut(usize, f64)) {
    let lo = grid.origin;
    let hi = grid.upper_corner();
    let d = [p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]];
    let seg_len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if seg_len == 0.0 {
        return;
    }

    let mut t_min = 0.0_f64;
    let mut t_max = 1.0_f64;
    for a in 0..3 {
        if d[a] == 0.0 {
            // half-open box: a ray on the upper face belongs to no voxel
            if p0[a] < lo[a] || p0[a] >= hi[a] {
                return;
            }
        } else {
            let t1 = (lo[a] - p0[a]) / d[a];
            let t2 = (hi[a] - p0[a]) / d[a];
            t_min = t_min.max(t1.min(t2));
            t_max = t_max.min(t1.max(t2));
        }
    }
    if t_min >= t_max {
        return;
    }

    // Per-axis plane walkers: next plane index, its step, and the parameter of that plane.
    let mut next_t = [f64::INFINITY; 3];
    let mut plane = [0_i64; 3];
    let mut step = [0_i64; 3];
    let at = |a: usize, t: f64| p0[a] + t * d[a];
    let plane_t = |a: usize, k: i64| (lo[a] + k as f64 * grid.voxel_size[a] - p0[a]) / d[a];
    for a in 0..3 {
        if d[a] == 0.0 {
            continue;
        }
        let rel = (at(a, t_min) - lo[a]) / grid.voxel_size[a];
        if d[a] > 0.0 {
            step[a] = 1;
            plane[a] = rel.floor() as i64 + 1;
        } else {
            step[a] = -1;
            plane[a] = rel.ceil() as i64 - 1;
        }
        next_t[a] = plane_t(a, plane[a]);
    }

    let n = grid.dims;
    let mut t_cur = t_min;
    loop {
        let (axis, t_next) = (0..3)
            .map(|a| (a, next_t[a]))
            .fold((3, t_max), |best, cand| if cand.1 < best.1 { cand } else { best });
        let t_end = t_next.min(t_max);
        if t_end > t_cur {
            let tm = 0.5 * (t_cur + t_end);
            let mut idx = [0usize; 3];
            for a in 0..3 {
                let r = ((at(a, tm) - lo[a]) / grid.voxel_size[a]).floor();
                idx[a] = (r.max(0.0) as usize).min(n[a] - 1);
            }
            visit(grid.index(idx[0], idx[1], idx[2]), (t_end - t_cur) * seg_len);
            t_cur = t_end;
        }
        if axis == 3 {
            break;
        }
        plane[axis] += step[axis];
        next_t[axis] = if plane[axis] < 0 || plane[axis] > n[axis] as i64 {
            f64::INFINITY
        } else {
            plane_t(axis, plane[axis])
        };
    }
}

/// A grid paired with a compatible scan geometry: the discrete operator `A`.
#[derive(Clone, Debug)]
pub struct Projector {
    grid: GridSpec,
    geom: ScanGeometry,
}

impl Projector {
    pub fn new(grid: GridSpec, geom: ScanGeometry) -> Result<Self> {
        geom.validate()?;
        geom.check_compatible(&grid)?;
        Ok(Projector { grid, geom })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn geometry(&self) -> &ScanGeometry {
        &self.geom
    }

    /// Image dimension `d`.
    pub fn n_voxels(&self) -> usize {
        self.grid.len()
    }

    pub fn n_p(&self) -> usize {
        self.geom.n_p()
    }

    pub fn n_theta(&self) -> usize {
        self.geom.n_theta()
    }

    /// Sparse row of `A` for ray `(angle, det)`: `(voxel, intersection length)`
    /// pairs in traversal order.
    pub fn ray_weights(&self, angle: usize, det: usize) -> Vec<(usize, f64)> {
        let (p0, p1) = self.geom.ray(&self.grid, angle, det);
        let mut row = Vec::new();
        trace_segment(&self.grid, p0, p1, |v, w| row.push((v, w)));
        row
    }

    fn ray_sum(&self, angle: usize, det: usize, x: &[f64]) -> f64 {
        let (p0, p1) = self.geom.ray(&self.grid, angle, det);
        let mut acc = 0.0;
        trace_segment(&self.grid, p0, p1, |v, w| acc += w * x[v]);
        acc
    }

    fn smear_angle(&self, angle: usize, y: &[f64], out: &mut [f64]) {
        for (det, &val) in y.iter().enumerate() {
            if val == 0.0 {
                continue;
            }
            let (p0, p1) = self.geom.ray(&self.grid, angle, det);
            trace_segment(&self.grid, p0, p1, |v, w| out[v] += w * val);
        }
    }

    /// `A_S x`: one block of `n_p` readings per angle of `subset`, in subset order.
    pub fn forward(&self, x: &[f64], subset: &AngleSubset) -> Result<Vec<f64>> {
        if x.len() != self.n_voxels() {
            return Err(Error::config(format!(
                "image has {} values, operator expects {}",
                x.len(),
                self.n_voxels()
            )));
        }
        subset.check(self.n_theta())?;
        let n_p = self.n_p();
        let mut out = vec![0.0; subset.len() * n_p];
        out.par_chunks_mut(n_p)
            .zip(subset.indices().par_iter())
            .for_each(|(block, &angle)| {
                for (det, slot) in block.iter_mut().enumerate() {
                    *slot = self.ray_sum(angle, det, x);
                }
            });
        Ok(out)
    }

    /// `A_S^T y`, using exactly the weights of [`Projector::forward`].
    pub fn adjoint(&self, y: &[f64], subset: &AngleSubset) -> Result<Vec<f64>> {
        subset.check(self.n_theta())?;
        let n_p = self.n_p();
        if y.len() != subset.len() * n_p {
            return Err(Error::arg(format!(
                "sinogram block has {} values, expected {} ({} angles x {} cells)",
                y.len(),
                subset.len() * n_p,
                subset.len(),
                n_p
            )));
        }
        let d = self.n_voxels();
        let mut out = vec![0.0; d];
        let blocks: Vec<(usize, &[f64])> = subset.iter().zip(y.chunks(n_p)).collect();
        for group in blocks.chunks(ADJOINT_GROUP) {
            let partials: Vec<Vec<f64>> = group
                .par_iter()
                .map(|&(angle, block)| {
                    let mut img = vec![0.0; d];
                    self.smear_angle(angle, block, &mut img);
                    img
                })
                .collect();
            for img in &partials {
                for (o, v) in out.iter_mut().zip(img) {
                    *o += v;
                }
            }
        }
        Ok(out)
    }

    /// Power-iteration estimate of `||A||^2`, the Lipschitz constant of the full
    /// fidelity gradient. Starts from the all-ones image, so it is deterministic.
    /// The estimate approaches the true value from below.
    pub fn norm_sq_estimate(&self, iters: usize) -> Result<f64> {
        let all = AngleSubset::full(self.n_theta());
        let d = self.n_voxels();
        let mut v = vec![1.0 / (d as f64).sqrt(); d];
        let mut lambda = 0.0;
        for _ in 0..iters.max(1) {
            let w = self.adjoint(&self.forward(&v, &all)?, &all)?;
            let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Ok(0.0);
            }
            lambda = norm;
            v = w.into_iter().map(|a| a / norm).collect();
        }
        Ok(lambda)
    }

    /// Explicit `n x d` matrix of the full operator. Test oracle only.
    pub fn assemble_dense(&self) -> Result<DenseMatrix> {
        let rows = self.geom.n_measurements();
        let cols = self.n_voxels();
        if rows.saturating_mul(cols) > DENSE_LIMIT {
            return Err(Error::SizeGuard {
                rows,
                cols,
                limit: DENSE_LIMIT,
            });
        }
        let n_p = self.n_p();
        let mut m = DenseMatrix::zeros(rows, cols);
        for angle in 0..self.n_theta() {
            for det in 0..n_p {
                let r = angle * n_p + det;
                for (v, w) in self.ray_weights(angle, det) {
                    m.data[r * cols + v] += w;
                }
            }
        }
        Ok(m)
    }
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::arg("dense matrix data has the wrong length"));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn tmatvec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (r, &yr) in y.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += a * yr;
            }
        }
        out
    }
}

/// `A_S x` for an image.
pub fn forward_project(x: &ImageGrid, geom: &ScanGeometry, subset: &AngleSubset) -> Result<Vec<f64>> {
    Projector::new(x.spec().clone(), geom.clone())?.forward(x.values(), subset)
}

/// `A_S^T y` on `grid`.
pub fn back_project(
    y: &[f64],
    grid: &GridSpec,
    geom: &ScanGeometry,
    subset: &AngleSubset,
) -> Result<ImageGrid> {
    let proj = Projector::new(grid.clone(), geom.clone())?;
    let values = proj.adjoint(y, subset)?;
    ImageGrid::new(grid.clone(), values)
}
