//! Angle-block least-squares fidelity and its sub-sampled estimates.
//!
//! For a mini-batch `S` of `N` angles out of `n_theta`,
//! `f_S(x) = n_theta / (2N) * ||A_S x - b_S||^2` with gradient
//! `n_theta / N * A_S^T (A_S x - b_S)`. The full batch gives `0.5 * ||Ax - b||^2`.

use crate::error::{Error, Result};
use crate::geometry::{AngleSubset, Sinogram};
use crate::grid::{GridSpec, ImageGrid};
use crate::projector::{DenseMatrix, Projector};

/// A smooth finite-sum term split into `n_blocks()` blocks, evaluated on subsets.
pub trait BlockObjective {
    /// Dimension of the unknown.
    fn dim(&self) -> usize;

    fn n_blocks(&self) -> usize;

    fn value(&self, x: &[f64], subset: &AngleSubset) -> Result<f64>;

    fn value_and_gradient(&self, x: &[f64], subset: &AngleSubset) -> Result<(f64, Vec<f64>)>;
}

fn scale(n_blocks: usize, subset: &AngleSubset) -> f64 {
    n_blocks as f64 / subset.len() as f64
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Tomographic fidelity: projector plus measured sinogram.
#[derive(Clone, Debug)]
pub struct TomoProblem {
    projector: Projector,
    data: Sinogram,
}

impl TomoProblem {
    pub fn new(grid: GridSpec, data: Sinogram) -> Result<Self> {
        let projector = Projector::new(grid, data.geometry().clone())?;
        Ok(TomoProblem { projector, data })
    }

    pub fn projector(&self) -> &Projector {
        &self.projector
    }

    pub fn data(&self) -> &Sinogram {
        &self.data
    }

    fn residual(&self, x: &[f64], subset: &AngleSubset) -> Result<Vec<f64>> {
        let mut r = self.projector.forward(x, subset)?;
        let n_p = self.projector.n_p();
        for (block, angle) in r.chunks_mut(n_p).zip(subset.iter()) {
            for (ri, bi) in block.iter_mut().zip(self.data.block(angle)) {
                *ri -= bi;
            }
        }
        Ok(r)
    }
}

impl BlockObjective for TomoProblem {
    fn dim(&self) -> usize {
        self.projector.n_voxels()
    }

    fn n_blocks(&self) -> usize {
        self.projector.n_theta()
    }

    fn value(&self, x: &[f64], subset: &AngleSubset) -> Result<f64> {
        let r = self.residual(x, subset)?;
        Ok(0.5 * scale(self.n_blocks(), subset) * sq_norm(&r))
    }

    fn value_and_gradient(&self, x: &[f64], subset: &AngleSubset) -> Result<(f64, Vec<f64>)> {
        let r = self.residual(x, subset)?;
        let s = scale(self.n_blocks(), subset);
        let mut g = self.projector.adjoint(&r, subset)?;
        for gi in g.iter_mut() {
            *gi *= s;
        }
        Ok((0.5 * s * sq_norm(&r), g))
    }
}

/// Least squares with an explicit matrix whose rows are split into equal blocks.
/// Small problems and test oracles.
#[derive(Clone, Debug)]
pub struct DenseBlockProblem {
    matrix: DenseMatrix,
    rhs: Vec<f64>,
    n_blocks: usize,
}

impl DenseBlockProblem {
    pub fn new(matrix: DenseMatrix, rhs: Vec<f64>, n_blocks: usize) -> Result<Self> {
        if rhs.len() != matrix.rows {
            return Err(Error::config("right-hand side length differs from matrix rows"));
        }
        if n_blocks == 0 || matrix.rows % n_blocks != 0 {
            return Err(Error::config(format!(
                "{} rows cannot be split into {} equal blocks",
                matrix.rows, n_blocks
            )));
        }
        Ok(DenseBlockProblem {
            matrix,
            rhs,
            n_blocks,
        })
    }

    /// The dense equivalent of a tomographic problem.
    pub fn from_tomo(problem: &TomoProblem) -> Result<Self> {
        let m = problem.projector().assemble_dense()?;
        Self::new(m, problem.data().values().to_vec(), problem.n_blocks())
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    fn block_rows(&self) -> usize {
        self.matrix.rows / self.n_blocks
    }

    fn residual(&self, x: &[f64], subset: &AngleSubset) -> Result<Vec<f64>> {
        if x.len() != self.matrix.cols {
            return Err(Error::config("dimension mismatch"));
        }
        subset.check(self.n_blocks)?;
        let br = self.block_rows();
        let mut r = Vec::with_capacity(subset.len() * br);
        for b in subset.iter() {
            for row in b * br..(b + 1) * br {
                let ax: f64 = self.matrix.row(row).iter().zip(x).map(|(a, v)| a * v).sum();
                r.push(ax - self.rhs[row]);
            }
        }
        Ok(r)
    }
}

impl BlockObjective for DenseBlockProblem {
    fn dim(&self) -> usize {
        self.matrix.cols
    }

    fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    fn value(&self, x: &[f64], subset: &AngleSubset) -> Result<f64> {
        let r = self.residual(x, subset)?;
        Ok(0.5 * scale(self.n_blocks, subset) * sq_norm(&r))
    }

    fn value_and_gradient(&self, x: &[f64], subset: &AngleSubset) -> Result<(f64, Vec<f64>)> {
        let r = self.residual(x, subset)?;
        let s = scale(self.n_blocks, subset);
        let br = self.block_rows();
        let mut g = vec![0.0; self.matrix.cols];
        for (chunk, b) in r.chunks(br).zip(subset.iter()) {
            for (k, &rk) in chunk.iter().enumerate() {
                for (gi, a) in g.iter_mut().zip(self.matrix.row(b * br + k)) {
                    *gi += a * rk;
                }
            }
        }
        for gi in g.iter_mut() {
            *gi *= s;
        }
        Ok((0.5 * s * sq_norm(&r), g))
    }
}

/// `(f_S(x), grad f_S(x))` for an image against measured data.
pub fn subsampled_fidelity(
    x: &ImageGrid,
    b: &Sinogram,
    subset: &AngleSubset,
) -> Result<(f64, Vec<f64>)> {
    TomoProblem::new(x.spec().clone(), b.clone())?.value_and_gradient(x.values(), subset)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_image_zero_data() {
        let grid = GridSpec::unit(6, 6, 1).unwrap();
        let geom = crate::geometry::ScanGeometry::parallel_covering(&grid, vec![0.0, 1.0, 2.0]).unwrap();
        let b = Sinogram::new(geom.clone(), vec![0.0; geom.n_measurements()]).unwrap();
        let x = ImageGrid::zeros(grid).unwrap();
        let (v, g) = subsampled_fidelity(&x, &b, &AngleSubset::new(vec![1], 3).unwrap()).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.iter().all(|&gi| gi == 0.0));
    }

    #[test]
    fn dense_blocks_must_divide_rows() {
        let m = DenseMatrix::identity(5);
        assert!(DenseBlockProblem::new(m.clone(), vec![0.0; 5], 2).is_err());
        assert!(DenseBlockProblem::new(m, vec![0.0; 4], 5).is_err());
    }

    #[test]
    fn half_squared_norm() {
        let p = DenseBlockProblem::new(DenseMatrix::identity(2), vec![0.0; 2], 1).unwrap();
        let (v, g) = p.value_and_gradient(&[1.0, 2.0], &AngleSubset::full(1)).unwrap();
        assert_eq!(v, 2.5);
        assert_eq!(g, vec![1.0, 2.0]);
    }
}
