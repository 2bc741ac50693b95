//! Sparse-view tomographic reconstruction with FB-LISA, a stochastic
//! forward-backward method that uses a backtracking line search and a
//! predetermined growing mini-batch of projection angles.
//!
//! The problem solved is
//!
//! ```text
//! min_x  0.5 * ||A x - b||^2 + mu * ||x||_1   subject to  x >= 0
//! ```
//!
//! where `A` is a ray-driven (Siddon) projector for 2D parallel-beam or 3D
//! cone-beam geometry.
//!
//! Each capability has a runnable program under `examples/`:
//!
//! | example | shows |
//! |---|---|
//! | `phantom_scan` | phantoms, geometries, noisy sinograms, the container format |
//! | `adjoint_test` | forward and back projection, the dot-product test |
//! | `prox_operators` | the regularizer and its proximal map |
//! | `batch_schedule` | the growing mini-batch schedule |
//! | `fblisa_case1` | one FB-LISA reconstruction with trace output |
//! | `compare_solvers` | FB-LISA, fixed-batch proxsgd and fixed-step FB side by side |
//! | `cone_beam_small3d` | a small 3D cone-beam reconstruction |
//! | `quality_metrics` | RE, PSNR and SSIM |
//!
//! The `stomo` binary wraps [`cli`] with the verbs `simulate`, `reconstruct`,
//! `evaluate` and `case`.

pub mod cli;
pub mod config;
pub mod container;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod metrics;
pub mod objective;
pub mod projector;
pub mod regularization;
pub mod simulation;
pub mod solvers;

pub use error::{Error, Result};
pub use geometry::{AngleSubset, GeometryKind, ScanGeometry, Sinogram};
pub use grid::{GridSpec, ImageGrid};
pub use metrics::{psnr, relative_error, ssim, MetricsReport};
pub use objective::{BlockObjective, DenseBlockProblem, TomoProblem};
pub use projector::{back_project, forward_project, DenseMatrix, Projector};
pub use regularization::Regularizer;
pub use simulation::{make_phantom, simulate_phantom_scan, simulate_scan, NoiseSpec, PhantomSpec};
pub use solvers::{
    fb_run, fblisa_run, proxsgd_run, reconstruct, solve, BatchSchedule, Method, SolverConfig, SolverResult,
    Termination,
};
