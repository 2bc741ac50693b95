//! Regular voxel grids and the images that live on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape and placement of a voxel grid. Values are stored x-fastest:
/// `index = (iz * ny + iy) * nx + ix`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dims: [usize; 3],
    pub voxel_size: [f64; 3],
    /// World coordinate of the grid's lower corner.
    pub origin: [f64; 3],
}

impl GridSpec {
    /// A grid of unit-free voxels centered on the world origin.
    pub fn centered(dims: [usize; 3], voxel_size: [f64; 3]) -> Result<Self> {
        let origin = [
            -(dims[0] as f64) * voxel_size[0] / 2.0,
            -(dims[1] as f64) * voxel_size[1] / 2.0,
            -(dims[2] as f64) * voxel_size[2] / 2.0,
        ];
        let spec = GridSpec { dims, voxel_size, origin };
        spec.validate()?;
        Ok(spec)
    }

    /// Unit voxels, centered. `nz = 1` gives a 2D image.
    pub fn unit(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        Self::centered([nx, ny, nz], [1.0; 3])
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&n| n == 0) {
            return Err(Error::config(format!("grid dims must be >= 1, got {:?}", self.dims)));
        }
        if self.voxel_size.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::config(format!(
                "voxel sizes must be positive, got {:?}",
                self.voxel_size
            )));
        }
        if self.origin.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("grid origin must be finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_2d(&self) -> bool {
        self.dims[2] == 1
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.dims[1] + iy) * self.dims[0] + ix
    }

    /// World coordinate of a voxel center.
    pub fn voxel_center(&self, ix: usize, iy: usize, iz: usize) -> [f64; 3] {
        [
            self.origin[0] + (ix as f64 + 0.5) * self.voxel_size[0],
            self.origin[1] + (iy as f64 + 0.5) * self.voxel_size[1],
            self.origin[2] + (iz as f64 + 0.5) * self.voxel_size[2],
        ]
    }

    pub fn upper_corner(&self) -> [f64; 3] {
        [
            self.origin[0] + self.dims[0] as f64 * self.voxel_size[0],
            self.origin[1] + self.dims[1] as f64 * self.voxel_size[1],
            self.origin[2] + self.dims[2] as f64 * self.voxel_size[2],
        ]
    }

    pub fn center(&self) -> [f64; 3] {
        let hi = self.upper_corner();
        [
            (self.origin[0] + hi[0]) / 2.0,
            (self.origin[1] + hi[1]) / 2.0,
            (self.origin[2] + hi[2]) / 2.0,
        ]
    }

    pub fn voxel_volume(&self) -> f64 {
        self.voxel_size.iter().product()
    }
}

/// Attenuation values on a voxel grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageGrid {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ImageGrid {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(Error::config(format!(
                "image has {} values but grid {:?} needs {}",
                values.len(),
                spec.dims,
                spec.len()
            )));
        }
        Ok(ImageGrid { spec, values })
    }

    pub fn zeros(spec: GridSpec) -> Result<Self> {
        let n = spec.len();
        Self::new(spec, vec![0.0; n])
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.spec.clone(), values)
    }
}
