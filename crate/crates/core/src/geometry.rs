//! Scan geometries and angle subsets.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometryKind {
    /// Parallel rays in the xy-plane; the detector is a single row.
    #[serde(rename = "parallel2d")]
    Parallel2D,
    /// Point source circling the z axis with a flat rows x cols detector opposite.
    #[serde(rename = "cone_beam3d")]
    ConeBeam3D {
        det_rows: usize,
        source_distance: f64,
        detector_distance: f64,
    },
}

/// Source/detector trajectory. Detector cell `j` of angle `i` is measurement
/// `i * n_p + j`; for cone beam `j = row * det_cols + col`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanGeometry {
    #[serde(flatten)]
    pub kind: GeometryKind,
    pub angles: Vec<f64>,
    pub det_cols: usize,
    pub detector_spacing: f64,
}

impl ScanGeometry {
    pub fn parallel_2d(angles: Vec<f64>, det_cols: usize, detector_spacing: f64) -> Result<Self> {
        let geom = ScanGeometry {
            kind: GeometryKind::Parallel2D,
            angles,
            det_cols,
            detector_spacing,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn cone_beam_3d(
        angles: Vec<f64>,
        det_rows: usize,
        det_cols: usize,
        detector_spacing: f64,
        source_distance: f64,
        detector_distance: f64,
    ) -> Result<Self> {
        let geom = ScanGeometry {
            kind: GeometryKind::ConeBeam3D {
                det_rows,
                source_distance,
                detector_distance,
            },
            angles,
            det_cols,
            detector_spacing,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Parallel geometry whose detector spans the grid diagonal, with an odd
    /// cell count so a central ray exists.
    pub fn parallel_covering(grid: &GridSpec, angles: Vec<f64>) -> Result<Self> {
        let w = grid.dims[0] as f64 * grid.voxel_size[0];
        let h = grid.dims[1] as f64 * grid.voxel_size[1];
        let spacing = grid.voxel_size[0].min(grid.voxel_size[1]);
        let mut cols = ((w * w + h * h).sqrt() / spacing).ceil() as usize;
        if cols % 2 == 0 {
            cols += 1;
        }
        Self::parallel_2d(angles, cols, spacing)
    }

    /// Cone-beam geometry sized so the whole grid shadow lands on the detector.
    /// The source sits at `source_factor` times the grid's in-plane radius and
    /// the detector at half that distance on the opposite side.
    pub fn cone_covering(grid: &GridSpec, angles: Vec<f64>, source_factor: f64) -> Result<Self> {
        let hx = grid.dims[0] as f64 * grid.voxel_size[0] / 2.0;
        let hy = grid.dims[1] as f64 * grid.voxel_size[1] / 2.0;
        let hz = grid.dims[2] as f64 * grid.voxel_size[2] / 2.0;
        let radius = (hx * hx + hy * hy).sqrt();
        let rs = source_factor * radius;
        let rd = rs / 2.0;
        let spacing = grid.voxel_size[0] * (rs + rd) / rs;
        // fan: tangent from the source to the circumscribed circle
        let half_u = (rs + rd) * radius / (rs * rs - radius * radius).sqrt();
        // cone: nearest edge of the volume magnifies the most
        let half_v = (rs + rd) * hz / (rs - radius);
        let cols = (2.0 * half_u / spacing).ceil() as usize + 1;
        let rows = (2.0 * half_v / spacing).ceil() as usize + 1;
        Self::cone_beam_3d(angles, rows, cols, spacing, rs, rd)
    }

    pub fn validate(&self) -> Result<()> {
        if self.angles.is_empty() {
            return Err(Error::config("geometry needs at least one angle"));
        }
        if self.det_cols == 0 {
            return Err(Error::config("detector needs at least one cell"));
        }
        if !(self.detector_spacing > 0.0) || !self.detector_spacing.is_finite() {
            return Err(Error::config("detector spacing must be positive"));
        }
        for (i, &a) in self.angles.iter().enumerate() {
            if !(0.0..TAU).contains(&a) {
                return Err(Error::config(format!("angle {a} outside [0, 2pi)")));
            }
            if i > 0 && a <= self.angles[i - 1] {
                return Err(Error::config("angles must be strictly increasing"));
            }
        }
        if let GeometryKind::ConeBeam3D {
            det_rows,
            source_distance,
            detector_distance,
        } = self.kind
        {
            if det_rows == 0 {
                return Err(Error::config("detector needs at least one row"));
            }
            if !(source_distance > 0.0) || !(detector_distance >= 0.0) {
                return Err(Error::config("source/detector distances must be positive"));
            }
        }
        Ok(())
    }

    pub fn n_theta(&self) -> usize {
        self.angles.len()
    }

    pub fn det_rows(&self) -> usize {
        match self.kind {
            GeometryKind::Parallel2D => 1,
            GeometryKind::ConeBeam3D { det_rows, .. } => det_rows,
        }
    }

    /// Detector cells per projection.
    pub fn n_p(&self) -> usize {
        self.det_rows() * self.det_cols
    }

    /// Total measurement count.
    pub fn n_measurements(&self) -> usize {
        self.n_p() * self.n_theta()
    }

    /// Check that the geometry can image `grid`.
    pub fn check_compatible(&self, grid: &GridSpec) -> Result<()> {
        grid.validate()?;
        match self.kind {
            GeometryKind::Parallel2D => {
                if !grid.is_2d() {
                    return Err(Error::config(format!(
                        "parallel 2D geometry needs nz = 1, grid has dims {:?}",
                        grid.dims
                    )));
                }
            }
            GeometryKind::ConeBeam3D { source_distance, .. } => {
                let lo = grid.origin;
                let hi = grid.upper_corner();
                let corner = |a: f64, b: f64| a.abs().max(b.abs());
                let rx = corner(lo[0], hi[0]);
                let ry = corner(lo[1], hi[1]);
                if (rx * rx + ry * ry).sqrt() >= source_distance {
                    return Err(Error::config(
                        "cone-beam source orbit intersects the reconstruction grid",
                    ));
                }
            }
        }
        Ok(())
    }

    /// End points of the ray hitting detector cell `det` at angle index `angle`.
    /// Parallel rays are returned as a segment long enough to cross `grid`.
    pub fn ray(&self, grid: &GridSpec, angle: usize, det: usize) -> ([f64; 3], [f64; 3]) {
        let theta = self.angles[angle];
        let (s, c) = theta.sin_cos();
        let col = det % self.det_cols;
        let row = det / self.det_cols;
        let u = (col as f64 - (self.det_cols as f64 - 1.0) / 2.0) * self.detector_spacing;
        match self.kind {
            GeometryKind::Parallel2D => {
                let z = grid.center()[2];
                let lo = grid.origin;
                let hi = grid.upper_corner();
                let reach = lo
                    .iter()
                    .chain(hi.iter())
                    .map(|v| v.abs())
                    .fold(0.0_f64, f64::max)
                    * 2.0
                    + u.abs()
                    + 1.0;
                let base = [-s * u, c * u];
                (
                    [base[0] + reach * c, base[1] + reach * s, z],
                    [base[0] - reach * c, base[1] - reach * s, z],
                )
            }
            GeometryKind::ConeBeam3D {
                det_rows,
                source_distance,
                detector_distance,
            } => {
                let v = (row as f64 - (det_rows as f64 - 1.0) / 2.0) * self.detector_spacing;
                let src = [source_distance * c, source_distance * s, 0.0];
                let dst = [
                    -detector_distance * c - s * u,
                    -detector_distance * s + c * u,
                    v,
                ];
                (src, dst)
            }
        }
    }
}

/// Distinct angle indices (0-based) forming one mini-batch, kept sorted so the
/// projection order never depends on how the subset was drawn.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AngleSubset(Vec<usize>);

impl AngleSubset {
    pub fn new(mut indices: Vec<usize>, n_theta: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::arg("angle subset is empty"));
        }
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::arg("angle subset has repeated indices"));
        }
        if let Some(&last) = indices.last() {
            if last >= n_theta {
                return Err(Error::arg(format!(
                    "angle index {last} out of range for {n_theta} angles"
                )));
            }
        }
        Ok(AngleSubset(indices))
    }

    pub fn full(n_theta: usize) -> Self {
        AngleSubset((0..n_theta).collect())
    }

    pub fn single(index: usize) -> Self {
        AngleSubset(vec![index])
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    /// Re-check bounds against a geometry (subsets can outlive the geometry they were made for).
    pub fn check(&self, n_theta: usize) -> Result<()> {
        match self.0.last() {
            Some(&last) if last < n_theta => Ok(()),
            Some(&last) => Err(Error::arg(format!(
                "angle index {last} out of range for {n_theta} angles"
            ))),
            None => Err(Error::arg("angle subset is empty")),
        }
    }
}

/// Measured data `b`, one row of `n_p` readings per angle.
#[derive(Clone, Debug, PartialEq)]
pub struct Sinogram {
    geometry: ScanGeometry,
    values: Vec<f64>,
}

impl Sinogram {
    pub fn new(geometry: ScanGeometry, values: Vec<f64>) -> Result<Self> {
        geometry.validate()?;
        if values.len() != geometry.n_measurements() {
            return Err(Error::config(format!(
                "sinogram has {} values, geometry needs {}",
                values.len(),
                geometry.n_measurements()
            )));
        }
        Ok(Sinogram { geometry, values })
    }

    pub fn geometry(&self) -> &ScanGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Row `b_i`.
    pub fn block(&self, angle: usize) -> &[f64] {
        let n_p = self.geometry.n_p();
        &self.values[angle * n_p..(angle + 1) * n_p]
    }

    /// `b_S`, concatenated in subset order.
    pub fn gather(&self, subset: &AngleSubset) -> Vec<f64> {
        let mut out = Vec::with_capacity(subset.len() * self.geometry.n_p());
        for a in subset.iter() {
            out.extend_from_slice(self.block(a));
        }
        out
    }
}
