//! TOML experiment configuration. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ScanGeometry;
use crate::grid::GridSpec;
use crate::regularization::Regularizer;
use crate::simulation::{make_angles, Disk, NoiseKind, NoiseSpec, PhantomKind, PhantomSpec};
use crate::solvers::{ClockKind, Method, SolverConfig, Telemetry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhantomChoice {
    #[serde(rename = "shepp_logan_2d")]
    SheppLogan2d,
    #[serde(rename = "shepp_logan_3d")]
    SheppLogan3d,
    Disks,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSection {
    pub kind: PhantomChoice,
    pub dims: [usize; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voxel_size: Option<[f64; 3]>,
    /// Only for `kind = "disks"`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub disks: Vec<Disk>,
    /// Render the phantom this many times finer when simulating data.
    #[serde(default = "one")]
    pub oversample: usize,
}

fn one() -> usize {
    1
}

impl PhantomSection {
    pub fn new(kind: PhantomChoice, dims: [usize; 3]) -> Self {
        PhantomSection {
            kind,
            dims,
            voxel_size: None,
            disks: Vec::new(),
            oversample: 1,
        }
    }

    pub fn spec(&self) -> PhantomSpec {
        let kind = match self.kind {
            PhantomChoice::SheppLogan2d => PhantomKind::SheppLogan2d,
            PhantomChoice::SheppLogan3d => PhantomKind::SheppLogan3d,
            PhantomChoice::Disks => PhantomKind::Disks {
                disks: self.disks.clone(),
            },
        };
        PhantomSpec {
            kind,
            dims: self.dims,
            voxel_size: self.voxel_size.unwrap_or([1.0; 3]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeometryChoice {
    #[serde(rename = "parallel2d")]
    Parallel2D,
    #[serde(rename = "cone_beam3d")]
    ConeBeam3D,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub kind: GeometryChoice,
    pub n_theta: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub det_cols: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub det_rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector_spacing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_distance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector_distance: Option<f64>,
}

/// Source orbit radius, in units of the grid's in-plane half diagonal, when none is given.
pub const DEFAULT_SOURCE_FACTOR: f64 = 4.0;

impl GeometrySection {
    /// Build the geometry for `grid`; unset detector fields cover the grid.
    pub fn build(&self, grid: &GridSpec) -> Result<ScanGeometry> {
        if self.n_theta == 0 {
            return Err(Error::config("n_theta must be >= 1"));
        }
        let angles = make_angles(self.n_theta);
        match self.kind {
            GeometryChoice::Parallel2D => {
                if self.det_rows.is_some() || self.source_distance.is_some() || self.detector_distance.is_some() {
                    return Err(Error::config(
                        "det_rows/source_distance/detector_distance only apply to cone_beam3d",
                    ));
                }
                let auto = ScanGeometry::parallel_covering(grid, angles.clone())?;
                ScanGeometry::parallel_2d(
                    angles,
                    self.det_cols.unwrap_or(auto.det_cols),
                    self.detector_spacing.unwrap_or(auto.detector_spacing),
                )
            }
            GeometryChoice::ConeBeam3D => {
                let auto = ScanGeometry::cone_covering(grid, angles.clone(), DEFAULT_SOURCE_FACTOR)?;
                let crate::geometry::GeometryKind::ConeBeam3D {
                    det_rows,
                    source_distance,
                    detector_distance,
                } = auto.kind
                else {
                    unreachable!()
                };
                ScanGeometry::cone_beam_3d(
                    angles,
                    self.det_rows.unwrap_or(det_rows),
                    self.det_cols.unwrap_or(auto.det_cols),
                    self.detector_spacing.unwrap_or(auto.detector_spacing),
                    self.source_distance.unwrap_or(source_distance),
                    self.detector_distance.unwrap_or(detector_distance),
                )
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseChoice {
    #[default]
    None,
    Gaussian,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub kind: NoiseChoice,
    /// Standard deviation relative to `max |b|`; required for `gaussian`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_std: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseSection {
    pub fn gaussian(rel_std: f64, seed: u64) -> Self {
        NoiseSection {
            kind: NoiseChoice::Gaussian,
            rel_std: Some(rel_std),
            seed,
        }
    }

    pub fn spec(&self) -> Result<NoiseSpec> {
        let kind = match (self.kind, self.rel_std) {
            (NoiseChoice::None, None) => NoiseKind::None,
            (NoiseChoice::None, Some(_)) => return Err(Error::config("rel_std given but noise kind is none")),
            (NoiseChoice::Gaussian, Some(rel_std)) => NoiseKind::Gaussian { rel_std },
            (NoiseChoice::Gaussian, None) => return Err(Error::config("gaussian noise needs rel_std")),
        };
        Ok(NoiseSpec { kind, seed: self.seed })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizerChoice {
    L1Nonneg,
    L1,
    Nonneg,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub name: Method,
    #[serde(default = "default_reg")]
    pub regularizer: RegularizerChoice,
    #[serde(default)]
    pub mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_budget: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_backtracks: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz_estimate: Option<f64>,
    #[serde(default)]
    pub clock: ClockKind,
    #[serde(default)]
    pub telemetry: Telemetry,
}

fn default_reg() -> RegularizerChoice {
    RegularizerChoice::L1Nonneg
}

impl SolverSection {
    pub fn new(name: Method) -> Self {
        SolverSection {
            name,
            regularizer: default_reg(),
            mu: 0.0,
            alpha0: None,
            beta: None,
            n0: None,
            n_max: None,
            c: None,
            eps_ratio: None,
            epochs: None,
            time_budget: None,
            max_backtracks: None,
            seed: 0,
            alpha_max: None,
            lipschitz_estimate: None,
            clock: ClockKind::Wall,
            telemetry: Telemetry::Basic,
        }
    }

    pub fn regularizer(&self) -> Result<Regularizer> {
        let r = match self.regularizer {
            RegularizerChoice::L1Nonneg => Regularizer::L1NonNeg { mu: self.mu },
            RegularizerChoice::L1 => Regularizer::L1 { mu: self.mu },
            RegularizerChoice::Nonneg => Regularizer::NonNeg,
            RegularizerChoice::Zero => Regularizer::Zero,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            alpha0: self.alpha0.unwrap_or(d.alpha0),
            beta: self.beta.unwrap_or(d.beta),
            n0: self.n0.unwrap_or(d.n0),
            n_max: self.n_max,
            c: self.c,
            eps_ratio: self.eps_ratio.unwrap_or(d.eps_ratio),
            epochs: self.epochs.unwrap_or(d.epochs),
            time_budget: self.time_budget,
            max_backtracks: self.max_backtracks.unwrap_or(d.max_backtracks),
            seed: self.seed,
            alpha_max: self.alpha_max,
            lipschitz_estimate: self.lipschitz_estimate,
            clock: self.clock,
            telemetry: self.telemetry,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Directory the file names below are resolved against; `--out-dir` overrides it.
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_phantom")]
    pub phantom: String,
    #[serde(default = "default_sinogram")]
    pub sinogram: String,
    #[serde(default = "default_volume")]
    pub volume: String,
    #[serde(default = "default_trace")]
    pub trace: String,
    #[serde(default = "default_metrics")]
    pub metrics: String,
    /// Clock marks at which reconstruction metrics are recorded.
    #[serde(default)]
    pub checkpoints: Vec<f64>,
}

fn default_dir() -> PathBuf {
    PathBuf::from(".")
}
fn default_phantom() -> String {
    "phantom.stomo".into()
}
fn default_sinogram() -> String {
    "sinogram.stomo".into()
}
fn default_volume() -> String {
    "recon.stomo".into()
}
fn default_trace() -> String {
    "trace.csv".into()
}
fn default_metrics() -> String {
    "metrics.txt".into()
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_dir(),
            phantom: default_phantom(),
            sinogram: default_sinogram(),
            volume: default_volume(),
            trace: default_trace(),
            metrics: default_metrics(),
            checkpoints: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub phantom: PhantomSection,
    pub geometry: GeometrySection,
    #[serde(default)]
    pub noise: NoiseSection,
    pub solver: SolverSection,
    #[serde(default)]
    pub outputs: OutputSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    fn check(&self) -> Result<()> {
        if self.phantom.oversample == 0 {
            return Err(Error::config("oversample must be >= 1"));
        }
        if self.outputs.checkpoints.iter().any(|c| !(*c >= 0.0)) {
            return Err(Error::config("checkpoints must be nonnegative clock marks"));
        }
        if self.phantom.kind != PhantomChoice::Disks && !self.phantom.disks.is_empty() {
            return Err(Error::config("disks given for a non-disk phantom"));
        }
        self.noise.spec()?;
        self.solver.regularizer()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec> {
        self.phantom.spec().grid()
    }

    pub fn scan_geometry(&self) -> Result<ScanGeometry> {
        self.geometry.build(&self.grid()?)
    }

    pub fn noise_spec(&self) -> Result<NoiseSpec> {
        self.noise.spec()
    }

    /// Override every seed with `seed`.
    pub fn reseed(&mut self, seed: u64) {
        self.noise.seed = seed;
        self.solver.seed = seed;
    }
}
