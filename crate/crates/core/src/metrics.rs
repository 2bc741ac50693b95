//! Reconstruction quality: relative error, PSNR and SSIM over the whole volume.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ImageGrid;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

fn same_shape(x: &ImageGrid, y: &ImageGrid) -> Result<()> {
    if x.spec().dims != y.spec().dims {
        return Err(Error::arg(format!(
            "image dims differ: {:?} vs {:?}",
            x.spec().dims,
            y.spec().dims
        )));
    }
    Ok(())
}

/// `||x - x_gt|| / ||x_gt||`.
pub fn relative_error(x: &ImageGrid, x_gt: &ImageGrid) -> Result<f64> {
    same_shape(x, x_gt)?;
    let denom: f64 = x_gt.values().iter().map(|v| v * v).sum();
    if denom == 0.0 {
        return Err(Error::arg("relative error against an all-zero reference"));
    }
    let num: f64 = x
        .values()
        .iter()
        .zip(x_gt.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((num / denom).sqrt())
}

/// `10 log10(peak^2 / MSE)` in dB; `peak` defaults to `max(x_gt)`.
/// Identical images give `f64::INFINITY`.
pub fn psnr(x: &ImageGrid, x_gt: &ImageGrid, peak: Option<f64>) -> Result<f64> {
    same_shape(x, x_gt)?;
    let peak = peak.unwrap_or_else(|| x_gt.max());
    if !(peak > 0.0) {
        return Err(Error::arg(format!("PSNR peak must be positive, got {peak}")));
    }
    let mse = x
        .values()
        .iter()
        .zip(x_gt.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / x.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

fn gaussian_kernel() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as f64;
    let w: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| {
            let d = i as f64 - r;
            (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Separable filtering along one axis with replicated borders.
fn filter_axis(data: &[f64], dims: [usize; 3], axis: usize, kernel: &[f64]) -> Vec<f64> {
    let n = dims[axis];
    let stride = match axis {
        0 => 1,
        1 => dims[0],
        _ => dims[0] * dims[1],
    };
    let r = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; data.len()];
    for (i, o) in out.iter_mut().enumerate() {
        let pos = (i / stride) % n;
        let base = i - pos * stride;
        let mut acc = 0.0;
        for (k, w) in kernel.iter().enumerate() {
            let p = (pos as isize + k as isize - r).clamp(0, n as isize - 1) as usize;
            acc += w * data[base + p * stride];
        }
        *o = acc;
    }
    out
}

fn gaussian_blur(data: &[f64], dims: [usize; 3], kernel: &[f64]) -> Vec<f64> {
    let mut out = filter_axis(data, dims, 0, kernel);
    out = filter_axis(&out, dims, 1, kernel);
    if dims[2] > 1 {
        out = filter_axis(&out, dims, 2, kernel);
    }
    out
}

/// Mean local SSIM with an 11-tap Gaussian window (sigma 1.5), replicated
/// borders, `C1 = (0.01 peak)^2`, `C2 = (0.03 peak)^2`. 2D images use a 2D
/// window; volumes a 3D one. Symmetric in `x` and `y`.
pub fn ssim(x: &ImageGrid, y: &ImageGrid, peak: f64) -> Result<f64> {
    same_shape(x, y)?;
    if !(peak > 0.0) {
        return Err(Error::arg(format!("SSIM dynamic range must be positive, got {peak}")));
    }
    let dims = x.spec().dims;
    let kernel = gaussian_kernel();
    let a = x.values();
    let b = y.values();
    let prod = |u: &[f64], v: &[f64]| -> Vec<f64> { u.iter().zip(v).map(|(p, q)| p * q).collect() };

    let mu_a = gaussian_blur(a, dims, &kernel);
    let mu_b = gaussian_blur(b, dims, &kernel);
    let aa = gaussian_blur(&prod(a, a), dims, &kernel);
    let bb = gaussian_blur(&prod(b, b), dims, &kernel);
    let ab = gaussian_blur(&prod(a, b), dims, &kernel);

    let c1 = (SSIM_K1 * peak).powi(2);
    let c2 = (SSIM_K2 * peak).powi(2);
    let mut total = 0.0;
    for i in 0..a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = aa[i] - ma * ma;
        let vb = bb[i] - mb * mb;
        let cov = ab[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    Ok(total / a.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coverage {
    FullVolume,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub re: f64,
    /// dB; `INFINITY` for identical images.
    pub psnr: f64,
    pub ssim: f64,
    /// Dynamic range used for PSNR and SSIM.
    pub peak: f64,
    pub computed_over: Coverage,
}

pub const METRICS_CSV_HEADER: &str = "re,psnr_db,ssim";

impl MetricsReport {
    /// All three metrics with `peak = max(x_gt)`.
    pub fn evaluate(x: &ImageGrid, x_gt: &ImageGrid) -> Result<Self> {
        let peak = x_gt.max();
        Ok(MetricsReport {
            re: relative_error(x, x_gt)?,
            psnr: psnr(x, x_gt, Some(peak))?,
            ssim: ssim(x, x_gt, peak)?,
            peak,
            computed_over: Coverage::FullVolume,
        })
    }

    /// `key = value` lines.
    pub fn to_key_values(&self) -> String {
        format!(
            "re = {}\npsnr_db = {}\nssim = {}\npeak = {}\ncomputed_over = full_volume\n",
            self.re, self.psnr, self.ssim, self.peak
        )
    }

    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut re = None;
        let mut psnr = None;
        let mut ssim = None;
        let mut peak = None;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("expected 'key = value', got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let num = || {
                value
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("bad value for {key}: '{value}'")))
            };
            match key {
                "re" => re = Some(num()?),
                "psnr_db" => psnr = Some(num()?),
                "ssim" => ssim = Some(num()?),
                "peak" => peak = Some(num()?),
                "computed_over" if value == "full_volume" => {}
                other => return Err(Error::Format(format!("unknown metrics key '{other}'"))),
            }
        }
        let missing = |k: &str| Error::Format(format!("metrics report lacks '{k}'"));
        Ok(MetricsReport {
            re: re.ok_or_else(|| missing("re"))?,
            psnr: psnr.ok_or_else(|| missing("psnr_db"))?,
            ssim: ssim.ok_or_else(|| missing("ssim"))?,
            peak: peak.ok_or_else(|| missing("peak"))?,
            computed_over: Coverage::FullVolume,
        })
    }

    pub fn csv_row(&self) -> String {
        format!("{},{},{}", self.re, self.psnr, self.ssim)
    }

    /// Header line plus one data row.
    pub fn to_csv(&self) -> String {
        format!("{METRICS_CSV_HEADER}\n{}\n", self.csv_row())
    }

    /// Parse `(re, psnr_db, ssim)` back from [`MetricsReport::to_csv`] output.
    pub fn parse_csv(text: &str) -> Result<(f64, f64, f64)> {
        let mut lines = text.lines();
        if lines.next() != Some(METRICS_CSV_HEADER) {
            return Err(Error::Format("metrics CSV header mismatch".into()));
        }
        let row = lines
            .next()
            .ok_or_else(|| Error::Format("metrics CSV has no data row".into()))?;
        let v: Vec<f64> = row
            .split(',')
            .map(|s| s.parse::<f64>().map_err(|_| Error::Format(format!("bad number '{s}'"))))
            .collect::<Result<_>>()?;
        match v.as_slice() {
            [a, b, c] => Ok((*a, *b, *c)),
            _ => Err(Error::Format("metrics CSV row needs three fields".into())),
        }
    }
}
