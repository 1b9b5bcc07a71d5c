//! Anomaly maps from an input volume and its healthy reconstruction.
//!
//! Three scores are available:
//!
//! * `l1`: per-voxel absolute residual `|x - rec|`.
//! * single-scale SSIM: `1 - SSIM_σ(x, rec)`, with local statistics taken
//!   under a Gaussian window of spread σ, slice by slice.
//! * ensemble SSIM: `1 - Σ w_i SSIM_σi` where `w = softmax(-SSIM_σ)` over the
//!   sigma set, so scales that see a larger discrepancy dominate.
//!
//! Internally all local statistics are accumulated in `f64`; maps are stored
//! as `f32`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imageops::{filter_plane, gaussian_kernel, GaussianKernel1D};
use crate::volgrid::{Image2D, Mask3D, Volume3D};

/// Slack accepted on the `[0, L]` intensity range before rejecting a volume.
pub const RANGE_TOLERANCE: f64 = 1e-4;

/// SSIM stabilizers `C1 = (k1·L)²`, `C2 = (k2·L)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimConstants {
    k1: f64,
    k2: f64,
    dynamic_range: f64,
}

impl SsimConstants {
    pub fn new(k1: f64, k2: f64, dynamic_range: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(k1) && ok(k2) && ok(dynamic_range)) {
            return Err(Error::InvalidConstants {
                k1,
                k2,
                dynamic_range,
            });
        }
        Ok(Self {
            k1,
            k2,
            dynamic_range,
        })
    }

    pub fn k1(&self) -> f64 {
        self.k1
    }

    pub fn k2(&self) -> f64 {
        self.k2
    }

    pub fn dynamic_range(&self) -> f64 {
        self.dynamic_range
    }

    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }
}

impl Default for SsimConstants {
    fn default() -> Self {
        Self {
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

/// Strictly increasing, non-empty set of Gaussian spreads.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSet(Vec<f64>);

impl SigmaSet {
    pub fn new(sigmas: Vec<f64>) -> Result<Self> {
        if sigmas.is_empty() {
            return Err(Error::InvalidSigmaSet);
        }
        if let Some(&s) = sigmas.iter().find(|s| !s.is_finite() || **s <= 0.0) {
            return Err(Error::InvalidSigma(s));
        }
        if sigmas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSigmaSet);
        }
        Ok(Self(sigmas))
    }

    pub fn singleton(sigma: f64) -> Result<Self> {
        Self::new(vec![sigma])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for SigmaSet {
    /// 0.3, 0.5, ..., 1.7
    fn default() -> Self {
        Self(vec![0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5, 1.7])
    }
}

/// How ensemble weights are resolved spatially.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightMode {
    /// Softmax over the per-scale SSIM values at each voxel.
    #[default]
    PerVoxel,
    /// One weight vector per slice, from the slice-mean SSIM of each scale.
    PerSlice,
}

impl FromStr for WeightMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "pervoxel" => Ok(Self::PerVoxel),
            "scalar" => Ok(Self::PerSlice),
            other => Err(format!(
                "unknown weight mode {other:?} (expected pervoxel|scalar)"
            )),
        }
    }
}

impl fmt::Display for WeightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PerVoxel => "pervoxel",
            Self::PerSlice => "scalar",
        })
    }
}

/// Per-voxel anomaly scores; higher is more anomalous.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyMap(Volume3D);

impl AnomalyMap {
    pub fn new(v: Volume3D) -> Self {
        Self(v)
    }

    pub fn volume(&self) -> &Volume3D {
        &self.0
    }

    pub fn into_volume(self) -> Volume3D {
        self.0
    }

    pub fn data(&self) -> &[f32] {
        self.0.data()
    }

    pub fn dims(&self) -> [usize; 3] {
        self.0.dims()
    }
}

impl From<Volume3D> for AnomalyMap {
    fn from(v: Volume3D) -> Self {
        Self(v)
    }
}

/// Scoring method selector, written `l1`, `ssim:<sigma>` or `ssim-ens`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    L1,
    Ssim(f64),
    SsimEns,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "l1" => Ok(Self::L1),
            "ssim-ens" => Ok(Self::SsimEns),
            _ => {
                let sigma = s.strip_prefix("ssim:").ok_or_else(|| {
                    format!("unknown method {s:?} (expected l1, ssim:<sigma> or ssim-ens)")
                })?;
                let sigma: f64 = sigma
                    .parse()
                    .map_err(|_| format!("invalid sigma in method {s:?}"))?;
                if !sigma.is_finite() || sigma <= 0.0 {
                    return Err(format!("sigma must be positive in method {s:?}"));
                }
                Ok(Self::Ssim(sigma))
            }
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::L1 => f.write_str("l1"),
            Self::Ssim(s) => write!(f, "ssim:{s}"),
            Self::SsimEns => f.write_str("ssim-ens"),
        }
    }
}

/// Everything needed to turn (x, rec) into an anomaly map.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreConfig {
    pub sigmas: SigmaSet,
    pub constants: SsimConstants,
    pub weight_mode: WeightMode,
}

fn check_range(data: &[f32], c: &SsimConstants) -> Result<()> {
    let hi = c.dynamic_range() + RANGE_TOLERANCE;
    match data
        .iter()
        .position(|&v| (v as f64) < -RANGE_TOLERANCE || v as f64 > hi)
    {
        Some(index) => Err(Error::OutOfRange {
            index,
            value: data[index],
            dynamic_range: c.dynamic_range(),
        }),
        None => Ok(()),
    }
}

/// Rejects samples outside `[0, L]` (with a small tolerance).
pub fn validate_intensity(v: &Volume3D, c: &SsimConstants) -> Result<()> {
    check_range(v.data(), c)
}

pub fn l1_map(x: &Volume3D, rec: &Volume3D) -> Result<AnomalyMap> {
    x.check_same_dims(rec.dims())?;
    let data = x
        .data()
        .iter()
        .zip(rec.data())
        .map(|(a, b)| (a - b).abs())
        .collect();
    Ok(AnomalyMap(Volume3D::from_parts_unchecked(
        x.dims(),
        x.spacing(),
        data,
    )))
}

/// SSIM of one plane pair; `x` and `y` are row-major `width × height`.
fn ssim_plane(
    x: &[f32],
    y: &[f32],
    width: usize,
    height: usize,
    kernel: &GaussianKernel1D,
    c: &SsimConstants,
    out: &mut [f32],
) {
    let n = x.len();
    let xs: Vec<f64> = x.iter().map(|&v| v as f64).collect();
    let ys: Vec<f64> = y.iter().map(|&v| v as f64).collect();
    let mut xx = Vec::with_capacity(n);
    let mut yy = Vec::with_capacity(n);
    let mut xy = Vec::with_capacity(n);
    for (a, b) in xs.iter().zip(&ys) {
        xx.push(a * a);
        yy.push(b * b);
        xy.push(a * b);
    }
    let mu_x = filter_plane(&xs, width, height, kernel);
    let mu_y = filter_plane(&ys, width, height, kernel);
    let e_xx = filter_plane(&xx, width, height, kernel);
    let e_yy = filter_plane(&yy, width, height, kernel);
    let e_xy = filter_plane(&xy, width, height, kernel);
    let (c1, c2) = (c.c1(), c.c2());
    for i in 0..n {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let var_x = e_xx[i] - mx * mx;
        let var_y = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        let num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
        let den = (mx * mx + my * my + c1) * (var_x + var_y + c2);
        out[i] = (num / den) as f32;
    }
}

/// Per-pixel SSIM of two images under a Gaussian window of spread `sigma`.
pub fn ssim_map_2d(x: &Image2D, y: &Image2D, sigma: f64, c: &SsimConstants) -> Result<Image2D> {
    if (x.width, x.height) != (y.width, y.height) {
        return Err(Error::DimensionMismatch(
            [x.width, x.height, 1],
            [y.width, y.height, 1],
        ));
    }
    if x.width == 0 || x.height == 0 {
        return Err(Error::EmptyImage {
            width: x.width,
            height: x.height,
        });
    }
    let kernel = gaussian_kernel(sigma)?;
    check_range(&x.data, c)?;
    check_range(&y.data, c)?;
    let mut out = vec![0.0; x.data.len()];
    ssim_plane(&x.data, &y.data, x.width, x.height, &kernel, c, &mut out);
    Image2D::new(x.width, x.height, out)
}

fn ssim_volume_unchecked(
    x: &Volume3D,
    rec: &Volume3D,
    kernel: &GaussianKernel1D,
    c: &SsimConstants,
) -> Volume3D {
    let [nx, ny, _] = x.dims();
    let plane = nx * ny;
    let mut out = vec![0.0f32; x.len()];
    out.par_chunks_mut(plane)
        .zip(x.data().par_chunks(plane).zip(rec.data().par_chunks(plane)))
        .for_each(|(dst, (a, b))| ssim_plane(a, b, nx, ny, kernel, c, dst));
    Volume3D::from_parts_unchecked(x.dims(), x.spacing(), out)
}

fn check_pair(x: &Volume3D, rec: &Volume3D, c: &SsimConstants) -> Result<()> {
    x.check_same_dims(rec.dims())?;
    validate_intensity(x, c)?;
    validate_intensity(rec, c)
}

/// SSIM computed slice by slice along z and restacked.
pub fn ssim_maps_volume(
    x: &Volume3D,
    rec: &Volume3D,
    sigma: f64,
    c: &SsimConstants,
) -> Result<Volume3D> {
    let kernel = gaussian_kernel(sigma)?;
    check_pair(x, rec, c)?;
    Ok(ssim_volume_unchecked(x, rec, &kernel, c))
}

/// One SSIM volume per sigma, in set order.
pub fn ssim_stack(
    x: &Volume3D,
    rec: &Volume3D,
    sigmas: &SigmaSet,
    c: &SsimConstants,
) -> Result<Vec<Volume3D>> {
    check_pair(x, rec, c)?;
    sigmas
        .as_slice()
        .iter()
        .map(|&s| Ok(ssim_volume_unchecked(x, rec, &gaussian_kernel(s)?, c)))
        .collect()
}

/// `1 - SSIM`: the single-scale anomaly score.
pub fn ssim_anomaly_from(ssim: &Volume3D) -> AnomalyMap {
    let data = ssim
        .data()
        .iter()
        .map(|&s| (1.0 - s as f64) as f32)
        .collect();
    AnomalyMap(Volume3D::from_parts_unchecked(
        ssim.dims(),
        ssim.spacing(),
        data,
    ))
}

pub fn ssim_anomaly_map(
    x: &Volume3D,
    rec: &Volume3D,
    sigma: f64,
    c: &SsimConstants,
) -> Result<AnomalyMap> {
    Ok(ssim_anomaly_from(&ssim_maps_volume(x, rec, sigma, c)?))
}

/// `softmax(-s)`: larger weight for lower similarity.
pub fn ensemble_weights(ssim: &[f64]) -> Vec<f64> {
    let e: Vec<f64> = ssim.iter().map(|s| (-s).exp()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|v| v / total).collect()
}

/// `1 - Σ w_i s_i` with `w = softmax(-s)`.
pub fn ensemble_score(ssim: &[f64]) -> f64 {
    let w = ensemble_weights(ssim);
    1.0 - w.iter().zip(ssim).map(|(w, s)| w * s).sum::<f64>()
}

/// Combines precomputed per-scale SSIM volumes (all of the same dims).
pub fn ensemble_from_ssim(stack: &[Volume3D], mode: WeightMode) -> Result<AnomalyMap> {
    let first = stack.first().ok_or(Error::InvalidSigmaSet)?;
    for v in &stack[1..] {
        first.check_same_dims(v.dims())?;
    }
    let plane = first.plane_len();
    let mut out = vec![0.0f32; first.len()];
    out.par_chunks_mut(plane).enumerate().for_each(|(z, dst)| {
        let offset = z * plane;
        let slices: Vec<&[f32]> = stack
            .iter()
            .map(|v| &v.data()[offset..offset + plane])
            .collect();
        let mut values = vec![0.0f64; stack.len()];
        match mode {
            WeightMode::PerVoxel => {
                for (i, d) in dst.iter_mut().enumerate() {
                    for (v, s) in values.iter_mut().zip(&slices) {
                        *v = s[i] as f64;
                    }
                    *d = ensemble_score(&values) as f32;
                }
            }
            WeightMode::PerSlice => {
                let means: Vec<f64> = slices
                    .iter()
                    .map(|s| s.iter().map(|&v| v as f64).sum::<f64>() / plane as f64)
                    .collect();
                let w = ensemble_weights(&means);
                for (i, d) in dst.iter_mut().enumerate() {
                    let mix: f64 = w.iter().zip(&slices).map(|(w, s)| w * s[i] as f64).sum();
                    *d = (1.0 - mix) as f32;
                }
            }
        }
    });
    Ok(AnomalyMap(Volume3D::from_parts_unchecked(
        first.dims(),
        first.spacing(),
        out,
    )))
}

pub fn ssim_ens_map(
    x: &Volume3D,
    rec: &Volume3D,
    sigmas: &SigmaSet,
    c: &SsimConstants,
    mode: WeightMode,
) -> Result<AnomalyMap> {
    let stack = ssim_stack(x, rec, sigmas, c)?;
    ensemble_from_ssim(&stack, mode)
}

/// Zeroes every score outside `brain`.
pub fn masked(map: &AnomalyMap, brain: &Mask3D) -> Result<AnomalyMap> {
    map.0.check_same_dims(brain.dims())?;
    let data = map
        .data()
        .iter()
        .zip(brain.data())
        .map(|(&s, &inside)| if inside { s } else { 0.0 })
        .collect();
    Ok(AnomalyMap(Volume3D::from_parts_unchecked(
        map.dims(),
        map.0.spacing(),
        data,
    )))
}

/// Dispatches on `method`; every method validates the intensity range.
pub fn anomaly_map(
    method: Method,
    x: &Volume3D,
    rec: &Volume3D,
    cfg: &ScoreConfig,
) -> Result<AnomalyMap> {
    check_pair(x, rec, &cfg.constants)?;
    match method {
        Method::L1 => l1_map(x, rec),
        Method::Ssim(sigma) => ssim_anomaly_map(x, rec, sigma, &cfg.constants),
        Method::SsimEns => ssim_ens_map(x, rec, &cfg.sigmas, &cfg.constants, cfg.weight_mode),
    }
}
