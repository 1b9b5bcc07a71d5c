use crate::error::{Error, Result};
use crate::volgrid::Image2D;

use super::reflect_index;

/// Normalized, symmetric 1D Gaussian window.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel1D {
    sigma: f64,
    taps: Vec<f64>,
}

impl GaussianKernel1D {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn radius(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }
}

/// Window length for spread `sigma`: `int(3.5σ + 0.5)·2 + 1`, truncating.
pub fn kernel_length(sigma: f64) -> Result<usize> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::InvalidSigma(sigma));
    }
    let radius = (3.5 * sigma + 0.5).trunc();
    if radius > (u32::MAX / 4) as f64 {
        return Err(Error::InvalidSigma(sigma));
    }
    Ok(radius as usize * 2 + 1)
}

pub fn gaussian_kernel(sigma: f64) -> Result<GaussianKernel1D> {
    let len = kernel_length(sigma)?;
    let radius = (len - 1) / 2;
    let denom = 2.0 * sigma * sigma;
    let mut taps: Vec<f64> = (0..len)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / denom).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    // Exact mirror symmetry regardless of rounding in exp.
    for i in 0..radius {
        taps[len - 1 - i] = taps[i];
    }
    Ok(GaussianKernel1D { sigma, taps })
}

fn convolve_line(src: &[f64], dst: &mut [f64], padded: &mut Vec<f64>, taps: &[f64]) {
    let n = src.len();
    let r = taps.len() / 2;
    padded.clear();
    padded.extend((0..n + 2 * r).map(|i| src[reflect_index(i as isize - r as isize, n)]));
    for (i, out) in dst.iter_mut().enumerate() {
        let window = &padded[i..i + taps.len()];
        *out = window.iter().zip(taps).map(|(a, w)| a * w).sum();
    }
}

/// Separable Gaussian filter on a row-major plane: rows first, then columns.
/// Borders use half-sample symmetric reflection.
pub(crate) fn filter_plane(
    src: &[f64],
    width: usize,
    height: usize,
    kernel: &GaussianKernel1D,
) -> Vec<f64> {
    debug_assert_eq!(src.len(), width * height);
    let taps = kernel.taps();
    let mut padded = Vec::new();
    let mut rows = vec![0.0; src.len()];
    for (line, out) in src.chunks_exact(width).zip(rows.chunks_exact_mut(width)) {
        convolve_line(line, out, &mut padded, taps);
    }
    let mut result = vec![0.0; src.len()];
    let mut column = vec![0.0; height];
    let mut filtered = vec![0.0; height];
    for x in 0..width {
        for (y, c) in column.iter_mut().enumerate() {
            *c = rows[x + width * y];
        }
        convolve_line(&column, &mut filtered, &mut padded, taps);
        for (y, v) in filtered.iter().enumerate() {
            result[x + width * y] = *v;
        }
    }
    result
}

pub fn gaussian_filter_2d(img: &Image2D, kernel: &GaussianKernel1D) -> Result<Image2D> {
    if img.width == 0 || img.height == 0 || img.data.len() != img.width * img.height {
        return Err(Error::EmptyImage {
            width: img.width,
            height: img.height,
        });
    }
    let src: Vec<f64> = img.data.iter().map(|&v| v as f64).collect();
    let out = filter_plane(&src, img.width, img.height, kernel);
    Image2D::new(
        img.width,
        img.height,
        out.into_iter().map(|v| v as f32).collect(),
    )
}
