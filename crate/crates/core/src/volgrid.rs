//! Dense volumetric containers.
//!
//! All volumes are stored x-fastest: sample `(x, y, z)` lives at linear index
//! `x + nx * (y + ny * z)`. Every kernel in the crate relies on this layout.

use crate::error::{Error, Result};

pub type Dims = [usize; 3];
pub type Spacing = [f32; 3];

#[inline]
pub fn linear_index(dims: Dims, x: usize, y: usize, z: usize) -> usize {
    x + dims[0] * (y + dims[1] * z)
}

fn check_spacing(spacing: Spacing) -> Result<()> {
    if spacing.iter().any(|s| !s.is_finite() || *s <= 0.0) {
        return Err(Error::InvalidSpacing(spacing));
    }
    Ok(())
}

fn voxel_count(dims: Dims) -> Result<usize> {
    if dims.iter().any(|&d| d == 0 || d > u32::MAX as usize) {
        return Err(Error::InvalidDimensions(dims));
    }
    dims[0]
        .checked_mul(dims[1])
        .and_then(|n| n.checked_mul(dims[2]))
        .ok_or(Error::InvalidDimensions(dims))
}

/// Scalar field on a 3D grid: intensities, reconstructions and anomaly maps.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume3D {
    dims: Dims,
    spacing: Spacing,
    data: Vec<f32>,
}

impl Volume3D {
    pub fn new(dims: Dims, spacing: Spacing, data: Vec<f32>) -> Result<Self> {
        let n = voxel_count(dims)?;
        check_spacing(spacing)?;
        if data.len() != n {
            return Err(Error::LengthMismatch {
                dims,
                actual: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            dims,
            spacing,
            data,
        })
    }

    pub fn filled(dims: Dims, spacing: Spacing, value: f32) -> Result<Self> {
        let n = voxel_count(dims)?;
        Self::new(dims, spacing, vec![value; n])
    }

    pub fn from_fn(
        dims: Dims,
        spacing: Spacing,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let n = voxel_count(dims)?;
        let mut data = Vec::with_capacity(n);
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    data.push(f(x, y, z));
                }
            }
        }
        Self::new(dims, spacing, data)
    }

    /// Builds a volume from samples produced by a kernel in this crate.
    /// Callers guarantee length and finiteness.
    pub(crate) fn from_parts_unchecked(dims: Dims, spacing: Spacing, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), dims.iter().product::<usize>());
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self {
            dims,
            spacing,
            data,
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.data[linear_index(self.dims, x, y, z)]
    }

    pub fn plane_len(&self) -> usize {
        self.dims[0] * self.dims[1]
    }

    /// Transverse plane at depth `z`.
    pub fn extract_slice(&self, z: usize) -> Result<Image2D> {
        if z >= self.dims[2] {
            return Err(Error::SliceOutOfRange {
                index: z,
                depth: self.dims[2],
            });
        }
        let n = self.plane_len();
        Ok(Image2D {
            width: self.dims[0],
            height: self.dims[1],
            data: self.data[z * n..(z + 1) * n].to_vec(),
        })
    }

    /// Overwrites plane `z` with `img`.
    pub fn insert_slice(&mut self, z: usize, img: &Image2D) -> Result<()> {
        if z >= self.dims[2] {
            return Err(Error::SliceOutOfRange {
                index: z,
                depth: self.dims[2],
            });
        }
        if img.width != self.dims[0] || img.height != self.dims[1] {
            return Err(Error::DimensionMismatch(
                self.dims,
                [img.width, img.height, 1],
            ));
        }
        if let Some(i) = img.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(z * self.plane_len() + i));
        }
        let n = self.plane_len();
        self.data[z * n..(z + 1) * n].copy_from_slice(&img.data);
        Ok(())
    }

    pub fn slices(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.plane_len())
    }

    pub fn check_same_dims(&self, dims: Dims) -> Result<()> {
        if self.dims != dims {
            return Err(Error::DimensionMismatch(self.dims, dims));
        }
        Ok(())
    }
}

/// Binary volume: brain masks, lesion annotations, predicted segmentations.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask3D {
    dims: Dims,
    spacing: [u32; 3],
    data: Vec<bool>,
}

impl Mask3D {
    pub fn new(dims: Dims, data: Vec<bool>) -> Result<Self> {
        Self::with_spacing(dims, [1.0; 3], data)
    }

    pub fn with_spacing(dims: Dims, spacing: Spacing, data: Vec<bool>) -> Result<Self> {
        let n = voxel_count(dims)?;
        check_spacing(spacing)?;
        if data.len() != n {
            return Err(Error::LengthMismatch {
                dims,
                actual: data.len(),
            });
        }
        Ok(Self {
            dims,
            spacing: spacing.map(f32::to_bits),
            data,
        })
    }

    pub fn empty(dims: Dims) -> Result<Self> {
        let n = voxel_count(dims)?;
        Self::new(dims, vec![false; n])
    }

    pub fn full(dims: Dims) -> Result<Self> {
        let n = voxel_count(dims)?;
        Self::new(dims, vec![true; n])
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize, usize) -> bool) -> Result<Self> {
        let n = voxel_count(dims)?;
        let mut data = Vec::with_capacity(n);
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    data.push(f(x, y, z));
                }
            }
        }
        Self::new(dims, data)
    }

    pub(crate) fn from_parts_unchecked(dims: Dims, spacing: [u32; 3], data: Vec<bool>) -> Self {
        debug_assert_eq!(data.len(), dims.iter().product::<usize>());
        Self {
            dims,
            spacing,
            data,
        }
    }

    /// Same geometry as `self`, new contents.
    pub(crate) fn with_data(&self, data: Vec<bool>) -> Self {
        Self::from_parts_unchecked(self.dims, self.spacing, data)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing.map(f32::from_bits)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.data[linear_index(self.dims, x, y, z)]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_subset_of(&self, other: &Mask3D) -> bool {
        self.dims == other.dims && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }

    pub fn check_same_dims(&self, dims: Dims) -> Result<()> {
        if self.dims != dims {
            return Err(Error::DimensionMismatch(self.dims, dims));
        }
        Ok(())
    }

    /// 1.0 / 0.0 volume, e.g. to score a ground-truth mask as a perfect map.
    pub fn to_volume(&self) -> Volume3D {
        Volume3D::from_parts_unchecked(
            self.dims,
            self.spacing(),
            self.data
                .iter()
                .map(|&b| if b { 1.0 } else { 0.0 })
                .collect(),
        )
    }
}

/// Single 2D plane, row-major with x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Image2D {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Image2D {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage { width, height });
        }
        if data.len() != width * height {
            return Err(Error::LengthMismatch {
                dims: [width, height, 1],
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[x + self.width * y]
    }
}
