//! Deterministic synthetic volumes with analytically known lesions.
//!
//! A phantom is a centered ellipsoidal "brain" filled with a smooth
//! sinusoidal texture, optional spherical lesions (intensity shift and/or
//! high-frequency texture), and a pseudo-reconstruction made of the healthy
//! volume plus Gaussian noise. Every output is a pure function of the spec.

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::volgrid::{linear_index, Dims, Mask3D, Volume3D};

const STREAM_BACKGROUND: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_PLACEMENT: u64 = 3;
const STREAM_LESION_BASE: u64 = 1 << 32;

const BACKGROUND_WAVES: usize = 4;
const SPACING: [f32; 3] = [1.0; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lesion {
    pub center: [f64; 3],
    pub radius: f64,
    pub intensity_offset: f32,
    pub texture_amplitude: f32,
}

impl Lesion {
    pub fn contains(&self, x: usize, y: usize, z: usize) -> bool {
        let d2: f64 = [x, y, z]
            .iter()
            .zip(&self.center)
            .map(|(&p, &c)| (p as f64 - c).powi(2))
            .sum();
        d2 <= self.radius * self.radius
    }

    /// Lattice points within the sphere, including those off the grid.
    fn lattice(&self) -> impl Iterator<Item = [i64; 3]> + '_ {
        let lo = self.center.map(|c| (c - self.radius).ceil() as i64);
        let hi = self.center.map(|c| (c + self.radius).floor() as i64);
        (lo[2]..=hi[2])
            .flat_map(move |z| {
                (lo[1]..=hi[1]).flat_map(move |y| (lo[0]..=hi[0]).map(move |x| [x, y, z]))
            })
            .filter(move |p| {
                let d2: f64 = p
                    .iter()
                    .zip(&self.center)
                    .map(|(&q, &c)| (q as f64 - c).powi(2))
                    .sum();
                d2 <= self.radius * self.radius
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub dims: Dims,
    pub seed: u64,
    pub lesions: Vec<Lesion>,
    /// Background texture strength in `[0, 1]`; intensities span `0.5 ± 0.4·scale`.
    pub texture_scale: f64,
    /// Standard deviation of the reconstruction noise.
    pub noise: f64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            dims: [96, 96, 50],
            seed: 42,
            lesions: Vec::new(),
            texture_scale: 0.5,
            noise: 0.02,
        }
    }
}

/// All five volumes of one phantom case.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub healthy: Volume3D,
    pub unhealthy: Volume3D,
    pub gt: Mask3D,
    pub brain: Mask3D,
    pub rec: Volume3D,
}

fn check_spec(spec: &PhantomSpec) -> Result<()> {
    if spec.dims.contains(&0) {
        return Err(Error::InvalidDimensions(spec.dims));
    }
    if !(0.0..=1.0).contains(&spec.texture_scale) {
        return Err(Error::InvalidPhantom("texture_scale must lie in [0, 1]"));
    }
    if !spec.noise.is_finite() || spec.noise < 0.0 {
        return Err(Error::InvalidPhantom(
            "noise must be finite and non-negative",
        ));
    }
    Ok(())
}

/// Centered ellipsoid with semi-axes `0.8·n/2`.
pub fn brain_mask(dims: Dims) -> Result<Mask3D> {
    let c = dims.map(|n| (n as f64 - 1.0) / 2.0);
    let a = dims.map(|n| 0.8 * n as f64 / 2.0);
    let m = Mask3D::from_fn(dims, |x, y, z| {
        let r: f64 = [x, y, z]
            .iter()
            .enumerate()
            .map(|(i, &p)| ((p as f64 - c[i]) / a[i]).powi(2))
            .sum();
        r <= 1.0
    })?;
    if m.count() == 0 {
        return Err(Error::InvalidPhantom("brain mask is empty"));
    }
    Ok(m)
}

/// Smooth background plus brain mask. Outside the brain the volume is 0.
pub fn generate_healthy(spec: &PhantomSpec) -> Result<(Volume3D, Mask3D)> {
    check_spec(spec)?;
    let brain = brain_mask(spec.dims)?;
    let stream = Stream::new(spec.seed, STREAM_BACKGROUND);
    // Each wave: integer cycle counts in {0,1,2} per axis (not all zero), phase, amplitude.
    let waves: Vec<([f64; 3], f64, f64)> = (0..BACKGROUND_WAVES as u64)
        .map(|k| {
            let mut freq = [0.0; 3];
            for (axis, f) in freq.iter_mut().enumerate() {
                *f = (stream.u64_at(8 * k + axis as u64) % 3) as f64;
            }
            if freq == [0.0; 3] {
                freq[(k % 3) as usize] = 1.0;
            }
            let phase = 2.0 * std::f64::consts::PI * stream.uniform(8 * k + 3);
            let amp = 0.5 + stream.uniform(8 * k + 4);
            (freq, phase, amp)
        })
        .collect();
    let amp_total: f64 = waves.iter().map(|w| w.2).sum();
    let n = spec.dims.map(|d| d as f64);
    let scale = 0.4 * spec.texture_scale;
    let healthy = Volume3D::from_fn(spec.dims, SPACING, |x, y, z| {
        if !brain.get(x, y, z) {
            return 0.0;
        }
        let p = [x as f64 / n[0], y as f64 / n[1], z as f64 / n[2]];
        let t: f64 = waves
            .iter()
            .map(|(f, phase, amp)| {
                let arg =
                    2.0 * std::f64::consts::PI * (f[0] * p[0] + f[1] * p[1] + f[2] * p[2]) + phase;
                amp * libm::sin(arg)
            })
            .sum::<f64>()
            / amp_total;
        (0.5 + scale * t).clamp(0.1, 0.9) as f32
    })?;
    Ok((healthy, brain))
}

fn check_lesion(index: usize, lesion: &Lesion, brain: &Mask3D) -> Result<()> {
    let finite = lesion.center.iter().all(|c| c.is_finite())
        && lesion.radius.is_finite()
        && lesion.intensity_offset.is_finite()
        && lesion.texture_amplitude.is_finite();
    if !finite {
        return Err(Error::InvalidLesion {
            index,
            reason: "non-finite parameter",
        });
    }
    if lesion.radius < 1.0 {
        return Err(Error::InvalidLesion {
            index,
            reason: "radius must be at least 1",
        });
    }
    if lesion.texture_amplitude < 0.0 {
        return Err(Error::InvalidLesion {
            index,
            reason: "texture amplitude must be non-negative",
        });
    }
    let dims = brain.dims();
    let max_dim = dims.iter().copied().max().unwrap_or(0) as f64;
    if lesion.radius > max_dim || lesion.center.iter().any(|c| c.abs() > 2.0 * max_dim) {
        return Err(Error::LesionOutsideBrain { index });
    }
    for p in lesion.lattice() {
        let on_grid = p
            .iter()
            .zip(&dims)
            .all(|(&q, &n)| q >= 0 && (q as usize) < n);
        if !on_grid || !brain.get(p[0] as usize, p[1] as usize, p[2] as usize) {
            return Err(Error::LesionOutsideBrain { index });
        }
    }
    Ok(())
}

/// Adds each lesion to `healthy`; returns the lesioned volume and the union of
/// lesion spheres as ground truth.
pub fn inject_lesions(healthy: &Volume3D, spec: &PhantomSpec) -> Result<(Volume3D, Mask3D)> {
    check_spec(spec)?;
    healthy.check_same_dims(spec.dims)?;
    let brain = brain_mask(spec.dims)?;
    for (i, l) in spec.lesions.iter().enumerate() {
        check_lesion(i, l, &brain)?;
    }
    let dims = spec.dims;
    let mut data = healthy.data().to_vec();
    let mut gt = vec![false; data.len()];
    for (i, l) in spec.lesions.iter().enumerate() {
        let stream = Stream::new(spec.seed, STREAM_LESION_BASE + i as u64);
        for p in l.lattice() {
            let idx = linear_index(dims, p[0] as usize, p[1] as usize, p[2] as usize);
            let u = stream.uniform(idx as u64);
            let texture = l.texture_amplitude as f64 * (2.0 * u - 1.0);
            let v = data[idx] as f64 + l.intensity_offset as f64 + texture;
            data[idx] = v.clamp(0.0, 1.0) as f32;
            gt[idx] = true;
        }
    }
    Ok((
        Volume3D::new(dims, healthy.spacing(), data)?,
        Mask3D::with_spacing(dims, healthy.spacing(), gt)?,
    ))
}

/// Healthy volume plus `N(0, noise²)` inside the brain, clamped to `[0, 1]`.
pub fn pseudo_reconstruct(healthy: &Volume3D, spec: &PhantomSpec) -> Result<Volume3D> {
    check_spec(spec)?;
    healthy.check_same_dims(spec.dims)?;
    if spec.noise == 0.0 {
        return Ok(healthy.clone());
    }
    let brain = brain_mask(spec.dims)?;
    let stream = Stream::new(spec.seed, STREAM_NOISE);
    let data = healthy
        .data()
        .iter()
        .zip(brain.data())
        .enumerate()
        .map(|(i, (&v, &inside))| {
            if inside {
                (v as f64 + spec.noise * stream.normal(i as u64)).clamp(0.0, 1.0) as f32
            } else {
                v
            }
        })
        .collect();
    Volume3D::new(spec.dims, healthy.spacing(), data)
}

pub fn generate(spec: &PhantomSpec) -> Result<Phantom> {
    let (healthy, brain) = generate_healthy(spec)?;
    let (unhealthy, gt) = inject_lesions(&healthy, spec)?;
    let rec = pseudo_reconstruct(&healthy, spec)?;
    Ok(Phantom {
        healthy,
        unhealthy,
        gt,
        brain,
        rec,
    })
}

/// Recipe for randomly placed, non-overlapping lesions of one family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LesionPlan {
    pub count: usize,
    pub radius: f64,
    pub intensity_offset: f32,
    pub texture_amplitude: f32,
}

const MAX_PLACEMENT_ATTEMPTS: u64 = 100_000;

/// Draws integer lesion centers so each sphere lies inside the brain and
/// spheres stay at least two voxels apart.
pub fn place_lesions(dims: Dims, seed: u64, plan: &LesionPlan) -> Result<Vec<Lesion>> {
    if !plan.radius.is_finite() || plan.radius < 1.0 {
        return Err(Error::InvalidPhantom("lesion radius must be at least 1"));
    }
    if !plan.texture_amplitude.is_finite()
        || plan.texture_amplitude < 0.0
        || !plan.intensity_offset.is_finite()
    {
        return Err(Error::InvalidPhantom(
            "lesion intensity parameters must be finite, texture non-negative",
        ));
    }
    let brain = brain_mask(dims)?;
    let stream = Stream::new(seed, STREAM_PLACEMENT);
    let mut placed: Vec<Lesion> = Vec::with_capacity(plan.count);
    let mut attempt = 0u64;
    while placed.len() < plan.count {
        if attempt >= MAX_PLACEMENT_ATTEMPTS {
            return Err(Error::InvalidPhantom(
                "could not place lesions inside the brain",
            ));
        }
        let center =
            [0u64, 1, 2].map(|a| (stream.u64_at(3 * attempt + a) % dims[a as usize] as u64) as f64);
        attempt += 1;
        let candidate = Lesion {
            center,
            radius: plan.radius,
            intensity_offset: plan.intensity_offset,
            texture_amplitude: plan.texture_amplitude,
        };
        if check_lesion(placed.len(), &candidate, &brain).is_err() {
            continue;
        }
        let apart = placed.iter().all(|p| {
            let d2: f64 = p
                .center
                .iter()
                .zip(&center)
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            d2.sqrt() >= p.radius + plan.radius + 2.0
        });
        if apart {
            placed.push(candidate);
        }
    }
    Ok(placed)
}
