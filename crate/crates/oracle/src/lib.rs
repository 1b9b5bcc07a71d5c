//! Slow, direct reference implementations used as test oracles.
//!
//! Everything here works on plain slices and re-derives each operation from
//! its definition: explicit windows, full sorts, flood fills and exhaustive
//! scans. Nothing depends on the `anomap` crate.

/// Half-sample symmetric mirror, by repeated folding.
pub fn mirror(mut i: i64, n: usize) -> usize {
    let n = n as i64;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - i - 1;
        } else {
            return i as usize;
        }
    }
}

/// Unnormalized-then-normalized Gaussian taps of length `int(3.5σ+0.5)·2+1`.
pub fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let radius = (3.5 * sigma + 0.5) as i64;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

/// Direct (non-separable) 2D convolution with the outer-product window.
pub fn gaussian_filter_direct(img: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let taps = gaussian_taps(sigma);
    let r = (taps.len() / 2) as i64;
    let mut out = vec![0.0; img.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let w = taps[(dx + r) as usize] * taps[(dy + r) as usize];
                    let sx = mirror(x as i64 + dx, width);
                    let sy = mirror(y as i64 + dy, height);
                    acc += w * img[sx + width * sy];
                }
            }
            out[x + width * y] = acc;
        }
    }
    out
}

/// Per-pixel SSIM with explicit Gaussian-window statistics; variances and
/// covariance by the two-pass definition `Σ w (a - μ)(b - μ)`.
pub fn ssim_windowed(
    x: &[f32],
    y: &[f32],
    width: usize,
    height: usize,
    sigma: f64,
    c1: f64,
    c2: f64,
) -> Vec<f64> {
    let taps = gaussian_taps(sigma);
    let r = (taps.len() / 2) as i64;
    let mut out = vec![0.0; x.len()];
    let mut window: Vec<(f64, f64, f64)> = Vec::new();
    for py in 0..height {
        for px in 0..width {
            window.clear();
            for dy in -r..=r {
                for dx in -r..=r {
                    let w = taps[(dx + r) as usize] * taps[(dy + r) as usize];
                    let i = mirror(px as i64 + dx, width) + width * mirror(py as i64 + dy, height);
                    window.push((w, x[i] as f64, y[i] as f64));
                }
            }
            let mx: f64 = window.iter().map(|(w, a, _)| w * a).sum();
            let my: f64 = window.iter().map(|(w, _, b)| w * b).sum();
            let vx: f64 = window.iter().map(|(w, a, _)| w * (a - mx) * (a - mx)).sum();
            let vy: f64 = window.iter().map(|(w, _, b)| w * (b - my) * (b - my)).sum();
            let cxy: f64 = window.iter().map(|(w, a, b)| w * (a - mx) * (b - my)).sum();
            out[px + width * py] = ((2.0 * mx * my + c1) * (2.0 * cxy + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
    }
    out
}

fn at(dims: [usize; 3], x: usize, y: usize, z: usize) -> usize {
    x + dims[0] * (y + dims[1] * z)
}

/// Median of each `k³` mirrored neighborhood by full sort.
pub fn median_filter_sorted(data: &[f32], dims: [usize; 3], k: usize) -> Vec<f32> {
    let r = (k / 2) as i64;
    let mut out = vec![0.0; data.len()];
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let mut vals = Vec::with_capacity(k * k * k);
                for dz in -r..=r {
                    for dy in -r..=r {
                        for dx in -r..=r {
                            let sx = mirror(x as i64 + dx, dims[0]);
                            let sy = mirror(y as i64 + dy, dims[1]);
                            let sz = mirror(z as i64 + dz, dims[2]);
                            vals.push(data[at(dims, sx, sy, sz)]);
                        }
                    }
                }
                vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
                out[at(dims, x, y, z)] = vals[vals.len() / 2];
            }
        }
    }
    out
}

fn get_padded(mask: &[bool], dims: [usize; 3], x: i64, y: i64, z: i64) -> bool {
    if x < 0 || y < 0 || z < 0 {
        return false;
    }
    let (x, y, z) = (x as usize, y as usize, z as usize);
    if x >= dims[0] || y >= dims[1] || z >= dims[2] {
        return false;
    }
    mask[at(dims, x, y, z)]
}

/// Keep a voxel iff its full 3×3×3 neighborhood is set (outside = unset).
pub fn erode_brute(mask: &[bool], dims: [usize; 3], iterations: usize) -> Vec<bool> {
    let mut cur = mask.to_vec();
    for _ in 0..iterations {
        let mut next = vec![false; cur.len()];
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    let mut all = true;
                    for dz in -1..=1 {
                        for dy in -1..=1 {
                            for dx in -1..=1 {
                                all &= get_padded(
                                    &cur,
                                    dims,
                                    x as i64 + dx,
                                    y as i64 + dy,
                                    z as i64 + dz,
                                );
                            }
                        }
                    }
                    next[at(dims, x, y, z)] = all;
                }
            }
        }
        cur = next;
    }
    cur
}

/// 26-connected labels by depth-first flood fill, numbered in linear order of
/// each component's first voxel; returns `(labels, sizes)`.
pub fn components_flood(mask: &[bool], dims: [usize; 3]) -> (Vec<u32>, Vec<usize>) {
    let mut labels = vec![0u32; mask.len()];
    let mut sizes = Vec::new();
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let start = at(dims, x, y, z);
                if !mask[start] || labels[start] != 0 {
                    continue;
                }
                let label = sizes.len() as u32 + 1;
                let mut stack = vec![(x as i64, y as i64, z as i64)];
                labels[start] = label;
                let mut size = 0;
                while let Some((cx, cy, cz)) = stack.pop() {
                    size += 1;
                    for dz in -1..=1 {
                        for dy in -1..=1 {
                            for dx in -1..=1 {
                                let (nx, ny, nz) = (cx + dx, cy + dy, cz + dz);
                                if get_padded(mask, dims, nx, ny, nz) {
                                    let j = at(dims, nx as usize, ny as usize, nz as usize);
                                    if labels[j] == 0 {
                                        labels[j] = label;
                                        stack.push((nx, ny, nz));
                                    }
                                }
                            }
                        }
                    }
                }
                sizes.push(size);
            }
        }
    }
    (labels, sizes)
}

pub fn remove_small_brute(mask: &[bool], dims: [usize; 3], min_size: usize) -> Vec<bool> {
    let (labels, sizes) = components_flood(mask, dims);
    labels
        .iter()
        .map(|&l| l != 0 && sizes[l as usize - 1] >= min_size)
        .collect()
}

/// Pooled Dice over several (prediction, truth) pairs; `None` if both empty.
pub fn pooled_dice(pairs: &[(Vec<bool>, Vec<bool>)]) -> Option<f64> {
    let (mut inter, mut total) = (0usize, 0usize);
    for (p, g) in pairs {
        for (&a, &b) in p.iter().zip(g) {
            inter += (a && b) as usize;
            total += a as usize + b as usize;
        }
    }
    (total > 0).then(|| 2.0 * inter as f64 / total as f64)
}

/// One volume of a threshold-selection instance.
pub struct ThresholdCase {
    pub dims: [usize; 3],
    pub scores: Vec<f32>,
    pub gt: Vec<bool>,
    pub brain: Vec<bool>,
}

/// Best pooled Dice over every distinct in-brain score used as a threshold
/// (`score > t`, then small-component removal). Ties go to the larger threshold.
pub fn best_threshold_exhaustive(cases: &[ThresholdCase], min_size: usize) -> Option<(f32, f64)> {
    let mut values: Vec<f32> = cases
        .iter()
        .flat_map(|c| {
            c.scores
                .iter()
                .zip(&c.brain)
                .filter(|(_, &b)| b)
                .map(|(&s, _)| s)
        })
        .collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup();
    let mut best: Option<(f32, f64)> = None;
    for &t in &values {
        let pairs: Vec<(Vec<bool>, Vec<bool>)> = cases
            .iter()
            .map(|c| {
                let raw: Vec<bool> = c.scores.iter().map(|&s| s > t).collect();
                (remove_small_brute(&raw, c.dims, min_size), c.gt.clone())
            })
            .collect();
        let d = pooled_dice(&pairs)?;
        if best.is_none_or(|(_, bd)| d >= bd) {
            best = Some((t, d));
        }
    }
    best
}

/// Voxel count of the centered ellipsoid with semi-axes `0.8·n/2`, scanning
/// in integer-scaled coordinates.
pub fn ellipsoid_count(dims: [usize; 3]) -> usize {
    let mut count = 0;
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let mut r = 0.0;
                for (p, n) in [(x, dims[0]), (y, dims[1]), (z, dims[2])] {
                    // (p - (n-1)/2) / (0.4 n) == (2p - n + 1) / (0.8 n)
                    let t = (2.0 * p as f64 - n as f64 + 1.0) / (0.8 * n as f64);
                    r += t * t;
                }
                if r <= 1.0 {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Lattice points within distance `radius` of `center`.
pub fn sphere_count(center: [f64; 3], radius: f64) -> usize {
    let reach = radius.ceil() as i64 + 1;
    let c = center.map(|v| v.round() as i64);
    let mut count = 0;
    for z in c[2] - reach..=c[2] + reach {
        for y in c[1] - reach..=c[1] + reach {
            for x in c[0] - reach..=c[0] + reach {
                let d2 = (x as f64 - center[0]).powi(2)
                    + (y as f64 - center[1]).powi(2)
                    + (z as f64 - center[2]).powi(2);
                if d2 <= radius * radius {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Deterministic xorshift stream for generating test inputs.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(0x2545_F491_4F6C_DD1D) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn unit_f32s(&mut self, n: usize) -> Vec<f32> {
        (0..n).map(|_| self.unit() as f32).collect()
    }

    pub fn bools(&mut self, n: usize, p: f64) -> Vec<bool> {
        (0..n).map(|_| self.unit() < p).collect()
    }
}
