//! Post-processing and validation-driven binarization of anomaly maps.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imageops::{erode_mask, median_filter_3d, remove_small_components};
use crate::metrics::Overlap;
use crate::scoring::{masked, AnomalyMap};
use crate::volgrid::Mask3D;

/// Whether the median filter runs before or after zeroing outside the brain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StageOrder {
    #[default]
    MedianFirst,
    MaskFirst,
}

impl std::str::FromStr for StageOrder {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "median-first" => Ok(Self::MedianFirst),
            "mask-first" => Ok(Self::MaskFirst),
            other => Err(format!(
                "unknown post-processing order {other:?} (expected median-first|mask-first)"
            )),
        }
    }
}

impl std::fmt::Display for StageOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::MedianFirst => "median-first",
            Self::MaskFirst => "mask-first",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostprocessConfig {
    pub median_kernel: usize,
    pub erosion_iterations: usize,
    pub min_component_size: usize,
    pub order: StageOrder,
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        Self {
            median_kernel: 5,
            erosion_iterations: 1,
            min_component_size: 8,
            order: StageOrder::MedianFirst,
        }
    }
}

impl PostprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.median_kernel == 0 || self.median_kernel % 2 == 0 {
            return Err(Error::InvalidMedianKernel(self.median_kernel));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdSearch {
    num_candidates: usize,
}

impl ThresholdSearch {
    pub fn new(num_candidates: usize) -> Result<Self> {
        if num_candidates < 2 {
            return Err(Error::TooFewCandidates(num_candidates));
        }
        Ok(Self { num_candidates })
    }

    pub fn num_candidates(&self) -> usize {
        self.num_candidates
    }
}

impl Default for ThresholdSearch {
    fn default() -> Self {
        Self {
            num_candidates: 100,
        }
    }
}

/// Median filter, then zero scores outside the eroded brain mask (or the
/// reverse with [`StageOrder::MaskFirst`]).
pub fn postprocess_map(
    map: &AnomalyMap,
    brain: &Mask3D,
    cfg: &PostprocessConfig,
) -> Result<AnomalyMap> {
    cfg.validate()?;
    map.volume().check_same_dims(brain.dims())?;
    let eroded = erode_mask(brain, cfg.erosion_iterations);
    match cfg.order {
        StageOrder::MedianFirst => {
            let filtered = median_filter_3d(map.volume(), cfg.median_kernel)?;
            masked(&AnomalyMap::new(filtered), &eroded)
        }
        StageOrder::MaskFirst => {
            let zeroed = masked(map, &eroded)?;
            let filtered = median_filter_3d(zeroed.volume(), cfg.median_kernel)?;
            masked(&AnomalyMap::new(filtered), &eroded)
        }
    }
}

fn threshold_mask(map: &AnomalyMap, t: f32) -> Mask3D {
    let data = map.data().iter().map(|&s| s > t).collect();
    Mask3D::from_parts_unchecked(map.dims(), map.volume().spacing().map(f32::to_bits), data)
}

/// Voxels scoring strictly above `t`, with small components removed.
pub fn binarize(map: &AnomalyMap, t: f32, cfg: &PostprocessConfig) -> Result<Mask3D> {
    if !t.is_finite() {
        return Err(Error::NonFiniteThreshold(t));
    }
    Ok(remove_small_components(
        &threshold_mask(map, t),
        cfg.min_component_size,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdChoice {
    pub threshold: f32,
    pub dice: f64,
}

/// Quantile grid over the pooled in-brain scores: nearest-rank positions
/// `round(j·(N-1)/(n-1))`, deduplicated, ascending. When `N ≤ n` every
/// score is a candidate.
pub fn candidate_thresholds(
    maps: &[AnomalyMap],
    brains: &[Mask3D],
    search: &ThresholdSearch,
) -> Result<Vec<f32>> {
    if maps.is_empty() {
        return Err(Error::EmptyInput);
    }
    if maps.len() != brains.len() {
        return Err(Error::ListLengthMismatch(maps.len(), brains.len()));
    }
    let mut pooled: Vec<f32> = Vec::new();
    for (m, b) in maps.iter().zip(brains) {
        m.volume().check_same_dims(b.dims())?;
        pooled.extend(
            m.data()
                .iter()
                .zip(b.data())
                .filter(|(_, &inside)| inside)
                .map(|(&s, _)| s),
        );
    }
    if pooled.is_empty() {
        pooled = maps.iter().flat_map(|m| m.data().iter().copied()).collect();
    }
    pooled.sort_unstable_by(f32::total_cmp);
    let n = search.num_candidates();
    let last = pooled.len() - 1;
    let mut grid: Vec<f32> = (0..n)
        .map(|j| {
            let pos = (j as f64 * last as f64 / (n - 1) as f64).round() as usize;
            pooled[pos.min(last)]
        })
        .collect();
    grid.dedup();
    Ok(grid)
}

/// Pooled overlap counts of `binarize(map, t)` against the ground truths.
pub fn pooled_overlap(
    maps: &[AnomalyMap],
    gts: &[Mask3D],
    t: f32,
    cfg: &PostprocessConfig,
) -> Result<Overlap> {
    let mut total = Overlap::default();
    for (m, g) in maps.iter().zip(gts) {
        total += Overlap::of(&binarize(m, t, cfg)?, g)?;
    }
    Ok(total)
}

/// Picks the candidate threshold with the highest pooled validation Dice.
/// Ties go to the larger threshold.
pub fn select_threshold(
    maps: &[AnomalyMap],
    gts: &[Mask3D],
    brains: &[Mask3D],
    search: &ThresholdSearch,
    cfg: &PostprocessConfig,
) -> Result<ThresholdChoice> {
    if maps.is_empty() {
        return Err(Error::EmptyInput);
    }
    if maps.len() != gts.len() {
        return Err(Error::ListLengthMismatch(maps.len(), gts.len()));
    }
    for (m, g) in maps.iter().zip(gts) {
        m.volume().check_same_dims(g.dims())?;
    }
    if gts.iter().all(|g| g.count() == 0) {
        return Err(Error::EmptyDice);
    }
    let grid = candidate_thresholds(maps, brains, search)?;
    let scores: Vec<f64> = grid
        .par_iter()
        .map(|&t| pooled_overlap(maps, gts, t, cfg)?.dice())
        .collect::<Result<_>>()?;
    let mut best = ThresholdChoice {
        threshold: grid[0],
        dice: scores[0],
    };
    for (&t, &d) in grid.iter().zip(&scores).skip(1) {
        if d >= best.dice {
            best = ThresholdChoice {
                threshold: t,
                dice: d,
            };
        }
    }
    Ok(best)
}
