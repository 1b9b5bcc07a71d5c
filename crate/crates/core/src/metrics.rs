//! Dice overlap and the per-method evaluation harness.

use std::ops::AddAssign;

use crate::error::{Error, Result};
use crate::pipeline::{
    binarize, postprocess_map, select_threshold, PostprocessConfig, ThresholdSearch,
};
use crate::scoring::{
    ensemble_from_ssim, l1_map, ssim_anomaly_from, ssim_stack, validate_intensity, AnomalyMap,
    Method, ScoreConfig,
};
use crate::volgrid::{Mask3D, Volume3D};

/// Voxel counts behind a Dice score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overlap {
    pub intersection: u64,
    pub predicted: u64,
    pub truth: u64,
}

impl Overlap {
    pub fn of(pred: &Mask3D, gt: &Mask3D) -> Result<Self> {
        pred.check_same_dims(gt.dims())?;
        let mut o = Overlap::default();
        for (&p, &g) in pred.data().iter().zip(gt.data()) {
            o.intersection += (p && g) as u64;
            o.predicted += p as u64;
            o.truth += g as u64;
        }
        Ok(o)
    }

    /// `2|A∩B| / (|A|+|B|)`; undefined when both sets are empty.
    pub fn dice(&self) -> Result<f64> {
        let denom = self.predicted + self.truth;
        if denom == 0 {
            return Err(Error::EmptyDice);
        }
        Ok(2.0 * self.intersection as f64 / denom as f64)
    }
}

impl AddAssign for Overlap {
    fn add_assign(&mut self, rhs: Self) {
        self.intersection += rhs.intersection;
        self.predicted += rhs.predicted;
        self.truth += rhs.truth;
    }
}

pub fn dice(pred: &Mask3D, gt: &Mask3D) -> Result<f64> {
    Overlap::of(pred, gt)?.dice()
}

/// Dice over the voxels of all volumes taken together.
pub fn pooled_dice(preds: &[Mask3D], gts: &[Mask3D]) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::EmptyInput);
    }
    if preds.len() != gts.len() {
        return Err(Error::ListLengthMismatch(preds.len(), gts.len()));
    }
    let mut total = Overlap::default();
    for (p, g) in preds.iter().zip(gts) {
        total += Overlap::of(p, g)?;
    }
    total.dice()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Validation,
    Test,
}

impl std::str::FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "val" => Ok(Self::Validation),
            "test" => Ok(Self::Test),
            other => Err(format!("unknown role {other:?} (expected val|test)")),
        }
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Validation => "val",
            Self::Test => "test",
        })
    }
}

/// One volume of an evaluation set.
#[derive(Debug, Clone)]
pub struct Case {
    pub role: Role,
    pub x: Volume3D,
    pub rec: Volume3D,
    pub gt: Mask3D,
    pub brain: Mask3D,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalConfig {
    pub score: ScoreConfig,
    pub post: PostprocessConfig,
    pub search: ThresholdSearch,
}

/// Test-split Dice of a single test volume; `None` when prediction and
/// ground truth are both empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeDice {
    pub index: usize,
    pub dice: Option<f64>,
}

/// Outcome of scoring one method over a split dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodEval {
    pub method: Method,
    pub chosen_threshold: f32,
    pub validation_dice: f64,
    pub dataset_dice: f64,
    pub per_volume_dice: Vec<VolumeDice>,
}

/// Single-scale points (in sigma order), then the ensemble, then l1.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub points: Vec<MethodEval>,
    pub config: EvalConfig,
}

impl EvalReport {
    pub fn per_sigma_curve(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| match p.method {
                Method::Ssim(s) => Some((s, p.dataset_dice)),
                _ => None,
            })
            .collect()
    }

    pub fn ensemble(&self) -> Option<&MethodEval> {
        self.points.iter().find(|p| p.method == Method::SsimEns)
    }

    pub fn l1(&self) -> Option<&MethodEval> {
        self.points.iter().find(|p| p.method == Method::L1)
    }

    /// Sigma with the highest test Dice; the first one wins ties.
    pub fn best_sigma(&self) -> Option<(f64, f64)> {
        self.per_sigma_curve()
            .into_iter()
            .fold(None, |best: Option<(f64, f64)>, (s, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((s, d)),
            })
    }
}

fn check_split(roles: &[Role]) -> Result<()> {
    if roles.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !roles.contains(&Role::Validation) {
        return Err(Error::EmptySplit("validation"));
    }
    if !roles.contains(&Role::Test) {
        return Err(Error::EmptySplit("test"));
    }
    Ok(())
}

/// Post-processes raw maps, picks a threshold on the validation volumes and
/// reports Dice on the test volumes.
pub fn evaluate_maps(
    method: Method,
    maps: &[AnomalyMap],
    gts: &[Mask3D],
    brains: &[Mask3D],
    roles: &[Role],
    cfg: &EvalConfig,
) -> Result<MethodEval> {
    let n = maps.len();
    for len in [gts.len(), brains.len(), roles.len()] {
        if len != n {
            return Err(Error::ListLengthMismatch(n, len));
        }
    }
    check_split(roles)?;
    let processed: Vec<AnomalyMap> = maps
        .iter()
        .zip(brains)
        .map(|(m, b)| postprocess_map(m, b, &cfg.post))
        .collect::<Result<_>>()?;

    let pick = |role: Role| -> (Vec<AnomalyMap>, Vec<Mask3D>, Vec<Mask3D>, Vec<usize>) {
        let idx: Vec<usize> = (0..n).filter(|&i| roles[i] == role).collect();
        (
            idx.iter().map(|&i| processed[i].clone()).collect(),
            idx.iter().map(|&i| gts[i].clone()).collect(),
            idx.iter().map(|&i| brains[i].clone()).collect(),
            idx,
        )
    };
    let (val_maps, val_gts, val_brains, _) = pick(Role::Validation);
    let choice = select_threshold(&val_maps, &val_gts, &val_brains, &cfg.search, &cfg.post)?;

    let (test_maps, test_gts, _, test_idx) = pick(Role::Test);
    let mut total = Overlap::default();
    let mut per_volume = Vec::with_capacity(test_idx.len());
    for ((m, g), &index) in test_maps.iter().zip(&test_gts).zip(&test_idx) {
        let o = Overlap::of(&binarize(m, choice.threshold, &cfg.post)?, g)?;
        total += o;
        per_volume.push(VolumeDice {
            index,
            dice: o.dice().ok(),
        });
    }
    Ok(MethodEval {
        method,
        chosen_threshold: choice.threshold,
        validation_dice: choice.dice,
        dataset_dice: total.dice()?,
        per_volume_dice: per_volume,
    })
}

fn unzip_cases(cases: &[Case]) -> (Vec<Mask3D>, Vec<Mask3D>, Vec<Role>) {
    (
        cases.iter().map(|c| c.gt.clone()).collect(),
        cases.iter().map(|c| c.brain.clone()).collect(),
        cases.iter().map(|c| c.role).collect(),
    )
}

fn check_cases(cases: &[Case], cfg: &EvalConfig) -> Result<()> {
    check_split(&cases.iter().map(|c| c.role).collect::<Vec<_>>())?;
    for c in cases {
        let dims = c.x.dims();
        c.rec.check_same_dims(dims)?;
        c.gt.check_same_dims(dims)?;
        c.brain.check_same_dims(dims)?;
        validate_intensity(&c.x, &cfg.score.constants)?;
        validate_intensity(&c.rec, &cfg.score.constants)?;
    }
    Ok(())
}

/// Raw (not post-processed) anomaly maps of one method for every case.
pub fn score_cases(method: Method, cases: &[Case], cfg: &ScoreConfig) -> Result<Vec<AnomalyMap>> {
    cases
        .iter()
        .map(|c| crate::scoring::anomaly_map(method, &c.x, &c.rec, cfg))
        .collect()
}

/// Evaluates one method end to end.
pub fn evaluate_method(method: Method, cases: &[Case], cfg: &EvalConfig) -> Result<MethodEval> {
    check_cases(cases, cfg)?;
    let maps = score_cases(method, cases, &cfg.score)?;
    let (gts, brains, roles) = unzip_cases(cases);
    evaluate_maps(method, &maps, &gts, &brains, &roles, cfg)
}

/// Every single-scale SSIM in the sigma set, the ensemble over the set, and
/// l1, each with its own validation-selected threshold.
pub fn sigma_sweep(cases: &[Case], cfg: &EvalConfig) -> Result<EvalReport> {
    check_cases(cases, cfg)?;
    let sc = &cfg.score;
    let (gts, brains, roles) = unzip_cases(cases);
    let stacks: Vec<Vec<Volume3D>> = cases
        .iter()
        .map(|c| ssim_stack(&c.x, &c.rec, &sc.sigmas, &sc.constants))
        .collect::<Result<_>>()?;

    let mut points = Vec::with_capacity(sc.sigmas.len() + 2);
    for (i, &sigma) in sc.sigmas.as_slice().iter().enumerate() {
        let maps: Vec<AnomalyMap> = stacks.iter().map(|s| ssim_anomaly_from(&s[i])).collect();
        points.push(evaluate_maps(
            Method::Ssim(sigma),
            &maps,
            &gts,
            &brains,
            &roles,
            cfg,
        )?);
    }
    let ens: Vec<AnomalyMap> = stacks
        .iter()
        .map(|s| ensemble_from_ssim(s, sc.weight_mode))
        .collect::<Result<_>>()?;
    points.push(evaluate_maps(
        Method::SsimEns,
        &ens,
        &gts,
        &brains,
        &roles,
        cfg,
    )?);
    let l1: Vec<AnomalyMap> = cases
        .iter()
        .map(|c| l1_map(&c.x, &c.rec))
        .collect::<Result<_>>()?;
    points.push(evaluate_maps(Method::L1, &l1, &gts, &brains, &roles, cfg)?);
    Ok(EvalReport {
        points,
        config: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(bits: &[u8]) -> Mask3D {
        Mask3D::new([bits.len(), 1, 1], bits.iter().map(|&b| b == 1).collect()).unwrap()
    }

    #[test]
    fn dice_examples() {
        let a = line(&[1, 1, 1, 1, 0, 0, 0, 0]);
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
        let b = line(&[0, 0, 0, 0, 1, 1, 1, 1]);
        assert_eq!(dice(&a, &b).unwrap(), 0.0);
        let c = line(&[0, 0, 1, 1, 1, 1, 0, 0]);
        assert_eq!(dice(&a, &c).unwrap(), 0.5);
        let e = line(&[0; 8]);
        assert_eq!(dice(&e, &e), Err(Error::EmptyDice));
        assert_eq!(dice(&e, &a).unwrap(), 0.0);
    }

    #[test]
    fn pooled_examples() {
        let a = line(&[1, 1, 1, 1, 0, 0]);
        let a_gt = line(&[0, 0, 1, 1, 1, 1]);
        let b = line(&[1, 1, 0, 0, 0, 0]);
        let b_gt = line(&[0, 0, 1, 1, 0, 0]);
        assert_eq!(
            pooled_dice(&[a.clone()], &[a_gt.clone()]).unwrap(),
            dice(&a, &a_gt).unwrap()
        );
        let p = pooled_dice(&[a.clone(), b], &[a_gt, b_gt]).unwrap();
        assert!((p - 4.0 / 12.0).abs() < 1e-15);
        assert_eq!(
            pooled_dice(&[a.clone(), a.clone()], &[a.clone(), a]).unwrap(),
            1.0
        );
        assert_eq!(pooled_dice(&[], &[]), Err(Error::EmptyInput));
    }

    #[test]
    fn split_must_have_both_sides() {
        assert_eq!(
            check_split(&[Role::Test]),
            Err(Error::EmptySplit("validation"))
        );
        assert_eq!(
            check_split(&[Role::Validation]),
            Err(Error::EmptySplit("test"))
        );
        assert!(check_split(&[Role::Test, Role::Validation]).is_ok());
    }

    #[test]
    fn best_sigma_prefers_first_on_tie() {
        let mk = |s: f64, d: f64| MethodEval {
            method: Method::Ssim(s),
            chosen_threshold: 0.0,
            validation_dice: 0.0,
            dataset_dice: d,
            per_volume_dice: vec![],
        };
        let r = EvalReport {
            points: vec![mk(0.3, 0.5), mk(0.5, 0.7), mk(0.7, 0.7)],
            config: EvalConfig::default(),
        };
        assert_eq!(r.best_sigma(), Some((0.5, 0.7)));
    }
}
