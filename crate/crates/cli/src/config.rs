//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key may appear
//! at most once; unknown keys are rejected.

use std::fmt;
use std::str::FromStr;

use anomap::phantom::{Lesion, LesionPlan};
use anomap::pipeline::{PostprocessConfig, StageOrder, ThresholdSearch};
use anomap::volgrid::Dims;
use anomap::{EvalConfig, ScoreConfig, SigmaSet, SsimConstants, WeightMode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line number; 0 when the problem spans several keys.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub enum LesionSource {
    /// Randomly placed per volume from the volume seed.
    Plan(LesionPlan),
    /// The same lesions in every volume.
    Explicit(Vec<Lesion>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomConfig {
    pub dims: Dims,
    pub volumes: usize,
    /// Leading volumes marked `val`; defaults to half of `volumes`.
    pub val_volumes: Option<usize>,
    pub lesions: LesionSource,
    pub texture_scale: f64,
    pub noise: f64,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self {
            dims: [96, 96, 50],
            volumes: 1,
            val_volumes: None,
            lesions: LesionSource::Plan(LesionPlan {
                count: 3,
                radius: 4.0,
                intensity_offset: 0.2,
                texture_amplitude: 0.2,
            }),
            texture_scale: 0.5,
            noise: 0.02,
        }
    }
}

impl PhantomConfig {
    pub fn validation_count(&self) -> usize {
        self.val_volumes.unwrap_or(self.volumes / 2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub eval: EvalConfig,
    pub seed: u64,
    pub phantom: PhantomConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            eval: EvalConfig::default(),
            seed: 42,
            phantom: PhantomConfig::default(),
        }
    }
}

const KEYS: &[&str] = &[
    "sigma_set",
    "k1",
    "k2",
    "dynamic_range",
    "median_kernel",
    "erosion_iterations",
    "min_component_size",
    "num_thresholds",
    "weight_mode",
    "postprocess_order",
    "seed",
    "dims",
    "volumes",
    "val_volumes",
    "lesions",
    "lesion_count",
    "lesion_radius",
    "lesion_offset",
    "lesion_texture",
    "texture_scale",
    "noise",
];

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("invalid value {value:?} for {key}"))
}

fn parse_list(value: &str) -> Result<Vec<f64>, String> {
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("invalid number {:?} in list", s.trim()))
        })
        .collect()
}

fn parse_dims(value: &str) -> Result<Dims, String> {
    let parts: Vec<&str> = value.split(['x', 'X', ',']).map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("dims must look like 64x64x32, got {value:?}"));
    }
    let mut dims = [0usize; 3];
    for (d, p) in dims.iter_mut().zip(&parts) {
        *d = parse_num("dims", p)?;
        if *d == 0 {
            return Err("dims must be positive".into());
        }
    }
    Ok(dims)
}

/// `cx,cy,cz,radius,offset,texture` entries separated by `;`.
fn parse_lesions(value: &str) -> Result<Vec<Lesion>, String> {
    value
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|entry| {
            let v = parse_list(entry)?;
            if v.len() != 6 {
                return Err(format!(
                    "lesion {entry:?} needs 6 fields: cx,cy,cz,radius,offset,texture"
                ));
            }
            Ok(Lesion {
                center: [v[0], v[1], v[2]],
                radius: v[3],
                intensity_offset: v[4] as f32,
                texture_amplitude: v[5] as f32,
            })
        })
        .collect()
}

impl FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        let mut seen: Vec<(&str, &str, usize)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| ConfigError {
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(err(format!("unknown key {key:?}")));
            }
            if seen.iter().any(|(k, _, _)| *k == key) {
                return Err(err(format!("duplicate key {key:?}")));
            }
            seen.push((key, value, i + 1));
        }
        build(&seen)
    }
}

fn build(entries: &[(&str, &str, usize)]) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let (mut k1, mut k2, mut range) = (0.01, 0.03, 1.0);
    let mut sigmas = None;
    let mut post = PostprocessConfig::default();
    let mut num_thresholds = ThresholdSearch::default().num_candidates();
    let mut weight_mode = WeightMode::default();
    let mut plan = match &cfg.phantom.lesions {
        LesionSource::Plan(p) => *p,
        LesionSource::Explicit(_) => unreachable!(),
    };
    let mut explicit = None;
    let mut plan_line = None;

    for &(key, value, line) in entries {
        let err = |message: String| ConfigError { line, message };
        let r: Result<(), String> = (|| {
            match key {
                "sigma_set" => sigmas = Some(parse_list(value)?),
                "k1" => k1 = parse_num(key, value)?,
                "k2" => k2 = parse_num(key, value)?,
                "dynamic_range" => range = parse_num(key, value)?,
                "median_kernel" => post.median_kernel = parse_num(key, value)?,
                "erosion_iterations" => post.erosion_iterations = parse_num(key, value)?,
                "min_component_size" => post.min_component_size = parse_num(key, value)?,
                "num_thresholds" => num_thresholds = parse_num(key, value)?,
                "weight_mode" => weight_mode = value.parse()?,
                "postprocess_order" => post.order = value.parse::<StageOrder>()?,
                "seed" => cfg.seed = parse_num(key, value)?,
                "dims" => cfg.phantom.dims = parse_dims(value)?,
                "volumes" => cfg.phantom.volumes = parse_num(key, value)?,
                "val_volumes" => cfg.phantom.val_volumes = Some(parse_num(key, value)?),
                "lesions" => explicit = Some(parse_lesions(value)?),
                "lesion_count" => plan.count = parse_num(key, value)?,
                "lesion_radius" => plan.radius = parse_num(key, value)?,
                "lesion_offset" => plan.intensity_offset = parse_num(key, value)?,
                "lesion_texture" => plan.texture_amplitude = parse_num(key, value)?,
                "texture_scale" => cfg.phantom.texture_scale = parse_num(key, value)?,
                "noise" => cfg.phantom.noise = parse_num(key, value)?,
                _ => unreachable!("key list and match arms disagree"),
            }
            if key.starts_with("lesion_") {
                plan_line.get_or_insert(line);
            }
            Ok(())
        })();
        r.map_err(err)?;
    }

    let whole = |message: String| ConfigError { line: 0, message };
    let sigmas = match sigmas {
        Some(list) => SigmaSet::new(list).map_err(|e| whole(e.to_string()))?,
        None => SigmaSet::default(),
    };
    let constants = SsimConstants::new(k1, k2, range).map_err(|e| whole(e.to_string()))?;
    post.validate().map_err(|e| whole(e.to_string()))?;
    let search = ThresholdSearch::new(num_thresholds).map_err(|e| whole(e.to_string()))?;
    cfg.eval = EvalConfig {
        score: ScoreConfig {
            sigmas,
            constants,
            weight_mode,
        },
        post,
        search,
    };

    cfg.phantom.lesions = match (explicit, plan_line) {
        (Some(_), Some(line)) => {
            return Err(ConfigError {
                line,
                message: "lesion_* keys cannot be combined with an explicit lesions list".into(),
            })
        }
        (Some(list), None) => LesionSource::Explicit(list),
        (None, _) => LesionSource::Plan(plan),
    };
    let p = &cfg.phantom;
    if p.volumes == 0 {
        return Err(whole("volumes must be at least 1".into()));
    }
    if p.val_volumes.is_some_and(|v| v > p.volumes) {
        return Err(whole("val_volumes exceeds volumes".into()));
    }
    if !(0.0..=1.0).contains(&p.texture_scale) {
        return Err(whole("texture_scale must lie in [0, 1]".into()));
    }
    if !p.noise.is_finite() || p.noise < 0.0 {
        return Err(whole("noise must be finite and non-negative".into()));
    }
    Ok(cfg)
}
