//! Library side of the `anomap` command-line tool.
//!
//! Exit codes: 0 on success, 1 for invalid input or configuration, 2 for
//! I/O failures.

pub mod config;
pub mod manifest;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anomap::metrics::{evaluate_maps, evaluate_method, sigma_sweep};
use anomap::mvol;
use anomap::phantom::{generate, place_lesions, PhantomSpec};
use anomap::scoring::{anomaly_map, masked};
use anomap::MvolError;
use anomap::{AnomalyMap, Case, Mask3D, Method, MethodEval, Role, Volume3D};
use clap::{Parser, Subcommand};

use config::LesionSource;
pub use config::RunConfig;
use manifest::{Entry, Inputs};

pub const MANIFEST_NAME: &str = "manifest.tsv";
pub const PHANTOM_FILES: [&str; 5] = ["healthy", "unhealthy", "gt", "brain", "rec"];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Invalid(_) => 1,
            Self::Io(_) => 2,
        }
    }
}

impl From<anomap::Error> for CliError {
    fn from(e: anomap::Error) -> Self {
        Self::Invalid(e.to_string())
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        Self::Invalid(e.to_string())
    }
}

impl From<manifest::ManifestError> for CliError {
    fn from(e: manifest::ManifestError) -> Self {
        Self::Invalid(e.to_string())
    }
}

fn mvol_err(path: &Path, e: MvolError) -> CliError {
    let msg = format!("{}: {e}", path.display());
    match e {
        MvolError::Io(_) => CliError::Io(msg),
        _ => CliError::Invalid(msg),
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn read_volume(path: &Path) -> Result<Volume3D, CliError> {
    mvol::read_mvol(path).map_err(|e| mvol_err(path, e))
}

fn read_mask(path: &Path) -> Result<Mask3D, CliError> {
    mvol::read_mask(path).map_err(|e| mvol_err(path, e))
}

fn write_volume(v: &Volume3D, path: &Path) -> Result<(), CliError> {
    mvol::write_mvol(v, path).map_err(|e| mvol_err(path, e))
}

fn write_mask(m: &Mask3D, path: &Path) -> Result<(), CliError> {
    mvol::write_mask(m, path).map_err(|e| mvol_err(path, e))
}

fn write_text(text: &str, path: &Path) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            Ok(text.parse()?)
        }
    }
}

pub fn load_manifest(path: &Path) -> Result<Vec<Entry>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    Ok(manifest::parse(&text, base)?)
}

/// Phantom spec for volume `i` of the configured dataset.
pub fn phantom_spec(cfg: &RunConfig, i: usize) -> Result<PhantomSpec, CliError> {
    let p = &cfg.phantom;
    let seed = cfg.seed.wrapping_add(i as u64);
    let lesions = match &p.lesions {
        LesionSource::Plan(plan) => place_lesions(p.dims, seed, plan)?,
        LesionSource::Explicit(list) => list.clone(),
    };
    Ok(PhantomSpec {
        dims: p.dims,
        seed,
        lesions,
        texture_scale: p.texture_scale,
        noise: p.noise,
    })
}

/// Writes the five phantom volumes. A single volume goes straight into
/// `out`; several go into `out/vol_NNN/` alongside a manifest whose leading
/// volumes are marked `val`.
pub fn cmd_phantom(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let p = &cfg.phantom;
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let mut entries = Vec::with_capacity(p.volumes);
    for i in 0..p.volumes {
        let phantom = generate(&phantom_spec(cfg, i)?)?;
        let dir = if p.volumes == 1 {
            out.to_path_buf()
        } else {
            let d = out.join(format!("vol_{i:03}"));
            fs::create_dir_all(&d).map_err(|e| io_err(&d, e))?;
            d
        };
        let file = |name: &str| dir.join(format!("{name}.mvol"));
        write_volume(&phantom.healthy, &file("healthy"))?;
        write_volume(&phantom.unhealthy, &file("unhealthy"))?;
        write_mask(&phantom.gt, &file("gt"))?;
        write_mask(&phantom.brain, &file("brain"))?;
        write_volume(&phantom.rec, &file("rec"))?;
        entries.push(Entry {
            role: if i < p.validation_count() {
                Role::Validation
            } else {
                Role::Test
            },
            inputs: Inputs::Pair {
                x: file("unhealthy"),
                rec: file("rec"),
            },
            gt: file("gt"),
            brain: file("brain"),
        });
    }
    if p.volumes > 1 {
        write_text(&manifest::render(&entries, out), &out.join(MANIFEST_NAME))?;
    }
    Ok(())
}

/// Raw anomaly map, zeroed outside `brain` when given.
pub fn score_volume(
    x: &Volume3D,
    rec: &Volume3D,
    brain: Option<&Mask3D>,
    method: Method,
    cfg: &RunConfig,
) -> Result<AnomalyMap, CliError> {
    let map = anomaly_map(method, x, rec, &cfg.eval.score)?;
    Ok(match brain {
        Some(b) => masked(&map, b)?,
        None => map,
    })
}

pub struct ScoreArgs<'a> {
    pub x: &'a Path,
    pub rec: &'a Path,
    pub brain: Option<&'a Path>,
    pub method: Method,
    pub out: &'a Path,
    pub report: Option<&'a Path>,
}

/// Sidecar report path used when none is given: `<out>.csv`.
pub fn default_report_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".csv");
    PathBuf::from(s)
}

pub fn cmd_score(args: &ScoreArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let x = read_volume(args.x)?;
    let rec = read_volume(args.rec)?;
    let brain = args.brain.map(read_mask).transpose()?;
    let map = score_volume(&x, &rec, brain.as_ref(), args.method, cfg)?;
    write_volume(map.volume(), args.out)?;
    let report = args
        .report
        .map(Path::to_path_buf)
        .unwrap_or_else(|| default_report_path(args.out));
    let [w, h, d] = map.dims();
    let text = format!(
        "method,dims,output\n{},{w}x{h}x{d},{}\n",
        args.method,
        args.out.display()
    );
    write_text(&text, &report)
}

pub fn load_cases(entries: &[Entry]) -> Result<Vec<Case>, CliError> {
    entries
        .iter()
        .map(|e| match &e.inputs {
            Inputs::Pair { x, rec } => Ok(Case {
                role: e.role,
                x: read_volume(x)?,
                rec: read_volume(rec)?,
                gt: read_mask(&e.gt)?,
                brain: read_mask(&e.brain)?,
            }),
            Inputs::Map(_) => Err(CliError::Invalid(
                "expected x and rec columns, found a precomputed map".into(),
            )),
        })
        .collect()
}

/// Evaluates `methods` over the manifest; with no methods, the full sweep
/// (every sigma, the ensemble and l1). Precomputed-map manifests take
/// exactly one method naming what the maps are.
pub fn evaluate(
    entries: &[Entry],
    methods: &[Method],
    cfg: &RunConfig,
) -> Result<Vec<MethodEval>, CliError> {
    let maps_given = entries.iter().all(|e| matches!(e.inputs, Inputs::Map(_)));
    if maps_given {
        let [method] = methods else {
            return Err(CliError::Invalid(
                "a precomputed-map manifest needs exactly one --method".into(),
            ));
        };
        let mut maps = Vec::with_capacity(entries.len());
        let mut gts = Vec::with_capacity(entries.len());
        let mut brains = Vec::with_capacity(entries.len());
        for e in entries {
            let Inputs::Map(path) = &e.inputs else {
                unreachable!()
            };
            maps.push(AnomalyMap::new(read_volume(path)?));
            gts.push(read_mask(&e.gt)?);
            brains.push(read_mask(&e.brain)?);
        }
        let roles: Vec<Role> = entries.iter().map(|e| e.role).collect();
        return Ok(vec![evaluate_maps(
            *method, &maps, &gts, &brains, &roles, &cfg.eval,
        )?]);
    }
    let cases = load_cases(entries)?;
    if methods.is_empty() {
        return Ok(sigma_sweep(&cases, &cfg.eval)?.points);
    }
    methods
        .iter()
        .map(|&m| Ok(evaluate_method(m, &cases, &cfg.eval)?))
        .collect()
}

pub fn cmd_evaluate(
    manifest: &Path,
    methods: &[Method],
    cfg: &RunConfig,
    out: &Path,
) -> Result<(), CliError> {
    let entries = load_manifest(manifest)?;
    let evals = evaluate(&entries, methods, cfg)?;
    write_text(&report::evaluate_csv(&evals), out)
}

pub fn cmd_sweep(dataset: &Path, cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let entries = load_manifest(&dataset.join(MANIFEST_NAME))?;
    let cases = load_cases(&entries)?;
    let report = sigma_sweep(&cases, &cfg.eval)?;
    write_text(&report::sweep_csv(&report), out)
}

#[derive(Parser, Debug)]
#[command(
    name = "anomap",
    version,
    about = "Volumetric anomaly scoring with SSIM, SSIM-ens and l1"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate phantom volumes (and a manifest when volumes > 1).
    Phantom {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute a raw anomaly map from an input and its reconstruction.
    Score {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        rec: PathBuf,
        #[arg(long)]
        brain: Option<PathBuf>,
        /// l1, ssim:<sigma> or ssim-ens
        #[arg(long)]
        method: Method,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Sidecar CSV recording the method; defaults to <out>.csv
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Threshold on validation volumes and report Dice on test volumes.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        /// Repeatable; omit to evaluate every sigma, ssim-ens and l1
        #[arg(long)]
        method: Vec<Method>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dice as a function of sigma, plus ssim-ens and l1.
    Sweep {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Some(raw) = std::env::var_os("ANOMAP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .to_str()
        .and_then(|s| s.trim().parse().ok())
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::Invalid(format!(
                "ANOMAP_THREADS must be a positive integer, got {raw:?}"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))
}

fn dispatch(command: Command) -> Result<(), CliError> {
    configure_threads()?;
    match command {
        Command::Phantom { config, out } => cmd_phantom(&load_config(config.as_deref())?, &out),
        Command::Score {
            x,
            rec,
            brain,
            method,
            config,
            out,
            report,
        } => {
            let cfg = load_config(config.as_deref())?;
            let args = ScoreArgs {
                x: &x,
                rec: &rec,
                brain: brain.as_deref(),
                method,
                out: &out,
                report: report.as_deref(),
            };
            cmd_score(&args, &cfg)
        }
        Command::Evaluate {
            manifest,
            method,
            config,
            out,
        } => cmd_evaluate(&manifest, &method, &load_config(config.as_deref())?, &out),
        Command::Sweep {
            dataset,
            config,
            out,
        } => cmd_sweep(&dataset, &load_config(config.as_deref())?, &out),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("anomap: {e}");
            e.exit_code()
        }
    }
}
