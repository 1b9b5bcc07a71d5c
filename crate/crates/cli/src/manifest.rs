//! Tab-separated dataset manifest.
//!
//! Each non-blank line is either `role<TAB>x<TAB>rec<TAB>gt<TAB>brain` (an
//! input/reconstruction pair) or `role<TAB>map<TAB>gt<TAB>brain` (a
//! precomputed anomaly map). All lines must use the same shape. Relative
//! paths resolve against the manifest's directory; `#` starts a comment line.

use std::fmt;
use std::path::{Path, PathBuf};

use anomap::Role;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Inputs {
    Pair { x: PathBuf, rec: PathBuf },
    Map(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub role: Role,
    pub inputs: Inputs,
    pub gt: PathBuf,
    pub brain: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ManifestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "manifest: {}", self.message)
        } else {
            write!(f, "manifest line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ManifestError {}

pub fn parse(text: &str, base: &Path) -> Result<Vec<Entry>, ManifestError> {
    let mut entries = Vec::new();
    let mut width = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| ManifestError {
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.iter().any(|f| f.is_empty()) {
            return Err(err("empty field".into()));
        }
        if *width.get_or_insert(fields.len()) != fields.len() {
            return Err(err(format!(
                "expected {} columns, found {}",
                width.unwrap(),
                fields.len()
            )));
        }
        let role: Role = fields[0].parse().map_err(err)?;
        let path = |s: &str| base.join(s);
        let (inputs, gt, brain) = match fields.as_slice() {
            [_, x, rec, gt, brain] => (
                Inputs::Pair {
                    x: path(x),
                    rec: path(rec),
                },
                gt,
                brain,
            ),
            [_, map, gt, brain] => (Inputs::Map(path(map)), gt, brain),
            _ => {
                return Err(err(format!(
                    "expected 4 or 5 tab-separated columns, found {}",
                    fields.len()
                )))
            }
        };
        entries.push(Entry {
            role,
            inputs,
            gt: path(gt),
            brain: path(brain),
        });
    }
    if entries.is_empty() {
        return Err(ManifestError {
            line: 0,
            message: "no entries".into(),
        });
    }
    Ok(entries)
}

pub fn render(entries: &[Entry], base: &Path) -> String {
    let rel = |p: &Path| {
        p.strip_prefix(base)
            .unwrap_or(p)
            .to_string_lossy()
            .into_owned()
    };
    let mut out = String::new();
    for e in entries {
        let mut cols = vec![e.role.to_string()];
        match &e.inputs {
            Inputs::Pair { x, rec } => cols.extend([rel(x), rel(rec)]),
            Inputs::Map(m) => cols.push(rel(m)),
        }
        cols.extend([rel(&e.gt), rel(&e.brain)]);
        out.push_str(&cols.join("\t"));
        out.push('\n');
    }
    out
}
