//! Flat key-value experiment configuration files.
//!
//! One `key = value` pair per line; `#` starts a comment; blank lines are
//! ignored. Every key maps 1:1 to a simulation parameter, and unknown keys
//! are rejected so typos fail loudly instead of silently running defaults.
//!
//! ```text
//! mode = ktbt
//! composition = 0,0,10,10,10,10
//! targets = 25,25,25,25
//! d_coms = 200
//! obstacles = false
//! iterations = 50000
//! trials = 20
//! seed = 1
//! arena = 1000,1000
//! speed = 1
//! d_t = 30
//! d_c = 10
//! t1_limit = 50
//! t2_limit = 100
//! study = compare
//! study_values = bl1,bl2,ktbt
//! output_dir = out
//! ```

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::sim::{Composition, SimConfig, SimMode};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { key: String, line: usize },
    #[error("missing required key `{key}`")]
    MissingKey { key: &'static str },
    #[error("line {line}: {key} {message}")]
    Invalid {
        key: String,
        line: usize,
        message: String,
    },
}

/// Baseline presets for the comparison study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareMode {
    /// Everyone all-knowing, no transfer.
    Bl1,
    /// The configured composition, no transfer.
    Bl2,
    /// The configured composition with the full protocol.
    KtBt,
}

impl CompareMode {
    pub fn name(self) -> &'static str {
        match self {
            CompareMode::Bl1 => "bl1",
            CompareMode::Bl2 => "bl2",
            CompareMode::KtBt => "ktbt",
        }
    }
}

/// Which sweep the experiment runs; `None` in a spec means a single base
/// run.
#[derive(Debug, Clone, PartialEq)]
pub enum Study {
    Compare(Vec<CompareMode>),
    /// Per-color target counts to sweep.
    Opportunities(Vec<u32>),
    /// Communication ranges to sweep.
    CommRange(Vec<f64>),
    Heterogeneity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub sim: SimConfig,
    pub study: Option<Study>,
    pub output_dir: PathBuf,
}

const KNOWN_KEYS: [&str; 17] = [
    "mode",
    "composition",
    "targets",
    "d_coms",
    "obstacles",
    "iterations",
    "trials",
    "seed",
    "arena",
    "speed",
    "d_t",
    "d_c",
    "t1_limit",
    "t2_limit",
    "study",
    "study_values",
    "output_dir",
];

struct Entry {
    value: String,
    line: usize,
}

pub fn load_config(path: &Path) -> Result<ExperimentSpec, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Parses configuration text; see the module docs for the format.
pub fn parse_config(text: &str) -> Result<ExperimentSpec, ConfigError> {
    let mut entries: HashMap<&str, Entry> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax { line });
        };
        let key = key.trim();
        let value = value.trim();
        let Some(&known) = KNOWN_KEYS.iter().find(|&&k| k == key) else {
            return Err(ConfigError::UnknownKey {
                key: key.to_string(),
                line,
            });
        };
        if entries.contains_key(known) {
            return Err(ConfigError::DuplicateKey {
                key: key.to_string(),
                line,
            });
        }
        entries.insert(
            known,
            Entry {
                value: value.to_string(),
                line,
            },
        );
    }

    let require = |key: &'static str| -> Result<&Entry, ConfigError> {
        entries.get(key).ok_or(ConfigError::MissingKey { key })
    };
    let invalid = |key: &str, entry: &Entry, message: String| ConfigError::Invalid {
        key: key.to_string(),
        line: entry.line,
        message,
    };

    fn number<T: std::str::FromStr>(
        key: &str,
        entry: &Entry,
        what: &str,
    ) -> Result<T, ConfigError> {
        entry.value.parse::<T>().map_err(|_| ConfigError::Invalid {
            key: key.to_string(),
            line: entry.line,
            message: format!("requires {what}, got `{}`", entry.value),
        })
    }

    fn number_list<T: std::str::FromStr>(
        key: &str,
        entry: &Entry,
        count: usize,
    ) -> Result<Vec<T>, ConfigError> {
        let values: Result<Vec<T>, _> = entry
            .value
            .split(',')
            .map(|part| part.trim().parse::<T>())
            .collect();
        match values {
            Ok(values) if values.len() == count => Ok(values),
            _ => Err(ConfigError::Invalid {
                key: key.to_string(),
                line: entry.line,
                message: format!("requires {count} values"),
            }),
        }
    }

    let mode_entry = require("mode")?;
    let mode = match mode_entry.value.to_ascii_lowercase().as_str() {
        "nt" => SimMode::NoTransfer,
        "ktbt" => SimMode::KtBt,
        other => {
            return Err(invalid(
                "mode",
                mode_entry,
                format!("must be `nt` or `ktbt`, got `{other}`"),
            ))
        }
    };

    let comp: Vec<u32> = number_list("composition", require("composition")?, 6)?;
    let targets: Vec<u32> = number_list("targets", require("targets")?, 4)?;
    let arena: Vec<f64> = number_list("arena", require("arena")?, 2)?;

    let obstacles_entry = require("obstacles")?;
    let obstacles = match obstacles_entry.value.as_str() {
        "true" => true,
        "false" => false,
        other => {
            return Err(invalid(
                "obstacles",
                obstacles_entry,
                format!("must be `true` or `false`, got `{other}`"),
            ))
        }
    };

    let sim = SimConfig {
        mode,
        composition: Composition::new(comp.try_into().unwrap()),
        target_counts: targets.try_into().unwrap(),
        d_coms: number("d_coms", require("d_coms")?, "a number")?,
        obstacles,
        iterations: number("iterations", require("iterations")?, "a nonnegative integer")?,
        trials: number("trials", require("trials")?, "a nonnegative integer")?,
        seed: number("seed", require("seed")?, "a nonnegative integer")?,
        arena: (arena[0], arena[1]),
        speed: number("speed", require("speed")?, "a number")?,
        d_t: number("d_t", require("d_t")?, "a number")?,
        d_c: number("d_c", require("d_c")?, "a number")?,
        t1_limit: number("t1_limit", require("t1_limit")?, "a nonnegative integer")?,
        t2_limit: number("t2_limit", require("t2_limit")?, "a nonnegative integer")?,
        ..SimConfig::default()
    };

    let output_dir = PathBuf::from(&require("output_dir")?.value);

    let study = match entries.get("study") {
        None => {
            if let Some(entry) = entries.get("study_values") {
                return Err(invalid(
                    "study_values",
                    entry,
                    "given without a `study`".to_string(),
                ));
            }
            None
        }
        Some(entry) => Some(parse_study(entry, entries.get("study_values"))?),
    };

    Ok(ExperimentSpec {
        sim,
        study,
        output_dir,
    })
}

fn parse_study(entry: &Entry, values: Option<&Entry>) -> Result<Study, ConfigError> {
    let invalid = |key: &str, entry: &Entry, message: String| ConfigError::Invalid {
        key: key.to_string(),
        line: entry.line,
        message,
    };
    let study_name = entry.value.to_ascii_lowercase();
    if study_name == "heterogeneity" {
        if let Some(v) = values {
            return Err(invalid(
                "study_values",
                v,
                "not used by the heterogeneity study".to_string(),
            ));
        }
        return Ok(Study::Heterogeneity);
    }
    let Some(values) = values else {
        return Err(ConfigError::MissingKey {
            key: "study_values",
        });
    };
    let parts: Vec<&str> = values
        .value
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .collect();
    if parts.is_empty() {
        return Err(invalid(
            "study_values",
            values,
            "requires a nonempty list".to_string(),
        ));
    }
    match study_name.as_str() {
        "compare" => {
            let mut modes = Vec::new();
            for part in &parts {
                modes.push(match part.to_ascii_lowercase().as_str() {
                    "bl1" => CompareMode::Bl1,
                    "bl2" => CompareMode::Bl2,
                    "ktbt" => CompareMode::KtBt,
                    other => {
                        return Err(invalid(
                            "study_values",
                            values,
                            format!("must list bl1/bl2/ktbt, got `{other}`"),
                        ))
                    }
                });
            }
            Ok(Study::Compare(modes))
        }
        "opportunities" => {
            let counts: Result<Vec<u32>, _> = parts.iter().map(|p| p.parse()).collect();
            counts
                .map(Study::Opportunities)
                .map_err(|_| invalid("study_values", values, "requires integers".to_string()))
        }
        "comm_range" => {
            let ranges: Result<Vec<f64>, _> = parts.iter().map(|p| p.parse()).collect();
            ranges
                .map(Study::CommRange)
                .map_err(|_| invalid("study_values", values, "requires numbers".to_string()))
        }
        other => Err(invalid(
            "study",
            entry,
            format!("must be compare/opportunities/comm_range/heterogeneity, got `{other}`"),
        )),
    }
}
