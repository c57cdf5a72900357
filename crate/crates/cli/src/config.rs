use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use qcs_core::sampling::DEFAULT_RESAMPLES;
use qcs_core::StateSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Qcs,
    Purity,
    PnDist,
    Overlap,
    Compare,
    Figure2,
    Sample,
    Wigner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    All,
    Direct,
    TwoCopy,
    Wigner,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
    /// Binary Wigner grid.
    Bin,
}

/// qcslab: quadrature coherence scale laboratory.
#[derive(Debug, Parser)]
#[command(name = "qcslab", version)]
pub struct Args {
    #[arg(value_enum)]
    pub command: CommandName,
    /// State file (JSON). Repeat for commands taking two states.
    #[arg(long = "state", value_name = "FILE")]
    pub states: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub route: Option<Route>,
    /// Output file (directory for figure2). Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fock cutoff (levels per mode), overriding the automatic choice.
    #[arg(long)]
    pub cutoff: Option<usize>,
    #[arg(long)]
    pub resamples: Option<usize>,
    /// JSON run configuration. A field may come from the file or from a
    /// flag, never both.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// A state given in a config file: a path (relative to the file) or inline.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum StateRef {
    Path(PathBuf),
    Inline(StateSpec),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub state: Option<StateRef>,
    pub states: Option<Vec<StateRef>>,
    pub route: Option<Route>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub cutoff: Option<usize>,
    pub resamples: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("bad config {}: {e}", path.display())))
    }
}

/// Fully resolved, validated run parameters. Serializes (without the output
/// path) to the canonical form that is hashed into output metadata.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: CommandName,
    pub states: Vec<StateSpec>,
    pub route: Route,
    pub format: Format,
    pub shots: Option<u64>,
    pub seed: u64,
    pub cutoff: Option<usize>,
    pub resamples: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

fn pick<T>(name: &str, file: Option<T>, flag: Option<T>) -> CliResult<Option<T>> {
    match (file, flag) {
        (Some(_), Some(_)) => Err(CliError::Validation(format!(
            "`{name}` is set both in the config file and on the command line"
        ))),
        (a, b) => Ok(a.or(b)),
    }
}

pub fn load_state(path: &Path) -> CliResult<StateSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read state {}: {e}", path.display())))?;
    Ok(StateSpec::from_json(&text)?)
}

impl RunConfig {
    pub fn from_args(args: &Args) -> CliResult<Self> {
        let file = match &args.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let base = args
            .config
            .as_ref()
            .and_then(|p| p.parent().map(Path::to_path_buf))
            .unwrap_or_default();

        let file_states = match (file.state, file.states) {
            (Some(_), Some(_)) => {
                return Err(CliError::Validation(
                    "config file sets both `state` and `states`".into(),
                ))
            }
            (Some(s), None) => Some(vec![s]),
            (None, many) => many,
        };
        let file_states = file_states
            .map(|refs| {
                refs.into_iter()
                    .map(|r| match r {
                        StateRef::Path(p) => load_state(&base.join(p)),
                        StateRef::Inline(spec) => {
                            spec.validate()?;
                            Ok(spec)
                        }
                    })
                    .collect::<CliResult<Vec<_>>>()
            })
            .transpose()?;
        let flag_states = if args.states.is_empty() {
            None
        } else {
            Some(
                args.states
                    .iter()
                    .map(|p| load_state(p))
                    .collect::<CliResult<Vec<_>>>()?,
            )
        };

        let raw = RawConfig {
            command: args.command,
            states: pick("state", file_states, flag_states)?.unwrap_or_default(),
            route: pick("route", file.route, args.route)?,
            out: pick("out", file.out.map(|p| base.join(p)), args.out.clone())?,
            format: pick("format", file.format, args.format)?,
            shots: pick("shots", file.shots, args.shots)?,
            seed: pick("seed", file.seed, args.seed)?,
            cutoff: pick("cutoff", file.cutoff, args.cutoff)?,
            resamples: pick("resamples", file.resamples, args.resamples)?,
        };
        raw.resolve()
    }

    /// Defaults for programmatic use.
    pub fn new(command: CommandName, states: Vec<StateSpec>) -> CliResult<Self> {
        RawConfig {
            command,
            states,
            ..RawConfig::default()
        }
        .resolve()
    }

    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canonical)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Debug)]
struct RawConfig {
    command: CommandName,
    states: Vec<StateSpec>,
    route: Option<Route>,
    out: Option<PathBuf>,
    format: Option<Format>,
    shots: Option<u64>,
    seed: Option<u64>,
    cutoff: Option<usize>,
    resamples: Option<usize>,
}

impl Default for RawConfig {
    fn default() -> Self {
        Self {
            command: CommandName::Qcs,
            states: Vec::new(),
            route: None,
            out: None,
            format: None,
            shots: None,
            seed: None,
            cutoff: None,
            resamples: None,
        }
    }
}

impl RawConfig {
    fn resolve(self) -> CliResult<RunConfig> {
        use CommandName::*;
        let invalid = |msg: String| Err(CliError::Validation(msg));
        let name = serde_json::to_value(self.command).expect("serializes");
        let name = name.as_str().unwrap_or("?").to_string();

        let (min_states, max_states) = match self.command {
            Figure2 => (0, 0),
            Overlap => (2, 2),
            PnDist => (1, 2),
            _ => (1, 1),
        };
        let n = self.states.len();
        if n < min_states || n > max_states {
            return invalid(format!(
                "`{name}` takes {} state(s), got {n}",
                if min_states == max_states {
                    min_states.to_string()
                } else {
                    format!("{min_states}-{max_states}")
                }
            ));
        }

        let takes_route = matches!(self.command, Qcs | Purity | Compare | Overlap);
        if self.route.is_some() && !takes_route {
            return invalid(format!("`{name}` does not take --route"));
        }
        if self.command != Sample {
            for (flag, set) in [
                ("shots", self.shots.is_some()),
                ("seed", self.seed.is_some()),
                ("resamples", self.resamples.is_some()),
            ] {
                if set {
                    return invalid(format!("`{name}` does not take --{flag}"));
                }
            }
        }
        if self.command == Figure2 && self.cutoff.is_some() {
            return invalid("`figure2` uses fixed cutoffs".into());
        }

        let allowed: &[Format] = match self.command {
            PnDist => &[Format::Csv, Format::Json],
            Wigner => &[Format::Csv, Format::Bin],
            // columns as CSV plus a JSON summary
            Figure2 => &[Format::Csv],
            Sample => &[Format::Json],
            _ => &[Format::Json, Format::Csv],
        };
        let format = self.format.unwrap_or(allowed[0]);
        if !allowed.contains(&format) {
            return invalid(format!("`{name}` cannot write {format:?} output"));
        }

        let shots = match (self.command, self.shots) {
            (Sample, None) => return invalid("`sample` needs --shots".into()),
            (Sample, Some(0)) => return invalid("--shots must be at least 1".into()),
            (_, s) => s,
        };
        let resamples = self.resamples.unwrap_or(DEFAULT_RESAMPLES);
        if resamples < 2 {
            return invalid("--resamples must be at least 2".into());
        }

        let mut states = Vec::with_capacity(n);
        for spec in self.states {
            let spec = match (spec.cutoff, self.cutoff) {
                (Some(a), Some(b)) if a != b => {
                    return invalid(format!(
                        "state file fixes cutoff {a} but --cutoff is {b}"
                    ))
                }
                (_, Some(b)) => spec.with_cutoff(b),
                _ => spec,
            };
            spec.validate()?;
            states.push(spec);
        }

        Ok(RunConfig {
            command: self.command,
            states,
            route: self.route.unwrap_or(Route::All),
            format,
            shots,
            seed: self.seed.unwrap_or(0),
            cutoff: self.cutoff,
            resamples,
            out: self.out,
        })
    }
}
