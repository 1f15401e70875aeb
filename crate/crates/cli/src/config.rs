//! Command-line and config-file settings.
//!
//! Every flag has a config-file key of the same name with `-` replaced by
//! `_`. A config file is either JSON or flat `key = value` lines (`#`
//! starts a comment). Flags override file values; unknown keys are errors.
//! Numbers accept `2^k` notation, and lists are comma-separated.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use commsearch_core::costmodel::{CostParams, Variant};
use commsearch_core::simulate::Fallback;
use commsearch_core::{GraphParams, TreeParams};
use serde::{Deserialize, Deserializer};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "commsearch", version, about = "Decentralized search over hierarchical community networks")]
pub struct Cli {
    /// Config file (JSON or flat key = value); flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a community graph and write it in the text format.
    Generate(Settings),
    /// Route one message (--src/--dst) or run a batch of trials.
    Route(Settings),
    /// Evaluate the cost breakdown at (n, b).
    Cost(Settings),
    /// Find the cost-minimizing fanout for population n.
    Optimize(Settings),
    /// Run a parameter sweep (fixed, hybrid, beta, omega, time).
    Sweep(Settings),
    /// Fit hop-count models to a sweep file, or fit the fanout scaling exponent.
    Fit(Settings),
}

impl Command {
    fn parts(self) -> (CommandKind, Settings) {
        match self {
            Command::Generate(s) => (CommandKind::Generate, s),
            Command::Route(s) => (CommandKind::Route, s),
            Command::Cost(s) => (CommandKind::Cost, s),
            Command::Optimize(s) => (CommandKind::Optimize, s),
            Command::Sweep(s) => (CommandKind::Sweep, s),
            Command::Fit(s) => (CommandKind::Fit, s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Generate,
    Route,
    Cost,
    Optimize,
    Sweep,
    Fit,
}

/// A real number that also parses `a^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl FromStr for Num {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number `{t}`: {e}"));
        match s.split_once('^') {
            Some((base, exp)) => Ok(Num(parse(base)?.powf(parse(exp)?))),
            None => parse(s).map(Num),
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(Num(v)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

fn num_list<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<Num>>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        List(Vec<Num>),
        Text(String),
        One(f64),
    }
    Ok(match Option::<Raw>::deserialize(d)? {
        None => None,
        Some(Raw::List(v)) => Some(v),
        Some(Raw::One(v)) => Some(vec![Num(v)]),
        Some(Raw::Text(s)) => Some(
            s.split(',')
                .filter(|t| !t.trim().is_empty())
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(serde::de::Error::custom)?,
        ),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    /// Constant fanout --b over --targets.
    Fixed,
    /// Fanout from the cost-model optimum over --targets.
    Hybrid,
    /// Fixed tree (--b, --n), one row per --betas value.
    Beta,
    /// Optimal fanout at --n for each --omegas value.
    Omega,
    /// Analytical hybrid vs fixed-b time comparison over --targets.
    Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Stationarity,
    Optimizer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    Base,
    Omega,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FallbackArg {
    RandomNeighbor,
    FailFast,
}

/// Every setting, all optional. Shared by flags and config files.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Tree fanout (community size).
    #[arg(long)]
    pub b: Option<u64>,
    /// Tree height.
    #[arg(long)]
    pub h: Option<u32>,
    /// Population (accepts 2^k).
    #[arg(long)]
    pub n: Option<Num>,

    /// Link-decay exponent [default: 1].
    #[arg(long)]
    pub beta: Option<f64>,
    /// Out-degree coefficient in ceil(c_k (log2 N)^2) [default: 1].
    #[arg(long = "c-k")]
    pub c_k: Option<f64>,
    #[arg(long)]
    pub kappa1: Option<f64>,
    #[arg(long)]
    pub kappa2: Option<f64>,
    #[arg(long)]
    pub kappa3: Option<f64>,
    #[arg(long)]
    pub kappa4: Option<f64>,
    /// Technology exponent in [0, 1] [default: 0].
    #[arg(long)]
    pub omega: Option<f64>,

    /// Routing trials [default: 2000].
    #[arg(long)]
    pub trials: Option<u64>,
    /// RNG seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "hop-budget")]
    pub hop_budget: Option<u32>,
    #[arg(long, value_enum)]
    pub fallback: Option<FallbackArg>,
    /// Charge local delivery at every visited community.
    #[arg(long = "per-hop-local", num_args = 0..=1, default_missing_value = "true")]
    pub per_hop_local: Option<bool>,

    /// Result destination [default: stdout].
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Tabular output format [default: csv].
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long = "graph-in")]
    pub graph_in: Option<PathBuf>,
    #[arg(long = "graph-out")]
    pub graph_out: Option<PathBuf>,
    /// Sweep file for `fit` (CSV, or JSON by extension).
    #[arg(long)]
    pub input: Option<PathBuf>,

    #[arg(long)]
    pub src: Option<u64>,
    #[arg(long)]
    pub dst: Option<u64>,

    #[arg(long, value_enum)]
    pub kind: Option<SweepKind>,
    /// Comma-separated population targets (accepts 2^k).
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "num_list")]
    pub targets: Option<Vec<Num>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "num_list")]
    pub betas: Option<Vec<Num>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "num_list")]
    pub omegas: Option<Vec<Num>>,

    /// `fit`: fit the fanout scaling exponent over --targets instead of hop models.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub scaling: Option<bool>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($field:ident),* $(,)?) => {
        $( if $src.$field.is_some() { $dst.$field = $src.$field; } )*
    };
}

impl Settings {
    /// Values present in `flags` replace those in `self`.
    pub fn overlay(mut self, flags: Settings) -> Settings {
        overlay!(self, flags;
            b, h, n, beta, c_k, kappa1, kappa2, kappa3, kappa4, omega,
            trials, seed, hop_budget, fallback, per_hop_local,
            output, format, graph_in, graph_out, input, src, dst,
            kind, targets, betas, omegas, scaling, method, variant,
        );
        self
    }

    pub fn from_file(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_text(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn from_text(text: &str) -> Result<Settings, String> {
        let trimmed = text.trim_start();
        let value = if trimmed.starts_with('{') {
            serde_json::from_str(trimmed).map_err(|e| e.to_string())?
        } else {
            flat_to_json(text)?
        };
        serde_json::from_value(value).map_err(|e| e.to_string())
    }
}

fn flat_to_json(text: &str) -> Result<serde_json::Value, String> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
        let (key, value) = (key.trim().replace('-', "_"), value.trim());
        let json = if let Ok(v) = value.parse::<u64>() {
            serde_json::Value::from(v)
        } else if let Ok(v) = value.parse::<f64>() {
            serde_json::Value::from(v)
        } else if let Ok(v) = value.parse::<bool>() {
            serde_json::Value::from(v)
        } else {
            serde_json::Value::from(value.trim_matches('"'))
        };
        if map.insert(key.clone(), json).is_some() {
            return Err(format!("line {}: duplicate key `{key}`", i + 1));
        }
    }
    Ok(serde_json::Value::Object(map.into_iter().collect()))
}

/// Fully resolved and validated settings for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub b: Option<u64>,
    pub h: Option<u32>,
    pub n: Option<f64>,
    pub beta: f64,
    pub c_k: f64,
    pub cost: CostParams,
    pub trials: u64,
    pub seed: u64,
    pub hop_budget: Option<u32>,
    pub fallback: Fallback,
    pub per_hop_local: bool,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub graph_in: Option<PathBuf>,
    pub graph_out: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub src: Option<u64>,
    pub dst: Option<u64>,
    pub kind: Option<SweepKind>,
    pub targets: Vec<f64>,
    pub betas: Vec<f64>,
    pub omegas: Vec<f64>,
    pub scaling: bool,
    pub method: MethodArg,
    pub variant: Variant,
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn values(list: Option<Vec<Num>>) -> Vec<f64> {
    list.unwrap_or_default().into_iter().map(|n| n.0).collect()
}

/// Parses argv (including the program name) plus any `--config` file.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(CliError::Clap)?;
    let file = match &cli.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    let (command, flags) = cli.command.parts();
    RunConfig::resolve(command, file.overlay(flags))
}

impl RunConfig {
    pub fn resolve(command: CommandKind, s: Settings) -> Result<RunConfig, CliError> {
        let cost = CostParams {
            kappa1: s.kappa1.unwrap_or(1.0),
            kappa2: s.kappa2.unwrap_or(1.0),
            kappa3: s.kappa3.unwrap_or(1.0),
            kappa4: s.kappa4.unwrap_or(1.0),
            omega: s.omega.unwrap_or(0.0),
        };
        let cfg = RunConfig {
            command,
            b: s.b,
            h: s.h,
            n: s.n.map(|n| n.0),
            beta: s.beta.unwrap_or(1.0),
            c_k: s.c_k.unwrap_or(1.0),
            cost,
            trials: s.trials.unwrap_or(2000),
            seed: s.seed.unwrap_or(0),
            hop_budget: s.hop_budget,
            fallback: match s.fallback {
                Some(FallbackArg::FailFast) => Fallback::FailFast,
                _ => Fallback::RandomNeighbor,
            },
            per_hop_local: s.per_hop_local.unwrap_or(false),
            output: s.output,
            format: s.format.unwrap_or(Format::Csv),
            graph_in: s.graph_in,
            graph_out: s.graph_out,
            input: s.input,
            src: s.src,
            dst: s.dst,
            kind: s.kind,
            targets: values(s.targets),
            betas: values(s.betas),
            omegas: values(s.omegas),
            scaling: s.scaling.unwrap_or(false),
            method: s.method.unwrap_or(MethodArg::Stationarity),
            variant: match s.variant {
                Some(VariantArg::Omega) => Variant::Omega,
                _ => Variant::Base,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Tree from `--b/--h`, or from `--b/--n` when `n` is an exact power of `b`.
    pub fn tree(&self) -> Result<TreeParams, CliError> {
        let Some(b) = self.b else { return usage("--b is required") };
        let h = match (self.h, self.n) {
            (Some(h), _) => h,
            (None, Some(n)) => {
                let h = (n.ln() / (b as f64).ln()).round();
                if h < 1.0 || (b as f64).powf(h) != n {
                    return usage(format!("--n {n} is not a power of --b {b}; pass --h instead"));
                }
                h as u32
            }
            (None, None) => return usage("--h (or --n) is required"),
        };
        TreeParams::new(b, h).map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn graph_params(&self) -> Result<GraphParams, CliError> {
        GraphParams::new(self.tree()?, self.beta, self.c_k, self.seed)
            .map_err(|e| CliError::Usage(e.to_string()))
    }

    fn require_n(&self, min: f64) -> Result<f64, CliError> {
        match self.n {
            None => usage("--n is required"),
            Some(n) if !(n >= min && n.is_finite()) => usage(format!("--n must be >= {min}, got {n}")),
            Some(n) => Ok(n),
        }
    }

    fn require_b(&self) -> Result<u64, CliError> {
        match self.b {
            None => usage("--b is required"),
            Some(b) if b < 2 => usage(format!("--b must be >= 2, got {b}")),
            Some(b) => Ok(b),
        }
    }

    fn require_targets(&self) -> Result<(), CliError> {
        if self.targets.is_empty() {
            return usage("--targets is required");
        }
        if let Some(t) = self.targets.iter().find(|&&t| !(t >= 16.0 && t.is_finite())) {
            return usage(format!("every target must be >= 16, got {t}"));
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), CliError> {
        self.cost.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if !(self.beta >= 0.0) {
            return usage(format!("--beta must be >= 0, got {}", self.beta));
        }
        if !(self.c_k > 0.0) {
            return usage(format!("--c-k must be > 0, got {}", self.c_k));
        }
        if self.hop_budget == Some(0) {
            return usage("--hop-budget must be >= 1");
        }
        match self.command {
            CommandKind::Generate => {
                self.graph_params()?;
            }
            CommandKind::Route => {
                if self.graph_in.is_none() {
                    self.graph_params()?;
                }
                if self.src.is_some() != self.dst.is_some() {
                    return usage("--src and --dst must be given together");
                }
                if self.src.is_none() && self.trials == 0 {
                    return usage("--trials must be >= 1");
                }
            }
            CommandKind::Cost => {
                let n = self.require_n(4.0)?;
                let b = self.require_b()? as f64;
                if b > n / 2.0 {
                    return usage(format!("b <= n/2 violated: b = {b}, n/2 = {}", n / 2.0));
                }
            }
            CommandKind::Optimize => {
                self.require_n(16.0)?;
            }
            CommandKind::Sweep => match self.kind {
                None => return usage("--kind is required (fixed, hybrid, beta, omega, time)"),
                Some(SweepKind::Fixed) => {
                    self.require_b()?;
                    self.require_targets()?;
                }
                Some(SweepKind::Hybrid) | Some(SweepKind::Time) => self.require_targets()?,
                Some(SweepKind::Beta) => {
                    self.require_b()?;
                    self.require_n(16.0)?;
                    if self.betas.is_empty() {
                        return usage("--betas is required");
                    }
                    if let Some(b) = self.betas.iter().find(|&&b| !(b >= 0.0)) {
                        return usage(format!("every beta must be >= 0, got {b}"));
                    }
                }
                Some(SweepKind::Omega) => {
                    self.require_n(16.0)?;
                    if self.omegas.is_empty() {
                        return usage("--omegas is required");
                    }
                    if let Some(w) = self.omegas.iter().find(|&&w| !(w > 0.0 && w <= 1.0)) {
                        return usage(format!("every omega must lie in (0, 1], got {w}"));
                    }
                }
            },
            CommandKind::Fit => {
                if self.scaling {
                    if self.targets.len() < 8 {
                        return usage("--scaling needs at least 8 --targets");
                    }
                    self.require_targets()?;
                } else if self.input.is_none() {
                    return usage("--input is required (or pass --scaling with --targets)");
                }
            }
        }
        Ok(())
    }
}
