//! The `commsearch` command-line tool.
//!
//! Results go to `--output` or stdout; diagnostics go to stderr. Exit code 0
//! means success, 1 a runtime failure, 2 a usage or parameter error.

pub mod config;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use commsearch_core::experiments::{
    self, beta_sweep, fit_hop_models, fixed_b_sweep, hybrid_sweep, omega_sweep, scaling_sweep,
    time_comparison, ScalingMethod,
};
use commsearch_core::simulate::{run_trials_detailed, summarize, write_trials_csv, TimeModel};
use commsearch_core::{
    generate, greedy_route, objective, optimal_fanout, rng, CommunityGraph, CommunityId,
    RoutingConfig, SweepParams,
};
use serde::Serialize;

pub use config::{parse_config, CommandKind, Format, RunConfig};
use config::{MethodArg, SweepKind};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Clap(#[from] clap::Error),
    #[error(transparent)]
    Core(#[from] commsearch_core::Error),
    #[error("{path}: {source}")]
    File { path: String, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use commsearch_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Clap(e) => e.exit_code(),
            CliError::Core(E::InvalidParam(_) | E::OutOfRange { .. } | E::Domain { .. }) => 2,
            _ => 1,
        }
    }
}

/// Parses `argv`, executes the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match parse_config(argv).and_then(|cfg| execute(&cfg)) {
        Ok(()) => 0,
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            e.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn create(path: &Path) -> Result<File, CliError> {
    File::create(path).map_err(|source| CliError::File { path: path.display().to_string(), source })
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|source| CliError::File { path: path.display().to_string(), source })
}

fn with_output(cfg: &RunConfig, f: impl FnOnce(&mut dyn Write) -> Result<(), CliError>) -> Result<(), CliError> {
    match &cfg.output {
        Some(path) => {
            let mut w = BufWriter::new(create(path)?);
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn json_line<T: Serialize>(value: &T, w: &mut dyn Write) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *w, value).map_err(commsearch_core::Error::from)?;
    writeln!(w)?;
    Ok(())
}

fn rows<T: Serialize>(format: Format, rows: &[T], w: &mut dyn Write) -> Result<(), CliError> {
    match format {
        Format::Csv => experiments::write_csv(rows, w)?,
        Format::Json => experiments::write_json(rows, w)?,
    }
    Ok(())
}

/// Runs a resolved configuration.
pub fn execute(cfg: &RunConfig) -> Result<(), CliError> {
    match cfg.command {
        CommandKind::Generate => {
            let g = generate(&cfg.graph_params()?)?;
            log::info!("generated {} communities with out-degree {}", g.len(), g.k_target());
            if let Some(path) = &cfg.graph_out {
                g.write_text(BufWriter::new(create(path)?))?;
            }
            with_output(cfg, |w| Ok(g.write_text(w)?))
        }
        CommandKind::Route => route(cfg),
        CommandKind::Cost => {
            let report = objective(cfg.n.unwrap_or_default(), cfg.b.unwrap_or_default() as f64, &cfg.cost)?;
            with_output(cfg, |w| json_line(&report, w))
        }
        CommandKind::Optimize => {
            let report = optimal_fanout(cfg.n.unwrap_or_default(), &cfg.cost)?;
            with_output(cfg, |w| json_line(&report, w))
        }
        CommandKind::Sweep => sweep(cfg),
        CommandKind::Fit => fit(cfg),
    }
}

fn load_graph(cfg: &RunConfig) -> Result<CommunityGraph, CliError> {
    let g = match &cfg.graph_in {
        Some(path) => CommunityGraph::read_text(BufReader::new(open(path)?))?,
        None => generate(&cfg.graph_params()?)?,
    };
    if let Some(path) = &cfg.graph_out {
        g.write_text(BufWriter::new(create(path)?))?;
    }
    Ok(g)
}

fn route(cfg: &RunConfig) -> Result<(), CliError> {
    let g = load_graph(cfg)?;
    let mut routing = RoutingConfig::for_tree(g.tree()).with_fallback(cfg.fallback);
    if let Some(budget) = cfg.hop_budget {
        routing.hop_budget = budget;
    }
    routing.time = TimeModel { kappa3: cfg.cost.kappa3, omega: cfg.cost.omega, per_hop_local: cfg.per_hop_local };
    if let (Some(src), Some(dst)) = (cfg.src, cfg.dst) {
        let mut r = rng::stream(cfg.seed, rng::TRIAL_DOMAIN, 0);
        let outcome = greedy_route(&g, CommunityId(src), CommunityId(dst), &routing, &mut r)?;
        return with_output(cfg, |w| json_line(&outcome, w));
    }
    let records = run_trials_detailed(&g, cfg.trials, &routing, cfg.seed)?;
    let stats = summarize(&records);
    log::info!(
        "{} trials, mean hops {:?}, failure rate {}",
        stats.trials,
        stats.mean_hops,
        stats.failure_rate
    );
    with_output(cfg, |w| match cfg.format {
        Format::Csv => Ok(write_trials_csv(&records, w)?),
        Format::Json => json_line(&stats, w),
    })
}

fn sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let params = SweepParams {
        beta: cfg.beta,
        degree_coeff: cfg.c_k,
        cost: cfg.cost,
        trials: cfg.trials,
        seed: cfg.seed,
        hop_budget: cfg.hop_budget,
        fallback: cfg.fallback,
    };
    let b = cfg.b.unwrap_or_default();
    let n = cfg.n.unwrap_or_default();
    match cfg.kind {
        Some(SweepKind::Fixed) => {
            let out = fixed_b_sweep(&cfg.targets, b, &params)?;
            with_output(cfg, |w| rows(cfg.format, &out, w))
        }
        Some(SweepKind::Hybrid) => {
            let out = hybrid_sweep(&cfg.targets, &params)?;
            with_output(cfg, |w| rows(cfg.format, &out, w))
        }
        Some(SweepKind::Beta) => {
            let out = beta_sweep(n, b, &cfg.betas, &params)?;
            with_output(cfg, |w| rows(cfg.format, &out, w))
        }
        Some(SweepKind::Omega) => {
            let out = omega_sweep(n, &cfg.omegas, &cfg.cost)?;
            with_output(cfg, |w| rows(cfg.format, &out, w))
        }
        Some(SweepKind::Time) => {
            let fixed = cfg.b.unwrap_or(2) as f64;
            let out = time_comparison(&cfg.targets, fixed, &cfg.cost)?;
            with_output(cfg, |w| rows(cfg.format, &out, w))
        }
        None => Err(CliError::Usage("--kind is required".into())),
    }
}

fn fit(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.scaling {
        let method = match cfg.method {
            MethodArg::Stationarity => ScalingMethod::Stationarity(cfg.variant),
            MethodArg::Optimizer => ScalingMethod::Optimizer,
        };
        let report = scaling_sweep(&cfg.targets, &cfg.cost, method)?;
        return with_output(cfg, |w| json_line(&report, w));
    }
    let path = cfg.input.as_deref().ok_or_else(|| CliError::Usage("--input is required".into()))?;
    let reader = BufReader::new(open(path)?);
    let records = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => experiments::read_json(reader)?,
        _ => experiments::read_csv(reader)?,
    };
    let report = fit_hop_models(&records)?;
    with_output(cfg, |w| json_line(&report, w))
}
