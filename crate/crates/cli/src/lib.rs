//! Experiment runner.
//!
//! Every command resolves an [`ExperimentConfig`], computes all of its outputs
//! in memory and returns them as a [`RunOutput`]; [`write_outputs`] is the only
//! place that touches the output directory.

pub mod config;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use netsir_core::analysis::{
    area, correlation_series, degree_class_series, efficiency, peak, MetricsReport, StrategyMetrics,
};
use netsir_core::baselines::{run_strategy, Strategy, StrategyRun, StrategySpec};
use netsir_core::graph::network_stats;
use netsir_core::sir::{fmt_sig, NodeState, SirParams, StateTrajectory};

pub use config::{ExperimentConfig, Network, NetworkSource};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Solver(String),
}

impl CliError {
    /// 1 for solver failures, 2 for I/O and configuration problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(_) => 1,
            CliError::Io(_) | CliError::Config(_) => 2,
        }
    }

    pub(crate) fn from_load(path: &Path, e: netsir_core::Error) -> Self {
        match e {
            netsir_core::Error::Io(io) => CliError::Io(format!("{}: {io}", path.display())),
            other => CliError::Config(format!("{}: {other}", path.display())),
        }
    }
}

impl From<netsir_core::Error> for CliError {
    fn from(e: netsir_core::Error) -> Self {
        use netsir_core::Error as E;
        match e {
            E::Io(_) => CliError::Io(e.to_string()),
            E::InvalidParameter(_) | E::Parse { .. } | E::EmptyInput => CliError::Config(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Stats,
    Centrality,
    Simulate,
    Optimize,
    Compare,
    Correlate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Stats => "stats",
            Command::Centrality => "centrality",
            Command::Simulate => "simulate",
            Command::Optimize => "optimize",
            Command::Compare => "compare",
            Command::Correlate => "correlate",
        }
    }

    fn default_strategies(self) -> Vec<String> {
        match self {
            Command::Stats | Command::Centrality => Vec::new(),
            Command::Simulate => vec!["unc".into()],
            Command::Optimize | Command::Correlate => vec!["optimal".into()],
            Command::Compare => config::all_strategy_names(),
        }
    }

    fn runs_dynamics(self) -> bool {
        !matches!(self, Command::Stats | Command::Centrality)
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub strategies: Vec<String>,
    pub out: Option<PathBuf>,
}

/// Applies overrides and per-command defaults, then validates.
pub fn resolve(mut cfg: ExperimentConfig, cmd: Command, ov: &Overrides) -> Result<ExperimentConfig, CliError> {
    if let Some(seed) = ov.seed {
        cfg.seed = seed;
    }
    if !ov.strategies.is_empty() {
        cfg.strategies = ov.strategies.clone();
    }
    if cmd == Command::Optimize {
        cfg.strategies = vec!["optimal".into()];
    } else if cfg.strategies.is_empty() {
        cfg.strategies = cmd.default_strategies();
    }
    if ov.out.is_some() {
        cfg.out = ov.out.clone();
    }
    cfg.validate()?;
    if cmd.runs_dynamics() && cfg.strategies.is_empty() {
        return Err(CliError::Config("at least one strategy is required".into()));
    }
    Ok(cfg)
}

/// Run record written next to the outputs. Equal manifests mean equal outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    /// SHA-256 of `config.toml` as written alongside.
    pub config_sha256: String,
    pub seed: u64,
    pub replications: usize,
    pub strategies: Vec<String>,
    /// Resolved propagation rate per replication; empty for topology-only commands.
    pub beta0: Vec<f64>,
    pub beta0_source: String,
    pub files: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// `(file name, contents)` in write order.
    pub files: Vec<(String, String)>,
    /// Human-readable result printed to stdout.
    pub summary: String,
    /// Resolution details logged to stderr.
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
    /// Per-strategy solver failures; any entry makes the exit code 1.
    pub failures: Vec<String>,
    pub manifest: Manifest,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            1
        }
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }
}

#[derive(Default)]
struct Log {
    files: Vec<(String, String)>,
    summary: String,
    notes: Vec<String>,
    warnings: Vec<String>,
    failures: Vec<String>,
}

/// One network realisation with its resolved parameters.
struct Realisation {
    network: Network,
    params: SirParams,
    initial: NodeState,
}

/// File-name form of a strategy name: `DC+` becomes `dc_plus`.
pub fn slug(strategy: Strategy) -> String {
    strategy
        .name()
        .to_ascii_lowercase()
        .replace('+', "_plus")
        .replace('-', "_minus")
}

/// Runs `cmd` on a resolved config. Nothing is written to disk.
pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let mut log = Log::default();
    let reps = effective_replications(cfg, &mut log);
    let mut reals = Vec::with_capacity(reps);
    let mut beta0_source = String::new();
    for r in 0..reps {
        let network = cfg.build_network(r)?;
        let d = network.dropped;
        if r == 0 && d.duplicates + d.self_loops > 0 {
            log.warnings.push(format!(
                "dropped {} duplicate edge(s) and {} self-loop(s) from the input",
                d.duplicates, d.self_loops
            ));
        }
        let (params, initial) = if cmd.runs_dynamics() {
            let (params, source) = cfg.sir_params(&network.graph)?;
            log.notes.push(format!("replication {r}: beta0 = {} ({source})", fmt_sig(params.beta0)));
            beta0_source = source_kind(&source);
            (params, cfg.initial_state(network.graph.node_count())?)
        } else {
            (SirParams::default(), NodeState::zeros(0))
        };
        reals.push(Realisation { network, params, initial });
    }

    match cmd {
        Command::Stats => stats(&reals, &mut log)?,
        Command::Centrality => centrality(cfg, &reals, &mut log)?,
        Command::Simulate | Command::Optimize => simulate(cfg, &reals, cmd, &mut log)?,
        Command::Compare => compare(cfg, &reals, &mut log)?,
        Command::Correlate => correlate(cfg, &reals, &mut log)?,
    }

    let mut hashed = cfg.clone();
    hashed.out = None;
    let config_text = hashed.canonical();
    let config_sha256 = sha256_hex(&config_text);
    log.files.push(("config.toml".into(), config_text));
    let mut files: Vec<String> = log.files.iter().map(|(n, _)| n.clone()).collect();
    files.push("manifest.toml".into());
    let manifest = Manifest {
        command: cmd.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256,
        seed: cfg.seed,
        replications: reps,
        strategies: if cmd.runs_dynamics() { cfg.strategies.clone() } else { Vec::new() },
        beta0: if cmd.runs_dynamics() { reals.iter().map(|r| r.params.beta0).collect() } else { Vec::new() },
        beta0_source,
        files,
    };
    let manifest_text = toml::to_string(&manifest).expect("manifest serialises");
    log.files.push(("manifest.toml".into(), manifest_text));
    Ok(RunOutput {
        files: log.files,
        summary: log.summary,
        notes: log.notes,
        warnings: log.warnings,
        failures: log.failures,
        manifest,
    })
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn source_kind(source: &str) -> String {
    source.split(" (").next().unwrap_or(source).to_string()
}

fn effective_replications(cfg: &ExperimentConfig, log: &mut Log) -> usize {
    if cfg.replications > 1 && !cfg.is_generated() {
        log.warnings.push("replications > 1 has no effect on an edge-list network; using 1".into());
        1
    } else {
        cfg.replications
    }
}

/// Writes every output file into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, out: &RunOutput) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    for (name, contents) in &out.files {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), fmt_sig)
}

fn stats(reals: &[Realisation], log: &mut Log) -> Result<(), CliError> {
    let mut csv = String::from("replication,n,m,mean_degree,clustering,mean_path_length,assortativity,heterogeneity\n");
    for (r, real) in reals.iter().enumerate() {
        let s = network_stats(&real.network.graph)?;
        csv.push_str(&format!(
            "{r},{},{},{},{},{},{},{}\n",
            s.n,
            s.m,
            fmt_sig(s.mean_degree),
            fmt_sig(s.clustering),
            fmt_sig(s.mean_path_length),
            opt(s.assortativity),
            fmt_sig(s.heterogeneity)
        ));
        if reals.len() > 1 {
            log.summary.push_str(&format!("replication {r}\n"));
        }
        for (label, value) in [
            ("N", s.n.to_string()),
            ("M", s.m.to_string()),
            ("<k>", fmt_sig(s.mean_degree)),
            ("C", fmt_sig(s.clustering)),
            ("<L>", fmt_sig(s.mean_path_length)),
            ("r", opt(s.assortativity)),
            ("H", fmt_sig(s.heterogeneity)),
        ] {
            log.summary.push_str(&format!("{label:<4} {value}\n"));
        }
    }
    log.files.push(("stats.csv".into(), csv));
    Ok(())
}

fn first_only(reals: &[Realisation], what: &str, log: &mut Log) {
    if reals.len() > 1 {
        log.warnings.push(format!("{what} uses replication 0 only"));
    }
}

fn centrality(cfg: &ExperimentConfig, reals: &[Realisation], log: &mut Log) -> Result<(), CliError> {
    first_only(reals, "centrality", log);
    let net = &reals[0].network;
    let metrics = cfg.metrics()?;
    let vectors = metrics
        .iter()
        .map(|m| m.compute(&net.graph, cfg.analysis.max_cycle_len))
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = String::from("node,label");
    for m in &metrics {
        csv.push_str(&format!(",{}", m.name()));
    }
    csv.push('\n');
    for v in 0..net.graph.node_count() {
        let label = net.labels.as_ref().map_or_else(|| v.to_string(), |l| l[v].clone());
        csv.push_str(&format!("{v},{label}"));
        for c in &vectors {
            csv.push_str(&format!(",{}", fmt_sig(c.values[v])));
        }
        csv.push('\n');
    }
    for c in &vectors {
        if let Some(top) = c.argmax() {
            log.summary.push_str(&format!("{:<3} max {} at node {top}\n", c.metric.name(), fmt_sig(c.values[top])));
        }
    }
    log.files.push(("centrality.csv".into(), csv));
    Ok(())
}

/// Successful runs of one strategy, one per replication.
struct StrategyResult {
    strategy: Strategy,
    runs: Vec<StrategyRun>,
}

impl StrategyResult {
    /// Node-wise average over replications; its node mean is the mean of the
    /// per-replication infection curves.
    fn mean_states(&self) -> StateTrajectory {
        let first = &self.runs[0].states;
        if self.runs.len() == 1 {
            return first.clone();
        }
        let scale = 1.0 / self.runs.len() as f64;
        let mut states = first.states.clone();
        for (k, st) in states.iter_mut().enumerate() {
            for v in 0..st.len() {
                let sum = |f: fn(&NodeState) -> &Vec<f64>| {
                    self.runs.iter().map(|r| f(&r.states.states[k])[v]).sum::<f64>() * scale
                };
                st.s[v] = sum(|x| &x.s);
                st.i[v] = sum(|x| &x.i);
                st.r[v] = sum(|x| &x.r);
            }
        }
        StateTrajectory { grid: first.grid.clone(), states }
    }
}

/// Runs every configured strategy on every realisation in parallel. Results
/// come back in configuration order; failing strategies are logged and omitted.
fn run_strategies(cfg: &ExperimentConfig, reals: &[Realisation], log: &mut Log) -> Result<Vec<StrategyResult>, CliError> {
    let strategies = cfg.parsed_strategies()?;
    let options = cfg.options()?;
    let jobs: Vec<(usize, usize)> = (0..strategies.len())
        .flat_map(|s| (0..reals.len()).map(move |r| (s, r)))
        .collect();
    let outcomes: Vec<_> = jobs
        .par_iter()
        .map(|&(s, r)| {
            let spec = StrategySpec { strategy: strategies[s], options };
            let real = &reals[r];
            run_strategy(&spec, &real.network.graph, &real.params, &real.initial)
        })
        .collect();

    let mut results = Vec::new();
    let mut outcomes = outcomes.into_iter();
    for strategy in strategies {
        let mut runs = Vec::with_capacity(reals.len());
        let mut failed = false;
        for r in 0..reals.len() {
            match outcomes.next().expect("one outcome per job") {
                Ok(run) => runs.push(run),
                Err(e) => {
                    log.failures.push(format!("strategy {strategy} (replication {r}): {e}"));
                    failed = true;
                }
            }
        }
        if failed {
            continue;
        }
        for (r, run) in runs.iter().enumerate() {
            if let Some(rep) = run.fbs.as_ref().filter(|rep| !rep.converged) {
                log.warnings.push(format!(
                    "{strategy} (replication {r}): sweep stopped after {} iterations without converging (last relative change {})",
                    rep.iterations,
                    rep.rel_change.last().map_or_else(|| "NA".to_string(), |x| fmt_sig(*x))
                ));
            }
        }
        results.push(StrategyResult { strategy, runs });
    }
    Ok(results)
}

fn push_optimal_files(results: &[StrategyResult], log: &mut Log) {
    if let Some(opt) = results.iter().find(|r| r.strategy == Strategy::Optimal) {
        let run = &opt.runs[0];
        log.files.push(("control_optimal.csv".into(), run.control.to_csv()));
        if let Some(rep) = &run.fbs {
            log.files.push(("fbs_report.csv".into(), rep.to_csv()));
        }
    }
}

fn strategy_metrics(res: &StrategyResult) -> Result<StrategyMetrics, CliError> {
    let mean = res.mean_states();
    Ok(StrategyMetrics { name: res.strategy.name(), peak: peak(&mean)?, area: area(&mean)? })
}

fn simulate(cfg: &ExperimentConfig, reals: &[Realisation], cmd: Command, log: &mut Log) -> Result<(), CliError> {
    let results = run_strategies(cfg, reals, log)?;
    let per_node = reals.len() == 1;
    for res in &results {
        let name = slug(res.strategy);
        log.files.push((format!("trajectory_{name}.csv"), res.mean_states().to_csv(per_node)));
        if res.strategy != Strategy::Optimal {
            log.files.push((format!("control_{name}.csv"), res.runs[0].control.to_csv()));
        }
        let m = strategy_metrics(res)?;
        log.summary.push_str(&format!("{:<8} peak {}  area {}\n", m.name, fmt_sig(m.peak), fmt_sig(m.area)));
        if let Some(rep) = &res.runs[0].fbs {
            log.summary.push_str(&format!(
                "{:<8} J {} after {} iterations{}\n",
                "",
                fmt_sig(rep.final_objective()),
                rep.iterations,
                if rep.converged { "" } else { " (not converged)" }
            ));
        }
    }
    push_optimal_files(&results, log);
    if cmd == Command::Optimize && results.is_empty() {
        return Err(CliError::Solver(log.failures.join("; ")));
    }
    Ok(())
}

fn compare(cfg: &ExperimentConfig, reals: &[Realisation], log: &mut Log) -> Result<(), CliError> {
    let results = run_strategies(cfg, reals, log)?;
    let rows = results.iter().map(strategy_metrics).collect::<Result<Vec<_>, _>>()?;
    if rows.len() < 2 {
        let peaks: Vec<f64> = rows.iter().map(|r| r.peak).collect();
        if let Err(e) = efficiency(&peaks) {
            log.warnings.push(format!("efficiency not computed: fewer than 2 strategies ({e})"));
        }
    }
    let report = MetricsReport::new(rows);
    log.files.push(("metrics.csv".into(), report.to_csv()));
    log.files.push(("metrics.txt".into(), report.to_table()));
    log.summary.push_str(&report.to_table());
    for res in &results {
        log.files.push((format!("trajectory_{}.csv", slug(res.strategy)), res.mean_states().to_csv(false)));
    }
    push_optimal_files(&results, log);
    Ok(())
}

fn correlate(cfg: &ExperimentConfig, reals: &[Realisation], log: &mut Log) -> Result<(), CliError> {
    first_only(reals, "correlate", log);
    let strategy = cfg.parsed_strategies()?[0];
    if cfg.strategies.len() > 1 {
        log.warnings.push(format!("correlate uses the first strategy only ({strategy})"));
    }
    let real = &reals[0];
    let g = &real.network.graph;
    let spec = StrategySpec { strategy, options: cfg.options()? };
    let run = run_strategy(&spec, g, &real.params, &real.initial)?;
    let vectors = cfg
        .metrics()?
        .iter()
        .map(|m| m.compute(g, cfg.analysis.max_cycle_len))
        .collect::<Result<Vec<_>, _>>()?;
    let series = correlation_series(&run.control, &vectors)?;
    let classes = degree_class_series(&run.control, g, cfg.analysis.bins)?;

    let early = (0.0, cfg.analysis.early_window);
    let late = (1.0 - cfg.analysis.late_window, 1.0);
    log.summary.push_str(&format!("strategy {strategy}\nmetric  early       late\n"));
    for (m, metric) in series.metrics.iter().enumerate() {
        if series.values[m].iter().all(Option::is_none) {
            log.warnings.push(format!(
                "r_{} is undefined at every grid point (weights or centrality have no variance)",
                metric.name()
            ));
        }
        log.summary.push_str(&format!(
            "r_{:<5} {:<11} {}\n",
            metric.name(),
            opt(series.window_mean(m, early.0, early.1)),
            opt(series.window_mean(m, late.0, late.1))
        ));
    }
    if let Some((lo, hi)) = classes.extreme_bins() {
        for (label, b) in [("top", hi), ("bottom", lo)] {
            log.summary.push_str(&format!(
                "{label:<6} degree bin mean weight: early {}  late {}\n",
                opt(classes.window_mean(b, early.0, early.1)),
                opt(classes.window_mean(b, late.0, late.1))
            ));
        }
    }
    log.files.push(("correlation.csv".into(), series.to_csv()));
    log.files.push(("degree_classes.csv".into(), classes.to_csv()));
    log.files.push((format!("control_{}.csv", slug(strategy)), run.control.to_csv()));
    if let Some(rep) = &run.fbs {
        log.files.push(("fbs_report.csv".into(), rep.to_csv()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ba_config(extra: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(&format!(
            "seed = 5\n{extra}\n[network]\nkind = \"ba\"\nn = 40\nm = 2\n[params]\nbeta0_multiple = 3.0\nw_total = 4.0\nsteps = 60\n"
        ))
        .unwrap()
    }

    #[test]
    fn slugs_are_file_safe() {
        let names: Vec<String> = Strategy::ALL.iter().map(|&s| slug(s)).collect();
        assert!(names.contains(&"dc_plus".to_string()));
        assert!(names.contains(&"cr_minus".to_string()));
        assert!(names.iter().all(|n| n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')));
    }

    #[test]
    fn overrides_take_precedence() {
        let ov = Overrides { seed: Some(9), strategies: vec!["un".into()], out: None };
        let cfg = resolve(ba_config("strategies = [\"unc\"]"), Command::Compare, &ov).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.strategies, vec!["un"]);
        let cfg = resolve(ba_config(""), Command::Compare, &Overrides::default()).unwrap();
        assert_eq!(cfg.strategies.len(), 14);
        let cfg = resolve(ba_config("strategies = [\"unc\"]"), Command::Optimize, &Overrides::default()).unwrap();
        assert_eq!(cfg.strategies, vec!["optimal"]);
    }

    #[test]
    fn unknown_strategy_is_config_error() {
        let ov = Overrides { strategies: vec!["xx+".into()], ..Overrides::default() };
        let e = resolve(ba_config(""), Command::Compare, &ov).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn replications_average_curves() {
        let one = |seed: u64| {
            let cfg = resolve(ba_config("strategies = [\"unc\"]"), Command::Simulate, &Overrides { seed: Some(seed), ..Overrides::default() }).unwrap();
            let out = run(Command::Simulate, &cfg).unwrap();
            let csv = out.file("trajectory_unc.csv").unwrap().to_string();
            csv.lines().nth(10).unwrap().split(',').nth(2).unwrap().parse::<f64>().unwrap()
        };
        let a = one(5);
        let b = one(6);
        let cfg = resolve(
            ba_config("strategies = [\"unc\"]\nreplications = 2"),
            Command::Simulate,
            &Overrides::default(),
        )
        .unwrap();
        let out = run(Command::Simulate, &cfg).unwrap();
        let csv = out.file("trajectory_unc.csv").unwrap();
        let mean: f64 = csv.lines().nth(10).unwrap().split(',').nth(2).unwrap().parse().unwrap();
        assert!((mean - 0.5 * (a + b)).abs() < 1e-9);
        assert_eq!(out.manifest.beta0.len(), 2);
    }

    #[test]
    fn manifest_lists_every_file() {
        let cfg = resolve(ba_config("strategies = [\"optimal\", \"un\"]"), Command::Compare, &Overrides::default()).unwrap();
        let out = run(Command::Compare, &cfg).unwrap();
        let names: Vec<&str> = out.files.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(out.manifest.files, names);
        for f in ["metrics.csv", "metrics.txt", "trajectory_optimal.csv", "trajectory_un.csv", "control_optimal.csv", "fbs_report.csv", "config.toml"] {
            assert!(names.contains(&f), "{f}");
        }
        let cfg_text = out.file("config.toml").unwrap();
        assert_eq!(out.manifest.config_sha256, sha256_hex(cfg_text));
    }
}
