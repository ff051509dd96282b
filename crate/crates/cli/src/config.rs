//! Experiment configuration.
//!
//! A run is described by one TOML file. Every section is optional except
//! `[network]`; omitted keys take the defaults listed in the README.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use netsir_core::baselines::{DraBudget, DraConfig, Strategy, StrategyOptions};
use netsir_core::centrality::{Metric, DEFAULT_MAX_CYCLE_LEN};
use netsir_core::control::{AdjointForm, FbsConfig};
use netsir_core::graph::{generate_ba, generate_er, generate_ws, load_edge_list_file, Dropped, Graph};
use netsir_core::sir::{epidemic_threshold, NodeState, SirParams};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seeds the generator and the DRA restarts.
    #[serde(default)]
    pub seed: u64,
    /// Empty means the command's own default.
    #[serde(default)]
    pub strategies: Vec<String>,
    /// Independent network realisations averaged per curve (generated networks only).
    #[serde(default = "one")]
    pub replications: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub network: NetworkSource,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub fbs: FbsSection,
    #[serde(default)]
    pub dra: DraSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

/// Lower-case names of every strategy, in reporting order.
pub fn all_strategy_names() -> Vec<String> {
    Strategy::ALL.iter().map(|s| s.name().to_ascii_lowercase()).collect()
}

fn one() -> usize {
    1
}

/// A loaded or generated network.
#[derive(Debug, Clone)]
pub struct Network {
    pub graph: Graph,
    /// Original node labels, for edge-list input.
    pub labels: Option<Vec<String>>,
    pub dropped: Dropped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum NetworkSource {
    /// Edge list; relative paths resolve against the config file.
    File { path: PathBuf },
    Ba { n: usize, m: usize },
    Ws { n: usize, k: usize, p: f64 },
    Er { n: usize, edges: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSection {
    /// Absolute propagation rate; mutually exclusive with `beta0_multiple`.
    pub beta0: Option<f64>,
    /// Propagation rate as a multiple of the network's epidemic threshold.
    pub beta0_multiple: Option<f64>,
    pub gamma0: f64,
    pub u: f64,
    pub c: f64,
    pub w_total: f64,
    pub horizon: f64,
    pub steps: usize,
}

impl Default for ParamsSection {
    fn default() -> Self {
        let p = SirParams::default();
        ParamsSection {
            beta0: None,
            beta0_multiple: None,
            gamma0: p.gamma0,
            u: p.u,
            c: p.c,
            w_total: p.w_total,
            horizon: p.horizon,
            steps: p.steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    /// `uniform` (every node starts at `i0`) or `seeded` (listed nodes start fully infected).
    pub mode: String,
    pub i0: f64,
    pub infected: Vec<usize>,
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection {
            mode: "uniform".into(),
            i0: 0.05,
            infected: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FbsSection {
    pub tolerance: f64,
    pub relaxation: f64,
    pub max_iterations: usize,
    /// `coupled` or `node-local`.
    pub adjoint: String,
}

impl Default for FbsSection {
    fn default() -> Self {
        let f = FbsConfig::default();
        FbsSection {
            tolerance: f.tolerance,
            relaxation: f.relaxation,
            max_iterations: f.max_iterations,
            adjoint: "coupled".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DraSection {
    pub restarts: usize,
    pub infected_threshold: f64,
    /// `unit` (one unit of treatment) or `shared` (the common `w_total`).
    pub budget: String,
}

impl Default for DraSection {
    fn default() -> Self {
        let d = DraConfig::default();
        DraSection {
            restarts: d.restarts,
            infected_threshold: d.infected_threshold,
            budget: "unit".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub metrics: Vec<String>,
    pub bins: usize,
    /// Leading fraction of the grid averaged for early-stage summaries.
    pub early_window: f64,
    /// Trailing fraction of the grid averaged for late-stage summaries.
    pub late_window: f64,
    pub max_cycle_len: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            metrics: Metric::ALL.iter().map(|m| m.name().to_ascii_lowercase()).collect(),
            bins: 5,
            early_window: 0.1,
            late_window: 0.2,
            max_cycle_len: DEFAULT_MAX_CYCLE_LEN,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a config file and anchors relative edge-list paths at its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if let NetworkSource::File { path: p } = &mut cfg.network {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    /// Config for a bare edge-list path with every other setting at its default.
    pub fn for_edge_list(path: PathBuf) -> Self {
        ExperimentConfig {
            seed: 0,
            strategies: Vec::new(),
            replications: 1,
            out: None,
            network: NetworkSource::File { path },
            params: ParamsSection::default(),
            initial: InitialSection::default(),
            fbs: FbsSection::default(),
            dra: DraSection::default(),
            analysis: AnalysisSection::default(),
        }
    }

    /// Canonical TOML text; the manifest hashes this.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.parsed_strategies()?;
        self.metrics()?;
        if self.replications == 0 {
            return Err(CliError::Config("replications must be >= 1".into()));
        }
        match (self.params.beta0, self.params.beta0_multiple) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("give either params.beta0 or params.beta0_multiple, not both".into()))
            }
            (_, Some(m)) if !(m > 0.0) => {
                return Err(CliError::Config(format!("params.beta0_multiple must be > 0 (got {m})")))
            }
            _ => {}
        }
        if let NetworkSource::File { path } = &self.network {
            if !path.exists() {
                return Err(CliError::Io(format!("{}: no such file", path.display())));
            }
        }
        if !["uniform", "seeded"].contains(&self.initial.mode.as_str()) {
            return Err(CliError::Config(format!(
                "initial.mode must be \"uniform\" or \"seeded\" (got {:?})",
                self.initial.mode
            )));
        }
        if !(0.0..=1.0).contains(&self.analysis.early_window) || !(0.0..=1.0).contains(&self.analysis.late_window) {
            return Err(CliError::Config("analysis windows must lie in [0, 1]".into()));
        }
        self.options()?;
        Ok(())
    }

    pub fn parsed_strategies(&self) -> Result<Vec<Strategy>, CliError> {
        self.strategies
            .iter()
            .map(|s| s.parse::<Strategy>().map_err(|e| CliError::Config(e.to_string())))
            .collect()
    }

    pub fn metrics(&self) -> Result<Vec<Metric>, CliError> {
        self.analysis
            .metrics
            .iter()
            .map(|s| s.parse::<Metric>().map_err(|e| CliError::Config(e.to_string())))
            .collect()
    }

    pub fn options(&self) -> Result<StrategyOptions, CliError> {
        let adjoint_form = match self.fbs.adjoint.as_str() {
            "coupled" => AdjointForm::Coupled,
            "node-local" => AdjointForm::NodeLocal,
            other => return Err(CliError::Config(format!("fbs.adjoint must be \"coupled\" or \"node-local\" (got {other:?})"))),
        };
        let budget = match self.dra.budget.as_str() {
            "unit" => DraBudget::Unit,
            "shared" => DraBudget::Shared,
            other => return Err(CliError::Config(format!("dra.budget must be \"unit\" or \"shared\" (got {other:?})"))),
        };
        Ok(StrategyOptions {
            fbs: FbsConfig {
                tolerance: self.fbs.tolerance,
                relaxation: self.fbs.relaxation,
                max_iterations: self.fbs.max_iterations,
                adjoint_form,
            },
            dra: DraConfig {
                restarts: self.dra.restarts,
                seed: self.seed,
                infected_threshold: self.dra.infected_threshold,
                budget,
            },
            max_cycle_len: self.analysis.max_cycle_len,
        })
    }

    /// Builds replication `r` of the network; edge lists ignore `r`.
    pub fn build_network(&self, r: usize) -> Result<Network, CliError> {
        let seed = self.seed.wrapping_add(r as u64);
        let generated = |g: Graph| Network { graph: g, labels: None, dropped: Dropped::default() };
        Ok(match &self.network {
            NetworkSource::File { path } => {
                let import = load_edge_list_file(path).map_err(|e| CliError::from_load(path, e))?;
                Network { graph: import.graph, labels: Some(import.labels), dropped: import.dropped }
            }
            NetworkSource::Ba { n, m } => generated(generate_ba(*n, *m, seed)?),
            NetworkSource::Ws { n, k, p } => generated(generate_ws(*n, *k, *p, seed)?),
            NetworkSource::Er { n, edges } => generated(generate_er(*n, *edges, seed)?),
        })
    }

    pub fn is_generated(&self) -> bool {
        !matches!(self.network, NetworkSource::File { .. })
    }

    /// Resolves the model parameters on `g`; the second value describes how
    /// `beta0` was obtained.
    pub fn sir_params(&self, g: &Graph) -> Result<(SirParams, String), CliError> {
        let p = &self.params;
        let (beta0, source) = match (p.beta0, p.beta0_multiple) {
            (_, Some(m)) => {
                let bc = epidemic_threshold(g)?;
                (m * bc, format!("{m} x beta_c ({bc})"))
            }
            (Some(b), None) => (b, "absolute".to_string()),
            (None, None) => (SirParams::default().beta0, "default".to_string()),
        };
        let params = SirParams {
            beta0,
            gamma0: p.gamma0,
            u: p.u,
            c: p.c,
            w_total: p.w_total,
            horizon: p.horizon,
            steps: p.steps,
        };
        params.validate()?;
        Ok((params, source))
    }

    pub fn initial_state(&self, n: usize) -> Result<NodeState, CliError> {
        let st = match self.initial.mode.as_str() {
            "seeded" => NodeState::seeded(n, &self.initial.infected)?,
            _ => NodeState::uniform(n, self.initial.i0)?,
        };
        Ok(st)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = ExperimentConfig::from_toml("[network]\nkind = \"ba\"\nn = 50\nm = 2\n").unwrap();
        assert!(cfg.strategies.is_empty());
        assert_eq!(cfg.params, ParamsSection::default());
        assert_eq!(cfg.fbs.max_iterations, 100);
        let mut cfg = cfg;
        cfg.strategies = all_strategy_names();
        cfg.validate().unwrap();
        assert_eq!(cfg.parsed_strategies().unwrap().len(), 14);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_toml("[network]\nkind = \"ba\"\nn = 5\nm = 2\nq = 1\n").is_err());
        assert!(ExperimentConfig::from_toml("bogus = 1\n[network]\nkind = \"er\"\nn = 5\nedges = 2\n").is_err());
    }

    #[test]
    fn beta_given_twice_rejected() {
        let cfg = ExperimentConfig::from_toml(
            "[network]\nkind = \"er\"\nn = 20\nedges = 40\n[params]\nbeta0 = 0.2\nbeta0_multiple = 3.0\n",
        )
        .unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    }

    #[test]
    fn multiple_of_threshold_resolves() {
        let cfg = ExperimentConfig::from_toml(
            "[network]\nkind = \"ba\"\nn = 60\nm = 2\n[params]\nbeta0_multiple = 2.0\n",
        )
        .unwrap();
        let g = cfg.build_network(0).unwrap().graph;
        let (p, how) = cfg.sir_params(&g).unwrap();
        assert_eq!(p.beta0, 2.0 * epidemic_threshold(&g).unwrap());
        assert!(how.starts_with("2 x beta_c"));
    }

    #[test]
    fn canonical_text_round_trips() {
        let cfg = ExperimentConfig::from_toml("seed = 4\nstrategies = [\"unc\"]\n[network]\nkind = \"ws\"\nn = 30\nk = 4\np = 0.1\n")
            .unwrap();
        assert_eq!(ExperimentConfig::from_toml(&cfg.canonical()).unwrap(), cfg);
    }
}
