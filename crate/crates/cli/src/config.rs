//! Experiment configuration: one JSON document plus a master seed
//! drives everything. Instances come either from the generative model
//! (`model` + `similarity`) or from files on disk (`data`); exactly one
//! of the two must be present.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use gmatch_core::fw::FwConfig;
use gmatch_core::mcer::{McerSpec, SimilaritySpec};

use crate::{CliError, Result};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Generative model for sampled instances.
    #[serde(default)]
    pub model: Option<ModelConfig>,
    /// Similarity slot means for sampled instances.
    #[serde(default)]
    pub similarity: Option<SimilarityConfig>,
    /// Fixed instance loaded from files instead of the model.
    #[serde(default)]
    pub data: Option<DataConfig>,
    pub grid: GridConfig,
    pub matcher: MatcherConfig,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub strategy: StrategyConfig,
    pub mc_reps: usize,
    /// Seed pairs drawn uniformly without replacement from the
    /// templates' shared nodes, fresh per repetition.
    #[serde(default)]
    pub seeds_from_overlap: usize,
    pub master_seed: u64,
    /// Fraction of a template's nodes that must be correctly placed for
    /// it to win the recovery label.
    #[serde(default = "default_threshold")]
    pub recovery_threshold: f64,
    /// Record wall-clock milliseconds per repetition. Off by default so
    /// reruns with the same seed emit byte-identical CSV.
    #[serde(default)]
    pub timing: bool,
    pub outputs: OutputConfig,
}

fn default_threshold() -> f64 {
    0.5
}

/// Mirror of [`McerSpec`]; `overlap` acts as the default when the grid
/// does not sweep k.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub m: usize,
    pub n: usize,
    pub p: f64,
    pub overlap: usize,
    #[serde(default)]
    pub overlap_corr: f64,
    pub template_corrs: Vec<f64>,
}

impl ModelConfig {
    pub fn to_spec(&self, k: usize) -> McerSpec {
        McerSpec {
            m: self.m,
            n: self.n,
            p: self.p,
            overlap: k,
            overlap_corr: self.overlap_corr,
            template_corrs: self.template_corrs.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimilarityConfig {
    pub diag_means: Vec<f64>,
    pub background_mean: f64,
}

impl SimilarityConfig {
    pub fn to_spec(&self) -> SimilaritySpec {
        SimilaritySpec {
            diag_means: self.diag_means.clone(),
            background_mean: self.background_mean,
        }
    }
}

/// Instance fixed on disk. Without `meta` there are no planted truths:
/// labels come out as `none`, fractions stay empty, and overlap seeding
/// is unavailable.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub template: PathBuf,
    pub background: PathBuf,
    #[serde(default)]
    pub similarity: Option<PathBuf>,
    #[serde(default)]
    pub meta: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Overlap sizes to sweep; empty means the model's own overlap.
    #[serde(default)]
    pub k: Vec<usize>,
    pub lambda: Vec<f64>,
    /// Penalty applied to round one's solution.
    pub eps1: Vec<f64>,
    /// Penalty applied to round two's solution; present means each cell
    /// runs three rounds instead of two.
    #[serde(default)]
    pub eps2: Option<Vec<f64>>,
}

impl GridConfig {
    pub fn rounds(&self) -> usize {
        if self.eps2.is_some() {
            3
        } else {
            2
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MatcherConfig {
    pub n_restarts: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Movement threshold; defaults to `1e-6 * n` for an n-node
    /// background.
    #[serde(default)]
    pub eta: Option<f64>,
}

fn default_max_iters() -> usize {
    100
}

impl MatcherConfig {
    pub fn to_fw(&self, n: usize, lambda: f64, seeds: usize, master_seed: u64) -> FwConfig {
        FwConfig {
            lambda,
            eta: self.eta.unwrap_or(1e-6 * n as f64),
            max_iters: self.max_iters,
            n_restarts: self.n_restarts,
            seeds,
            master_seed,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SchemeConfig {
    #[default]
    Centered,
    Naive,
}

impl SchemeConfig {
    pub fn to_core(self) -> gmatch_core::graph::PadScheme {
        match self {
            SchemeConfig::Centered => gmatch_core::graph::PadScheme::Centered,
            SchemeConfig::Naive => gmatch_core::graph::PadScheme::Naive,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StrategyConfig {
    #[default]
    Similarity,
    Gradient,
    Initialization,
}

impl StrategyConfig {
    pub fn to_core(self) -> gmatch_core::diversify::DiversifyStrategy {
        match self {
            StrategyConfig::Similarity => gmatch_core::diversify::DiversifyStrategy::Similarity,
            StrategyConfig::Gradient => gmatch_core::diversify::DiversifyStrategy::Gradient,
            StrategyConfig::Initialization => {
                gmatch_core::diversify::DiversifyStrategy::Initialization
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub per_rep_csv: PathBuf,
    pub aggregate_csv: PathBuf,
}

impl ExperimentConfig {
    /// Overlap sizes the grid actually sweeps.
    pub fn k_values(&self) -> Vec<usize> {
        if !self.grid.k.is_empty() {
            self.grid.k.clone()
        } else if let Some(model) = &self.model {
            vec![model.overlap]
        } else {
            vec![0]
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.model, &self.data) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "give either a model or data files, not both".into(),
                ));
            }
            (None, None) => {
                return Err(CliError::Config(
                    "either a model or data files are required".into(),
                ));
            }
            (Some(_), None) if self.similarity.is_none() => {
                return Err(CliError::Config(
                    "sampled instances need a similarity section".into(),
                ));
            }
            _ => {}
        }
        if self.mc_reps == 0 {
            return Err(CliError::Config("mc_reps must be >= 1".into()));
        }
        if self.grid.lambda.is_empty() || self.grid.eps1.is_empty() {
            return Err(CliError::Config("grid lists must be nonempty".into()));
        }
        if self.grid.eps2.as_ref().is_some_and(Vec::is_empty) {
            return Err(CliError::Config("eps2 list must be nonempty".into()));
        }
        let mut all_eps: Vec<f64> = self.grid.eps1.clone();
        if let Some(e2) = &self.grid.eps2 {
            all_eps.extend(e2);
        }
        for &e in &all_eps {
            if !(0.0..1.0).contains(&e) {
                return Err(CliError::Config(format!("eps {e} must lie in [0, 1)")));
            }
        }
        for &l in &self.grid.lambda {
            if !l.is_finite() || l < 0.0 {
                return Err(CliError::Config(format!("lambda {l} must be >= 0")));
            }
        }
        if !(self.recovery_threshold > 0.0 && self.recovery_threshold <= 1.0) {
            return Err(CliError::Config(format!(
                "recovery threshold {} must lie in (0, 1]",
                self.recovery_threshold
            )));
        }
        if self.matcher.n_restarts == 0 || self.matcher.max_iters == 0 {
            return Err(CliError::Config(
                "matcher needs n_restarts >= 1 and max_iters >= 1".into(),
            ));
        }
        if let Some(model) = &self.model {
            if model.template_corrs.len() > 3 {
                return Err(CliError::Config(
                    "CSV schema caps grid runs at 3 template copies".into(),
                ));
            }
            let sim = self.similarity.as_ref().expect("checked above");
            for &k in &self.k_values() {
                let spec = model.to_spec(k);
                spec.validate()?;
                sim.to_spec().validate(spec.n_templates())?;
                if self.seeds_from_overlap > k {
                    return Err(CliError::Config(format!(
                        "{} seeds cannot be drawn from {k} shared nodes",
                        self.seeds_from_overlap
                    )));
                }
            }
        }
        if self.data.is_some() && !self.grid.k.is_empty() {
            return Err(CliError::Config(
                "k sweeps apply to sampled instances only".into(),
            ));
        }
        Ok(())
    }
}
