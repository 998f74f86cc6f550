//! Scenario files: a single JSON document describing a model and the
//! analyses to run on it.

use std::path::PathBuf;

use mapcap::channel::{IncrementLaw, SnrMatrix};
use mapcap::control::{assemble_controlled_model, plan_transitions, ControlPlan, ControlledModel, Orientation};
use mapcap::copula::CopulaSpec;
use mapcap::markov::{MarginalDistribution, OrderedStateSpace, TransitionMatrix};
use mapcap::model::MarkovAdditiveModel;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    pub model: ModelSpec,
    /// Initial state distribution; defaults to the plan's first marginal or
    /// the stationary distribution.
    #[serde(default)]
    pub initial: Option<Vec<f64>>,
    /// Constant arrival rate in bits per slot.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub simulation: SimulationSpec,
    /// Delays in slots at which delay tails are reported.
    #[serde(default = "default_delay_grid")]
    pub delay_grid: Vec<f64>,
    /// Backlogs in bits; defaults to `λ` times the delay grid.
    #[serde(default)]
    pub backlog_grid: Option<Vec<f64>>,
    /// Slots at which transient capacity is reported.
    #[serde(default = "default_times")]
    pub transient_times: Vec<usize>,
    /// `(d, ε)` targets for delay-constrained rates.
    #[serde(default)]
    pub rate_targets: Vec<RateTarget>,
    /// Second model for the `order` subcommand.
    #[serde(default)]
    pub compare: Option<ModelSpec>,
    #[serde(default = "default_order_horizon")]
    pub order_horizon: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_paths")]
    pub paths: usize,
    /// Slots discarded before queue samples are collected; defaults to half
    /// the horizon.
    #[serde(default)]
    pub warmup: Option<usize>,
    /// Lower quantile level of the transient summary.
    #[serde(default = "default_quantile")]
    pub quantile: f64,
    /// Failure probability of the DKW bands.
    #[serde(default = "default_delta")]
    pub delta: f64,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            horizon: default_horizon(),
            paths: default_paths(),
            warmup: None,
            quantile: default_quantile(),
            delta: default_delta(),
        }
    }
}

impl SimulationSpec {
    pub fn warmup(&self) -> usize {
        self.warmup.unwrap_or(self.horizon / 2)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateTarget {
    pub delay: f64,
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    1e-3
}
fn default_delay_grid() -> Vec<f64> {
    (0..=24).map(|k| 0.25 * k as f64).collect()
}
fn default_times() -> Vec<usize> {
    (1..=10).map(|k| 100 * k).collect()
}
fn default_order_horizon() -> usize {
    4
}
fn default_horizon() -> usize {
    1000
}
fn default_paths() -> usize {
    1000
}
fn default_quantile() -> f64 {
    0.05
}
fn default_delta() -> f64 {
    0.05
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Rayleigh channel on an explicit power chain.
    Chain {
        transitions: Vec<Vec<f64>>,
        bandwidth: f64,
        #[serde(default)]
        snr: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        snr_db: Option<Vec<Vec<f64>>>,
    },
    /// Rayleigh channel on a power chain planned from copulas.
    CopulaPlan {
        marginal: Vec<f64>,
        copulas: Vec<CopulaConfig>,
        #[serde(default)]
        targets: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        orientation: OrientationConfig,
        /// Coupling between power and fading; a 4-dimensional Gaussian
        /// gives a simulation-only model.
        #[serde(default)]
        spatial: Option<CopulaConfig>,
        bandwidth: f64,
        #[serde(default)]
        snr: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        snr_db: Option<Vec<Vec<f64>>>,
    },
    /// Arbitrary increment laws on an explicit chain.
    Laws {
        transitions: Vec<Vec<f64>>,
        laws: Vec<Vec<IncrementLaw<f64>>>,
    },
    /// One state with a constant increment.
    Deterministic { value: f64 },
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationConfig {
    #[default]
    Capacity,
    NetIncrement,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CopulaConfig {
    Product,
    Comonotone,
    Countermonotone,
    Frechet {
        #[serde(default)]
        alpha: Option<f64>,
        /// `[w_W, w_P, w_M]`.
        #[serde(default)]
        weights: Option<[f64; 3]>,
    },
    Gaussian {
        #[serde(default)]
        correlation: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        rho: Option<f64>,
    },
}

impl CopulaConfig {
    pub fn build(&self, path: &str) -> Result<CopulaSpec<f64>, CliError> {
        let built = match self {
            Self::Product => Ok(CopulaSpec::Product),
            Self::Comonotone => Ok(CopulaSpec::Comonotone),
            Self::Countermonotone => Ok(CopulaSpec::Countermonotone),
            Self::Frechet { alpha: Some(a), weights: None } => CopulaSpec::frechet_alpha(*a),
            Self::Frechet { alpha: None, weights: Some([w, p, m]) } => CopulaSpec::frechet(*w, *p, *m),
            Self::Frechet { .. } => return Err(CliError::config(path, "give exactly one of `alpha` or `weights`")),
            Self::Gaussian { correlation: Some(c), rho: None } => CopulaSpec::gaussian(c.clone()),
            Self::Gaussian { correlation: None, rho: Some(r) } => CopulaSpec::gaussian_bivariate(*r),
            Self::Gaussian { .. } => return Err(CliError::config(path, "give exactly one of `correlation` or `rho`")),
        };
        built.map_err(|e| CliError::at(path, e))
    }
}

/// SNR matrix from exactly one of the linear or dB keys.
fn build_snr(
    snr: &Option<Vec<Vec<f64>>>,
    snr_db: &Option<Vec<Vec<f64>>>,
    path: &str,
) -> Result<SnrMatrix<f64>, CliError> {
    match (snr, snr_db) {
        (Some(rows), None) => SnrMatrix::new(rows.clone()).map_err(|e| CliError::at(&format!("{path}.snr"), e)),
        (None, Some(rows)) => SnrMatrix::from_db(rows.clone()).map_err(|e| CliError::at(&format!("{path}.snr_db"), e)),
        _ => Err(CliError::config(path, "give exactly one of `snr` or `snr_db`")),
    }
}

/// A model ready for analysis.
pub struct BuiltModel {
    pub model: ControlledModel<f64>,
    pub plan: Option<ControlPlan<f64>>,
    pub initial: MarginalDistribution<f64>,
}

impl BuiltModel {
    pub fn exact(&self, path: &str) -> Result<&MarkovAdditiveModel<f64>, CliError> {
        match &self.model {
            ControlledModel::Exact(m) => Ok(m),
            ControlledModel::SimulationOnly(_) => Err(CliError::config(
                path,
                "a spatially dependent Gaussian model supports simulation only",
            )),
        }
    }
}

fn marginal(probs: &[f64], path: &str) -> Result<MarginalDistribution<f64>, CliError> {
    MarginalDistribution::new(probs.to_vec()).map_err(|e| CliError::at(path, e))
}

fn transitions(rows: &[Vec<f64>], path: &str) -> Result<TransitionMatrix<f64>, CliError> {
    TransitionMatrix::from_rows(rows).map_err(|e| CliError::at(path, e))
}

impl ModelSpec {
    pub fn build(&self, initial: Option<&[f64]>, path: &str) -> Result<BuiltModel, CliError> {
        let (mut model, plan) = match self {
            Self::Chain {
                transitions: rows,
                bandwidth,
                snr,
                snr_db,
            } => {
                let p = transitions(rows, &format!("{path}.transitions"))?;
                let snr = build_snr(snr, snr_db, path)?;
                let m = MarkovAdditiveModel::rayleigh(p, *bandwidth, &snr).map_err(|e| CliError::at(path, e))?;
                (ControlledModel::Exact(m), None)
            }
            Self::CopulaPlan {
                marginal: probs,
                copulas,
                targets,
                orientation,
                spatial,
                bandwidth,
                snr,
                snr_db,
            } => {
                let varpi0 = marginal(probs, &format!("{path}.marginal"))?;
                let copulas = copulas
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c.build(&format!("{path}.copulas[{k}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                let targets = targets
                    .as_ref()
                    .map(|ts| {
                        ts.iter()
                            .enumerate()
                            .map(|(k, t)| marginal(t, &format!("{path}.targets[{k}]")))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .transpose()?;
                let orientation = match orientation {
                    OrientationConfig::Capacity => Orientation::Capacity,
                    OrientationConfig::NetIncrement => Orientation::NetIncrement,
                };
                let states = OrderedStateSpace::indexed(varpi0.len());
                let plan = plan_transitions(&copulas, &varpi0, &states, targets.as_deref(), orientation)
                    .map_err(|e| CliError::at(&format!("{path}.copulas"), e))?;
                let spatial = match spatial {
                    Some(c) => c.build(&format!("{path}.spatial"))?,
                    None => CopulaSpec::Product,
                };
                let snr = build_snr(snr, snr_db, path)?;
                let model = assemble_controlled_model(&plan, None, &spatial, &snr, *bandwidth)
                    .map_err(|e| CliError::at(path, e))?;
                (model, Some(plan))
            }
            Self::Laws { transitions: rows, laws } => {
                let p = transitions(rows, &format!("{path}.transitions"))?;
                for (i, row) in laws.iter().enumerate() {
                    for (j, law) in row.iter().enumerate() {
                        law.validate().map_err(|e| CliError::at(&format!("{path}.laws[{i}][{j}]"), e))?;
                    }
                }
                let m = MarkovAdditiveModel::homogeneous(p, laws.clone()).map_err(|e| CliError::at(path, e))?;
                (ControlledModel::Exact(m), None)
            }
            Self::Deterministic { value } => {
                if !value.is_finite() {
                    return Err(CliError::config(&format!("{path}.value"), "must be finite"));
                }
                let m = MarkovAdditiveModel::single_state(IncrementLaw::deterministic(*value))
                    .map_err(|e| CliError::at(path, e))?;
                (ControlledModel::Exact(m), None)
            }
        };
        let initial = match (initial, &plan, &model) {
            (Some(p), _, _) => marginal(p, "initial")?,
            (None, Some(plan), _) => plan.initial().clone(),
            (None, None, ControlledModel::Exact(m)) => m.stationary().map_err(|e| CliError::at(path, e))?,
            (None, None, ControlledModel::SimulationOnly(g)) => g.initial.clone(),
        };
        let dim = match &model {
            ControlledModel::Exact(m) => m.dim(),
            ControlledModel::SimulationOnly(g) => g.power_states(),
        };
        if initial.len() != dim {
            return Err(CliError::config(
                "initial",
                &format!("expected {dim} probabilities, got {}", initial.len()),
            ));
        }
        if let ControlledModel::SimulationOnly(g) = &mut model {
            g.initial = initial.clone();
        }
        Ok(BuiltModel { model, plan, initial })
    }
}

impl Scenario {
    /// Parses a scenario, reporting the field path of any syntax or type error.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(&path, &e.into_inner().to_string())
        })?;
        scenario.check()?;
        Ok(scenario)
    }

    fn check(&self) -> Result<(), CliError> {
        if let Some(l) = self.lambda {
            if !(l.is_finite() && l > 0.0) {
                return Err(CliError::config("lambda", "must be positive and finite"));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(CliError::config("epsilon", "must lie in (0, 1)"));
        }
        let sim = &self.simulation;
        if sim.horizon == 0 || sim.paths == 0 {
            return Err(CliError::config("simulation", "horizon and paths must be positive"));
        }
        if sim.warmup() > sim.horizon {
            return Err(CliError::config("simulation.warmup", "exceeds the horizon"));
        }
        if !(sim.quantile > 0.0 && sim.quantile < 0.5) {
            return Err(CliError::config("simulation.quantile", "must lie in (0, 0.5)"));
        }
        if !(sim.delta > 0.0 && sim.delta < 1.0) {
            return Err(CliError::config("simulation.delta", "must lie in (0, 1)"));
        }
        if let Some(k) = self.delay_grid.iter().position(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(CliError::config(&format!("delay_grid[{k}]"), "must be finite and nonnegative"));
        }
        if let Some(k) = self.transient_times.iter().position(|t| *t == 0 || *t > sim.horizon) {
            return Err(CliError::config(
                &format!("transient_times[{k}]"),
                "must lie in 1..=simulation.horizon",
            ));
        }
        for (k, r) in self.rate_targets.iter().enumerate() {
            if !(r.delay > 0.0 && r.epsilon > 0.0 && r.epsilon < 1.0) {
                return Err(CliError::config(
                    &format!("rate_targets[{k}]"),
                    "need delay > 0 and epsilon in (0, 1)",
                ));
            }
        }
        if self.order_horizon == 0 {
            return Err(CliError::config("order_horizon", "must be positive"));
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<BuiltModel, CliError> {
        self.model.build(self.initial.as_deref(), "model")
    }

    pub fn backlog_grid(&self, lambda: f64) -> Vec<f64> {
        self.backlog_grid
            .clone()
            .unwrap_or_else(|| self.delay_grid.iter().map(|d| d * lambda).collect())
    }
}
