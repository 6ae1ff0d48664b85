//! Scenario configuration: the JSON config file format, validation with
//! field-path errors, and the built-in experiment presets.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agents::{AgentConfig, EpsilonSchedule, FixedPolicyConfig};
use crate::contexts::{Context, ContextSchedule, InsertionMode, OdFlow};
use crate::env::ObservationMode;
use crate::net::build_grid;
use crate::runner::{ControllerSpec, QLearnSpec, Scenario};
use crate::sim::SimParams;

pub const PRESET_NAMES: [&str; 4] = ["fixed-baseline", "freeze", "observability", "discretization"];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown preset '{0}'; known presets: fixed-baseline, freeze, observability, discretization")]
    UnknownPreset(String),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub rows: u32,
    pub cols: u32,
    pub link_length_m: f64,
    pub lanes: u8,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            rows: 4,
            cols: 4,
            link_length_m: 150.0,
            lanes: 2,
        }
    }
}

/// Demand for one route, referenced by its boundary-to-boundary name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub od: String,
    pub period_s: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextConfig {
    pub name: String,
    pub flows: Vec<FlowConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub switch_period_s: u64,
    pub contexts: Vec<ContextConfig>,
    #[serde(default)]
    pub start_index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ControllerConfig {
    Fixed(FixedPolicyConfig),
    QLearning {
        alpha: f64,
        gamma: f64,
        epsilon: EpsilonSchedule,
        observation: ObservationMode,
        bins: u32,
        #[serde(default)]
        freeze_at_s: Option<u64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub sim: SimParams,
    pub schedule: ScheduleConfig,
    pub controller: ControllerConfig,
    #[serde(default)]
    pub insertion_mode: InsertionMode,
    pub horizon_s: u64,
    pub n_runs: u32,
    pub base_seed: u64,
    /// Default output directory; overridable by the CLI.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Also dump every agent's Q-table per run.
    #[serde(default)]
    pub dump_qtables: bool,
}

impl ScenarioConfig {
    /// Validates every field and compiles the network, schedule, and
    /// controller. Errors name the offending field.
    pub fn build(&self) -> Result<Scenario, ConfigError> {
        if self.name.is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        if self.horizon_s == 0 {
            return Err(invalid("horizon_s", "must be positive"));
        }
        if self.n_runs == 0 {
            return Err(invalid("n_runs", "must be at least 1"));
        }
        let p = &self.sim;
        if !(p.vmax_mps > 0.0 && p.accel_mps2 > 0.0 && p.decel_mps2 > 0.0) {
            return Err(invalid("sim", "speeds and accelerations must be positive"));
        }
        if !(p.vehicle_length_m > 0.0 && p.min_gap_m >= 0.0 && p.stop_speed_mps >= 0.0) {
            return Err(invalid("sim", "lengths must be positive and thresholds non-negative"));
        }
        if p.yellow_time_s == 0 {
            return Err(invalid("sim.yellow_time_s", "must be at least 1"));
        }

        let net = build_grid(self.grid.rows, self.grid.cols, self.grid.link_length_m, self.grid.lanes)
            .map_err(|e| invalid("grid", e.to_string()))?;

        if self.schedule.contexts.is_empty() {
            return Err(invalid("schedule.contexts", "need at least one context"));
        }
        if !self.schedule.contexts.is_empty() && self.schedule.start_index >= self.schedule.contexts.len() {
            return Err(invalid("schedule.start_index", "out of range"));
        }
        let mut contexts = Vec::new();
        for (ci, ctx) in self.schedule.contexts.iter().enumerate() {
            let mut flows = Vec::new();
            for (fi, flow) in ctx.flows.iter().enumerate() {
                let route = net.route_index_by_name(&flow.od).ok_or_else(|| {
                    invalid(
                        format!("schedule.contexts[{ci}].flows[{fi}].od"),
                        format!("unknown route '{}'", flow.od),
                    )
                })?;
                flows.push(OdFlow {
                    route,
                    period_s: flow.period_s,
                });
            }
            let context = Context {
                name: ctx.name.clone(),
                flows,
            };
            context
                .validate(&net)
                .map_err(|e| invalid(format!("schedule.contexts[{ci}]"), e.to_string()))?;
            contexts.push(context);
        }
        let mut schedule = ContextSchedule::new(contexts, self.schedule.switch_period_s)
            .map_err(|e| invalid("schedule", e.to_string()))?;
        schedule.start_index = self.schedule.start_index;

        let controller = match &self.controller {
            ControllerConfig::Fixed(fixed) => {
                fixed
                    .validate()
                    .map_err(|e| invalid("controller.green_time_s", e))?;
                ControllerSpec::Fixed(*fixed)
            }
            ControllerConfig::QLearning {
                alpha,
                gamma,
                epsilon,
                observation,
                bins,
                freeze_at_s,
            } => {
                if !(0.0..=1.0).contains(alpha) {
                    return Err(invalid("controller.alpha", "must lie in [0, 1]"));
                }
                if !(0.0..=1.0).contains(gamma) {
                    return Err(invalid("controller.gamma", "must lie in [0, 1]"));
                }
                match *epsilon {
                    EpsilonSchedule::Decaying { start, factor, floor } => {
                        if !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&floor) || floor > start {
                            return Err(invalid("controller.epsilon", "start and floor must lie in [0, 1]"));
                        }
                        if !(factor > 0.0 && factor <= 1.0) {
                            return Err(invalid("controller.epsilon.factor", "must lie in (0, 1]"));
                        }
                    }
                    EpsilonSchedule::Fixed { value } => {
                        if !(0.0..=1.0).contains(&value) {
                            return Err(invalid("controller.epsilon.value", "must lie in [0, 1]"));
                        }
                    }
                    EpsilonSchedule::Zero => {}
                }
                if *bins < 1 || *bins > 255 {
                    return Err(invalid("controller.bins", "must lie in [1, 255]"));
                }
                ControllerSpec::QLearn(QLearnSpec {
                    agent: AgentConfig {
                        alpha: *alpha,
                        gamma: *gamma,
                        epsilon: *epsilon,
                    },
                    observation: *observation,
                    bins: *bins,
                    freeze_at_s: *freeze_at_s,
                })
            }
        };

        Ok(Scenario {
            name: self.name.clone(),
            net,
            params: self.sim.clone(),
            schedule,
            insertion_mode: self.insertion_mode,
            controller,
            horizon_s: self.horizon_s,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.build().map(|_| ())
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json_str(text: &str) -> Result<ScenarioConfig, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            path: "<inline>".into(),
            source: e,
        })
    }

    pub fn from_json_file(path: &Path) -> Result<ScenarioConfig, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.display().to_string(),
            source: e,
        })
    }

    /// Hash of the canonical (compact JSON) form of this config.
    pub fn sha256(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// The four west-east route names of the default 4x4 grid, then north-south.
const WE_ODS: [&str; 4] = ["A2F2", "A3F3", "A4F4", "A5F5"];
const NS_ODS: [&str; 4] = ["B1B6", "C1C6", "D1D6", "E1E6"];

fn context_config(name: &str, ns_period_s: u32, we_period_s: u32) -> ContextConfig {
    let mut flows: Vec<FlowConfig> = WE_ODS
        .iter()
        .map(|od| FlowConfig {
            od: od.to_string(),
            period_s: we_period_s,
        })
        .collect();
    flows.extend(NS_ODS.iter().map(|od| FlowConfig {
        od: od.to_string(),
        period_s: ns_period_s,
    }));
    ContextConfig {
        name: name.to_string(),
        flows,
    }
}

/// Context 1: every route inserts one vehicle per three seconds on average.
/// Context 2: north-south slows to one per six, west-east doubles to one per
/// two; the network-wide rate stays 8/3 vehicles per second.
fn default_schedule() -> ScheduleConfig {
    ScheduleConfig {
        switch_period_s: 20_000,
        contexts: vec![context_config("context-1", 3, 3), context_config("context-2", 6, 2)],
        start_index: 0,
    }
}

fn base_config(name: &str, controller: ControllerConfig, horizon_s: u64, n_runs: u32) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        grid: GridConfig::default(),
        sim: SimParams::default(),
        schedule: default_schedule(),
        controller,
        insertion_mode: InsertionMode::Bernoulli,
        horizon_s,
        n_runs,
        base_seed: 42,
        out_dir: None,
        dump_qtables: false,
    }
}

fn qlearning(epsilon: EpsilonSchedule, observation: ObservationMode, bins: u32, freeze_at_s: Option<u64>) -> ControllerConfig {
    ControllerConfig::QLearning {
        alpha: 0.1,
        gamma: 0.99,
        epsilon,
        observation,
        bins,
        freeze_at_s,
    }
}

fn decaying() -> EpsilonSchedule {
    EpsilonSchedule::Decaying {
        start: 1.0,
        factor: 0.9985,
        floor: 0.0,
    }
}

fn fixed_eps() -> EpsilonSchedule {
    EpsilonSchedule::Fixed { value: 0.05 }
}

/// Expands a preset name into its experiment arms. Family names return every
/// arm; an individual arm name returns just that one.
pub fn preset(name: &str) -> Result<Vec<ScenarioConfig>, ConfigError> {
    let configs = match name {
        "fixed-baseline" => vec![base_config(
            "fixed-baseline",
            ControllerConfig::Fixed(FixedPolicyConfig::default()),
            40_000,
            1,
        )],
        "freeze" => vec![base_config(
            "freeze",
            qlearning(decaying(), ObservationMode::Full, 10, Some(20_000)),
            40_000,
            30,
        )],
        "observability" => vec![
            base_config(
                "observability-full",
                qlearning(fixed_eps(), ObservationMode::Full, 10, None),
                80_000,
                30,
            ),
            base_config(
                "observability-partial",
                qlearning(fixed_eps(), ObservationMode::Partial, 10, None),
                80_000,
                30,
            ),
        ],
        "discretization" => vec![
            base_config(
                "discretization-10bins",
                qlearning(fixed_eps(), ObservationMode::Partial, 10, None),
                80_000,
                30,
            ),
            base_config(
                "discretization-4bins",
                qlearning(fixed_eps(), ObservationMode::Partial, 4, None),
                80_000,
                30,
            ),
        ],
        arm => {
            let family = PRESET_NAMES
                .iter()
                .find(|f| arm.starts_with(&format!("{f}-")) || arm == **f);
            match family {
                Some(family) => {
                    let arms = preset(family)?;
                    let found: Vec<ScenarioConfig> = arms.into_iter().filter(|c| c.name == arm).collect();
                    if found.is_empty() {
                        return Err(ConfigError::UnknownPreset(name.to_string()));
                    }
                    found
                }
                None => return Err(ConfigError::UnknownPreset(name.to_string())),
            }
        }
    };
    Ok(configs)
}
