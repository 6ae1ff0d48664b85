//! Experiment execution: wires the simulation, contexts, and controllers
//! together, runs seeds in parallel, and writes the run artifacts.
//!
//! Seed splitting: run `i` of an experiment uses `base_seed + i`. Within a
//! run, the insertion sampler owns stream 0 of the run's generator and agent
//! `k` owns stream `1 + k`, so agent decisions never perturb the demand
//! sequence and runs are reproducible on any machine.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{fixed_policy_decide, AgentConfig, FixedPolicyConfig, QLearningAgent, QTable};
use crate::config::{ConfigError, ScenarioConfig};
use crate::contexts::{insertion_requests, ContextSchedule, InsertionMode};
use crate::env::{discretize, mask_for_signal, observe, reward, DiscretizedState, ObservationMode, DECISION_INTERVAL_S};
use crate::metrics::{aggregate_runs, total_waiting, write_aggregate_csv, write_run_csv, MetricsError, RunRecord, TimeSeries};
use crate::net::GridNetwork;
use crate::sim::{Action, SimParams, SimState};

/// Stream id of the insertion sampler within a run's generator.
pub const INSERTION_STREAM: u64 = 0;
/// Agent `k` draws from stream `AGENT_STREAM_BASE + k`.
pub const AGENT_STREAM_BASE: u64 = 1;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> RunnerError {
    RunnerError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn insertion_rng(run_seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    rng.set_stream(INSERTION_STREAM);
    rng
}

pub fn agent_rng(run_seed: u64, agent_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    rng.set_stream(AGENT_STREAM_BASE + agent_index as u64);
    rng
}

/// A compiled, validated experiment scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub net: GridNetwork,
    pub params: SimParams,
    pub schedule: ContextSchedule,
    pub insertion_mode: InsertionMode,
    pub controller: ControllerSpec,
    pub horizon_s: u64,
}

#[derive(Clone, Debug)]
pub enum ControllerSpec {
    Fixed(FixedPolicyConfig),
    QLearn(QLearnSpec),
}

#[derive(Clone, Debug)]
pub struct QLearnSpec {
    pub agent: AgentConfig,
    pub observation: ObservationMode,
    pub bins: u32,
    pub freeze_at_s: Option<u64>,
}

/// Experience waiting for its outcome: the next decision tick supplies the
/// reward and successor state.
#[derive(Clone, Copy, Debug)]
struct Pending {
    state: DiscretizedState,
    action: Action,
    waiting: u64,
}

/// Per-agent bookkeeping over one run.
#[derive(Clone, Copy, Debug, Default)]
pub struct AgentStats {
    /// Sum of all decision-interval rewards; telescopes to
    /// `first_waiting - last_waiting` by construction.
    pub reward_sum: f64,
    pub first_waiting: Option<u64>,
    pub last_waiting: u64,
    pub decisions: u64,
}

enum RunController {
    Fixed(FixedPolicyConfig),
    QLearn {
        spec: QLearnSpec,
        agents: Vec<QLearningAgent>,
        pending: Vec<Option<Pending>>,
        stats: Vec<AgentStats>,
    },
}

/// One seeded simulation of a scenario.
pub struct Run<'a> {
    pub scenario: &'a Scenario,
    pub state: SimState,
    pub run_seed: u64,
    controller: RunController,
    records: Vec<RunRecord>,
}

impl<'a> Run<'a> {
    pub fn new(scenario: &'a Scenario, run_seed: u64) -> Run<'a> {
        let state = SimState::new(&scenario.net, insertion_rng(run_seed));
        let n_agents = scenario.net.intersections().len();
        let controller = match &scenario.controller {
            ControllerSpec::Fixed(cfg) => RunController::Fixed(*cfg),
            ControllerSpec::QLearn(spec) => RunController::QLearn {
                spec: spec.clone(),
                agents: (0..n_agents)
                    .map(|k| QLearningAgent::new(spec.agent, agent_rng(run_seed, k)))
                    .collect(),
                pending: vec![None; n_agents],
                stats: vec![AgentStats::default(); n_agents],
            },
        };
        Run {
            scenario,
            state,
            run_seed,
            controller,
            records: Vec::with_capacity(scenario.horizon_s as usize),
        }
    }

    /// Advances one second: controller commands, metric recording, then the
    /// simulation step under the active context's demand.
    pub fn tick(&mut self) {
        let t = self.state.clock_s;
        let scenario = self.scenario;
        match &mut self.controller {
            RunController::Fixed(cfg) => {
                for i in 0..scenario.net.intersections().len() {
                    let cmd = fixed_policy_decide(&self.state.signals[i], cfg);
                    self.state.apply_signal_command(i, cmd, &scenario.net, &scenario.params);
                }
            }
            RunController::QLearn {
                spec,
                agents,
                pending,
                stats,
            } => {
                if t % DECISION_INTERVAL_S == 0 {
                    if let Some(freeze_at) = spec.freeze_at_s {
                        if t >= freeze_at {
                            for agent in agents.iter_mut() {
                                agent.freeze();
                            }
                        }
                    }
                    for i in 0..agents.len() {
                        let waiting = self.state.intersection_waiting_time(&scenario.net, i);
                        let obs = observe(&self.state, &scenario.net, i, spec.observation, &scenario.params);
                        let s_now = discretize(&obs, spec.bins);
                        if let Some(p) = pending[i].take() {
                            let r = reward(p.waiting, waiting);
                            agents[i].update(p.state, p.action, r, s_now);
                            stats[i].reward_sum += r;
                        }
                        let mask = mask_for_signal(&self.state.signals[i]);
                        let action = agents[i].select_action(&s_now, mask);
                        self.state.apply_signal_command(i, action, &scenario.net, &scenario.params);
                        pending[i] = Some(Pending {
                            state: s_now,
                            action,
                            waiting,
                        });
                        stats[i].decisions += 1;
                        stats[i].first_waiting.get_or_insert(waiting);
                        stats[i].last_waiting = waiting;
                    }
                }
            }
        }
        self.records.push(RunRecord {
            step: t,
            total_waiting: total_waiting(&self.state, &scenario.net),
            backlog: self.state.backlog_total(),
            context_index: scenario.schedule.active_index(t),
        });
        let context = scenario.schedule.active_context(t);
        let demand = insertion_requests(context, t, scenario.insertion_mode, &mut self.state.insertion_rng);
        self.state.step(&scenario.net, &scenario.params, &demand);
    }

    pub fn finished(&self) -> bool {
        self.state.clock_s >= self.scenario.horizon_s
    }

    pub fn run_to_completion(&mut self) {
        while !self.finished() {
            self.tick();
        }
    }

    pub fn records(&self) -> &[RunRecord] {
        &self.records
    }

    pub fn agents(&self) -> Option<&[QLearningAgent]> {
        match &self.controller {
            RunController::Fixed(_) => None,
            RunController::QLearn { agents, .. } => Some(agents),
        }
    }

    pub fn agent_stats(&self) -> Option<&[AgentStats]> {
        match &self.controller {
            RunController::Fixed(_) => None,
            RunController::QLearn { stats, .. } => Some(stats),
        }
    }

    pub fn into_output(self) -> RunOutput {
        let (stats, qtables) = match self.controller {
            RunController::Fixed(_) => (Vec::new(), Vec::new()),
            RunController::QLearn { agents, stats, .. } => {
                (stats, agents.into_iter().map(|a| a.q().clone()).collect())
            }
        };
        RunOutput {
            run_seed: self.run_seed,
            records: self.records,
            stats,
            qtables,
        }
    }
}

/// Everything one run leaves behind.
pub struct RunOutput {
    pub run_seed: u64,
    pub records: Vec<RunRecord>,
    pub stats: Vec<AgentStats>,
    pub qtables: Vec<QTable>,
}

/// Runs one seed of a scenario to completion.
pub fn run_single(scenario: &Scenario, run_seed: u64) -> RunOutput {
    let mut run = Run::new(scenario, run_seed);
    run.run_to_completion();
    run.into_output()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestFiles {
    pub runs: Vec<String>,
    pub aggregate: String,
    #[serde(default)]
    pub qtables: Vec<String>,
}

/// Reproducibility record written next to the CSVs. Contains no timestamps,
/// so re-running an identical config reproduces it byte for byte.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Git-style provenance: tool-version+config digest prefix.
    pub provenance: String,
    pub config_sha256: String,
    pub config: ScenarioConfig,
    pub seeds: Vec<u64>,
    pub switch_times: Vec<u64>,
    pub files: ManifestFiles,
}

impl Manifest {
    pub fn from_json_file(path: &Path) -> Result<Manifest, RunnerError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        serde_json::from_str(&text).map_err(|e| RunnerError::Io {
            path: path.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
        })
    }
}

pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub run_csvs: Vec<PathBuf>,
    pub aggregate_csv: PathBuf,
    pub manifest_path: PathBuf,
}

/// Executes every seeded run of a config in parallel and writes one raw CSV
/// per run, the cross-run aggregate, optional Q-table dumps, and a manifest.
pub fn execute(config: &ScenarioConfig, out_dir: &Path) -> Result<RunArtifacts, RunnerError> {
    let scenario = config.build()?;
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;

    let seeds: Vec<u64> = (0..config.n_runs as u64).map(|i| config.base_seed + i).collect();
    let outputs: Vec<RunOutput> = seeds.par_iter().map(|&seed| run_single(&scenario, seed)).collect();

    let mut run_csvs = Vec::new();
    let mut qtable_files = Vec::new();
    let mut series = Vec::new();
    for output in &outputs {
        let file = format!("{}-seed{}.csv", config.name, output.run_seed);
        let path = out_dir.join(&file);
        write_run_csv(&path, &output.records)?;
        run_csvs.push(path);
        series.push(TimeSeries {
            label: file.clone(),
            run_seed: output.run_seed,
            values: output.records.iter().map(|r| r.total_waiting as f64).collect(),
        });
        if config.dump_qtables {
            for (k, table) in output.qtables.iter().enumerate() {
                let qfile = format!("{}-seed{}-agent{:02}.qtable.txt", config.name, output.run_seed, k);
                let qpath = out_dir.join(&qfile);
                let mut buf = Vec::new();
                table.write_text(&mut buf).map_err(|e| io_err(&qpath, e))?;
                fs::write(&qpath, buf).map_err(|e| io_err(&qpath, e))?;
                qtable_files.push(qfile);
            }
        }
    }

    let aggregate = aggregate_runs(&series)?;
    let aggregate_csv = out_dir.join(format!("{}.agg.csv", config.name));
    write_aggregate_csv(&aggregate_csv, &aggregate)?;

    let manifest = Manifest {
        tool: "signalgrid".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        provenance: format!("signalgrid-{}+{}", env!("CARGO_PKG_VERSION"), &config.sha256()[..12]),
        config_sha256: config.sha256(),
        config: config.clone(),
        seeds,
        switch_times: scenario.schedule.switch_times(scenario.horizon_s),
        files: ManifestFiles {
            runs: run_csvs
                .iter()
                .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
                .collect(),
            aggregate: aggregate_csv.file_name().unwrap().to_string_lossy().into_owned(),
            qtables: qtable_files,
        },
    };
    let manifest_path = out_dir.join(format!("{}.manifest.json", config.name));
    let manifest_text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, manifest_text).map_err(|e| io_err(&manifest_path, e))?;

    Ok(RunArtifacts {
        out_dir: out_dir.to_path_buf(),
        run_csvs,
        aggregate_csv,
        manifest_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;
    use crate::contexts::Context;
    use crate::env::action_mask;
    use crate::net::build_grid;

    fn small_scenario(controller: ControllerSpec, horizon_s: u64) -> Scenario {
        let net = build_grid(2, 2, 150.0, 2).unwrap();
        let contexts = vec![
            Context::by_axis("c1", &net, 3, 3),
            Context::by_axis("c2", &net, 6, 2),
        ];
        Scenario {
            name: "small".into(),
            net,
            params: SimParams::default(),
            schedule: ContextSchedule::new(contexts, 500).unwrap(),
            insertion_mode: InsertionMode::Bernoulli,
            controller,
            horizon_s,
        }
    }

    fn ql_spec() -> ControllerSpec {
        ControllerSpec::QLearn(QLearnSpec {
            agent: AgentConfig::default(),
            observation: ObservationMode::Full,
            bins: 10,
            freeze_at_s: None,
        })
    }

    #[test]
    fn records_cover_every_second_before_the_step() {
        let scenario = small_scenario(ControllerSpec::Fixed(FixedPolicyConfig::default()), 300);
        let output = run_single(&scenario, 1);
        assert_eq!(output.records.len(), 300);
        assert_eq!(output.records[0].step, 0);
        assert_eq!(output.records[0].total_waiting, 0, "recorded before the first step");
        assert_eq!(output.records[299].step, 299);
        assert!(output.records.iter().all(|r| r.context_index == (r.step / 500) as usize % 2));
    }

    #[test]
    fn reward_sums_telescope_exactly() {
        let scenario = small_scenario(ql_spec(), 2_000);
        let output = run_single(&scenario, 3);
        for stats in &output.stats {
            let first = stats.first_waiting.expect("decisions happened") as f64;
            let last = stats.last_waiting as f64;
            assert_eq!(stats.reward_sum, first - last, "telescoping is exact in f64");
            assert_eq!(stats.decisions, 400);
        }
    }

    #[test]
    fn identical_seeds_reproduce_identical_runs() {
        let scenario = small_scenario(ql_spec(), 600);
        let a = run_single(&scenario, 9);
        let b = run_single(&scenario, 9);
        assert_eq!(a.records, b.records);
        assert_eq!(a.qtables, b.qtables);
        let c = run_single(&scenario, 10);
        assert_ne!(a.records, c.records, "different seed, different run");
    }

    #[test]
    fn fixed_controller_realizes_its_cycle() {
        let scenario = small_scenario(ControllerSpec::Fixed(FixedPolicyConfig::default()), 300);
        let mut run = Run::new(&scenario, 5);
        let mut green_starts = Vec::new();
        let mut last_phase = 0;
        while !run.finished() {
            run.tick();
            let sig = run.state.signals[0];
            if sig.green_phase != last_phase && !sig.in_yellow() {
                if sig.elapsed_green_s == 0 {
                    green_starts.push(run.state.clock_s);
                }
                last_phase = sig.green_phase;
            }
        }
        // 35s green + 2s yellow per half-cycle: starts at 37, 74, 111, ...
        assert_eq!(green_starts[0], 37);
        assert!(green_starts.windows(2).all(|w| w[1] - w[0] == 37));
    }

    #[test]
    fn freeze_halts_epsilon_alpha_and_tables() {
        let net = build_grid(1, 1, 150.0, 2).unwrap();
        let contexts = vec![Context::by_axis("c1", &net, 3, 3)];
        let scenario = Scenario {
            name: "freeze-check".into(),
            net,
            params: SimParams::default(),
            schedule: ContextSchedule::new(contexts, 10_000).unwrap(),
            insertion_mode: InsertionMode::Bernoulli,
            controller: ControllerSpec::QLearn(QLearnSpec {
                agent: AgentConfig::default(),
                observation: ObservationMode::Full,
                bins: 10,
                freeze_at_s: Some(200),
            }),
            horizon_s: 600,
        };
        let mut run = Run::new(&scenario, 2);
        while run.state.clock_s < 200 {
            run.tick();
        }
        let agent = &run.agents().unwrap()[0];
        assert!(!agent.is_frozen());
        assert!(agent.epsilon() > 0.0);
        run.tick();
        let agent = &run.agents().unwrap()[0];
        assert!(agent.is_frozen());
        assert_eq!(agent.epsilon(), 0.0);
        assert_eq!(agent.alpha(), 0.0);
        let table_at_freeze = agent.q().clone();
        while !run.finished() {
            run.tick();
        }
        assert_eq!(*run.agents().unwrap()[0].q(), table_at_freeze, "no learning after freeze");
    }

    #[test]
    fn ql_decisions_only_on_the_five_second_grid() {
        let scenario = small_scenario(ql_spec(), 103);
        let mut run = Run::new(&scenario, 4);
        run.run_to_completion();
        let stats = run.agent_stats().unwrap();
        // ticks 0, 5, ..., 100 -> 21 decisions
        assert!(stats.iter().all(|s| s.decisions == 21));
    }

    #[test]
    fn visited_state_count_stays_within_key_space() {
        let scenario = small_scenario(ql_spec(), 3_000);
        let output = run_single(&scenario, 8);
        // 2 phases * 11 elapsed bins * 10^4 attribute combinations
        let bound = 2 * 11 * 10u64.pow(4);
        for table in &output.qtables {
            assert!((table.len() as u64) < bound);
            assert!(!table.is_empty());
        }
    }

    #[test]
    fn execute_writes_runs_aggregate_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = preset("fixed-baseline").unwrap().remove(0);
        config.horizon_s = 120;
        config.n_runs = 3;
        config.dump_qtables = true;
        let artifacts = execute(&config, dir.path()).unwrap();
        assert_eq!(artifacts.run_csvs.len(), 3);
        for path in &artifacts.run_csvs {
            assert!(path.exists());
        }
        let agg = crate::metrics::read_aggregate_csv(&artifacts.aggregate_csv).unwrap();
        assert_eq!(agg.mean.len(), 120);
        assert_eq!(agg.n_runs, 3);
        let manifest = Manifest::from_json_file(&artifacts.manifest_path).unwrap();
        assert_eq!(manifest.seeds, vec![42, 43, 44]);
        assert_eq!(manifest.config, config);
        assert_eq!(manifest.files.runs.len(), 3);
        assert!(manifest.files.qtables.is_empty(), "fixed control has no tables");
        assert_eq!(manifest.provenance, format!("signalgrid-0.1.0+{}", &config.sha256()[..12]));
    }

    #[test]
    fn execute_is_deterministic_across_invocations() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let mut config = preset("freeze").unwrap().remove(0);
        config.horizon_s = 150;
        config.n_runs = 2;
        let a = execute(&config, dir_a.path()).unwrap();
        let b = execute(&config, dir_b.path()).unwrap();
        for (pa, pb) in a.run_csvs.iter().zip(&b.run_csvs) {
            assert_eq!(std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap(), "bitwise CSV equality");
        }
        assert_eq!(
            std::fs::read(&a.aggregate_csv).unwrap(),
            std::fs::read(&b.aggregate_csv).unwrap()
        );
        assert_eq!(
            std::fs::read(&a.manifest_path).unwrap(),
            std::fs::read(&b.manifest_path).unwrap()
        );
    }

    #[test]
    fn mask_compliance_fuzz() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(12345);
        let q = QTable::new();
        let state = DiscretizedState::new(0, 0, &[0, 0, 0, 0]);
        let mut checked = 0u64;
        for _ in 0..100_000 {
            let elapsed = rng.gen_range(0..70u32);
            let mask = action_mask(elapsed);
            let eps = rng.gen_range(0.0..=1.0);
            let action = crate::agents::select_action(&q, &state, mask, eps, &mut rng);
            assert!(mask.allows(action), "elapsed {elapsed} produced masked action");
            checked += 1;
        }
        assert_eq!(checked, 100_000);
    }
}
