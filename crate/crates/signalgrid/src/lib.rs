//! Grid-traffic microsimulation with adaptive traffic signal control.
//!
//! The crate simulates a rectangular grid of one-way arterials at one-second
//! resolution and drives every signalized intersection with either a fixed
//! timing plan or an independent tabular Q-learning agent. Traffic demand is
//! organized into contexts (origin-destination flow assignments) that switch
//! on a fixed period, so controllers face a non-stationary environment.
//!
//! The primary interface is the `examples/` directory; each example is a
//! runnable demonstration of one capability:
//!
//! * `build_network` - grid construction, routes, capacities
//! * `fixed_policy` - fixed-time baseline control
//! * `train_qlearning` - Q-learning from scratch on one run
//! * `freeze_after_switch` - what happens when learning stops before the
//!   demand pattern changes
//! * `observability_comparison` - full vs queue-only state sensing
//! * `discretization_comparison` - coarse vs fine state binning
//! * `context_schedule` - demand contexts, switch schedule, insertion rates
//! * `qtable_export` - dumping a learned Q-table as text
//! * `render_chart` - plotting aggregate waiting-time curves to SVG
//!
//! A thin `signalgrid` binary wraps the experiment presets (`run`) and the
//! SVG chart renderer (`plot`) for use from shell scripts.

pub mod agents;
pub mod config;
pub mod contexts;
pub mod env;
pub mod metrics;
pub mod net;
pub mod plot;
pub mod runner;
pub mod sim;

pub use agents::{AgentConfig, EpsilonSchedule, FixedPolicyConfig, QLearningAgent, QTable};
pub use config::{ControllerConfig, ScenarioConfig};
pub use contexts::{Context, ContextSchedule, InsertionMode, OdFlow};
pub use env::{ActionMask, DiscretizedState, Observation, ObservationMode};
pub use net::{Axis, GridNetwork, LinkId, NodeId};
pub use runner::{Run, Scenario};
pub use sim::{Action, SimParams, SimState};
