//! Independent tabular Q-learning agents and the fixed-time baseline.
//!
//! Every intersection gets its own agent: its own Q-table, exploration
//! state, and random stream. Agents never observe each other, so from one
//! agent's perspective the rest of the grid is part of the environment.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{ActionMask, DiscretizedState};
use crate::sim::{Action, SignalState, MAX_GREEN_S, MIN_GREEN_S};

/// Action-value table over discretized states. Missing states read as all
/// zeros, so the table only stores visited states.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QTable {
    entries: HashMap<DiscretizedState, [f64; 2]>,
}

impl QTable {
    pub fn new() -> QTable {
        QTable::default()
    }

    pub fn values(&self, state: &DiscretizedState) -> [f64; 2] {
        self.entries.get(state).copied().unwrap_or([0.0; 2])
    }

    pub fn values_mut(&mut self, state: DiscretizedState) -> &mut [f64; 2] {
        self.entries.entry(state).or_insert([0.0; 2])
    }

    /// Number of states visited so far.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter_sorted(&self) -> Vec<(&DiscretizedState, &[f64; 2])> {
        let mut rows: Vec<_> = self.entries.iter().collect();
        rows.sort_by_key(|(s, _)| *s);
        rows
    }

    /// Writes one line per state: the key integers, then the action values
    /// for keep and change. Lines are sorted so dumps diff cleanly.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (state, values) in self.iter_sorted() {
            let key: Vec<String> = state.key_ints().iter().map(|k| k.to_string()).collect();
            writeln!(w, "{} {} {}", key.join(" "), values[0], values[1])?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> io::Result<QTable> {
        let bad = |line: usize, what: &str| {
            io::Error::new(io::ErrorKind::InvalidData, format!("q-table line {}: {}", line + 1, what))
        };
        let mut table = QTable::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < 4 {
                return Err(bad(idx, "expected key ints and two action values"));
            }
            let (key, vals) = fields.split_at(fields.len() - 2);
            let ints: Vec<u8> = key
                .iter()
                .map(|f| f.parse())
                .collect::<Result<_, _>>()
                .map_err(|_| bad(idx, "bad key integer"))?;
            let state = DiscretizedState::from_key_ints(&ints).ok_or_else(|| bad(idx, "bad key shape"))?;
            let keep = vals[0].parse().map_err(|_| bad(idx, "bad value"))?;
            let change = vals[1].parse().map_err(|_| bad(idx, "bad value"))?;
            table.entries.insert(state, [keep, change]);
        }
        Ok(table)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonSchedule {
    /// Multiplied by `factor` after every action, never below `floor`.
    Decaying { start: f64, factor: f64, floor: f64 },
    Fixed { value: f64 },
    Zero,
}

impl EpsilonSchedule {
    pub fn initial(&self) -> f64 {
        match *self {
            EpsilonSchedule::Decaying { start, .. } => start,
            EpsilonSchedule::Fixed { value } => value,
            EpsilonSchedule::Zero => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: EpsilonSchedule,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            alpha: 0.1,
            gamma: 0.99,
            epsilon: EpsilonSchedule::Decaying {
                start: 1.0,
                factor: 0.9985,
                floor: 0.0,
            },
        }
    }
}

/// Epsilon-greedy choice restricted to the masked actions. Exploitation
/// breaks ties towards the lower action index (keep before change); a zero
/// epsilon never draws from the generator, so frozen agents are pure
/// functions of their table.
pub fn select_action(
    q: &QTable,
    state: &DiscretizedState,
    mask: ActionMask,
    epsilon: f64,
    rng: &mut impl Rng,
) -> Action {
    let mut allowed = [Action::Keep; 2];
    let mut n = 0;
    for action in Action::ALL {
        if mask.allows(action) {
            allowed[n] = action;
            n += 1;
        }
    }
    assert!(n > 0, "action mask permits nothing");
    if epsilon > 0.0 && rng.gen_bool(epsilon) {
        return allowed[rng.gen_range(0..n)];
    }
    let values = q.values(state);
    let mut best = allowed[0];
    for &action in &allowed[1..n] {
        if values[action.index()] > values[best.index()] {
            best = action;
        }
    }
    best
}

/// One-step Q-learning update. The bootstrap maximizes over both actions;
/// masking only constrains what is executed, not what is valued.
pub fn q_update(
    q: &mut QTable,
    state: DiscretizedState,
    action: Action,
    reward: f64,
    next_state: DiscretizedState,
    alpha: f64,
    gamma: f64,
) {
    let next_best = q.values(&next_state).into_iter().fold(f64::NEG_INFINITY, f64::max);
    let entry = q.values_mut(state);
    let old = entry[action.index()];
    entry[action.index()] = old + alpha * (reward + gamma * next_best - old);
}

/// A tabular controller for one intersection.
#[derive(Clone, Debug)]
pub struct QLearningAgent {
    config: AgentConfig,
    q: QTable,
    epsilon: f64,
    frozen: bool,
    rng: ChaCha8Rng,
}

impl QLearningAgent {
    pub fn new(config: AgentConfig, rng: ChaCha8Rng) -> QLearningAgent {
        QLearningAgent {
            epsilon: config.epsilon.initial(),
            config,
            q: QTable::new(),
            frozen: false,
            rng,
        }
    }

    pub fn select_action(&mut self, state: &DiscretizedState, mask: ActionMask) -> Action {
        let epsilon = if self.frozen { 0.0 } else { self.epsilon };
        let action = select_action(&self.q, state, mask, epsilon, &mut self.rng);
        if !self.frozen {
            if let EpsilonSchedule::Decaying { factor, floor, .. } = self.config.epsilon {
                self.epsilon = (self.epsilon * factor).max(floor);
            }
        }
        action
    }

    pub fn update(&mut self, state: DiscretizedState, action: Action, reward: f64, next_state: DiscretizedState) {
        if self.frozen {
            return;
        }
        q_update(&mut self.q, state, action, reward, next_state, self.config.alpha, self.config.gamma);
    }

    /// Stops all learning and exploration: the policy becomes a fixed greedy
    /// function of the current table.
    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn epsilon(&self) -> f64 {
        if self.frozen {
            0.0
        } else {
            self.epsilon
        }
    }

    pub fn alpha(&self) -> f64 {
        if self.frozen {
            0.0
        } else {
            self.config.alpha
        }
    }

    pub fn q(&self) -> &QTable {
        &self.q
    }

    pub fn q_mut(&mut self) -> &mut QTable {
        &mut self.q
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPolicyConfig {
    pub green_time_s: u32,
}

impl Default for FixedPolicyConfig {
    fn default() -> Self {
        FixedPolicyConfig { green_time_s: 35 }
    }
}

impl FixedPolicyConfig {
    /// The configured green must satisfy the same bounds the mask enforces.
    pub fn validate(&self) -> Result<(), String> {
        if self.green_time_s < MIN_GREEN_S || self.green_time_s > MAX_GREEN_S {
            return Err(format!(
                "fixed green must lie in [{MIN_GREEN_S}, {MAX_GREEN_S}] seconds, got {}",
                self.green_time_s
            ));
        }
        Ok(())
    }
}

/// Fixed-time control: change exactly when the configured green has run out.
/// Evaluated every second so greens are not quantized to the decision grid.
pub fn fixed_policy_decide(sig: &SignalState, config: &FixedPolicyConfig) -> Action {
    if !sig.in_yellow() && sig.elapsed_green_s >= config.green_time_s {
        Action::Change
    } else {
        Action::Keep
    }
}
