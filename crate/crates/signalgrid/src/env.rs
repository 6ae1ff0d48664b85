//! Agent-facing view of an intersection: observations, discretization,
//! action masking, and the waiting-time reward.

use serde::{Deserialize, Serialize};

use crate::net::GridNetwork;
use crate::sim::{SignalState, SimParams, SimState, MAX_GREEN_S, MIN_GREEN_S};

/// Agents issue one command per decision interval; the simulation keeps
/// running at one-second ticks in between.
pub const DECISION_INTERVAL_S: u64 = 5;

/// Width of one elapsed-green bin, seconds.
pub const ELAPSED_BIN_S: u32 = 5;
/// Elapsed green saturates at this bin index.
pub const MAX_ELAPSED_BIN: u8 = 10;

/// Most per-phase attributes a state can carry: two phases with density and
/// queue each under full observability.
pub const MAX_STATE_ATTRS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationMode {
    /// Phase, elapsed green, and per-phase density and queue ratios.
    Full,
    /// Phase, elapsed green, and per-phase queue ratios only.
    Partial,
}

/// Continuous snapshot of one intersection at decision time. Attribute
/// layout depends on the mode: full interleaves `[density_i, queue_i]` per
/// phase, partial keeps only `[queue_i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub phase: usize,
    pub elapsed_green_s: u32,
    pub mode: ObservationMode,
    attrs: Vec<f64>,
}

impl Observation {
    /// Builds an observation from raw attribute values, each in [0, 1].
    pub fn new(phase: usize, elapsed_green_s: u32, mode: ObservationMode, attrs: Vec<f64>) -> Observation {
        Observation {
            phase,
            elapsed_green_s,
            mode,
            attrs,
        }
    }

    pub fn attributes(&self) -> &[f64] {
        &self.attrs
    }

    /// Total state dimension: phase, elapsed green, and the attributes.
    pub fn dimension(&self) -> usize {
        2 + self.attrs.len()
    }

    pub fn density(&self, phase: usize) -> Option<f64> {
        match self.mode {
            ObservationMode::Full => Some(self.attrs[phase * 2]),
            ObservationMode::Partial => None,
        }
    }

    pub fn queue(&self, phase: usize) -> f64 {
        match self.mode {
            ObservationMode::Full => self.attrs[phase * 2 + 1],
            ObservationMode::Partial => self.attrs[phase],
        }
    }
}

/// Reads the sensors of one intersection. Density is vehicles over phase
/// capacity, queue is stopped vehicles over phase capacity, both clamped to
/// [0, 1]; partial mode drops the density sensors.
pub fn observe(
    state: &SimState,
    net: &GridNetwork,
    intersection: usize,
    mode: ObservationMode,
    params: &SimParams,
) -> Observation {
    let sig = &state.signals[intersection];
    let inter = &net.intersections()[intersection];
    let mut attrs = Vec::with_capacity(inter.phases.len() * 2);
    for phase in 0..inter.phases.len() {
        let (count, queued) = state.movement_counts(net, intersection, phase, params);
        let capacity = inter.phase_capacity(net, phase).max(1) as f64;
        let density = (count as f64 / capacity).clamp(0.0, 1.0);
        let queue = (queued as f64 / capacity).clamp(0.0, 1.0);
        if mode == ObservationMode::Full {
            attrs.push(density);
        }
        attrs.push(queue);
    }
    Observation {
        phase: sig.green_phase,
        elapsed_green_s: sig.effective_elapsed_s(),
        mode,
        attrs,
    }
}

/// Tabular state key. Attributes are stored inline so the key is `Copy` and
/// cheap to hash; `attr_count` marks how many slots are in use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiscretizedState {
    pub phase: u8,
    pub elapsed_bin: u8,
    attrs: [u8; MAX_STATE_ATTRS],
    attr_count: u8,
}

impl DiscretizedState {
    pub fn new(phase: u8, elapsed_bin: u8, attrs: &[u8]) -> DiscretizedState {
        assert!(attrs.len() <= MAX_STATE_ATTRS);
        let mut buf = [0u8; MAX_STATE_ATTRS];
        buf[..attrs.len()].copy_from_slice(attrs);
        DiscretizedState {
            phase,
            elapsed_bin,
            attrs: buf,
            attr_count: attrs.len() as u8,
        }
    }

    pub fn attrs(&self) -> &[u8] {
        &self.attrs[..self.attr_count as usize]
    }

    /// Key components in a stable order, for text serialization.
    pub fn key_ints(&self) -> Vec<u8> {
        let mut out = vec![self.phase, self.elapsed_bin];
        out.extend_from_slice(self.attrs());
        out
    }

    pub fn from_key_ints(ints: &[u8]) -> Option<DiscretizedState> {
        if ints.len() < 2 || ints.len() - 2 > MAX_STATE_ATTRS {
            return None;
        }
        Some(DiscretizedState::new(ints[0], ints[1], &ints[2..]))
    }
}

/// Bins an observation: elapsed green in 5 s buckets capped at bin 10, each
/// unit-interval attribute into `bins` equal buckets with 1.0 folded into
/// the top one.
pub fn discretize(obs: &Observation, bins: u32) -> DiscretizedState {
    assert!(bins >= 1 && bins <= u8::MAX as u32, "bins must fit u8");
    let elapsed_bin = ((obs.elapsed_green_s / ELAPSED_BIN_S) as u8).min(MAX_ELAPSED_BIN);
    let attrs: Vec<u8> = obs
        .attributes()
        .iter()
        .map(|&v| ((v * bins as f64).floor() as u32).min(bins - 1) as u8)
        .collect();
    DiscretizedState::new(obs.phase as u8, elapsed_bin, &attrs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ActionMask {
    pub keep_allowed: bool,
    pub change_allowed: bool,
}

impl ActionMask {
    pub fn allows(&self, action: crate::sim::Action) -> bool {
        match action {
            crate::sim::Action::Keep => self.keep_allowed,
            crate::sim::Action::Change => self.change_allowed,
        }
    }
}

/// Legal commands for a green that has run `elapsed_green_s`: no change
/// before the minimum green, no keep at or past the maximum.
pub fn action_mask(elapsed_green_s: u32) -> ActionMask {
    ActionMask {
        keep_allowed: elapsed_green_s < MAX_GREEN_S,
        change_allowed: elapsed_green_s >= MIN_GREEN_S,
    }
}

/// Mask for a live signal; a clearing yellow counts as zero elapsed green.
pub fn mask_for_signal(sig: &SignalState) -> ActionMask {
    action_mask(sig.effective_elapsed_s())
}

/// One-step reward: the drop in accumulated waiting around the intersection.
/// Positive when waiting went down.
pub fn reward(w_before: u64, w_after: u64) -> f64 {
    w_before as f64 - w_after as f64
}
