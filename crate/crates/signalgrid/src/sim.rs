//! One-second microscopic traffic simulation.
//!
//! Vehicles follow a simplified deterministic car-following rule: each tick a
//! vehicle accelerates towards the speed limit but never moves past the rear
//! of its leader minus one slot length, past a red stop line, or into an
//! occupied downstream entry. Positions are front-bumper offsets from the
//! link start, and every lane stores its vehicles front-first, so ordering
//! and minimum spacing are structural invariants.
//!
//! Tick order: move vehicles under the current lights, accumulate waiting
//! time, advance signal timers, enqueue new demand, then drain the insertion
//! backlog onto entry links.

use std::collections::VecDeque;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::net::{GridNetwork, Link, LinkId, DEFAULT_MIN_GAP_M, DEFAULT_VEHICLE_LENGTH_M};

/// Shortest green a signal must hold before it may switch, seconds.
pub const MIN_GREEN_S: u32 = 10;
/// Longest green a signal may hold before it must switch, seconds.
pub const MAX_GREEN_S: u32 = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    pub vmax_mps: f64,
    pub accel_mps2: f64,
    pub decel_mps2: f64,
    pub vehicle_length_m: f64,
    pub min_gap_m: f64,
    /// Below this speed a vehicle counts as stopped and accrues waiting time.
    pub stop_speed_mps: f64,
    pub yellow_time_s: u32,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            vmax_mps: 13.89,
            accel_mps2: 2.6,
            decel_mps2: 4.5,
            vehicle_length_m: DEFAULT_VEHICLE_LENGTH_M,
            min_gap_m: DEFAULT_MIN_GAP_M,
            stop_speed_mps: 0.1,
            yellow_time_s: 2,
        }
    }
}

impl SimParams {
    /// Space one queued vehicle occupies: body plus standstill gap.
    pub fn slot_length_m(&self) -> f64 {
        self.vehicle_length_m + self.min_gap_m
    }
}

/// Signal command issued by a controller.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Keep,
    Change,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::Keep, Action::Change];

    pub fn index(self) -> usize {
        match self {
            Action::Keep => 0,
            Action::Change => 1,
        }
    }

    pub fn from_index(index: usize) -> Action {
        Action::ALL[index]
    }
}

/// Signal head color as seen by an approaching movement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Light {
    Green,
    Yellow,
    Red,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SignalState {
    pub green_phase: usize,
    /// Completed seconds of the current green. Reset when a new green starts.
    pub elapsed_green_s: u32,
    /// Seconds of yellow still to serve; zero when a phase holds green.
    pub yellow_remaining_s: u32,
    /// Phase that takes over once the yellow runs out.
    pub pending_phase: Option<usize>,
}

impl Default for SignalState {
    fn default() -> Self {
        Self::new()
    }
}

impl SignalState {
    pub fn new() -> SignalState {
        SignalState {
            green_phase: 0,
            elapsed_green_s: 0,
            yellow_remaining_s: 0,
            pending_phase: None,
        }
    }

    pub fn in_yellow(&self) -> bool {
        self.yellow_remaining_s > 0
    }

    /// Elapsed green used for control decisions; a clearing yellow counts as
    /// a fresh (zero-second) green so a switch can never be demanded mid-yellow.
    pub fn effective_elapsed_s(&self) -> u32 {
        if self.in_yellow() {
            0
        } else {
            self.elapsed_green_s
        }
    }

    /// Applies a controller command. Panics if the command is not permitted
    /// by the action mask for this signal; callers must mask first.
    pub fn apply_command(&mut self, cmd: Action, yellow_time_s: u32, phase_count: usize) {
        match cmd {
            Action::Keep => {
                assert!(
                    self.effective_elapsed_s() < MAX_GREEN_S,
                    "masked command: keep after {}s green (max {}s)",
                    self.elapsed_green_s,
                    MAX_GREEN_S
                );
            }
            Action::Change => {
                assert!(
                    self.effective_elapsed_s() >= MIN_GREEN_S,
                    "masked command: change after {}s green (min {}s, yellow {})",
                    self.elapsed_green_s,
                    MIN_GREEN_S,
                    self.in_yellow()
                );
                assert!(yellow_time_s > 0, "yellow time must be positive");
                self.yellow_remaining_s = yellow_time_s;
                self.pending_phase = Some((self.green_phase + 1) % phase_count);
            }
        }
    }

    fn advance_one_second(&mut self) {
        if self.yellow_remaining_s > 0 {
            self.yellow_remaining_s -= 1;
            if self.yellow_remaining_s == 0 {
                self.green_phase = self.pending_phase.take().expect("yellow had a pending phase");
                self.elapsed_green_s = 0;
            }
        } else {
            self.elapsed_green_s += 1;
        }
    }
}

#[derive(Clone, Debug)]
pub struct Vehicle {
    pub id: u64,
    /// Route index into the network's route table.
    pub route: usize,
    /// Which link of the route the vehicle is on.
    pub route_index: usize,
    pub lane: u8,
    /// Front bumper offset from the link start, meters.
    pub pos_m: f64,
    /// Distance covered during the last tick, m/s.
    pub speed_mps: f64,
    /// Seconds spent stopped on the current link.
    pub link_wait_s: u32,
    pub insert_time_s: u64,
    /// Tick stamp guarding against moving a vehicle twice in one tick after
    /// it crosses onto a link that has not been processed yet.
    moved_tick: u64,
}

#[derive(Clone, Debug)]
pub struct SimState {
    pub clock_s: u64,
    /// Per link, per lane, vehicles ordered front (largest pos) first.
    lanes: Vec<Vec<VecDeque<Vehicle>>>,
    /// One signal per intersection, indexed like `GridNetwork::intersections`.
    pub signals: Vec<SignalState>,
    /// Vehicles per route waiting off-network for a free entry slot.
    backlog: Vec<u64>,
    pub inserted: u64,
    pub arrived: u64,
    next_vehicle_id: u64,
    /// Demand sampling stream; owned by the state so concurrent runs never
    /// share generator state.
    pub insertion_rng: ChaCha8Rng,
}

impl SimState {
    pub fn new(net: &GridNetwork, insertion_rng: ChaCha8Rng) -> SimState {
        SimState {
            clock_s: 0,
            lanes: net
                .links()
                .iter()
                .map(|l| vec![VecDeque::new(); l.lanes as usize])
                .collect(),
            signals: vec![SignalState::new(); net.intersections().len()],
            backlog: vec![0; net.routes().len()],
            inserted: 0,
            arrived: 0,
            next_vehicle_id: 0,
            insertion_rng,
        }
    }

    /// Advances the simulation by one second. `insertions` lists the route
    /// index of every vehicle demanded during this second; vehicles that do
    /// not fit on their entry link queue up in the backlog.
    pub fn step(&mut self, net: &GridNetwork, params: &SimParams, insertions: &[usize]) {
        let tick = self.clock_s;
        self.move_vehicles(net, params, tick);
        self.accumulate_waiting(params);
        for sig in &mut self.signals {
            sig.advance_one_second();
        }
        for &route in insertions {
            self.backlog[route] += 1;
            self.inserted += 1;
        }
        self.drain_backlog(net, params, tick);
        self.clock_s += 1;
    }

    /// Applies a masked controller command to one intersection's signal.
    pub fn apply_signal_command(&mut self, intersection: usize, cmd: Action, net: &GridNetwork, params: &SimParams) {
        let phase_count = net.intersections()[intersection].phases.len();
        self.signals[intersection].apply_command(cmd, params.yellow_time_s, phase_count);
    }

    /// Light shown to vehicles leaving `link`. Boundary exits are always green.
    pub fn light_for(&self, net: &GridNetwork, link: &Link) -> Light {
        let Some(inter_idx) = net.intersection_at(link.to) else {
            return Light::Green;
        };
        let sig = &self.signals[inter_idx];
        let served = net.intersections()[inter_idx].phases[sig.green_phase].served_axis;
        if sig.in_yellow() {
            if served == link.axis {
                Light::Yellow
            } else {
                Light::Red
            }
        } else if served == link.axis {
            Light::Green
        } else {
            Light::Red
        }
    }

    fn move_vehicles(&mut self, net: &GridNetwork, params: &SimParams, tick: u64) {
        let slot = params.slot_length_m();
        for link_idx in 0..net.links().len() {
            for lane in 0..self.lanes[link_idx].len() {
                let mut follower_start = 0;
                let mut leader_old_front: Option<f64> = None;
                if let Some(front) = self.lanes[link_idx][lane].front() {
                    if front.moved_tick == tick {
                        // landed here earlier this tick; it is this lane's leader
                        leader_old_front = Some(front.pos_m);
                        follower_start = 1;
                    } else {
                        let veh = self.lanes[link_idx][lane].pop_front().unwrap();
                        leader_old_front = Some(veh.pos_m);
                        if self.advance_front(veh, link_idx, lane, net, params, tick) {
                            follower_start = 1;
                        }
                    }
                }
                let queue = &mut self.lanes[link_idx][lane];
                for idx in follower_start..queue.len() {
                    let veh = &mut queue[idx];
                    if veh.moved_tick == tick {
                        leader_old_front = Some(veh.pos_m);
                        continue;
                    }
                    let lead = leader_old_front.expect("follower has a leader");
                    let old_pos = veh.pos_m;
                    let gap = (lead - slot - veh.pos_m).max(0.0);
                    let v_new = (veh.speed_mps + params.accel_mps2).min(params.vmax_mps).min(gap);
                    veh.pos_m += v_new;
                    veh.speed_mps = v_new;
                    veh.moved_tick = tick;
                    leader_old_front = Some(old_pos);
                }
            }
        }
    }

    /// Moves the lane's lead vehicle, possibly across the intersection or off
    /// the network. Returns true if the vehicle stayed on this lane.
    fn advance_front(
        &mut self,
        mut veh: Vehicle,
        link_idx: usize,
        lane: usize,
        net: &GridNetwork,
        params: &SimParams,
        tick: u64,
    ) -> bool {
        let link = &net.links()[link_idx];
        let route = &net.routes()[veh.route];
        let remaining = (link.length_m - veh.pos_m).max(0.0);
        let v_cap = (veh.speed_mps + params.accel_mps2).min(params.vmax_mps);
        let last_link = veh.route_index + 1 == route.links.len();

        if last_link {
            // boundary exit: unsignalized, nothing downstream to block
            if veh.pos_m + v_cap >= link.length_m {
                self.arrived += 1;
                return false;
            }
            veh.pos_m += v_cap;
            veh.speed_mps = v_cap;
            veh.moved_tick = tick;
            self.lanes[link_idx][lane].push_front(veh);
            return true;
        }

        let entry = if self.light_for(net, link) == Light::Green {
            let next_link = route.links[veh.route_index + 1];
            self.free_entry_lane(net, next_link, params)
        } else {
            None
        };

        match entry {
            Some((target_lane, headroom)) => {
                let next_link = route.links[veh.route_index + 1];
                let v_new = v_cap.min(remaining + headroom);
                if veh.pos_m + v_new >= link.length_m {
                    veh.route_index += 1;
                    veh.lane = target_lane as u8;
                    veh.pos_m = (veh.pos_m + v_new - link.length_m).max(0.0);
                    veh.speed_mps = v_new;
                    veh.link_wait_s = 0;
                    veh.moved_tick = tick;
                    self.lanes[next_link.index()][target_lane].push_back(veh);
                    false
                } else {
                    veh.pos_m += v_new;
                    veh.speed_mps = v_new;
                    veh.moved_tick = tick;
                    self.lanes[link_idx][lane].push_front(veh);
                    true
                }
            }
            None => {
                // hold at the stop line (red or yellow) or behind a full entry
                let v_new = v_cap.min(remaining);
                veh.pos_m += v_new;
                veh.speed_mps = v_new;
                veh.moved_tick = tick;
                self.lanes[link_idx][lane].push_front(veh);
                true
            }
        }
    }

    /// Picks the emptier lane of `link` whose first slot is clear, returning
    /// the lane and how far a vehicle may roll in behind its rearmost
    /// occupant. Ties go to the lower lane index.
    fn free_entry_lane(&self, net: &GridNetwork, link: LinkId, params: &SimParams) -> Option<(usize, f64)> {
        let length = net.link(link).length_m;
        // entry slot is free only when no part of a vehicle sits in it;
        // anything weaker lets a lane exceed its slot capacity
        let clear = params.slot_length_m() + params.vehicle_length_m;
        let mut best: Option<(usize, usize, f64)> = None;
        for (lane, queue) in self.lanes[link.index()].iter().enumerate() {
            let headroom = match queue.back() {
                Some(rear) => {
                    if rear.pos_m < clear {
                        continue;
                    }
                    rear.pos_m - params.slot_length_m()
                }
                None => length,
            };
            let better = match best {
                Some((_, count, _)) => queue.len() < count,
                None => true,
            };
            if better {
                best = Some((lane, queue.len(), headroom));
            }
        }
        best.map(|(lane, _, headroom)| (lane, headroom))
    }

    fn accumulate_waiting(&mut self, params: &SimParams) {
        for lanes in &mut self.lanes {
            for queue in lanes {
                for veh in queue {
                    if veh.speed_mps < params.stop_speed_mps {
                        veh.link_wait_s += 1;
                    }
                }
            }
        }
    }

    fn drain_backlog(&mut self, net: &GridNetwork, params: &SimParams, tick: u64) {
        for route_idx in 0..net.routes().len() {
            while self.backlog[route_idx] > 0 {
                let entry_link = net.routes()[route_idx].links[0];
                let Some((lane, _)) = self.free_entry_lane(net, entry_link, params) else {
                    break;
                };
                self.backlog[route_idx] -= 1;
                let veh = Vehicle {
                    id: self.next_vehicle_id,
                    route: route_idx,
                    route_index: 0,
                    lane: lane as u8,
                    pos_m: 0.0,
                    speed_mps: 0.0,
                    link_wait_s: 0,
                    insert_time_s: tick,
                    moved_tick: tick,
                };
                self.next_vehicle_id += 1;
                self.lanes[entry_link.index()][lane].push_back(veh);
            }
        }
    }

    /// (vehicle count, stopped count) over the movements of one phase.
    pub fn movement_counts(
        &self,
        net: &GridNetwork,
        intersection: usize,
        phase: usize,
        params: &SimParams,
    ) -> (u32, u32) {
        let mut count = 0;
        let mut queued = 0;
        for &(link, lane) in &net.intersections()[intersection].phases[phase].movements {
            for veh in &self.lanes[link.index()][lane as usize] {
                count += 1;
                if veh.speed_mps < params.stop_speed_mps {
                    queued += 1;
                }
            }
        }
        (count, queued)
    }

    /// Accumulated waiting seconds of all vehicles on the intersection's
    /// incoming links.
    pub fn intersection_waiting_time(&self, net: &GridNetwork, intersection: usize) -> u64 {
        net.intersections()[intersection]
            .incoming
            .iter()
            .flat_map(|link| &self.lanes[link.index()])
            .flatten()
            .map(|veh| veh.link_wait_s as u64)
            .sum()
    }

    pub fn vehicles(&self) -> impl Iterator<Item = &Vehicle> {
        self.lanes.iter().flatten().flatten()
    }

    pub fn lane(&self, link: LinkId, lane: usize) -> &VecDeque<Vehicle> {
        &self.lanes[link.index()][lane]
    }

    pub fn active_count(&self) -> u64 {
        self.lanes.iter().flatten().map(|q| q.len() as u64).sum()
    }

    pub fn backlog_total(&self) -> u64 {
        self.backlog.iter().sum()
    }

    pub fn backlog_for(&self, route: usize) -> u64 {
        self.backlog[route]
    }

    /// Places a vehicle directly on a lane, keeping the lane sorted. Intended
    /// for constructing test and demo scenarios; panics if the position would
    /// violate minimum spacing against either neighbor.
    pub fn place_vehicle(
        &mut self,
        net: &GridNetwork,
        route: usize,
        route_index: usize,
        lane: usize,
        pos_m: f64,
        speed_mps: f64,
    ) -> u64 {
        let link = net.routes()[route].links[route_index];
        assert!(pos_m >= 0.0 && pos_m <= net.link(link).length_m);
        let slot = SimParams::default().slot_length_m();
        let queue = &mut self.lanes[link.index()][lane];
        let insert_at = queue.iter().position(|v| v.pos_m < pos_m).unwrap_or(queue.len());
        if insert_at > 0 {
            assert!(queue[insert_at - 1].pos_m - pos_m >= slot, "too close to leader");
        }
        if insert_at < queue.len() {
            assert!(pos_m - queue[insert_at].pos_m >= slot, "too close to follower");
        }
        let id = self.next_vehicle_id;
        self.next_vehicle_id += 1;
        queue.insert(
            insert_at,
            Vehicle {
                id,
                route,
                route_index,
                lane: lane as u8,
                pos_m,
                speed_mps,
                link_wait_s: 0,
                insert_time_s: self.clock_s,
                moved_tick: u64::MAX,
            },
        );
        self.inserted += 1;
        id
    }
}

/// Panics if any structural simulation invariant is broken. Used by tests
/// and the acceptance suite after every step of a checked run.
pub fn check_invariants(state: &SimState, net: &GridNetwork, params: &SimParams) {
    const EPS: f64 = 1e-9;
    assert_eq!(
        state.inserted,
        state.active_count() + state.arrived + state.backlog_total(),
        "vehicle conservation"
    );
    let slot = params.slot_length_m();
    for link in net.links() {
        for lane in 0..link.lanes as usize {
            let queue = state.lane(link.id, lane);
            for veh in queue {
                assert!(veh.pos_m >= -EPS && veh.pos_m <= link.length_m + EPS, "vehicle on link");
                assert!(veh.speed_mps >= 0.0, "no reversing");
            }
            for pair in queue.iter().zip(queue.iter().skip(1)) {
                assert!(
                    pair.0.pos_m - pair.1.pos_m >= slot - EPS,
                    "minimum spacing on link {:?} lane {lane}: {} then {}",
                    link.id,
                    pair.0.pos_m,
                    pair.1.pos_m
                );
            }
        }
    }
    for sig in &state.signals {
        assert!(sig.yellow_remaining_s <= params.yellow_time_s);
        assert_eq!(sig.in_yellow(), sig.pending_phase.is_some());
    }
}
