//! Property tests for the pure pieces: discretization, masking, action
//! selection, the moving average, grid construction, table serialization,
//! and the structural invariants of randomly driven simulations.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use signalgrid::agents::{select_action, QTable};
use signalgrid::env::{
    action_mask, discretize, DiscretizedState, Observation, ObservationMode, MAX_ELAPSED_BIN,
    MAX_STATE_ATTRS,
};
use signalgrid::metrics::moving_average;
use signalgrid::net::build_grid;
use signalgrid::sim::{check_invariants, Action, SimParams, SimState, MAX_GREEN_S, MIN_GREEN_S};

fn obs(phase: usize, elapsed: u32, attrs: Vec<f64>) -> Observation {
    Observation::new(phase, elapsed, ObservationMode::Partial, attrs)
}

proptest! {
    /// Each attribute bin b must satisfy b/bins <= v < (b+1)/bins, except
    /// that v = 1.0 folds into the top bin.
    #[test]
    fn discretize_bins_bracket_the_value(
        attrs in proptest::collection::vec(0.0_f64..=1.0, 1..=MAX_STATE_ATTRS),
        bins in 1u32..=255,
        phase in 0usize..2,
        elapsed in 0u32..200,
    ) {
        let state = discretize(&obs(phase, elapsed, attrs.clone()), bins);
        prop_assert_eq!(state.attrs().len(), attrs.len());
        prop_assert_eq!(state.phase, phase as u8);
        prop_assert!(state.elapsed_bin <= MAX_ELAPSED_BIN);
        for (&b, &v) in state.attrs().iter().zip(&attrs) {
            prop_assert!((b as u32) < bins);
            let lo = b as f64 / bins as f64;
            let hi = (b + 1) as f64 / bins as f64;
            // floor(v * bins) can land one bin low when v * bins sits just
            // under an integer, so the lower bracket gets float slack
            prop_assert!(v >= lo - 1e-9, "bin {b} too high for {v} with {bins} bins");
            prop_assert!(v < hi + 1e-9 || b as u32 == bins - 1, "bin {b} too low for {v}");
        }
    }

    /// Binning is monotone: a larger reading never lands in a lower bin.
    #[test]
    fn discretize_is_monotone(
        a in 0.0_f64..=1.0,
        b in 0.0_f64..=1.0,
        bins in 1u32..=255,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let s_lo = discretize(&obs(0, 0, vec![lo]), bins);
        let s_hi = discretize(&obs(0, 0, vec![hi]), bins);
        prop_assert!(s_lo.attrs()[0] <= s_hi.attrs()[0]);
    }

    /// The mask never strands a signal without a legal action, and its two
    /// sides track the green-time bounds exactly.
    #[test]
    fn action_mask_always_permits_something(elapsed in 0u32..10_000) {
        let mask = action_mask(elapsed);
        prop_assert!(mask.keep_allowed || mask.change_allowed);
        prop_assert_eq!(mask.keep_allowed, elapsed < MAX_GREEN_S);
        prop_assert_eq!(mask.change_allowed, elapsed >= MIN_GREEN_S);
    }

    /// Whatever the table holds and however epsilon falls, the selected
    /// action is one the mask allows.
    #[test]
    fn select_action_respects_the_mask(
        q_keep in -1e6_f64..1e6,
        q_change in -1e6_f64..1e6,
        epsilon in 0.0_f64..1.0,
        elapsed in 0u32..80,
        seed in any::<u64>(),
    ) {
        let state = DiscretizedState::new(0, 0, &[1, 2]);
        let mut q = QTable::new();
        *q.values_mut(state) = [q_keep, q_change];
        let mask = action_mask(elapsed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let action = select_action(&q, &state, mask, epsilon, &mut rng);
        prop_assert!(mask.allows(action));
    }

    /// Greedy selection picks the argmax when both actions are legal and the
    /// values are distinct.
    #[test]
    fn select_action_greedy_picks_argmax(
        q_keep in -1e6_f64..1e6,
        q_change in -1e6_f64..1e6,
        seed in any::<u64>(),
    ) {
        prop_assume!(q_keep != q_change);
        let state = DiscretizedState::new(1, 3, &[0]);
        let mut q = QTable::new();
        *q.values_mut(state) = [q_keep, q_change];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let action = select_action(&q, &state, action_mask(MIN_GREEN_S), 0.0, &mut rng);
        let expect = if q_keep > q_change { Action::Keep } else { Action::Change };
        prop_assert_eq!(action, expect);
    }

    /// Smoothing preserves length, stays inside the data's range, and with
    /// window 1 is the identity.
    #[test]
    fn moving_average_stays_in_range(
        values in proptest::collection::vec(-1e9_f64..1e9, 1..400),
        window in 1usize..40,
    ) {
        let out = moving_average(&values, window);
        prop_assert_eq!(out.len(), values.len());
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for &v in &out {
            prop_assert!(v >= lo - 1e-6 && v <= hi + 1e-6);
        }
        if window == 1 {
            prop_assert_eq!(out, values);
        }
    }

    /// Node, link, intersection, and route counts follow the grid dimensions.
    #[test]
    fn grid_counts_match_dimensions(rows in 1u32..=6, cols in 1u32..=6) {
        let net = build_grid(rows, cols, 150.0, 2).unwrap();
        prop_assert_eq!(net.nodes().len() as u32, rows * cols + 2 * (rows + cols));
        prop_assert_eq!(net.intersections().len() as u32, rows * cols);
        prop_assert_eq!(net.links().len() as u32, rows * (cols + 1) + cols * (rows + 1));
        prop_assert_eq!(net.routes().len() as u32, rows + cols);
        for route in net.routes() {
            let expect = match route.axis {
                signalgrid::net::Axis::WestEast => cols + 1,
                signalgrid::net::Axis::NorthSouth => rows + 1,
            };
            prop_assert_eq!(route.links.len() as u32, expect);
        }
    }

    /// A text dump parses back to the identical table; f64 Display output
    /// round-trips exactly.
    #[test]
    fn qtable_text_round_trips(
        entries in proptest::collection::vec(
            (0u8..2, 0u8..=10, proptest::collection::vec(0u8..10, 1..=4), -1e4_f64..1e4, -1e4_f64..1e4),
            0..40,
        ),
    ) {
        let mut q = QTable::new();
        for (phase, elapsed, attrs, keep, change) in &entries {
            *q.values_mut(DiscretizedState::new(*phase, *elapsed, attrs)) = [*keep, *change];
        }
        let mut buf = Vec::new();
        q.write_text(&mut buf).unwrap();
        let back = QTable::read_text(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), q.len());
        for (state, values) in q.iter_sorted() {
            prop_assert_eq!(back.values(state), *values);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Structural invariants hold at every tick of a randomly driven run:
    /// vehicle conservation, spacing, on-link positions, signal sanity.
    #[test]
    fn random_runs_keep_invariants(
        seed in any::<u64>(),
        demand in proptest::collection::vec(proptest::collection::vec(0usize..4, 0..4), 1..150),
        commands in proptest::collection::vec(any::<bool>(), 1..150),
    ) {
        let net = build_grid(2, 2, 150.0, 2).unwrap();
        let params = SimParams::default();
        let mut state = SimState::new(&net, ChaCha8Rng::seed_from_u64(seed));
        for (tick, routes) in demand.iter().enumerate() {
            state.step(&net, &params, routes);
            for inter in 0..net.intersections().len() {
                let sig = &state.signals[inter];
                let mask = signalgrid::env::mask_for_signal(sig);
                let want_change = commands[tick % commands.len()];
                let cmd = if want_change && mask.change_allowed {
                    Action::Change
                } else if mask.keep_allowed {
                    Action::Keep
                } else {
                    Action::Change
                };
                state.apply_signal_command(inter, cmd, &net, &params);
            }
            check_invariants(&state, &net, &params);
        }
    }
}
