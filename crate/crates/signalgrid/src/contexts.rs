//! Demand contexts: per-route insertion flows and the schedule that rotates
//! through them, making the control problem non-stationary.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::net::{Axis, GridNetwork};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ContextError {
    #[error("context '{context}' must cover every route exactly once; route {route} appears {count} times")]
    BadCoverage { context: String, route: usize, count: usize },
    #[error("insertion period must be at least one second")]
    ZeroPeriod,
    #[error("a schedule needs at least one context")]
    Empty,
}

/// Demand for one route: one vehicle every `period_s` seconds on average.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OdFlow {
    pub route: usize,
    pub period_s: u32,
}

/// A complete origin-destination flow assignment, one flow per route.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Context {
    pub name: String,
    pub flows: Vec<OdFlow>,
}

impl Context {
    /// Builds a context that assigns one period to every route on the given
    /// axis and another to the rest.
    pub fn by_axis(name: &str, net: &GridNetwork, ns_period_s: u32, we_period_s: u32) -> Context {
        let flows = net
            .routes()
            .iter()
            .enumerate()
            .map(|(route, r)| OdFlow {
                route,
                period_s: match r.axis {
                    Axis::NorthSouth => ns_period_s,
                    Axis::WestEast => we_period_s,
                },
            })
            .collect();
        Context {
            name: name.to_string(),
            flows,
        }
    }

    pub fn validate(&self, net: &GridNetwork) -> Result<(), ContextError> {
        for route in 0..net.routes().len() {
            let count = self.flows.iter().filter(|f| f.route == route).count();
            if count != 1 {
                return Err(ContextError::BadCoverage {
                    context: self.name.clone(),
                    route,
                    count,
                });
            }
        }
        if self.flows.iter().any(|f| f.period_s == 0) {
            return Err(ContextError::ZeroPeriod);
        }
        Ok(())
    }

    /// Expected insertions per second across all flows, as an exact reduced
    /// fraction (numerator, denominator).
    pub fn expected_rate_exact(&self) -> (u64, u64) {
        let mut num = 0u64;
        let mut den = 1u64;
        for flow in &self.flows {
            let p = flow.period_s as u64;
            // num/den + 1/p
            num = num * p + den;
            den *= p;
            let g = gcd(num, den);
            num /= g;
            den /= g;
        }
        (num, den)
    }

    pub fn expected_rate_per_s(&self) -> f64 {
        let (num, den) = self.expected_rate_exact();
        num as f64 / den as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// How per-second insertion demand is sampled from a flow's period.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsertionMode {
    /// Each second each flow demands a vehicle with probability 1/period.
    #[default]
    Bernoulli,
    /// A vehicle exactly every `period_s` seconds; for reproducible traces
    /// in tests and demos.
    FixedInterval,
}

#[derive(Clone, Debug)]
pub struct ContextSchedule {
    pub contexts: Vec<Context>,
    /// Seconds each context stays active before the next takes over.
    pub switch_period_s: u64,
    pub start_index: usize,
}

impl ContextSchedule {
    pub fn new(contexts: Vec<Context>, switch_period_s: u64) -> Result<ContextSchedule, ContextError> {
        if contexts.is_empty() {
            return Err(ContextError::Empty);
        }
        Ok(ContextSchedule {
            contexts,
            switch_period_s,
            start_index: 0,
        })
    }

    pub fn active_index(&self, clock_s: u64) -> usize {
        let shifts = if self.switch_period_s == 0 {
            0
        } else {
            (clock_s / self.switch_period_s) as usize
        };
        (self.start_index + shifts) % self.contexts.len()
    }

    pub fn active_context(&self, clock_s: u64) -> &Context {
        &self.contexts[self.active_index(clock_s)]
    }

    /// Simulation seconds at which the active context changes, up to the
    /// horizon. Useful for plot markers.
    pub fn switch_times(&self, horizon_s: u64) -> Vec<u64> {
        if self.switch_period_s == 0 || self.contexts.len() < 2 {
            return Vec::new();
        }
        (1..)
            .map(|k| k * self.switch_period_s)
            .take_while(|&t| t < horizon_s)
            .collect()
    }
}

/// Samples this second's insertion demand: the route index of every vehicle
/// to enqueue. Flows are visited in listing order so the draw sequence is
/// reproducible.
pub fn insertion_requests(
    context: &Context,
    clock_s: u64,
    mode: InsertionMode,
    rng: &mut impl Rng,
) -> Vec<usize> {
    let mut requests = Vec::new();
    for flow in &context.flows {
        let due = match mode {
            InsertionMode::Bernoulli => rng.gen_bool(1.0 / flow.period_s as f64),
            InsertionMode::FixedInterval => clock_s % flow.period_s as u64 == 0,
        };
        if due {
            requests.push(flow.route);
        }
    }
    requests
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::build_grid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn net() -> GridNetwork {
        build_grid(4, 4, 150.0, 2).unwrap()
    }

    #[test]
    fn axis_context_covers_every_route_once() {
        let net = net();
        let ctx = Context::by_axis("uniform", &net, 3, 3);
        assert_eq!(ctx.flows.len(), 8);
        assert!(ctx.validate(&net).is_ok());
        let missing = Context {
            name: "missing".into(),
            flows: ctx.flows[1..].to_vec(),
        };
        assert_eq!(
            missing.validate(&net).unwrap_err(),
            ContextError::BadCoverage {
                context: "missing".into(),
                route: 0,
                count: 0
            }
        );
    }

    #[test]
    fn uniform_and_skewed_contexts_share_the_total_rate() {
        let net = net();
        let uniform = Context::by_axis("c1", &net, 3, 3);
        let skewed = Context::by_axis("c2", &net, 6, 2);
        // 8/3 vehicles per second either way
        assert_eq!(uniform.expected_rate_exact(), (8, 3));
        assert_eq!(skewed.expected_rate_exact(), (8, 3));
        assert!((uniform.expected_rate_per_s() - skewed.expected_rate_per_s()).abs() < 1e-15);
    }

    #[test]
    fn schedule_rotates_on_the_switch_period() {
        let net = net();
        let schedule = ContextSchedule::new(
            vec![Context::by_axis("c1", &net, 3, 3), Context::by_axis("c2", &net, 6, 2)],
            20_000,
        )
        .unwrap();
        assert_eq!(schedule.active_index(0), 0);
        assert_eq!(schedule.active_index(19_999), 0);
        assert_eq!(schedule.active_index(20_000), 1);
        assert_eq!(schedule.active_index(39_999), 1);
        assert_eq!(schedule.active_index(40_000), 0);
        assert_eq!(schedule.active_index(60_000), 1);
        assert_eq!(schedule.active_context(25_000).name, "c2");
        assert_eq!(schedule.switch_times(80_000), vec![20_000, 40_000, 60_000]);
    }

    #[test]
    fn single_context_schedule_never_switches() {
        let net = net();
        let schedule = ContextSchedule::new(vec![Context::by_axis("only", &net, 3, 3)], 20_000).unwrap();
        assert_eq!(schedule.active_index(123_456), 0);
        assert!(schedule.switch_times(100_000).is_empty());
        assert_eq!(ContextSchedule::new(vec![], 100).unwrap_err(), ContextError::Empty);
    }

    #[test]
    fn bernoulli_rate_matches_period_statistically() {
        let net = net();
        let ctx = Context::by_axis("c1", &net, 3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let horizon = 30_000u64;
        let mut per_route = vec![0u64; 8];
        for t in 0..horizon {
            for r in insertion_requests(&ctx, t, InsertionMode::Bernoulli, &mut rng) {
                per_route[r] += 1;
            }
        }
        for (route, &n) in per_route.iter().enumerate() {
            let expected = horizon as f64 / 3.0;
            assert!(
                (n as f64 - expected).abs() < 4.0 * (expected * (1.0 - 1.0 / 3.0)).sqrt(),
                "route {route}: {n} insertions"
            );
        }
    }

    #[test]
    fn period_one_inserts_every_second() {
        let net = build_grid(1, 1, 150.0, 1).unwrap();
        let ctx = Context::by_axis("flood", &net, 1, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for t in 0..50 {
            let reqs = insertion_requests(&ctx, t, InsertionMode::Bernoulli, &mut rng);
            assert_eq!(reqs, vec![0, 1]);
        }
    }

    #[test]
    fn fixed_interval_is_deterministic() {
        let net = net();
        let ctx = Context::by_axis("c2", &net, 6, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let at = |t: u64, rng: &mut ChaCha8Rng| insertion_requests(&ctx, t, InsertionMode::FixedInterval, rng);
        assert_eq!(at(0, &mut rng).len(), 8, "every flow fires at zero");
        assert_eq!(at(1, &mut rng).len(), 0);
        assert_eq!(at(2, &mut rng).len(), 4, "west-east period two");
        assert_eq!(at(6, &mut rng).len(), 8);
        // no randomness consumed
        assert_eq!(rng.get_word_pos(), ChaCha8Rng::seed_from_u64(5).get_word_pos());
    }
}
