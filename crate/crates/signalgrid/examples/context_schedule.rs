//! Demonstrates the flow contexts: both insert exactly 8/3 vehicles per
//! second in expectation, distributed differently over the routes, and the
//! schedule rotates them on a fixed period.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use signalgrid::contexts::{insertion_requests, Context, ContextSchedule, InsertionMode};
use signalgrid::net::build_grid;

fn main() {
    let net = build_grid(4, 4, 150.0, 2).unwrap();
    let balanced = Context::by_axis("balanced", &net, 3, 3);
    let unbalanced = Context::by_axis("ns-light-we-heavy", &net, 6, 2);

    for ctx in [&balanced, &unbalanced] {
        let (num, den) = ctx.expected_rate_exact();
        println!("context {:18} rate {num}/{den} veh/s ({:.4})", ctx.name, ctx.expected_rate_per_s());
        for flow in &ctx.flows {
            println!("    route {:5} every {} s", net.routes()[flow.route].name, flow.period_s);
        }
    }

    let schedule = ContextSchedule::new(vec![balanced.clone(), unbalanced.clone()], 20_000).unwrap();
    println!("\nswitches within 80000 s: {:?}", schedule.switch_times(80_000));
    for t in [0, 19_999, 20_000, 40_000, 79_999] {
        println!("  t={t:5} -> {}", schedule.active_context(t).name);
    }

    // sample the Bernoulli insertion process and compare with expectation
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let horizon = 30_000u64;
    let mut inserted = 0usize;
    for t in 0..horizon {
        inserted += insertion_requests(schedule.active_context(t), t, InsertionMode::Bernoulli, &mut rng).len();
    }
    let expected = horizon as f64 * 8.0 / 3.0;
    println!(
        "\nsampled {inserted} insertions over {horizon} s (expected {expected:.0}, off by {:+.2}%)",
        100.0 * (inserted as f64 - expected) / expected
    );
}
