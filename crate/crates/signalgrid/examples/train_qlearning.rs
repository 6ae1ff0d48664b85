//! Trains the 16 independent Q-learning agents from scratch on the balanced
//! context and prints the learning curve plus per-agent table growth.

use signalgrid::config::{preset, ControllerConfig};
use signalgrid::metrics::moving_average;
use signalgrid::runner::run_single;

fn main() {
    // freeze preset minus the freeze: plain decaying-epsilon training
    let mut config = preset("freeze").unwrap().remove(0);
    config.name = "train".into();
    config.horizon_s = 15_000;
    if let ControllerConfig::QLearning { freeze_at_s, .. } = &mut config.controller {
        *freeze_at_s = None;
    }
    let scenario = config.build().unwrap();

    let out = run_single(&scenario, config.base_seed);
    let raw: Vec<f64> = out.records.iter().map(|r| r.total_waiting as f64).collect();
    let smooth = moving_average(&raw, 15);

    println!("  window        mean waiting");
    for lo in (0..15_000).step_by(1_500) {
        let mean = smooth[lo..lo + 1_500].iter().sum::<f64>() / 1_500.0;
        println!("  [{lo:5},{:5})  {mean:8.1}", lo + 1_500);
    }

    println!("\nper-agent stats after {} decisions each:", out.stats[0].decisions);
    for (k, (stats, q)) in out.stats.iter().zip(&out.qtables).enumerate().take(4) {
        println!(
            "  agent {k:2}: reward sum {:9.1}, {} states visited",
            stats.reward_sum,
            q.len()
        );
    }
    let total: usize = out.qtables.iter().map(|q| q.len()).sum();
    println!("  ... ({} agents, {} states total)", out.qtables.len(), total);
}
