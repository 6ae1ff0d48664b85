//! Runs the fixed-time baseline (35 s green, 2 s yellow) across one context
//! switch and prints how total waiting degrades once the flows change.

use signalgrid::config::preset;
use signalgrid::metrics::moving_average;
use signalgrid::runner::run_single;

fn main() {
    let mut config = preset("fixed-baseline").unwrap().remove(0);
    config.horizon_s = 25_000;
    let scenario = config.build().unwrap();
    println!("{}: horizon {}s, switch at 20000s", scenario.name, scenario.horizon_s);

    let out = run_single(&scenario, config.base_seed);
    let raw: Vec<f64> = out.records.iter().map(|r| r.total_waiting as f64).collect();
    let smooth = moving_average(&raw, 15);

    println!("\n  window        mean waiting");
    for lo in (1_000..25_000).step_by(2_000) {
        let hi = lo + 2_000;
        let mean = smooth[lo..hi].iter().sum::<f64>() / 2_000.0;
        let ctx = out.records[lo].context_index;
        println!("  [{lo:5},{hi:5})  {mean:8.1}  (context {ctx})");
    }

    let before = smooth[15_000..20_000].iter().sum::<f64>() / 5_000.0;
    let after = smooth[20_000..25_000].iter().sum::<f64>() / 5_000.0;
    println!("\ncontext 0 plateau {before:.0}, context 1 {after:.0} ({:.2}x worse)", after / before);
}
