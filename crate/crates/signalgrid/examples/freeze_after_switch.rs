//! Freezes learning and exploration exactly when the context switches, so the
//! agents keep acting on a policy trained for flows that no longer exist.

use signalgrid::config::preset;
use signalgrid::metrics::moving_average;
use signalgrid::runner::run_single;

fn main() {
    let mut config = preset("freeze").unwrap().remove(0);
    config.horizon_s = 30_000;
    let scenario = config.build().unwrap();
    println!("{}: alpha and epsilon drop to 0 at 20000s, flows switch at 20000s", scenario.name);

    let out = run_single(&scenario, config.base_seed);
    let raw: Vec<f64> = out.records.iter().map(|r| r.total_waiting as f64).collect();
    let smooth = moving_average(&raw, 15);

    let window = |lo: usize, hi: usize| smooth[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
    println!("\n  trained plateau [15000,20000): {:8.1}", window(15_000, 20_000));
    println!("  frozen, new flows [20000,25000): {:8.1}", window(20_000, 25_000));
    println!("  still frozen [25000,30000): {:8.1}", window(25_000, 30_000));
    println!(
        "\nwaiting rises {:.1}x once the frozen policy meets unseen traffic",
        window(20_000, 25_000) / window(15_000, 20_000)
    );
}
