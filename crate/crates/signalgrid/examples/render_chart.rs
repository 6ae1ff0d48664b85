//! Runs a small two-arm experiment end to end: multi-seed execution, CSV
//! artifacts with manifest, then a self-contained SVG chart of both curves.

use signalgrid::config::preset;
use signalgrid::plot::{collect_aggregates, render_line_chart, switch_markers_from_manifests, PlotOptions};
use signalgrid::runner::execute;

fn main() {
    let dir = std::env::temp_dir().join("signalgrid-chart-demo");
    std::fs::create_dir_all(&dir).unwrap();

    for arm in ["observability-full", "observability-partial"] {
        let mut config = preset(arm).unwrap().remove(0);
        config.horizon_s = 12_000;
        config.n_runs = 2;
        let artifacts = execute(&config, &dir).unwrap();
        println!("{arm}: {} run CSVs + {}", artifacts.run_csvs.len(), artifacts.aggregate_csv.display());
    }

    let series = collect_aggregates(&dir).unwrap();
    let options = PlotOptions {
        title: "total waiting time, full vs queue-only observation".into(),
        switch_markers: switch_markers_from_manifests(&dir),
        ..PlotOptions::default()
    };
    let svg = render_line_chart(&series, &options).unwrap();

    let path = dir.join("comparison.svg");
    std::fs::write(&path, &svg).unwrap();
    println!("\n{} series -> {} ({} bytes)", series.len(), path.display(), svg.len());
}
