//! Self-contained SVG line charts for aggregate waiting-time curves: one
//! smoothed mean line plus a standard-deviation band per series, optional
//! vertical markers at context switches.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::metrics::{moving_average, read_aggregate_csv, MetricsError, RunAggregate};
use crate::runner::Manifest;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("no aggregate series to plot")]
    NoSeries,
    #[error("no *.agg.csv files under {0}")]
    NoInput(String),
    #[error("series '{0}' is empty after trimming {1} head and tail samples")]
    EmptyAfterTrim(String, usize),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Debug)]
pub struct PlotSeries {
    pub label: String,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl PlotSeries {
    pub fn from_aggregate(label: &str, agg: &RunAggregate) -> PlotSeries {
        PlotSeries {
            label: label.to_string(),
            mean: agg.mean.clone(),
            std: agg.std.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlotOptions {
    pub width: u32,
    pub height: u32,
    /// Trailing moving-average window applied to mean and band, seconds.
    pub window_s: usize,
    /// Samples dropped from both ends after smoothing; hides the cold-start
    /// transient and the window warm-up.
    pub trim_s: usize,
    /// Simulation seconds marked with dashed vertical lines.
    pub switch_markers: Vec<u64>,
    pub title: String,
    pub y_label: String,
}

impl Default for PlotOptions {
    fn default() -> Self {
        PlotOptions {
            width: 900,
            height: 540,
            window_s: 15,
            trim_s: 1_000,
            switch_markers: Vec::new(),
            title: String::new(),
            y_label: "total waiting time [s]".to_string(),
        }
    }
}

const PALETTE: [&str; 6] = ["#d62728", "#2ca02c", "#1f77b4", "#9467bd", "#ff7f0e", "#8c564b"];
/// Longest polyline before points are strided out; keeps files small at
/// 80000-sample horizons without visibly changing the curve.
const MAX_POINTS: usize = 2_000;

struct Prepared {
    label: String,
    color: &'static str,
    /// (second, mean, std), smoothed, trimmed, strided.
    points: Vec<(f64, f64, f64)>,
}

/// Renders aggregate series to an SVG document string.
pub fn render_line_chart(series: &[PlotSeries], options: &PlotOptions) -> Result<String, PlotError> {
    if series.is_empty() {
        return Err(PlotError::NoSeries);
    }
    let mut prepared = Vec::new();
    for (i, s) in series.iter().enumerate() {
        let mean = moving_average(&s.mean, options.window_s.max(1));
        let std = moving_average(&s.std, options.window_s.max(1));
        let len = mean.len();
        if len <= 2 * options.trim_s {
            return Err(PlotError::EmptyAfterTrim(s.label.clone(), options.trim_s));
        }
        let kept = len - 2 * options.trim_s;
        let stride = kept.div_ceil(MAX_POINTS).max(1);
        let points: Vec<(f64, f64, f64)> = (0..kept)
            .step_by(stride)
            .map(|k| {
                let idx = options.trim_s + k;
                (idx as f64, mean[idx], std[idx])
            })
            .collect();
        prepared.push(Prepared {
            label: s.label.clone(),
            color: PALETTE[i % PALETTE.len()],
            points,
        });
    }

    let x_min = prepared.iter().flat_map(|p| p.points.first()).map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x_max = prepared.iter().flat_map(|p| p.points.last()).map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let mut y_max = f64::NEG_INFINITY;
    for p in &prepared {
        for &(_, m, s) in &p.points {
            y_max = y_max.max(m + s);
        }
    }
    let y_min = 0.0;
    let y_max = if y_max <= y_min { y_min + 1.0 } else { y_max * 1.05 };
    let x_span = (x_max - x_min).max(1.0);

    let (w, h) = (options.width as f64, options.height as f64);
    let (left, right, top, bottom) = (74.0, 24.0, 46.0, 56.0);
    let plot_w = w - left - right;
    let plot_h = h - top - bottom;
    let sx = |x: f64| left + (x - x_min) / x_span * plot_w;
    let sy = |y: f64| top + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\">\n"
    ));
    svg.push_str(&format!("<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"));
    if !options.title.is_empty() {
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
            left + plot_w / 2.0,
            escape(&options.title)
        ));
    }

    // gridlines and ticks
    for i in 0..=4 {
        let fy = y_min + (y_max - y_min) * i as f64 / 4.0;
        let y = sy(fy);
        svg.push_str(&format!(
            "<line x1=\"{left}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#dddddd\"/>\n",
            left + plot_w
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"11\">{}</text>\n",
            left - 6.0,
            y + 4.0,
            tick_label(fy)
        ));
        let fx = x_min + x_span * i as f64 / 4.0;
        let x = sx(fx);
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"11\">{}</text>\n",
            top + plot_h + 18.0,
            tick_label(fx)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"12\">simulation time [s]</text>\n",
        left + plot_w / 2.0,
        h - 14.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 18 {:.1})\">{}</text>\n",
        top + plot_h / 2.0,
        top + plot_h / 2.0,
        escape(&options.y_label)
    ));

    // context-switch markers
    for &marker in &options.switch_markers {
        let mx = marker as f64;
        if mx < x_min || mx > x_max {
            continue;
        }
        let x = sx(mx);
        svg.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{top}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#888888\" stroke-dasharray=\"5,4\"/>\n",
            top + plot_h
        ));
    }

    // std bands under the lines
    for p in &prepared {
        let mut d = String::new();
        for &(x, m, s) in &p.points {
            d.push_str(&format!("{:.1},{:.1} ", sx(x), sy((m + s).min(y_max))));
        }
        for &(x, m, s) in p.points.iter().rev() {
            d.push_str(&format!("{:.1},{:.1} ", sx(x), sy((m - s).max(y_min))));
        }
        svg.push_str(&format!(
            "<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.15\" stroke=\"none\"/>\n",
            d.trim_end(),
            p.color
        ));
    }
    for p in &prepared {
        let pts: Vec<String> = p.points.iter().map(|&(x, m, _)| format!("{:.1},{:.1}", sx(x), sy(m))).collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\"/>\n",
            pts.join(" "),
            p.color
        ));
    }

    // legend, top-right corner of the plot area
    for (i, p) in prepared.iter().enumerate() {
        let ly = top + 14.0 + i as f64 * 18.0;
        let lx = left + plot_w - 190.0;
        svg.push_str(&format!(
            "<rect x=\"{lx:.1}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n",
            ly - 10.0,
            p.color
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{ly:.1}\" font-size=\"12\">{}</text>\n",
            lx + 17.0,
            escape(&p.label)
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

fn tick_label(v: f64) -> String {
    if v.abs() >= 10_000.0 {
        format!("{:.0}k", v / 1_000.0)
    } else if v.abs() >= 10.0 || v == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.1}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Loads every `*.agg.csv` under `dir` as a plot series, sorted by file name
/// so colors and legend order are stable.
pub fn collect_aggregates(dir: &Path) -> Result<Vec<PlotSeries>, PlotError> {
    let entries = std::fs::read_dir(dir).map_err(|e| PlotError::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.file_name().is_some_and(|n| n.to_string_lossy().ends_with(".agg.csv")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(PlotError::NoInput(dir.display().to_string()));
    }
    let mut series = Vec::new();
    for path in files {
        let agg = read_aggregate_csv(&path)?;
        let label = path
            .file_name()
            .unwrap()
            .to_string_lossy()
            .trim_end_matches(".agg.csv")
            .to_string();
        series.push(PlotSeries::from_aggregate(&label, &agg));
    }
    Ok(series)
}

/// Context-switch markers for a results directory: the switch times recorded
/// in its manifests (experiment arms share one schedule, so the first
/// manifest wins).
pub fn switch_markers_from_manifests(dir: &Path) -> Vec<u64> {
    let Ok(entries) = std::fs::read_dir(dir) else {
        return Vec::new();
    };
    let mut manifests: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.file_name().is_some_and(|n| n.to_string_lossy().ends_with(".manifest.json")))
        .collect();
    manifests.sort();
    for path in manifests {
        if let Ok(manifest) = Manifest::from_json_file(&path) {
            return manifest.switch_times;
        }
    }
    Vec::new()
}
