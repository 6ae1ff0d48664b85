//! Run metrics: the network-wide waiting signal, smoothing, cross-run
//! aggregation, and the CSV formats the experiment runner emits.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::net::GridNetwork;
use crate::sim::SimState;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no runs to aggregate")]
    NoRuns,
    #[error("run '{0}' has {1} samples, expected {2}")]
    LengthMismatch(String, usize, usize),
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Sum of accumulated waiting over every signalized intersection; the
/// network-wide congestion signal recorded once per second.
pub fn total_waiting(state: &SimState, net: &GridNetwork) -> u64 {
    (0..net.intersections().len())
        .map(|i| state.intersection_waiting_time(net, i))
        .sum()
}

/// One recorded second of one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub step: u64,
    pub total_waiting: u64,
    pub backlog: u64,
    pub context_index: usize,
}

/// One run's metric trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub label: String,
    pub run_seed: u64,
    pub values: Vec<f64>,
}

/// Trailing moving average. The first `window - 1` samples average what has
/// been seen so far, so the output has the input's length.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be at least 1");
    values
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let lo = (i + 1).saturating_sub(window);
            let slice = &values[lo..=i];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

/// Pointwise mean and population standard deviation across runs.
#[derive(Clone, Debug, PartialEq)]
pub struct RunAggregate {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub n_runs: usize,
}

pub fn aggregate_runs(runs: &[TimeSeries]) -> Result<RunAggregate, MetricsError> {
    let first = runs.first().ok_or(MetricsError::NoRuns)?;
    let len = first.values.len();
    for run in runs {
        if run.values.len() != len {
            return Err(MetricsError::LengthMismatch(run.label.clone(), run.values.len(), len));
        }
    }
    let n = runs.len() as f64;
    let mut mean = vec![0.0; len];
    let mut std = vec![0.0; len];
    for i in 0..len {
        let m = runs.iter().map(|r| r.values[i]).sum::<f64>() / n;
        let var = runs.iter().map(|r| (r.values[i] - m).powi(2)).sum::<f64>() / n;
        mean[i] = m;
        std[i] = var.sqrt();
    }
    Ok(RunAggregate {
        mean,
        std,
        n_runs: runs.len(),
    })
}

fn csv_err(path: &Path, source: csv::Error) -> MetricsError {
    MetricsError::Csv {
        path: path.display().to_string(),
        source,
    }
}

fn io_err(path: &Path, source: std::io::Error) -> MetricsError {
    MetricsError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes the per-second trace of one run with header
/// `step,total_waiting,backlog,context_index`.
pub fn write_run_csv(path: &Path, records: &[RunRecord]) -> Result<(), MetricsError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for record in records {
        w.serialize(record).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn read_run_csv(path: &Path) -> Result<Vec<RunRecord>, MetricsError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    r.deserialize().collect::<Result<_, _>>().map_err(|e| csv_err(path, e))
}

#[derive(Serialize, Deserialize)]
struct AggregateRow {
    step: u64,
    mean: f64,
    std: f64,
    n: usize,
}

/// Writes an aggregate with header `step,mean,std,n`.
pub fn write_aggregate_csv(path: &Path, agg: &RunAggregate) -> Result<(), MetricsError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for (step, (&mean, &std)) in agg.mean.iter().zip(&agg.std).enumerate() {
        w.serialize(AggregateRow {
            step: step as u64,
            mean,
            std,
            n: agg.n_runs,
        })
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn read_aggregate_csv(path: &Path) -> Result<RunAggregate, MetricsError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    let mut agg = RunAggregate {
        mean: Vec::new(),
        std: Vec::new(),
        n_runs: 0,
    };
    for row in r.deserialize() {
        let row: AggregateRow = row.map_err(|e| csv_err(path, e))?;
        agg.mean.push(row.mean);
        agg.std.push(row.std);
        agg.n_runs = row.n;
    }
    Ok(agg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::build_grid;
    use crate::sim::SimParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn total_waiting_sums_intersections() {
        let net = build_grid(2, 2, 150.0, 1).unwrap();
        let mut state = SimState::new(&net, ChaCha8Rng::seed_from_u64(0));
        let params = SimParams::default();
        // two stopped vehicles on red approaches of different intersections
        state.place_vehicle(&net, 0, 0, 0, 150.0, 0.0);
        state.place_vehicle(&net, 1, 0, 0, 150.0, 0.0);
        for _ in 0..5 {
            state.step(&net, &params, &[]);
        }
        assert_eq!(total_waiting(&state, &net), 10);
    }

    #[test]
    fn moving_average_hand_checked() {
        let values = [0.0, 3.0, 6.0, 3.0, 0.0, 0.0];
        let smoothed = moving_average(&values, 3);
        assert_eq!(smoothed, vec![0.0, 1.5, 3.0, 4.0, 3.0, 1.0]);
        assert_eq!(moving_average(&values, 1), values.to_vec());
        let constant = [5.0; 10];
        assert!(moving_average(&constant, 15).iter().all(|&v| (v - 5.0).abs() < 1e-12));
    }

    #[test]
    fn moving_average_stays_within_input_bounds() {
        let values: Vec<f64> = (0..500).map(|i| ((i * 37) % 91) as f64).collect();
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for w in [1, 2, 15, 100] {
            for v in moving_average(&values, w) {
                assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
            }
        }
    }

    #[test]
    fn aggregate_mean_and_population_std() {
        let runs = vec![
            TimeSeries {
                label: "a".into(),
                run_seed: 0,
                values: vec![0.0, 10.0],
            },
            TimeSeries {
                label: "b".into(),
                run_seed: 1,
                values: vec![2.0, 10.0],
            },
        ];
        let agg = aggregate_runs(&runs).unwrap();
        assert_eq!(agg.mean, vec![1.0, 10.0]);
        // population std over {0, 2} is 1, not sqrt(2)
        assert_eq!(agg.std, vec![1.0, 0.0]);
        assert_eq!(agg.n_runs, 2);
    }

    #[test]
    fn aggregate_rejects_mismatched_lengths() {
        let runs = vec![
            TimeSeries {
                label: "a".into(),
                run_seed: 0,
                values: vec![0.0],
            },
            TimeSeries {
                label: "b".into(),
                run_seed: 1,
                values: vec![0.0, 1.0],
            },
        ];
        assert!(matches!(aggregate_runs(&runs), Err(MetricsError::LengthMismatch(..))));
        assert!(matches!(aggregate_runs(&[]), Err(MetricsError::NoRuns)));
    }

    #[test]
    fn run_csv_round_trip_with_exact_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        let records = vec![
            RunRecord {
                step: 0,
                total_waiting: 0,
                backlog: 0,
                context_index: 0,
            },
            RunRecord {
                step: 1,
                total_waiting: 17,
                backlog: 3,
                context_index: 1,
            },
        ];
        write_run_csv(&path, &records).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("step,total_waiting,backlog,context_index\n"));
        assert_eq!(read_run_csv(&path).unwrap(), records);
    }

    #[test]
    fn aggregate_csv_round_trip_with_exact_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("agg.csv");
        let agg = RunAggregate {
            mean: vec![1.5, 2.25],
            std: vec![0.5, 0.0],
            n_runs: 30,
        };
        write_aggregate_csv(&path, &agg).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("step,mean,std,n\n"));
        assert_eq!(read_aggregate_csv(&path).unwrap(), agg);
    }
}
