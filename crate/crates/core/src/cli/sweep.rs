//! Sweeps over one parameter, run in a bounded thread pool.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::SweepSpec;
use super::output::{create_dir, fmt_f64, write_csv};
use super::run::{simulate, write_run, RunOutput, Summary};
use super::CliError;

pub const AGGREGATE_FILE: &str = "sweep.csv";
pub const FAILURES_FILE: &str = "failures.csv";

/// Outcome of one sweep point.
#[derive(Debug)]
pub struct SweepPoint {
    pub value: f64,
    pub directory: PathBuf,
    pub result: Result<RunOutput, CliError>,
}

#[derive(Debug)]
pub struct SweepReport {
    /// Points ordered by swept value.
    pub points: Vec<SweepPoint>,
}

impl SweepReport {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.result.is_err()).count()
    }
}

/// Directory name for one sweep point, e.g. `r_op_0.5`.
pub fn point_directory(spec: &SweepSpec, value: f64) -> String {
    format!("{}_{}", spec.variable.name(), value)
}

/// Thread pool with `jobs` workers (`None` lets rayon decide).
pub fn thread_pool(jobs: Option<usize>) -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n.max(1));
    }
    builder.build().expect("thread pool construction")
}

/// Runs every point of `spec` and collects the results in value order.
pub fn run_points(
    spec: &SweepSpec,
    jobs: Option<usize>,
) -> Vec<(f64, Result<RunOutput, CliError>)> {
    let mut values = spec.values.clone();
    values.sort_by(f64::total_cmp);
    thread_pool(jobs).install(|| {
        values
            .par_iter()
            .map(|&v| (v, simulate(&spec.variable.apply(&spec.base, v))))
            .collect()
    })
}

/// Runs the sweep and writes per-point directories, `sweep.csv` and
/// `failures.csv` under `out`. Failed points are recorded and skipped.
pub fn sweep(spec: &SweepSpec, out: &Path, jobs: Option<usize>) -> Result<SweepReport, CliError> {
    create_dir(out)?;
    let results = run_points(spec, jobs);

    let mut aggregate = Vec::new();
    let mut failures = Vec::new();
    let mut points = Vec::new();
    for (value, result) in results {
        let directory = out.join(point_directory(spec, value));
        let result = match result {
            Ok(run) => match write_run(&run, &directory) {
                Ok(()) => {
                    aggregate.push(run.summary_record());
                    Ok(run)
                }
                Err(e) => Err(e),
            },
            Err(e) => Err(e),
        };
        if let Err(e) = &result {
            failures.push(vec![
                fmt_f64(value),
                e.exit_code().to_string(),
                e.to_string(),
            ]);
        }
        points.push(SweepPoint {
            value,
            directory,
            result,
        });
    }
    write_csv(&out.join(AGGREGATE_FILE), &Summary::HEADER, aggregate)?;
    write_csv(
        &out.join(FAILURES_FILE),
        &["value", "exit_code", "error"],
        failures,
    )?;
    Ok(SweepReport { points })
}
