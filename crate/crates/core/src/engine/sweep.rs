//! Parameter sweeps with replicates, run in parallel.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::{simulate, SimConfig, SimError, Trajectory};
use crate::compile::ResolvedModel;

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub value: f64,
    /// One trajectory per replicate; replicate `r` uses RNG stream `r`.
    pub runs: Vec<Trajectory>,
}

impl SweepPoint {
    /// Final sample of a column, averaged over replicates.
    pub fn final_mean(&self, col: usize) -> f64 {
        let v: Vec<f64> = self.runs.iter().filter_map(|t| t.values.last().map(|r| r[col] as f64)).collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    }

    /// Time average from `from` onwards, averaged over replicates.
    pub fn time_mean(&self, col: usize, from: f64) -> f64 {
        let v: Vec<f64> = self.runs.iter().filter_map(|t| t.mean_from(col, from)).collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    }

    /// Replicate-averaged trajectory over the grid points every replicate
    /// reached.
    pub fn mean_csv(&self) -> String {
        let Some(first) = self.runs.first() else { return String::new() };
        if self.runs.len() == 1 {
            return first.to_csv();
        }
        let rows = self.runs.iter().map(|t| t.times.len()).min().unwrap_or(0);
        let mut out = String::from("time");
        for o in &first.observables {
            out.push(',');
            out.push_str(o);
        }
        out.push('\n');
        for i in 0..rows {
            write!(out, "{}", first.times[i]).unwrap();
            for c in 0..first.observables.len() {
                let m = self.runs.iter().map(|t| t.values[i][c] as f64).sum::<f64>() / self.runs.len() as f64;
                write!(out, ",{m}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub param: String,
    pub observables: Vec<String>,
    pub points: Vec<SweepPoint>,
    /// Samples at or after this time enter the `_mean` columns.
    pub mean_from: f64,
}

impl SweepResult {
    /// `param,<obs>_final,<obs>_mean,...`, one row per value.
    pub fn summary_csv(&self) -> String {
        let mut out = self.param.clone();
        for o in &self.observables {
            write!(out, ",{o}_final,{o}_mean").unwrap();
        }
        out.push('\n');
        for p in &self.points {
            write!(out, "{}", p.value).unwrap();
            for c in 0..self.observables.len() {
                write!(out, ",{},{}", p.final_mean(c), p.time_mean(c, self.mean_from)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Runs `replicates` simulations per value of `param` on a pool of `jobs`
/// threads (0 = available parallelism). Results do not depend on `jobs`.
pub fn run_sweep(
    model: &ResolvedModel,
    param: &str,
    values: &[f64],
    cfg: &SimConfig,
    replicates: usize,
    jobs: usize,
    mean_from: f64,
) -> Result<SweepResult, SimError> {
    if model.param(param).is_none() {
        return Err(SimError::UnknownParam(param.into()));
    }
    let tasks: Vec<(usize, u64)> =
        (0..values.len()).flat_map(|v| (0..replicates.max(1) as u64).map(move |r| (v, r))).collect();
    let run = |&(v, r): &(usize, u64)| -> Result<Trajectory, SimError> {
        let mut m = model.clone();
        m.set_param(param, values[v]);
        simulate(&m, &SimConfig { stream: cfg.stream + r, ..cfg.clone() })
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().expect("thread pool");
    let results: Vec<Result<Trajectory, SimError>> = pool.install(|| tasks.par_iter().map(run).collect());
    let mut points: Vec<SweepPoint> = values.iter().map(|&value| SweepPoint { value, runs: Vec::new() }).collect();
    for ((v, _), res) in tasks.iter().zip(results) {
        points[*v].runs.push(res?);
    }
    let observables = model.observables.iter().map(|o| o.name.clone()).collect();
    Ok(SweepResult { param: param.into(), observables, points, mean_from })
}
