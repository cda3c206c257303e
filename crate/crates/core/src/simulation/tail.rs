//! Parallel replicate driver and empirical exceedance curves.

use std::time::Duration;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::simulation::generate::RngStreams;

/// Minimum replicate count for tail estimates.
pub const MIN_TAIL_REPS: usize = 100;

/// Runs `reps` replicates of `statistic`, replicate `i` on stream `i` of
/// `seed`, and returns the results in replicate order.
///
/// Output is identical for every thread-pool size.
pub fn run_replicates<T, F>(reps: usize, seed: u64, statistic: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> Result<T> + Sync,
{
    let streams = RngStreams::new(seed);
    (0..reps)
        .into_par_iter()
        .map(|i| statistic(&mut streams.stream(i as u64), i))
        .collect()
}

/// Exceedance frequencies of `|deviation| > t` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCurve {
    pub t_grid: Vec<f64>,
    pub frequency: Vec<f64>,
    pub se: Vec<f64>,
}

impl TailCurve {
    /// Counts exceedances of `|d|` over each grid point. The same deviations
    /// are reused for every `t`, so frequencies are nonincreasing in `t`.
    pub fn from_deviations(deviations: &[f64], t_grid: &[f64]) -> Self {
        let reps = deviations.len().max(1) as f64;
        let mut abs: Vec<f64> = deviations.iter().map(|d| d.abs()).collect();
        abs.sort_by(f64::total_cmp);
        let frequency: Vec<f64> = t_grid
            .iter()
            .map(|&t| {
                let at_most = abs.partition_point(|&d| d <= t);
                (abs.len() - at_most) as f64 / reps
            })
            .collect();
        let se = frequency.iter().map(|&f| binomial_se(f, reps)).collect();
        TailCurve {
            t_grid: t_grid.to_vec(),
            frequency,
            se,
        }
    }
}

/// `√(f(1 − f)/reps)`.
pub fn binomial_se(f: f64, reps: f64) -> f64 {
    (f * (1.0 - f) / reps).sqrt()
}

/// Family-wise error estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FwerEstimate {
    pub fwer: f64,
    pub se: f64,
}

/// Rejection frequency for one signal entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerEntry {
    pub k: usize,
    pub l: usize,
    pub sigma: f64,
    pub power: f64,
}

/// Summary of one Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub seed: u64,
    pub reps: usize,
    #[serde(flatten)]
    pub tail: TailCurve,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibrated_constant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fwer: Option<FwerEstimate>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub power: Vec<PowerEntry>,
    /// Elapsed time; informational only and never serialized, so persisted
    /// reports stay reproducible.
    #[serde(skip)]
    pub wall_clock: Duration,
}

/// Empirical tail of a replicate statistic returning a signed deviation.
pub fn empirical_tail<F>(statistic: F, t_grid: &[f64], reps: usize, seed: u64) -> Result<SimulationReport>
where
    F: Fn(&mut ChaCha8Rng, usize) -> Result<f64> + Sync,
{
    if reps < MIN_TAIL_REPS {
        return Err(invalid("reps", reps as f64, "at least 100"));
    }
    let start = std::time::Instant::now();
    let deviations = run_replicates(reps, seed, statistic)?;
    Ok(SimulationReport {
        seed,
        reps,
        tail: TailCurve::from_deviations(&deviations, t_grid),
        calibrated_constant: None,
        fwer: None,
        power: Vec::new(),
        wall_clock: start.elapsed(),
    })
}

/// Empirical quantile with linear interpolation between order statistics
/// (`h = (n − 1) level`).
pub fn quantile(values: &[f64], level: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * level.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}
