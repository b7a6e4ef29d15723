use std::f64::consts::PI;

use rand_core::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use super::EstimateSummary;
use crate::analytics::TauTable;
use crate::error::{Error, Result};
use crate::walk_sim::{run_trial_direct, run_trial_walk, BitStream, Method, Needle, DEFAULT_CAP};

/// Flips in the classroom replication.
pub const PARKER_FLIPS: u64 = 10_000;
/// The estimate obtained from a recorded 10,000-flip sequence.
pub const PARKER_ESTIMATE: f64 = 3.2266;

/// Default number of trials per substream chunk.
pub const DEFAULT_CHUNK_TRIALS: u64 = 1 << 14;

const TAG_SCALING: u64 = 1;
const TAG_PARKER: u64 = 2;

/// What bounds a single estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "value")]
pub enum Budget {
    /// Number of trials attempted (completed or censored).
    Trials(u64),
    /// Total coin flips; the trial in progress when they run out is dropped.
    Flips(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub method: Method,
    pub cap: u64,
    pub budget: Budget,
    pub reps: u64,
    /// Flip budgets for the scaling study, strictly increasing.
    pub budgets: Vec<u64>,
    /// Trials per substream when running under a trial budget. Results are
    /// fixed by (seed, method, cap, budget, chunk_trials).
    pub chunk_trials: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            method: Method::Walk,
            cap: DEFAULT_CAP,
            budget: Budget::Trials(1000),
            reps: 1,
            budgets: Vec::new(),
            chunk_trials: DEFAULT_CHUNK_TRIALS,
        }
    }
}

impl ExperimentConfig {
    pub fn new(seed: u64, method: Method, budget: Budget) -> Self {
        Self {
            seed,
            method,
            budget,
            ..Self::default()
        }
    }

    fn check_estimate(&self) -> Result<()> {
        if self.cap == 0 {
            return Err(Error::InvalidCap);
        }
        if self.chunk_trials == 0 {
            return Err(Error::InvalidConfig("chunk size must be positive".into()));
        }
        Ok(())
    }

    fn check_scaling(&self) -> Result<()> {
        self.check_estimate()?;
        if self.reps < 30 {
            return Err(Error::InvalidConfig(format!(
                "scaling study needs at least 30 reps, got {}",
                self.reps
            )));
        }
        if self.budgets.len() < 4 {
            return Err(Error::InvalidConfig(
                "scaling study needs at least 4 budgets".into(),
            ));
        }
        if self.budgets[0] == 0 || self.budgets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "budgets must be positive and strictly increasing".into(),
            ));
        }
        let span = *self.budgets.last().unwrap() as f64 / self.budgets[0] as f64;
        if span < 1000.0 {
            return Err(Error::InvalidConfig(
                "budgets must span at least three decades".into(),
            ));
        }
        Ok(())
    }
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one run inside a multi-run experiment.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(master), |acc, &p| mix(acc ^ mix(p)))
}

fn flip_budget_run<R: RngCore>(
    bits: &mut BitStream<R>,
    method: Method,
    cap: u64,
    budget: u64,
    table: &TauTable,
) -> EstimateSummary {
    let mut summary = EstimateSummary::new();
    let mut remaining = budget;
    while remaining > 0 {
        match method {
            Method::Walk => {
                let limit = cap.min(remaining);
                let trial = run_trial_walk(bits, limit).expect("limit is positive");
                remaining -= trial.flips_consumed;
                if !trial.censored {
                    summary.push(&trial).expect("completed trial");
                } else if limit == cap {
                    summary.record_censored(&trial);
                } else {
                    summary.record_discarded(trial.flips_consumed);
                }
            }
            Method::Direct => {
                let trial = run_trial_direct(bits, table);
                if trial.tau <= remaining {
                    remaining -= trial.tau;
                    summary.push(&trial).expect("completed trial");
                } else {
                    summary.record_discarded(remaining);
                    remaining = 0;
                }
            }
        }
    }
    summary
}

fn trial_chunk(
    seed: u64,
    chunk: u64,
    trials: u64,
    method: Method,
    cap: u64,
    table: &TauTable,
) -> EstimateSummary {
    let mut bits = BitStream::substream(seed, chunk);
    let mut summary = EstimateSummary::new();
    for _ in 0..trials {
        let trial = match method {
            Method::Walk => run_trial_walk(&mut bits, cap).expect("cap is positive"),
            Method::Direct => run_trial_direct(&mut bits, table),
        };
        if trial.censored {
            summary.record_censored(&trial);
        } else {
            summary.push(&trial).expect("completed trial");
        }
    }
    summary
}

/// Runs one estimate, returning the summary even when no trial completed.
///
/// Trial budgets are split into chunks of `chunk_trials`; chunk c reads
/// substream c of the seed, and the chunk summaries are merged in chunk
/// order, so the result does not depend on the worker count. A flip budget
/// is one sequential run on substream 0.
pub fn run_estimate(config: &ExperimentConfig) -> Result<EstimateSummary> {
    config.check_estimate()?;
    let table = TauTable::standard();
    let summary = match config.budget {
        Budget::Flips(n) => {
            let mut bits = BitStream::substream(config.seed, 0);
            flip_budget_run(&mut bits, config.method, config.cap, n, &table)
        }
        Budget::Trials(n) => {
            let chunk = config.chunk_trials;
            let chunks = n.div_ceil(chunk);
            let parts: Vec<EstimateSummary> = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let len = chunk.min(n - c * chunk);
                    trial_chunk(config.seed, c, len, config.method, config.cap, &table)
                })
                .collect();
            parts.iter().fold(EstimateSummary::new(), |mut acc, p| {
                acc.merge(p);
                acc
            })
        }
    };
    Ok(summary)
}

/// Estimate of pi under `config`; a run with no completed trial is
/// [`Error::NoData`].
pub fn estimate_pi(config: &ExperimentConfig) -> Result<EstimateSummary> {
    let summary = run_estimate(config)?;
    if summary.is_empty() {
        return Err(Error::NoData {
            flips_used: summary.flips_used(),
            censored: summary.censored_trials(),
        });
    }
    Ok(summary)
}

/// One estimate inside a multi-run experiment (one CSV row).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub run_id: u64,
    pub method: Method,
    pub seed: u64,
    pub budget_flips: u64,
    pub trials: u64,
    pub censored: u64,
    pub pi_hat: Option<f64>,
    pub abs_error: Option<f64>,
}

impl RunRecord {
    fn new(run_id: u64, method: Method, seed: u64, budget: u64, s: &EstimateSummary) -> Self {
        let pi_hat = s.pi_hat();
        Self {
            run_id,
            method,
            seed,
            budget_flips: budget,
            trials: s.trials(),
            censored: s.censored_trials(),
            pi_hat,
            abs_error: pi_hat.map(|p| (p - PI).abs()),
        }
    }
}

fn flip_budget_reps(
    master: u64,
    tag: u64,
    method: Method,
    cap: u64,
    budget: u64,
    reps: u64,
    first_run_id: u64,
) -> Vec<RunRecord> {
    let table = TauTable::standard();
    (0..reps)
        .into_par_iter()
        .map(|rep| {
            let seed = derive_seed(master, &[tag, budget, rep]);
            let mut bits = BitStream::substream(seed, 0);
            let s = flip_budget_run(&mut bits, method, cap, budget, &table);
            RunRecord::new(first_run_id + rep, method, seed, budget, &s)
        })
        .collect()
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

pub fn median(sorted: &[f64]) -> Option<f64> {
    quantile(sorted, 0.5)
}

fn sorted_errors(runs: &[RunRecord]) -> Vec<f64> {
    let mut e: Vec<f64> = runs.iter().filter_map(|r| r.abs_error).collect();
    e.sort_by(f64::total_cmp);
    e
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetRow {
    pub budget_flips: u64,
    pub reps: u64,
    /// reps that completed at least one trial
    pub usable_reps: u64,
    pub median_abs_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<BudgetRow>,
    pub runs: Vec<RunRecord>,
    /// least-squares slope of log(median error) on log(N)
    pub slope: f64,
    pub intercept: f64,
}

/// Median absolute error of `reps` flip-budgeted estimates at each budget,
/// with a log-log least-squares fit. Runs with no completed trial are left
/// out of the median and counted in `usable_reps`.
pub fn convergence_experiment(config: &ExperimentConfig) -> Result<ConvergenceReport> {
    config.check_scaling()?;
    let mut runs = Vec::new();
    let mut rows = Vec::new();
    for &budget in &config.budgets {
        let batch = flip_budget_reps(
            config.seed,
            TAG_SCALING,
            config.method,
            config.cap,
            budget,
            config.reps,
            runs.len() as u64,
        );
        let errors = sorted_errors(&batch);
        rows.push(BudgetRow {
            budget_flips: budget,
            reps: config.reps,
            usable_reps: errors.len() as u64,
            median_abs_error: median(&errors),
        });
        runs.extend(batch);
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| {
            r.median_abs_error
                .filter(|&e| e > 0.0)
                .map(|e| ((r.budget_flips as f64).ln(), e.ln()))
        })
        .collect();
    let (slope, intercept) = fit_line(&points)?;
    Ok(ConvergenceReport {
        rows,
        runs,
        slope,
        intercept,
    })
}

fn fit_line(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    let distinct_x = points
        .iter()
        .any(|p| points.first().is_some_and(|q| q.0 != p.0));
    if points.len() < 2 || !distinct_x {
        return Err(Error::DegenerateFit {
            usable: points.len(),
        });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParkerReport {
    pub reps: u64,
    pub budget_flips: u64,
    pub usable_reps: u64,
    pub median_abs_error: f64,
    pub abs_error_q25: f64,
    pub abs_error_q75: f64,
    pub abs_error_iqr: f64,
    pub pi_hat_min: f64,
    pub pi_hat_max: f64,
    /// |3.2266 - pi|
    pub observed_abs_error: f64,
    /// share of runs whose |error| is at most the observed one
    pub observed_quantile: f64,
    pub runs: Vec<RunRecord>,
}

/// `reps` independent 10,000-flip walk estimates and where the recorded
/// estimate's error falls among them.
pub fn parker_replication(reps: u64, seed: u64) -> Result<ParkerReport> {
    if reps < 100 {
        return Err(Error::InvalidConfig(format!(
            "replication needs at least 100 reps, got {reps}"
        )));
    }
    let runs = flip_budget_reps(seed, TAG_PARKER, Method::Walk, DEFAULT_CAP, PARKER_FLIPS, reps, 0);
    let errors = sorted_errors(&runs);
    if errors.is_empty() {
        return Err(Error::NoData {
            flips_used: reps * PARKER_FLIPS,
            censored: 0,
        });
    }
    let observed = (PARKER_ESTIMATE - PI).abs();
    let at_most = errors.partition_point(|&e| e <= observed);
    let pis = runs.iter().filter_map(|r| r.pi_hat);
    let q25 = quantile(&errors, 0.25).unwrap();
    let q75 = quantile(&errors, 0.75).unwrap();
    Ok(ParkerReport {
        reps,
        budget_flips: PARKER_FLIPS,
        usable_reps: errors.len() as u64,
        median_abs_error: median(&errors).unwrap(),
        abs_error_q25: q25,
        abs_error_q75: q75,
        abs_error_iqr: q75 - q25,
        pi_hat_min: pis.clone().fold(f64::INFINITY, f64::min),
        pi_hat_max: pis.fold(f64::NEG_INFINITY, f64::max),
        observed_abs_error: observed,
        observed_quantile: at_most as f64 / errors.len() as f64,
        runs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub trials: u64,
    pub fraction_one_frequency: f64,
    /// standard error of a fair Bernoulli frequency at this sample size
    pub fraction_one_sigma: f64,
    pub min_fraction: f64,
    pub max_fraction: f64,
    pub pi_hat: f64,
    pub stderr_pi: f64,
    pub lower: f64,
    pub upper: f64,
    pub strictly_between_3_and_4: bool,
}

/// Direct-method run showing the fraction is 1 about half the time, never
/// reaches 1/2, and that the 4-sigma band of the estimate sits inside (3, 4).
pub fn bounds_demonstration(trials: u64, seed: u64) -> Result<BoundsReport> {
    if trials < 100_000 {
        return Err(Error::InvalidConfig(format!(
            "bounds demonstration needs at least 1e5 trials, got {trials}"
        )));
    }
    let config = ExperimentConfig::new(seed, Method::Direct, Budget::Trials(trials));
    let s = estimate_pi(&config)?;
    let n = s.trials() as f64;
    let pi_hat = s.pi_hat().unwrap();
    let stderr_pi = s.stderr_pi().unwrap();
    let lower = pi_hat - 4.0 * stderr_pi;
    let upper = pi_hat + 4.0 * stderr_pi;
    Ok(BoundsReport {
        trials: s.trials(),
        fraction_one_frequency: s.fraction_one_count() as f64 / n,
        fraction_one_sigma: (0.25 / n).sqrt(),
        min_fraction: s.min_fraction().unwrap(),
        max_fraction: s.max_fraction().unwrap(),
        pi_hat,
        stderr_pi,
        lower,
        upper,
        strictly_between_3_and_4: lower > 3.0 && upper < 4.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuffonReport {
    pub drops: u64,
    pub needle_len: f64,
    pub spacing: f64,
    pub crossings: u64,
    pub frequency: f64,
    pub expected: f64,
    /// binomial standard error at the expected probability
    pub sigma: f64,
    pub z_score: f64,
    pub pi_hat: Option<f64>,
}

/// Buffon's needle over `drops` drops, chunked like trial budgets.
pub fn buffon_experiment(
    drops: u64,
    seed: u64,
    needle_len: f64,
    spacing: f64,
) -> Result<BuffonReport> {
    let needle = Needle::new(needle_len, spacing)?;
    if drops == 0 {
        return Err(Error::InvalidConfig("need at least one drop".into()));
    }
    let chunk = DEFAULT_CHUNK_TRIALS;
    let crossings: u64 = (0..drops.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut bits = BitStream::substream(seed, c);
            let len = chunk.min(drops - c * chunk);
            (0..len).filter(|_| needle.drop_with(&mut bits).crossed).count() as u64
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    let n = drops as f64;
    let p = needle.crossing_probability();
    let frequency = crossings as f64 / n;
    let sigma = (p * (1.0 - p) / n).sqrt();
    Ok(BuffonReport {
        drops,
        needle_len,
        spacing,
        crossings,
        frequency,
        expected: p,
        sigma,
        z_score: (frequency - p) / sigma,
        pi_hat: (crossings > 0).then(|| 2.0 * needle_len / (spacing * frequency)),
    })
}
