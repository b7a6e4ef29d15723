//! Streaming estimation of pi from trials, and the experiments built on it.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::walk_sim::Trial;

mod experiments;

pub use experiments::{
    bounds_demonstration, buffon_experiment, convergence_experiment, derive_seed, estimate_pi,
    median, parker_replication, quantile, run_estimate, BoundsReport, Budget, BudgetRow,
    BuffonReport, ConvergenceReport, ExperimentConfig, ParkerReport, RunRecord, PARKER_ESTIMATE,
    PARKER_FLIPS,
};

/// Number of small stopping-time indices tallied exactly in a summary.
pub const LOW_K_BINS: usize = 16;

/// Single-pass moments of the head fraction plus flip accounting.
///
/// `flips_used` always equals completed flips + censored flips + discarded
/// flips, where a discarded trial is the partial one cut off by a flip budget.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSummary {
    trials: u64,
    mean_fraction: f64,
    m2: f64,
    flips_completed: u64,
    censored_trials: u64,
    flips_censored: u64,
    flips_discarded: u64,
    min_fraction: f64,
    max_fraction: f64,
    low_k_counts: [u64; LOW_K_BINS],
}

impl Default for EstimateSummary {
    fn default() -> Self {
        Self::new()
    }
}

impl EstimateSummary {
    pub fn new() -> Self {
        Self {
            trials: 0,
            mean_fraction: 0.0,
            m2: 0.0,
            flips_completed: 0,
            censored_trials: 0,
            flips_censored: 0,
            flips_discarded: 0,
            min_fraction: f64::INFINITY,
            max_fraction: f64::NEG_INFINITY,
            low_k_counts: [0; LOW_K_BINS],
        }
    }

    /// Welford update with a completed trial.
    pub fn push(&mut self, trial: &Trial) -> Result<()> {
        let f = trial.fraction().ok_or(Error::CensoredTrial)?;
        self.trials += 1;
        let delta = f - self.mean_fraction;
        self.mean_fraction += delta / self.trials as f64;
        self.m2 += delta * (f - self.mean_fraction);
        self.flips_completed = self.flips_completed.saturating_add(trial.flips_consumed);
        self.min_fraction = self.min_fraction.min(f);
        self.max_fraction = self.max_fraction.max(f);
        if let Some(bin) = self.low_k_counts.get_mut((trial.tau / 2) as usize) {
            *bin += 1;
        }
        Ok(())
    }

    /// Books a trial that hit the step cap.
    pub fn record_censored(&mut self, trial: &Trial) {
        debug_assert!(trial.censored);
        self.censored_trials += 1;
        self.flips_censored = self.flips_censored.saturating_add(trial.flips_consumed);
    }

    /// Books flips spent on a trial abandoned when the budget ran out.
    pub fn record_discarded(&mut self, flips: u64) {
        self.flips_discarded = self.flips_discarded.saturating_add(flips);
    }

    /// Pairwise moment merge. Not bitwise commutative, so callers merge in
    /// a fixed order.
    pub fn merge(&mut self, other: &EstimateSummary) {
        if other.trials > 0 {
            if self.trials == 0 {
                self.mean_fraction = other.mean_fraction;
                self.m2 = other.m2;
            } else {
                let na = self.trials as f64;
                let nb = other.trials as f64;
                let n = na + nb;
                let delta = other.mean_fraction - self.mean_fraction;
                self.mean_fraction += delta * nb / n;
                self.m2 += other.m2 + delta * delta * na * nb / n;
            }
            self.trials += other.trials;
        }
        self.flips_completed = self.flips_completed.saturating_add(other.flips_completed);
        self.censored_trials += other.censored_trials;
        self.flips_censored = self.flips_censored.saturating_add(other.flips_censored);
        self.flips_discarded = self.flips_discarded.saturating_add(other.flips_discarded);
        self.min_fraction = self.min_fraction.min(other.min_fraction);
        self.max_fraction = self.max_fraction.max(other.max_fraction);
        for (a, b) in self.low_k_counts.iter_mut().zip(other.low_k_counts) {
            *a += b;
        }
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn mean_fraction(&self) -> Option<f64> {
        (self.trials > 0).then_some(self.mean_fraction)
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    /// Sample variance of the fraction; needs two trials.
    pub fn variance(&self) -> Option<f64> {
        (self.trials > 1).then(|| self.m2 / (self.trials - 1) as f64)
    }

    pub fn pi_hat(&self) -> Option<f64> {
        self.mean_fraction().map(|m| 4.0 * m)
    }

    /// `4 sqrt(variance / trials)`.
    pub fn stderr_pi(&self) -> Option<f64> {
        self.variance()
            .map(|v| 4.0 * (v / self.trials as f64).sqrt())
    }

    pub fn flips_used(&self) -> u64 {
        self.flips_completed
            .saturating_add(self.flips_censored)
            .saturating_add(self.flips_discarded)
    }

    pub fn flips_completed(&self) -> u64 {
        self.flips_completed
    }

    pub fn censored_trials(&self) -> u64 {
        self.censored_trials
    }

    pub fn flips_censored(&self) -> u64 {
        self.flips_censored
    }

    pub fn flips_discarded(&self) -> u64 {
        self.flips_discarded
    }

    pub fn min_fraction(&self) -> Option<f64> {
        (self.trials > 0).then_some(self.min_fraction)
    }

    pub fn max_fraction(&self) -> Option<f64> {
        (self.trials > 0).then_some(self.max_fraction)
    }

    /// Completed trials with tau = 2k+1, for k < [`LOW_K_BINS`].
    pub fn low_k_counts(&self) -> &[u64; LOW_K_BINS] {
        &self.low_k_counts
    }

    /// Trials whose fraction was exactly 1 (tau = 1).
    pub fn fraction_one_count(&self) -> u64 {
        self.low_k_counts[0]
    }

    pub fn is_empty(&self) -> bool {
        self.trials == 0
    }
}

impl Serialize for EstimateSummary {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("EstimateSummary", 14)?;
        st.serialize_field("trials", &self.trials)?;
        st.serialize_field("pi_hat", &self.pi_hat())?;
        st.serialize_field("stderr_pi", &self.stderr_pi())?;
        st.serialize_field("mean_fraction", &self.mean_fraction())?;
        st.serialize_field("m2", &self.m2)?;
        st.serialize_field("variance", &self.variance())?;
        st.serialize_field("flips_used", &self.flips_used())?;
        st.serialize_field("flips_completed", &self.flips_completed)?;
        st.serialize_field("censored_trials", &self.censored_trials)?;
        st.serialize_field("flips_censored", &self.flips_censored)?;
        st.serialize_field("flips_discarded", &self.flips_discarded)?;
        st.serialize_field("min_fraction", &self.min_fraction())?;
        st.serialize_field("max_fraction", &self.max_fraction())?;
        st.serialize_field("low_k_counts", &self.low_k_counts)?;
        st.end()
    }
}

/// Functional form of [`EstimateSummary::push`].
pub fn stream_update(mut summary: EstimateSummary, trial: &Trial) -> Result<EstimateSummary> {
    summary.push(trial)?;
    Ok(summary)
}
