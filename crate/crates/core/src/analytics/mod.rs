//! Closed-form side: Catalan numbers, the stopping-time distribution, and the
//! series whose limits are pi/4, pi/2 - 1 and arcsin(x).
//!
//! Every series is accumulated from a multiplicative term recurrence, so no
//! binomial coefficient is ever formed in floating point.

use std::f64::consts::PI;

use num_bigint::BigUint;

use crate::error::{Error, Result};

pub mod exact;
mod table;

pub use table::{central_binomial_asymptotic, sample_tau_direct, tau_tail, TauTable};

/// Limit of [`fraction_mean_truncated`].
pub const FRACTION_MEAN_LIMIT: f64 = PI / 4.0;
/// Limit of [`inv_tau_mean_truncated`].
pub const INV_TAU_MEAN_LIMIT: f64 = PI / 2.0 - 1.0;

/// Catalan number `C(2k, k) / (k + 1)`, exact.
pub fn catalan(k: u64) -> BigUint {
    let central: BigUint = num_integer::binomial(BigUint::from(2 * k), BigUint::from(k));
    central / BigUint::from(k + 1)
}

/// `P(tau = 2k+1) = C(2k,k) / (2 * 4^k * (k+1))`.
///
/// O(k): walks the ratio `pmf[j+1] / pmf[j] = (2j+1) / (2j+4)` from `pmf[0] = 1/2`.
/// Use [`TauTable`] for repeated lookups.
pub fn tau_pmf(k: u64) -> f64 {
    (0..k).fold(0.5, |p, j| p * pmf_ratio(j))
}

#[inline]
pub(crate) fn pmf_ratio(j: u64) -> f64 {
    (2 * j + 1) as f64 / (2 * j + 4) as f64
}

/// Ratio between consecutive arcsine-series coefficients at x = 1:
/// `(2n+1)^2 / (2 (n+1) (2n+3))`.
#[inline]
fn arcsin_ratio(n: u64) -> f64 {
    let odd = (2 * n + 1) as f64;
    odd * odd / (2.0 * (n + 1) as f64 * (2 * n + 3) as f64)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Which series a [`SeriesState`] walks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeriesTarget {
    /// `1/2 * sum 4^-k C(2k,k) / (2k+1)`, the mean of the head fraction.
    FractionMean,
    /// `sum P(tau = 2k+1) / (2k+1)`, the mean of 1/tau.
    InvTauMean,
    /// `sum 4^-n C(2n,n) x^(2n+1) / (2n+1)`.
    Arcsin(f64),
}

/// One row of a series walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub k: u64,
    pub term: f64,
    pub partial_sum: f64,
}

/// Term-by-term walk of one of the series. Iterating yields the row for the
/// current index and then advances.
#[derive(Debug, Clone)]
pub struct SeriesState {
    k: u64,
    term: f64,
    // pmf[k] for InvTauMean, x^2 for Arcsin
    aux: f64,
    sum: CompensatedSum,
    target: SeriesTarget,
}

impl SeriesState {
    pub fn new(target: SeriesTarget) -> Result<Self> {
        let (term, aux) = match target {
            SeriesTarget::FractionMean => (0.5, 0.0),
            SeriesTarget::InvTauMean => (0.5, 0.5),
            SeriesTarget::Arcsin(x) => {
                if !(-1.0..=1.0).contains(&x) {
                    return Err(Error::ArcsinDomain(x));
                }
                (x, x * x)
            }
        };
        let mut sum = CompensatedSum::new();
        sum.add(term);
        Ok(Self {
            k: 0,
            term,
            aux,
            sum,
            target,
        })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn term(&self) -> f64 {
        self.term
    }

    pub fn partial_sum(&self) -> f64 {
        self.sum.value()
    }

    pub fn target(&self) -> SeriesTarget {
        self.target
    }

    pub fn row(&self) -> SeriesRow {
        SeriesRow {
            k: self.k,
            term: self.term,
            partial_sum: self.partial_sum(),
        }
    }

    /// Moves to index k+1 and folds its term into the partial sum.
    pub fn advance(&mut self) {
        let k = self.k;
        self.term = match self.target {
            SeriesTarget::FractionMean => self.term * arcsin_ratio(k),
            SeriesTarget::InvTauMean => {
                self.aux *= pmf_ratio(k);
                self.aux / (2 * k + 3) as f64
            }
            SeriesTarget::Arcsin(_) => self.term * arcsin_ratio(k) * self.aux,
        };
        self.k += 1;
        self.sum.add(self.term);
    }

    /// Advances until the current index is `k` (no-op if already past it).
    pub fn advance_to(&mut self, k: u64) {
        while self.k < k {
            self.advance();
        }
    }
}

impl Iterator for SeriesState {
    type Item = SeriesRow;

    fn next(&mut self) -> Option<SeriesRow> {
        let row = self.row();
        self.advance();
        Some(row)
    }
}

fn partial_sum(target: SeriesTarget, terms: u64) -> Result<f64> {
    let mut state = SeriesState::new(target)?;
    state.advance_to(terms);
    Ok(state.partial_sum())
}

/// Partial sum through k = `terms` of the series converging to pi/4.
pub fn fraction_mean_truncated(terms: u64) -> f64 {
    partial_sum(SeriesTarget::FractionMean, terms).expect("no domain to violate")
}

/// Partial sum through k = `terms` of the series converging to pi/2 - 1.
pub fn inv_tau_mean_truncated(terms: u64) -> f64 {
    partial_sum(SeriesTarget::InvTauMean, terms).expect("no domain to violate")
}

/// Arcsine Maclaurin series through n = `terms`.
pub fn arcsin_series(x: f64, terms: u64) -> Result<f64> {
    partial_sum(SeriesTarget::Arcsin(x), terms)
}

/// Upper bound on `pi/4 - fraction_mean_truncated(terms)`.
///
/// Uses `C(2k,k)/4^k <= 1/sqrt(pi k)` and bounds the tail sum by the
/// integral of `k^{-3/2} / (4 sqrt(pi))`, giving `1 / (2 sqrt(pi K))`.
pub fn fraction_tail_bound(terms: u64) -> Result<f64> {
    if terms == 0 {
        return Err(Error::TailBoundNeedsPositiveK);
    }
    Ok(0.5 / (PI * terms as f64).sqrt())
}

/// Upper bound on `(pi/2 - 1) - inv_tau_mean_truncated(terms)`: `1 / (6 sqrt(pi) K^{3/2})`.
pub fn inv_tau_tail_bound(terms: u64) -> Result<f64> {
    if terms == 0 {
        return Err(Error::TailBoundNeedsPositiveK);
    }
    let k = terms as f64;
    Ok(1.0 / (6.0 * PI.sqrt() * k * k.sqrt()))
}

/// Upper bound on `|arcsin(x) - arcsin_series(x, terms)|`.
///
/// For |x| < 1 the remainder is dominated by a geometric series starting at
/// n = K+1; at |x| = 1 it is twice [`fraction_tail_bound`].
pub fn arcsin_tail_bound(x: f64, terms: u64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::ArcsinDomain(x));
    }
    let ax = x.abs();
    if ax == 1.0 {
        return Ok(2.0 * fraction_tail_bound(terms)?);
    }
    let n = terms + 1;
    let coeff = (1.0 / (PI * n as f64).sqrt()).min(1.0);
    let power = ax.powf((2 * n + 1) as f64);
    Ok(coeff * power / ((2 * n + 1) as f64 * (1.0 - ax * ax)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn catalan_small_values() {
        let want = [1u32, 1, 2, 5, 14, 42, 132, 429, 1430, 4862, 16796];
        for (k, &c) in want.iter().enumerate() {
            assert_eq!(catalan(k as u64), BigUint::from(c), "k={k}");
        }
    }

    #[test]
    fn catalan_matches_multiplicative_recurrence() {
        // C_{k+1} = C_k * 2(2k+1) / (k+2)
        let mut c = BigUint::from(1u32);
        for k in 0..60u64 {
            assert_eq!(catalan(k), c);
            c = c * BigUint::from(2 * (2 * k + 1)) / BigUint::from(k + 2);
        }
    }

    #[test]
    fn pmf_first_values() {
        assert_eq!(tau_pmf(0), 0.5);
        assert_eq!(tau_pmf(1), 0.125);
        assert_eq!(tau_pmf(2), 0.0625);
        assert_eq!(tau_pmf(3), 5.0 / 128.0);
    }

    #[test]
    fn fraction_series_examples() {
        assert_eq!(fraction_mean_truncated(0), 0.5);
        assert_close(fraction_mean_truncated(1), 0.5 + 1.0 / 12.0, 1e-15);
        assert_close(fraction_mean_truncated(2), 0.5 + 1.0 / 12.0 + 3.0 / 80.0, 1e-15);
    }

    #[test]
    fn inv_tau_series_examples() {
        assert_eq!(inv_tau_mean_truncated(0), 0.5);
        assert_close(inv_tau_mean_truncated(1), 0.5 + 1.0 / 24.0, 1e-15);
        // pmf(2)/5 = 1/80
        assert_close(inv_tau_mean_truncated(2), 0.5 + 1.0 / 24.0 + 1.0 / 80.0, 1e-15);
    }

    #[test]
    fn term_identity_with_pmf() {
        // k-th summand of the fraction series is pmf(k) * (k+1)/(2k+1)
        let state = SeriesState::new(SeriesTarget::FractionMean).unwrap();
        for row in state.take(200) {
            let k = row.k;
            let via_pmf = tau_pmf(k) * (k + 1) as f64 / (2 * k + 1) as f64;
            assert!((row.term - via_pmf).abs() <= 1e-14 * via_pmf, "k={k}");
        }
    }

    #[test]
    fn partial_sums_increase_below_limits() {
        let mut prev_f = 0.0;
        let mut prev_i = 0.0;
        for k in [0u64, 1, 2, 5, 10, 100, 1000, 20_000] {
            let f = fraction_mean_truncated(k);
            let i = inv_tau_mean_truncated(k);
            assert!(f > prev_f && f < FRACTION_MEAN_LIMIT);
            assert!(i > prev_i && i < INV_TAU_MEAN_LIMIT);
            prev_f = f;
            prev_i = i;
        }
    }

    #[test]
    fn arcsin_examples() {
        for k in [0, 5, 50] {
            assert_eq!(arcsin_series(0.0, k).unwrap(), 0.0);
        }
        assert_close(arcsin_series(0.5, 30).unwrap(), PI / 6.0, 1e-12);
        assert_close(arcsin_series(-0.5, 30).unwrap(), -PI / 6.0, 1e-12);
        assert_close(arcsin_series(0.9, 400).unwrap(), 0.9f64.asin(), 1e-13);
        assert_eq!(arcsin_series(1.5, 3), Err(Error::ArcsinDomain(1.5)));
        assert!(arcsin_series(f64::NAN, 3).is_err());
    }

    #[test]
    fn arcsin_at_one_is_twice_fraction_series() {
        for k in [0u64, 1, 10, 1000, 5000] {
            assert_eq!(arcsin_series(1.0, k).unwrap(), 2.0 * fraction_mean_truncated(k));
        }
    }

    #[test]
    fn tail_bound_holds_and_scales() {
        assert_eq!(fraction_tail_bound(0), Err(Error::TailBoundNeedsPositiveK));
        let b100 = fraction_tail_bound(100).unwrap();
        assert_close(b100, 0.028209, 1e-6);
        assert!(FRACTION_MEAN_LIMIT - fraction_mean_truncated(100) <= b100);
        let b1e4 = fraction_tail_bound(10_000).unwrap();
        assert_close(b1e4, 0.0028209, 1e-7);
        assert!(FRACTION_MEAN_LIMIT - fraction_mean_truncated(10_000) <= b1e4);
        for k in [1u64, 3, 17, 1000] {
            let ratio = fraction_tail_bound(4 * k).unwrap() / fraction_tail_bound(k).unwrap();
            assert_close(ratio, 0.5, 1e-15);
        }
    }

    #[test]
    fn other_tail_bounds_hold() {
        for k in [1u64, 2, 10, 100, 1000] {
            let r = INV_TAU_MEAN_LIMIT - inv_tau_mean_truncated(k);
            assert!(r <= inv_tau_tail_bound(k).unwrap(), "k={k}");
            for x in [0.3, -0.7, 0.99] {
                let r = (f64::asin(x) - arcsin_series(x, k).unwrap()).abs();
                assert!(r <= arcsin_tail_bound(x, k).unwrap() + 1e-15, "x={x} k={k}");
            }
        }
    }
}
