use std::f64::consts::PI;

use super::{pmf_ratio, CompensatedSum};
use crate::error::{Error, Result};

/// Largest index the direct sampler reports. Past 2^53 neighbouring indices
/// are no longer distinguishable in double precision.
pub const MAX_DIRECT_K: u64 = 1 << 53;

/// `C(2n, n) / 4^n` from its large-n expansion.
///
/// Relative error is below 2e-18 for n >= 1000; callers stay above
/// [`TauTable::MIN_LEN`] where the expansion is used.
pub fn central_binomial_asymptotic(n: u64) -> f64 {
    let x = n as f64;
    let inv = 1.0 / x;
    let series = 1.0
        + inv * (-1.0 / 8.0 + inv * (1.0 / 128.0 + inv * (5.0 / 1024.0 + inv * (-21.0 / 32768.0))));
    series / (PI * x).sqrt()
}

/// Cached pmf and cdf of the stopping time, indexed by k where tau = 2k+1.
#[derive(Debug, Clone)]
pub struct TauTable {
    pmf: Vec<f64>,
    cdf: Vec<f64>,
    acc: CompensatedSum,
}

impl Default for TauTable {
    fn default() -> Self {
        Self::standard()
    }
}

impl TauTable {
    /// Below this length the tail past the table is not handed to the
    /// asymptotic expansion.
    pub const MIN_LEN: usize = 1 << 10;
    /// Length used by every simulation path, so direct-method draws do not
    /// depend on how far some earlier caller extended a table.
    pub const STANDARD_LEN: usize = 1 << 16;
    /// On-demand extension stops here.
    pub const MAX_LEN: usize = 1 << 20;

    pub fn standard() -> Self {
        Self::with_len(Self::STANDARD_LEN)
    }

    /// Table holding at least `len` entries (never fewer than [`Self::MIN_LEN`]).
    pub fn with_len(len: usize) -> Self {
        let mut t = Self {
            pmf: Vec::new(),
            cdf: Vec::new(),
            acc: CompensatedSum::new(),
        };
        t.grow_to(len.max(Self::MIN_LEN));
        t
    }

    fn grow_to(&mut self, len: usize) {
        self.pmf.reserve(len.saturating_sub(self.pmf.len()));
        self.cdf.reserve(len.saturating_sub(self.cdf.len()));
        while self.pmf.len() < len {
            let p = match self.pmf.last() {
                None => 0.5,
                Some(&prev) => prev * pmf_ratio(self.pmf.len() as u64 - 1),
            };
            self.acc.add(p);
            self.pmf.push(p);
            self.cdf.push(self.acc.value());
        }
    }

    /// Makes index `k` available.
    pub fn extend_to(&mut self, k: u64) {
        let want = usize::try_from(k).expect("index fits in memory") + 1;
        if want > self.pmf.len() {
            self.grow_to(want.max(self.pmf.len() * 2));
        }
    }

    pub fn len(&self) -> usize {
        self.pmf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pmf.is_empty()
    }

    pub fn pmf(&self, k: u64) -> Option<f64> {
        self.pmf.get(usize::try_from(k).ok()?).copied()
    }

    pub fn cdf(&self, k: u64) -> Option<f64> {
        self.cdf.get(usize::try_from(k).ok()?).copied()
    }

    /// `P(tau > 2k+1) = 1 - cdf[k]`.
    pub fn tail(&self, k: u64) -> Option<f64> {
        self.cdf(k).map(|c| 1.0 - c)
    }

    pub fn pmf_values(&self) -> &[f64] {
        &self.pmf
    }

    pub fn cdf_values(&self) -> &[f64] {
        &self.cdf
    }

    /// Smallest k with `u < CDF(k)`, without growing the table.
    ///
    /// Past the table, `CDF(k) = 1 - C(2k+2, k+1)/4^(k+1)` is inverted by
    /// bisection on the asymptotic form. Results are capped at [`MAX_DIRECT_K`].
    pub fn quantile(&self, u: f64) -> Result<u64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::UniformOutOfRange(u));
        }
        let idx = self.cdf.partition_point(|&c| c <= u);
        if idx < self.cdf.len() {
            return Ok(idx as u64);
        }
        // u >= 1/2 here, so 1 - u is exact.
        let v = 1.0 - u;
        let mut lo = self.cdf.len() as u64 + 1;
        let mut hi = MAX_DIRECT_K + 1;
        if central_binomial_asymptotic(hi) >= v {
            return Ok(MAX_DIRECT_K);
        }
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if central_binomial_asymptotic(mid) < v {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(lo - 1)
    }
}

/// Inverse-cdf draw of k (tau = 2k+1) from a uniform `u`, growing the table
/// up to [`TauTable::MAX_LEN`] when `u` falls past its end.
pub fn sample_tau_direct(u: f64, table: &mut TauTable) -> Result<u64> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::UniformOutOfRange(u));
    }
    while table.cdf.last().is_some_and(|&c| c <= u) && table.len() < TauTable::MAX_LEN {
        let next = (table.len() * 2).min(TauTable::MAX_LEN);
        table.grow_to(next);
    }
    table.quantile(u)
}

/// `P(tau > 2k+1)`, extending the table through k if needed.
pub fn tau_tail(k: u64, table: &mut TauTable) -> f64 {
    table.extend_to(k);
    table.tail(k).expect("extended through k")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_starts_from_closed_form() {
        let t = TauTable::with_len(0);
        assert_eq!(t.len(), TauTable::MIN_LEN);
        assert_eq!(t.pmf(0), Some(0.5));
        assert_eq!(t.pmf(1), Some(0.125));
        assert_eq!(t.cdf(1), Some(0.625));
        assert_eq!(t.cdf(2), Some(0.6875));
    }

    #[test]
    fn cdf_strictly_increasing_below_one() {
        let t = TauTable::standard();
        for w in t.cdf_values().windows(2) {
            assert!(w[1] > w[0]);
        }
        let last = *t.cdf_values().last().unwrap();
        assert!(last < 1.0);
    }

    #[test]
    fn tail_examples() {
        let mut t = TauTable::with_len(0);
        assert_eq!(tau_tail(0, &mut t), 0.5);
        assert_eq!(tau_tail(1, &mut t), 0.375);
        assert_eq!(tau_tail(2, &mut t), 0.3125);
        let before = t.len();
        let far = tau_tail(before as u64 + 10, &mut t);
        assert!(t.len() > before && far > 0.0);
    }

    #[test]
    fn tail_matches_central_binomial() {
        // P(tau > 2k+1) = C(2k+2, k+1) / 4^(k+1)
        let t = TauTable::with_len(4000);
        let mut c = 1.0f64;
        for k in 0..4000u64 {
            let n = k + 1;
            c *= (2 * n - 1) as f64 / (2 * n) as f64;
            let tail = t.tail(k).unwrap();
            assert!((tail - c).abs() <= 1e-14, "k={k}");
        }
    }

    #[test]
    fn sampler_boundaries() {
        let mut t = TauTable::with_len(0);
        assert_eq!(sample_tau_direct(0.0, &mut t), Ok(0));
        assert_eq!(sample_tau_direct(0.49, &mut t), Ok(0));
        assert_eq!(sample_tau_direct(0.5, &mut t), Ok(1));
        assert_eq!(sample_tau_direct(0.625, &mut t), Ok(2));
        assert_eq!(sample_tau_direct(0.63, &mut t), Ok(2));
        assert_eq!(sample_tau_direct(1.0, &mut t), Err(Error::UniformOutOfRange(1.0)));
        assert!(sample_tau_direct(-0.1, &mut t).is_err());
        assert!(sample_tau_direct(f64::NAN, &mut t).is_err());
    }

    #[test]
    fn sampler_grows_table_then_falls_back() {
        let mut t = TauTable::with_len(0);
        let u = *TauTable::with_len(5000).cdf_values().last().unwrap();
        let k = sample_tau_direct(u, &mut t).unwrap();
        assert!(t.len() >= 5000);
        assert!(k >= 4999);
        // beyond MAX_LEN the asymptotic branch answers
        let u = 1.0 - 1e-6;
        let v = 1.0 - u;
        let k = sample_tau_direct(u, &mut t).unwrap();
        assert_eq!(t.len(), TauTable::MAX_LEN);
        assert!(central_binomial_asymptotic(k + 1) < v);
        assert!(central_binomial_asymptotic(k) >= v);
        let top = sample_tau_direct(1.0 - f64::EPSILON / 2.0, &mut t).unwrap();
        assert_eq!(top, MAX_DIRECT_K);
    }

    #[test]
    fn asymptotic_branch_agrees_with_table() {
        // A short table with the fallback must reproduce a long table's answers.
        let short = TauTable::with_len(TauTable::MIN_LEN);
        let long = TauTable::with_len(1 << 15);
        let mut mismatches = 0;
        for i in 0..20_000 {
            let u = 0.9826 + 0.0173 * (i as f64 + 0.5) / 20_000.0;
            if short.quantile(u).unwrap() != long.quantile(u).unwrap() {
                mismatches += 1;
            }
        }
        assert_eq!(mismatches, 0);
    }

    #[test]
    fn asymptotic_matches_recurrence() {
        let mut c = 1.0f64;
        for n in 1..=20_000u64 {
            c *= (2 * n - 1) as f64 / (2 * n) as f64;
            if n >= 1000 {
                let a = central_binomial_asymptotic(n);
                assert!((a - c).abs() <= 1e-12 * c, "n={n}");
            }
        }
    }
}
