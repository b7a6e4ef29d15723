//! Exact rational versions of the analytic quantities, built from the same
//! closed forms and term recurrences as the floating-point side.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::catalan;

fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn pow4(k: u64) -> BigInt {
    BigInt::from(1u8) << (2 * k)
}

fn central_binomial(n: u64) -> BigInt {
    let c: BigUint = num_integer::binomial(BigUint::from(2 * n), BigUint::from(n));
    BigInt::from(c)
}

/// `C(2k,k) / (2 * 4^k * (k+1))` evaluated directly from the binomial.
pub fn tau_pmf_closed_form(k: u64) -> BigRational {
    BigRational::new(central_binomial(k), pow4(k) * BigInt::from(2 * (k + 1)))
}

/// `catalan(k) / 2^(2k+1)`: Catalan path count times the per-path probability.
pub fn tau_pmf_from_catalan(k: u64) -> BigRational {
    BigRational::new(BigInt::from(catalan(k)), BigInt::from(1u8) << (2 * k + 1))
}

/// `P(tau > 2k+1) = C(2k+2, k+1) / 4^(k+1)`.
pub fn tau_tail_closed_form(k: u64) -> BigRational {
    BigRational::new(central_binomial(k + 1), pow4(k + 1))
}

/// Exact partial sum through `terms` of the pi/4 series, via the term
/// recurrence `t[k+1] = t[k] (2k+1)^2 / (2 (k+1)(2k+3))`.
pub fn fraction_mean_truncated(terms: u64) -> BigRational {
    let mut term = ratio(1, 2);
    let mut sum = term.clone();
    for k in 0..terms {
        let odd = 2 * k + 1;
        term *= ratio(odd * odd, 2 * (k + 1) * (2 * k + 3));
        sum += &term;
    }
    sum
}

/// Exact partial sum through `terms` of `sum pmf(k) / (2k+1)`.
pub fn inv_tau_mean_truncated(terms: u64) -> BigRational {
    let mut pmf = ratio(1, 2);
    let mut sum = pmf.clone();
    for k in 0..terms {
        pmf *= ratio(2 * k + 1, 2 * k + 4);
        sum += &pmf / BigInt::from(2 * k + 3);
    }
    sum
}

/// Exact `sum_{k <= terms} pmf(k)` via the pmf recurrence.
pub fn pmf_mass(terms: u64) -> BigRational {
    let mut pmf = ratio(1, 2);
    let mut sum = pmf.clone();
    for k in 0..terms {
        pmf *= ratio(2 * k + 1, 2 * k + 4);
        sum += &pmf;
    }
    sum
}

pub fn is_probability(r: &BigRational) -> bool {
    r > &BigRational::zero() && r <= &BigRational::one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics;
    use num_traits::ToPrimitive;

    #[test]
    fn pmf_routes_agree() {
        for k in 0..40 {
            assert_eq!(tau_pmf_closed_form(k), tau_pmf_from_catalan(k), "k={k}");
            assert!(is_probability(&tau_pmf_closed_form(k)));
        }
    }

    #[test]
    fn float_pmf_matches_exact() {
        for k in 0..=30u64 {
            let exact = tau_pmf_closed_form(k).to_f64().unwrap();
            let rel = (analytics::tau_pmf(k) - exact).abs() / exact;
            assert!(rel <= 1e-14, "k={k} rel={rel}");
        }
    }

    #[test]
    fn mass_plus_tail_is_one() {
        for k in 0..60 {
            assert_eq!(pmf_mass(k) + tau_tail_closed_form(k), BigRational::one());
        }
    }

    #[test]
    fn small_partial_sums() {
        assert_eq!(fraction_mean_truncated(0), ratio(1, 2));
        assert_eq!(fraction_mean_truncated(2), ratio(1, 2) + ratio(1, 12) + ratio(3, 80));
        assert_eq!(inv_tau_mean_truncated(1), ratio(1, 2) + ratio(1, 24));
    }
}
