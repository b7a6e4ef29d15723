//! Exhaustive enumeration of coin sequences: the exact ground truth for the
//! first-passage counts and the truncated expectations.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Serialize, Serializer};

use crate::analytics::{self, exact, TauTable};
use crate::error::{Error, Result};

/// Longest sequence length the enumerators accept.
pub const MAX_ENUM_LEN: u32 = 25;

/// Float agreement required between oracle rationals and the analytic sums.
pub const FLOAT_TOLERANCE: f64 = 1e-13;

fn check_len(max_len: u32) -> Result<()> {
    if max_len.is_multiple_of(2) || max_len > MAX_ENUM_LEN {
        return Err(Error::InvalidEnumerationLength(max_len));
    }
    Ok(())
}

/// Exact statistics of all first-passage paths of length at most `max_len`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub max_len: u32,
    /// k -> number of first-passage paths of length 2k+1
    pub counts: BTreeMap<u64, BigUint>,
    pub truncated_fraction_mean: BigRational,
    pub truncated_inv_tau_mean: BigRational,
    pub mass_accounted: BigRational,
}

impl OracleReport {
    fn from_counts(max_len: u32, counts: BTreeMap<u64, BigUint>) -> Self {
        let mut fraction_mean = BigRational::zero();
        let mut inv_tau_mean = BigRational::zero();
        let mut mass = BigRational::zero();
        for (&k, count) in &counts {
            let p = path_probability(k, count);
            let tau = BigInt::from(2 * k + 1);
            fraction_mean += &p * BigInt::from(k + 1) / &tau;
            inv_tau_mean += &p / &tau;
            mass += p;
        }
        Self {
            max_len,
            counts,
            truncated_fraction_mean: fraction_mean,
            truncated_inv_tau_mean: inv_tau_mean,
            mass_accounted: mass,
        }
    }

    /// Largest k covered, `(max_len - 1) / 2`.
    pub fn max_k(&self) -> u64 {
        u64::from(self.max_len - 1) / 2
    }

    /// `count_k / 2^(2k+1)`.
    pub fn probability(&self, k: u64) -> Option<BigRational> {
        self.counts.get(&k).map(|c| path_probability(k, c))
    }
}

fn path_probability(k: u64, count: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(count.clone()), BigInt::one() << (2 * k + 1))
}

fn rational_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

struct Counts<'a>(&'a BTreeMap<u64, BigUint>);

impl Serialize for Counts<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, c) in self.0 {
            map.serialize_entry(&k.to_string(), &c.to_string())?;
        }
        map.end()
    }
}

impl Serialize for OracleReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("OracleReport", 5)?;
        st.serialize_field("max_len", &self.max_len)?;
        st.serialize_field("counts", &Counts(&self.counts))?;
        st.serialize_field(
            "truncated_fraction_mean",
            &rational_string(&self.truncated_fraction_mean),
        )?;
        st.serialize_field(
            "truncated_inv_tau_mean",
            &rational_string(&self.truncated_inv_tau_mean),
        )?;
        st.serialize_field("mass_accounted", &rational_string(&self.mass_accounted))?;
        st.end()
    }
}

/// Calls `visit` with every first-passage path of length at most `max_len`
/// (`true` = heads), descending the prefix tree and cutting each branch at
/// its first passage.
pub fn for_each_first_passage_path(max_len: u32, mut visit: impl FnMut(&[bool])) -> Result<()> {
    check_len(max_len)?;
    fn descend(path: &mut Vec<bool>, s: i32, max_len: usize, visit: &mut dyn FnMut(&[bool])) {
        for heads in [false, true] {
            path.push(heads);
            let next = s + if heads { 1 } else { -1 };
            if next > 0 {
                visit(path);
            } else if path.len() < max_len {
                descend(path, next, max_len, visit);
            }
            path.pop();
        }
    }
    let mut path = Vec::with_capacity(max_len as usize);
    descend(&mut path, 0, max_len as usize, &mut visit);
    Ok(())
}

fn empty_counts(max_len: u32) -> BTreeMap<u64, BigUint> {
    (0..=u64::from(max_len - 1) / 2)
        .map(|k| (k, BigUint::zero()))
        .collect()
}

/// Prefix-tree enumeration with pruning at first passage.
pub fn enumerate_first_passage(max_len: u32) -> Result<OracleReport> {
    check_len(max_len)?;
    let mut tally = vec![0u64; (max_len as usize - 1) / 2 + 1];
    for_each_first_passage_path(max_len, |path| tally[path.len() / 2] += 1)?;
    let mut counts = empty_counts(max_len);
    for (k, n) in tally.into_iter().enumerate() {
        counts.insert(k as u64, BigUint::from(n));
    }
    Ok(OracleReport::from_counts(max_len, counts))
}

/// Scans all `2^max_len` sequences and classifies each by its first
/// passage. A path of length n is the prefix of `2^(max_len - n)` full
/// sequences, which is divided back out.
pub fn enumerate_brute_force(max_len: u32) -> Result<OracleReport> {
    check_len(max_len)?;
    let len = max_len as usize;
    let mut hits = vec![0u64; len + 1];
    for seq in 0u64..(1u64 << len) {
        let mut s = 0i32;
        for i in 0..len {
            s += if (seq >> i) & 1 == 1 { 1 } else { -1 };
            if s > 0 {
                hits[i + 1] += 1;
                break;
            }
        }
    }
    let mut counts = empty_counts(max_len);
    for (n, &h) in hits.iter().enumerate() {
        if h == 0 {
            continue;
        }
        assert!(n % 2 == 1, "first passage at even length {n}");
        let extensions = 1u64 << (len - n);
        assert_eq!(h % extensions, 0);
        counts.insert((n / 2) as u64, BigUint::from(h / extensions));
    }
    Ok(OracleReport::from_counts(max_len, counts))
}

/// Per-k cross-check between enumeration and the closed forms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KResidual {
    pub k: u64,
    pub count: String,
    pub catalan_matches: bool,
    pub probability_matches: bool,
    pub pmf_float_residual: f64,
}

/// Result of [`oracle_vs_analytics`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleComparison {
    pub max_len: u32,
    pub terms: u64,
    pub per_k: Vec<KResidual>,
    pub fraction_mean_exact_match: bool,
    pub fraction_mean_float_residual: f64,
    pub inv_tau_mean_exact_match: bool,
    pub inv_tau_mean_float_residual: f64,
    pub mass_exact_match: bool,
    pub passed: bool,
}

/// Compares an enumeration at `max_len` with the analytic side at
/// K = (max_len - 1)/2: exact rational equality everywhere, and
/// [`FLOAT_TOLERANCE`] against the floating-point sums.
pub fn oracle_vs_analytics(max_len: u32) -> Result<(OracleReport, OracleComparison)> {
    let report = enumerate_first_passage(max_len)?;
    let terms = report.max_k();
    let table = TauTable::with_len(terms as usize + 1);

    let per_k: Vec<KResidual> = report
        .counts
        .iter()
        .map(|(&k, count)| {
            let p = path_probability(k, count);
            let p_float = p.to_f64().unwrap_or(f64::NAN);
            KResidual {
                k,
                count: count.to_string(),
                catalan_matches: *count == analytics::catalan(k),
                probability_matches: p == exact::tau_pmf_closed_form(k),
                pmf_float_residual: (p_float - table.pmf(k).unwrap()).abs(),
            }
        })
        .collect();

    let float_residual =
        |r: &BigRational, x: f64| (r.to_f64().unwrap_or(f64::NAN) - x).abs();
    let fraction_mean_exact_match =
        report.truncated_fraction_mean == exact::fraction_mean_truncated(terms);
    let fraction_mean_float_residual = float_residual(
        &report.truncated_fraction_mean,
        analytics::fraction_mean_truncated(terms),
    );
    let inv_tau_mean_exact_match =
        report.truncated_inv_tau_mean == exact::inv_tau_mean_truncated(terms);
    let inv_tau_mean_float_residual = float_residual(
        &report.truncated_inv_tau_mean,
        analytics::inv_tau_mean_truncated(terms),
    );
    let mass_exact_match = report.mass_accounted == exact::pmf_mass(terms)
        && report.mass_accounted == BigRational::one() - exact::tau_tail_closed_form(terms)
        && report.mass_accounted < BigRational::one();

    let passed = per_k.iter().all(|r| {
        r.catalan_matches && r.probability_matches && r.pmf_float_residual <= FLOAT_TOLERANCE
    }) && fraction_mean_exact_match
        && inv_tau_mean_exact_match
        && mass_exact_match
        && fraction_mean_float_residual <= FLOAT_TOLERANCE
        && inv_tau_mean_float_residual <= FLOAT_TOLERANCE;

    let comparison = OracleComparison {
        max_len,
        terms,
        per_k,
        fraction_mean_exact_match,
        fraction_mean_float_residual,
        inv_tau_mean_exact_match,
        inv_tau_mean_float_residual,
        mass_exact_match,
        passed,
    };
    Ok((report, comparison))
}
