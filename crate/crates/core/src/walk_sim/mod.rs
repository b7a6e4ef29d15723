//! Trial generators for the stopping rule "toss until heads lead".
//!
//! Two routes produce the same distribution: [`run_trial_walk`] tosses
//! coins one by one, [`run_trial_direct`] draws tau from its pmf and reads
//! the head count off it.

use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::analytics::TauTable;
use crate::error::{Error, Result};

mod bits;
mod buffon;

pub use bits::{BitStream, ScriptedFlips};
pub use buffon::{buffon_trial, Needle, NeedleDrop};

/// Default step cap for the walk route, 2^24 - 1 flips.
pub const DEFAULT_CAP: u64 = (1 << 24) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// toss coins until heads lead
    Walk,
    /// sample the stopping time from its distribution
    Direct,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Walk => "walk",
            Method::Direct => "direct",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one run of the stopping rule.
///
/// For a completed trial `tau` is the stopping time and `heads = (tau+1)/2`.
/// A censored trial stopped at the cap with the walk still at or below zero;
/// its `tau` is the number of flips tossed and `heads` what was seen so far.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    pub tau: u64,
    pub heads: u64,
    pub censored: bool,
    pub flips_consumed: u64,
}

impl Trial {
    pub fn completed(tau: u64) -> Self {
        debug_assert!(tau % 2 == 1);
        Self {
            tau,
            heads: tau / 2 + 1,
            censored: false,
            flips_consumed: tau,
        }
    }

    /// Head fraction `heads / tau`, or `None` for a censored trial.
    pub fn fraction(&self) -> Option<f64> {
        (!self.censored).then(|| self.heads as f64 / self.tau as f64)
    }

    /// `(heads, tau)` for a completed trial.
    pub fn fraction_parts(&self) -> Option<(u64, u64)> {
        (!self.censored).then_some((self.heads, self.tau))
    }

    /// k with tau = 2k+1.
    pub fn k(&self) -> Option<u64> {
        (!self.censored).then_some(self.tau / 2)
    }
}

// Per-byte walk summaries (bits read LSB first, set bit = +1):
// net displacement and highest prefix displacement.
const fn byte_tables() -> ([i8; 256], [i8; 256]) {
    let mut sum = [0i8; 256];
    let mut peak = [0i8; 256];
    let mut b = 0;
    while b < 256 {
        let mut s = 0i8;
        let mut m = i8::MIN;
        let mut i = 0;
        while i < 8 {
            s += if (b >> i) & 1 == 1 { 1 } else { -1 };
            if s > m {
                m = s;
            }
            i += 1;
        }
        sum[b] = s;
        peak[b] = m;
        b += 1;
    }
    (sum, peak)
}

const BYTE_TABLES: ([i8; 256], [i8; 256]) = byte_tables();
const BYTE_SUM: [i8; 256] = BYTE_TABLES.0;
const BYTE_PEAK: [i8; 256] = BYTE_TABLES.1;

#[inline]
fn low_mask(n: u32) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Tosses coins from `bits` until heads lead tails, or until `cap` tosses.
///
/// The result is the same as stepping S_n = H_n - T_n one flip at a time and
/// stopping at the first n with S_n > 0. Blocks of flips that cannot lift the
/// walk above zero are consumed in one step; exactly `flips_consumed` bits
/// are taken from the stream.
pub fn run_trial_walk<R: RngCore>(bits: &mut BitStream<R>, cap: u64) -> Result<Trial> {
    if cap == 0 {
        return Err(Error::InvalidCap);
    }
    let mut s: i64 = 0;
    let mut n: u64 = 0;
    while n < cap {
        let (word, avail) = bits.buffered();
        let block = (cap - n).min(u64::from(avail)) as u32;
        if s + i64::from(block) <= 0 {
            let ones = (word & low_mask(block)).count_ones();
            s += 2 * i64::from(ones) - i64::from(block);
            n += u64::from(block);
            bits.skip(block);
            continue;
        }
        if block >= 8 {
            let byte = (word & 0xff) as usize;
            if s + i64::from(BYTE_PEAK[byte]) <= 0 {
                s += i64::from(BYTE_SUM[byte]);
                n += 8;
                bits.skip(8);
                continue;
            }
        }
        bits.skip(1);
        n += 1;
        s += if word & 1 == 1 { 1 } else { -1 };
        if s > 0 {
            return Ok(Trial::completed(n));
        }
    }
    let heads = ((cap as i64 + s) / 2) as u64;
    Ok(Trial {
        tau: cap,
        heads,
        censored: true,
        flips_consumed: cap,
    })
}

/// Draws one 53-bit uniform from `bits` and maps it to a completed trial
/// through the inverse cdf of tau.
pub fn run_trial_direct<R: RngCore>(bits: &mut BitStream<R>, table: &TauTable) -> Trial {
    let u = bits.uniform53();
    let k = table.quantile(u).expect("uniform53 lies in [0, 1)");
    Trial::completed(2 * k + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_core::RngCore;

    // Reference stepper: one flip per iteration, no block skipping.
    fn walk_bitwise<R: RngCore>(bits: &mut BitStream<R>, cap: u64) -> Trial {
        let mut s = 0i64;
        let mut heads = 0u64;
        for n in 1..=cap {
            if bits.next_bit() {
                s += 1;
                heads += 1;
            } else {
                s -= 1;
            }
            if s > 0 {
                return Trial {
                    tau: n,
                    heads,
                    censored: false,
                    flips_consumed: n,
                };
            }
        }
        Trial {
            tau: cap,
            heads,
            censored: true,
            flips_consumed: cap,
        }
    }

    fn walk(letters: &str, cap: u64) -> Trial {
        run_trial_walk(&mut ScriptedFlips::from_letters(letters).into_stream(), cap).unwrap()
    }

    #[test]
    fn stopping_rule_examples() {
        let t = walk("THTHH", 100);
        assert_eq!((t.tau, t.heads, t.censored), (5, 3, false));
        assert_eq!(t.fraction_parts(), Some((3, 5)));
        assert_eq!(t.fraction(), Some(0.6));

        let t = walk("H", 100);
        assert_eq!((t.tau, t.heads), (1, 1));
        assert_eq!(t.fraction(), Some(1.0));

        let t = walk("TTHHH", 100);
        assert_eq!((t.tau, t.heads, t.flips_consumed), (5, 3, 5));
    }

    #[test]
    fn cap_censors() {
        let t = walk("THTHTHTH", 4);
        assert!(t.censored);
        assert_eq!(t.flips_consumed, 4);
        assert_eq!(t.heads, 2);
        assert_eq!(t.fraction(), None);
        let mut bits = ScriptedFlips::from_letters("H").into_stream();
        assert_eq!(run_trial_walk(&mut bits, 0), Err(Error::InvalidCap));
    }

    #[test]
    fn consecutive_trials_share_the_stream() {
        let mut bits = ScriptedFlips::from_letters("H THH TTHHH").into_stream();
        let taus: Vec<u64> = (0..3).map(|_| run_trial_walk(&mut bits, 99).unwrap().tau).collect();
        assert_eq!(taus, [1, 3, 5]);
        assert_eq!(bits.bits_consumed(), 9);
    }

    #[test]
    fn direct_route_examples() {
        let table = TauTable::standard();
        // first 53 bits all tails -> u = 0 -> k = 0
        let mut zeros = ScriptedFlips::new(&[]).into_stream();
        let t = run_trial_direct(&mut zeros, &table);
        assert_eq!((t.tau, t.heads, t.fraction()), (1, 1, Some(1.0)));
        assert_eq!(zeros.bits_consumed(), 53);

        // u just above 0.63 -> k = 2
        let mantissa = (0.63 * (1u64 << 53) as f64) as u64;
        let flips: Vec<bool> = (0..53).map(|i| (mantissa >> i) & 1 == 1).collect();
        let mut bits = ScriptedFlips::new(&flips).into_stream();
        let t = run_trial_direct(&mut bits, &table);
        assert_eq!((t.tau, t.heads), (5, 3));
        assert_eq!(t.fraction(), Some(0.6));
    }

    #[test]
    fn direct_route_hits_tau_one_half_the_time() {
        let table = TauTable::standard();
        let mut bits = BitStream::substream(11, 0);
        let n = 200_000;
        let ones = (0..n)
            .filter(|_| run_trial_direct(&mut bits, &table).tau == 1)
            .count();
        let freq = ones as f64 / n as f64;
        // 4 sigma of a fair Bernoulli at n = 2e5
        assert!((freq - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt(), "freq {freq}");
    }

    #[test]
    fn walk_matches_bitwise_on_long_runs() {
        let mut fast = BitStream::substream(5, 9);
        let mut slow = BitStream::substream(5, 9);
        for _ in 0..2_000 {
            let a = run_trial_walk(&mut fast, 1 << 16).unwrap();
            let b = walk_bitwise(&mut slow, 1 << 16);
            assert_eq!(a, b);
        }
        assert_eq!(fast.bits_consumed(), slow.bits_consumed());
    }

    proptest! {
        #[test]
        fn walk_matches_bitwise(seed in any::<u64>(), cap in 1u64..5_000, trials in 1usize..40) {
            let mut fast = BitStream::substream(seed, 1);
            let mut slow = BitStream::substream(seed, 1);
            for _ in 0..trials {
                let a = run_trial_walk(&mut fast, cap).unwrap();
                let b = walk_bitwise(&mut slow, cap);
                prop_assert_eq!(a, b);
            }
            prop_assert_eq!(fast.bits_consumed(), slow.bits_consumed());
        }

        #[test]
        fn completed_trials_obey_ballot_shape(flips in prop::collection::vec(any::<bool>(), 1..300)) {
            let mut bits = ScriptedFlips::new(&flips).into_stream();
            let t = run_trial_walk(&mut bits, flips.len() as u64).unwrap();
            if t.censored {
                let mut s = 0i64;
                for &f in &flips {
                    s += if f { 1 } else { -1 };
                    prop_assert!(s <= 0);
                }
            } else {
                prop_assert_eq!(t.tau % 2, 1);
                prop_assert_eq!(t.heads, t.tau.div_ceil(2));
                let frac = t.fraction().unwrap();
                prop_assert!(frac > 0.5 && frac <= 1.0);
                prop_assert_eq!(frac == 1.0, t.tau == 1);
                let path = &flips[..t.tau as usize];
                let mut s = 0i64;
                for (i, &f) in path.iter().enumerate() {
                    s += if f { 1 } else { -1 };
                    if i + 1 < path.len() {
                        prop_assert!(s <= 0);
                    }
                }
                prop_assert_eq!(s, 1);
            }
        }
    }
}
