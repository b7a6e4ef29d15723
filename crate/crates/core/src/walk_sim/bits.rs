//! Seedable streams of fair coin flips.
//!
//! Bits are read least-significant first out of 64-bit words drawn from a
//! [`RngCore`]. A set bit is heads. Every consumer (walk, direct sampler,
//! needle drops) reads through the same buffered stream, so a trial's
//! outcome depends only on the bits it was handed.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

#[inline]
fn low_mask(n: u32) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Buffered bit reader over a word generator.
#[derive(Debug, Clone)]
pub struct BitStream<R = ChaCha8Rng> {
    source: R,
    word: u64,
    avail: u32,
    consumed: u64,
}

impl BitStream<ChaCha8Rng> {
    /// Substream `index` of the master `seed`.
    ///
    /// ChaCha's 64-bit stream id keeps distinct indices independent, and the
    /// output is fixed by (seed, index) on every platform.
    pub fn substream(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self::new(rng)
    }
}

impl<R: RngCore> BitStream<R> {
    pub fn new(source: R) -> Self {
        Self {
            source,
            word: 0,
            avail: 0,
            consumed: 0,
        }
    }

    #[inline]
    fn refill(&mut self) {
        self.word = self.source.next_u64();
        self.avail = 64;
    }

    #[inline]
    pub fn next_bit(&mut self) -> bool {
        if self.avail == 0 {
            self.refill();
        }
        let bit = self.word & 1 == 1;
        self.word >>= 1;
        self.avail -= 1;
        self.consumed += 1;
        bit
    }

    /// Next `n` bits (n <= 64) packed with the earliest bit lowest.
    pub fn take_bits(&mut self, n: u32) -> u64 {
        assert!(n <= 64, "take_bits supports at most 64 bits");
        if n == 0 {
            return 0;
        }
        if self.avail == 0 {
            self.refill();
        }
        self.consumed += u64::from(n);
        if n <= self.avail {
            let out = self.word & low_mask(n);
            self.word = if n == 64 { 0 } else { self.word >> n };
            self.avail -= n;
            return out;
        }
        let have = self.avail;
        let low = self.word & low_mask(have);
        let need = n - have;
        self.refill();
        let high = self.word & low_mask(need);
        self.word >>= need;
        self.avail -= need;
        low | (high << have)
    }

    /// Uniform on [0, 1) with 53 bits of resolution.
    #[inline]
    pub fn uniform53(&mut self) -> f64 {
        self.take_bits(53) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bits_consumed(&self) -> u64 {
        self.consumed
    }

    /// Currently buffered bits, refilling first if the buffer is empty.
    /// The returned count is always in 1..=64.
    #[inline]
    pub(crate) fn buffered(&mut self) -> (u64, u32) {
        if self.avail == 0 {
            self.refill();
        }
        (self.word, self.avail)
    }

    /// Drops `n` buffered bits; `n` must not exceed the buffered count.
    #[inline]
    pub(crate) fn skip(&mut self, n: u32) {
        debug_assert!(n <= self.avail);
        self.word = if n >= 64 { 0 } else { self.word >> n };
        self.avail -= n;
        self.consumed += u64::from(n);
    }
}

/// Word source that replays a fixed flip script, then yields tails forever.
///
/// Used to drive the simulators with hand-written sequences.
#[derive(Debug, Clone)]
pub struct ScriptedFlips {
    words: Vec<u64>,
    next: usize,
}

impl ScriptedFlips {
    /// `true` is heads.
    pub fn new(flips: &[bool]) -> Self {
        let words = flips
            .chunks(64)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u64, |w, (i, &h)| w | (u64::from(h) << i))
            })
            .collect();
        Self { words, next: 0 }
    }

    /// Parses a string of `H`/`T` characters; anything else is ignored.
    pub fn from_letters(s: &str) -> Self {
        let flips: Vec<bool> = s
            .chars()
            .filter_map(|c| match c.to_ascii_uppercase() {
                'H' => Some(true),
                'T' => Some(false),
                _ => None,
            })
            .collect();
        Self::new(&flips)
    }

    pub fn into_stream(self) -> BitStream<Self> {
        BitStream::new(self)
    }
}

impl RngCore for ScriptedFlips {
    fn next_u32(&mut self) -> u32 {
        self.next_u64() as u32
    }

    fn next_u64(&mut self) -> u64 {
        let w = self.words.get(self.next).copied().unwrap_or(0);
        self.next += 1;
        w
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
