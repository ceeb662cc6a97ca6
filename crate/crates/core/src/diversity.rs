//! Gait-diversity measures over binary behavior vectors.
//!
//! Selection uses the Hamming distance; the signature uses a normalized
//! mutual-information distance built from plug-in entropies (log base 2)
//! with a finite-sample correction of `(S − 1) / 2T` for a marginal and
//! `(S_a + S_b − S_ab − 1) / 2T` for a joint, where `S` counts observed
//! states and `T` is the sequence length.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Packed bit sequence.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BehaviorVector {
    len: usize,
    words: Vec<u64>,
}

impl BehaviorVector {
    pub fn zeros(len: usize) -> Self {
        BehaviorVector {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut v = BehaviorVector::zeros(0);
        for b in bits {
            v.push(b);
        }
        v
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        if bit {
            self.words[self.len / 64] |= 1 << (self.len % 64);
        }
        self.len += 1;
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        if bit {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i))
    }

    fn check_len(&self, other: &Self) -> Result<()> {
        if self.len == other.len {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: self.len,
                actual: other.len,
            })
        }
    }
}

/// Number of positions where the two vectors differ.
pub fn hamming(a: &BehaviorVector, b: &BehaviorVector) -> Result<usize> {
    a.check_len(b)?;
    Ok(a.words
        .iter()
        .zip(&b.words)
        .map(|(x, y)| (x ^ y).count_ones() as usize)
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    /// Plug-in entropy in bits.
    pub raw: f64,
    pub correction: f64,
    /// Number of states observed with nonzero frequency.
    pub states: usize,
}

impl EntropyEstimate {
    pub fn corrected(&self) -> f64 {
        self.raw + self.correction
    }
}

/// Plug-in entropy of a state histogram; zero-count states are skipped.
fn plug_in(counts: &[usize], total: usize) -> (f64, usize) {
    let n = total as f64;
    let mut h = 0.0;
    let mut states = 0;
    for &c in counts.iter().filter(|&&c| c > 0) {
        let p = c as f64 / n;
        h -= p * libm::log2(p);
        states += 1;
    }
    (h, states)
}

pub fn entropy_corrected(a: &BehaviorVector) -> Result<EntropyEstimate> {
    if a.is_empty() {
        return Err(Error::Empty);
    }
    let ones = a.count_ones();
    let (raw, states) = plug_in(&[a.len() - ones, ones], a.len());
    Ok(EntropyEstimate {
        raw,
        correction: (states as f64 - 1.0) / (2.0 * a.len() as f64),
        states,
    })
}

pub fn joint_entropy_corrected(a: &BehaviorVector, b: &BehaviorVector) -> Result<EntropyEstimate> {
    a.check_len(b)?;
    if a.is_empty() {
        return Err(Error::Empty);
    }
    let len = a.len();
    let both: usize = a
        .words
        .iter()
        .zip(&b.words)
        .map(|(x, y)| (x & y).count_ones() as usize)
        .sum();
    let ones_a = a.count_ones();
    let ones_b = b.count_ones();
    let only_a = ones_a - both;
    let only_b = ones_b - both;
    let neither = len - both - only_a - only_b;
    // the two mixed states are summed in a fixed order so swapping a and b
    // reproduces the same bits
    let (lo, hi) = (only_a.min(only_b), only_a.max(only_b));
    let (raw, states) = plug_in(&[neither, lo, hi, both], len);
    let s_a = entropy_corrected(a)?.states;
    let s_b = entropy_corrected(b)?.states;
    Ok(EntropyEstimate {
        raw,
        correction: (s_a as f64 + s_b as f64 - states as f64 - 1.0) / (2.0 * len as f64),
        states,
    })
}

/// Diversity distance `1 − I(a; b) / max(H(a), H(b))` using corrected
/// entropies. When both corrected entropies are non-positive (both sequences
/// constant), the distance is 0 for identical sequences and 1 otherwise.
pub fn nmi_distance(a: &BehaviorVector, b: &BehaviorVector) -> Result<f64> {
    a.check_len(b)?;
    if a.is_empty() {
        return Err(Error::Empty);
    }
    let ha = entropy_corrected(a)?.corrected();
    let hb = entropy_corrected(b)?.corrected();
    let hab = joint_entropy_corrected(a, b)?.corrected();
    let denom = ha.max(hb);
    if denom <= 0.0 {
        return Ok(if a == b { 0.0 } else { 1.0 });
    }
    Ok(1.0 - (ha + hb - hab) / denom)
}
