//! Evolvability signatures: the joint distribution of fitness change and
//! gait diversity over independent mutants of one parent.

mod kde;

pub use kde::{kde_grid, kde_points, scott_bandwidth, SignatureGrid, Window, BANDWIDTH_FLOOR, GRID_SIZE};

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cppn::MutationConfig;
use crate::diversity::nmi_distance;
use crate::evolution::{evaluate_genome, BatchEvaluator};
use crate::genome::{Encoding, Genome};
use crate::math::clamp;
use crate::rng::stream;
use crate::simulator::HexapodConfig;
use crate::{Error, Result};

/// Intensity multipliers of a sweep, applied to every rate and step size.
pub const LOW_INTENSITY: f64 = 0.25;
pub const MEDIUM_INTENSITY: f64 = 1.0;
pub const HIGH_INTENSITY: f64 = 4.0;

/// Mutants losing more than this fraction of the parent's displacement
/// are lethal.
pub const LETHAL_F1: f64 = -1.0;
pub const DIVERSE_F2: f64 = 0.5;
/// f1 floor of the strict beneficial count.
pub const STRICT_F1: f64 = -0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignatureSample {
    /// `(P′ − P) / P`.
    pub f1: f64,
    /// Unclamped diversity distance to the parent gait.
    pub f2_raw: f64,
    /// `f2_raw` clamped to `[0, 1]`.
    pub f2: f64,
    pub parent_p: f64,
    pub mutant_p: f64,
}

impl SignatureSample {
    pub fn is_lethal(&self) -> bool {
        self.f1 < LETHAL_F1
    }
}

/// Evaluates `n` independent mutants of `parent` (mutant `k` draws from
/// stream `(seed, purpose, k)`).
pub fn sample_signature<E: BatchEvaluator + ?Sized>(
    encoding: Encoding,
    parent: &Genome,
    n: usize,
    mutation: &MutationConfig,
    hexapod: &HexapodConfig,
    seed: u64,
    purpose: &str,
    evaluator: &E,
) -> Result<Vec<SignatureSample>> {
    mutation.validate()?;
    encoding.check(parent)?;
    let parent_eval = evaluate_genome(encoding, parent, hexapod);
    let p = parent_eval.forward_displacement;
    if !(p > 0.0) {
        return Err(Error::NonPositiveParent(p));
    }
    let parent_behavior = parent_eval.behavior();
    let mutants: Vec<Genome> = (0..n)
        .map(|k| parent.mutate(mutation, &mut stream(seed, purpose, k as u64)))
        .collect();
    evaluator
        .evaluate_batch(encoding, &mutants, hexapod)
        .into_iter()
        .map(|e| {
            let f2_raw = nmi_distance(&parent_behavior, &e.behavior())?;
            Ok(SignatureSample {
                f1: (e.forward_displacement - p) / p,
                f2_raw,
                f2: clamp(f2_raw, 0.0, 1.0),
                parent_p: p,
                mutant_p: e.forward_displacement,
            })
        })
        .collect()
}

/// Fraction of samples with `f1 > f1_floor` and `f2 > f2_floor`.
pub fn beneficial_proportion(samples: &[SignatureSample], f1_floor: f64, f2_floor: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty);
    }
    let hits = samples
        .iter()
        .filter(|s| s.f1 > f1_floor && s.f2 > f2_floor)
        .count();
    Ok(hits as f64 / samples.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntensitySweep {
    pub low: Vec<SignatureSample>,
    pub medium: Vec<SignatureSample>,
    pub high: Vec<SignatureSample>,
}

/// Signatures of one parent at the low, medium and high intensities, each
/// on its own random streams.
pub fn intensity_sweep<E: BatchEvaluator + ?Sized>(
    encoding: Encoding,
    parent: &Genome,
    n: usize,
    mutation: &MutationConfig,
    hexapod: &HexapodConfig,
    seed: u64,
    evaluator: &E,
) -> Result<IntensitySweep> {
    let at = |multiplier: f64, purpose: &str| {
        let scaled = mutation.with_intensity(mutation.intensity_multiplier * multiplier);
        sample_signature(encoding, parent, n, &scaled, hexapod, seed, purpose, evaluator)
    };
    Ok(IntensitySweep {
        low: at(LOW_INTENSITY, "signature-low")?,
        medium: at(MEDIUM_INTENSITY, "signature-medium")?,
        high: at(HIGH_INTENSITY, "signature-high")?,
    })
}
