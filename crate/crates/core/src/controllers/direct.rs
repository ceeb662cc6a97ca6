//! Direct encoding: 12 amplitude genes and 11 free phase-bias genes.

use core::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::oscillator::CpgController;
use super::substrate::unit_limit;
use crate::cpg::{complete_loop_biases, OscillatorParams, OSCILLATORS};
use crate::cppn::MutationConfig;
use crate::math::clamp;

pub const DIRECT_GENES: usize = 23;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DirectGenome {
    genes: [f64; DIRECT_GENES],
}

impl DirectGenome {
    /// Clamps every gene into `[0, 1]`; non-finite genes become 0.
    pub fn new(mut genes: [f64; DIRECT_GENES]) -> Self {
        for g in &mut genes {
            *g = if g.is_finite() { clamp(*g, 0.0, 1.0) } else { 0.0 };
        }
        DirectGenome { genes }
    }

    pub fn genes(&self) -> &[f64; DIRECT_GENES] {
        &self.genes
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut genes = [0.0; DIRECT_GENES];
        for g in &mut genes {
            *g = rng.random::<f64>();
        }
        DirectGenome { genes }
    }

    pub fn mutate<R: Rng + ?Sized>(&self, config: &MutationConfig, rng: &mut R) -> Self {
        let rates = config.effective();
        let mut genes = self.genes;
        for g in &mut genes {
            if rng.random::<f64>() < rates.weight {
                let z: f64 = StandardNormal.sample(rng);
                *g = clamp(*g + rates.direct_sigma * z, 0.0, 1.0);
            }
        }
        DirectGenome { genes }
    }

    /// Intrinsic amplitudes scaled linearly onto `[0, servo limit]`.
    pub fn amplitudes(&self) -> [f64; OSCILLATORS] {
        let mut a = [0.0; OSCILLATORS];
        for (i, v) in a.iter_mut().enumerate() {
            *v = self.genes[i] * unit_limit(i);
        }
        a
    }

    /// Free phase biases scaled onto `[0, 2π)`.
    pub fn free_biases(&self) -> [f64; 11] {
        let mut b = [0.0; 11];
        for (k, v) in b.iter_mut().enumerate() {
            *v = TAU * self.genes[OSCILLATORS + k].min(1.0 - f64::EPSILON);
        }
        b
    }
}

pub fn decode_direct(genome: &DirectGenome) -> CpgController {
    let params = OscillatorParams::new(genome.amplitudes().to_vec());
    let graph = complete_loop_biases(&genome.free_biases());
    CpgController::new(params, graph, None, super::ControllerKind::Direct)
}
