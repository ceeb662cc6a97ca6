//! Genotype-to-controller decodings and per-tick command generation.
//!
//! Five controller kinds share one command interface: Direct and the two
//! CPPN-encoded CPGs drive the oscillator network, the ANN kind is a
//! minimal HyperNEAT feedforward net, and SUPG runs twelve CPPN-shaped
//! single-cycle pattern generators triggered by foot contact.

mod ann;
mod direct;
mod oscillator;
mod supg;

pub use ann::{average_pseudo_steps, decode_ann, AnnController, ANN_HIDDEN, ANN_INPUTS, ANN_OUTPUTS};
pub use direct::{decode_direct, DirectGenome, DIRECT_GENES};
pub use oscillator::{decode_cpg, decode_cpg_fb, CpgController};
pub use supg::{decode_supg, SupgController, SUPG_OFFSET_RANGE, SUPG_PERIOD};

use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cpg::{AepConfig, LEG_OSCILLATORS, OSCILLATORS};
use crate::legs::{LegSet, LEGS};
use crate::math::clamp;
use crate::Result;

/// Horizontal servo (s1) limit in radians.
pub const S1_LIMIT: f64 = PI / 8.0;
/// Elevation servo (s2) limit in radians.
pub const S2_LIMIT: f64 = PI / 4.0;

/// Fixed 2-D placement of the twelve actuator units (oscillators, SUPGs,
/// ANN output neurons), indexed like the CPG oscillators.
///
/// | units   | role               | x    | y (front, middle, rear) |
/// |---------|--------------------|------|-------------------------|
/// | 0-2     | left elevation s2  | -1   | 1, 0, -1                |
/// | 3-5     | left horizontal s1 | -0.5 | 1, 0, -1                |
/// | 6-8     | right horizontal   | 0.5  | 1, 0, -1                |
/// | 9-11    | right elevation    | 1    | 1, 0, -1                |
///
/// ANN hidden neurons sit at the same points scaled by 0.5; the sine and
/// cosine inputs sit at (0, 0.5) and (0, -0.5).
pub mod substrate {
    use super::*;

    pub const UNITS: usize = OSCILLATORS;

    pub fn unit_position(unit: usize) -> (f64, f64) {
        let x = match unit / 3 {
            0 => -1.0,
            1 => -0.5,
            2 => 0.5,
            _ => 1.0,
        };
        let y = 1.0 - (unit % 3) as f64;
        (x, y)
    }

    /// Servo limit of the joint a unit drives.
    pub fn unit_limit(unit: usize) -> f64 {
        if crate::cpg::is_horizontal(unit) {
            S1_LIMIT
        } else {
            S2_LIMIT
        }
    }

    pub const HIDDEN_SCALE: f64 = 0.5;
    pub const SINE_POSITION: (f64, f64) = (0.0, 0.5);
    pub const COSINE_POSITION: (f64, f64) = (0.0, -0.5);
}

/// Commanded angles for the two actuated joints of each leg (s3 = −s2 is
/// applied by the kinematics).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JointCommand {
    pub s1: [f64; LEGS],
    pub s2: [f64; LEGS],
}

impl JointCommand {
    pub fn clamped(mut self) -> Self {
        for v in &mut self.s1 {
            *v = clamp(*v, -S1_LIMIT, S1_LIMIT);
        }
        for v in &mut self.s2 {
            *v = clamp(*v, -S2_LIMIT, S2_LIMIT);
        }
        self
    }

    /// Builds a command from per-unit angles.
    pub fn from_units(units: &[f64; substrate::UNITS]) -> Self {
        let mut c = JointCommand::default();
        for (leg, &(h, e)) in LEG_OSCILLATORS.iter().enumerate() {
            c.s1[leg] = units[h];
            c.s2[leg] = units[e];
        }
        c.clamped()
    }

    pub fn to_units(&self) -> [f64; substrate::UNITS] {
        let mut u = [0.0; substrate::UNITS];
        for (leg, &(h, e)) in LEG_OSCILLATORS.iter().enumerate() {
            u[h] = self.s1[leg];
            u[e] = self.s2[leg];
        }
        u
    }

    pub fn within_limits(&self) -> bool {
        self.s1.iter().all(|v| v.abs() <= S1_LIMIT) && self.s2.iter().all(|v| v.abs() <= S2_LIMIT)
    }
}

/// Touch-sensor reading handed to a controller at each tick.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SensorFrame {
    pub contacts: LegSet,
    /// Legs whose contact went from off to on at the last step.
    pub landed: LegSet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControllerKind {
    Direct,
    Cpg,
    CpgFeedback,
    Ann,
    Supg,
}

/// A decoded controller with its per-evaluation state.
#[derive(Clone, Debug)]
pub enum Controller {
    Oscillator(CpgController),
    Ann(AnnController),
    Supg(SupgController),
}

impl Controller {
    pub fn kind(&self) -> ControllerKind {
        match self {
            Controller::Oscillator(c) => c.kind(),
            Controller::Ann(_) => ControllerKind::Ann,
            Controller::Supg(_) => ControllerKind::Supg,
        }
    }

    /// Produces the command for control time `t` (the tick lasts `dt`).
    pub fn tick(&mut self, sensors: &SensorFrame, t: f64, dt: f64) -> Result<JointCommand> {
        match self {
            Controller::Oscillator(c) => c.tick(sensors, dt),
            Controller::Ann(c) => Ok(c.tick(t)),
            Controller::Supg(c) => Ok(c.tick(sensors, t)),
        }
    }

    pub fn phenotype(&self) -> Phenotype {
        match self {
            Controller::Oscillator(c) => c.phenotype(),
            Controller::Ann(c) => c.phenotype(),
            Controller::Supg(c) => c.phenotype(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeBias {
    pub from: usize,
    pub to: usize,
    pub phi: f64,
}

/// Decoded phenotype parameters, for dumps and golden-file comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Phenotype {
    Oscillator {
        amplitudes: Vec<f64>,
        biases: Vec<EdgeBias>,
        feedback: Option<AepConfig>,
    },
    Ann {
        input_hidden: Vec<Vec<f64>>,
        hidden_output: Vec<Vec<f64>>,
    },
    Supg {
        offsets: Vec<f64>,
    },
}

impl Phenotype {
    /// Flattened numeric parameters, for tolerance comparisons.
    pub fn values(&self) -> Vec<f64> {
        match self {
            Phenotype::Oscillator {
                amplitudes, biases, ..
            } => amplitudes
                .iter()
                .copied()
                .chain(biases.iter().map(|b| b.phi))
                .collect(),
            Phenotype::Ann {
                input_hidden,
                hidden_output,
            } => input_hidden
                .iter()
                .chain(hidden_output)
                .flat_map(|r| r.iter().copied())
                .collect(),
            Phenotype::Supg { offsets } => offsets.clone(),
        }
    }
}
