//! Single-unit pattern generators.
//!
//! Each of the twelve units outputs `CPPN(x, y, timer)`; the timer ramps from
//! 0 to 1 over one period after a trigger and then holds. A leg's two units
//! first trigger after a per-leg offset and re-trigger whenever that foot
//! lands.

use alloc::vec::Vec;

use super::substrate::{unit_limit, unit_position, UNITS};
use super::{JointCommand, Phenotype, SensorFrame};
use crate::cpg::LEG_OSCILLATORS;
use crate::cppn::CppnGenome;
use crate::legs::LEGS;
use crate::Result;

/// Seconds for the timer to ramp from 0 to 1.
pub const SUPG_PERIOD: f64 = 1.0;
/// First-trigger offsets span `[0, SUPG_OFFSET_RANGE]` seconds.
pub const SUPG_OFFSET_RANGE: f64 = 1.0;

#[derive(Clone, Debug)]
pub struct SupgController {
    genome: CppnGenome,
    offsets: [f64; LEGS],
    triggered_at: [Option<f64>; LEGS],
    timers: [Option<f64>; LEGS],
    scratch: Vec<f64>,
}

pub fn decode_supg(genome: &CppnGenome) -> Result<SupgController> {
    let mut scratch = Vec::new();
    let mut out = [0.0; 2];
    let mut offsets = [0.0; LEGS];
    for (leg, offset) in offsets.iter_mut().enumerate() {
        let (x, y) = unit_position(LEG_OSCILLATORS[leg].0);
        genome.evaluate_with(&[x, y, 0.0], &mut scratch, &mut out)?;
        *offset = (out[1] + 1.0) / 2.0 * SUPG_OFFSET_RANGE;
    }
    Ok(SupgController {
        genome: genome.clone(),
        offsets,
        triggered_at: [None; LEGS],
        timers: [None; LEGS],
        scratch,
    })
}

impl SupgController {
    pub fn offsets(&self) -> &[f64; LEGS] {
        &self.offsets
    }

    /// Timer value of each leg at the last tick; `None` before the first trigger.
    pub fn timers(&self) -> &[Option<f64>; LEGS] {
        &self.timers
    }

    fn update_timers(&mut self, sensors: &SensorFrame, t: f64) {
        for leg in 0..LEGS {
            match self.triggered_at[leg] {
                None if t >= self.offsets[leg] => self.triggered_at[leg] = Some(self.offsets[leg]),
                Some(_) if sensors.landed.contains(leg) => self.triggered_at[leg] = Some(t),
                _ => {}
            }
            self.timers[leg] = self.triggered_at[leg].map(|t0| ((t - t0) / SUPG_PERIOD).clamp(0.0, 1.0));
        }
    }

    pub fn tick(&mut self, sensors: &SensorFrame, t: f64) -> JointCommand {
        self.update_timers(sensors, t);
        let mut units = [0.0; UNITS];
        let mut out = [0.0; 2];
        for (leg, &(h, e)) in LEG_OSCILLATORS.iter().enumerate() {
            let Some(timer) = self.timers[leg] else {
                continue;
            };
            for unit in [h, e] {
                let (x, y) = unit_position(unit);
                self.genome
                    .evaluate_with(&[x, y, timer], &mut self.scratch, &mut out)
                    .expect("SUPG genome has 3 inputs and 2 outputs");
                units[unit] = out[0] * unit_limit(unit);
            }
        }
        JointCommand::from_units(&units)
    }

    pub fn phenotype(&self) -> Phenotype {
        Phenotype::Supg {
            offsets: self.offsets.to_vec(),
        }
    }
}
