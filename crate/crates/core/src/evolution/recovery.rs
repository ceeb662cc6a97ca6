//! Re-evolution after leg removal, seeded from mutants of an intact-robot
//! champion.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::{BatchEvaluator, Evolution, EvolutionConfig, Individual};
use crate::genome::Genome;
use crate::legs::LegSet;
use crate::rng::stream;
use crate::simulator::HexapodConfig;
use crate::{Error, Result};

/// Fraction of the intact performance that counts as recovered.
pub const RECOVERY_TARGET: f64 = 0.85;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DamageScenario {
    /// Right-middle leg removed.
    S1,
    /// Both middle legs removed.
    S2,
    /// Right-middle and left-rear legs removed.
    S3,
}

impl DamageScenario {
    pub const ALL: [DamageScenario; 3] = [DamageScenario::S1, DamageScenario::S2, DamageScenario::S3];

    pub fn removed_legs(self) -> LegSet {
        match self {
            DamageScenario::S1 => LegSet::from_legs(&[1]),
            DamageScenario::S2 => LegSet::from_legs(&[1, 4]),
            DamageScenario::S3 => LegSet::from_legs(&[1, 3]),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DamageScenario::S1 => "S1",
            DamageScenario::S2 => "S2",
            DamageScenario::S3 => "S3",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name().eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for DamageScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryPoint {
    pub generation: usize,
    pub best_p: f64,
    pub proportion_restored: f64,
}

#[derive(Clone, Debug)]
pub struct RecoveryArtifacts {
    pub scenario: DamageScenario,
    pub original_p: f64,
    pub curve: Vec<RecoveryPoint>,
    /// First generation reaching the recovery target, or the budget when
    /// it is never reached.
    pub generations_to_target: usize,
    pub target_reached: bool,
    pub best: Individual,
}

impl RecoveryArtifacts {
    pub fn final_proportion(&self) -> f64 {
        self.curve.last().map_or(0.0, |p| p.proportion_restored)
    }
}

/// Seeds a population with `population_size` mutants of `champion` and
/// evolves it on the damaged robot. `original_p` is the champion's intact
/// forward displacement. `on_generation` sees every generation, including 0.
pub fn recovery_experiment<E, F>(
    champion: &Genome,
    original_p: f64,
    scenario: DamageScenario,
    config: &EvolutionConfig,
    hexapod: &HexapodConfig,
    evaluator: &E,
    mut on_generation: F,
) -> Result<RecoveryArtifacts>
where
    E: BatchEvaluator + ?Sized,
    F: FnMut(&Evolution<'_, E>) -> Result<()>,
{
    if !(original_p > 0.0) {
        return Err(Error::NonPositiveParent(original_p));
    }
    config.validate()?;
    let seeds: Vec<Genome> = (0..config.population_size)
        .map(|i| champion.mutate(&config.mutation, &mut stream(config.seed, "recovery-seed", i as u64)))
        .collect();
    let damaged = hexapod.with_damage(hexapod.damage.union(scenario.removed_legs()));
    let mut evolution = Evolution::from_genomes(config.clone(), damaged, evaluator, seeds)?;
    on_generation(&evolution)?;
    evolution.run(&mut on_generation)?;

    let curve: Vec<RecoveryPoint> = evolution
        .stats()
        .iter()
        .map(|s| RecoveryPoint {
            generation: s.generation,
            best_p: s.best_p,
            proportion_restored: s.best_p / original_p,
        })
        .collect();
    let reached = curve.iter().find(|p| p.proportion_restored >= RECOVERY_TARGET);
    Ok(RecoveryArtifacts {
        scenario,
        original_p,
        generations_to_target: reached.map_or(config.generations, |p| p.generation),
        target_reached: reached.is_some(),
        best: evolution.best().clone(),
        curve,
    })
}
