//! Multiobjective evolution of locomotion controllers.
//!
//! Each individual maximizes `(−F, −|Θ|, D̄)`: negated goal distance,
//! negated absolute heading, and its mean Hamming gait distance to a
//! reference pool. Variation is mutation only; parents are picked by binary
//! tournament on (rank, crowding distance).

pub mod nsga2;
mod recovery;

pub use recovery::{recovery_experiment, DamageScenario, RecoveryArtifacts, RecoveryPoint, RECOVERY_TARGET};

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cppn::MutationConfig;
use crate::diversity::{hamming, BehaviorVector};
use crate::genome::{Encoding, Genome};
use crate::math::median;
use crate::rng::stream;
use crate::simulator::{simulate, EvalResult, HexapodConfig};
use crate::{Error, Result};

/// Decodes and simulates one genome. Genomes that fail to decode count as
/// failed evaluations.
pub fn evaluate_genome(encoding: Encoding, genome: &Genome, hexapod: &HexapodConfig) -> EvalResult {
    match encoding.decode(genome) {
        Ok(mut controller) => simulate(&mut controller, hexapod),
        Err(_) => EvalResult::failure(hexapod),
    }
}

/// Evaluates a batch of genomes; result `i` belongs to genome `i`.
pub trait BatchEvaluator {
    fn evaluate_batch(&self, encoding: Encoding, genomes: &[Genome], hexapod: &HexapodConfig) -> Vec<EvalResult>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SerialEvaluator;

impl BatchEvaluator for SerialEvaluator {
    fn evaluate_batch(&self, encoding: Encoding, genomes: &[Genome], hexapod: &HexapodConfig) -> Vec<EvalResult> {
        genomes
            .iter()
            .map(|g| evaluate_genome(encoding, g, hexapod))
            .collect()
    }
}

/// Pool the diversity objective is measured against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiversityReference {
    /// Parents and offspring together, before truncation.
    #[default]
    Merged,
    /// The current parent population only.
    Parents,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub generations: usize,
    pub encoding: Encoding,
    #[serde(default)]
    pub mutation: MutationConfig,
    pub seed: u64,
    #[serde(default)]
    pub diversity_reference: DiversityReference,
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 || !self.population_size.is_multiple_of(2) {
            return Err(Error::InvalidConfig(
                "population size must be even and at least 2".into(),
            ));
        }
        self.mutation.validate()
    }
}

#[derive(Clone, Debug)]
pub struct Individual {
    pub genome: Genome,
    pub eval: EvalResult,
    pub behavior: BehaviorVector,
    pub objectives: [f64; 3],
    pub rank: usize,
    pub crowding: f64,
}

impl Individual {
    fn new(genome: Genome, eval: EvalResult) -> Self {
        let behavior = eval.behavior();
        let objectives = [-eval.goal_distance, -libm::fabs(eval.heading_deg), 0.0];
        Individual {
            genome,
            eval,
            behavior,
            objectives,
            rank: 0,
            crowding: 0.0,
        }
    }

    pub fn forward_displacement(&self) -> f64 {
        self.eval.forward_displacement
    }
}

/// Mean Hamming distance of each candidate to every member of `pool`
/// (a candidate in the pool counts its own zero distance).
pub fn mean_hamming(candidates: &[&BehaviorVector], pool: &[&BehaviorVector]) -> Result<Vec<f64>> {
    if pool.is_empty() {
        return Err(Error::Empty);
    }
    candidates
        .iter()
        .map(|c| {
            let mut total = 0usize;
            for p in pool {
                total += hamming(c, p)?;
            }
            Ok(total as f64 / pool.len() as f64)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    /// Largest forward displacement in the population.
    pub best_p: f64,
    pub median_p: f64,
    /// Smallest goal distance in the population.
    pub best_f: f64,
    /// Heading of the individual with the largest forward displacement.
    pub best_theta: f64,
}

/// Persistent state from which a run resumes. Evaluations are recomputed
/// on resume; every random draw is keyed by generation and index, so no
/// generator state is stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub generation: usize,
    pub config: EvolutionConfig,
    pub hexapod: HexapodConfig,
    pub population: Vec<CheckpointMember>,
    pub stats: Vec<GenerationStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMember {
    pub genome: Genome,
    pub objectives: [f64; 3],
    pub rank: usize,
    #[serde(with = "extended_f64")]
    pub crowding: f64,
}

/// JSON has no infinity; boundary crowding distances are written as the
/// strings `"inf"` and `"-inf"`.
mod extended_f64 {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    struct ExtendedF64;

    impl Visitor<'_> for ExtendedF64 {
        type Value = f64;

        fn expecting(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
            f.write_str("a number, \"inf\" or \"-inf\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(ExtendedF64)
    }
}

pub struct Evolution<'e, E: BatchEvaluator + ?Sized> {
    config: EvolutionConfig,
    hexapod: HexapodConfig,
    evaluator: &'e E,
    population: Vec<Individual>,
    generation: usize,
    stats: Vec<GenerationStats>,
}

impl<'e, E: BatchEvaluator + ?Sized> Evolution<'e, E> {
    /// Random initial population, evaluated and ranked (generation 0).
    pub fn new(config: EvolutionConfig, hexapod: HexapodConfig, evaluator: &'e E) -> Result<Self> {
        config.validate()?;
        let genomes: Vec<Genome> = (0..config.population_size)
            .map(|i| config.encoding.random_genome(&mut stream(config.seed, "init", i as u64)))
            .collect();
        Self::from_genomes(config, hexapod, evaluator, genomes)
    }

    /// Starts from the given genomes as generation 0.
    pub fn from_genomes(
        config: EvolutionConfig,
        hexapod: HexapodConfig,
        evaluator: &'e E,
        genomes: Vec<Genome>,
    ) -> Result<Self> {
        config.validate()?;
        hexapod.validate()?;
        if genomes.len() != config.population_size {
            return Err(Error::LengthMismatch {
                expected: config.population_size,
                actual: genomes.len(),
            });
        }
        for g in &genomes {
            config.encoding.check(g)?;
        }
        let evals = evaluator.evaluate_batch(config.encoding, &genomes, &hexapod);
        let pool: Vec<Individual> = genomes
            .into_iter()
            .zip(evals)
            .map(|(g, e)| Individual::new(g, e))
            .collect();
        let mut evolution = Evolution {
            config,
            hexapod,
            evaluator,
            population: Vec::new(),
            generation: 0,
            stats: Vec::new(),
        };
        evolution.population = evolution.truncate(pool, None)?;
        evolution.record_stats();
        Ok(evolution)
    }

    /// Rebuilds a run from a checkpoint by re-evaluating its genomes.
    pub fn resume(checkpoint: Checkpoint, evaluator: &'e E) -> Result<Self> {
        checkpoint.config.validate()?;
        let genomes: Vec<Genome> = checkpoint.population.iter().map(|m| m.genome.clone()).collect();
        let evals = evaluator.evaluate_batch(checkpoint.config.encoding, &genomes, &checkpoint.hexapod);
        let population = checkpoint
            .population
            .into_iter()
            .zip(evals)
            .map(|(m, e)| {
                let mut ind = Individual::new(m.genome, e);
                ind.objectives = m.objectives;
                ind.rank = m.rank;
                ind.crowding = m.crowding;
                ind
            })
            .collect();
        Ok(Evolution {
            config: checkpoint.config,
            hexapod: checkpoint.hexapod,
            evaluator,
            population,
            generation: checkpoint.generation,
            stats: checkpoint.stats,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            generation: self.generation,
            config: self.config.clone(),
            hexapod: self.hexapod.clone(),
            population: self
                .population
                .iter()
                .map(|i| CheckpointMember {
                    genome: i.genome.clone(),
                    objectives: i.objectives,
                    rank: i.rank,
                    crowding: i.crowding,
                })
                .collect(),
            stats: self.stats.clone(),
        }
    }

    pub fn config(&self) -> &EvolutionConfig {
        &self.config
    }

    pub fn hexapod(&self) -> &HexapodConfig {
        &self.hexapod
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn population(&self) -> &[Individual] {
        &self.population
    }

    pub fn stats(&self) -> &[GenerationStats] {
        &self.stats
    }

    pub fn is_finished(&self) -> bool {
        self.generation >= self.config.generations
    }

    /// One generation: breed N offspring, evaluate them, keep the best N of
    /// parents plus offspring.
    pub fn step(&mut self) -> Result<()> {
        let g = self.generation + 1;
        let n = self.config.population_size;
        let offspring: Vec<Genome> = (0..n)
            .map(|i| {
                let mut rng = stream(self.config.seed, "offspring", ((g as u64) << 32) | i as u64);
                let parent = self.tournament(&mut rng);
                self.population[parent].genome.mutate(&self.config.mutation, &mut rng)
            })
            .collect();
        let evals = self
            .evaluator
            .evaluate_batch(self.config.encoding, &offspring, &self.hexapod);
        let parents = core::mem::take(&mut self.population);
        let parent_count = parents.len();
        let mut pool = parents;
        pool.extend(offspring.into_iter().zip(evals).map(|(g, e)| Individual::new(g, e)));
        self.population = self.truncate(pool, Some(parent_count))?;
        self.generation = g;
        self.record_stats();
        Ok(())
    }

    /// Runs until the configured generation count, calling `on_generation`
    /// after each completed generation.
    pub fn run<F: FnMut(&Self) -> Result<()>>(&mut self, mut on_generation: F) -> Result<()> {
        while !self.is_finished() {
            self.step()?;
            on_generation(self)?;
        }
        Ok(())
    }

    fn tournament<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let n = self.population.len();
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        let (x, y) = (&self.population[a], &self.population[b]);
        if nsga2::crowded_better(y.rank, y.crowding, x.rank, x.crowding) {
            b
        } else {
            a
        }
    }

    /// Assigns diversity objectives over the reference pool, then keeps the
    /// best `population_size` members. `parents` is the number of leading
    /// pool members that were parents (`None` for an initial population).
    fn truncate(&self, mut pool: Vec<Individual>, parents: Option<usize>) -> Result<Vec<Individual>> {
        let reference_len = match (self.config.diversity_reference, parents) {
            (DiversityReference::Parents, Some(p)) => p,
            _ => pool.len(),
        };
        let diversity = {
            let all: Vec<&BehaviorVector> = pool.iter().map(|i| &i.behavior).collect();
            mean_hamming(&all, &all[..reference_len])?
        };
        for (ind, d) in pool.iter_mut().zip(diversity) {
            ind.objectives[2] = d;
        }
        let objectives: Vec<[f64; 3]> = pool.iter().map(|i| i.objectives).collect();
        let chosen = nsga2::select(&objectives, self.config.population_size);
        let mut slots: Vec<Option<Individual>> = pool.into_iter().map(Some).collect();
        Ok(chosen
            .into_iter()
            .map(|(i, rank, crowding)| {
                let mut ind = slots[i].take().expect("each index selected once");
                ind.rank = rank;
                ind.crowding = crowding;
                ind
            })
            .collect())
    }

    fn record_stats(&mut self) {
        let ps: Vec<f64> = self.population.iter().map(|i| i.forward_displacement()).collect();
        let top = argmax_p(&self.population, |_| true).expect("population is non-empty");
        self.stats.push(GenerationStats {
            generation: self.generation,
            best_p: self.population[top].forward_displacement(),
            median_p: median(&ps).expect("population is non-empty"),
            best_f: self
                .population
                .iter()
                .map(|i| i.eval.goal_distance)
                .fold(f64::INFINITY, f64::min),
            best_theta: self.population[top].eval.heading_deg,
        });
    }

    /// Highest forward displacement among individuals heading within ±1° of
    /// straight ahead, or the overall highest when none qualifies.
    pub fn best(&self) -> &Individual {
        &self.population[best_index(&self.population)]
    }
}

fn argmax_p(population: &[Individual], keep: impl Fn(&Individual) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, ind) in population.iter().enumerate() {
        if !keep(ind) {
            continue;
        }
        if best.is_none_or(|b| ind.forward_displacement() > population[b].forward_displacement()) {
            best = Some(i);
        }
    }
    best
}

/// Index of the best individual; see [`Evolution::best`].
pub fn best_index(population: &[Individual]) -> usize {
    argmax_p(population, |i| libm::fabs(i.eval.heading_deg) <= 1.0)
        .or_else(|| argmax_p(population, |_| true))
        .expect("population is non-empty")
}
