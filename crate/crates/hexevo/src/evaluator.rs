//! Worker pool for evaluation fan-out.

use hexevo_core::evolution::{evaluate_genome, BatchEvaluator};
use hexevo_core::genome::{Encoding, Genome};
use hexevo_core::simulator::{EvalResult, HexapodConfig};
use rayon::prelude::*;

/// Evaluates batches on a dedicated rayon pool. Results keep input order, so
/// runs are identical for every pool size.
pub struct RayonEvaluator {
    pool: rayon::ThreadPool,
}

impl RayonEvaluator {
    /// `workers = None` sizes the pool to the logical core count.
    pub fn new(workers: Option<usize>) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.unwrap_or(0))
            .thread_name(|i| format!("hexevo-eval-{i}"))
            .build()?;
        Ok(RayonEvaluator { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl BatchEvaluator for RayonEvaluator {
    fn evaluate_batch(&self, encoding: Encoding, genomes: &[Genome], hexapod: &HexapodConfig) -> Vec<EvalResult> {
        self.pool.install(|| {
            genomes
                .par_iter()
                .map(|g| evaluate_genome(encoding, g, hexapod))
                .collect()
        })
    }
}
