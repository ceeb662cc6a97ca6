//! Run-directory pipelines. Every file a pipeline writes embeds the run
//! identity and is recorded with its SHA-256 in `manifest.json`.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use hexevo_core::controllers::Controller;
use hexevo_core::evolution::{
    evaluate_genome, recovery_experiment, BatchEvaluator, Checkpoint, DamageScenario, Evolution,
};
use hexevo_core::genome::{Encoding, Genome};
use hexevo_core::math::median;
use hexevo_core::signature::{
    beneficial_proportion, kde_grid, sample_signature, SignatureSample, DIVERSE_F2, HIGH_INTENSITY,
    LETHAL_F1, LOW_INTENSITY, MEDIUM_INTENSITY, STRICT_F1,
};
use hexevo_core::simulator::{simulate_observed, EvalResult};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ConfigError, ExperimentConfig, RunIdentity};
use crate::formats::{self, TraceRow};

pub const RUN_FILE: &str = "run.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const STATS_FILE: &str = "stats.csv";
pub const BEST_GENOME_FILE: &str = "best_genome.json";
const CHECKPOINT_DIR: &str = "checkpoints";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Refused(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] hexevo_core::Error),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Serialize, Deserialize)]
struct RunRecord {
    run_id: String,
    config_hash: String,
    config: ExperimentConfig,
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub run_id: String,
    pub config_hash: String,
    /// Relative path (with `/` separators) to SHA-256 of the contents.
    pub files: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GenomeRecord {
    pub run_id: String,
    pub config_hash: String,
    pub encoding: Encoding,
    pub generation: usize,
    pub forward_displacement: f64,
    pub goal_distance: f64,
    pub heading_deg: f64,
    pub genome: Genome,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointRecord {
    run_id: String,
    config_hash: String,
    checkpoint: Checkpoint,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, RunError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| RunError::Malformed {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

/// An opened run directory: its config and identity.
pub struct RunDir {
    pub root: PathBuf,
    pub config: ExperimentConfig,
    pub id: RunIdentity,
    written: Vec<(String, String)>,
}

impl RunDir {
    /// Opens an existing run, checking that the stored identity still
    /// matches the stored config.
    pub fn open(root: &Path) -> Result<Self, RunError> {
        let path = root.join(RUN_FILE);
        let record: RunRecord = read_json(&path)?;
        let id = record.config.identity();
        if id.config_hash != record.config_hash || id.run_id != record.run_id {
            return Err(RunError::Malformed {
                path,
                message: format!("stored hash {} does not match config hash {}", record.config_hash, id.config_hash),
            });
        }
        Ok(RunDir { root: root.to_path_buf(), config: record.config, id, written: Vec::new() })
    }

    fn create(root: &Path, config: &ExperimentConfig) -> Result<Self, RunError> {
        fs::create_dir_all(root).map_err(io_err(root))?;
        let mut dir = RunDir {
            root: root.to_path_buf(),
            config: config.clone(),
            id: config.identity(),
            written: Vec::new(),
        };
        let record = RunRecord {
            run_id: dir.id.run_id.clone(),
            config_hash: dir.id.config_hash.clone(),
            config: config.clone(),
        };
        dir.write(RUN_FILE, &to_json(&record))?;
        Ok(dir)
    }

    fn write(&mut self, relative: &str, contents: &str) -> Result<(), RunError> {
        let path = self.root.join(relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        fs::write(&path, contents).map_err(io_err(&path))?;
        self.written.push((relative.to_string(), sha256_hex(contents.as_bytes())));
        Ok(())
    }

    /// Folds the files written so far into the manifest.
    fn commit(&mut self) -> Result<(), RunError> {
        let path = self.root.join(MANIFEST_FILE);
        let mut manifest = if path.exists() { read_json(&path)? } else { Manifest::default() };
        manifest.run_id = self.id.run_id.clone();
        manifest.config_hash = self.id.config_hash.clone();
        manifest.files.extend(self.written.drain(..));
        fs::write(&path, to_json(&manifest)).map_err(io_err(&path))
    }

    pub fn best_genome(&self) -> Result<GenomeRecord, RunError> {
        let path = self.root.join(BEST_GENOME_FILE);
        if !path.exists() {
            return Err(RunError::Refused(format!(
                "{} has no {BEST_GENOME_FILE}; run `hexevo evolve` first",
                self.root.display()
            )));
        }
        read_json(&path)
    }

    fn latest_checkpoint(&self) -> Result<Option<Checkpoint>, RunError> {
        let dir = self.root.join(CHECKPOINT_DIR);
        if !dir.exists() {
            return Ok(None);
        }
        let mut latest: Option<(usize, PathBuf)> = None;
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let path = entry.map_err(io_err(&dir))?.path();
            let generation = path
                .file_stem()
                .and_then(|s| s.to_str())
                .and_then(|s| s.strip_prefix("gen-"))
                .and_then(|s| s.parse::<usize>().ok());
            if let Some(g) = generation {
                if latest.as_ref().is_none_or(|(best, _)| g > *best) {
                    latest = Some((g, path));
                }
            }
        }
        match latest {
            Some((_, path)) => {
                let record: CheckpointRecord = read_json(&path)?;
                if record.config_hash != self.id.config_hash {
                    return Err(RunError::Malformed { path, message: "checkpoint belongs to another run".into() });
                }
                Ok(Some(record.checkpoint))
            }
            None => Ok(None),
        }
    }

    fn genome_record(&self, generation: usize, genome: &Genome, eval: &EvalResult) -> GenomeRecord {
        GenomeRecord {
            run_id: self.id.run_id.clone(),
            config_hash: self.id.config_hash.clone(),
            encoding: self.config.encoding,
            generation,
            forward_displacement: eval.forward_displacement,
            goal_distance: eval.goal_distance,
            heading_deg: eval.heading_deg,
            genome: genome.clone(),
        }
    }
}

fn checkpoint_file(generation: usize) -> String {
    format!("{CHECKPOINT_DIR}/gen-{generation:06}.json")
}

fn is_empty_dir(path: &Path) -> Result<bool, RunError> {
    Ok(fs::read_dir(path).map_err(io_err(path))?.next().is_none())
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EvolveOptions {
    /// Replace an existing run directory.
    pub force: bool,
    /// Continue from the latest checkpoint of an existing run.
    pub resume: bool,
    pub quiet: bool,
}

#[derive(Debug)]
pub struct EvolveOutcome {
    pub id: RunIdentity,
    pub generations: usize,
    pub best_p: f64,
}

/// Runs evolution into `root`, writing stats, checkpoints, the best genome
/// and its gait.
pub fn evolve<E: BatchEvaluator + ?Sized>(
    config: &ExperimentConfig,
    root: &Path,
    options: EvolveOptions,
    evaluator: &E,
) -> Result<EvolveOutcome, RunError> {
    let exists = root.exists() && !is_empty_dir(root)?;
    let mut dir = if exists && options.resume {
        let dir = RunDir::open(root)?;
        if dir.id != config.identity() {
            return Err(RunError::Refused(format!(
                "{} holds run {}, not {}",
                root.display(),
                dir.id.run_id,
                config.identity().run_id
            )));
        }
        dir
    } else if exists {
        if !options.force {
            return Err(RunError::Refused(format!(
                "run directory {} already exists; pass --force to overwrite or --resume to continue",
                root.display()
            )));
        }
        if !root.join(RUN_FILE).exists() {
            return Err(RunError::Refused(format!(
                "{} is not empty and is not a run directory; refusing to overwrite it",
                root.display()
            )));
        }
        fs::remove_dir_all(root).map_err(io_err(root))?;
        RunDir::create(root, config)?
    } else {
        RunDir::create(root, config)?
    };

    let mut evolution = match dir.latest_checkpoint()? {
        Some(checkpoint) => Evolution::resume(checkpoint, evaluator)?,
        None => Evolution::new(config.evolution(), config.hexapod.clone(), evaluator)?,
    };
    let interval = config.checkpoint_interval;
    let quiet = options.quiet;
    let write_checkpoint = |dir: &mut RunDir, evo: &Evolution<'_, E>| {
        let record = CheckpointRecord {
            run_id: dir.id.run_id.clone(),
            config_hash: dir.id.config_hash.clone(),
            checkpoint: evo.checkpoint(),
        };
        dir.write(&checkpoint_file(evo.generation()), &to_json(&record))
    };
    if evolution.generation() == 0 {
        write_checkpoint(&mut dir, &evolution)?;
    }
    let mut failure: Option<RunError> = None;
    evolution.run(|evo| {
        let g = evo.generation();
        let due = (interval > 0 && g % interval == 0) || evo.is_finished();
        if due {
            if let Err(e) = write_checkpoint(&mut dir, evo) {
                failure = Some(e);
                return Err(hexevo_core::Error::InvalidConfig("checkpoint write failed".into()));
            }
            if !quiet {
                let s = evo.stats().last().expect("stats recorded");
                eprintln!(
                    "generation {g}/{}: best P {:.4} m, best F {:.4} m",
                    evo.config().generations,
                    s.best_p,
                    s.best_f
                );
            }
        }
        Ok(())
    })
    .map_err(|e| failure.take().unwrap_or(RunError::Core(e)))?;

    let stats = formats::stats_csv(&dir.id, evolution.stats());
    dir.write(STATS_FILE, &stats)?;
    let best = evolution.best();
    let record = dir.genome_record(evolution.generation(), &best.genome, &best.eval);
    dir.write(BEST_GENOME_FILE, &to_json(&record))?;
    dir.write("best_gait.svg", &formats::gait_svg(&dir.id, &best.eval.gait))?;
    dir.write("best_gait.pbm", &formats::gait_pbm(&dir.id, &best.eval.gait))?;
    dir.write("best_trajectory.csv", &formats::trajectory_csv(&dir.id, &best.eval.trajectory))?;
    dir.commit()?;
    Ok(EvolveOutcome {
        id: dir.id.clone(),
        generations: evolution.generation(),
        best_p: best.forward_displacement(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Intensity {
    Low,
    Medium,
    High,
}

impl Intensity {
    pub const ALL: [Intensity; 3] = [Intensity::Low, Intensity::Medium, Intensity::High];

    pub fn name(self) -> &'static str {
        match self {
            Intensity::Low => "low",
            Intensity::Medium => "medium",
            Intensity::High => "high",
        }
    }

    pub fn multiplier(self) -> f64 {
        match self {
            Intensity::Low => LOW_INTENSITY,
            Intensity::Medium => MEDIUM_INTENSITY,
            Intensity::High => HIGH_INTENSITY,
        }
    }

    /// Random-stream purpose, shared with the core intensity sweep.
    pub fn purpose(self) -> &'static str {
        match self {
            Intensity::Low => "signature-low",
            Intensity::Medium => "signature-medium",
            Intensity::High => "signature-high",
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SignatureSummary {
    pub run_id: String,
    pub config_hash: String,
    pub intensity: &'static str,
    pub multiplier: f64,
    pub samples: usize,
    pub parent_p: f64,
    pub median_f1: f64,
    pub median_f2: f64,
    pub beneficial: f64,
    pub beneficial_strict: f64,
    pub lethal_fraction: f64,
    pub bandwidth_f2: f64,
    pub bandwidth_f1: f64,
    pub grid_mass: f64,
}

/// Samples the evolvability signature of the run's best genome at each
/// requested intensity.
pub fn signature<E: BatchEvaluator + ?Sized>(
    root: &Path,
    intensities: &[Intensity],
    evaluator: &E,
) -> Result<Vec<SignatureSummary>, RunError> {
    let mut dir = RunDir::open(root)?;
    let parent = dir.best_genome()?;
    let config = dir.config.clone();
    let mut summaries = Vec::new();
    for &intensity in intensities {
        let mutation = config
            .mutation
            .with_intensity(config.mutation.intensity_multiplier * intensity.multiplier());
        let samples = sample_signature(
            config.encoding,
            &parent.genome,
            config.signature.samples,
            &mutation,
            &config.hexapod,
            config.seed,
            intensity.purpose(),
            evaluator,
        )?;
        let grid = kde_grid(&samples, config.signature.window);
        let name = intensity.name();
        dir.write(&format!("signature/{name}_samples.csv"), &formats::samples_csv(&dir.id, &samples))?;
        dir.write(&format!("signature/{name}_grid.csv"), &formats::grid_csv(&dir.id, &grid))?;
        dir.write(&format!("signature/{name}_heatmap.svg"), &formats::heatmap_svg(&dir.id, &grid))?;
        let summary = summarize_signature(&dir.id, intensity, &samples, grid.bandwidth, grid.mass())?;
        dir.write(&format!("signature/{name}_summary.json"), &to_json(&summary))?;
        summaries.push(summary);
    }
    dir.commit()?;
    Ok(summaries)
}

fn summarize_signature(
    id: &RunIdentity,
    intensity: Intensity,
    samples: &[SignatureSample],
    bandwidth: (f64, f64),
    grid_mass: f64,
) -> Result<SignatureSummary, RunError> {
    let f1: Vec<f64> = samples.iter().map(|s| s.f1).collect();
    let f2: Vec<f64> = samples.iter().map(|s| s.f2).collect();
    let lethal = samples.iter().filter(|s| s.is_lethal()).count();
    Ok(SignatureSummary {
        run_id: id.run_id.clone(),
        config_hash: id.config_hash.clone(),
        intensity: intensity.name(),
        multiplier: intensity.multiplier(),
        samples: samples.len(),
        parent_p: samples.first().map_or(0.0, |s| s.parent_p),
        median_f1: median(&f1).ok_or(hexevo_core::Error::Empty)?,
        median_f2: median(&f2).ok_or(hexevo_core::Error::Empty)?,
        beneficial: beneficial_proportion(samples, LETHAL_F1, DIVERSE_F2)?,
        beneficial_strict: beneficial_proportion(samples, STRICT_F1, DIVERSE_F2)?,
        lethal_fraction: lethal as f64 / samples.len() as f64,
        bandwidth_f2: bandwidth.0,
        bandwidth_f1: bandwidth.1,
        grid_mass,
    })
}

#[derive(Debug, Serialize)]
pub struct DamageSummary {
    pub run_id: String,
    pub config_hash: String,
    pub scenario: DamageScenario,
    pub removed_legs: Vec<usize>,
    pub original_p: f64,
    pub generation_budget: usize,
    pub initial_proportion: f64,
    pub final_proportion: f64,
    pub target_proportion: f64,
    /// First generation at or above the target, or the budget when capped.
    pub generations_to_target: usize,
    pub target_reached: bool,
    /// The generation count is the budget, not a measured recovery time.
    pub capped: bool,
}

/// Re-evolves the run's best genome on the damaged robot for each scenario.
pub fn damage<E: BatchEvaluator + ?Sized>(
    root: &Path,
    scenarios: &[DamageScenario],
    evaluator: &E,
    quiet: bool,
) -> Result<Vec<DamageSummary>, RunError> {
    let mut dir = RunDir::open(root)?;
    let champion = dir.best_genome()?;
    let config = dir.config.clone();
    let original_p = evaluate_genome(config.encoding, &champion.genome, &config.hexapod).forward_displacement;
    let interval = config.checkpoint_interval;
    let mut summaries = Vec::new();
    for &scenario in scenarios {
        let artifacts = recovery_experiment(
            &champion.genome,
            original_p,
            scenario,
            &config.recovery(),
            &config.hexapod,
            evaluator,
            |evo| {
                let g = evo.generation();
                if !quiet && interval > 0 && g > 0 && (g % interval == 0 || evo.is_finished()) {
                    let p = evo.stats().last().map_or(0.0, |s| s.best_p);
                    eprintln!("{scenario} generation {g}/{}: best P {:.4} m", evo.config().generations, p);
                }
                Ok(())
            },
        )?;
        let name = scenario.name();
        dir.write(&format!("damage/{name}_recovery.csv"), &formats::recovery_csv(&dir.id, &artifacts.curve))?;
        let best = dir.genome_record(config.damage.generations, &artifacts.best.genome, &artifacts.best.eval);
        dir.write(&format!("damage/{name}_best_genome.json"), &to_json(&best))?;
        let summary = DamageSummary {
            run_id: dir.id.run_id.clone(),
            config_hash: dir.id.config_hash.clone(),
            scenario,
            removed_legs: scenario.removed_legs().iter().collect(),
            original_p,
            generation_budget: config.damage.generations,
            initial_proportion: artifacts.curve.first().map_or(0.0, |p| p.proportion_restored),
            final_proportion: artifacts.final_proportion(),
            target_proportion: hexevo_core::evolution::RECOVERY_TARGET,
            generations_to_target: artifacts.generations_to_target,
            target_reached: artifacts.target_reached,
            capped: !artifacts.target_reached,
        };
        dir.write(&format!("damage/{name}_summary.json"), &to_json(&summary))?;
        summaries.push(summary);
    }
    dir.commit()?;
    Ok(summaries)
}

#[derive(Clone, Debug, Default)]
pub struct RenderOptions {
    /// Genome file to render instead of the run's best genome.
    pub genome: Option<PathBuf>,
    /// Render on a robot with these legs removed.
    pub scenario: Option<DamageScenario>,
    /// Also dump the oscillator network state each tick.
    pub trace: bool,
}

/// Re-simulates a genome and writes its gait, trajectory and (for
/// oscillator controllers) a state trace. Returns the files written.
pub fn render(root: &Path, options: &RenderOptions) -> Result<Vec<String>, RunError> {
    let mut dir = RunDir::open(root)?;
    let record = match &options.genome {
        Some(path) => read_json::<GenomeRecord>(path)?,
        None => dir.best_genome()?,
    };
    let mut hexapod = dir.config.hexapod.clone();
    let mut prefix = String::from("render/");
    if let Some(s) = options.scenario {
        hexapod = hexapod.with_damage(hexapod.damage.union(s.removed_legs()));
        prefix.push_str(s.name());
        prefix.push('_');
    }
    let mut controller = record.encoding.decode(&record.genome)?;
    let mut trace = Vec::new();
    let eval = simulate_observed(&mut controller, &hexapod, |view| {
        if let (true, Controller::Oscillator(c)) = (options.trace, view.controller) {
            let state = c.state();
            trace.push(TraceRow {
                t: view.t,
                theta: state.theta.clone(),
                alpha: state.alpha.clone(),
                gamma: state.outputs(),
            });
        }
    });
    let files = [
        (format!("{prefix}gait.svg"), formats::gait_svg(&dir.id, &eval.gait)),
        (format!("{prefix}gait.pbm"), formats::gait_pbm(&dir.id, &eval.gait)),
        (format!("{prefix}trajectory.csv"), formats::trajectory_csv(&dir.id, &eval.trajectory)),
    ];
    let mut names = Vec::new();
    for (name, contents) in files {
        dir.write(&name, &contents)?;
        names.push(name);
    }
    if !trace.is_empty() {
        let name = format!("{prefix}cpg_trace.csv");
        dir.write(&name, &formats::cpg_trace_csv(&dir.id, &trace))?;
        names.push(name);
    }
    dir.commit()?;
    Ok(names)
}

#[derive(Debug, Default)]
pub struct VerifyReport {
    pub files_checked: usize,
    pub problems: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Recomputes the config hash and every manifest digest. With `replay`, also
/// re-runs the evolution and compares the stats byte for byte.
pub fn verify<E: BatchEvaluator + ?Sized>(root: &Path, replay: bool, evaluator: &E) -> Result<VerifyReport, RunError> {
    let mut report = VerifyReport::default();
    let dir = match RunDir::open(root) {
        Ok(d) => d,
        Err(RunError::Malformed { path, message }) => {
            report.problems.push(format!("{}: {message}", path.display()));
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    let manifest: Manifest = read_json(&root.join(MANIFEST_FILE))?;
    if manifest.config_hash != dir.id.config_hash || manifest.run_id != dir.id.run_id {
        report.problems.push(format!(
            "{MANIFEST_FILE}: records run {} but the config hashes to {}",
            manifest.run_id, dir.id.run_id
        ));
    }
    for (name, digest) in &manifest.files {
        report.files_checked += 1;
        let path = root.join(name);
        let Ok(bytes) = fs::read(&path) else {
            report.problems.push(format!("{name}: missing"));
            continue;
        };
        if &sha256_hex(&bytes) != digest {
            report.problems.push(format!("{name}: contents changed since it was written"));
        }
        if !String::from_utf8_lossy(&bytes).contains(&dir.id.run_id) {
            report.problems.push(format!("{name}: does not carry run id {}", dir.id.run_id));
        }
    }
    if replay {
        let mut evolution = Evolution::new(dir.config.evolution(), dir.config.hexapod.clone(), evaluator)?;
        evolution.run(|_| Ok(()))?;
        let expected = formats::stats_csv(&dir.id, evolution.stats());
        let path = root.join(STATS_FILE);
        let actual = fs::read_to_string(&path).map_err(io_err(&path))?;
        if actual != expected {
            report.problems.push(format!("{STATS_FILE}: replayed run differs from the stored statistics"));
        }
    }
    Ok(report)
}
