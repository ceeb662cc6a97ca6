//! Command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hexevo_core::evolution::DamageScenario;

use crate::config::ExperimentConfig;
use crate::evaluator::RayonEvaluator;
use crate::run::{self, EvolveOptions, Intensity, RenderOptions, RunError};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "hexevo",
    version,
    about = "Evolve hexapod gaits and measure their evolvability",
    after_help = "Exit codes: 0 ok, 1 usage, 2 config, 3 runtime failure."
)]
pub struct Cli {
    /// Evaluation worker threads (default: logical cores). Results do not
    /// depend on this.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u16).range(1..))]
    pub workers: Option<u16>,
    /// Suppress progress messages on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve a population and write stats, checkpoints and the best genome.
    Evolve(EvolveArgs),
    /// Sample the evolvability signature of a run's best genome.
    Signature(SignatureArgs),
    /// Re-evolve a run's best genome after removing legs.
    Damage(DamageArgs),
    /// Re-simulate a genome and write its gait and trajectory.
    Render(RenderArgs),
    /// Recompute the run's hashes and compare them with the manifest.
    Verify(VerifyArgs),
    /// Print the fully resolved config and its run id.
    Config(ConfigArgs),
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    /// Experiment config (JSON).
    pub config: PathBuf,
    /// Run directory; overrides the config's output_dir.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Replace an existing run directory.
    #[arg(long, conflicts_with = "resume")]
    pub force: bool,
    /// Continue an interrupted run from its latest checkpoint.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum IntensityArg {
    Low,
    Medium,
    High,
}

impl From<IntensityArg> for Intensity {
    fn from(a: IntensityArg) -> Self {
        match a {
            IntensityArg::Low => Intensity::Low,
            IntensityArg::Medium => Intensity::Medium,
            IntensityArg::High => Intensity::High,
        }
    }
}

#[derive(Debug, Args)]
pub struct SignatureArgs {
    pub run_dir: PathBuf,
    /// Intensities to sample (repeatable). Defaults to medium.
    #[arg(long, value_enum, conflicts_with = "sweep")]
    pub intensity: Vec<IntensityArg>,
    /// Sample low, medium and high.
    #[arg(long)]
    pub sweep: bool,
}

fn parse_scenario(s: &str) -> Result<DamageScenario, String> {
    DamageScenario::from_name(s).ok_or_else(|| format!("unknown scenario {s:?}; expected S1, S2 or S3"))
}

#[derive(Debug, Args)]
pub struct DamageArgs {
    pub run_dir: PathBuf,
    /// Scenarios to run: S1 (right-middle leg), S2 (both middle legs),
    /// S3 (right-middle and left-rear). Defaults to the config's list.
    #[arg(value_parser = parse_scenario)]
    pub scenarios: Vec<DamageScenario>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    pub run_dir: PathBuf,
    /// Genome record to render instead of the run's best genome.
    #[arg(long)]
    pub genome: Option<PathBuf>,
    /// Remove the legs of this scenario before simulating.
    #[arg(long, value_parser = parse_scenario)]
    pub scenario: Option<DamageScenario>,
    /// Also write the oscillator state each tick (oscillator encodings).
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub run_dir: PathBuf,
    /// Also re-run the evolution and compare statistics byte for byte.
    #[arg(long)]
    pub replay: bool,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Config file, or a preset name prefixed with `preset:` (one of
    /// desk-scale, desk-supg, paper-scale).
    pub config: String,
}

/// Parses arguments and runs; the result is the process exit code.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(run(cli))
}

pub fn run(cli: Cli) -> u8 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                RunError::Config(_) => EXIT_CONFIG,
                _ => EXIT_RUNTIME,
            }
        }
    }
}

fn evaluator(workers: Option<u16>) -> Result<RayonEvaluator, RunError> {
    RayonEvaluator::new(workers.map(usize::from)).map_err(|e| RunError::Refused(format!("cannot start worker pool: {e}")))
}

fn dispatch(cli: Cli) -> Result<u8, RunError> {
    match cli.command {
        Command::Evolve(args) => {
            let config = ExperimentConfig::load(&args.config)?;
            let Some(out) = args.out.or_else(|| config.output_dir.clone()) else {
                eprintln!("error: no run directory; pass --out or set output_dir in the config");
                return Ok(EXIT_USAGE);
            };
            let options = EvolveOptions { force: args.force, resume: args.resume, quiet: cli.quiet };
            let outcome = run::evolve(&config, &out, options, &evaluator(cli.workers)?)?;
            println!(
                "run {} finished {} generations; selected individual P {:.4} m; outputs in {}",
                outcome.id.run_id,
                outcome.generations,
                outcome.best_p,
                out.display()
            );
        }
        Command::Signature(args) => {
            let intensities: Vec<Intensity> = if args.sweep {
                Intensity::ALL.to_vec()
            } else if args.intensity.is_empty() {
                vec![Intensity::Medium]
            } else {
                let mut v: Vec<Intensity> = Vec::new();
                for i in args.intensity {
                    if !v.contains(&i.into()) {
                        v.push(i.into());
                    }
                }
                v
            };
            for s in run::signature(&args.run_dir, &intensities, &evaluator(cli.workers)?)? {
                println!(
                    "{}: {} mutants, median f1 {:.4}, median f2 {:.4}, beneficial {:.3}, strict {:.3}, lethal {:.3}",
                    s.intensity, s.samples, s.median_f1, s.median_f2, s.beneficial, s.beneficial_strict, s.lethal_fraction
                );
            }
        }
        Command::Damage(args) => {
            let scenarios = if args.scenarios.is_empty() {
                run::RunDir::open(&args.run_dir)?.config.damage.scenarios
            } else {
                args.scenarios
            };
            for s in run::damage(&args.run_dir, &scenarios, &evaluator(cli.workers)?, cli.quiet)? {
                let time = if s.capped {
                    format!("not reached within {} generations", s.generation_budget)
                } else {
                    format!("{} generations", s.generations_to_target)
                };
                println!(
                    "{}: restored {:.3} -> {:.3} of {:.4} m; 85% target {time}",
                    s.scenario, s.initial_proportion, s.final_proportion, s.original_p
                );
            }
        }
        Command::Render(args) => {
            let options = RenderOptions { genome: args.genome, scenario: args.scenario, trace: args.trace };
            for name in run::render(&args.run_dir, &options)? {
                println!("{}", args.run_dir.join(name).display());
            }
        }
        Command::Verify(args) => {
            let report = run::verify(&args.run_dir, args.replay, &evaluator(cli.workers)?)?;
            for p in &report.problems {
                println!("FAIL {p}");
            }
            if !report.ok() {
                return Ok(EXIT_RUNTIME);
            }
            println!("ok: {} files match the manifest", report.files_checked);
        }
        Command::Config(args) => {
            let config = match args.config.strip_prefix("preset:") {
                Some(name) => ExperimentConfig::parse(&format!("{{\"preset\": {name:?}}}"), &args.config)?,
                None => ExperimentConfig::load(args.config.as_ref())?,
            };
            let id = config.identity();
            println!("{}", serde_json::to_string_pretty(&config).expect("config serializes"));
            eprintln!("run_id {} config_hash {}", id.run_id, id.config_hash);
        }
    }
    Ok(EXIT_OK)
}
