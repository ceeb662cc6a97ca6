//! Experiment configuration: one JSON document, optionally layered on a
//! named preset, hashed into a run ID.

use std::fmt;
use std::path::{Path, PathBuf};

use hexevo_core::cppn::MutationConfig;
use hexevo_core::evolution::{DamageScenario, DiversityReference, EvolutionConfig};
use hexevo_core::genome::Encoding;
use hexevo_core::signature::Window;
use hexevo_core::simulator::HexapodConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const PRESETS: [&str; 3] = ["desk-scale", "desk-supg", "paper-scale"];

/// Fully resolved experiment. Every field is explicit so the serialized form
/// pins the run down completely.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub encoding: Encoding,
    pub seed: u64,
    pub population_size: usize,
    pub generations: usize,
    pub mutation: MutationConfig,
    pub hexapod: HexapodConfig,
    pub diversity_reference: DiversityReference,
    /// Generations between checkpoints; 0 writes only the final one.
    pub checkpoint_interval: usize,
    pub signature: SignatureSettings,
    pub damage: DamageSettings,
    /// Where outputs go. Excluded from the run ID.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignatureSettings {
    /// Independent mutants per intensity.
    pub samples: usize,
    pub window: Window,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DamageSettings {
    /// Scenarios run by `damage` when none is named.
    pub scenarios: Vec<DamageScenario>,
    pub generations: usize,
}

/// What a user may write: every field optional, layered over a preset.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDocument {
    preset: Option<String>,
    encoding: Option<Encoding>,
    seed: Option<u64>,
    population_size: Option<usize>,
    generations: Option<usize>,
    mutation: Option<MutationConfig>,
    hexapod: Option<HexapodConfig>,
    diversity_reference: Option<DiversityReference>,
    checkpoint_interval: Option<usize>,
    signature: Option<SignatureDocument>,
    damage: Option<DamageDocument>,
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SignatureDocument {
    samples: Option<usize>,
    window: Option<Window>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DamageDocument {
    scenarios: Option<Vec<DamageScenario>>,
    generations: Option<usize>,
}

/// A configuration problem, located in the source document when possible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub source: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{}:{l}:{c}: {}", self.source, self.message),
            (Some(l), None) => write!(f, "{}:{l}: {}", self.source, self.message),
            _ => write!(f, "{}: {}", self.source, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Values a preset fixes; fields left `None` must come from the document.
struct Preset {
    encoding: Option<Encoding>,
    population_size: usize,
    generations: usize,
    checkpoint_interval: usize,
    samples: usize,
    damage_generations: usize,
}

fn preset(name: &str) -> Option<Preset> {
    match name {
        "desk-scale" => Some(Preset {
            encoding: None,
            population_size: 32,
            generations: 300,
            checkpoint_interval: 50,
            samples: 200,
            damage_generations: 300,
        }),
        "desk-supg" => Some(Preset {
            encoding: Some(Encoding::Supg),
            population_size: 32,
            generations: 300,
            checkpoint_interval: 50,
            samples: 200,
            damage_generations: 300,
        }),
        "paper-scale" => Some(Preset {
            encoding: None,
            population_size: 100,
            generations: 8000,
            checkpoint_interval: 500,
            samples: 1000,
            damage_generations: 8000,
        }),
        _ => None,
    }
}

impl ExperimentConfig {
    /// Reads and resolves a config file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let source = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            source: source.clone(),
            line: None,
            column: None,
            message: format!("cannot read: {e}"),
        })?;
        Self::parse(&text, &source)
    }

    /// Resolves a config document. `source` names it in error messages.
    pub fn parse(text: &str, source: &str) -> Result<Self, ConfigError> {
        let doc: ConfigDocument = serde_json::from_str(text).map_err(|e| ConfigError {
            source: source.into(),
            line: Some(e.line()).filter(|&l| l > 0),
            column: Some(e.column()).filter(|&c| c > 0),
            message: strip_position(&e.to_string()),
        })?;
        let at_key = |key: &str, message: String| ConfigError {
            source: source.into(),
            line: line_of_key(text, key),
            column: None,
            message,
        };

        let base = match &doc.preset {
            Some(name) => Some(preset(name).ok_or_else(|| {
                at_key("preset", format!("unknown preset {name:?}; expected one of {}", PRESETS.join(", ")))
            })?),
            None => None,
        };
        let required = |value: Option<usize>, fallback: Option<usize>, key: &str| {
            value.or(fallback).ok_or_else(|| at_key(key, format!("missing field `{key}` (no preset supplies it)")))
        };

        let encoding = doc
            .encoding
            .or(base.as_ref().and_then(|p| p.encoding))
            .ok_or_else(|| at_key("encoding", "missing field `encoding`".into()))?;
        let population_size = required(doc.population_size, base.as_ref().map(|p| p.population_size), "population_size")?;
        let generations = required(doc.generations, base.as_ref().map(|p| p.generations), "generations")?;
        let signature = doc.signature.unwrap_or_default();
        let damage = doc.damage.unwrap_or_default();

        let config = ExperimentConfig {
            encoding,
            seed: doc.seed.unwrap_or(0),
            population_size,
            generations,
            mutation: doc.mutation.unwrap_or_default(),
            hexapod: doc.hexapod.unwrap_or_default(),
            diversity_reference: doc.diversity_reference.unwrap_or_default(),
            checkpoint_interval: doc
                .checkpoint_interval
                .or(base.as_ref().map(|p| p.checkpoint_interval))
                .unwrap_or(50),
            signature: SignatureSettings {
                samples: signature.samples.or(base.as_ref().map(|p| p.samples)).unwrap_or(200),
                window: signature.window.unwrap_or_default(),
            },
            damage: DamageSettings {
                scenarios: damage.scenarios.unwrap_or_else(|| DamageScenario::ALL.to_vec()),
                generations: damage
                    .generations
                    .or(base.as_ref().map(|p| p.damage_generations))
                    .unwrap_or(generations),
            },
            output_dir: doc.output_dir,
        };
        config.validate().map_err(|(key, message)| at_key(key, message))?;
        Ok(config)
    }

    /// Semantic checks; the error names the offending key.
    fn validate(&self) -> Result<(), (&'static str, String)> {
        self.evolution()
            .validate()
            .map_err(|e| ("population_size", e.to_string()))?;
        self.mutation.validate().map_err(|e| ("mutation", e.to_string()))?;
        self.hexapod.validate().map_err(|e| ("hexapod", e.to_string()))?;
        if self.signature.samples == 0 {
            return Err(("samples", "signature needs at least one sample".into()));
        }
        let w = self.signature.window;
        if !(w.x_max > w.x_min && w.y_max > w.y_min) {
            return Err(("window", "window bounds must satisfy min < max on both axes".into()));
        }
        if self.damage.scenarios.is_empty() {
            return Err(("scenarios", "at least one damage scenario is required".into()));
        }
        Ok(())
    }

    pub fn evolution(&self) -> EvolutionConfig {
        EvolutionConfig {
            population_size: self.population_size,
            generations: self.generations,
            encoding: self.encoding,
            mutation: self.mutation.clone(),
            seed: self.seed,
            diversity_reference: self.diversity_reference,
        }
    }

    pub fn recovery(&self) -> EvolutionConfig {
        EvolutionConfig {
            generations: self.damage.generations,
            ..self.evolution()
        }
    }

    /// Serialization the identity is computed from: the resolved config
    /// without its output directory.
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        serde_json::to_string(&c).expect("config serializes")
    }

    pub fn identity(&self) -> RunIdentity {
        RunIdentity::of(&self.canonical_json())
    }
}

/// Hash of the canonical config, and the short run ID derived from it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunIdentity {
    pub run_id: String,
    pub config_hash: String,
}

impl RunIdentity {
    pub fn of(canonical: &str) -> Self {
        let config_hash = hex::encode(Sha256::digest(canonical.as_bytes()));
        RunIdentity {
            run_id: config_hash[..16].to_string(),
            config_hash,
        }
    }
}

/// serde_json appends " at line L column C"; the position is reported
/// separately.
fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message.to_string(),
    }
}

/// 1-based line of the first occurrence of `"key"`.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}
