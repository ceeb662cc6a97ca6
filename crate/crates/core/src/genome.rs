//! Encodings and the genomes they evolve.

use core::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::controllers::{
    decode_ann, decode_cpg, decode_cpg_fb, decode_direct, decode_supg, Controller, DirectGenome,
};
use crate::cppn::{CppnGenome, MutationConfig};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Encoding {
    Direct,
    Cpg,
    #[serde(rename = "cpg-fb")]
    CpgFeedback,
    Ann,
    Supg,
}

impl Encoding {
    pub const ALL: [Encoding; 5] = [
        Encoding::Direct,
        Encoding::Cpg,
        Encoding::CpgFeedback,
        Encoding::Ann,
        Encoding::Supg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Encoding::Direct => "direct",
            Encoding::Cpg => "cpg",
            Encoding::CpgFeedback => "cpg-fb",
            Encoding::Ann => "ann",
            Encoding::Supg => "supg",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name().eq_ignore_ascii_case(name))
    }

    /// CPPN (inputs, outputs) for generative encodings.
    pub fn cppn_shape(self) -> Option<(usize, usize)> {
        match self {
            Encoding::Direct => None,
            Encoding::Cpg | Encoding::CpgFeedback => Some((4, 1)),
            Encoding::Ann => Some((5, 1)),
            Encoding::Supg => Some((3, 2)),
        }
    }

    pub fn random_genome<R: Rng + ?Sized>(self, rng: &mut R) -> Genome {
        match self.cppn_shape() {
            None => Genome::Direct(DirectGenome::random(rng)),
            Some((i, o)) => Genome::Cppn(CppnGenome::random(rng, i, o).expect("counts are positive")),
        }
    }

    /// Checks that `genome` has the shape this encoding decodes.
    pub fn check(self, genome: &Genome) -> Result<()> {
        match (self.cppn_shape(), genome) {
            (None, Genome::Direct(_)) => Ok(()),
            (Some((i, o)), Genome::Cppn(g)) if g.input_count() == i && g.output_count() == o => Ok(()),
            _ => Err(Error::EncodingMismatch(self.name())),
        }
    }

    pub fn decode(self, genome: &Genome) -> Result<Controller> {
        self.check(genome)?;
        Ok(match (self, genome) {
            (Encoding::Direct, Genome::Direct(g)) => Controller::Oscillator(decode_direct(g)),
            (Encoding::Cpg, Genome::Cppn(g)) => Controller::Oscillator(decode_cpg(g)?),
            (Encoding::CpgFeedback, Genome::Cppn(g)) => Controller::Oscillator(decode_cpg_fb(g)?),
            (Encoding::Ann, Genome::Cppn(g)) => Controller::Ann(decode_ann(g)?),
            (Encoding::Supg, Genome::Cppn(g)) => Controller::Supg(decode_supg(g)?),
            _ => unreachable!("shape checked above"),
        })
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Genome {
    Direct(DirectGenome),
    Cppn(CppnGenome),
}

impl Genome {
    pub fn mutate<R: Rng + ?Sized>(&self, config: &MutationConfig, rng: &mut R) -> Genome {
        match self {
            Genome::Direct(g) => Genome::Direct(g.mutate(config, rng)),
            Genome::Cppn(g) => Genome::Cppn(g.mutate(config, rng)),
        }
    }
}
