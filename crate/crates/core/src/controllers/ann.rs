//! Minimal HyperNEAT: a CPPN paints the weights of a fixed 14-12-12
//! feedforward network.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use super::substrate::{
    unit_limit, unit_position, COSINE_POSITION, HIDDEN_SCALE, SINE_POSITION, UNITS,
};
use super::{JointCommand, Phenotype};
use crate::cppn::{sigmoid, CppnGenome};
use crate::Result;

pub const ANN_INPUTS: usize = UNITS + 2;
pub const ANN_HIDDEN: usize = UNITS;
pub const ANN_OUTPUTS: usize = UNITS;
/// CPPN outputs in [-1, 1] are scaled to this weight magnitude.
pub const ANN_WEIGHT_RANGE: f64 = 3.0;
/// Pseudo-positions averaged into one 15 ms command.
pub const PSEUDO_STEPS: usize = 4;
pub const PSEUDO_INTERVAL: f64 = 0.00375;

fn input_position(i: usize) -> (f64, f64) {
    match i {
        i if i < UNITS => unit_position(i),
        i if i == UNITS => SINE_POSITION,
        _ => COSINE_POSITION,
    }
}

fn hidden_position(h: usize) -> (f64, f64) {
    let (x, y) = unit_position(h);
    (x * HIDDEN_SCALE, y * HIDDEN_SCALE)
}

#[derive(Clone, Debug)]
pub struct AnnController {
    /// `input_hidden[h][i]`
    input_hidden: Vec<[f64; ANN_INPUTS]>,
    /// `hidden_output[o][h]`
    hidden_output: Vec<[f64; ANN_HIDDEN]>,
    previous: JointCommand,
}

/// Fills the weight matrices by querying the CPPN at
/// `(x_source, y_source, x_target, y_target, 1)` for every proximal pair.
pub fn decode_ann(genome: &CppnGenome) -> Result<AnnController> {
    let mut scratch = Vec::new();
    let mut out = [0.0];
    let mut query = |src: (f64, f64), dst: (f64, f64)| -> Result<f64> {
        genome.evaluate_with(&[src.0, src.1, dst.0, dst.1, 1.0], &mut scratch, &mut out)?;
        Ok(out[0] * ANN_WEIGHT_RANGE)
    };
    let mut input_hidden = vec![[0.0; ANN_INPUTS]; ANN_HIDDEN];
    for (h, row) in input_hidden.iter_mut().enumerate() {
        for (i, w) in row.iter_mut().enumerate() {
            *w = query(input_position(i), hidden_position(h))?;
        }
    }
    let mut hidden_output = vec![[0.0; ANN_HIDDEN]; ANN_OUTPUTS];
    for (o, row) in hidden_output.iter_mut().enumerate() {
        for (h, w) in row.iter_mut().enumerate() {
            *w = query(hidden_position(h), unit_position(o))?;
        }
    }
    Ok(AnnController {
        input_hidden,
        hidden_output,
        previous: JointCommand::default(),
    })
}

/// Runs `net` at the four pseudo-times `t, t+3.75ms, t+7.5ms, t+11.25ms`
/// and averages the pseudo-outputs. Angle inputs are the previous command
/// normalized by servo range; the last two inputs are a 1 Hz sine and cosine.
pub fn average_pseudo_steps<F>(previous: &JointCommand, t: f64, mut net: F) -> [f64; ANN_OUTPUTS]
where
    F: FnMut(&[f64; ANN_INPUTS]) -> [f64; ANN_OUTPUTS],
{
    let mut inputs = [0.0; ANN_INPUTS];
    for (u, a) in previous.to_units().iter().enumerate() {
        inputs[u] = a / unit_limit(u);
    }
    let mut sum = [0.0; ANN_OUTPUTS];
    for k in 0..PSEUDO_STEPS {
        let tp = t + k as f64 * PSEUDO_INTERVAL;
        inputs[UNITS] = libm::sin(TAU * tp);
        inputs[UNITS + 1] = libm::cos(TAU * tp);
        for (s, p) in sum.iter_mut().zip(net(&inputs)) {
            *s += p;
        }
    }
    sum.map(|s| s / PSEUDO_STEPS as f64)
}

impl AnnController {
    pub fn forward(&self, inputs: &[f64; ANN_INPUTS]) -> [f64; ANN_OUTPUTS] {
        let mut hidden = [0.0; ANN_HIDDEN];
        for (h, row) in hidden.iter_mut().zip(&self.input_hidden) {
            *h = sigmoid(row.iter().zip(inputs).map(|(w, x)| w * x).sum());
        }
        let mut out = [0.0; ANN_OUTPUTS];
        for (o, row) in out.iter_mut().zip(&self.hidden_output) {
            *o = sigmoid(row.iter().zip(&hidden).map(|(w, x)| w * x).sum());
        }
        out
    }

    pub fn tick(&mut self, t: f64) -> JointCommand {
        let avg = average_pseudo_steps(&self.previous, t, |x| self.forward(x));
        let mut units = [0.0; UNITS];
        for (u, v) in units.iter_mut().enumerate() {
            *v = avg[u] * unit_limit(u);
        }
        let command = JointCommand::from_units(&units);
        self.previous = command;
        command
    }

    pub fn query_count() -> usize {
        ANN_INPUTS * ANN_HIDDEN + ANN_HIDDEN * ANN_OUTPUTS
    }

    pub fn phenotype(&self) -> Phenotype {
        Phenotype::Ann {
            input_hidden: self.input_hidden.iter().map(|r| r.to_vec()).collect(),
            hidden_output: self.hidden_output.iter().map(|r| r.to_vec()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpg::MIRROR;
    use crate::cppn::{ActivationKind, ConnectionGene, NodeGene};

    fn cppn(conns: Vec<ConnectionGene>) -> CppnGenome {
        let mut nodes: Vec<NodeGene> = (0..5)
            .map(|id| NodeGene { id, kind: ActivationKind::Linear })
            .collect();
        nodes.push(NodeGene { id: 5, kind: ActivationKind::Sine });
        CppnGenome::from_parts(5, 1, nodes, conns).unwrap()
    }

    #[test]
    fn zero_weights_hold_mid_range() {
        let mut c = decode_ann(&cppn(vec![])).unwrap();
        for k in 0..20 {
            let cmd = c.tick(k as f64 * 0.015);
            assert!(cmd.s1.iter().chain(&cmd.s2).all(|&v| v == 0.0));
        }
    }

    #[test]
    fn x_blind_cppn_gives_mirrored_weights() {
        let c = decode_ann(&cppn(vec![
            ConnectionGene { source: 1, target: 5, weight: 0.7 },
            ConnectionGene { source: 3, target: 5, weight: -0.4 },
            ConnectionGene { source: 4, target: 5, weight: 0.2 },
        ]))
        .unwrap();
        for h in 0..ANN_HIDDEN {
            for i in 0..UNITS {
                assert_eq!(c.input_hidden[h][i], c.input_hidden[MIRROR[h]][MIRROR[i]]);
            }
            for o in 0..ANN_OUTPUTS {
                assert_eq!(c.hidden_output[o][h], c.hidden_output[MIRROR[o]][MIRROR[h]]);
            }
        }
    }

    #[test]
    fn query_count_matches_grids() {
        assert_eq!(AnnController::query_count(), 14 * 12 + 12 * 12);
        let c = decode_ann(&cppn(vec![])).unwrap();
        let Phenotype::Ann { input_hidden, hidden_output } = c.phenotype() else {
            unreachable!()
        };
        let n: usize = input_hidden.iter().chain(&hidden_output).map(Vec::len).sum();
        assert_eq!(n, AnnController::query_count());
    }

    #[test]
    fn command_is_the_mean_of_scripted_pseudo_outputs() {
        let scripted = [0.8, -0.2, 0.4, 0.1];
        let mut k = 0;
        let avg = average_pseudo_steps(&JointCommand::default(), 0.3, |_| {
            let v = scripted[k];
            k += 1;
            [v; ANN_OUTPUTS]
        });
        let mean = scripted.iter().sum::<f64>() / 4.0;
        assert!(avg.iter().all(|&a| (a - mean).abs() < 1e-15));
    }

    #[test]
    fn pseudo_times_feed_sine_and_cosine() {
        let mut seen = Vec::new();
        average_pseudo_steps(&JointCommand::default(), 0.015, |x| {
            seen.push((x[UNITS], x[UNITS + 1]));
            [0.0; ANN_OUTPUTS]
        });
        for (k, &(s, c)) in seen.iter().enumerate() {
            let tp = 0.015 + 0.00375 * k as f64;
            assert!((s - libm::sin(TAU * tp)).abs() < 1e-15);
            assert!((c - libm::cos(TAU * tp)).abs() < 1e-15);
        }
    }

    #[test]
    fn ticks_are_pure_given_state() {
        let g = cppn(vec![
            ConnectionGene { source: 0, target: 5, weight: 1.1 },
            ConnectionGene { source: 2, target: 5, weight: -0.9 },
        ]);
        let mut a = decode_ann(&g).unwrap();
        let mut b = a.clone();
        for k in 0..50 {
            let t = k as f64 * 0.015;
            let ca = a.tick(t);
            assert_eq!(ca, b.tick(t));
            assert!(ca.within_limits());
        }
    }
}
