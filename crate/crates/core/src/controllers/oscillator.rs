//! Oscillator-network controllers: Direct, CPG and CPG with phase resetting.

use alloc::vec::Vec;
use core::f64::consts::PI;

use super::substrate::{unit_limit, unit_position};
use super::{ControllerKind, EdgeBias, JointCommand, Phenotype, SensorFrame};
use crate::cpg::{
    complete_loop_biases, AepConfig, CouplingGraph, OscillatorParams, OscillatorState, FREE_EDGES,
    OSCILLATORS, SUBSTEP,
};
use crate::cppn::CppnGenome;
use crate::Result;

#[derive(Clone, Debug)]
pub struct CpgController {
    params: OscillatorParams,
    graph: CouplingGraph,
    state: OscillatorState,
    feedback: Option<AepConfig>,
    kind: ControllerKind,
}

impl CpgController {
    pub fn new(
        params: OscillatorParams,
        graph: CouplingGraph,
        feedback: Option<AepConfig>,
        kind: ControllerKind,
    ) -> Self {
        let state = OscillatorState::initial(&graph);
        CpgController {
            params,
            graph,
            state,
            feedback,
            kind,
        }
    }

    pub fn kind(&self) -> ControllerKind {
        self.kind
    }

    pub fn params(&self) -> &OscillatorParams {
        &self.params
    }

    pub fn graph(&self) -> &CouplingGraph {
        &self.graph
    }

    pub fn state(&self) -> &OscillatorState {
        &self.state
    }

    pub fn feedback(&self) -> Option<AepConfig> {
        self.feedback
    }

    /// Reflection across the sagittal plane (left and right units swapped),
    /// current state included.
    pub fn mirrored(&self) -> CpgController {
        CpgController {
            params: self.params.mirrored(),
            graph: self.graph.mirrored(),
            state: self.state.mirrored(),
            feedback: self.feedback,
            kind: self.kind,
        }
    }

    /// Applies pending phase resets, integrates one control period in 5 ms
    /// Euler substeps, and returns γ mapped onto the joints.
    pub fn tick(&mut self, sensors: &SensorFrame, dt: f64) -> Result<JointCommand> {
        if let Some(aep) = &self.feedback {
            self.state.phase_reset(sensors.landed, aep);
        }
        let substeps = libm::round(dt / SUBSTEP).max(1.0) as usize;
        let h = dt / substeps as f64;
        for _ in 0..substeps {
            self.state.advance(&self.params, &self.graph, h)?;
        }
        let mut units = [0.0; OSCILLATORS];
        for (u, g) in units.iter_mut().zip(self.state.outputs()) {
            *u = g;
        }
        Ok(JointCommand::from_units(&units))
    }

    pub fn phenotype(&self) -> Phenotype {
        Phenotype::Oscillator {
            amplitudes: self.params.amplitudes.clone(),
            biases: self
                .graph
                .edges()
                .iter()
                .map(|&(from, to, phi)| EdgeBias { from, to, phi })
                .collect(),
            feedback: self.feedback,
        }
    }
}

/// The 23 oscillator parameters a CPG-encoding CPPN produces: amplitudes
/// queried at `(xᵢ, yᵢ, 0, 0)`, free biases queried once per edge with the
/// lower-numbered oscillator as source.
pub fn query_cpg_parameters(genome: &CppnGenome) -> Result<(Vec<f64>, [f64; 11])> {
    let mut scratch = Vec::new();
    let mut out = [0.0];
    let mut amplitudes = Vec::with_capacity(OSCILLATORS);
    for i in 0..OSCILLATORS {
        let (x, y) = unit_position(i);
        genome.evaluate_with(&[x, y, 0.0, 0.0], &mut scratch, &mut out)?;
        amplitudes.push((out[0] + 1.0) / 2.0 * unit_limit(i));
    }
    let mut biases = [0.0; 11];
    for (b, &(i, j)) in biases.iter_mut().zip(&FREE_EDGES) {
        let (xi, yi) = unit_position(i);
        let (xj, yj) = unit_position(j);
        genome.evaluate_with(&[xi, yi, xj, yj], &mut scratch, &mut out)?;
        *b = (out[0] + 1.0) * PI;
    }
    Ok((amplitudes, biases))
}

pub fn decode_cpg(genome: &CppnGenome) -> Result<CpgController> {
    let (amplitudes, biases) = query_cpg_parameters(genome)?;
    Ok(CpgController::new(
        OscillatorParams::new(amplitudes),
        complete_loop_biases(&biases),
        None,
        ControllerKind::Cpg,
    ))
}

pub fn decode_cpg_fb(genome: &CppnGenome) -> Result<CpgController> {
    let (amplitudes, biases) = query_cpg_parameters(genome)?;
    Ok(CpgController::new(
        OscillatorParams::new(amplitudes),
        complete_loop_biases(&biases),
        Some(AepConfig::default()),
        ControllerKind::CpgFeedback,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpg::MIRROR;
    use crate::cppn::{ActivationKind, ConnectionGene, NodeGene};
    use alloc::vec;

    fn cppn(conns: Vec<ConnectionGene>, out_kind: ActivationKind, hidden: &[(u32, ActivationKind)]) -> CppnGenome {
        let mut nodes: Vec<NodeGene> = (0..4)
            .map(|id| NodeGene { id, kind: ActivationKind::Linear })
            .collect();
        nodes.push(NodeGene { id: 4, kind: out_kind });
        nodes.extend(hidden.iter().map(|&(id, kind)| NodeGene { id, kind }));
        CppnGenome::from_parts(4, 1, nodes, conns).unwrap()
    }

    #[test]
    fn constant_zero_output_gives_mid_ranges() {
        let g = cppn(vec![], ActivationKind::Linear, &[]);
        let (amps, biases) = query_cpg_parameters(&g).unwrap();
        for (i, a) in amps.iter().enumerate() {
            assert_eq!(*a, unit_limit(i) / 2.0);
        }
        assert!(biases.iter().all(|&b| b == PI));
    }

    #[test]
    fn linear_in_x_mirrors_amplitudes() {
        let g = cppn(
            vec![ConnectionGene { source: 0, target: 4, weight: 1.0 }],
            ActivationKind::Linear,
            &[],
        );
        let (amps, _) = query_cpg_parameters(&g).unwrap();
        for i in 0..OSCILLATORS {
            let mid = unit_limit(i) / 2.0;
            assert!((amps[i] - mid + (amps[MIRROR[i]] - mid)).abs() < 1e-15);
        }
        assert!(amps[9] > amps[0]);
    }

    #[test]
    fn x_even_cppn_gives_equal_mirrored_parameters() {
        // output = gaussian(x_i) + gaussian(x_j) routed through hidden Gaussians
        let g = cppn(
            vec![
                ConnectionGene { source: 0, target: 5, weight: 1.3 },
                ConnectionGene { source: 2, target: 6, weight: 0.7 },
                ConnectionGene { source: 1, target: 4, weight: 0.4 },
                ConnectionGene { source: 5, target: 4, weight: 0.9 },
                ConnectionGene { source: 6, target: 4, weight: -0.6 },
            ],
            ActivationKind::Sine,
            &[(5, ActivationKind::Gaussian), (6, ActivationKind::Gaussian)],
        );
        let c = decode_cpg(&g).unwrap();
        for i in 0..OSCILLATORS {
            assert_eq!(c.params().amplitudes[i], c.params().amplitudes[MIRROR[i]]);
        }
        for &(i, j, phi) in c.graph().edges().iter().take(11) {
            let (mi, mj) = (MIRROR[i], MIRROR[j]);
            // reversed images query swapped coordinates, which x-evenness does not cover
            if mi > mj {
                continue;
            }
            if let Some(mirror_phi) = c.graph().edges().iter().take(11).find_map(|&(a, b, p)| {
                ((a, b) == (mi, mj)).then_some(p)
            }) {
                assert_eq!(phi, mirror_phi);
            }
        }
    }

    #[test]
    fn feedback_twin_decodes_identically() {
        let g = cppn(
            vec![ConnectionGene { source: 1, target: 4, weight: 0.8 }],
            ActivationKind::Sine,
            &[],
        );
        let open = decode_cpg(&g).unwrap();
        let closed = decode_cpg_fb(&g).unwrap();
        assert_eq!(open.params(), closed.params());
        assert_eq!(open.graph(), closed.graph());
        assert!(open.feedback().is_none());
        assert_eq!(closed.feedback().unwrap().theta_aep(), PI);
    }
}
