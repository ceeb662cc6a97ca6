//! Compositional pattern producing networks.
//!
//! A [`CppnGenome`] is a feedforward graph of typed activation nodes. Node ids
//! `0..inputs` are pass-through inputs, `inputs..inputs + outputs` are output
//! nodes, and anything above is hidden. The genome is validated and compiled
//! into a topological evaluation plan at construction, so evaluation never
//! sees a cycle.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::math::clamp;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Sine,
    Gaussian,
    Sigmoid,
    Linear,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 4] = [
        ActivationKind::Sine,
        ActivationKind::Gaussian,
        ActivationKind::Sigmoid,
        ActivationKind::Linear,
    ];

    /// Applies the activation. Only `Linear` is unbounded; output nodes clamp it.
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            ActivationKind::Sine => libm::sin(PI * x),
            ActivationKind::Gaussian => libm::exp(-x * x),
            ActivationKind::Sigmoid => sigmoid(x),
            ActivationKind::Linear => x,
        }
    }

    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::ALL[rng.random_range(0..Self::ALL.len())]
    }
}

/// Bipolar sigmoid with range (-1, 1).
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    2.0 / (1.0 + libm::exp(-x)) - 1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeGene {
    pub id: u32,
    pub kind: ActivationKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectionGene {
    #[serde(rename = "src")]
    pub source: u32,
    #[serde(rename = "dst")]
    pub target: u32,
    #[serde(rename = "w")]
    pub weight: f64,
}

#[derive(Clone, Debug)]
struct PlanStep {
    slot: usize,
    kind: ActivationKind,
    is_output: bool,
    incoming: core::ops::Range<usize>,
}

#[derive(Clone, Debug, Default)]
struct Plan {
    steps: Vec<PlanStep>,
    edges: Vec<(usize, f64)>,
    output_slots: Vec<usize>,
}

/// Serialized form: `{inputs, outputs, nodes:[{id,kind}], conns:[{src,dst,w}]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CppnDocument {
    pub inputs: usize,
    pub outputs: usize,
    pub nodes: Vec<NodeGene>,
    pub conns: Vec<ConnectionGene>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "CppnDocument", try_from = "CppnDocument")]
pub struct CppnGenome {
    inputs: usize,
    outputs: usize,
    nodes: Vec<NodeGene>,
    connections: Vec<ConnectionGene>,
    plan: Plan,
}

impl PartialEq for CppnGenome {
    fn eq(&self, other: &Self) -> bool {
        self.inputs == other.inputs
            && self.outputs == other.outputs
            && self.nodes == other.nodes
            && self.connections == other.connections
    }
}

impl From<CppnGenome> for CppnDocument {
    fn from(g: CppnGenome) -> Self {
        CppnDocument {
            inputs: g.inputs,
            outputs: g.outputs,
            nodes: g.nodes,
            conns: g.connections,
        }
    }
}

impl TryFrom<CppnDocument> for CppnGenome {
    type Error = Error;

    fn try_from(d: CppnDocument) -> Result<Self> {
        CppnGenome::from_parts(d.inputs, d.outputs, d.nodes, d.conns)
    }
}

impl CppnGenome {
    /// Builds and validates a genome. Nodes are stored sorted by id.
    pub fn from_parts(
        inputs: usize,
        outputs: usize,
        mut nodes: Vec<NodeGene>,
        connections: Vec<ConnectionGene>,
    ) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::InvalidGenome(
                "input and output counts must be at least 1".into(),
            ));
        }
        nodes.sort_by_key(|n| n.id);
        for w in nodes.windows(2) {
            if w[0].id == w[1].id {
                return Err(Error::InvalidGenome(format!("duplicate node id {}", w[0].id)));
            }
        }
        let fixed = inputs + outputs;
        for id in 0..fixed {
            if nodes.get(id).map(|n| n.id as usize) != Some(id) {
                return Err(Error::InvalidGenome(format!(
                    "missing input/output node {id}"
                )));
            }
        }
        let mut genome = CppnGenome {
            inputs,
            outputs,
            nodes,
            connections,
            plan: Plan::default(),
        };
        genome.plan = genome.compile()?;
        Ok(genome)
    }

    pub fn input_count(&self) -> usize {
        self.inputs
    }

    pub fn output_count(&self) -> usize {
        self.outputs
    }

    pub fn nodes(&self) -> &[NodeGene] {
        &self.nodes
    }

    pub fn connections(&self) -> &[ConnectionGene] {
        &self.connections
    }

    pub fn is_input(&self, id: u32) -> bool {
        (id as usize) < self.inputs
    }

    pub fn is_output(&self, id: u32) -> bool {
        let id = id as usize;
        id >= self.inputs && id < self.inputs + self.outputs
    }

    pub fn hidden_count(&self) -> usize {
        self.nodes.len() - self.inputs - self.outputs
    }

    fn slot(&self, id: u32) -> Option<usize> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok()
    }

    fn compile(&self) -> Result<Plan> {
        let n = self.nodes.len();
        let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut seen = BTreeMap::new();
        for c in &self.connections {
            let (Some(s), Some(t)) = (self.slot(c.source), self.slot(c.target)) else {
                return Err(Error::InvalidGenome(format!(
                    "connection {}->{} references an unknown node",
                    c.source, c.target
                )));
            };
            if self.is_input(c.target) {
                return Err(Error::InvalidGenome(format!(
                    "connection {}->{} targets an input",
                    c.source, c.target
                )));
            }
            if self.is_output(c.source) {
                return Err(Error::InvalidGenome(format!(
                    "connection {}->{} leaves an output",
                    c.source, c.target
                )));
            }
            if !c.weight.is_finite() {
                return Err(Error::InvalidGenome(format!(
                    "connection {}->{} has a non-finite weight",
                    c.source, c.target
                )));
            }
            if seen.insert((c.source, c.target), ()).is_some() {
                return Err(Error::InvalidGenome(format!(
                    "duplicate connection {}->{}",
                    c.source, c.target
                )));
            }
            incoming[t].push((s, c.weight));
            outgoing[s].push(t);
        }

        // Kahn's algorithm, always taking the lowest pending slot for a stable order.
        let mut indegree: Vec<usize> = incoming.iter().map(Vec::len).collect();
        let mut ready: alloc::collections::BTreeSet<usize> =
            (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(&i) = ready.iter().next() {
            ready.remove(&i);
            order.push(i);
            for &t in &outgoing[i] {
                indegree[t] -= 1;
                if indegree[t] == 0 {
                    ready.insert(t);
                }
            }
        }
        if order.len() != n {
            return Err(Error::InvalidGenome("connection graph has a cycle".into()));
        }

        let mut plan = Plan::default();
        for slot in order {
            let node = self.nodes[slot];
            if self.is_input(node.id) {
                continue;
            }
            let start = plan.edges.len();
            plan.edges.extend_from_slice(&incoming[slot]);
            plan.steps.push(PlanStep {
                slot,
                kind: node.kind,
                is_output: self.is_output(node.id),
                incoming: start..plan.edges.len(),
            });
        }
        plan.output_slots = (self.inputs..self.inputs + self.outputs).collect();
        Ok(plan)
    }

    /// Evaluates the network on `inputs`.
    pub fn evaluate(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        let mut scratch = Vec::new();
        let mut out = vec![0.0; self.outputs];
        self.evaluate_with(inputs, &mut scratch, &mut out)?;
        Ok(out)
    }

    /// Allocation-free evaluation for hot loops; `scratch` is resized as needed.
    pub fn evaluate_with(
        &self,
        inputs: &[f64],
        scratch: &mut Vec<f64>,
        out: &mut [f64],
    ) -> Result<()> {
        if inputs.len() != self.inputs {
            return Err(Error::LengthMismatch {
                expected: self.inputs,
                actual: inputs.len(),
            });
        }
        if out.len() != self.outputs {
            return Err(Error::LengthMismatch {
                expected: self.outputs,
                actual: out.len(),
            });
        }
        if let Some(i) = inputs.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteInput(i));
        }
        scratch.clear();
        scratch.resize(self.nodes.len(), 0.0);
        scratch[..self.inputs].copy_from_slice(inputs);
        for step in &self.plan.steps {
            let value = if step.incoming.is_empty() {
                0.0
            } else {
                let sum: f64 = self.plan.edges[step.incoming.clone()]
                    .iter()
                    .map(|&(s, w)| scratch[s] * w)
                    .sum();
                let v = step.kind.apply(sum);
                if step.is_output {
                    clamp(v, -1.0, 1.0)
                } else {
                    v
                }
            };
            scratch[step.slot] = value;
        }
        for (o, &slot) in out.iter_mut().zip(&self.plan.output_slots) {
            *o = scratch[slot];
        }
        Ok(())
    }

    /// Minimal genome: every input wired to every output, weights uniform in
    /// `[-1, 1]`, output activations drawn uniformly.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, inputs: usize, outputs: usize) -> Result<Self> {
        let mut nodes = Vec::with_capacity(inputs + outputs);
        for id in 0..inputs {
            nodes.push(NodeGene {
                id: id as u32,
                kind: ActivationKind::Linear,
            });
        }
        for id in inputs..inputs + outputs {
            nodes.push(NodeGene {
                id: id as u32,
                kind: ActivationKind::random(rng),
            });
        }
        let mut connections = Vec::with_capacity(inputs * outputs);
        for o in inputs..inputs + outputs {
            for i in 0..inputs {
                connections.push(ConnectionGene {
                    source: i as u32,
                    target: o as u32,
                    weight: rng.random_range(-1.0..=1.0),
                });
            }
        }
        CppnGenome::from_parts(inputs, outputs, nodes, connections)
    }

    /// Returns a mutated copy. Every structural event fires at most once per call.
    pub fn mutate<R: Rng + ?Sized>(&self, config: &MutationConfig, rng: &mut R) -> CppnGenome {
        let rates = config.effective();
        let mut nodes = self.nodes.clone();
        let mut conns = self.connections.clone();

        for c in conns.iter_mut() {
            if rng.random::<f64>() < rates.weight {
                let z: f64 = StandardNormal.sample(rng);
                c.weight += rates.weight_sigma * z;
            }
        }

        if rng.random::<f64>() < rates.node_type_change {
            let candidates: Vec<usize> = (0..nodes.len())
                .filter(|&i| !self.is_input(nodes[i].id))
                .collect();
            let i = candidates[rng.random_range(0..candidates.len())];
            let current = nodes[i].kind;
            let others: Vec<ActivationKind> = ActivationKind::ALL
                .iter()
                .copied()
                .filter(|&k| k != current)
                .collect();
            nodes[i].kind = others[rng.random_range(0..others.len())];
        }

        if rng.random::<f64>() < rates.node_add {
            let new_id = nodes.last().map_or(0, |n| n.id) + 1;
            let kind = ActivationKind::random(rng);
            if conns.is_empty() {
                let src = rng.random_range(0..self.inputs) as u32;
                let dst = (self.inputs + rng.random_range(0..self.outputs)) as u32;
                conns.push(ConnectionGene {
                    source: src,
                    target: new_id,
                    weight: 1.0,
                });
                conns.push(ConnectionGene {
                    source: new_id,
                    target: dst,
                    weight: rng.random_range(-1.0..=1.0),
                });
            } else {
                let split = conns.remove(rng.random_range(0..conns.len()));
                conns.push(ConnectionGene {
                    source: split.source,
                    target: new_id,
                    weight: 1.0,
                });
                conns.push(ConnectionGene {
                    source: new_id,
                    target: split.target,
                    weight: split.weight,
                });
            }
            nodes.push(NodeGene { id: new_id, kind });
        }

        if rng.random::<f64>() < rates.node_remove {
            let fixed = (self.inputs + self.outputs) as u32;
            let hidden: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].id >= fixed).collect();
            if !hidden.is_empty() {
                let victim = nodes.remove(hidden[rng.random_range(0..hidden.len())]).id;
                conns.retain(|c| c.source != victim && c.target != victim);
            }
        }

        if rng.random::<f64>() < rates.connection_add {
            let candidates = self.addable_connections(&nodes, &conns);
            if !candidates.is_empty() {
                let (source, target) = candidates[rng.random_range(0..candidates.len())];
                conns.push(ConnectionGene {
                    source,
                    target,
                    weight: rng.random_range(-1.0..=1.0),
                });
            }
        }

        if rng.random::<f64>() < rates.connection_remove && !conns.is_empty() {
            conns.remove(rng.random_range(0..conns.len()));
        }

        CppnGenome::from_parts(self.inputs, self.outputs, nodes, conns)
            .expect("mutation preserves genome validity")
    }

    /// All (source, target) pairs that can be added without a duplicate or a cycle.
    fn addable_connections(&self, nodes: &[NodeGene], conns: &[ConnectionGene]) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for s in nodes.iter().filter(|n| !self.is_output(n.id)) {
            for t in nodes.iter().filter(|n| !self.is_input(n.id)) {
                if s.id == t.id
                    || conns.iter().any(|c| c.source == s.id && c.target == t.id)
                    || reaches(conns, t.id, s.id)
                {
                    continue;
                }
                out.push((s.id, t.id));
            }
        }
        out
    }
}

/// Whether `to` is reachable from `from` along connections.
fn reaches(conns: &[ConnectionGene], from: u32, to: u32) -> bool {
    let mut stack = vec![from];
    let mut visited = alloc::collections::BTreeSet::new();
    while let Some(n) = stack.pop() {
        if n == to {
            return true;
        }
        if !visited.insert(n) {
            continue;
        }
        stack.extend(conns.iter().filter(|c| c.source == n).map(|c| c.target));
    }
    false
}

/// Mutation operator parameters. The intensity multiplier scales every rate
/// and every step size; rates are clamped to `[0, 1]` afterwards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MutationConfig {
    pub weight_mutation_rate: f64,
    pub weight_step_sigma: f64,
    pub node_add_rate: f64,
    pub node_remove_rate: f64,
    pub node_type_change_rate: f64,
    pub connection_add_rate: f64,
    pub connection_remove_rate: f64,
    /// Step size for direct-encoding genes, which live in `[0, 1]`.
    pub direct_step_sigma: f64,
    pub intensity_multiplier: f64,
}

impl Default for MutationConfig {
    fn default() -> Self {
        MutationConfig {
            weight_mutation_rate: 0.1,
            weight_step_sigma: 0.5,
            node_add_rate: 0.05,
            node_remove_rate: 0.05,
            node_type_change_rate: 0.05,
            connection_add_rate: 0.05,
            connection_remove_rate: 0.05,
            direct_step_sigma: 0.1,
            intensity_multiplier: 1.0,
        }
    }
}

/// Rates and step sizes after the intensity multiplier is applied.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveRates {
    pub weight: f64,
    pub weight_sigma: f64,
    pub node_add: f64,
    pub node_remove: f64,
    pub node_type_change: f64,
    pub connection_add: f64,
    pub connection_remove: f64,
    pub direct_sigma: f64,
}

impl MutationConfig {
    /// All rates zero: mutation returns the genome unchanged.
    pub fn frozen() -> Self {
        MutationConfig {
            weight_mutation_rate: 0.0,
            node_add_rate: 0.0,
            node_remove_rate: 0.0,
            node_type_change_rate: 0.0,
            connection_add_rate: 0.0,
            connection_remove_rate: 0.0,
            ..MutationConfig::default()
        }
    }

    pub fn with_intensity(&self, multiplier: f64) -> Self {
        MutationConfig {
            intensity_multiplier: multiplier,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            self.weight_mutation_rate,
            self.node_add_rate,
            self.node_remove_rate,
            self.node_type_change_rate,
            self.connection_add_rate,
            self.connection_remove_rate,
        ];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::InvalidConfig("mutation rates must lie in [0, 1]".into()));
        }
        if !(self.weight_step_sigma > 0.0 && self.direct_step_sigma > 0.0) {
            return Err(Error::InvalidConfig("mutation step sizes must be positive".into()));
        }
        if !(self.intensity_multiplier > 0.0 && self.intensity_multiplier.is_finite()) {
            return Err(Error::InvalidConfig("intensity multiplier must be positive".into()));
        }
        Ok(())
    }

    pub fn effective(&self) -> EffectiveRates {
        let m = self.intensity_multiplier;
        let rate = |r: f64| clamp(r * m, 0.0, 1.0);
        EffectiveRates {
            weight: rate(self.weight_mutation_rate),
            weight_sigma: self.weight_step_sigma * m,
            node_add: rate(self.node_add_rate),
            node_remove: rate(self.node_remove_rate),
            node_type_change: rate(self.node_type_change_rate),
            connection_add: rate(self.connection_add_rate),
            connection_remove: rate(self.connection_remove_rate),
            direct_sigma: self.direct_step_sigma * m,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn chain(kind: ActivationKind) -> CppnGenome {
        CppnGenome::from_parts(
            1,
            1,
            vec![
                NodeGene { id: 0, kind: ActivationKind::Linear },
                NodeGene { id: 1, kind },
            ],
            vec![ConnectionGene { source: 0, target: 1, weight: 1.0 }],
        )
        .unwrap()
    }

    #[test]
    fn linear_identity_chain() {
        assert_eq!(chain(ActivationKind::Linear).evaluate(&[0.5]).unwrap(), vec![0.5]);
    }

    #[test]
    fn gaussian_at_zero_is_one() {
        assert_eq!(chain(ActivationKind::Gaussian).evaluate(&[0.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn linear_output_is_clamped() {
        assert_eq!(chain(ActivationKind::Linear).evaluate(&[3.0]).unwrap(), vec![1.0]);
        assert_eq!(chain(ActivationKind::Linear).evaluate(&[-3.0]).unwrap(), vec![-1.0]);
    }

    #[test]
    fn activation_definitions() {
        assert!((ActivationKind::Sine.apply(0.5) - 1.0).abs() < 1e-15);
        assert_eq!(ActivationKind::Sigmoid.apply(0.0), 0.0);
        assert!((ActivationKind::Sigmoid.apply(40.0) - 1.0).abs() < 1e-12);
        assert!((ActivationKind::Gaussian.apply(1.0) - libm::exp(-1.0)).abs() < 1e-15);
    }

    #[test]
    fn rejects_cycles_and_bad_edges() {
        let nodes = vec![
            NodeGene { id: 0, kind: ActivationKind::Linear },
            NodeGene { id: 1, kind: ActivationKind::Linear },
            NodeGene { id: 2, kind: ActivationKind::Sine },
            NodeGene { id: 3, kind: ActivationKind::Sine },
        ];
        let cyc = vec![
            ConnectionGene { source: 0, target: 2, weight: 1.0 },
            ConnectionGene { source: 2, target: 3, weight: 1.0 },
            ConnectionGene { source: 3, target: 2, weight: 1.0 },
            ConnectionGene { source: 3, target: 1, weight: 1.0 },
        ];
        assert!(CppnGenome::from_parts(1, 1, nodes.clone(), cyc).is_err());
        let into_input = vec![ConnectionGene { source: 2, target: 0, weight: 1.0 }];
        assert!(CppnGenome::from_parts(1, 1, nodes.clone(), into_input).is_err());
        let dup = vec![
            ConnectionGene { source: 0, target: 1, weight: 1.0 },
            ConnectionGene { source: 0, target: 1, weight: 2.0 },
        ];
        assert!(CppnGenome::from_parts(1, 1, nodes, dup).is_err());
    }

    #[test]
    fn input_length_checked() {
        let g = chain(ActivationKind::Linear);
        assert_eq!(
            g.evaluate(&[1.0, 2.0]),
            Err(Error::LengthMismatch { expected: 1, actual: 2 })
        );
        assert!(g.evaluate(&[f64::NAN]).is_err());
    }

    #[test]
    fn dangling_output_is_zero() {
        let g = CppnGenome::from_parts(
            1,
            1,
            vec![
                NodeGene { id: 0, kind: ActivationKind::Linear },
                NodeGene { id: 1, kind: ActivationKind::Gaussian },
            ],
            vec![],
        )
        .unwrap();
        assert_eq!(g.evaluate(&[0.3]).unwrap(), vec![0.0]);
    }

    #[test]
    fn random_genome_topology() {
        let g = CppnGenome::random(&mut stream(1, "t", 0), 5, 1).unwrap();
        assert_eq!(g.nodes().len(), 6);
        assert_eq!(g.connections().len(), 5);
        let g = CppnGenome::random(&mut stream(1, "t", 1), 4, 2).unwrap();
        assert_eq!(g.connections().len(), 8);
        let a = CppnGenome::random(&mut stream(9, "t", 0), 4, 1).unwrap();
        let b = CppnGenome::random(&mut stream(9, "t", 0), 4, 1).unwrap();
        assert_eq!(a, b);
        for c in a.connections() {
            assert!((-1.0..=1.0).contains(&c.weight));
        }
    }

    #[test]
    fn zero_rates_are_a_no_op() {
        let g = CppnGenome::random(&mut stream(2, "t", 0), 4, 1).unwrap();
        let mut rng = stream(2, "m", 0);
        for _ in 0..50 {
            assert_eq!(g.mutate(&MutationConfig::frozen(), &mut rng), g);
        }
    }

    #[test]
    fn forced_node_add() {
        let cfg = MutationConfig {
            node_add_rate: 1.0,
            ..MutationConfig::frozen()
        };
        let mut g = CppnGenome::random(&mut stream(3, "t", 0), 4, 2).unwrap();
        let mut rng = stream(3, "m", 0);
        for _ in 0..20 {
            let m = g.mutate(&cfg, &mut rng);
            assert_eq!(m.nodes().len(), g.nodes().len() + 1);
            assert_eq!(m.input_count(), 4);
            assert_eq!(m.output_count(), 2);
            g = m;
        }
    }

    #[test]
    fn intensity_scales_rates() {
        let cfg = MutationConfig::default().with_intensity(0.25);
        assert!((cfg.effective().weight - 0.025).abs() < 1e-15);
        assert!((cfg.effective().weight_sigma - 0.125).abs() < 1e-15);
        let hi = MutationConfig {
            weight_mutation_rate: 0.5,
            ..MutationConfig::default()
        }
        .with_intensity(4.0);
        assert_eq!(hi.effective().weight, 1.0);
    }

    #[test]
    fn serde_document_shape() {
        let g = chain(ActivationKind::Sine);
        let doc: CppnDocument = g.clone().into();
        assert_eq!(doc.inputs, 1);
        assert_eq!(doc.nodes.len(), 2);
        assert_eq!(CppnGenome::try_from(doc).unwrap(), g);
    }
}
