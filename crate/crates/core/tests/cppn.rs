use std::f64::consts::PI;

use hexevo_core::cppn::{ActivationKind, ConnectionGene, CppnGenome, MutationConfig, NodeGene};
use hexevo_core::rng::stream;
use proptest::prelude::*;
use rand::Rng;

fn activation(kind: ActivationKind, x: f64) -> f64 {
    match kind {
        ActivationKind::Sine => (PI * x).sin(),
        ActivationKind::Gaussian => (-x * x).exp(),
        ActivationKind::Sigmoid => 2.0 / (1.0 + (-x).exp()) - 1.0,
        ActivationKind::Linear => x,
    }
}

/// Evaluates node `id` by recursing over its incoming connections.
fn recursive_value(g: &CppnGenome, id: u32, inputs: &[f64]) -> f64 {
    if g.is_input(id) {
        return inputs[id as usize];
    }
    let incoming: Vec<&ConnectionGene> = g.connections().iter().filter(|c| c.target == id).collect();
    if incoming.is_empty() {
        return 0.0;
    }
    let sum: f64 = incoming
        .iter()
        .map(|c| c.weight * recursive_value(g, c.source, inputs))
        .sum();
    let kind = g.nodes().iter().find(|n| n.id == id).unwrap().kind;
    let v = activation(kind, sum);
    if g.is_output(id) {
        v.clamp(-1.0, 1.0)
    } else {
        v
    }
}

fn random_kind<R: Rng>(rng: &mut R) -> ActivationKind {
    ActivationKind::ALL[rng.random_range(0..4)]
}

/// Two inputs, one output, two hidden nodes, random acyclic wiring.
fn random_five_node(seed: u64) -> CppnGenome {
    let mut rng = stream(seed, "five-node", 0);
    let nodes = vec![
        NodeGene { id: 0, kind: ActivationKind::Linear },
        NodeGene { id: 1, kind: ActivationKind::Linear },
        NodeGene { id: 2, kind: random_kind(&mut rng) },
        NodeGene { id: 3, kind: random_kind(&mut rng) },
        NodeGene { id: 4, kind: random_kind(&mut rng) },
    ];
    // topological order 0, 1, 3, 4, 2 (output last)
    let order = [0u32, 1, 3, 4, 2];
    let mut conns = Vec::new();
    for a in 0..order.len() {
        for b in (a + 1)..order.len() {
            let (src, dst) = (order[a], order[b]);
            if dst <= 1 || rng.random::<f64>() < 0.4 {
                continue;
            }
            conns.push(ConnectionGene { source: src, target: dst, weight: rng.random_range(-2.0..2.0) });
        }
    }
    CppnGenome::from_parts(2, 1, nodes, conns).unwrap()
}

#[test]
fn topological_evaluation_matches_recursive_oracle() {
    for seed in 0..50 {
        let g = random_five_node(seed);
        let mut rng = stream(seed, "inputs", 0);
        for _ in 0..100 {
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let fast = g.evaluate(&x).unwrap()[0];
            let slow = recursive_value(&g, 2, &x);
            assert!((fast - slow).abs() <= 1e-12, "seed {seed}: {fast} vs {slow}");
        }
    }
}

#[test]
fn weight_mutation_count_is_binomial() {
    // 20 connections: 4 inputs fully wired to 5 outputs
    let base = CppnGenome::random(&mut stream(3, "base", 0), 4, 5).unwrap();
    assert_eq!(base.connections().len(), 20);
    let config = MutationConfig {
        weight_mutation_rate: 0.1,
        ..MutationConfig::frozen()
    };
    let trials = 10_000;
    let mut changed = 0usize;
    for k in 0..trials {
        let m = base.mutate(&config, &mut stream(3, "binomial", k));
        changed += base
            .connections()
            .iter()
            .zip(m.connections())
            .filter(|(a, b)| a.weight != b.weight)
            .count();
    }
    let mean = changed as f64 / trials as f64;
    assert!((mean - 2.0).abs() <= 0.2, "mean mutated connections {mean}");
}

#[test]
fn json_round_trip_preserves_evaluation() {
    let g = random_five_node(9);
    let text = serde_json::to_string(&g).unwrap();
    let back: CppnGenome = serde_json::from_str(&text).unwrap();
    assert_eq!(back, g);
    assert_eq!(back.evaluate(&[0.3, -0.7]).unwrap(), g.evaluate(&[0.3, -0.7]).unwrap());
}

#[test]
fn cyclic_documents_are_rejected() {
    let text = r#"{"inputs":1,"outputs":1,"nodes":[{"id":0,"kind":"linear"},{"id":1,"kind":"sine"},
        {"id":2,"kind":"sine"}],"conns":[{"src":2,"dst":1,"w":1.0},{"src":1,"dst":2,"w":1.0}]}"#;
    assert!(serde_json::from_str::<CppnGenome>(text).is_err());
}

fn aggressive() -> MutationConfig {
    MutationConfig {
        weight_mutation_rate: 0.5,
        node_add_rate: 0.3,
        node_remove_rate: 0.3,
        node_type_change_rate: 0.3,
        connection_add_rate: 0.5,
        connection_remove_rate: 0.3,
        ..MutationConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mutation_chains_stay_valid(seed in any::<u64>(), inputs in 1usize..6, outputs in 1usize..3) {
        let mut g = CppnGenome::random(&mut stream(seed, "chain", 0), inputs, outputs).unwrap();
        let config = aggressive();
        let mut rng = stream(seed, "chain", 1);
        for step in 0..1000 {
            g = g.mutate(&config, &mut rng);
            prop_assert_eq!(g.input_count(), inputs);
            prop_assert_eq!(g.output_count(), outputs);
            if step % 50 == 0 {
                // rebuilding from parts re-runs every structural check
                let rebuilt = CppnGenome::from_parts(inputs, outputs, g.nodes().to_vec(), g.connections().to_vec());
                prop_assert!(rebuilt.is_ok());
                let x: Vec<f64> = (0..inputs).map(|i| (i as f64 * 0.37).sin()).collect();
                let out = g.evaluate(&x).unwrap();
                prop_assert!(out.iter().all(|v| v.is_finite() && v.abs() <= 1.0));
            }
        }
    }

    #[test]
    fn outputs_are_bounded(seed in any::<u64>(), x in prop::array::uniform4(-1.0f64..1.0)) {
        let g = CppnGenome::random(&mut stream(seed, "bounded", 0), 4, 2).unwrap();
        let g = (0..20).fold(g, |g, k| g.mutate(&aggressive(), &mut stream(seed, "bounded", k + 1)));
        for v in g.evaluate(&x).unwrap() {
            prop_assert!(v.is_finite() && (-1.0..=1.0).contains(&v));
        }
    }
}
