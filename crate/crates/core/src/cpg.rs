//! Coupled amplitude-controlled phase oscillators.
//!
//! Each oscillator `i` evolves as
//!
//! ```text
//! θ̇ᵢ = 2π·ν + Σⱼ αⱼ·w·sin(θⱼ − θᵢ − φᵢⱼ)
//! α̈ᵢ = b·(b/4·(Aᵢ − αᵢ) − α̇ᵢ)
//! γᵢ = αᵢ·cos(θᵢ)
//! ```
//!
//! with ν = 1 Hz, w = 20 and b = 10 rad/s, integrated by explicit Euler.
//!
//! Oscillators are indexed from 0 here; the hexapod substrate's oscillator
//! `k` (numbered 1..=12) is index `k − 1`. Layout: 1-3 elevation (s2) of the
//! left front/middle/rear legs, 4-6 horizontal (s1) of the left legs, 7-9
//! horizontal of the right legs, 10-12 elevation of the right legs.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::legs::{LegSet, LEGS};
use crate::math::wrap_tau;
use crate::{Error, Result};

pub const OSCILLATORS: usize = 12;
pub const COUPLING_WEIGHT: f64 = 20.0;
pub const AMPLITUDE_GAIN: f64 = 10.0;
pub const INTRINSIC_FREQUENCY: f64 = 1.0;
/// Any state magnitude beyond this marks the integration as diverged.
pub const BLOW_UP_LIMIT: f64 = 1e6;
/// Internal Euler substep.
pub const SUBSTEP: f64 = 0.005;

/// The 11 queried couplings, as (lower, higher) 0-based indices. They form a
/// spanning tree of the coupling graph.
pub const FREE_EDGES: [(usize, usize); 11] = [
    (0, 3),  // 1-4
    (1, 4),  // 2-5
    (2, 5),  // 3-6
    (6, 9),  // 7-10
    (7, 10), // 8-11
    (8, 11), // 9-12
    (3, 4),  // 4-5
    (4, 5),  // 5-6
    (6, 7),  // 7-8
    (7, 8),  // 8-9
    (4, 7),  // 5-8
];

/// The 6 loop-closing couplings, in their derived orientation
/// (2,1), (2,3), (7,4), (9,6), (10,11), (12,11).
pub const DERIVED_EDGES: [(usize, usize); 6] = [(1, 0), (1, 2), (6, 3), (8, 5), (9, 10), (11, 10)];

/// Oscillator indices driving (s1, s2) of each leg.
pub const LEG_OSCILLATORS: [(usize, usize); LEGS] = [
    (6, 9),  // right front
    (7, 10), // right middle
    (8, 11), // right rear
    (5, 2),  // left rear
    (4, 1),  // left middle
    (3, 0),  // left front
];

/// Sagittal mirror image of each oscillator.
pub const MIRROR: [usize; OSCILLATORS] = [9, 10, 11, 6, 7, 8, 3, 4, 5, 0, 1, 2];

pub fn is_horizontal(osc: usize) -> bool {
    (3..9).contains(&osc)
}

/// Directed phase biases over an undirected coupling graph, with
/// `bias(j, i) == -bias(i, j)` exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingGraph {
    size: usize,
    weight: f64,
    /// One entry per undirected edge, stored in its canonical orientation.
    edges: Vec<(usize, usize, f64)>,
}

impl CouplingGraph {
    pub fn new(size: usize, weight: f64, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        for (k, &(i, j, phi)) in edges.iter().enumerate() {
            if i >= size || j >= size || i == j {
                return Err(Error::InvalidConfig("coupling edge out of range".into()));
            }
            if !phi.is_finite() {
                return Err(Error::InvalidConfig("non-finite phase bias".into()));
            }
            if edges[..k]
                .iter()
                .any(|&(a, b, _)| (a, b) == (i, j) || (a, b) == (j, i))
            {
                return Err(Error::InvalidConfig("duplicate coupling edge".into()));
            }
        }
        Ok(CouplingGraph { size, weight, edges })
    }

    pub fn uncoupled(size: usize) -> Self {
        CouplingGraph {
            size,
            weight: COUPLING_WEIGHT,
            edges: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// φᵢⱼ, or `None` when `i` and `j` are not coupled.
    pub fn bias(&self, i: usize, j: usize) -> Option<f64> {
        self.edges.iter().find_map(|&(a, b, phi)| {
            if (a, b) == (i, j) {
                Some(phi)
            } else if (a, b) == (j, i) {
                Some(-phi)
            } else {
                None
            }
        })
    }

    /// The same network reflected across the body's sagittal plane.
    pub fn mirrored(&self) -> CouplingGraph {
        assert_eq!(self.size, OSCILLATORS, "mirroring needs the hexapod substrate");
        CouplingGraph {
            size: self.size,
            weight: self.weight,
            edges: self
                .edges
                .iter()
                .map(|&(i, j, phi)| (MIRROR[i], MIRROR[j], phi))
                .collect(),
        }
    }

    /// Phases consistent with every bias along a spanning forest, rooted at
    /// the lowest index of each component with phase 0.
    pub fn consistent_phases(&self) -> Vec<f64> {
        let mut theta = vec![0.0; self.size];
        let mut known = vec![false; self.size];
        for root in 0..self.size {
            if known[root] {
                continue;
            }
            known[root] = true;
            let mut stack = vec![root];
            while let Some(i) = stack.pop() {
                for &(a, b, phi) in &self.edges {
                    let (j, d) = if a == i {
                        (b, phi)
                    } else if b == i {
                        (a, -phi)
                    } else {
                        continue;
                    };
                    if !known[j] {
                        known[j] = true;
                        theta[j] = wrap_tau(theta[i] + d);
                        stack.push(j);
                    }
                }
            }
        }
        theta
    }
}

fn tree_path(from: usize, to: usize) -> Vec<(usize, usize)> {
    // BFS over FREE_EDGES; returns the directed hops from `from` to `to`.
    let mut parent = [usize::MAX; OSCILLATORS];
    parent[from] = from;
    let mut queue = alloc::collections::VecDeque::from([from]);
    while let Some(i) = queue.pop_front() {
        for &(a, b) in &FREE_EDGES {
            let j = if a == i {
                b
            } else if b == i {
                a
            } else {
                continue;
            };
            if parent[j] == usize::MAX {
                parent[j] = i;
                queue.push_back(j);
            }
        }
    }
    let mut hops = Vec::new();
    let mut node = to;
    while node != from {
        let p = parent[node];
        hops.push((p, node));
        node = p;
    }
    hops.reverse();
    hops
}

/// Completes the 17 hexapod couplings from the 11 free biases (ordered as
/// [`FREE_EDGES`]). Each derived bias φᵢⱼ is the sum of free biases along the
/// tree path from `i` to `j`, so every loop sums to a multiple of 2π.
pub fn complete_loop_biases(free: &[f64; 11]) -> CouplingGraph {
    let mut edges: Vec<(usize, usize, f64)> = FREE_EDGES
        .iter()
        .zip(free)
        .map(|(&(i, j), &phi)| (i, j, phi))
        .collect();
    let tree_bias = |a: usize, b: usize| -> f64 {
        FREE_EDGES
            .iter()
            .zip(free)
            .find_map(|(&(i, j), &phi)| {
                if (i, j) == (a, b) {
                    Some(phi)
                } else if (i, j) == (b, a) {
                    Some(-phi)
                } else {
                    None
                }
            })
            .expect("hop lies on the tree")
    };
    for &(i, j) in &DERIVED_EDGES {
        let sum: f64 = tree_path(i, j).iter().map(|&(a, b)| tree_bias(a, b)).sum();
        edges.push((i, j, wrap_tau(sum)));
    }
    CouplingGraph {
        size: OSCILLATORS,
        weight: COUPLING_WEIGHT,
        edges,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    /// Intrinsic amplitude Aᵢ in radians.
    pub amplitudes: Vec<f64>,
    pub frequency: f64,
    pub gain: f64,
}

impl OscillatorParams {
    pub fn new(amplitudes: Vec<f64>) -> Self {
        OscillatorParams {
            amplitudes,
            frequency: INTRINSIC_FREQUENCY,
            gain: AMPLITUDE_GAIN,
        }
    }

    pub fn mirrored(&self) -> OscillatorParams {
        let mut amplitudes = self.amplitudes.clone();
        for (i, a) in amplitudes.iter_mut().enumerate() {
            *a = self.amplitudes[MIRROR[i]];
        }
        OscillatorParams {
            amplitudes,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatorState {
    pub theta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub alpha_dot: Vec<f64>,
}

impl OscillatorState {
    pub fn zeros(n: usize) -> Self {
        OscillatorState {
            theta: vec![0.0; n],
            alpha: vec![0.0; n],
            alpha_dot: vec![0.0; n],
        }
    }

    /// Zero amplitude, phases already on the pattern the biases ask for.
    pub fn initial(graph: &CouplingGraph) -> Self {
        OscillatorState {
            theta: graph.consistent_phases(),
            ..OscillatorState::zeros(graph.size())
        }
    }

    /// The state of the sagittally mirrored network.
    pub fn mirrored(&self) -> Self {
        assert_eq!(self.len(), OSCILLATORS, "mirroring needs the hexapod substrate");
        let mut m = self.clone();
        for (i, &mi) in MIRROR.iter().enumerate() {
            m.theta[mi] = self.theta[i];
            m.alpha[mi] = self.alpha[i];
            m.alpha_dot[mi] = self.alpha_dot[i];
        }
        m
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn outputs(&self) -> Vec<f64> {
        self.theta
            .iter()
            .zip(&self.alpha)
            .map(|(&t, &a)| a * libm::cos(t))
            .collect()
    }

    fn diverged(&self) -> bool {
        self.theta
            .iter()
            .chain(&self.alpha)
            .chain(&self.alpha_dot)
            .any(|v| !v.is_finite() || v.abs() > BLOW_UP_LIMIT)
    }

    /// One explicit Euler step of length `dt`, in place.
    pub fn advance(&mut self, params: &OscillatorParams, graph: &CouplingGraph, dt: f64) -> Result<()> {
        let n = self.len();
        debug_assert_eq!(params.amplitudes.len(), n);
        debug_assert!(dt > 0.0);
        let mut theta_dot = vec![TAU * params.frequency; n];
        let w = graph.weight;
        for &(i, j, phi) in &graph.edges {
            theta_dot[i] += self.alpha[j] * w * libm::sin(self.theta[j] - self.theta[i] - phi);
            theta_dot[j] += self.alpha[i] * w * libm::sin(self.theta[i] - self.theta[j] + phi);
        }
        let b = params.gain;
        for i in 0..n {
            let alpha_ddot = b * (b / 4.0 * (params.amplitudes[i] - self.alpha[i]) - self.alpha_dot[i]);
            self.theta[i] += dt * theta_dot[i];
            self.alpha[i] += dt * self.alpha_dot[i];
            self.alpha_dot[i] += dt * alpha_ddot;
        }
        if self.diverged() {
            Err(Error::BlowUp)
        } else {
            Ok(())
        }
    }

    /// Functional form of [`advance`](Self::advance): the next state and its outputs γ.
    pub fn step(
        &self,
        params: &OscillatorParams,
        graph: &CouplingGraph,
        dt: f64,
    ) -> Result<(OscillatorState, Vec<f64>)> {
        let mut next = self.clone();
        next.advance(params, graph, dt)?;
        let gamma = next.outputs();
        Ok((next, gamma))
    }

    /// Sets the phase of each landed leg's horizontal oscillator to θ_AEP.
    pub fn phase_reset(&mut self, landed: LegSet, aep: &AepConfig) {
        let target = aep.theta_aep();
        for leg in landed.iter() {
            self.theta[LEG_OSCILLATORS[leg].0] = target;
        }
    }
}

/// Duty ratio of the phase-resetting controller and the derived reset phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AepConfig {
    pub duty_ratio: f64,
}

impl Default for AepConfig {
    fn default() -> Self {
        AepConfig { duty_ratio: 0.5 }
    }
}

impl AepConfig {
    /// θ_AEP = 2π(1 − duty).
    pub fn theta_aep(&self) -> f64 {
        TAU * (1.0 - self.duty_ratio)
    }

    pub fn validate(&self) -> Result<()> {
        if self.duty_ratio > 0.0 && self.duty_ratio < 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig("duty ratio must lie in (0, 1)".into()))
        }
    }
}
