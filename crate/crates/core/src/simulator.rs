//! Quasi-static kinematic hexapod.
//!
//! The body rides at a fixed height with no pitch or roll. A foot touches the
//! ground when its height drops to the contact threshold. Feet that stay in
//! contact over a control step are treated as planted: the body moves by the
//! negated mean of their horizontal displacement (body frame) and yaws by the
//! negated mean of their angular displacement about the body center. With
//! fewer than two planted feet the body does not move. Joints follow their
//! commands at a bounded angular speed.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::controllers::{Controller, JointCommand, SensorFrame};
use crate::diversity::BehaviorVector;
use crate::legs::{self, ContactTracker, LegSet, Side, LEGS};
use crate::math::{clamp, wrap_pi};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HexapodConfig {
    pub body_half_length: f64,
    pub body_half_width: f64,
    pub coxa: f64,
    pub femur: f64,
    pub tibia: f64,
    pub body_height: f64,
    pub contact_threshold: f64,
    /// Fastest joint rotation, rad/s; commands are slewed toward their target.
    pub servo_speed: f64,
    pub damage: LegSet,
    pub duration: f64,
    pub control_dt: f64,
    pub goal_distance: f64,
}

impl Default for HexapodConfig {
    fn default() -> Self {
        HexapodConfig {
            body_half_length: 0.10,
            body_half_width: 0.06,
            coxa: 0.04,
            femur: 0.08,
            tibia: 0.10,
            body_height: 0.09,
            contact_threshold: 0.002,
            servo_speed: 6.0,
            damage: LegSet::EMPTY,
            duration: 5.0,
            control_dt: 0.015,
            goal_distance: 25.0,
        }
    }
}

impl HexapodConfig {
    pub fn with_damage(&self, damage: LegSet) -> Self {
        HexapodConfig {
            damage,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lengths = [
            self.body_half_length,
            self.body_half_width,
            self.coxa,
            self.femur,
            self.tibia,
            self.body_height,
            self.duration,
            self.control_dt,
            self.servo_speed,
        ];
        if lengths.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidConfig(
                "hexapod lengths and times must be positive".into(),
            ));
        }
        if self.body_height >= self.femur + self.tibia {
            return Err(Error::InvalidConfig(
                "body height must be below the leg's reach".into(),
            ));
        }
        if !(self.contact_threshold >= 0.0) {
            return Err(Error::InvalidConfig("contact threshold must be non-negative".into()));
        }
        Ok(())
    }

    /// Number of control steps: ⌈duration / control_dt⌉ (334 at defaults).
    pub fn steps(&self) -> usize {
        libm::ceil(self.duration / self.control_dt - 1e-9) as usize
    }

    /// Leg mount point in the body frame (x forward, y left).
    pub fn mount(&self, leg: usize) -> (f64, f64) {
        let x = match legs::position(leg) {
            legs::Position::Front => self.body_half_length,
            legs::Position::Middle => 0.0,
            legs::Position::Rear => -self.body_half_length,
        };
        let y = match legs::side(leg) {
            Side::Left => self.body_half_width,
            Side::Right => -self.body_half_width,
        };
        (x, y)
    }

    /// Largest joint change in one control step.
    pub fn max_joint_step(&self) -> f64 {
        self.servo_speed * self.control_dt
    }

    /// Upper bound on horizontal foot speed relative to the body: swinging
    /// contributes at most `(coxa + femur)·ω`, elevating at most `femur·ω`.
    pub fn max_foot_speed(&self) -> f64 {
        (self.coxa + 2.0 * self.femur) * self.servo_speed
    }
}

/// Foot position in the body frame, z relative to the mount.
///
/// s1 swings the leg about the vertical axis through the mount (negative is
/// anterior on both sides); s2 raises the femur; the tibia stays vertical
/// because s3 = −s2.
pub fn forward_kinematics(leg: usize, s1: f64, s2: f64, config: &HexapodConfig) -> [f64; 3] {
    let (mx, my) = config.mount(leg);
    let yaw = match legs::side(leg) {
        Side::Right => -FRAC_PI_2 - s1,
        Side::Left => FRAC_PI_2 + s1,
    };
    let reach = config.coxa + config.femur * libm::cos(s2);
    let z = config.femur * libm::sin(s2) - config.tibia;
    [mx + reach * libm::cos(yaw), my + reach * libm::sin(yaw), z]
}

/// Binary time × leg contact matrix.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GaitDiagram {
    rows: Vec<LegSet>,
}

impl GaitDiagram {
    pub fn from_rows(rows: Vec<LegSet>) -> Self {
        GaitDiagram { rows }
    }

    pub fn steps(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[LegSet] {
        &self.rows
    }

    pub fn contact(&self, step: usize, leg: usize) -> bool {
        self.rows[step].contains(leg)
    }

    /// Row-major (time-major) flattening: `[C₀₀, C₀₁, …, C₀₅, C₁₀, …]`.
    pub fn behavior_vector(&self) -> BehaviorVector {
        BehaviorVector::from_bits(
            self.rows
                .iter()
                .flat_map(|row| (0..LEGS).map(move |l| row.contains(l))),
        )
    }

    /// Inverse of [`behavior_vector`](Self::behavior_vector).
    pub fn from_behavior(b: &BehaviorVector) -> Result<Self> {
        if !b.len().is_multiple_of(LEGS) {
            return Err(Error::LengthMismatch {
                expected: b.len().div_ceil(LEGS) * LEGS,
                actual: b.len(),
            });
        }
        let rows = (0..b.len() / LEGS)
            .map(|t| {
                let mut row = LegSet::EMPTY;
                for l in 0..LEGS {
                    if b.get(t * LEGS + l) {
                        row.insert(l);
                    }
                }
                row
            })
            .collect();
        Ok(GaitDiagram { rows })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    /// Final position along the initial forward axis, in meters.
    pub forward_displacement: f64,
    /// Distance from the final position to the goal straight ahead.
    pub goal_distance: f64,
    /// Signed angle of the net displacement from the initial forward axis, degrees.
    pub heading_deg: f64,
    pub gait: GaitDiagram,
    pub trajectory: Vec<Pose>,
    pub failed: bool,
}

impl EvalResult {
    /// Outcome of a controller that could not run at all.
    pub fn failure(config: &HexapodConfig) -> Self {
        EvalResult {
            forward_displacement: 0.0,
            goal_distance: config.goal_distance,
            heading_deg: 0.0,
            gait: GaitDiagram::from_rows(alloc::vec![LegSet::EMPTY; config.steps()]),
            trajectory: alloc::vec![Pose { t: 0.0, x: 0.0, y: 0.0, heading: 0.0 }],
            failed: true,
        }
    }

    pub fn behavior(&self) -> BehaviorVector {
        self.gait.behavior_vector()
    }
}

/// Per-step view handed to a [`simulate_observed`] observer.
pub struct StepView<'a> {
    pub step: usize,
    pub t: f64,
    pub controller: &'a Controller,
    pub command: &'a JointCommand,
    pub contacts: LegSet,
}

pub fn simulate(controller: &mut Controller, config: &HexapodConfig) -> EvalResult {
    simulate_observed(controller, config, |_| {})
}

pub fn simulate_observed<F>(controller: &mut Controller, config: &HexapodConfig, mut observe: F) -> EvalResult
where
    F: FnMut(&StepView<'_>),
{
    let steps = config.steps();
    let dt = config.control_dt;
    let contacts_of = |feet: &[[f64; 3]; LEGS]| {
        let mut c = LegSet::EMPTY;
        for (l, f) in feet.iter().enumerate() {
            if !config.damage.contains(l) && config.body_height + f[2] <= config.contact_threshold {
                c.insert(l);
            }
        }
        c
    };
    let feet_of = |cmd: &JointCommand| {
        let mut feet = [[0.0; 3]; LEGS];
        for (l, f) in feet.iter_mut().enumerate() {
            *f = forward_kinematics(l, cmd.s1[l], cmd.s2[l], config);
        }
        feet
    };

    let max_step = config.max_joint_step();
    let slew = |from: f64, to: f64| from + clamp(to - from, -max_step, max_step);
    let mut applied = JointCommand::default();
    let mut prev_feet = feet_of(&applied);
    let mut prev_contacts = contacts_of(&prev_feet);
    let mut tracker = ContactTracker::new(prev_contacts);
    let mut sensors = SensorFrame {
        contacts: prev_contacts,
        landed: LegSet::EMPTY,
    };
    let (mut x, mut y, mut heading) = (0.0f64, 0.0f64, 0.0f64);
    let mut rows = Vec::with_capacity(steps);
    let mut trajectory = Vec::with_capacity(steps + 1);
    trajectory.push(Pose { t: 0.0, x, y, heading });

    for step in 0..steps {
        let t = step as f64 * dt;
        let command = match controller.tick(&sensors, t, dt) {
            Ok(c) => c.clamped(),
            Err(_) => {
                rows.resize(steps, LegSet::EMPTY);
                return EvalResult {
                    forward_displacement: 0.0,
                    goal_distance: config.goal_distance,
                    heading_deg: 0.0,
                    gait: GaitDiagram { rows },
                    trajectory,
                    failed: true,
                };
            }
        };
        for l in 0..LEGS {
            applied.s1[l] = slew(applied.s1[l], command.s1[l]);
            applied.s2[l] = slew(applied.s2[l], command.s2[l]);
        }
        let command = applied;
        let feet = feet_of(&command);
        let contacts = contacts_of(&feet);
        rows.push(contacts);

        let planted = contacts.intersection(prev_contacts);
        if planted.len() >= 2 {
            let n = planted.len() as f64;
            let (mut dx, mut dy, mut dpsi) = (0.0, 0.0, 0.0);
            for l in planted.iter() {
                let (p, q) = (prev_feet[l], feet[l]);
                dx += q[0] - p[0];
                dy += q[1] - p[1];
                dpsi += wrap_pi(libm::atan2(q[1], q[0]) - libm::atan2(p[1], p[0]));
            }
            let (bx, by) = (-dx / n, -dy / n);
            let (s, c) = (libm::sin(heading), libm::cos(heading));
            x += c * bx - s * by;
            y += s * bx + c * by;
            heading += -dpsi / n;
        }

        observe(&StepView {
            step,
            t,
            controller,
            command: &command,
            contacts,
        });

        let landed = tracker.update(contacts);
        sensors = SensorFrame { contacts, landed };
        prev_feet = feet;
        prev_contacts = contacts;
        trajectory.push(Pose {
            t: (step + 1) as f64 * dt,
            x,
            y,
            heading,
        });
    }

    let dist = libm::hypot(x, y);
    EvalResult {
        forward_displacement: x,
        goal_distance: libm::hypot(config.goal_distance - x, y),
        heading_deg: if dist < 1e-6 {
            0.0
        } else {
            libm::atan2(y, x).to_degrees()
        },
        gait: GaitDiagram { rows },
        trajectory,
        failed: false,
    }
}
