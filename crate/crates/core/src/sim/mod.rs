//! Deterministic kinematic simulator.
//!
//! A [`RobotSpec`] is a serial kinematic tree (revolute joints and
//! fixed-length links) with an optional skid-steer wheeled base. Arm
//! joints track position commands clamped by their velocity limit;
//! wheel joints integrate commanded velocities; the base integrates
//! ideal skid-steer kinematics. There are no dynamics: identical inputs
//! produce bit-identical trajectories, and limit violations are
//! recorded, never raised.

mod assembly;
mod table;

pub use assembly::{robot_from_assembly, prop};

use nalgebra::{Isometry3, Translation3, Unit, UnitQuaternion, Vector3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("part {part:?} lacks kinematic annotation: {what}")]
    MissingAnnotation { part: String, what: String },
    #[error("assembly is not a kinematic tree: {0}")]
    NonTreeStructure(String),
    #[error("command dimension {found} does not match joint count {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid robot spec: {0}")]
    InvalidSpec(String),
    #[error("graph error: {0}")]
    Graph(#[from] crate::graph::GraphError),
}

/// Which side of a skid-steer base a wheel drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WheelSide {
    Left,
    Right,
}

/// A single revolute or wheel joint.
#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub name: String,
    /// Rotation axis in the local frame (unit vector).
    pub axis: [f64; 3],
    /// Position limits in radians; `None` marks a continuous wheel joint.
    pub limits: Option<(f64, f64)>,
    /// Velocity limit in rad/s.
    pub vel_limit: f64,
    pub wheel: bool,
    pub side: Option<WheelSide>,
}

/// A fixed link extending along the local +x axis, attached after
/// `parent_joint` (`None` attaches it before the first joint).
#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub name: String,
    pub length: f64,
    pub parent_joint: Option<usize>,
}

/// Skid-steer base parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct WheeledBase {
    pub wheel_radius: f64,
    pub track_width: f64,
    pub wheel_count: usize,
}

/// An executable robot derived from an assembly component model.
#[derive(Clone, Debug, PartialEq)]
pub struct RobotSpec {
    pub name: String,
    /// Joints in deterministic traversal order (base outward).
    pub joints: Vec<Joint>,
    pub links: Vec<Link>,
    pub base: Option<WheeledBase>,
    /// Name of the end-effector link ("" when the robot has no links).
    pub end_effector: String,
}

impl RobotSpec {
    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn arm_joint_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.joints.iter().enumerate().filter(|(_, j)| !j.wheel).map(|(i, _)| i)
    }

    pub fn wheel_joint_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.joints.iter().enumerate().filter(|(_, j)| j.wheel).map(|(i, _)| i)
    }

    /// Longest reach of the link chain (sum of link lengths).
    pub fn reach(&self) -> f64 {
        self.links.iter().map(|l| l.length).sum()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let mut names = std::collections::BTreeSet::new();
        for j in &self.joints {
            if !names.insert(j.name.clone()) {
                return Err(SimError::InvalidSpec(format!("duplicate joint name {:?}", j.name)));
            }
            if let Some((lo, hi)) = j.limits {
                if lo >= hi {
                    return Err(SimError::InvalidSpec(format!("joint {:?} limits {} >= {}", j.name, lo, hi)));
                }
            }
            if j.vel_limit <= 0.0 {
                return Err(SimError::InvalidSpec(format!("joint {:?} velocity limit must be positive", j.name)));
            }
        }
        for l in &self.links {
            if let Some(p) = l.parent_joint {
                if p >= self.joints.len() || self.joints[p].wheel {
                    return Err(SimError::InvalidSpec(format!("link {:?} has invalid parent joint", l.name)));
                }
            }
        }
        Ok(())
    }
}

/// Planar pose of the wheeled base.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasePose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl BasePose {
    pub const ORIGIN: BasePose = BasePose { x: 0.0, y: 0.0, theta: 0.0 };

    /// Apply this pose to a point in the base frame.
    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.theta.sin_cos();
        [self.x + c * p[0] - s * p[1], self.y + s * p[0] + c * p[1], p[2]]
    }
}

/// Full world state: robot state (actuator positions/velocities plus
/// empty sensor/internal placeholders) and the observation (end
/// effector position, base pose when a base exists).
#[derive(Clone, Debug, PartialEq)]
pub struct WorldState {
    /// Joint positions in radians.
    pub q: Vec<f64>,
    /// Joint velocities in rad/s.
    pub qd: Vec<f64>,
    /// Sensor state; empty at desk scale.
    pub sensor: Vec<f64>,
    /// Internal state; empty at desk scale.
    pub internal: Vec<f64>,
    /// Observed end-effector position in the world frame.
    pub end_effector: [f64; 3],
    pub base: Option<BasePose>,
}

impl WorldState {
    /// Rest state with all joints at the given positions.
    pub fn from_positions(spec: &RobotSpec, q: Vec<f64>) -> WorldState {
        let base = spec.base.as_ref().map(|_| BasePose::ORIGIN);
        let end_effector = forward_kinematics(spec, &q, base);
        WorldState { q, qd: vec![0.0; spec.joint_count()], sensor: Vec::new(), internal: Vec::new(), end_effector, base }
    }
}

/// A kinematic action: one command per joint (position target for arm
/// joints, velocity target for wheels) held for one step. Perceptive
/// and internal action slots exist in the type but stay unpopulated.
#[derive(Clone, Debug, PartialEq)]
pub struct Action {
    pub commands: Vec<f64>,
    pub dt: f64,
    pub perceptive: (),
    pub internal: (),
}

impl Action {
    pub fn kinematic(commands: Vec<f64>, dt: f64) -> Action {
        Action { commands, dt, perceptive: (), internal: () }
    }
}

/// Simulation configuration: forward-Euler with fixed step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    /// Step length in seconds.
    pub dt: f64,
    /// Horizon in seconds; must be a positive multiple of `dt`.
    pub horizon: f64,
}

impl SimConfig {
    pub fn new(dt: f64, horizon: f64) -> Result<SimConfig, SimError> {
        if !(dt > 0.0) {
            return Err(SimError::InvalidSpec("dt must be positive".to_string()));
        }
        let steps = horizon / dt;
        if !(horizon > 0.0) || (steps - steps.round()).abs() > 1e-9 {
            return Err(SimError::InvalidSpec("horizon must be a positive multiple of dt".to_string()));
        }
        Ok(SimConfig { dt, horizon })
    }

    /// Number of integration steps over the horizon.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { dt: 0.02, horizon: 4.0 }
    }
}

/// What went out of bounds during a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    PositionLimit,
    VelocityLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub joint: usize,
    pub kind: ViolationKind,
    /// Time of the step that produced the violation.
    pub t: f64,
}

/// Per-step limit report.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    pub violations: Vec<Violation>,
}

/// Feasibility summary of a whole trajectory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// End-effector position in the world frame for joint positions `q`
/// composed with an optional base pose.
///
/// The chain is evaluated in the base frame first and the base pose is
/// applied to the result, so composing an arm-only evaluation with
/// [`BasePose::apply`] reproduces this function exactly.
pub fn forward_kinematics(spec: &RobotSpec, q: &[f64], base: Option<BasePose>) -> [f64; 3] {
    let local = forward_kinematics_local(spec, q);
    match base {
        Some(pose) => pose.apply(local),
        None => local,
    }
}

/// End-effector position in the base frame (ignores the base pose).
pub fn forward_kinematics_local(spec: &RobotSpec, q: &[f64]) -> [f64; 3] {
    let mut m = Isometry3::identity();
    for link in spec.links.iter().filter(|l| l.parent_joint.is_none()) {
        m *= Translation3::new(link.length, 0.0, 0.0);
    }
    for (i, joint) in spec.joints.iter().enumerate() {
        if joint.wheel {
            continue;
        }
        let axis = Unit::new_normalize(Vector3::new(joint.axis[0], joint.axis[1], joint.axis[2]));
        m *= UnitQuaternion::from_axis_angle(&axis, q[i]);
        for link in spec.links.iter().filter(|l| l.parent_joint == Some(i)) {
            m *= Translation3::new(link.length, 0.0, 0.0);
        }
    }
    let p = m.transform_point(&nalgebra::Point3::origin());
    [p.x, p.y, p.z]
}

fn clamp(x: f64, lo: f64, hi: f64) -> f64 {
    x.max(lo).min(hi)
}

/// Advance the world state by one step under `action`.
///
/// Limit violations are recorded in the returned report; the motion is
/// clamped to the feasible envelope and the simulation continues.
pub fn step(
    spec: &RobotSpec,
    config: &SimConfig,
    state: &WorldState,
    action: &Action,
    t: f64,
) -> Result<(WorldState, StepReport), SimError> {
    let n = spec.joint_count();
    if action.commands.len() != n {
        return Err(SimError::DimensionMismatch { expected: n, found: action.commands.len() });
    }
    let dt = config.dt;
    let mut q = state.q.clone();
    let mut qd = vec![0.0; n];
    let mut report = StepReport::default();

    for (i, joint) in spec.joints.iter().enumerate() {
        let cmd = action.commands[i];
        if joint.wheel {
            let mut w = cmd;
            if w.abs() > joint.vel_limit {
                report.violations.push(Violation { joint: i, kind: ViolationKind::VelocityLimit, t });
                w = clamp(w, -joint.vel_limit, joint.vel_limit);
            }
            qd[i] = w;
            q[i] = state.q[i] + w * dt;
        } else {
            let delta = cmd - state.q[i];
            let max_step = joint.vel_limit * dt;
            let mut step = delta;
            if delta.abs() > max_step {
                report.violations.push(Violation { joint: i, kind: ViolationKind::VelocityLimit, t });
                step = clamp(delta, -max_step, max_step);
            }
            let mut next = state.q[i] + step;
            if let Some((lo, hi)) = joint.limits {
                if next < lo || next > hi {
                    report.violations.push(Violation { joint: i, kind: ViolationKind::PositionLimit, t });
                    next = clamp(next, lo, hi);
                }
            }
            qd[i] = (next - state.q[i]) / dt;
            q[i] = next;
        }
    }

    let base = match (&spec.base, state.base) {
        (Some(wb), Some(pose)) => {
            let mut left = (0.0, 0usize);
            let mut right = (0.0, 0usize);
            for (i, joint) in spec.joints.iter().enumerate() {
                if joint.wheel {
                    match joint.side {
                        Some(WheelSide::Left) => {
                            left.0 += qd[i];
                            left.1 += 1;
                        }
                        Some(WheelSide::Right) => {
                            right.0 += qd[i];
                            right.1 += 1;
                        }
                        None => {}
                    }
                }
            }
            let mean_left = if left.1 > 0 { left.0 / left.1 as f64 } else { 0.0 };
            let mean_right = if right.1 > 0 { right.0 / right.1 as f64 } else { 0.0 };
            let v = wb.wheel_radius * (mean_right + mean_left) / 2.0;
            let omega = wb.wheel_radius * (mean_right - mean_left) / wb.track_width;
            let (s, c) = pose.theta.sin_cos();
            Some(BasePose { x: pose.x + v * c * dt, y: pose.y + v * s * dt, theta: pose.theta + omega * dt })
        }
        _ => state.base,
    };

    let end_effector = forward_kinematics(spec, &q, base);
    let next = WorldState { q, qd, sensor: Vec::new(), internal: Vec::new(), end_effector, base };
    Ok((next, report))
}

/// A fixed-horizon, time-stamped trajectory of world states, stored
/// flat (one row per step). The atom of exploration.
#[derive(Clone, Debug, PartialEq)]
pub struct Capability {
    pub n_joints: usize,
    pub dt: f64,
    pub times: Vec<f64>,
    /// Joint positions, row-major `[step * n_joints + joint]`.
    pub joint_positions: Vec<f64>,
    /// Joint velocities, same layout.
    pub joint_velocities: Vec<f64>,
    pub end_effector: Vec<[f64; 3]>,
    pub base_poses: Option<Vec<[f64; 3]>>,
    /// Parameter vector this capability was generated from, when known.
    pub source: Option<Vec<f64>>,
    pub report: FeasibilityReport,
}

impl Capability {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn positions_at(&self, k: usize) -> &[f64] {
        &self.joint_positions[k * self.n_joints..(k + 1) * self.n_joints]
    }

    pub fn velocities_at(&self, k: usize) -> &[f64] {
        &self.joint_velocities[k * self.n_joints..(k + 1) * self.n_joints]
    }

    pub fn state_at(&self, k: usize) -> WorldState {
        WorldState {
            q: self.positions_at(k).to_vec(),
            qd: self.velocities_at(k).to_vec(),
            sensor: Vec::new(),
            internal: Vec::new(),
            end_effector: self.end_effector[k],
            base: self.base_poses.as_ref().map(|b| BasePose { x: b[k][0], y: b[k][1], theta: b[k][2] }),
        }
    }

    pub fn feasible(&self) -> bool {
        self.report.feasible()
    }
}

/// Anything that maps (robot state, time) to an action.
pub trait CapabilityFunction {
    fn action(&self, state: &WorldState, t: f64) -> Action;
}

impl<F: Fn(&WorldState, f64) -> Action> CapabilityFunction for F {
    fn action(&self, state: &WorldState, t: f64) -> Action {
        self(state, t)
    }
}

/// Run the execution loop: repeatedly query the capability function and
/// integrate, collecting the time-stamped state sequence and the
/// feasibility report.
///
/// The action integrating step k is queried at the step's target time
/// `t_{k+1}`, so a position-tracking capability function lands exactly
/// on its intended final value at the horizon.
pub fn execute(
    spec: &RobotSpec,
    config: &SimConfig,
    cap_fn: &dyn CapabilityFunction,
    initial: WorldState,
) -> Result<Capability, SimError> {
    let steps = config.steps();
    let n = spec.joint_count();
    let mut cap = Capability {
        n_joints: n,
        dt: config.dt,
        times: Vec::with_capacity(steps + 1),
        joint_positions: Vec::with_capacity((steps + 1) * n),
        joint_velocities: Vec::with_capacity((steps + 1) * n),
        end_effector: Vec::with_capacity(steps + 1),
        base_poses: spec.base.as_ref().map(|_| Vec::with_capacity(steps + 1)),
        source: None,
        report: FeasibilityReport::default(),
    };
    let mut state = initial;
    push_state(&mut cap, 0.0, &state);
    for k in 0..steps {
        let t_next = (k + 1) as f64 * config.dt;
        let action = cap_fn.action(&state, t_next);
        let (next, report) = step(spec, config, &state, &action, t_next)?;
        cap.report.violations.extend(report.violations);
        state = next;
        push_state(&mut cap, t_next, &state);
    }
    Ok(cap)
}

fn push_state(cap: &mut Capability, t: f64, state: &WorldState) {
    cap.times.push(t);
    cap.joint_positions.extend_from_slice(&state.q);
    cap.joint_velocities.extend_from_slice(&state.qd);
    cap.end_effector.push(state.end_effector);
    if let (Some(rows), Some(pose)) = (cap.base_poses.as_mut(), state.base) {
        rows.push([pose.x, pose.y, pose.theta]);
    }
}
