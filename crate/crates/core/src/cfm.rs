//! Polynomial capability-function model.
//!
//! A flat parameter vector holds per-joint polynomial coefficients in
//! joint-major order. For a single joint with coefficients `θ0..θN-1`
//! the commanded trajectory over phase `φ = t/T ∈ [0,1]` is
//!
//! ```text
//! q(φ) = -θ0 (φ - 1) + θ1 φ + Σ_{i=2} θi (φ^(i-1) - 1) φ
//! ```
//!
//! so `q(0) = θ0` (start position) and `q(1) = θ1` (final position),
//! and higher-order coefficients only contribute when non-zero. Arm
//! joints interpret the value as a position target, wheel joints as a
//! velocity target.

use std::f64::consts::PI;

use thiserror::Error;

use crate::sim::{execute, Action, Capability, RobotSpec, SimConfig, SimError, WorldState};

#[derive(Debug, Error)]
pub enum CfmError {
    #[error("phase {0} outside [0, 1]")]
    PhaseOutOfRange(f64),
    #[error("parameter vector has {found} coefficients, space needs {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("parameter space does not match robot: {0}")]
    SpaceMismatch(String),
    #[error("coefficient {index} = {value} outside [{lo}, {hi}]")]
    OutOfBounds { index: usize, value: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Coefficient block of one joint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointParams {
    /// Number of coefficients.
    pub count: usize,
    /// Per-coefficient bounds.
    pub lo: f64,
    pub hi: f64,
}

/// The parameter space Θ: per-joint coefficient counts and bounds,
/// flattened joint-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSpace {
    pub joints: Vec<JointParams>,
}

/// Default coefficient count for arm joints.
pub const ARM_COEFF_COUNT: usize = 5;
/// Default coefficient count for wheel joints.
pub const WHEEL_COEFF_COUNT: usize = 3;

impl ParameterSpace {
    /// The default space for a robot: five coefficients in `[-π, π]`
    /// per arm joint, three in `[-2π, 2π]` per wheel joint.
    pub fn for_robot(spec: &RobotSpec) -> ParameterSpace {
        let joints = spec
            .joints
            .iter()
            .map(|j| {
                if j.wheel {
                    JointParams { count: WHEEL_COEFF_COUNT, lo: -2.0 * PI, hi: 2.0 * PI }
                } else {
                    JointParams { count: ARM_COEFF_COUNT, lo: -PI, hi: PI }
                }
            })
            .collect();
        ParameterSpace { joints }
    }

    pub fn dimension(&self) -> usize {
        self.joints.iter().map(|j| j.count).sum()
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    /// Coefficient range of joint `j` within the flat vector.
    pub fn block(&self, j: usize) -> std::ops::Range<usize> {
        let start: usize = self.joints[..j].iter().map(|p| p.count).sum();
        start..start + self.joints[j].count
    }

    /// Bounds of flat coefficient `index`.
    pub fn bounds(&self, index: usize) -> (f64, f64) {
        let mut off = 0;
        for p in &self.joints {
            if index < off + p.count {
                return (p.lo, p.hi);
            }
            off += p.count;
        }
        panic!("coefficient index {} out of range", index);
    }

    pub fn validate(&self) -> Result<(), CfmError> {
        for (j, p) in self.joints.iter().enumerate() {
            if p.count < 2 {
                return Err(CfmError::SpaceMismatch(format!("joint {} needs at least 2 coefficients", j)));
            }
            if !(p.lo < p.hi) {
                return Err(CfmError::SpaceMismatch(format!("joint {} bounds are empty", j)));
            }
        }
        Ok(())
    }

    /// Check a flat vector against dimension and bounds.
    pub fn check(&self, theta: &[f64]) -> Result<(), CfmError> {
        if theta.len() != self.dimension() {
            return Err(CfmError::DimensionMismatch { expected: self.dimension(), found: theta.len() });
        }
        for (i, &v) in theta.iter().enumerate() {
            let (lo, hi) = self.bounds(i);
            if v < lo || v > hi {
                return Err(CfmError::OutOfBounds { index: i, value: v, lo, hi });
            }
        }
        Ok(())
    }

    /// Clamp a flat vector into bounds.
    pub fn clamp(&self, theta: &mut [f64]) {
        for (i, v) in theta.iter_mut().enumerate() {
            let (lo, hi) = self.bounds(i);
            *v = v.max(lo).min(hi);
        }
    }
}

/// A flat coefficient vector, joint-major.
pub type ParameterVector = Vec<f64>;

/// Evaluate the per-joint polynomial at phase `φ ∈ [0, 1]`.
pub fn eval_poly(theta_joint: &[f64], phi: f64) -> Result<f64, CfmError> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(CfmError::PhaseOutOfRange(phi));
    }
    Ok(eval_poly_unchecked(theta_joint, phi))
}

pub(crate) fn eval_poly_unchecked(theta_joint: &[f64], phi: f64) -> f64 {
    let mut q = 0.0;
    if !theta_joint.is_empty() {
        q -= theta_joint[0] * (phi - 1.0);
    }
    if theta_joint.len() > 1 {
        q += theta_joint[1] * phi;
    }
    for (i, &c) in theta_joint.iter().enumerate().skip(2) {
        q += c * (phi.powi(i as i32 - 1) - 1.0) * phi;
    }
    q
}

/// The capability function realized by a parameter vector: per-joint
/// commands are the polynomial evaluated at `φ = t/T`.
pub struct PolynomialTrajectory {
    space: ParameterSpace,
    theta: Vec<f64>,
    horizon: f64,
}

impl PolynomialTrajectory {
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Command vector at time `t` (positions for arm joints, velocities
    /// for wheels; the interpretation is the simulator's).
    pub fn commands(&self, t: f64) -> Vec<f64> {
        let phi = (t / self.horizon).clamp(0.0, 1.0);
        (0..self.space.joint_count())
            .map(|j| eval_poly_unchecked(&self.theta[self.space.block(j)], phi))
            .collect()
    }

    /// The start positions encoded by θ0 of every joint; wheels start
    /// at rest position zero since their command is a velocity.
    pub fn initial_state(&self, spec: &RobotSpec) -> WorldState {
        let q = spec
            .joints
            .iter()
            .enumerate()
            .map(|(j, joint)| if joint.wheel { 0.0 } else { self.theta[self.space.block(j)][0] })
            .collect();
        WorldState::from_positions(spec, q)
    }
}

impl crate::sim::CapabilityFunction for PolynomialTrajectory {
    fn action(&self, _state: &WorldState, t: f64) -> Action {
        Action::kinematic(self.commands(t), 0.0)
    }
}

/// Build the capability function for `theta`.
pub fn make_capability_function(
    space: &ParameterSpace,
    theta: &[f64],
    spec: &RobotSpec,
    horizon: f64,
) -> Result<PolynomialTrajectory, CfmError> {
    space.validate()?;
    if space.joint_count() != spec.joint_count() {
        return Err(CfmError::SpaceMismatch(format!(
            "space has {} joints, robot has {}",
            space.joint_count(),
            spec.joint_count()
        )));
    }
    if theta.len() != space.dimension() {
        return Err(CfmError::DimensionMismatch { expected: space.dimension(), found: theta.len() });
    }
    Ok(PolynomialTrajectory { space: space.clone(), theta: theta.to_vec(), horizon })
}

/// Simulate the capability encoded by `theta`, starting from the
/// trajectory's own start state.
pub fn simulate_theta(
    space: &ParameterSpace,
    theta: &[f64],
    spec: &RobotSpec,
    config: &SimConfig,
) -> Result<Capability, CfmError> {
    let cf = make_capability_function(space, theta, spec, config.horizon)?;
    let initial = cf.initial_state(spec);
    let mut cap = execute(spec, config, &cf, initial)?;
    cap.source = Some(theta.to_vec());
    Ok(cap)
}

/// Maximum pointwise trajectory deviation when perturbing each
/// coefficient by `eps`. Exercised by the property suite to check the
/// local smoothness the clustering stage relies on.
pub fn smoothness_probe(
    space: &ParameterSpace,
    theta: &[f64],
    eps: f64,
    spec: &RobotSpec,
    config: &SimConfig,
) -> Result<f64, CfmError> {
    let reference = simulate_theta(space, theta, spec, config)?;
    let mut worst: f64 = 0.0;
    for i in 0..theta.len() {
        let mut perturbed = theta.to_vec();
        perturbed[i] += eps;
        let cap = simulate_theta(space, &perturbed, spec, config)?;
        for k in 0..cap.len() {
            for (a, b) in cap.positions_at(k).iter().zip(reference.positions_at(k)) {
                worst = worst.max((a - b).abs());
            }
            for d in 0..3 {
                worst = worst.max((cap.end_effector[k][d] - reference.end_effector[k][d]).abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::PropertyGraph;
    use crate::sim::robot_from_assembly;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn arm() -> RobotSpec {
        let mut g = PropertyGraph::new();
        let cat = fixtures::install_catalogue(&mut g).unwrap();
        let id = fixtures::arm_assembly(&mut g, &cat, "arm").unwrap();
        robot_from_assembly(&g, &id).unwrap()
    }

    /// Independent oracle: literal term-by-term summation of the stated
    /// polynomial, kept separate from the implementation path.
    fn poly_oracle(theta: &[f64], phi: f64) -> f64 {
        let mut acc = -theta[0] * (phi - 1.0) + theta[1] * phi;
        for i in 2..theta.len() {
            let mut pow = 1.0;
            for _ in 0..(i - 1) {
                pow *= phi;
            }
            acc += theta[i] * (pow - 1.0) * phi;
        }
        acc
    }

    #[test]
    fn boundary_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let theta: Vec<f64> = (0..5).map(|_| rng.gen_range(-PI..PI)).collect();
            assert!((eval_poly(&theta, 0.0).unwrap() - theta[0]).abs() <= 1e-12);
            assert!((eval_poly(&theta, 1.0).unwrap() - theta[1]).abs() <= 1e-12);
        }
    }

    #[test]
    fn midpoint_matches_oracle() {
        let theta = [0.0, PI, 1.0, 0.0, 0.0];
        let v = eval_poly(&theta, 0.5).unwrap();
        assert!((v - (PI / 2.0 - 0.25)).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let theta: Vec<f64> = (0..5).map(|_| rng.gen_range(-PI..PI)).collect();
            let phi: f64 = rng.gen_range(0.0..1.0);
            let v = eval_poly(&theta, phi).unwrap();
            assert!((v - poly_oracle(&theta, phi)).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_out_of_range() {
        assert!(matches!(eval_poly(&[0.0, 0.0], 1.5), Err(CfmError::PhaseOutOfRange(_))));
        assert!(matches!(eval_poly(&[0.0, 0.0], -0.1), Err(CfmError::PhaseOutOfRange(_))));
    }

    #[test]
    fn linear_reduction_when_high_order_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let t0: f64 = rng.gen_range(-PI..PI);
            let t1: f64 = rng.gen_range(-PI..PI);
            let theta = [t0, t1, 0.0, 0.0, 0.0];
            let phi: f64 = rng.gen_range(0.0..1.0);
            let v = eval_poly(&theta, phi).unwrap();
            assert!((v - (t0 + (t1 - t0) * phi)).abs() < 1e-12);
        }
    }

    #[test]
    fn appending_zero_coefficients_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let theta: Vec<f64> = (0..5).map(|_| rng.gen_range(-PI..PI)).collect();
            let mut extended = theta.clone();
            extended.extend([0.0, 0.0, 0.0]);
            let phi: f64 = rng.gen_range(0.0..1.0);
            assert_eq!(eval_poly(&theta, phi).unwrap(), eval_poly(&extended, phi).unwrap());
        }
    }

    #[test]
    fn parameter_counts_match_defaults() {
        let spec = arm();
        let space = ParameterSpace::for_robot(&spec);
        assert_eq!(space.dimension(), 15, "3-DOF arm with 5 coefficients per joint");

        let mut g = PropertyGraph::new();
        let cat = fixtures::install_catalogue(&mut g).unwrap();
        let cart = fixtures::cart_assembly(&mut g, &cat, "cart").unwrap();
        let cart_spec = robot_from_assembly(&g, &cart).unwrap();
        let cart_space = ParameterSpace::for_robot(&cart_spec);
        assert_eq!(cart_space.dimension(), 12, "4 wheels with 3 coefficients each");

        let combo = fixtures::combo_assembly(&mut g, &cat, "combo").unwrap();
        let combo_spec = robot_from_assembly(&g, &combo).unwrap();
        assert_eq!(ParameterSpace::for_robot(&combo_spec).dimension(), 27);
    }

    #[test]
    fn zero_theta_commands_are_zero() {
        let spec = arm();
        let space = ParameterSpace::for_robot(&spec);
        let theta = vec![0.0; space.dimension()];
        let cf = make_capability_function(&space, &theta, &spec, 4.0).unwrap();
        for t in [0.0, 1.3, 4.0] {
            assert!(cf.commands(t).iter().all(|&c| c == 0.0));
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let spec = arm();
        let space = ParameterSpace::for_robot(&spec);
        let theta = vec![0.0; space.dimension() - 1];
        assert!(matches!(
            make_capability_function(&space, &theta, &spec, 4.0),
            Err(CfmError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn smoothness_probe_zero_eps_is_zero() {
        let spec = arm();
        let space = ParameterSpace::for_robot(&spec);
        let config = SimConfig { dt: 0.02, horizon: 0.5 };
        let theta = vec![0.1; space.dimension()];
        assert_eq!(smoothness_probe(&space, &theta, 0.0, &spec, &config).unwrap(), 0.0);
    }

    #[test]
    fn smoothness_probe_shrinks_with_eps() {
        let spec = arm();
        let space = ParameterSpace::for_robot(&spec);
        let config = SimConfig { dt: 0.02, horizon: 0.5 };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let theta: Vec<f64> = (0..space.dimension()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let d1 = smoothness_probe(&space, &theta, 0.1, &spec, &config).unwrap();
        let d2 = smoothness_probe(&space, &theta, 0.01, &spec, &config).unwrap();
        let d3 = smoothness_probe(&space, &theta, 0.001, &spec, &config).unwrap();
        assert!(d1 >= d2 && d2 >= d3, "{} {} {}", d1, d2, d3);
        assert!(d3 > 0.0);
    }

    #[test]
    fn smoothness_probe_clamp_bound() {
        // a position joint moves at most vel_limit per second, so a
        // coefficient nudge can shift the trajectory by at most
        // eps * (T * vel + 1): the command itself moves by <= eps
        // pointwise and tracking is rate limited.
        let spec = arm();
        let space = ParameterSpace::for_robot(&spec);
        let config = SimConfig { dt: 0.02, horizon: 1.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..5 {
            let theta: Vec<f64> = (0..space.dimension()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let eps = 0.05;
            let vel_cap = spec.joints.iter().map(|j| j.vel_limit).fold(f64::MIN, f64::max);
            let d = smoothness_probe(&space, &theta, eps, &spec, &config).unwrap();
            // end-effector deviation scales with the arm reach on top of
            // the joint-space bound
            let bound = eps * (config.horizon * vel_cap + 1.0) * (1.0 + spec.reach());
            assert!(d <= bound, "deviation {} exceeds bound {}", d, bound);
        }
    }
}
