//! Built-in component catalogues and assemblies.
//!
//! These are the desk-scale test systems: a robotic leg built through
//! the documented operator sequence, a 3-DOF serial arm with a
//! composite pan-tilt unit, a four-wheeled skid-steer cart and the
//! combination of cart and arm. The CLI `assemble` command and the test
//! suites share these builders.

use std::f64::consts::PI;

use crate::graph::{Domain, GraphError, PropertyGraph};
use crate::sim::prop;

/// Ids of the prerequisite models for the leg sequence: a joint model
/// with two mechanical interfaces `a`,`b` and a limb model with `x`,`y`.
pub struct LegPrereqs {
    pub mech_iface: String,
    pub joint_model: String,
    pub limb_model: String,
}

pub fn leg_prereqs(g: &mut PropertyGraph) -> Result<LegPrereqs, GraphError> {
    let mech_iface = g.create_interface_model(Domain::Mechanics, "mech-link")?;
    let joint_model = g.create_component_model(Domain::Mechanics, "J")?;
    for label in ["a", "b"] {
        let i = g.instantiate_interface(&mech_iface, label)?;
        g.has_interface_model(&joint_model, &i)?;
    }
    let limb_model = g.create_component_model(Domain::Mechanics, "L")?;
    for label in ["x", "y"] {
        let i = g.instantiate_interface(&mech_iface, label)?;
        g.has_interface_model(&limb_model, &i)?;
    }
    Ok(LegPrereqs { mech_iface, joint_model, limb_model })
}

/// Result of running the leg construction sequence.
pub struct LegResult {
    pub leg_model: String,
    pub joints: [String; 4],
    pub limbs: [String; 2],
}

/// The documented example operator sequence: four joint instances, two
/// limb instances, five connections, a new `Leg` assembly model and two
/// compositions.
pub fn leg_sequence(g: &mut PropertyGraph, pre: &LegPrereqs) -> Result<LegResult, GraphError> {
    let j1 = g.instantiate_component(&pre.joint_model, "hip1")?;
    let j2 = g.instantiate_component(&pre.joint_model, "hip2")?;
    let j3 = g.instantiate_component(&pre.joint_model, "hip3")?;
    let j4 = g.instantiate_component(&pre.joint_model, "knee")?;
    let iface = |g: &PropertyGraph, c: &str, l: &str| g.interface_of(c, l).expect("instance interface");
    g.connect(&iface(g, &j1, "b"), &iface(g, &j2, "a"))?;
    g.connect(&iface(g, &j2, "b"), &iface(g, &j3, "a"))?;
    let l1 = g.instantiate_component(&pre.limb_model, "upperLimb")?;
    let l2 = g.instantiate_component(&pre.limb_model, "lowerLimb")?;
    g.connect(&iface(g, &j3, "b"), &iface(g, &l1, "x"))?;
    g.connect(&iface(g, &l1, "y"), &iface(g, &j4, "a"))?;
    g.connect(&iface(g, &j4, "b"), &iface(g, &l2, "x"))?;
    let m = g.create_component_model(Domain::Assembly, "Leg")?;
    g.compose(&j1, &m)?;
    g.compose(&j2, &m)?;
    Ok(LegResult { leg_model: m, joints: [j1, j2, j3, j4], limbs: [l1, l2] })
}

/// Ids of the desk-scale component catalogue.
pub struct Catalogue {
    pub mech_iface: String,
    pub joint_motor: String,
    pub pan_tilt_unit: String,
    pub lower_pole: String,
    pub upper_pole: String,
    pub end_effector: String,
    pub platform: String,
    pub wheel: String,
}

/// Arm joint velocity limit in rad/s.
pub const ARM_VEL_LIMIT: f64 = 2.0;
/// Wheel velocity limit in rad/s.
pub const WHEEL_VEL_LIMIT: f64 = 2.0 * PI;

/// Install the component and interface models all desk assemblies are
/// built from.
pub fn install_catalogue(g: &mut PropertyGraph) -> Result<Catalogue, GraphError> {
    let mech_iface = g.create_interface_model(Domain::Mechanics, "mech-link")?;

    let joint_motor = g.create_component_model(Domain::Mechanics, "joint-motor")?;
    g.set_property(&joint_motor, prop::AXIS, "z")?;
    g.set_property(&joint_motor, prop::LIMIT_LO_RAD, &(-PI).to_string())?;
    g.set_property(&joint_motor, prop::LIMIT_HI_RAD, &PI.to_string())?;
    g.set_property(&joint_motor, prop::VEL_LIMIT_RAD_S, &ARM_VEL_LIMIT.to_string())?;
    for label in ["a", "b"] {
        let i = g.instantiate_interface(&mech_iface, label)?;
        g.has_interface_model(&joint_motor, &i)?;
    }

    let pole = |g: &mut PropertyGraph, name: &str, length: f64| -> Result<String, GraphError> {
        let m = g.create_component_model(Domain::Mechanics, name)?;
        g.set_property(&m, prop::LENGTH_M, &length.to_string())?;
        for label in ["a", "b"] {
            let i = g.instantiate_interface(&mech_iface, label)?;
            g.has_interface_model(&m, &i)?;
        }
        Ok(m)
    };
    let lower_pole = pole(g, "lower-pole", 0.2)?;
    let upper_pole = pole(g, "upper-pole", 0.2)?;
    let end_effector = pole(g, "end-effector", 0.05)?;

    // pan-tilt unit: a composite of two joint motors with exported ends
    let pan_tilt_unit = g.create_component_model(Domain::Mechanics, "pan-tilt-unit")?;
    let pan = g.instantiate_component(&joint_motor, "pan")?;
    g.set_property(&pan, prop::ROOT, "true")?;
    let tilt = g.instantiate_component(&joint_motor, "tilt")?;
    g.set_property(&tilt, prop::AXIS, "y")?;
    g.compose(&pan, &pan_tilt_unit)?;
    g.compose(&tilt, &pan_tilt_unit)?;
    let pan_b = g.interface_of(&pan, "b").expect("pan.b");
    let tilt_a = g.interface_of(&tilt, "a").expect("tilt.a");
    g.connect(&pan_b, &tilt_a)?;
    let outer_a = g.instantiate_interface(&mech_iface, "a")?;
    g.has_interface_model(&pan_tilt_unit, &outer_a)?;
    let pan_a = g.interface_of(&pan, "a").expect("pan.a");
    g.export(&pan_a, &outer_a)?;
    let outer_b = g.instantiate_interface(&mech_iface, "b")?;
    g.has_interface_model(&pan_tilt_unit, &outer_b)?;
    let tilt_b = g.interface_of(&tilt, "b").expect("tilt.b");
    g.export(&tilt_b, &outer_b)?;

    let platform = g.create_component_model(Domain::Mechanics, "platform")?;
    g.set_property(&platform, prop::TRACK_WIDTH_M, "0.3")?;
    for label in ["w1", "w2", "w3", "w4", "mast"] {
        let i = g.instantiate_interface(&mech_iface, label)?;
        g.has_interface_model(&platform, &i)?;
    }

    let wheel = g.create_component_model(Domain::Mechanics, "wheel")?;
    g.set_property(&wheel, prop::WHEEL_RADIUS_M, "0.05")?;
    g.set_property(&wheel, prop::VEL_LIMIT_RAD_S, &WHEEL_VEL_LIMIT.to_string())?;
    let i = g.instantiate_interface(&mech_iface, "hub")?;
    g.has_interface_model(&wheel, &i)?;

    Ok(Catalogue {
        mech_iface,
        joint_motor,
        pan_tilt_unit,
        lower_pole,
        upper_pole,
        end_effector,
        platform,
        wheel,
    })
}

fn iface(g: &PropertyGraph, owner: &str, label: &str) -> String {
    g.interface_of(owner, label).expect("fixture interface")
}

/// Build the 3-DOF serial arm assembly: pan-tilt unit, lower pole,
/// joint motor (elbow), upper pole, end effector. Returns the assembly
/// model id.
pub fn arm_assembly(g: &mut PropertyGraph, cat: &Catalogue, name: &str) -> Result<String, GraphError> {
    let arm = g.create_component_model(Domain::Assembly, name)?;
    let ptu = g.instantiate_component(&cat.pan_tilt_unit, "ptu1")?;
    g.set_property(&ptu, prop::ROOT, "true")?;
    let lower = g.instantiate_component(&cat.lower_pole, "lower_pole")?;
    let elbow = g.instantiate_component(&cat.joint_motor, "elbow")?;
    g.set_property(&elbow, prop::AXIS, "y")?;
    let upper = g.instantiate_component(&cat.upper_pole, "upper_pole")?;
    let ee = g.instantiate_component(&cat.end_effector, "ee")?;
    for part in [&ptu, &lower, &elbow, &upper, &ee] {
        g.compose(part, &arm)?;
    }
    g.connect(&iface(g, &ptu, "b"), &iface(g, &lower, "a"))?;
    g.connect(&iface(g, &lower, "b"), &iface(g, &elbow, "a"))?;
    g.connect(&iface(g, &elbow, "b"), &iface(g, &upper, "a"))?;
    g.connect(&iface(g, &upper, "b"), &iface(g, &ee, "a"))?;
    Ok(arm)
}

/// Build the four-wheeled skid-steer cart assembly.
pub fn cart_assembly(g: &mut PropertyGraph, cat: &Catalogue, name: &str) -> Result<String, GraphError> {
    let cart = g.create_component_model(Domain::Assembly, name)?;
    let platform = g.instantiate_component(&cat.platform, "platform")?;
    g.set_property(&platform, prop::ROOT, "true")?;
    g.compose(&platform, &cart)?;
    let wheels = [("w_fl", "left"), ("w_fr", "right"), ("w_rl", "left"), ("w_rr", "right")];
    for (i, (wname, side)) in wheels.iter().enumerate() {
        let w = g.instantiate_component(&cat.wheel, wname)?;
        g.set_property(&w, prop::SIDE, side)?;
        g.compose(&w, &cart)?;
        let hub = iface(g, &w, "hub");
        let port = iface(g, &platform, &format!("w{}", i + 1));
        g.connect(&port, &hub)?;
    }
    Ok(cart)
}

/// Build the combined system: the cart platform carrying the arm on its
/// mast port. Instance labels match the standalone assemblies, so the
/// derived joint names coincide with the subsystem robots'.
pub fn combo_assembly(g: &mut PropertyGraph, cat: &Catalogue, name: &str) -> Result<String, GraphError> {
    let combo = g.create_component_model(Domain::Assembly, name)?;
    let platform = g.instantiate_component(&cat.platform, "platform")?;
    g.set_property(&platform, prop::ROOT, "true")?;
    g.compose(&platform, &combo)?;
    let wheels = [("w_fl", "left"), ("w_fr", "right"), ("w_rl", "left"), ("w_rr", "right")];
    for (i, (wname, side)) in wheels.iter().enumerate() {
        let w = g.instantiate_component(&cat.wheel, wname)?;
        g.set_property(&w, prop::SIDE, side)?;
        g.compose(&w, &combo)?;
        let hub = iface(g, &w, "hub");
        let port = iface(g, &platform, &format!("w{}", i + 1));
        g.connect(&port, &hub)?;
    }
    let ptu = g.instantiate_component(&cat.pan_tilt_unit, "ptu1")?;
    let lower = g.instantiate_component(&cat.lower_pole, "lower_pole")?;
    let elbow = g.instantiate_component(&cat.joint_motor, "elbow")?;
    g.set_property(&elbow, prop::AXIS, "y")?;
    let upper = g.instantiate_component(&cat.upper_pole, "upper_pole")?;
    let ee = g.instantiate_component(&cat.end_effector, "ee")?;
    for part in [&ptu, &lower, &elbow, &upper, &ee] {
        g.compose(part, &combo)?;
    }
    g.connect(&iface(g, &platform, "mast"), &iface(g, &ptu, "a"))?;
    g.connect(&iface(g, &ptu, "b"), &iface(g, &lower, "a"))?;
    g.connect(&iface(g, &lower, "b"), &iface(g, &elbow, "a"))?;
    g.connect(&iface(g, &elbow, "b"), &iface(g, &upper, "a"))?;
    g.connect(&iface(g, &upper, "b"), &iface(g, &ee, "a"))?;
    Ok(combo)
}
