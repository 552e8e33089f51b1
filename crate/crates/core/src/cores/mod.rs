//! Behavior models, semantic annotations and cognitive cores.
//!
//! A behavior model is a robot-agnostic label plus feature-space
//! constraints. Grounding it for a robot links every cluster that
//! passes the constraint check into a cognitive core; executing the
//! core means finding the parameter vector that jointly maximizes the
//! linked generative densities (log-domain sum, particle swarm) and
//! simulating it.

mod pso;
mod store;

pub use pso::{maximize, SwarmResult};
pub use store::{parse_behaviors, render_behaviors, CORE_FORMAT};

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::cfm::{simulate_theta, CfmError, PolynomialTrajectory};
use crate::cluster::{ClusterError, ClusterStore};
use crate::reason::Ontology;
use crate::seeding;
use crate::sim::{execute, Action, Capability, RobotSpec, SimConfig, SimError, WorldState};

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("variable constraint on {space:?} needs a target value")]
    MissingTarget { space: String },
    #[error("no cluster satisfies the {space:?} constraint")]
    UnsatisfiableConstraint { space: String },
    #[error("best joint log density {best} fell below the rejection boundary {threshold}")]
    NoFeasibleSample { best: f64, threshold: f64 },
    #[error("joint {joint:?} is driven by more than one core")]
    OverlappingActuators { joint: String },
    #[error("label {label:?} is not registered in the ontology")]
    UnknownOntologyLabel { label: String },
    #[error("an annotation needs at least one label")]
    AnnotationEmpty,
    #[error("constraint names space {expected:?} but was checked against {found:?}")]
    SpaceMismatch { expected: String, found: String },
    #[error("invalid behavior model: {0}")]
    BadModel(String),
    #[error("i/o failure: {0}")]
    Io(String),
    #[error("malformed store: {0}")]
    Parse(String),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Cfm(#[from] CfmError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Constraint kinds a behavior model can place on one feature space.
#[derive(Clone, Debug, PartialEq)]
pub enum ConstraintKind {
    /// Centroid must lie strictly inside (lo, hi) in every component.
    MinMax { lo: f64, hi: f64 },
    /// A target value is supplied at execution time; the nearest
    /// cluster is selected.
    Variable,
}

/// One feature-space constraint with an optional density exponent
/// weight (1 = the equally-weighted regime).
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub space_id: String,
    pub kind: ConstraintKind,
    pub weight: f64,
}

impl Constraint {
    pub fn min_max(space_id: &str, lo: f64, hi: f64) -> Constraint {
        Constraint { space_id: space_id.to_string(), kind: ConstraintKind::MinMax { lo, hi }, weight: 1.0 }
    }

    pub fn variable(space_id: &str) -> Constraint {
        Constraint { space_id: space_id.to_string(), kind: ConstraintKind::Variable, weight: 1.0 }
    }
}

/// Robot-agnostic, semantically labelled behavior abstraction.
#[derive(Clone, Debug, PartialEq)]
pub struct BehaviorModel {
    pub label: String,
    pub constraints: Vec<Constraint>,
}

impl BehaviorModel {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.label.is_empty() {
            return Err(CoreError::BadModel("label must not be empty".to_string()));
        }
        let mut seen = BTreeSet::new();
        for c in &self.constraints {
            if !seen.insert(&c.space_id) {
                return Err(CoreError::BadModel(format!(
                    "more than one constraint on feature space {:?}",
                    c.space_id
                )));
            }
            if let ConstraintKind::MinMax { lo, hi } = c.kind {
                if !(lo < hi) {
                    return Err(CoreError::BadModel(format!("empty min/max range on {:?}", c.space_id)));
                }
            }
            if !(c.weight > 0.0) {
                return Err(CoreError::BadModel(format!("weight on {:?} must be positive", c.space_id)));
            }
        }
        Ok(())
    }

    /// The reach behavior: high directness, start and end variable.
    pub fn reach() -> BehaviorModel {
        BehaviorModel {
            label: "reach".to_string(),
            constraints: vec![
                Constraint::min_max("dir", 0.8, 1.0),
                Constraint::variable("start"),
                Constraint::variable("end"),
            ],
        }
    }

    /// The comparison behavior without the directness constraint.
    pub fn reach_unconstrained() -> BehaviorModel {
        BehaviorModel {
            label: "reach-unconstrained".to_string(),
            constraints: vec![Constraint::variable("start"), Constraint::variable("end")],
        }
    }
}

/// Labels plus constraints; the matching currency between behaviors,
/// cores and planning tasks.
#[derive(Clone, Debug, PartialEq)]
pub struct SemanticAnnotation {
    pub labels: BTreeSet<String>,
    pub constraints: Vec<Constraint>,
}

impl SemanticAnnotation {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.labels.is_empty() {
            return Err(CoreError::AnnotationEmpty);
        }
        Ok(())
    }
}

/// Particle swarm settings for core sampling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerConfig {
    pub particles: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub seed: u64,
    /// How many top particles are retained as alternate solutions.
    pub alternates: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            particles: 64,
            iterations: 200,
            inertia: 0.7,
            cognitive: 1.5,
            social: 1.5,
            seed: 0,
            alternates: 8,
        }
    }
}

/// Executable grounding of a behavior model for one robot.
#[derive(Clone, Debug, PartialEq)]
pub struct CognitiveCore {
    pub robot: String,
    pub behavior: BehaviorModel,
    pub annotation: SemanticAnnotation,
    /// Pre-linked clusters per min/max-constrained feature space.
    pub linked: BTreeMap<String, Vec<usize>>,
    pub sampler: SamplerConfig,
}

/// The constraint checking function: 1 iff the cluster satisfies the
/// constraint (min/max against the centroid, variable against the
/// nearest-centroid selection for the target).
pub fn cc(
    store: &ClusterStore,
    space_id: &str,
    cluster_idx: usize,
    constraint: &Constraint,
    target: Option<&[f64]>,
) -> Result<bool, CoreError> {
    if constraint.space_id != space_id {
        return Err(CoreError::SpaceMismatch {
            expected: constraint.space_id.clone(),
            found: space_id.to_string(),
        });
    }
    let space = store.space(space_id)?;
    let centroid = &space.clusters[cluster_idx].centroid;
    match constraint.kind {
        ConstraintKind::MinMax { lo, hi } => Ok(centroid.iter().all(|&v| lo < v && v < hi)),
        ConstraintKind::Variable => {
            let target = target.ok_or_else(|| CoreError::MissingTarget { space: space_id.to_string() })?;
            Ok(nearest_centroid(store, space_id, target)? == cluster_idx)
        }
    }
}

/// Index of the cluster whose centroid is closest to `target` under the
/// space's metric; ties break toward the lowest cluster index.
pub fn nearest_centroid(store: &ClusterStore, space_id: &str, target: &[f64]) -> Result<usize, CoreError> {
    let space = store.space(space_id)?;
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in space.clusters.iter().enumerate() {
        let d = space.space.distance(&c.centroid, target);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    Ok(best)
}

/// Ground a behavior model for a robot: link every cluster passing its
/// min/max checks; variable constraints resolve at execution time. The
/// core inherits the model's label and constraints as its annotation.
pub fn create_core(
    robot: &str,
    behavior: &BehaviorModel,
    store: &ClusterStore,
    sampler: SamplerConfig,
) -> Result<CognitiveCore, CoreError> {
    behavior.validate()?;
    let mut linked = BTreeMap::new();
    for constraint in &behavior.constraints {
        let space = store.space(&constraint.space_id)?;
        if let ConstraintKind::MinMax { .. } = constraint.kind {
            let mut passing = Vec::new();
            for j in 0..space.clusters.len() {
                if cc(store, &constraint.space_id, j, constraint, None)? {
                    passing.push(j);
                }
            }
            if passing.is_empty() {
                return Err(CoreError::UnsatisfiableConstraint { space: constraint.space_id.clone() });
            }
            linked.insert(constraint.space_id.clone(), passing);
        }
    }
    let annotation = SemanticAnnotation {
        labels: BTreeSet::from([behavior.label.clone()]),
        constraints: behavior.constraints.clone(),
    };
    Ok(CognitiveCore { robot: robot.to_string(), behavior: behavior.clone(), annotation, linked, sampler })
}

/// Per-constraint outcome of a sampled capability.
#[derive(Clone, Debug)]
pub struct ConstraintOutcome {
    pub space_id: String,
    /// Feature value of the sampled capability in this space.
    pub feature: Vec<f64>,
    /// Distance to the target, for variable constraints.
    pub target_distance: Option<f64>,
    pub satisfied: bool,
}

/// Result of sampling a cognitive core.
#[derive(Clone, Debug)]
pub struct SampleOutcome {
    pub theta_max: Vec<f64>,
    pub capability: Capability,
    pub outcomes: Vec<ConstraintOutcome>,
    /// Sub-optimal swarm solutions, best first.
    pub alternates: Vec<(Vec<f64>, f64)>,
    pub joint_log_density: f64,
    pub rejection_threshold: f64,
}

/// Resolve the core's relevant clusters for the given targets:
/// pre-linked min/max clusters plus the nearest cluster per variable
/// constraint.
pub fn resolve_models(
    core: &CognitiveCore,
    targets: &BTreeMap<String, Vec<f64>>,
    store: &ClusterStore,
) -> Result<Vec<(String, usize, f64)>, CoreError> {
    let mut relevant = Vec::new();
    for constraint in &core.behavior.constraints {
        match constraint.kind {
            ConstraintKind::MinMax { .. } => {
                for &j in core.linked.get(&constraint.space_id).into_iter().flatten() {
                    relevant.push((constraint.space_id.clone(), j, constraint.weight));
                }
            }
            ConstraintKind::Variable => {
                let target = targets
                    .get(&constraint.space_id)
                    .ok_or_else(|| CoreError::MissingTarget { space: constraint.space_id.clone() })?;
                let j = nearest_centroid(store, &constraint.space_id, target)?;
                relevant.push((constraint.space_id.clone(), j, constraint.weight));
            }
        }
    }
    Ok(relevant)
}

/// Execute a cognitive core: maximize the joint log density of all
/// relevant cluster models by particle swarm, reject the result if it
/// falls below the density boundary, then simulate the winner.
pub fn sample_core(
    core: &CognitiveCore,
    targets: &BTreeMap<String, Vec<f64>>,
    store: &ClusterStore,
    spec: &RobotSpec,
) -> Result<SampleOutcome, CoreError> {
    let relevant = resolve_models(core, targets, store)?;
    let models: Vec<(&crate::cluster::GaussianMixture, f64)> = relevant
        .iter()
        .map(|(space_id, j, w)| {
            let space = store.space(space_id).expect("resolved space");
            (&space.clusters[*j].model, *w)
        })
        .collect();
    let rejection_threshold: f64 = relevant
        .iter()
        .map(|(space_id, j, w)| {
            let space = store.space(space_id).expect("resolved space");
            space.clusters[*j].threshold_logp * w
        })
        .sum();

    let dim = store.space_params.dimension();
    let bounds: Vec<(f64, f64)> = (0..dim).map(|i| store.space_params.bounds(i)).collect();
    let objective = |theta: &[f64]| -> f64 {
        models.iter().map(|(m, w)| w * m.log_density(theta)).sum()
    };
    let swarm = maximize(objective, &bounds, &core.sampler);
    if swarm.best_value < rejection_threshold {
        return Err(CoreError::NoFeasibleSample { best: swarm.best_value, threshold: rejection_threshold });
    }

    let capability = simulate_theta(&store.space_params, &swarm.best, spec, &store.sim)?;
    let outcomes = constraint_outcomes(core, targets, store, &capability)?;
    Ok(SampleOutcome {
        theta_max: swarm.best,
        capability,
        outcomes,
        alternates: swarm.alternates,
        joint_log_density: swarm.best_value,
        rejection_threshold,
    })
}

fn constraint_outcomes(
    core: &CognitiveCore,
    targets: &BTreeMap<String, Vec<f64>>,
    store: &ClusterStore,
    capability: &Capability,
) -> Result<Vec<ConstraintOutcome>, CoreError> {
    let mut outcomes = Vec::new();
    for constraint in &core.behavior.constraints {
        let space = store.space(&constraint.space_id)?;
        let feature = space.space.apply(capability);
        let outcome = match constraint.kind {
            ConstraintKind::MinMax { lo, hi } => ConstraintOutcome {
                space_id: constraint.space_id.clone(),
                satisfied: feature.iter().all(|&v| lo < v && v < hi),
                target_distance: None,
                feature,
            },
            ConstraintKind::Variable => {
                let target = targets
                    .get(&constraint.space_id)
                    .ok_or_else(|| CoreError::MissingTarget { space: constraint.space_id.clone() })?;
                let resolved = nearest_centroid(store, &constraint.space_id, target)?;
                let assigned = space.nearest_center(&feature);
                ConstraintOutcome {
                    space_id: constraint.space_id.clone(),
                    satisfied: assigned == resolved,
                    target_distance: Some(space.space.distance(&feature, target)),
                    feature,
                }
            }
        };
        outcomes.push(outcome);
    }
    Ok(outcomes)
}

/// Review a core's annotation: append labels (checked against the
/// ontology in strict mode) and apply explicit removals. Labels are
/// never silently dropped, and the result must stay non-empty.
pub fn annotate_core(
    core: &CognitiveCore,
    add: &[String],
    remove: &[String],
    ontology: Option<&Ontology>,
    strict: bool,
) -> Result<CognitiveCore, CoreError> {
    let mut labels = core.annotation.labels.clone();
    for label in remove {
        labels.remove(label);
    }
    for label in add {
        if strict {
            let known = ontology.map(|o| o.contains(label)).unwrap_or(false);
            if !known {
                return Err(CoreError::UnknownOntologyLabel { label: label.clone() });
            }
        }
        labels.insert(label.clone());
    }
    if labels.is_empty() {
        return Err(CoreError::AnnotationEmpty);
    }
    let mut out = core.clone();
    out.annotation.labels = labels;
    Ok(out)
}

/// One core together with everything needed to sample it.
pub struct ParallelCore<'a> {
    pub core: &'a CognitiveCore,
    pub store: &'a ClusterStore,
    pub spec: &'a RobotSpec,
    pub targets: BTreeMap<String, Vec<f64>>,
}

/// Sample every subsystem core independently and execute the merged
/// command stream once on the combined system. Subsystems must drive
/// disjoint joints; commands merge by joint name.
pub fn execute_parallel(
    items: &[ParallelCore<'_>],
    combined: &RobotSpec,
    sim: &SimConfig,
) -> Result<(Capability, Vec<SampleOutcome>), CoreError> {
    // joint-name disjoint union across subsystems
    let mut owner: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (item_idx, item) in items.iter().enumerate() {
        for (j, joint) in item.spec.joints.iter().enumerate() {
            if owner.insert(joint.name.as_str(), (item_idx, j)).is_some() {
                return Err(CoreError::OverlappingActuators { joint: joint.name.clone() });
            }
        }
    }

    let mut outcomes = Vec::with_capacity(items.len());
    let mut trajectories: Vec<PolynomialTrajectory> = Vec::with_capacity(items.len());
    for item in items {
        let outcome = sample_core(item.core, &item.targets, item.store, item.spec)?;
        let trajectory = crate::cfm::make_capability_function(
            &item.store.space_params,
            &outcome.theta_max,
            item.spec,
            item.store.sim.horizon,
        )?;
        trajectories.push(trajectory);
        outcomes.push(outcome);
    }

    // initial positions from each subsystem's own start state
    let mut q0 = vec![0.0; combined.joint_count()];
    for (j, joint) in combined.joints.iter().enumerate() {
        if let Some(&(item_idx, sub_j)) = owner.get(joint.name.as_str()) {
            let initial = trajectories[item_idx].initial_state(items[item_idx].spec);
            q0[j] = initial.q[sub_j];
        }
    }
    let initial = WorldState::from_positions(combined, q0.clone());
    let hold = q0;
    let combined_joints: Vec<Option<(usize, usize)>> = combined
        .joints
        .iter()
        .map(|joint| owner.get(joint.name.as_str()).copied())
        .collect();
    let cf = move |_state: &WorldState, t: f64| -> Action {
        let per_item: Vec<Vec<f64>> = trajectories.iter().map(|tr| tr.commands(t)).collect();
        let commands = combined_joints
            .iter()
            .enumerate()
            .map(|(j, slot)| match slot {
                Some((item_idx, sub_j)) => per_item[*item_idx][*sub_j],
                None => hold[j],
            })
            .collect();
        Action::kinematic(commands, 0.0)
    };
    let capability = execute(combined, sim, &cf, initial)?;
    Ok((capability, outcomes))
}

/// Derive a fresh sampler seed stream for repeated sampling.
pub fn reseeded(core: &CognitiveCore, stream: u64) -> CognitiveCore {
    let mut out = core.clone();
    out.sampler.seed = seeding::derive(core.sampler.seed, stream);
    out
}

#[cfg(test)]
mod tests;
