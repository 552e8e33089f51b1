//! Feature functions, feature spaces, clustering and per-cluster
//! generative densities over parameter space.
//!
//! Feasible capabilities are mapped into semantically labelled feature
//! spaces, partitioned by k-means, and every cell gets a Gaussian
//! mixture fitted to the parameter vectors of its members. A cluster
//! carries two feature-space anchors: its k-means `center` (mean of
//! member features, used for nearest-cell assignment) and its
//! `centroid` (the feature of the capability simulated from the
//! density argmax, used for constraint checks).

mod gmm;
mod kmeans;
mod store;

pub use gmm::{fit_gmm, GaussianMixture, COVARIANCE_FLOOR};
pub use kmeans::{euclidean, kmeans, squared_distance, KMeansResult};
pub use store::CLUSTER_FORMAT;

use rayon::prelude::*;
use thiserror::Error;

use crate::cfm::{simulate_theta, CfmError, ParameterSpace};
use crate::explore::CapabilitySet;
use crate::seeding;
use crate::sim::{Capability, RobotSpec, SimConfig, SimError};

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("k = {k} exceeds the number of distinct points ({distinct})")]
    KTooLarge { k: usize, distinct: usize },
    #[error("degenerate data: {reason}")]
    DegenerateData { reason: String },
    #[error("unknown feature space {0:?}")]
    UnknownSpace(String),
    #[error("no feasible capabilities to cluster")]
    NoFeasibleCapabilities,
    #[error("i/o failure: {0}")]
    Io(String),
    #[error("malformed store: {0}")]
    Parse(String),
    #[error(transparent)]
    Cfm(#[from] CfmError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// The manually defined feature functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureKind {
    /// Start state: joint positions at t=0 plus base pose when present.
    Start,
    /// End-effector position at the final time step.
    EndEffectorEnd,
    /// Chord length over arc length of the end-effector path, in (0, 1].
    Directness,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Start => "Start",
            FeatureKind::EndEffectorEnd => "EndEffectorEnd",
            FeatureKind::Directness => "Directness",
        }
    }

    pub fn parse(s: &str) -> Option<FeatureKind> {
        Some(match s {
            "Start" => FeatureKind::Start,
            "EndEffectorEnd" => FeatureKind::EndEffectorEnd,
            "Directness" => FeatureKind::Directness,
            _ => return None,
        })
    }
}

/// A semantically labelled metric space over capabilities; Euclidean
/// metric throughout.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSpace {
    pub id: String,
    pub label: String,
    pub kind: FeatureKind,
}

impl FeatureSpace {
    pub fn start() -> FeatureSpace {
        FeatureSpace { id: "start".into(), label: "start state".into(), kind: FeatureKind::Start }
    }

    pub fn end() -> FeatureSpace {
        FeatureSpace {
            id: "end".into(),
            label: "end effector end state".into(),
            kind: FeatureKind::EndEffectorEnd,
        }
    }

    pub fn directness() -> FeatureSpace {
        FeatureSpace {
            id: "dir".into(),
            label: "end effector directness".into(),
            kind: FeatureKind::Directness,
        }
    }

    /// The three standard spaces.
    pub fn standard() -> Vec<FeatureSpace> {
        vec![FeatureSpace::start(), FeatureSpace::end(), FeatureSpace::directness()]
    }

    pub fn by_id(id: &str) -> Option<FeatureSpace> {
        FeatureSpace::standard().into_iter().find(|s| s.id == id)
    }

    /// Apply the feature function; total on non-empty capabilities.
    pub fn apply(&self, cap: &Capability) -> Vec<f64> {
        match self.kind {
            FeatureKind::Start => feature_start(cap),
            FeatureKind::EndEffectorEnd => feature_end(cap).to_vec(),
            FeatureKind::Directness => vec![feature_directness(cap)],
        }
    }

    /// The space's metric (Euclidean).
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        euclidean(a, b)
    }
}

/// Start state of a capability: joint positions, then base pose when
/// the robot has one.
pub fn feature_start(cap: &Capability) -> Vec<f64> {
    let mut f = cap.positions_at(0).to_vec();
    if let Some(bases) = &cap.base_poses {
        f.extend_from_slice(&bases[0]);
    }
    f
}

/// Final end-effector position.
pub fn feature_end(cap: &Capability) -> [f64; 3] {
    *cap.end_effector.last().expect("non-empty capability")
}

/// Chord length over arc length of the end-effector path. A path that
/// never moves is direct by convention (limit of shrinking direct
/// paths), keeping the codomain (0, 1].
pub fn feature_directness(cap: &Capability) -> f64 {
    let ee = &cap.end_effector;
    let chord = dist3(ee[0], ee[ee.len() - 1]);
    let mut arc = 0.0;
    for w in ee.windows(2) {
        arc += dist3(w[0], w[1]);
    }
    if arc < 1e-12 {
        return 1.0;
    }
    (chord / arc).min(1.0)
}

fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// A labelled cell of one feature space with its generative density.
#[derive(Clone, Debug)]
pub struct Cluster {
    pub label: String,
    pub space_id: String,
    /// Indices into the originating capability set.
    pub members: Vec<usize>,
    /// k-means center: mean feature of the members.
    pub center: Vec<f64>,
    /// Feature of the capability simulated from the density argmax.
    pub centroid: Vec<f64>,
    /// First percentile of member log densities; the rejection boundary
    /// contribution of this cluster.
    pub threshold_logp: f64,
    pub model: GaussianMixture,
}

/// One feature space after clustering.
#[derive(Clone, Debug)]
pub struct ClusteredSpace {
    pub space: FeatureSpace,
    pub k: usize,
    pub seed: u64,
    /// set index -> cluster index, for every feasible member.
    pub assignments: Vec<(usize, usize)>,
    pub clusters: Vec<Cluster>,
}

impl ClusteredSpace {
    /// Index of the cluster whose k-means center is nearest to `f`.
    pub fn nearest_center(&self, f: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, c) in self.clusters.iter().enumerate() {
            let d = squared_distance(f, &c.center);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        best
    }
}

/// All clustered feature spaces of one robot, plus what is needed to
/// simulate fresh draws: the parameter space and simulator step.
#[derive(Clone, Debug)]
pub struct ClusterStore {
    pub robot: String,
    pub space_params: ParameterSpace,
    pub sim: SimConfig,
    pub spaces: Vec<ClusteredSpace>,
}

impl ClusterStore {
    pub fn space(&self, id: &str) -> Result<&ClusteredSpace, ClusterError> {
        self.spaces.iter().find(|s| s.space.id == id).ok_or_else(|| ClusterError::UnknownSpace(id.to_string()))
    }
}

/// Configuration for [`build_clusters`].
#[derive(Clone, Debug)]
pub struct ClusterConfig {
    /// (feature space, k) pairs.
    pub spaces: Vec<(FeatureSpace, usize)>,
    /// Mixture components per cluster.
    pub components: usize,
    pub seed: u64,
}

impl ClusterConfig {
    /// The configuration exercised throughout: 50 cells in the start
    /// and end spaces, 5 in directness, 3 mixture components.
    pub fn standard(seed: u64) -> ClusterConfig {
        ClusterConfig {
            spaces: vec![
                (FeatureSpace::start(), 50),
                (FeatureSpace::end(), 50),
                (FeatureSpace::directness(), 5),
            ],
            components: 3,
            seed,
        }
    }
}

/// Cluster the feasible capabilities of a set in every configured
/// feature space and fit one generative model per cluster.
pub fn build_clusters(
    set: &CapabilitySet,
    spec: &RobotSpec,
    config: &ClusterConfig,
) -> Result<ClusterStore, ClusterError> {
    let feasible = set.feasible_indices();
    if feasible.is_empty() {
        return Err(ClusterError::NoFeasibleCapabilities);
    }
    let sim = SimConfig { dt: set.provenance.dt, horizon: set.provenance.horizon };
    let mut spaces = Vec::with_capacity(config.spaces.len());
    for (space_idx, (space, k)) in config.spaces.iter().enumerate() {
        let points: Vec<Vec<f64>> =
            feasible.iter().map(|&i| space.apply(&set.entries[i].capability)).collect();
        let space_seed = seeding::derive(config.seed, space_idx as u64);
        let km = kmeans(&points, *k, space_seed)?;

        let clusters: Result<Vec<Cluster>, ClusterError> = (0..*k)
            .into_par_iter()
            .map(|j| {
                let members: Vec<usize> = feasible
                    .iter()
                    .enumerate()
                    .filter(|(p, _)| km.assignments[*p] == j)
                    .map(|(_, &i)| i)
                    .collect();
                let rows: Vec<Vec<f64>> = members.iter().map(|&i| set.entries[i].theta.clone()).collect();
                let components = config.components.min(rows.len());
                if components == 0 {
                    return Err(ClusterError::DegenerateData {
                        reason: format!("cluster {}-{} has no members", space.id, j),
                    });
                }
                let model = fit_gmm(&rows, components, seeding::derive(space_seed, j as u64 + 1))?;
                let threshold_logp = model.percentile_log_density(&rows, 1.0);
                let mut theta_max = model.argmax();
                set.space.clamp(&mut theta_max);
                let cap = simulate_theta(&set.space, &theta_max, spec, &sim)?;
                let centroid = space.apply(&cap);
                Ok(Cluster {
                    label: format!("{}-{:02}", space.id, j),
                    space_id: space.id.clone(),
                    members,
                    center: km.centers[j].clone(),
                    centroid,
                    threshold_logp,
                    model,
                })
            })
            .collect();

        spaces.push(ClusteredSpace {
            space: space.clone(),
            k: *k,
            seed: space_seed,
            assignments: feasible.iter().enumerate().map(|(p, &i)| (i, km.assignments[p])).collect(),
            clusters: clusters?,
        });
    }
    Ok(ClusterStore { robot: set.provenance.robot.clone(), space_params: set.space.clone(), sim, spaces })
}

/// Recompute a cluster's centroid on demand: simulate the density
/// argmax and apply the feature function.
pub fn recompute_centroid(
    store: &ClusterStore,
    space_id: &str,
    cluster_idx: usize,
    spec: &RobotSpec,
) -> Result<Vec<f64>, ClusterError> {
    let space = store.space(space_id)?;
    let cluster = &space.clusters[cluster_idx];
    let mut theta = cluster.model.argmax();
    store.space_params.clamp(&mut theta);
    let cap = simulate_theta(&store.space_params, &theta, spec, &store.sim)?;
    Ok(space.space.apply(&cap))
}

/// The measurement procedure for generative quality: draw `n`
/// parameters from the cluster's model, simulate them, and report the
/// fraction whose feature lands nearest to this cluster's k-means
/// center.
pub fn model_accuracy(
    store: &ClusterStore,
    space_id: &str,
    cluster_idx: usize,
    spec: &RobotSpec,
    n: usize,
    seed: u64,
) -> Result<f64, ClusterError> {
    let space = store.space(space_id)?;
    let cluster = &space.clusters[cluster_idx];
    let hits: Result<Vec<bool>, ClusterError> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeding::rng(seed, i);
            let mut theta = cluster.model.sample(&mut rng);
            store.space_params.clamp(&mut theta);
            let cap = simulate_theta(&store.space_params, &theta, spec, &store.sim)?;
            let f = space.space.apply(&cap);
            Ok(space.nearest_center(&f) == cluster_idx)
        })
        .collect();
    let hits = hits?;
    Ok(hits.iter().filter(|h| **h).count() as f64 / n as f64)
}

/// Member-weighted mean of per-cluster accuracies: the overall fraction
/// of draws assigned back to the cluster they were sampled from, when
/// each cluster is sampled in proportion to its size.
pub fn space_accuracy(
    store: &ClusterStore,
    space_id: &str,
    spec: &RobotSpec,
    draws_per_cluster: usize,
    seed: u64,
) -> Result<f64, ClusterError> {
    let space = store.space(space_id)?;
    let mut weighted = 0.0;
    let mut total = 0.0;
    for j in 0..space.clusters.len() {
        let acc = model_accuracy(store, space_id, j, spec, draws_per_cluster, seeding::derive(seed, j as u64))?;
        let w = space.clusters[j].members.len() as f64;
        weighted += acc * w;
        total += w;
    }
    Ok(weighted / total)
}

#[cfg(test)]
mod tests;
