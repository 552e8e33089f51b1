use super::*;
use crate::cfm::{JointParams, ParameterSpace};
use crate::cluster::{build_clusters, Cluster, ClusterConfig, ClusterStore, ClusteredSpace, FeatureSpace, GaussianMixture};
use crate::explore::{explore, ExplorationConfig};
use crate::fixtures;
use crate::graph::PropertyGraph;
use crate::sim::robot_from_assembly;
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;

fn arm() -> RobotSpec {
    let mut g = PropertyGraph::new();
    let cat = fixtures::install_catalogue(&mut g).unwrap();
    let id = fixtures::arm_assembly(&mut g, &cat, "arm").unwrap();
    robot_from_assembly(&g, &id).unwrap()
}

fn cart() -> RobotSpec {
    let mut g = PropertyGraph::new();
    let cat = fixtures::install_catalogue(&mut g).unwrap();
    let id = fixtures::cart_assembly(&mut g, &cat, "cart").unwrap();
    robot_from_assembly(&g, &id).unwrap()
}

fn combo() -> RobotSpec {
    let mut g = PropertyGraph::new();
    let cat = fixtures::install_catalogue(&mut g).unwrap();
    let id = fixtures::combo_assembly(&mut g, &cat, "combo").unwrap();
    robot_from_assembly(&g, &id).unwrap()
}

fn explored_store_with(
    spec: &RobotSpec,
    samples: usize,
    seed: u64,
    sim: SimConfig,
    ks: (usize, usize, usize),
) -> ClusterStore {
    let config = ExplorationConfig::new(spec, samples, seed, sim);
    let set = explore(spec, &config).unwrap();
    let cc = ClusterConfig {
        spaces: vec![
            (FeatureSpace::start(), ks.0),
            (FeatureSpace::end(), ks.1),
            (FeatureSpace::directness(), ks.2),
        ],
        components: 2,
        seed: seed + 1,
    };
    build_clusters(&set, spec, &cc).unwrap()
}

fn explored_store(spec: &RobotSpec, samples: usize, seed: u64, sim: SimConfig) -> ClusterStore {
    explored_store_with(spec, samples, seed, sim, (4, 4, 2))
}

/// A single-component unit-variance Gaussian as a cluster model.
fn unit_gaussian(dim: usize, mean: &[f64]) -> GaussianMixture {
    GaussianMixture::from_parameters(
        vec![1.0],
        vec![DVector::from_column_slice(mean)],
        vec![DMatrix::identity(dim, dim)],
        vec![],
    )
    .unwrap()
}

/// A hand-built store with one scalar feature space whose clusters have
/// prescribed centroids.
fn synthetic_dir_store(centroids: &[f64]) -> ClusterStore {
    let clusters: Vec<Cluster> = centroids
        .iter()
        .enumerate()
        .map(|(j, &c)| Cluster {
            label: format!("dir-{:02}", j),
            space_id: "dir".into(),
            members: vec![j],
            center: vec![c],
            centroid: vec![c],
            threshold_logp: -1e12,
            model: unit_gaussian(2, &[c, 0.0]),
        })
        .collect();
    ClusterStore {
        robot: "synthetic".into(),
        space_params: ParameterSpace { joints: vec![JointParams { count: 2, lo: -4.0, hi: 4.0 }] },
        sim: SimConfig { dt: 0.02, horizon: 0.1 },
        spaces: vec![ClusteredSpace {
            space: FeatureSpace::directness(),
            k: centroids.len(),
            seed: 0,
            assignments: centroids.iter().enumerate().map(|(j, _)| (j, j)).collect(),
            clusters,
        }],
    }
}

#[test]
fn cc_minmax_examples() {
    let store = synthetic_dir_store(&[0.9, 0.5]);
    let constraint = Constraint::min_max("dir", 0.8, 1.0);
    assert!(cc(&store, "dir", 0, &constraint, None).unwrap(), "0.9 passes (0.8, 1.0)");
    assert!(!cc(&store, "dir", 1, &constraint, None).unwrap(), "0.5 fails");
}

#[test]
fn cc_variable_examples() {
    let store = synthetic_dir_store(&[0.9]);
    let constraint = Constraint::variable("dir");
    // a lone cluster is always the argmin
    assert!(cc(&store, "dir", 0, &constraint, Some(&[0.1])).unwrap());
    assert!(matches!(
        cc(&store, "dir", 0, &constraint, None),
        Err(CoreError::MissingTarget { .. })
    ));

    let store = synthetic_dir_store(&[0.2, 0.6, 0.95]);
    assert!(cc(&store, "dir", 2, &constraint, Some(&[1.0])).unwrap());
    assert!(!cc(&store, "dir", 0, &constraint, Some(&[1.0])).unwrap());
    // ties break toward the lowest cluster index
    let tied = synthetic_dir_store(&[0.4, 0.8]);
    assert!(cc(&tied, "dir", 0, &Constraint::variable("dir"), Some(&[0.6])).unwrap());
    assert!(!cc(&tied, "dir", 1, &Constraint::variable("dir"), Some(&[0.6])).unwrap());
}

#[test]
fn cc_rejects_space_mismatch() {
    let store = synthetic_dir_store(&[0.9]);
    let constraint = Constraint::min_max("start", 0.0, 1.0);
    assert!(matches!(
        cc(&store, "dir", 0, &constraint, None),
        Err(CoreError::SpaceMismatch { .. })
    ));
}

#[test]
fn create_core_links_exactly_the_passing_clusters() {
    let store = synthetic_dir_store(&[0.9, 0.5, 0.85]);
    let bm = BehaviorModel { label: "reach".into(), constraints: vec![Constraint::min_max("dir", 0.8, 1.0)] };
    let core = create_core("synthetic", &bm, &store, SamplerConfig::default()).unwrap();
    assert_eq!(core.linked["dir"], vec![0, 2]);
    assert!(core.annotation.labels.contains("reach"));
    assert_eq!(core.annotation.constraints, bm.constraints);

    // exhaustive centroid-scan oracle: no centroid inside (0.999, 1.0)
    let narrow = BehaviorModel { label: "reach".into(), constraints: vec![Constraint::min_max("dir", 0.999, 1.0)] };
    let scan: Vec<&f64> = store.spaces[0]
        .clusters
        .iter()
        .map(|c| &c.centroid[0])
        .filter(|&&v| 0.999 < v && v < 1.0)
        .collect();
    assert!(scan.is_empty());
    assert!(matches!(
        create_core("synthetic", &narrow, &store, SamplerConfig::default()),
        Err(CoreError::UnsatisfiableConstraint { .. })
    ));
}

#[test]
fn variable_only_model_links_nothing() {
    let store = synthetic_dir_store(&[0.9, 0.5]);
    let bm = BehaviorModel { label: "free".into(), constraints: vec![Constraint::variable("dir")] };
    let core = create_core("synthetic", &bm, &store, SamplerConfig::default()).unwrap();
    assert!(core.linked.is_empty());
}

#[test]
fn behavior_model_validation() {
    let twice = BehaviorModel {
        label: "x".into(),
        constraints: vec![Constraint::variable("dir"), Constraint::min_max("dir", 0.0, 1.0)],
    };
    assert!(matches!(twice.validate(), Err(CoreError::BadModel(_))));
    let empty_range = BehaviorModel { label: "x".into(), constraints: vec![Constraint::min_max("dir", 1.0, 1.0)] };
    assert!(matches!(empty_range.validate(), Err(CoreError::BadModel(_))));
    assert!(BehaviorModel::reach().validate().is_ok());
    assert!(BehaviorModel::reach_unconstrained().validate().is_ok());
}

#[test]
fn pso_product_of_two_gaussians_matches_precision_weighted_mean() {
    use rand::Rng;
    let mut rng = crate::seeding::rng(31, 0);
    for instance in 0..10 {
        let mu1: f64 = rng.gen_range(-1.5..1.5);
        let mu2: f64 = rng.gen_range(-1.5..1.5);
        let s1: f64 = rng.gen_range(0.3..1.2);
        let s2: f64 = rng.gen_range(0.3..1.2);
        let g1 = GaussianMixture::from_parameters(
            vec![1.0],
            vec![DVector::from_column_slice(&[mu1])],
            vec![DMatrix::from_element(1, 1, s1 * s1)],
            vec![],
        )
        .unwrap();
        let g2 = GaussianMixture::from_parameters(
            vec![1.0],
            vec![DVector::from_column_slice(&[mu2])],
            vec![DMatrix::from_element(1, 1, s2 * s2)],
            vec![],
        )
        .unwrap();
        let objective = |x: &[f64]| g1.log_density(x) + g2.log_density(x);
        let sampler = SamplerConfig { seed: 1000 + instance, ..SamplerConfig::default() };
        let result = maximize(objective, &[(-4.0, 4.0)], &sampler);
        // closed-form oracle: precision-weighted mean
        let w1 = 1.0 / (s1 * s1);
        let w2 = 1.0 / (s2 * s2);
        let expected = (w1 * mu1 + w2 * mu2) / (w1 + w2);
        let rel = (result.best[0] - expected).abs() / expected.abs().max(1e-3);
        assert!(rel < 1e-3, "instance {}: {} vs {}", instance, result.best[0], expected);
    }
}

#[test]
fn single_isotropic_gaussian_argmax_is_its_mean() {
    let g = unit_gaussian(2, &[0.7, -0.3]);
    let objective = |x: &[f64]| g.log_density(x);
    let sampler = SamplerConfig { seed: 5, ..SamplerConfig::default() };
    let result = maximize(objective, &[(-4.0, 4.0), (-4.0, 4.0)], &sampler);
    assert!((result.best[0] - 0.7).abs() < 1e-3);
    assert!((result.best[1] + 0.3).abs() < 1e-3);
}

#[test]
fn sample_core_on_explored_arm() {
    let spec = arm();
    let store = explored_store(&spec, 400, 51, SimConfig::default());
    let core = create_core("arm", &BehaviorModel::reach_unconstrained(), &store, SamplerConfig::default()).unwrap();
    let targets =
        BTreeMap::from([("start".to_string(), vec![0.0, 0.0, 0.0]), ("end".to_string(), vec![0.2, 0.2, 0.1])]);
    let outcome = sample_core(&core, &targets, &store, &spec).unwrap();
    assert_eq!(outcome.theta_max.len(), store.space_params.dimension());
    store.space_params.check(&outcome.theta_max).unwrap();
    assert_eq!(outcome.outcomes.len(), 2);
    assert!(outcome.joint_log_density >= outcome.rejection_threshold);
    assert_eq!(outcome.alternates.len(), core.sampler.alternates);
    assert_eq!(outcome.capability.source.as_deref(), Some(outcome.theta_max.as_slice()));

    // deterministic for one seed, distinct across seeds
    let again = sample_core(&core, &targets, &store, &spec).unwrap();
    assert_eq!(again.theta_max, outcome.theta_max);
    let other = sample_core(&reseeded(&core, 1), &targets, &store, &spec).unwrap();
    assert_ne!(other.theta_max, outcome.theta_max, "sampling is stochastic across seeds");
}

#[test]
fn sample_core_missing_target_is_reported() {
    let spec = arm();
    let store = explored_store(&spec, 300, 52, SimConfig::default());
    let core = create_core("arm", &BehaviorModel::reach_unconstrained(), &store, SamplerConfig::default()).unwrap();
    let targets = BTreeMap::from([("start".to_string(), vec![0.0, 0.0, 0.0])]);
    assert!(matches!(
        sample_core(&core, &targets, &store, &spec),
        Err(CoreError::MissingTarget { space }) if space == "end"
    ));
}

#[test]
fn sample_core_rejects_below_probability_boundary() {
    let spec = arm();
    let mut store = explored_store(&spec, 300, 53, SimConfig::default());
    for space in &mut store.spaces {
        for c in &mut space.clusters {
            c.threshold_logp = f64::INFINITY;
        }
    }
    let core = create_core("arm", &BehaviorModel::reach_unconstrained(), &store, SamplerConfig::default()).unwrap();
    let targets =
        BTreeMap::from([("start".to_string(), vec![0.0, 0.0, 0.0]), ("end".to_string(), vec![0.2, 0.2, 0.1])]);
    assert!(matches!(
        sample_core(&core, &targets, &store, &spec),
        Err(CoreError::NoFeasibleSample { .. })
    ));
}

#[test]
fn equal_weight_scaling_leaves_argmax_unchanged() {
    let spec = arm();
    let store = explored_store(&spec, 300, 54, SimConfig::default());
    let targets =
        BTreeMap::from([("start".to_string(), vec![0.0, 0.0, 0.0]), ("end".to_string(), vec![0.2, 0.2, 0.1])]);
    let core = create_core("arm", &BehaviorModel::reach_unconstrained(), &store, SamplerConfig::default()).unwrap();
    let mut doubled_bm = BehaviorModel::reach_unconstrained();
    for c in &mut doubled_bm.constraints {
        c.weight = 2.0;
    }
    let doubled = create_core("arm", &doubled_bm, &store, SamplerConfig::default()).unwrap();
    let a = sample_core(&core, &targets, &store, &spec).unwrap();
    let b = sample_core(&doubled, &targets, &store, &spec).unwrap();
    assert_eq!(a.theta_max, b.theta_max, "uniform positive weights define the same optimum");
}

#[test]
fn annotate_core_examples() {
    let store = synthetic_dir_store(&[0.9]);
    let bm = BehaviorModel { label: "reach".into(), constraints: vec![Constraint::min_max("dir", 0.8, 1.0)] };
    let core = create_core("synthetic", &bm, &store, SamplerConfig::default()).unwrap();

    // approving the inherited label changes nothing
    let approved = annotate_core(&core, &[], &[], None, false).unwrap();
    assert_eq!(approved.annotation, core.annotation);

    let extended = annotate_core(&core, &["reach-planar".to_string()], &[], None, false).unwrap();
    assert_eq!(extended.annotation.labels.len(), 2);
    // the original label is still there
    assert!(extended.annotation.labels.contains("reach"));

    let emptied = annotate_core(&core, &[], &["reach".to_string()], None, false);
    assert!(matches!(emptied, Err(CoreError::AnnotationEmpty)));

    let ontology = crate::reason::Ontology::standard();
    let strict = annotate_core(&core, &["made-up".to_string()], &[], Some(&ontology), true);
    assert!(matches!(strict, Err(CoreError::UnknownOntologyLabel { .. })));
    let ok = annotate_core(&core, &["navigate".to_string()], &[], Some(&ontology), true).unwrap();
    assert!(ok.annotation.labels.contains("navigate"));
}

#[test]
fn execute_parallel_merges_disjoint_subsystems() {
    let arm_spec = arm();
    let cart_spec = cart();
    let combo_spec = combo();
    let arm_store = explored_store(&arm_spec, 300, 61, SimConfig::default());
    // every cart capability starts in the same state, so its start
    // space collapses to a single cluster
    let cart_store =
        explored_store_with(&cart_spec, 300, 62, SimConfig { dt: 0.02, horizon: 5.0 }, (1, 4, 2));
    let arm_core =
        create_core("arm", &BehaviorModel::reach_unconstrained(), &arm_store, SamplerConfig::default()).unwrap();
    let cart_core =
        create_core("cart", &BehaviorModel::reach_unconstrained(), &cart_store, SamplerConfig { seed: 9, ..SamplerConfig::default() })
            .unwrap();
    let items = [
        ParallelCore {
            core: &arm_core,
            store: &arm_store,
            spec: &arm_spec,
            targets: BTreeMap::from([
                ("start".to_string(), vec![0.0, 0.0, 0.0]),
                ("end".to_string(), vec![0.2, 0.2, 0.1]),
            ]),
        },
        ParallelCore {
            core: &cart_core,
            store: &cart_store,
            spec: &cart_spec,
            targets: BTreeMap::from([
                ("start".to_string(), vec![0.0; 7]),
                ("end".to_string(), vec![0.5, 0.5, 0.0]),
            ]),
        },
    ];
    let sim = SimConfig { dt: 0.02, horizon: 5.0 };
    let (merged, outcomes) = execute_parallel(&items, &combo_spec, &sim).unwrap();
    assert_eq!(outcomes.len(), 2);
    assert_eq!(merged.n_joints, 7);
    assert_eq!(merged.len(), 251);

    // superposition oracle: rerun the arm trajectory alone over the
    // same horizon; the merged effector path is exactly the base-pose
    // composition of the arm-only path
    let arm_traj = crate::cfm::make_capability_function(
        &arm_store.space_params,
        &outcomes[0].theta_max,
        &arm_spec,
        arm_store.sim.horizon,
    )
    .unwrap();
    let initial = arm_traj.initial_state(&arm_spec);
    let arm_only = crate::sim::execute(&arm_spec, &sim, &arm_traj, initial).unwrap();
    let bases = merged.base_poses.as_ref().unwrap();
    for k in 0..merged.len() {
        let pose = crate::sim::BasePose { x: bases[k][0], y: bases[k][1], theta: bases[k][2] };
        let composed = pose.apply(arm_only.end_effector[k]);
        assert_eq!(composed, merged.end_effector[k], "step {}", k);
    }
}

#[test]
fn execute_parallel_single_core_equals_sample_core() {
    let spec = arm();
    let store = explored_store(&spec, 300, 63, SimConfig::default());
    let core = create_core("arm", &BehaviorModel::reach_unconstrained(), &store, SamplerConfig::default()).unwrap();
    let targets =
        BTreeMap::from([("start".to_string(), vec![0.0, 0.0, 0.0]), ("end".to_string(), vec![0.2, 0.2, 0.1])]);
    let items = [ParallelCore { core: &core, store: &store, spec: &spec, targets: targets.clone() }];
    let (merged, _) = execute_parallel(&items, &spec, &SimConfig::default()).unwrap();
    let direct = sample_core(&core, &targets, &store, &spec).unwrap();
    assert_eq!(merged.joint_positions, direct.capability.joint_positions);
    assert_eq!(merged.end_effector, direct.capability.end_effector);
}

#[test]
fn execute_parallel_rejects_overlapping_actuators() {
    let spec = arm();
    let store = explored_store(&spec, 300, 64, SimConfig::default());
    let core = create_core("arm", &BehaviorModel::reach_unconstrained(), &store, SamplerConfig::default()).unwrap();
    let targets =
        BTreeMap::from([("start".to_string(), vec![0.0, 0.0, 0.0]), ("end".to_string(), vec![0.2, 0.2, 0.1])]);
    let items = [
        ParallelCore { core: &core, store: &store, spec: &spec, targets: targets.clone() },
        ParallelCore { core: &core, store: &store, spec: &spec, targets },
    ];
    assert!(matches!(
        execute_parallel(&items, &spec, &SimConfig::default()),
        Err(CoreError::OverlappingActuators { .. })
    ));
}

#[test]
fn core_document_roundtrip() {
    let store = synthetic_dir_store(&[0.9, 0.85]);
    let bm = BehaviorModel::reach();
    // reach needs all three spaces; restrict to the dir constraint here
    let bm = BehaviorModel { label: bm.label, constraints: vec![bm.constraints[0].clone()] };
    let core = create_core("synthetic", &bm, &store, SamplerConfig { seed: 3, ..SamplerConfig::default() }).unwrap();
    let doc = core.to_document();
    let loaded = CognitiveCore::from_document(&doc).unwrap();
    assert_eq!(loaded, core);
}

#[test]
fn behaviors_document_roundtrip() {
    let models = vec![BehaviorModel::reach(), BehaviorModel::reach_unconstrained()];
    let doc = render_behaviors(&models);
    let loaded = parse_behaviors(&doc).unwrap();
    assert_eq!(loaded, models);
}
