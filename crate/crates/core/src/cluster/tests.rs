use super::*;
use crate::explore::{explore, ExplorationConfig};
use crate::fixtures;
use crate::graph::PropertyGraph;
use crate::sim::{robot_from_assembly, FeasibilityReport};
use proptest::prelude::*;

fn arm() -> RobotSpec {
    let mut g = PropertyGraph::new();
    let cat = fixtures::install_catalogue(&mut g).unwrap();
    let id = fixtures::arm_assembly(&mut g, &cat, "arm").unwrap();
    robot_from_assembly(&g, &id).unwrap()
}

fn small_store(samples: usize, seed: u64, ks: (usize, usize, usize)) -> (RobotSpec, crate::explore::CapabilitySet, ClusterStore) {
    let spec = arm();
    let config = ExplorationConfig::new(&spec, samples, seed, SimConfig::default());
    let set = explore(&spec, &config).unwrap();
    let cc = ClusterConfig {
        spaces: vec![
            (FeatureSpace::start(), ks.0),
            (FeatureSpace::end(), ks.1),
            (FeatureSpace::directness(), ks.2),
        ],
        components: 2,
        seed: seed + 1,
    };
    let store = build_clusters(&set, &spec, &cc).unwrap();
    (spec, set, store)
}

/// A synthetic capability holding only an end-effector path.
fn path_capability(ee: Vec<[f64; 3]>) -> Capability {
    let n = ee.len();
    Capability {
        n_joints: 0,
        dt: 0.02,
        times: (0..n).map(|k| k as f64 * 0.02).collect(),
        joint_positions: Vec::new(),
        joint_velocities: Vec::new(),
        end_effector: ee,
        base_poses: None,
        source: None,
        report: FeasibilityReport::default(),
    }
}

#[test]
fn feature_start_examples() {
    let spec = arm();
    let space = crate::cfm::ParameterSpace::for_robot(&spec);
    let theta = vec![0.0; space.dimension()];
    let cap = crate::cfm::simulate_theta(&space, &theta, &spec, &SimConfig::default()).unwrap();
    assert_eq!(feature_start(&cap), vec![0.0, 0.0, 0.0]);

    // constant-hold: the trajectory's start equals its end
    assert_eq!(cap.positions_at(0), cap.positions_at(cap.len() - 1));
    assert_eq!(cap.end_effector[0], *cap.end_effector.last().unwrap());

    // file-reader oracle: the start feature equals the first table row
    let mut rng = crate::seeding::rng(3, 0);
    use rand::Rng;
    let theta: Vec<f64> = (0..space.dimension()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let cap = crate::cfm::simulate_theta(&space, &theta, &spec, &SimConfig::default()).unwrap();
    let table = cap.to_table();
    let first_row: Vec<f64> = table
        .lines()
        .nth(1)
        .unwrap()
        .split('\t')
        .map(|c| c.parse().unwrap())
        .collect();
    let f = feature_start(&cap);
    assert_eq!(&first_row[1..4], f.as_slice());
}

#[test]
fn feature_end_examples() {
    // a one-joint arm of length L ending at q = 0 puts the effector at (L, 0, 0)
    let one = crate::sim::RobotSpec {
        name: "one".into(),
        joints: vec![crate::sim::Joint {
            name: "j".into(),
            axis: [0.0, 0.0, 1.0],
            limits: Some((-3.2, 3.2)),
            vel_limit: 10.0,
            wheel: false,
            side: None,
        }],
        links: vec![crate::sim::Link { name: "l".into(), length: 0.7, parent_joint: Some(0) }],
        base: None,
        end_effector: "l".into(),
    };
    let space = crate::cfm::ParameterSpace::for_robot(&one);
    let mut theta = vec![0.0; space.dimension()];
    theta[0] = 1.0; // start away, end at zero
    theta[1] = 0.0;
    let cap = crate::cfm::simulate_theta(&space, &theta, &one, &SimConfig::default()).unwrap();
    let f = feature_end(&cap);
    assert!((f[0] - 0.7).abs() < 1e-9 && f[1].abs() < 1e-9 && f[2].abs() < 1e-9, "{:?}", f);

    // file-reader oracle: the end feature equals the last table row
    let spec = arm();
    let space = crate::cfm::ParameterSpace::for_robot(&spec);
    use rand::Rng;
    let mut rng = crate::seeding::rng(4, 0);
    let theta: Vec<f64> = (0..space.dimension()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let cap = crate::cfm::simulate_theta(&space, &theta, &spec, &SimConfig::default()).unwrap();
    let table = cap.to_table();
    let last_row: Vec<f64> = table
        .lines()
        .last()
        .unwrap()
        .split('\t')
        .map(|c| c.parse().unwrap())
        .collect();
    let f = feature_end(&cap);
    assert_eq!(&last_row[7..10], &f);
}

#[test]
fn directness_examples() {
    // straight constant-speed path
    let straight = path_capability((0..=10).map(|k| [k as f64 * 0.1, 0.0, 0.0]).collect());
    assert_eq!(feature_directness(&straight), 1.0);

    // two-segment arithmetic oracle: out 1.0, back 0.5 => 0.5 / 1.5
    let back = path_capability(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 0.0, 0.0]]);
    assert!((feature_directness(&back) - 1.0 / 3.0).abs() < 1e-12);

    // zero motion is direct by convention
    let still = path_capability(vec![[0.2, 0.2, 0.2]; 5]);
    assert_eq!(feature_directness(&still), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn directness_never_exceeds_one(path in proptest::collection::vec(
        (-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0), 2..40))
    {
        let cap = path_capability(path.iter().map(|&(x, y, z)| [x, y, z]).collect());
        let d = feature_directness(&cap);
        prop_assert!(d > 0.0 && d <= 1.0);
    }

    #[test]
    fn directness_is_one_iff_collinear_monotone(
        steps in proptest::collection::vec(0.01f64..1.0, 1..20),
        dir in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0))
    {
        let norm = (dir.0 * dir.0 + dir.1 * dir.1 + dir.2 * dir.2).sqrt();
        prop_assume!(norm > 1e-3);
        let mut pos = [0.0, 0.0, 0.0];
        let mut path = vec![pos];
        for s in &steps {
            pos = [pos[0] + s * dir.0 / norm, pos[1] + s * dir.1 / norm, pos[2] + s * dir.2 / norm];
            path.push(pos);
        }
        let cap = path_capability(path);
        let d = feature_directness(&cap);
        prop_assert!((d - 1.0).abs() < 1e-9);
    }
}

#[test]
fn features_are_pure() {
    let spec = arm();
    let space = crate::cfm::ParameterSpace::for_robot(&spec);
    use rand::Rng;
    let mut rng = crate::seeding::rng(5, 0);
    let theta: Vec<f64> = (0..space.dimension()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let cap = crate::cfm::simulate_theta(&space, &theta, &spec, &SimConfig::default()).unwrap();
    for fs in FeatureSpace::standard() {
        let a = fs.apply(&cap);
        let b = fs.apply(&cap);
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn every_feasible_capability_in_exactly_one_cluster_per_space() {
    let (_, set, store) = small_store(400, 21, (6, 6, 3));
    let feasible = set.feasible_indices();
    for space in &store.spaces {
        assert_eq!(space.assignments.len(), feasible.len());
        let mut seen = std::collections::BTreeMap::new();
        for (set_idx, j) in &space.assignments {
            assert!(seen.insert(*set_idx, *j).is_none(), "{} assigned twice", set_idx);
            assert!(*j < space.clusters.len());
        }
        let member_total: usize = space.clusters.iter().map(|c| c.members.len()).sum();
        assert_eq!(member_total, feasible.len());
        for (j, c) in space.clusters.iter().enumerate() {
            for m in &c.members {
                assert_eq!(seen[m], j);
            }
        }
    }
}

#[test]
fn cluster_centroid_matches_on_demand_recomputation() {
    let (spec, _, store) = small_store(300, 22, (4, 4, 2));
    for space in &store.spaces {
        for (j, c) in space.clusters.iter().enumerate() {
            let recomputed = recompute_centroid(&store, &space.space.id, j, &spec).unwrap();
            assert_eq!(recomputed, c.centroid);
        }
    }
}

#[test]
fn single_cluster_space_accuracy_is_one() {
    let (spec, _, store) = small_store(200, 23, (1, 1, 1));
    for space_id in ["start", "end", "dir"] {
        let acc = model_accuracy(&store, space_id, 0, &spec, 16, 0).unwrap();
        assert_eq!(acc, 1.0, "nearest of one center is always itself");
    }
}

#[test]
fn model_accuracy_is_deterministic() {
    let (spec, _, store) = small_store(300, 24, (4, 4, 2));
    let a = model_accuracy(&store, "start", 0, &spec, 32, 7).unwrap();
    let b = model_accuracy(&store, "start", 0, &spec, 32, 7).unwrap();
    assert_eq!(a, b);
}

#[test]
fn cluster_store_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let (spec, _, store) = small_store(300, 25, (4, 4, 2));
    store.save(dir.path()).unwrap();
    let loaded = ClusterStore::load(dir.path()).unwrap();
    assert_eq!(loaded.robot, store.robot);
    assert_eq!(loaded.space_params, store.space_params);
    assert_eq!(loaded.sim, store.sim);
    assert_eq!(loaded.spaces.len(), store.spaces.len());
    for (a, b) in loaded.spaces.iter().zip(&store.spaces) {
        assert_eq!(a.space, b.space);
        assert_eq!(a.assignments, b.assignments);
        for (ca, cb) in a.clusters.iter().zip(&b.clusters) {
            assert_eq!(ca.label, cb.label);
            assert_eq!(ca.members, cb.members);
            assert_eq!(ca.center, cb.center);
            assert_eq!(ca.centroid, cb.centroid);
            assert_eq!(ca.threshold_logp, cb.threshold_logp);
            assert_eq!(ca.model.weights, cb.model.weights);
            assert_eq!(ca.model.means, cb.model.means);
            assert_eq!(ca.model.covariances, cb.model.covariances);
        }
    }
    // a loaded model evaluates identically
    let theta = vec![0.1; store.space_params.dimension()];
    let a = loaded.spaces[0].clusters[0].model.log_density(&theta);
    let b = store.spaces[0].clusters[0].model.log_density(&theta);
    assert_eq!(a.to_bits(), b.to_bits());
    let _ = spec;
}

#[test]
fn unknown_space_is_reported() {
    let (_, _, store) = small_store(200, 26, (2, 2, 2));
    assert!(matches!(store.space("nope"), Err(ClusterError::UnknownSpace(_))));
}
