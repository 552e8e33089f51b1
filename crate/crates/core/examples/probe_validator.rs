// scratch probe: feasibility mix + validator training sweeps
use caplab_core::explore::{explore, train_validator, Activation, ExplorationConfig, TrainConfig};
use caplab_core::fixtures;
use caplab_core::graph::PropertyGraph;
use caplab_core::sim::{robot_from_assembly, SimConfig};

fn main() {
    let mut g = PropertyGraph::new();
    let cat = fixtures::install_catalogue(&mut g).unwrap();
    let id = fixtures::arm_assembly(&mut g, &cat, "arm").unwrap();
    let spec = robot_from_assembly(&g, &id).unwrap();
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10000);
    let config = ExplorationConfig::new(&spec, n, 4, SimConfig::default());
    let set = explore(&spec, &config).unwrap();
    println!("feasible {}/{}", set.feasible_count(), set.len());

    for (lr, mom, epochs, batch, act) in [
        (0.2, 0.9, 40, 64, Activation::LeakyRelu),
        (0.2, 0.9, 60, 64, Activation::LeakyRelu),
        (0.1, 0.9, 60, 64, Activation::LeakyRelu),
        (0.1, 0.9, 120, 64, Activation::LeakyRelu),
        (0.05, 0.95, 120, 64, Activation::LeakyRelu),
        (0.3, 0.9, 60, 64, Activation::LeakyRelu),
    ] {
        let cfg = TrainConfig { split: 0.8, epochs, batch, learning_rate: lr, momentum: mom, activation: act, hidden_width: 32, hidden_layers: 4, seed: 9 };
        let t0 = std::time::Instant::now();
        let m = train_validator(&set, &cfg).unwrap();
        println!(
            "lr={:<4} mom={} epochs={:<3} batch={} {:?} -> holdout acc {:.4} (loss {:.4}) in {:?}",
            lr, mom, epochs, batch, act, m.holdout_accuracy,
            m.log.last().unwrap().holdout_loss, t0.elapsed()
        );
    }
}
