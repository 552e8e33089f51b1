//! Goal-agnostic exploration: uniform sampling over the parameter
//! space, batch simulation of the sampled capabilities and training of
//! the feasibility validation model.
//!
//! Ground-truth feasibility is the simulator's limit report: a
//! capability is feasible iff no joint position or velocity limit was
//! violated along its trajectory.

mod nn;
mod store;

pub use nn::{Activation, Mlp};
pub use store::SET_FORMAT;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::cfm::{simulate_theta, CfmError, ParameterSpace};
use crate::seeding;
use crate::sim::{Capability, RobotSpec, SimConfig, SimError};

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("training data contains a single class only")]
    SingleClassData,
    #[error("parameter vector has {found} coefficients, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("i/o failure: {0}")]
    Io(String),
    #[error("malformed store: {0}")]
    Parse(String),
    #[error(transparent)]
    Cfm(#[from] CfmError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Exploration parameters. The sample count defaults to the desk scale
/// of 10^4.
#[derive(Clone, Debug)]
pub struct ExplorationConfig {
    pub samples: usize,
    pub seed: u64,
    pub space: ParameterSpace,
    pub sim: SimConfig,
}

impl ExplorationConfig {
    pub fn new(spec: &RobotSpec, samples: usize, seed: u64, sim: SimConfig) -> ExplorationConfig {
        ExplorationConfig { samples, seed, space: ParameterSpace::for_robot(spec), sim }
    }
}

/// One explored capability.
#[derive(Clone, Debug)]
pub struct CapEntry {
    pub theta: Vec<f64>,
    pub capability: Capability,
    pub feasible: bool,
}

/// Where a capability set came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub robot: String,
    pub seed: u64,
    pub samples: usize,
    pub dt: f64,
    pub horizon: f64,
}

/// The library of explored capabilities for one robot.
#[derive(Clone, Debug)]
pub struct CapabilitySet {
    pub provenance: Provenance,
    pub space: ParameterSpace,
    pub entries: Vec<CapEntry>,
}

impl CapabilitySet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn feasible_count(&self) -> usize {
        self.entries.iter().filter(|e| e.feasible).count()
    }

    pub fn feasible_indices(&self) -> Vec<usize> {
        self.entries.iter().enumerate().filter(|(_, e)| e.feasible).map(|(i, _)| i).collect()
    }
}

/// Draw one uniform parameter vector from the stream `index` of `seed`.
fn draw_theta(space: &ParameterSpace, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = seeding::rng(seed, index);
    (0..space.dimension())
        .map(|i| {
            let (lo, hi) = space.bounds(i);
            rng.gen_range(lo..hi)
        })
        .collect()
}

/// Uniformly sample the parameter space and simulate every draw.
///
/// Deterministic given the seed: each sample derives its own generator
/// from (seed, index), so the result is one fixed multiset no matter
/// how the work is partitioned across threads.
pub fn explore(spec: &RobotSpec, config: &ExplorationConfig) -> Result<CapabilitySet, ExploreError> {
    if config.samples == 0 {
        return Err(ExploreError::BadConfig("sample count must be at least 1".to_string()));
    }
    if config.space.joint_count() != spec.joint_count() {
        return Err(ExploreError::BadConfig(format!(
            "space covers {} joints, robot has {}",
            config.space.joint_count(),
            spec.joint_count()
        )));
    }
    let entries: Result<Vec<CapEntry>, ExploreError> = (0..config.samples as u64)
        .into_par_iter()
        .map(|i| {
            let theta = draw_theta(&config.space, config.seed, i);
            let capability = simulate_theta(&config.space, &theta, spec, &config.sim)?;
            let feasible = capability.feasible();
            Ok(CapEntry { theta, capability, feasible })
        })
        .collect();
    Ok(CapabilitySet {
        provenance: Provenance {
            robot: spec.name.clone(),
            seed: config.seed,
            samples: config.samples,
            dt: config.sim.dt,
            horizon: config.sim.horizon,
        },
        space: config.space.clone(),
        entries: entries?,
    })
}

/// Validator training configuration.
#[derive(Clone, Copy, Debug)]
pub struct TrainConfig {
    /// Fraction of the set used for training; the rest is held out.
    pub split: f64,
    pub epochs: usize,
    pub batch: usize,
    pub learning_rate: f64,
    /// Constant momentum coefficient on the mini-batch updates.
    pub momentum: f64,
    pub activation: Activation,
    pub hidden_width: usize,
    pub hidden_layers: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            split: 0.8,
            epochs: 60,
            batch: 64,
            learning_rate: 0.2,
            momentum: 0.9,
            activation: Activation::LeakyRelu,
            hidden_width: 32,
            hidden_layers: 4,
            seed: 0,
        }
    }
}

/// Per-epoch training record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub holdout_loss: f64,
    pub holdout_accuracy: f64,
}

/// Binary classifier over parameter vectors predicting trajectory
/// feasibility. Inputs are normalized per coordinate to [-1, 1] using
/// the parameter-space bounds it was trained with.
#[derive(Clone, Debug)]
pub struct ValidationModel {
    pub mlp: Mlp,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub log: Vec<EpochStats>,
    pub holdout_accuracy: f64,
}

impl ValidationModel {
    pub fn input_dim(&self) -> usize {
        self.lo.len()
    }

    fn normalize(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let mid = 0.5 * (self.lo[i] + self.hi[i]);
                let half = 0.5 * (self.hi[i] - self.lo[i]);
                (v - mid) / half
            })
            .collect()
    }

    /// Feasibility probability of a parameter vector; the decision
    /// threshold is 0.5.
    pub fn validate(&self, theta: &[f64]) -> Result<f64, ExploreError> {
        if theta.len() != self.input_dim() {
            return Err(ExploreError::DimensionMismatch { expected: self.input_dim(), found: theta.len() });
        }
        Ok(self.mlp.forward(&self.normalize(theta)))
    }
}

/// Train the feasibility validator on a capability set by mini-batch
/// gradient descent with a fixed step. Deterministic given the seed.
pub fn train_validator(set: &CapabilitySet, config: &TrainConfig) -> Result<ValidationModel, ExploreError> {
    if !(config.split > 0.0 && config.split < 1.0) {
        return Err(ExploreError::BadConfig("split must be in (0, 1)".to_string()));
    }
    let positives = set.feasible_count();
    if positives == 0 || positives == set.len() {
        return Err(ExploreError::SingleClassData);
    }

    let dim = set.space.dimension();
    let (lo, hi): (Vec<f64>, Vec<f64>) = (0..dim).map(|i| set.space.bounds(i)).unzip();
    let normalize = |theta: &[f64]| -> Vec<f64> {
        theta
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let mid = 0.5 * (lo[i] + hi[i]);
                let half = 0.5 * (hi[i] - lo[i]);
                (v - mid) / half
            })
            .collect()
    };
    let xs: Vec<Vec<f64>> = set.entries.iter().map(|e| normalize(&e.theta)).collect();
    let ys: Vec<f64> = set.entries.iter().map(|e| if e.feasible { 1.0 } else { 0.0 }).collect();

    // deterministic shuffle before the split so both classes spread
    let mut order: Vec<usize> = (0..set.len()).collect();
    let mut rng = seeding::rng(config.seed, 1);
    shuffle(&mut order, &mut rng);
    let n_train = ((set.len() as f64) * config.split).round() as usize;
    let n_train = n_train.clamp(1, set.len() - 1);
    let (train_idx, hold_idx) = order.split_at(n_train);

    let mut dims = vec![dim];
    dims.extend(std::iter::repeat(config.hidden_width).take(config.hidden_layers));
    dims.push(1);
    let mut init_rng = seeding::rng(config.seed, 0);
    let mut mlp = Mlp::new(&dims, config.activation, &mut init_rng);

    let mut log = Vec::with_capacity(config.epochs);
    let mut shuffle_rng = seeding::rng(config.seed, 2);
    let mut epoch_order: Vec<usize> = train_idx.to_vec();
    let mut wvel: Vec<nalgebra::DMatrix<f64>> =
        mlp.weights.iter().map(|w| nalgebra::DMatrix::zeros(w.nrows(), w.ncols())).collect();
    let mut bvel: Vec<nalgebra::DVector<f64>> =
        mlp.biases.iter().map(|b| nalgebra::DVector::zeros(b.len())).collect();
    for epoch in 0..config.epochs {
        shuffle(&mut epoch_order, &mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in epoch_order.chunks(config.batch) {
            let mut wgrads: Option<Vec<nalgebra::DMatrix<f64>>> = None;
            let mut bgrads: Option<Vec<nalgebra::DVector<f64>>> = None;
            for &i in batch {
                let (wg, bg, loss) = mlp.backprop(&xs[i], ys[i]);
                epoch_loss += loss;
                match (&mut wgrads, &mut bgrads) {
                    (Some(ws), Some(bs)) => {
                        for l in 0..ws.len() {
                            ws[l] += &wg[l];
                            bs[l] += &bg[l];
                        }
                    }
                    _ => {
                        wgrads = Some(wg);
                        bgrads = Some(bg);
                    }
                }
            }
            let scale = config.learning_rate / batch.len() as f64;
            let (wgrads, bgrads) = (wgrads.unwrap(), bgrads.unwrap());
            for l in 0..wvel.len() {
                wvel[l] = &wvel[l] * config.momentum + &wgrads[l] * scale;
                bvel[l] = &bvel[l] * config.momentum + &bgrads[l] * scale;
            }
            mlp.apply(&wvel, &bvel, 1.0);
        }
        let train_loss = epoch_loss / train_idx.len() as f64;
        let (holdout_loss, holdout_accuracy) = evaluate(&mlp, &xs, &ys, hold_idx);
        log.push(EpochStats { epoch, train_loss, holdout_loss, holdout_accuracy });
    }

    let (_, holdout_accuracy) = evaluate(&mlp, &xs, &ys, hold_idx);
    Ok(ValidationModel { mlp, lo, hi, log, holdout_accuracy })
}

fn evaluate(mlp: &Mlp, xs: &[Vec<f64>], ys: &[f64], idx: &[usize]) -> (f64, f64) {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for &i in idx {
        let p = mlp.forward(&xs[i]);
        loss += {
            let p = p.clamp(1e-12, 1.0 - 1e-12);
            -(ys[i] * p.ln() + (1.0 - ys[i]) * (1.0 - p).ln())
        };
        if (p > 0.5) == (ys[i] > 0.5) {
            correct += 1;
        }
    }
    (loss / idx.len() as f64, correct as f64 / idx.len() as f64)
}

/// Fisher-Yates with the crate's deterministic generator.
fn shuffle(order: &mut [usize], rng: &mut rand_chacha::ChaCha8Rng) {
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
}
