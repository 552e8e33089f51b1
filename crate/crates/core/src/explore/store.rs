//! Capability-set and validator persistence.
//!
//! A set directory holds `manifest.txt` (provenance and parameter-space
//! blocks), `thetas.tsv` (one flat parameter vector per row),
//! `labels.tsv` (feasibility flags) and `traj/cap_NNNNN.tsv`
//! (per-capability trajectory tables in the simulator's format).

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::{Activation, CapEntry, CapabilitySet, EpochStats, ExploreError, Mlp, Provenance, ValidationModel};
use crate::cfm::{JointParams, ParameterSpace};
use crate::sim::Capability;
use crate::textio::{fmt_f64, parse_f64};

pub const SET_FORMAT: &str = "capset\t1";
pub const VALIDATOR_FORMAT: &str = "validator\t1";

fn io_err(path: &Path, e: std::io::Error) -> ExploreError {
    ExploreError::Io(format!("{}: {}", path.display(), e))
}

impl CapabilitySet {
    pub fn save(&self, dir: &Path) -> Result<(), ExploreError> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let mut manifest = String::new();
        manifest.push_str(SET_FORMAT);
        manifest.push('\n');
        manifest.push_str(&format!("robot\t{}\n", self.provenance.robot));
        manifest.push_str(&format!("seed\t{}\n", self.provenance.seed));
        manifest.push_str(&format!("samples\t{}\n", self.provenance.samples));
        manifest.push_str(&format!("dt\t{}\n", fmt_f64(self.provenance.dt)));
        manifest.push_str(&format!("horizon\t{}\n", fmt_f64(self.provenance.horizon)));
        for jp in &self.space.joints {
            manifest.push_str(&format!(
                "joint_params\t{}\t{}\t{}\n",
                jp.count,
                fmt_f64(jp.lo),
                fmt_f64(jp.hi)
            ));
        }
        let mpath = dir.join("manifest.txt");
        std::fs::write(&mpath, manifest).map_err(|e| io_err(&mpath, e))?;

        // flat theta matrix, joint-major coefficients documented in the header
        let mut thetas = String::from("# index\ttheta (joint-major coefficients)\n");
        for (i, e) in self.entries.iter().enumerate() {
            let row: Vec<String> = e.theta.iter().map(|v| fmt_f64(*v)).collect();
            thetas.push_str(&format!("{}\t{}\n", i, row.join("\t")));
        }
        let tpath = dir.join("thetas.tsv");
        std::fs::write(&tpath, thetas).map_err(|e| io_err(&tpath, e))?;

        let mut labels = String::from("# index\tfeasible\tviolations\n");
        for (i, e) in self.entries.iter().enumerate() {
            labels.push_str(&format!(
                "{}\t{}\t{}\n",
                i,
                if e.feasible { 1 } else { 0 },
                e.capability.report.violations.len()
            ));
        }
        let lpath = dir.join("labels.tsv");
        std::fs::write(&lpath, labels).map_err(|e| io_err(&lpath, e))?;

        let traj = dir.join("traj");
        std::fs::create_dir_all(&traj).map_err(|e| io_err(&traj, e))?;
        for (i, e) in self.entries.iter().enumerate() {
            let p = traj.join(format!("cap_{:05}.tsv", i));
            std::fs::write(&p, e.capability.to_table()).map_err(|e| io_err(&p, e))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<CapabilitySet, ExploreError> {
        let mpath = dir.join("manifest.txt");
        let manifest = std::fs::read_to_string(&mpath).map_err(|e| io_err(&mpath, e))?;
        let mut lines = manifest.lines();
        if lines.next() != Some(SET_FORMAT) {
            return Err(ExploreError::Parse(format!("{}: bad header", mpath.display())));
        }
        let mut provenance =
            Provenance { robot: String::new(), seed: 0, samples: 0, dt: 0.0, horizon: 0.0 };
        let mut joints = Vec::new();
        for line in lines {
            let mut fields = line.split('\t');
            match fields.next() {
                Some("robot") => provenance.robot = fields.next().unwrap_or("").to_string(),
                Some("seed") => {
                    provenance.seed = fields
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| ExploreError::Parse("bad seed".into()))?
                }
                Some("samples") => {
                    provenance.samples = fields
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| ExploreError::Parse("bad samples".into()))?
                }
                Some("dt") => {
                    provenance.dt =
                        parse_f64(fields.next().unwrap_or("")).map_err(ExploreError::Parse)?
                }
                Some("horizon") => {
                    provenance.horizon =
                        parse_f64(fields.next().unwrap_or("")).map_err(ExploreError::Parse)?
                }
                Some("joint_params") => {
                    let count: usize = fields
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| ExploreError::Parse("bad joint_params count".into()))?;
                    let lo = parse_f64(fields.next().unwrap_or("")).map_err(ExploreError::Parse)?;
                    let hi = parse_f64(fields.next().unwrap_or("")).map_err(ExploreError::Parse)?;
                    joints.push(JointParams { count, lo, hi });
                }
                _ => {}
            }
        }
        let space = ParameterSpace { joints };

        let tpath = dir.join("thetas.tsv");
        let thetas_text = std::fs::read_to_string(&tpath).map_err(|e| io_err(&tpath, e))?;
        let mut thetas = Vec::new();
        for line in thetas_text.lines().filter(|l| !l.starts_with('#') && !l.is_empty()) {
            let mut fields = line.split('\t');
            let _idx = fields.next();
            let row: Result<Vec<f64>, _> = fields.map(parse_f64).collect();
            thetas.push(row.map_err(ExploreError::Parse)?);
        }

        let lpath = dir.join("labels.tsv");
        let labels_text = std::fs::read_to_string(&lpath).map_err(|e| io_err(&lpath, e))?;
        let mut labels = Vec::new();
        for line in labels_text.lines().filter(|l| !l.starts_with('#') && !l.is_empty()) {
            let mut fields = line.split('\t');
            let _idx = fields.next();
            let flag = fields.next() == Some("1");
            labels.push(flag);
        }
        if labels.len() != thetas.len() {
            return Err(ExploreError::Parse("thetas and labels disagree on length".into()));
        }

        let mut entries = Vec::with_capacity(thetas.len());
        for (i, (theta, feasible)) in thetas.into_iter().zip(labels).enumerate() {
            let p = dir.join("traj").join(format!("cap_{:05}.tsv", i));
            let text = std::fs::read_to_string(&p).map_err(|e| io_err(&p, e))?;
            let mut capability = Capability::from_table(&text)?;
            capability.source = Some(theta.clone());
            entries.push(CapEntry { theta, capability, feasible });
        }
        Ok(CapabilitySet { provenance, space, entries })
    }
}

impl ValidationModel {
    pub fn save(&self, path: &Path) -> Result<(), ExploreError> {
        let mut out = String::new();
        out.push_str(VALIDATOR_FORMAT);
        out.push('\n');
        let dims: Vec<String> = self.mlp.dims.iter().map(|d| d.to_string()).collect();
        out.push_str(&format!("dims\t{}\n", dims.join("\t")));
        out.push_str(&format!("activation\t{}\n", self.mlp.activation.as_str()));
        let row = |vs: &mut dyn Iterator<Item = &f64>| -> String {
            vs.map(|v| fmt_f64(*v)).collect::<Vec<_>>().join("\t")
        };
        out.push_str(&format!("lo\t{}\n", row(&mut self.lo.iter())));
        out.push_str(&format!("hi\t{}\n", row(&mut self.hi.iter())));
        for l in 0..self.mlp.weights.len() {
            out.push_str(&format!("w{}\t{}\n", l, row(&mut self.mlp.weights[l].iter())));
            out.push_str(&format!("b{}\t{}\n", l, row(&mut self.mlp.biases[l].iter())));
        }
        out.push_str(&format!("holdout_accuracy\t{}\n", fmt_f64(self.holdout_accuracy)));
        for s in &self.log {
            out.push_str(&format!(
                "epoch\t{}\t{}\t{}\t{}\n",
                s.epoch,
                fmt_f64(s.train_loss),
                fmt_f64(s.holdout_loss),
                fmt_f64(s.holdout_accuracy)
            ));
        }
        std::fs::write(path, out).map_err(|e| io_err(path, e))
    }

    pub fn load(path: &Path) -> Result<ValidationModel, ExploreError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let mut lines = text.lines();
        if lines.next() != Some(VALIDATOR_FORMAT) {
            return Err(ExploreError::Parse(format!("{}: bad header", path.display())));
        }
        let mut dims: Vec<usize> = Vec::new();
        let mut activation = Activation::Tanh;
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        let mut weights: Vec<Vec<f64>> = Vec::new();
        let mut biases: Vec<Vec<f64>> = Vec::new();
        let mut log = Vec::new();
        let mut holdout_accuracy = 0.0;
        for line in lines {
            let mut fields = line.split('\t');
            let tag = fields.next().unwrap_or("");
            let rest: Result<Vec<f64>, _> = fields.clone().map(parse_f64).collect();
            match tag {
                "dims" => {
                    dims = fields
                        .map(|f| f.parse().map_err(|_| ExploreError::Parse("bad dim".into())))
                        .collect::<Result<_, _>>()?
                }
                "activation" => {
                    activation = fields
                        .next()
                        .and_then(Activation::parse)
                        .ok_or_else(|| ExploreError::Parse("unknown activation".into()))?
                }
                "lo" => lo = rest.map_err(ExploreError::Parse)?,
                "hi" => hi = rest.map_err(ExploreError::Parse)?,
                "holdout_accuracy" => {
                    holdout_accuracy = rest.map_err(ExploreError::Parse)?[0];
                }
                "epoch" => {
                    let v = rest.map_err(ExploreError::Parse)?;
                    log.push(EpochStats {
                        epoch: v[0] as usize,
                        train_loss: v[1],
                        holdout_loss: v[2],
                        holdout_accuracy: v[3],
                    });
                }
                t if t.starts_with('w') => weights.push(rest.map_err(ExploreError::Parse)?),
                t if t.starts_with('b') => biases.push(rest.map_err(ExploreError::Parse)?),
                _ => {}
            }
        }
        if dims.len() < 2 || weights.len() != dims.len() - 1 || biases.len() != weights.len() {
            return Err(ExploreError::Parse("inconsistent validator layout".into()));
        }
        let mut ws = Vec::new();
        let mut bs = Vec::new();
        for l in 0..weights.len() {
            let (rows, cols) = (dims[l + 1], dims[l]);
            if weights[l].len() != rows * cols || biases[l].len() != rows {
                return Err(ExploreError::Parse(format!("layer {} has wrong size", l)));
            }
            ws.push(DMatrix::from_iterator(rows, cols, weights[l].iter().copied()));
            bs.push(DVector::from_iterator(rows, biases[l].iter().copied()));
        }
        Ok(ValidationModel { mlp: Mlp { dims, activation, weights: ws, biases: bs }, lo, hi, log, holdout_accuracy })
    }
}
