//! Cluster store persistence: a manifest plus one document per feature
//! space holding the assignment vector, centers and the mixture
//! parameter blocks of every cluster.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::{
    Cluster, ClusterError, ClusterStore, ClusteredSpace, FeatureKind, FeatureSpace, GaussianMixture,
};
use crate::cfm::{JointParams, ParameterSpace};
use crate::sim::SimConfig;
use crate::textio::{fmt_f64, parse_f64};

pub const CLUSTER_FORMAT: &str = "clusterstore\t1";
const SPACE_FORMAT: &str = "clusterspace\t1";

fn io_err(path: &Path, e: std::io::Error) -> ClusterError {
    ClusterError::Io(format!("{}: {}", path.display(), e))
}

fn floats(vs: &[f64]) -> String {
    vs.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join("\t")
}

fn parse_floats<'a>(fields: impl Iterator<Item = &'a str>) -> Result<Vec<f64>, ClusterError> {
    fields.map(|f| parse_f64(f).map_err(ClusterError::Parse)).collect()
}

impl ClusterStore {
    pub fn save(&self, dir: &Path) -> Result<(), ClusterError> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let mut manifest = String::new();
        manifest.push_str(CLUSTER_FORMAT);
        manifest.push('\n');
        manifest.push_str(&format!("robot\t{}\n", self.robot));
        manifest.push_str(&format!("dt\t{}\n", fmt_f64(self.sim.dt)));
        manifest.push_str(&format!("horizon\t{}\n", fmt_f64(self.sim.horizon)));
        for jp in &self.space_params.joints {
            manifest.push_str(&format!("joint_params\t{}\t{}\t{}\n", jp.count, fmt_f64(jp.lo), fmt_f64(jp.hi)));
        }
        for s in &self.spaces {
            manifest.push_str(&format!("space\t{}\t{}\t{}\n", s.space.id, s.k, s.seed));
        }
        let mpath = dir.join("manifest.txt");
        std::fs::write(&mpath, manifest).map_err(|e| io_err(&mpath, e))?;

        for s in &self.spaces {
            let path = dir.join(format!("space_{}.txt", s.space.id));
            std::fs::write(&path, space_document(s)).map_err(|e| io_err(&path, e))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<ClusterStore, ClusterError> {
        let mpath = dir.join("manifest.txt");
        let manifest = std::fs::read_to_string(&mpath).map_err(|e| io_err(&mpath, e))?;
        let mut lines = manifest.lines();
        if lines.next() != Some(CLUSTER_FORMAT) {
            return Err(ClusterError::Parse(format!("{}: bad header", mpath.display())));
        }
        let mut robot = String::new();
        let mut dt = 0.0;
        let mut horizon = 0.0;
        let mut joints = Vec::new();
        let mut space_ids = Vec::new();
        for line in lines {
            let mut f = line.split('\t');
            match f.next() {
                Some("robot") => robot = f.next().unwrap_or("").to_string(),
                Some("dt") => dt = parse_f64(f.next().unwrap_or("")).map_err(ClusterError::Parse)?,
                Some("horizon") => {
                    horizon = parse_f64(f.next().unwrap_or("")).map_err(ClusterError::Parse)?
                }
                Some("joint_params") => {
                    let count = f
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| ClusterError::Parse("bad joint_params".into()))?;
                    let lo = parse_f64(f.next().unwrap_or("")).map_err(ClusterError::Parse)?;
                    let hi = parse_f64(f.next().unwrap_or("")).map_err(ClusterError::Parse)?;
                    joints.push(JointParams { count, lo, hi });
                }
                Some("space") => space_ids.push(f.next().unwrap_or("").to_string()),
                _ => {}
            }
        }
        let mut spaces = Vec::with_capacity(space_ids.len());
        for id in space_ids {
            let path = dir.join(format!("space_{}.txt", id));
            let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
            spaces.push(parse_space_document(&text)?);
        }
        Ok(ClusterStore { robot, space_params: ParameterSpace { joints }, sim: SimConfig { dt, horizon }, spaces })
    }
}

fn space_document(s: &ClusteredSpace) -> String {
    let mut out = String::new();
    out.push_str(SPACE_FORMAT);
    out.push('\n');
    out.push_str(&format!("id\t{}\n", s.space.id));
    out.push_str(&format!("label\t{}\n", s.space.label));
    out.push_str(&format!("kind\t{}\n", s.space.kind.as_str()));
    out.push_str("metric\teuclidean\n");
    out.push_str(&format!("k\t{}\n", s.k));
    out.push_str(&format!("seed\t{}\n", s.seed));
    for (set_idx, cluster) in &s.assignments {
        out.push_str(&format!("assign\t{}\t{}\n", set_idx, cluster));
    }
    for (j, c) in s.clusters.iter().enumerate() {
        out.push_str(&format!("cluster\t{}\t{}\t{}\n", j, c.label, fmt_f64(c.threshold_logp)));
        out.push_str(&format!("center\t{}\t{}\n", j, floats(&c.center)));
        out.push_str(&format!("centroid\t{}\t{}\n", j, floats(&c.centroid)));
        out.push_str(&format!("weights\t{}\t{}\n", j, floats(&c.model.weights)));
        for (k, m) in c.model.means.iter().enumerate() {
            out.push_str(&format!("mean\t{}\t{}\t{}\n", j, k, floats(m.as_slice())));
        }
        for (k, cov) in c.model.covariances.iter().enumerate() {
            let rows: Vec<f64> = cov.transpose().iter().copied().collect();
            out.push_str(&format!("cov\t{}\t{}\t{}\n", j, k, floats(&rows)));
        }
        out.push_str(&format!("llh\t{}\t{}\n", j, floats(&c.model.log_likelihood_history)));
    }
    out
}

fn parse_space_document(text: &str) -> Result<ClusteredSpace, ClusterError> {
    let mut lines = text.lines();
    if lines.next() != Some(SPACE_FORMAT) {
        return Err(ClusterError::Parse("bad space header".into()));
    }
    let mut id = String::new();
    let mut label = String::new();
    let mut kind = FeatureKind::Start;
    let mut k = 0usize;
    let mut seed = 0u64;
    let mut assignments = Vec::new();

    struct Partial {
        label: String,
        threshold: f64,
        center: Vec<f64>,
        centroid: Vec<f64>,
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        covs: Vec<Vec<f64>>,
        llh: Vec<f64>,
    }
    let mut partials: Vec<Partial> = Vec::new();
    let need = |partials: &mut Vec<Partial>, j: usize| -> Result<(), ClusterError> {
        if j >= partials.len() {
            return Err(ClusterError::Parse(format!("cluster {} referenced before declaration", j)));
        }
        Ok(())
    };

    for line in lines {
        let mut f = line.split('\t');
        let tag = f.next().unwrap_or("");
        match tag {
            "id" => id = f.next().unwrap_or("").to_string(),
            "label" => label = f.next().unwrap_or("").to_string(),
            "kind" => {
                kind = FeatureKind::parse(f.next().unwrap_or(""))
                    .ok_or_else(|| ClusterError::Parse("unknown feature kind".into()))?
            }
            "metric" => {}
            "k" => k = f.next().and_then(|s| s.parse().ok()).ok_or_else(|| ClusterError::Parse("bad k".into()))?,
            "seed" => {
                seed = f.next().and_then(|s| s.parse().ok()).ok_or_else(|| ClusterError::Parse("bad seed".into()))?
            }
            "assign" => {
                let a: Option<usize> = f.next().and_then(|s| s.parse().ok());
                let b: Option<usize> = f.next().and_then(|s| s.parse().ok());
                match (a, b) {
                    (Some(a), Some(b)) => assignments.push((a, b)),
                    _ => return Err(ClusterError::Parse("bad assignment".into())),
                }
            }
            "cluster" => {
                let j: usize =
                    f.next().and_then(|s| s.parse().ok()).ok_or_else(|| ClusterError::Parse("bad cluster".into()))?;
                if j != partials.len() {
                    return Err(ClusterError::Parse("cluster records out of order".into()));
                }
                let label = f.next().unwrap_or("").to_string();
                let threshold = parse_f64(f.next().unwrap_or("")).map_err(ClusterError::Parse)?;
                partials.push(Partial {
                    label,
                    threshold,
                    center: Vec::new(),
                    centroid: Vec::new(),
                    weights: Vec::new(),
                    means: Vec::new(),
                    covs: Vec::new(),
                    llh: Vec::new(),
                });
            }
            "center" | "centroid" | "weights" | "llh" => {
                let j: usize =
                    f.next().and_then(|s| s.parse().ok()).ok_or_else(|| ClusterError::Parse("bad index".into()))?;
                need(&mut partials, j)?;
                let values = parse_floats(f)?;
                match tag {
                    "center" => partials[j].center = values,
                    "centroid" => partials[j].centroid = values,
                    "weights" => partials[j].weights = values,
                    _ => partials[j].llh = values,
                }
            }
            "mean" | "cov" => {
                let j: usize =
                    f.next().and_then(|s| s.parse().ok()).ok_or_else(|| ClusterError::Parse("bad index".into()))?;
                need(&mut partials, j)?;
                let _comp: usize =
                    f.next().and_then(|s| s.parse().ok()).ok_or_else(|| ClusterError::Parse("bad component".into()))?;
                let values = parse_floats(f)?;
                if tag == "mean" {
                    partials[j].means.push(values);
                } else {
                    partials[j].covs.push(values);
                }
            }
            "" => {}
            other => return Err(ClusterError::Parse(format!("unknown record {:?}", other))),
        }
    }

    let space = FeatureSpace { id: id.clone(), label, kind };
    let mut clusters = Vec::with_capacity(partials.len());
    for p in partials {
        let dim = p.means.first().map(|m| m.len()).unwrap_or(0);
        let means: Vec<DVector<f64>> = p.means.iter().map(|m| DVector::from_column_slice(m)).collect();
        let covs: Result<Vec<DMatrix<f64>>, ClusterError> = p
            .covs
            .iter()
            .map(|c| {
                if c.len() != dim * dim {
                    return Err(ClusterError::Parse("covariance block has wrong size".into()));
                }
                Ok(DMatrix::from_row_slice(dim, dim, c))
            })
            .collect();
        let model = GaussianMixture::from_parameters(p.weights, means, covs?, p.llh)?;
        clusters.push(Cluster {
            label: p.label,
            space_id: id.clone(),
            members: Vec::new(),
            center: p.center,
            centroid: p.centroid,
            threshold_logp: p.threshold,
            model,
        });
    }
    // membership comes back from the assignment vector
    for (set_idx, j) in &assignments {
        if *j >= clusters.len() {
            return Err(ClusterError::Parse("assignment references missing cluster".into()));
        }
        clusters[*j].members.push(*set_idx);
    }
    Ok(ClusteredSpace { space, k, seed, assignments, clusters })
}
