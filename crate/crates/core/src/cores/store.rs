//! Cognitive-core and behavior-model documents.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{BehaviorModel, CognitiveCore, Constraint, ConstraintKind, CoreError, SamplerConfig, SemanticAnnotation};
use crate::textio::{fmt_f64, parse_f64};

pub const CORE_FORMAT: &str = "cognitivecore\t1";
pub const BEHAVIORS_FORMAT: &str = "behaviors\t1";

fn io_err(path: &Path, e: std::io::Error) -> CoreError {
    CoreError::Io(format!("{}: {}", path.display(), e))
}

fn render_constraint(c: &Constraint) -> String {
    match c.kind {
        ConstraintKind::MinMax { lo, hi } => {
            format!("{}\tminmax\t{}\t{}\t{}", c.space_id, fmt_f64(lo), fmt_f64(hi), fmt_f64(c.weight))
        }
        ConstraintKind::Variable => format!("{}\tvariable\t{}", c.space_id, fmt_f64(c.weight)),
    }
}

fn parse_constraint(fields: &[&str]) -> Result<Constraint, CoreError> {
    let space_id = fields.first().copied().unwrap_or("").to_string();
    match fields.get(1).copied() {
        Some("minmax") => {
            if fields.len() != 5 {
                return Err(CoreError::Parse("minmax constraint needs lo, hi, weight".into()));
            }
            let lo = parse_f64(fields[2]).map_err(CoreError::Parse)?;
            let hi = parse_f64(fields[3]).map_err(CoreError::Parse)?;
            let weight = parse_f64(fields[4]).map_err(CoreError::Parse)?;
            Ok(Constraint { space_id, kind: ConstraintKind::MinMax { lo, hi }, weight })
        }
        Some("variable") => {
            if fields.len() != 3 {
                return Err(CoreError::Parse("variable constraint needs a weight".into()));
            }
            let weight = parse_f64(fields[2]).map_err(CoreError::Parse)?;
            Ok(Constraint { space_id, kind: ConstraintKind::Variable, weight })
        }
        other => Err(CoreError::Parse(format!("unknown constraint kind {:?}", other))),
    }
}

impl CognitiveCore {
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        out.push_str(CORE_FORMAT);
        out.push('\n');
        out.push_str(&format!("robot\t{}\n", self.robot));
        out.push_str(&format!("behavior\t{}\n", self.behavior.label));
        for c in &self.behavior.constraints {
            out.push_str(&format!("bm_constraint\t{}\n", render_constraint(c)));
        }
        for label in &self.annotation.labels {
            out.push_str(&format!("label\t{}\n", label));
        }
        for c in &self.annotation.constraints {
            out.push_str(&format!("sa_constraint\t{}\n", render_constraint(c)));
        }
        for (space, clusters) in &self.linked {
            let ids: Vec<String> = clusters.iter().map(|j| j.to_string()).collect();
            out.push_str(&format!("linked\t{}\t{}\n", space, ids.join("\t")));
        }
        let s = &self.sampler;
        out.push_str(&format!(
            "sampler\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            s.particles,
            s.iterations,
            fmt_f64(s.inertia),
            fmt_f64(s.cognitive),
            fmt_f64(s.social),
            s.seed,
            s.alternates
        ));
        out
    }

    pub fn from_document(text: &str) -> Result<CognitiveCore, CoreError> {
        let mut lines = text.lines();
        if lines.next() != Some(CORE_FORMAT) {
            return Err(CoreError::Parse("bad core header".into()));
        }
        let mut robot = String::new();
        let mut behavior_label = String::new();
        let mut bm_constraints = Vec::new();
        let mut labels = BTreeSet::new();
        let mut sa_constraints = Vec::new();
        let mut linked = BTreeMap::new();
        let mut sampler = SamplerConfig::default();
        for line in lines {
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[0] {
                "robot" => robot = fields.get(1).copied().unwrap_or("").to_string(),
                "behavior" => behavior_label = fields.get(1).copied().unwrap_or("").to_string(),
                "bm_constraint" => bm_constraints.push(parse_constraint(&fields[1..])?),
                "label" => {
                    labels.insert(fields.get(1).copied().unwrap_or("").to_string());
                }
                "sa_constraint" => sa_constraints.push(parse_constraint(&fields[1..])?),
                "linked" => {
                    let space = fields.get(1).copied().unwrap_or("").to_string();
                    let ids: Result<Vec<usize>, _> = fields[2..].iter().map(|f| f.parse::<usize>()).collect();
                    linked.insert(space, ids.map_err(|_| CoreError::Parse("bad linked cluster index".into()))?);
                }
                "sampler" => {
                    if fields.len() != 8 {
                        return Err(CoreError::Parse("sampler record needs 7 fields".into()));
                    }
                    sampler = SamplerConfig {
                        particles: fields[1].parse().map_err(|_| CoreError::Parse("bad particles".into()))?,
                        iterations: fields[2].parse().map_err(|_| CoreError::Parse("bad iterations".into()))?,
                        inertia: parse_f64(fields[3]).map_err(CoreError::Parse)?,
                        cognitive: parse_f64(fields[4]).map_err(CoreError::Parse)?,
                        social: parse_f64(fields[5]).map_err(CoreError::Parse)?,
                        seed: fields[6].parse().map_err(|_| CoreError::Parse("bad seed".into()))?,
                        alternates: fields[7].parse().map_err(|_| CoreError::Parse("bad alternates".into()))?,
                    };
                }
                "" => {}
                other => return Err(CoreError::Parse(format!("unknown record {:?}", other))),
            }
        }
        let core = CognitiveCore {
            robot,
            behavior: BehaviorModel { label: behavior_label, constraints: bm_constraints },
            annotation: SemanticAnnotation { labels, constraints: sa_constraints },
            linked,
            sampler,
        };
        core.behavior.validate()?;
        core.annotation.validate()?;
        Ok(core)
    }

    pub fn save(&self, path: &Path) -> Result<(), CoreError> {
        std::fs::write(path, self.to_document()).map_err(|e| io_err(path, e))
    }

    pub fn load(path: &Path) -> Result<CognitiveCore, CoreError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        CognitiveCore::from_document(&text)
    }
}

/// Serialize a behavior-model registry document.
pub fn render_behaviors(models: &[BehaviorModel]) -> String {
    let mut out = String::new();
    out.push_str(BEHAVIORS_FORMAT);
    out.push('\n');
    for m in models {
        out.push_str(&format!("bm\t{}\n", m.label));
        for c in &m.constraints {
            out.push_str(&format!("constraint\t{}\t{}\n", m.label, render_constraint(c)));
        }
    }
    out
}

/// Parse a behavior-model registry document.
pub fn parse_behaviors(text: &str) -> Result<Vec<BehaviorModel>, CoreError> {
    let mut lines = text.lines();
    if lines.next() != Some(BEHAVIORS_FORMAT) {
        return Err(CoreError::Parse("bad behaviors header".into()));
    }
    let mut models: Vec<BehaviorModel> = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        match fields[0] {
            "bm" => models.push(BehaviorModel {
                label: fields.get(1).copied().unwrap_or("").to_string(),
                constraints: Vec::new(),
            }),
            "constraint" => {
                let label = fields.get(1).copied().unwrap_or("");
                let model = models
                    .iter_mut()
                    .find(|m| m.label == label)
                    .ok_or_else(|| CoreError::Parse(format!("constraint for unknown model {:?}", label)))?;
                model.constraints.push(parse_constraint(&fields[2..])?);
            }
            other => return Err(CoreError::Parse(format!("unknown record {:?}", other))),
        }
    }
    for m in &models {
        m.validate()?;
    }
    Ok(models)
}
