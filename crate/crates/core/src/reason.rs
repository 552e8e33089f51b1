//! Top-down reasoning: a small label ontology, semantically annotated
//! primitive tasks, sequential mission decomposition over a fixed
//! vocabulary and matching of tasks to cognitive cores and robots.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use thiserror::Error;

use crate::cores::{parse_behaviors, render_behaviors, BehaviorModel, Constraint, ConstraintKind, SemanticAnnotation};
use crate::textio::{fmt_f64, parse_f64};

#[derive(Debug, Error)]
pub enum ReasonError {
    #[error("unknown ontology term {0:?}")]
    UnknownTerm(String),
    #[error("unknown task {0:?}")]
    UnknownTask(String),
    #[error("compound task {0:?} has no decomposition method")]
    NoMethod(String),
    #[error("decomposition of {0:?} cycles")]
    CycleDetected(String),
    #[error("mission is empty")]
    EmptyMission,
    #[error("no single robot covers the mission; uncoverable tasks: {uncoverable:?}")]
    NoCapableRobot { uncoverable: Vec<String> },
    #[error("malformed document: {0}")]
    Parse(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

/// Rooted acyclic label hierarchy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ontology {
    root: String,
    /// term -> parent; the root maps to None.
    parents: BTreeMap<String, Option<String>>,
}

impl Ontology {
    pub fn new(root: &str) -> Ontology {
        let mut parents = BTreeMap::new();
        parents.insert(root.to_string(), None);
        Ontology { root: root.to_string(), parents }
    }

    /// The default desk ontology covering the planning vocabulary.
    pub fn standard() -> Ontology {
        let mut o = Ontology::new("action");
        for (term, parent) in [
            ("move", "action"),
            ("reach", "move"),
            ("navigate", "move"),
            ("reach-unconstrained", "move"),
            ("manipulate", "action"),
            ("grasp", "manipulate"),
            ("pick", "manipulate"),
            ("release", "manipulate"),
            ("perceive", "action"),
        ] {
            o.add_term(term, parent).expect("standard ontology is well formed");
        }
        o
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn contains(&self, term: &str) -> bool {
        self.parents.contains_key(term)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&String, &Option<String>)> {
        self.parents.iter()
    }

    pub fn add_term(&mut self, term: &str, parent: &str) -> Result<(), ReasonError> {
        if !self.parents.contains_key(parent) {
            return Err(ReasonError::UnknownTerm(parent.to_string()));
        }
        if self.parents.contains_key(term) {
            return Err(ReasonError::Parse(format!("term {:?} already exists", term)));
        }
        self.parents.insert(term.to_string(), Some(parent.to_string()));
        Ok(())
    }

    /// True iff `specific` equals `general` or is one of its
    /// descendants.
    pub fn subsumes(&self, general: &str, specific: &str) -> Result<bool, ReasonError> {
        if !self.parents.contains_key(general) {
            return Err(ReasonError::UnknownTerm(general.to_string()));
        }
        if !self.parents.contains_key(specific) {
            return Err(ReasonError::UnknownTerm(specific.to_string()));
        }
        let mut cursor = Some(specific.to_string());
        while let Some(term) = cursor {
            if term == general {
                return Ok(true);
            }
            cursor = self.parents.get(&term).cloned().flatten();
        }
        Ok(false)
    }

    pub fn to_document(&self) -> String {
        let mut out = String::from("ontology\t1\n");
        out.push_str(&format!("term\t{}\t-\n", self.root));
        for (term, parent) in &self.parents {
            if let Some(p) = parent {
                out.push_str(&format!("term\t{}\t{}\n", term, p));
            }
        }
        out
    }

    pub fn from_document(text: &str) -> Result<Ontology, ReasonError> {
        let mut lines = text.lines();
        if lines.next() != Some("ontology\t1") {
            return Err(ReasonError::Parse("bad ontology header".into()));
        }
        let mut records: Vec<(String, Option<String>)> = Vec::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 || fields[0] != "term" {
                return Err(ReasonError::Parse(format!("bad term record {:?}", line)));
            }
            let parent = if fields[2] == "-" { None } else { Some(fields[2].to_string()) };
            records.push((fields[1].to_string(), parent));
        }
        let roots: Vec<&(String, Option<String>)> = records.iter().filter(|(_, p)| p.is_none()).collect();
        if roots.len() != 1 {
            return Err(ReasonError::Parse(format!("expected exactly one root, found {}", roots.len())));
        }
        let root = roots[0].0.clone();
        let parents: BTreeMap<String, Option<String>> = records.into_iter().collect();
        let ontology = Ontology { root: root.clone(), parents };
        // every term must reach the root without cycling
        for term in ontology.parents.keys() {
            let mut seen = BTreeSet::new();
            let mut cursor = Some(term.clone());
            while let Some(t) = cursor {
                if !seen.insert(t.clone()) {
                    return Err(ReasonError::Parse(format!("cycle through term {:?}", t)));
                }
                if t == root {
                    break;
                }
                match ontology.parents.get(&t) {
                    Some(Some(p)) => cursor = Some(p.clone()),
                    Some(None) => break,
                    None => return Err(ReasonError::Parse(format!("term {:?} has missing parent", t))),
                }
            }
        }
        Ok(ontology)
    }

    pub fn save(&self, path: &Path) -> Result<(), ReasonError> {
        std::fs::write(path, self.to_document()).map_err(|e| ReasonError::Io(format!("{}: {}", path.display(), e)))
    }

    pub fn load(path: &Path) -> Result<Ontology, ReasonError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ReasonError::Io(format!("{}: {}", path.display(), e)))?;
        Ontology::from_document(&text)
    }
}

/// A primitive task paired with its semantic annotation.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnotatedTask {
    pub name: String,
    pub annotation: SemanticAnnotation,
}

/// The planning vocabulary: primitive tasks, compound tasks with
/// ordered decomposition methods, and the annotation mapping.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanningVocabulary {
    pub primitives: BTreeSet<String>,
    /// compound -> ordered list of methods, each an ordered task list.
    pub compounds: BTreeMap<String, Vec<Vec<String>>>,
    /// task -> annotation; tasks without an entry default to their name
    /// as the single label.
    pub annotations: BTreeMap<String, SemanticAnnotation>,
}

impl PlanningVocabulary {
    /// The six predefined primitive actions.
    pub fn standard() -> PlanningVocabulary {
        let primitives: BTreeSet<String> =
            ["grasp", "navigate", "perceive", "pick", "reach", "release"].map(String::from).into();
        PlanningVocabulary { primitives, compounds: BTreeMap::new(), annotations: BTreeMap::new() }
    }

    pub fn is_primitive(&self, task: &str) -> bool {
        self.primitives.contains(task)
    }

    pub fn annotation_of(&self, task: &str) -> SemanticAnnotation {
        self.annotations.get(task).cloned().unwrap_or_else(|| SemanticAnnotation {
            labels: BTreeSet::from([task.to_string()]),
            constraints: Vec::new(),
        })
    }

    pub fn annotated(&self, task: &str) -> Result<AnnotatedTask, ReasonError> {
        if !self.is_primitive(task) {
            return Err(ReasonError::UnknownTask(task.to_string()));
        }
        Ok(AnnotatedTask { name: task.to_string(), annotation: self.annotation_of(task) })
    }

    pub fn to_document(&self) -> String {
        let mut out = String::from("vocabulary\t1\n");
        for p in &self.primitives {
            out.push_str(&format!("primitive\t{}\n", p));
        }
        for (c, methods) in &self.compounds {
            out.push_str(&format!("compound\t{}\n", c));
            for m in methods {
                out.push_str(&format!("method\t{}\t{}\n", c, m.join("\t")));
            }
        }
        for (task, sa) in &self.annotations {
            let labels: Vec<&str> = sa.labels.iter().map(String::as_str).collect();
            out.push_str(&format!("task_labels\t{}\t{}\n", task, labels.join("\t")));
            for c in &sa.constraints {
                match c.kind {
                    ConstraintKind::MinMax { lo, hi } => out.push_str(&format!(
                        "task_constraint\t{}\t{}\tminmax\t{}\t{}\t{}\n",
                        task,
                        c.space_id,
                        fmt_f64(lo),
                        fmt_f64(hi),
                        fmt_f64(c.weight)
                    )),
                    ConstraintKind::Variable => out.push_str(&format!(
                        "task_constraint\t{}\t{}\tvariable\t{}\n",
                        task,
                        c.space_id,
                        fmt_f64(c.weight)
                    )),
                }
            }
        }
        out
    }

    pub fn from_document(text: &str) -> Result<PlanningVocabulary, ReasonError> {
        let mut lines = text.lines();
        if lines.next() != Some("vocabulary\t1") {
            return Err(ReasonError::Parse("bad vocabulary header".into()));
        }
        let mut vocab = PlanningVocabulary {
            primitives: BTreeSet::new(),
            compounds: BTreeMap::new(),
            annotations: BTreeMap::new(),
        };
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[0] {
                "primitive" => {
                    vocab.primitives.insert(fields.get(1).copied().unwrap_or("").to_string());
                }
                "compound" => {
                    vocab.compounds.entry(fields.get(1).copied().unwrap_or("").to_string()).or_default();
                }
                "method" => {
                    let name = fields.get(1).copied().unwrap_or("").to_string();
                    let steps: Vec<String> = fields[2..].iter().map(|s| s.to_string()).collect();
                    if steps.is_empty() {
                        return Err(ReasonError::Parse(format!("method for {:?} is empty", name)));
                    }
                    vocab.compounds.entry(name).or_default().push(steps);
                }
                "task_labels" => {
                    let task = fields.get(1).copied().unwrap_or("").to_string();
                    let labels: BTreeSet<String> = fields[2..].iter().map(|s| s.to_string()).collect();
                    let entry = vocab.annotations.entry(task).or_insert_with(|| SemanticAnnotation {
                        labels: BTreeSet::new(),
                        constraints: Vec::new(),
                    });
                    entry.labels.extend(labels);
                }
                "task_constraint" => {
                    let task = fields.get(1).copied().unwrap_or("").to_string();
                    let space_id = fields.get(2).copied().unwrap_or("").to_string();
                    let kind = match fields.get(3).copied() {
                        Some("minmax") => {
                            let lo = parse_f64(fields.get(4).copied().unwrap_or("")).map_err(ReasonError::Parse)?;
                            let hi = parse_f64(fields.get(5).copied().unwrap_or("")).map_err(ReasonError::Parse)?;
                            ConstraintKind::MinMax { lo, hi }
                        }
                        Some("variable") => ConstraintKind::Variable,
                        other => return Err(ReasonError::Parse(format!("unknown constraint kind {:?}", other))),
                    };
                    let weight_field = match kind {
                        ConstraintKind::MinMax { .. } => fields.get(6),
                        ConstraintKind::Variable => fields.get(4),
                    };
                    let weight = parse_f64(weight_field.copied().unwrap_or("1.0")).map_err(ReasonError::Parse)?;
                    let entry = vocab.annotations.entry(task.clone()).or_insert_with(|| SemanticAnnotation {
                        labels: BTreeSet::from([task.clone()]),
                        constraints: Vec::new(),
                    });
                    entry.constraints.push(Constraint { space_id, kind, weight });
                }
                other => return Err(ReasonError::Parse(format!("unknown record {:?}", other))),
            }
        }
        // methods must terminate in known tasks
        for (c, methods) in &vocab.compounds {
            if methods.is_empty() {
                return Err(ReasonError::NoMethod(c.clone()));
            }
            for m in methods {
                for step in m {
                    if !vocab.primitives.contains(step) && !vocab.compounds.contains_key(step) {
                        return Err(ReasonError::UnknownTask(step.clone()));
                    }
                }
            }
        }
        Ok(vocab)
    }

    pub fn save(&self, path: &Path) -> Result<(), ReasonError> {
        std::fs::write(path, self.to_document()).map_err(|e| ReasonError::Io(format!("{}: {}", path.display(), e)))
    }

    pub fn load(path: &Path) -> Result<PlanningVocabulary, ReasonError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ReasonError::Io(format!("{}: {}", path.display(), e)))?;
        PlanningVocabulary::from_document(&text)
    }
}

/// An ordered list of task names (primitive or compound).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mission {
    pub tasks: Vec<String>,
}

impl Mission {
    pub fn from_document(text: &str) -> Mission {
        Mission {
            tasks: text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(String::from)
                .collect(),
        }
    }

    pub fn to_document(&self) -> String {
        let mut out = self.tasks.join("\n");
        out.push('\n');
        out
    }
}

/// Expand one task into all primitive sequences (depth-first over
/// method choices, cycle guarded).
fn expand_task(
    vocab: &PlanningVocabulary,
    task: &str,
    in_progress: &mut Vec<String>,
) -> Result<Vec<Vec<String>>, ReasonError> {
    if vocab.is_primitive(task) {
        return Ok(vec![vec![task.to_string()]]);
    }
    let methods = vocab.compounds.get(task).ok_or_else(|| ReasonError::UnknownTask(task.to_string()))?;
    if methods.is_empty() {
        return Err(ReasonError::NoMethod(task.to_string()));
    }
    if in_progress.iter().any(|t| t == task) {
        return Err(ReasonError::CycleDetected(task.to_string()));
    }
    in_progress.push(task.to_string());
    let mut out = Vec::new();
    for method in methods {
        let mut partials: Vec<Vec<String>> = vec![Vec::new()];
        for step in method {
            let sub = expand_task(vocab, step, in_progress)?;
            let mut next = Vec::with_capacity(partials.len() * sub.len());
            for p in &partials {
                for s in &sub {
                    let mut seq = p.clone();
                    seq.extend(s.iter().cloned());
                    next.push(seq);
                }
            }
            partials = next;
        }
        out.extend(partials);
    }
    in_progress.pop();
    Ok(out)
}

/// All primitive-task decompositions of a mission, in deterministic
/// (method index) order.
pub fn decompose(vocab: &PlanningVocabulary, mission: &Mission) -> Result<Vec<Vec<String>>, ReasonError> {
    if mission.tasks.is_empty() {
        return Err(ReasonError::EmptyMission);
    }
    let mut sequences: Vec<Vec<String>> = vec![Vec::new()];
    for task in &mission.tasks {
        let mut in_progress = Vec::new();
        let expansions = expand_task(vocab, task, &mut in_progress)?;
        let mut next = Vec::with_capacity(sequences.len() * expansions.len());
        for s in &sequences {
            for e in &expansions {
                let mut seq = s.clone();
                seq.extend(e.iter().cloned());
                next.push(seq);
            }
        }
        sequences = next;
    }
    Ok(sequences)
}

/// A cognitive core as seen by the reasoner: its robot, name and
/// annotation.
#[derive(Clone, Debug, PartialEq)]
pub struct CoreCatalogEntry {
    pub robot: String,
    pub core_name: String,
    pub annotation: SemanticAnnotation,
}

/// Matching policy. The subsuming mode accepts a core whose label is a
/// descendant of the task label (task "move" accepts core "reach");
/// exact mode requires label equality.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatchMode {
    Subsuming,
    Exact,
}

fn label_matches(ontology: &Ontology, task_label: &str, core_label: &str, mode: MatchMode) -> Result<bool, ReasonError> {
    if task_label == core_label {
        return Ok(true);
    }
    if mode == MatchMode::Exact {
        return Ok(false);
    }
    if !ontology.contains(task_label) {
        return Err(ReasonError::UnknownTerm(task_label.to_string()));
    }
    if !ontology.contains(core_label) {
        // robot-specific labels outside the ontology only match exactly
        return Ok(false);
    }
    ontology.subsumes(task_label, core_label)
}

fn ranges_intersect(task: &Constraint, core: &Constraint) -> bool {
    match (&task.kind, &core.kind) {
        (ConstraintKind::MinMax { lo: a_lo, hi: a_hi }, ConstraintKind::MinMax { lo: b_lo, hi: b_hi }) => {
            a_lo.max(*b_lo) < a_hi.min(*b_hi)
        }
        _ => true,
    }
}

/// Cores whose annotations cover every label of the task and whose
/// numeric ranges intersect the task's on shared feature spaces.
/// Returns indices into the catalog, in catalog order.
pub fn match_cores(
    task: &AnnotatedTask,
    catalog: &[CoreCatalogEntry],
    ontology: &Ontology,
    mode: MatchMode,
) -> Result<Vec<usize>, ReasonError> {
    for label in &task.annotation.labels {
        if !ontology.contains(label) {
            return Err(ReasonError::UnknownTerm(label.clone()));
        }
    }
    let mut out = Vec::new();
    'entries: for (i, entry) in catalog.iter().enumerate() {
        for task_label in &task.annotation.labels {
            let mut covered = false;
            for core_label in &entry.annotation.labels {
                if label_matches(ontology, task_label, core_label, mode)? {
                    covered = true;
                    break;
                }
            }
            if !covered {
                continue 'entries;
            }
        }
        for tc in &task.annotation.constraints {
            for cc in &entry.annotation.constraints {
                if tc.space_id == cc.space_id && !ranges_intersect(tc, cc) {
                    continue 'entries;
                }
            }
        }
        out.push(i);
    }
    Ok(out)
}

/// A mission solution: one robot and a core assignment per primitive
/// task of the chosen decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub robot: String,
    pub assignments: Vec<(String, String)>,
}

/// Find the first decomposition for which a single robot's cores cover
/// every primitive task. Robots are tried in name order,
/// decompositions in method order.
pub fn solve_mission(
    mission: &Mission,
    vocab: &PlanningVocabulary,
    catalog: &[CoreCatalogEntry],
    ontology: &Ontology,
    mode: MatchMode,
) -> Result<Solution, ReasonError> {
    let decompositions = decompose(vocab, mission)?;
    let mut robots: Vec<&str> = catalog.iter().map(|e| e.robot.as_str()).collect();
    robots.sort();
    robots.dedup();

    for tasks in &decompositions {
        for robot in &robots {
            let mut assignments = Vec::with_capacity(tasks.len());
            let mut covered = true;
            for task_name in tasks {
                let task = vocab.annotated(task_name)?;
                let matches = match_cores(&task, catalog, ontology, mode)?;
                let pick = matches.iter().find(|&&i| catalog[i].robot == *robot);
                match pick {
                    Some(&i) => assignments.push((task_name.clone(), catalog[i].core_name.clone())),
                    None => {
                        covered = false;
                        break;
                    }
                }
            }
            if covered {
                return Ok(Solution { robot: robot.to_string(), assignments });
            }
        }
    }

    // diagnostic: tasks of the first decomposition no robot can cover
    let mut uncoverable = Vec::new();
    if let Some(tasks) = decompositions.first() {
        for task_name in tasks {
            let task = vocab.annotated(task_name)?;
            if match_cores(&task, catalog, ontology, mode)?.is_empty() {
                uncoverable.push(task_name.clone());
            }
        }
    }
    uncoverable.dedup();
    Err(ReasonError::NoCapableRobot { uncoverable })
}

/// Behavior registry helpers shared with the CLI project store.
pub fn behaviors_to_document(models: &[BehaviorModel]) -> String {
    render_behaviors(models)
}

pub fn behaviors_from_document(text: &str) -> Result<Vec<BehaviorModel>, ReasonError> {
    parse_behaviors(text).map_err(|e| ReasonError::Parse(e.to_string()))
}
