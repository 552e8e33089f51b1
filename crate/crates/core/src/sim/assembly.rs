//! Derive an executable [`RobotSpec`] from an assembly component model.
//!
//! Parts carry flat string annotation properties (see [`prop`]). The
//! traversal starts at the root part and follows interface connections
//! outward in edge-creation order, descending into composite parts
//! through their interface aliases. Joint order in the resulting spec
//! is exactly this traversal order.

use std::collections::{BTreeMap, BTreeSet};

use crate::graph::{Domain, EntityKind, PropertyGraph, RelationKind};

use super::{Joint, Link, RobotSpec, SimError, WheelSide, WheeledBase};

/// Kinematic annotation property keys understood by the traversal.
pub mod prop {
    /// Revolute joint axis: `x`, `y`, `z` or a comma-separated triple.
    pub const AXIS: &str = "axis";
    /// Link length in meters.
    pub const LENGTH_M: &str = "length_m";
    pub const LIMIT_LO_RAD: &str = "limit_lo_rad";
    pub const LIMIT_HI_RAD: &str = "limit_hi_rad";
    pub const VEL_LIMIT_RAD_S: &str = "vel_limit_rad_s";
    /// Marks a wheel part.
    pub const WHEEL_RADIUS_M: &str = "wheel_radius_m";
    /// Marks the base platform part.
    pub const TRACK_WIDTH_M: &str = "track_width_m";
    /// Which side of the base a wheel drives: `left` or `right`.
    pub const SIDE: &str = "side";
    /// Marks the traversal root part of a composition.
    pub const ROOT: &str = "root";
}

struct Builder<'g> {
    graph: &'g PropertyGraph,
    joints: Vec<Joint>,
    links: Vec<Link>,
    track_width: Option<f64>,
    wheel_radius: Option<f64>,
    last_link: Option<String>,
}

/// One scope = the interior of a component model: its parts, the
/// connections among their interfaces and the aliases to the model's
/// exterior interfaces.
struct Scope {
    /// interface id -> owning part id
    owner: BTreeMap<String, String>,
    /// interface id -> connected peer interfaces, in edge order
    adjacency: BTreeMap<String, Vec<(String, String)>>,
    /// inner interface id -> exterior interface label
    exits: BTreeMap<String, String>,
    parts: Vec<String>,
}

pub fn robot_from_assembly(graph: &PropertyGraph, assembly_model: &str) -> Result<RobotSpec, SimError> {
    let model = graph
        .vertex(assembly_model)
        .filter(|v| v.kind == EntityKind::ComponentModel)
        .ok_or_else(|| crate::graph::GraphError::UnknownModel(assembly_model.to_string()))?;
    if model.domain() != Some(Domain::Assembly) {
        return Err(SimError::InvalidSpec(format!(
            "model {:?} is not in the Assembly domain",
            model.label()
        )));
    }
    let mut builder = Builder {
        graph,
        joints: Vec::new(),
        links: Vec::new(),
        track_width: None,
        wheel_radius: None,
        last_link: None,
    };
    builder.walk_scope(assembly_model, "", None, None, None)?;

    let base = match (builder.track_width, builder.wheel_radius) {
        (Some(track_width), Some(wheel_radius)) => Some(WheeledBase {
            wheel_radius,
            track_width,
            wheel_count: builder.joints.iter().filter(|j| j.wheel).count(),
        }),
        (Some(_), None) => {
            return Err(SimError::MissingAnnotation {
                part: model.label().to_string(),
                what: "a base platform needs at least one wheel part".to_string(),
            })
        }
        (None, Some(_)) => {
            return Err(SimError::MissingAnnotation {
                part: model.label().to_string(),
                what: format!("wheels need a platform part with {}", prop::TRACK_WIDTH_M),
            })
        }
        (None, None) => None,
    };

    let spec = RobotSpec {
        name: model.label().to_string(),
        joints: builder.joints,
        links: builder.links,
        base,
        end_effector: builder.last_link.unwrap_or_default(),
    };
    spec.validate()?;
    Ok(spec)
}

impl<'g> Builder<'g> {
    fn build_scope(&self, scope_model: &str) -> Scope {
        let parts = self.graph.parts_of(scope_model);
        let part_set: BTreeSet<&String> = parts.iter().collect();
        let mut owner = BTreeMap::new();
        for part in &parts {
            for iface in self.graph.interfaces_of(part) {
                owner.insert(iface, part.clone());
            }
        }
        let mut adjacency: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
        let mut exterior: BTreeMap<String, String> = BTreeMap::new();
        for iface in self.graph.interfaces_of(scope_model) {
            let label = self.graph.vertex(&iface).map(|v| v.label().to_string()).unwrap_or_default();
            exterior.insert(iface, label);
        }
        let mut exits = BTreeMap::new();
        let mut edges: Vec<_> = self.graph.edges().collect();
        edges.sort_by(|a, b| a.id.cmp(&b.id));
        for e in edges {
            match e.kind {
                RelationKind::ConnectedTo => {
                    if owner.contains_key(&e.source) && owner.contains_key(&e.target) {
                        let src_part = &owner[&e.source];
                        let dst_part = &owner[&e.target];
                        if part_set.contains(src_part) && part_set.contains(dst_part) {
                            adjacency
                                .entry(e.source.clone())
                                .or_default()
                                .push((e.id.clone(), e.target.clone()));
                            adjacency
                                .entry(e.target.clone())
                                .or_default()
                                .push((e.id.clone(), e.source.clone()));
                        }
                    }
                }
                RelationKind::AliasOf => {
                    if owner.contains_key(&e.source) {
                        if let Some(label) = exterior.get(&e.target) {
                            exits.insert(e.source.clone(), label.clone());
                        }
                    }
                }
                _ => {}
            }
        }
        Scope { owner, adjacency, exits, parts }
    }

    /// Walk the interior of `scope_model`. `start` names the inner part
    /// and entry interface when entering through an alias; `None` picks
    /// the root-marked part. Returns exterior-label -> parent joint for
    /// every alias exit reached.
    fn walk_scope(
        &mut self,
        scope_model: &str,
        path: &str,
        start: Option<(String, String)>,
        _entry_label: Option<&str>,
        parent_in: Option<usize>,
    ) -> Result<BTreeMap<String, Option<usize>>, SimError> {
        let scope = self.build_scope(scope_model);
        if scope.parts.is_empty() {
            let label = self.graph.vertex(scope_model).map(|v| v.label().to_string()).unwrap_or_default();
            return Err(SimError::MissingAnnotation {
                part: label,
                what: "assembly has no composed parts".to_string(),
            });
        }
        let (start_part, entry_iface) = match start {
            Some((part, iface)) => (part, Some(iface)),
            None => {
                let root = scope
                    .parts
                    .iter()
                    .find(|p| self.graph.vertex(p).and_then(|v| v.property(prop::ROOT)) == Some("true"))
                    .unwrap_or(&scope.parts[0])
                    .clone();
                (root, None)
            }
        };
        let mut visited = BTreeSet::new();
        let mut exits = BTreeMap::new();
        self.visit_part(&scope, scope_model, path, &start_part, entry_iface, parent_in, &mut visited, &mut exits)?;
        for part in &scope.parts {
            if !visited.contains(part) {
                return Err(SimError::NonTreeStructure(format!(
                    "part {:?} is not connected to the traversal root",
                    self.part_label(part)
                )));
            }
        }
        Ok(exits)
    }

    #[allow(clippy::too_many_arguments)]
    fn visit_part(
        &mut self,
        scope: &Scope,
        scope_model: &str,
        path: &str,
        part: &str,
        entry_iface: Option<String>,
        parent_in: Option<usize>,
        visited: &mut BTreeSet<String>,
        exits: &mut BTreeMap<String, Option<usize>>,
    ) -> Result<(), SimError> {
        if !visited.insert(part.to_string()) {
            return Err(SimError::NonTreeStructure(format!(
                "connection loop through part {:?}",
                self.part_label(part)
            )));
        }
        let label = self.part_label(part);
        let name = if path.is_empty() { label.clone() } else { format!("{}/{}", path, label) };

        // A part is composite when its own model has composed parts.
        let part_model = self.graph.component_model_of(part);
        let composite = part_model
            .as_deref()
            .map(|m| !self.graph.parts_of(m).is_empty())
            .unwrap_or(false);

        let mut exit_parents: BTreeMap<String, Option<usize>> = BTreeMap::new();
        let parent_after = if composite {
            let inner_model = part_model.as_deref().unwrap();
            let inner_start = match &entry_iface {
                Some(iface) => {
                    let entry_label = self.iface_label(iface);
                    Some(self.resolve_alias_entry(inner_model, &entry_label, &label)?)
                }
                None => None,
            };
            let inner_exits = self.walk_scope(inner_model, &name, inner_start, None, parent_in)?;
            exit_parents = inner_exits;
            // continuation without a matching exit attaches at the entry side
            parent_in
        } else {
            self.emit_atomic(part, &name, parent_in)?
        };

        // follow remaining connections, in edge order
        let mut outgoing: Vec<(String, String, String)> = Vec::new();
        for iface in self.graph.interfaces_of(part) {
            if Some(&iface) == entry_iface.as_ref() {
                continue;
            }
            if let Some(exit_label) = scope.exits.get(&iface) {
                let p = if composite {
                    exit_parents.get(exit_label.as_str()).copied().unwrap_or(parent_after)
                } else {
                    parent_after
                };
                exits.insert(exit_label.clone(), p);
                continue;
            }
            if let Some(peers) = scope.adjacency.get(&iface) {
                for (edge_id, peer) in peers {
                    outgoing.push((edge_id.clone(), iface.clone(), peer.clone()));
                }
            }
        }
        outgoing.sort();
        for (_, iface, peer) in outgoing {
            let peer_part = scope.owner[&peer].clone();
            if visited.contains(&peer_part) {
                // seeing the entry edge back from the peer is fine; a
                // second distinct route is a loop
                if entry_iface.as_deref() == Some(iface.as_str()) {
                    continue;
                }
                return Err(SimError::NonTreeStructure(format!(
                    "connection loop through part {:?}",
                    self.part_label(&peer_part)
                )));
            }
            let parent = if composite {
                exit_parents.get(&self.iface_label(&iface)).copied().unwrap_or(parent_after)
            } else {
                parent_after
            };
            self.visit_part(scope, scope_model, path, &peer_part, Some(peer), parent, visited, exits)?;
        }
        Ok(())
    }

    /// Map an exterior interface label of `inner_model` to the inner
    /// (part, interface) it aliases.
    fn resolve_alias_entry(
        &self,
        inner_model: &str,
        entry_label: &str,
        part_label: &str,
    ) -> Result<(String, String), SimError> {
        let exterior = self
            .graph
            .interfaces_of(inner_model)
            .into_iter()
            .find(|i| self.iface_label(i) == entry_label)
            .ok_or_else(|| SimError::MissingAnnotation {
                part: part_label.to_string(),
                what: format!("composite model exposes no interface labelled {:?}", entry_label),
            })?;
        let alias = self
            .graph
            .edges()
            .find(|e| e.kind == RelationKind::AliasOf && e.target == exterior)
            .ok_or_else(|| SimError::MissingAnnotation {
                part: part_label.to_string(),
                what: format!("exterior interface {:?} has no alias into the composition", entry_label),
            })?;
        let inner_iface = alias.source.clone();
        let owner = self
            .graph
            .edges()
            .find(|e| {
                matches!(e.kind, RelationKind::ComponentHasInterface) && e.target == inner_iface
            })
            .map(|e| e.source.clone())
            .ok_or_else(|| SimError::MissingAnnotation {
                part: part_label.to_string(),
                what: format!("alias of {:?} does not land on a part interface", entry_label),
            })?;
        Ok((owner, inner_iface))
    }

    /// Emit the kinematic element of an atomic part. Returns the parent
    /// joint index for whatever attaches after this part.
    fn emit_atomic(&mut self, part: &str, name: &str, parent_in: Option<usize>) -> Result<Option<usize>, SimError> {
        let vertex = self.graph.vertex(part).expect("part vertex");
        let get = |key: &str| vertex.property(key).map(str::to_string);

        if let Some(tw) = get(prop::TRACK_WIDTH_M) {
            self.track_width = Some(parse_num(&tw, name, prop::TRACK_WIDTH_M)?);
            return Ok(parent_in);
        }
        if let Some(r) = get(prop::WHEEL_RADIUS_M) {
            let radius = parse_num(&r, name, prop::WHEEL_RADIUS_M)?;
            if self.wheel_radius.is_none() {
                self.wheel_radius = Some(radius);
            }
            let vel = parse_num(
                &get(prop::VEL_LIMIT_RAD_S).ok_or_else(|| missing(name, prop::VEL_LIMIT_RAD_S))?,
                name,
                prop::VEL_LIMIT_RAD_S,
            )?;
            let side = match get(prop::SIDE).as_deref() {
                Some("left") => WheelSide::Left,
                Some("right") => WheelSide::Right,
                _ => return Err(missing(name, "side (left|right)")),
            };
            self.joints.push(Joint {
                name: name.to_string(),
                axis: [0.0, 1.0, 0.0],
                limits: None,
                vel_limit: vel,
                wheel: true,
                side: Some(side),
            });
            return Ok(parent_in);
        }
        if let Some(axis_s) = get(prop::AXIS) {
            let axis = parse_axis(&axis_s, name)?;
            let lo = parse_num(
                &get(prop::LIMIT_LO_RAD).ok_or_else(|| missing(name, prop::LIMIT_LO_RAD))?,
                name,
                prop::LIMIT_LO_RAD,
            )?;
            let hi = parse_num(
                &get(prop::LIMIT_HI_RAD).ok_or_else(|| missing(name, prop::LIMIT_HI_RAD))?,
                name,
                prop::LIMIT_HI_RAD,
            )?;
            let vel = parse_num(
                &get(prop::VEL_LIMIT_RAD_S).ok_or_else(|| missing(name, prop::VEL_LIMIT_RAD_S))?,
                name,
                prop::VEL_LIMIT_RAD_S,
            )?;
            self.joints.push(Joint {
                name: name.to_string(),
                axis,
                limits: Some((lo, hi)),
                vel_limit: vel,
                wheel: false,
                side: None,
            });
            return Ok(Some(self.joints.len() - 1));
        }
        if let Some(len) = get(prop::LENGTH_M) {
            let length = parse_num(&len, name, prop::LENGTH_M)?;
            self.links.push(Link { name: name.to_string(), length, parent_joint: parent_in });
            self.last_link = Some(name.to_string());
            return Ok(parent_in);
        }
        Err(missing(name, "any of axis / length_m / wheel_radius_m / track_width_m"))
    }

    fn part_label(&self, part: &str) -> String {
        self.graph.vertex(part).map(|v| v.label().to_string()).unwrap_or_else(|| part.to_string())
    }

    fn iface_label(&self, iface: &str) -> String {
        self.graph.vertex(iface).map(|v| v.label().to_string()).unwrap_or_default()
    }
}

fn missing(part: &str, what: &str) -> SimError {
    SimError::MissingAnnotation { part: part.to_string(), what: what.to_string() }
}

fn parse_num(s: &str, part: &str, key: &str) -> Result<f64, SimError> {
    s.parse::<f64>().map_err(|_| SimError::MissingAnnotation {
        part: part.to_string(),
        what: format!("{} is not a number: {:?}", key, s),
    })
}

fn parse_axis(s: &str, part: &str) -> Result<[f64; 3], SimError> {
    match s {
        "x" => return Ok([1.0, 0.0, 0.0]),
        "y" => return Ok([0.0, 1.0, 0.0]),
        "z" => return Ok([0.0, 0.0, 1.0]),
        _ => {}
    }
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() == 3 {
        let mut v = [0.0; 3];
        for (i, p) in parts.iter().enumerate() {
            v[i] = parse_num(p.trim(), part, prop::AXIS)?;
        }
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm > 0.0 {
            return Ok([v[0] / norm, v[1] / norm, v[2] / norm]);
        }
    }
    Err(SimError::MissingAnnotation {
        part: part.to_string(),
        what: format!("axis is not x|y|z or a numeric triple: {:?}", s),
    })
}
