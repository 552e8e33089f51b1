//! Typed property graph for modelling robot composition.
//!
//! Vertices are component models, components, interface models and
//! interfaces; edges are one of eight relation kinds, each with a
//! declared cardinality that is enforced on every mutation. Mutations
//! are validate-then-commit: a failed operator leaves the graph
//! untouched.
//!
//! The graph value is plain data (`Send + Sync`); concurrent readers
//! are free, a writer needs exclusive access (`&mut`).

mod doc;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

/// Domain a component belongs to. Only [`Domain::Assembly`] may compose
/// components across domains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Domain {
    Software,
    Computational,
    Mechanics,
    Electronics,
    Assembly,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Software => "Software",
            Domain::Computational => "Computational",
            Domain::Mechanics => "Mechanics",
            Domain::Electronics => "Electronics",
            Domain::Assembly => "Assembly",
        }
    }

    pub fn parse(s: &str) -> Option<Domain> {
        Some(match s {
            "Software" => Domain::Software,
            "Computational" => Domain::Computational,
            "Mechanics" => Domain::Mechanics,
            "Electronics" => Domain::Electronics,
            "Assembly" => Domain::Assembly,
            _ => return None,
        })
    }
}

/// What a vertex represents. Every vertex carries exactly one kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityKind {
    ComponentModel,
    Component,
    InterfaceModel,
    Interface,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::ComponentModel => "ComponentModel",
            EntityKind::Component => "Component",
            EntityKind::InterfaceModel => "InterfaceModel",
            EntityKind::Interface => "Interface",
        }
    }

    pub fn parse(s: &str) -> Option<EntityKind> {
        Some(match s {
            "ComponentModel" => EntityKind::ComponentModel,
            "Component" => EntityKind::Component,
            "InterfaceModel" => EntityKind::InterfaceModel,
            "Interface" => EntityKind::Interface,
            _ => return None,
        })
    }
}

/// Declared cardinality of a relation kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cardinality {
    /// N:1 — each source vertex has at most one outgoing edge.
    ManyToOne,
    /// 1:N — each target vertex has at most one incoming edge.
    OneToMany,
    /// M:N — unrestricted; parallel edges allowed.
    ManyToMany,
    /// 1:1 — unique outgoing on the source and incoming on the target.
    OneToOne,
}

/// The eight relation kinds between entities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationKind {
    InstanceOfComponentModel,
    InstanceOfInterfaceModel,
    SubclassOf,
    ModelHasInterface,
    ComponentHasInterface,
    PartOfComposition,
    ConnectedTo,
    AliasOf,
}

impl RelationKind {
    pub const ALL: [RelationKind; 8] = [
        RelationKind::InstanceOfComponentModel,
        RelationKind::InstanceOfInterfaceModel,
        RelationKind::SubclassOf,
        RelationKind::ModelHasInterface,
        RelationKind::ComponentHasInterface,
        RelationKind::PartOfComposition,
        RelationKind::ConnectedTo,
        RelationKind::AliasOf,
    ];

    /// Declared cardinality of this relation.
    pub fn cardinality(self) -> Cardinality {
        match self {
            RelationKind::InstanceOfComponentModel => Cardinality::ManyToOne,
            RelationKind::InstanceOfInterfaceModel => Cardinality::ManyToOne,
            RelationKind::SubclassOf => Cardinality::ManyToOne,
            RelationKind::ModelHasInterface => Cardinality::OneToMany,
            RelationKind::ComponentHasInterface => Cardinality::OneToMany,
            RelationKind::PartOfComposition => Cardinality::ManyToOne,
            RelationKind::ConnectedTo => Cardinality::ManyToMany,
            RelationKind::AliasOf => Cardinality::OneToOne,
        }
    }

    /// Entity kinds required on (source, target).
    pub fn signature(self) -> (EntityKind, EntityKind) {
        use EntityKind::*;
        match self {
            RelationKind::InstanceOfComponentModel => (Component, ComponentModel),
            RelationKind::InstanceOfInterfaceModel => (Interface, InterfaceModel),
            RelationKind::SubclassOf => (ComponentModel, ComponentModel),
            RelationKind::ModelHasInterface => (ComponentModel, Interface),
            RelationKind::ComponentHasInterface => (Component, Interface),
            RelationKind::PartOfComposition => (Component, ComponentModel),
            RelationKind::ConnectedTo => (Interface, Interface),
            RelationKind::AliasOf => (Interface, Interface),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::InstanceOfComponentModel => "InstanceOfComponentModel",
            RelationKind::InstanceOfInterfaceModel => "InstanceOfInterfaceModel",
            RelationKind::SubclassOf => "SubclassOf",
            RelationKind::ModelHasInterface => "ModelHasInterface",
            RelationKind::ComponentHasInterface => "ComponentHasInterface",
            RelationKind::PartOfComposition => "PartOfComposition",
            RelationKind::ConnectedTo => "ConnectedTo",
            RelationKind::AliasOf => "AliasOf",
        }
    }

    pub fn parse(s: &str) -> Option<RelationKind> {
        RelationKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

/// Errors raised by graph operators and the persistence layer.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("entity name must not be empty")]
    EmptyName,
    #[error("a {kind:?} named {name:?} already exists in domain {domain:?}")]
    DuplicateName { kind: EntityKind, domain: Domain, name: String },
    #[error("unknown model id {0:?}")]
    UnknownModel(String),
    #[error("unknown interface id {0:?}")]
    UnknownInterface(String),
    #[error("unknown entity id {0:?}")]
    UnknownEntity(String),
    #[error("vertex {id:?} is a {found:?}, expected {expected:?}")]
    KindMismatch { id: String, expected: EntityKind, found: EntityKind },
    #[error("cardinality of {kind:?} ({card:?}) violated at vertex {vertex:?}")]
    CardinalityViolation { kind: RelationKind, card: Cardinality, vertex: String },
    #[error("interfaces {a:?} and {b:?} have incompatible interface models")]
    IncompatibleInterfaces { a: String, b: String },
    #[error("invalid property key {0:?}")]
    InvalidPropertyKey(String),
    #[error("i/o failure: {0}")]
    IoFailure(String),
    #[error("schema violation at {element:?}: {reason}")]
    SchemaViolation { element: String, reason: String },
}

/// A labelled vertex. The `label` property is reserved and always
/// present and non-empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub id: String,
    pub kind: EntityKind,
    pub properties: BTreeMap<String, String>,
}

impl Vertex {
    pub fn label(&self) -> &str {
        self.properties.get("label").map(String::as_str).unwrap_or("")
    }

    pub fn property(&self, key: &str) -> Option<&str> {
        self.properties.get(key).map(String::as_str)
    }

    /// Domain, when this vertex carries one (models and their instances do).
    pub fn domain(&self) -> Option<Domain> {
        self.property("domain").and_then(Domain::parse)
    }
}

/// A labelled, typed edge between two vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub id: String,
    pub source: String,
    pub target: String,
    pub kind: RelationKind,
    pub properties: BTreeMap<String, String>,
}

impl Edge {
    pub fn label(&self) -> &str {
        self.properties.get("label").map(String::as_str).unwrap_or("")
    }
}

/// The reserved property key set; only `label` is predefined.
pub const RESERVED_KEYS: &[&str] = &["label"];

/// Typed property graph with relation-kind cardinality enforcement and
/// an in-graph interface compatibility registry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertyGraph {
    prefix: String,
    next_vertex: u64,
    next_edge: u64,
    vertices: BTreeMap<String, Vertex>,
    edges: BTreeMap<String, Edge>,
    /// Unordered pairs of interface-model ids declared compatible, stored sorted.
    compatible: BTreeSet<(String, String)>,
}

impl Default for PropertyGraph {
    fn default() -> Self {
        Self::new()
    }
}

impl PropertyGraph {
    pub fn new() -> Self {
        Self::with_prefix("g")
    }

    /// A graph whose ids carry the given prefix, so ids from different
    /// graphs never collide.
    pub fn with_prefix(prefix: &str) -> Self {
        PropertyGraph {
            prefix: prefix.to_string(),
            next_vertex: 0,
            next_edge: 0,
            vertices: BTreeMap::new(),
            edges: BTreeMap::new(),
            compatible: BTreeSet::new(),
        }
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    pub fn vertices(&self) -> impl Iterator<Item = &Vertex> {
        self.vertices.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn vertex(&self, id: &str) -> Option<&Vertex> {
        self.vertices.get(id)
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edges.get(id)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn count_vertices(&self, kind: EntityKind) -> usize {
        self.vertices.values().filter(|v| v.kind == kind).count()
    }

    pub fn count_edges(&self, kind: RelationKind) -> usize {
        self.edges.values().filter(|e| e.kind == kind).count()
    }

    fn fresh_vertex_id(&mut self) -> String {
        let id = format!("{}v{:08}", self.prefix, self.next_vertex);
        self.next_vertex += 1;
        id
    }

    fn fresh_edge_id(&mut self) -> String {
        let id = format!("{}e{:08}", self.prefix, self.next_edge);
        self.next_edge += 1;
        id
    }

    fn require(&self, id: &str) -> Result<&Vertex, GraphError> {
        self.vertices.get(id).ok_or_else(|| GraphError::UnknownEntity(id.to_string()))
    }

    fn require_kind(&self, id: &str, kind: EntityKind) -> Result<&Vertex, GraphError> {
        let v = self.require(id)?;
        if v.kind != kind {
            return Err(GraphError::KindMismatch { id: id.to_string(), expected: kind, found: v.kind });
        }
        Ok(v)
    }

    fn check_name(&self, kind: EntityKind, domain: Domain, name: &str) -> Result<(), GraphError> {
        if name.is_empty() {
            return Err(GraphError::EmptyName);
        }
        let taken = self.vertices.values().any(|v| {
            v.kind == kind && v.label() == name && v.domain() == Some(domain)
        });
        if taken {
            return Err(GraphError::DuplicateName { kind, domain, name: name.to_string() });
        }
        Ok(())
    }

    fn insert_vertex(&mut self, kind: EntityKind, properties: BTreeMap<String, String>) -> String {
        let id = self.fresh_vertex_id();
        self.vertices.insert(id.clone(), Vertex { id: id.clone(), kind, properties });
        id
    }

    /// Add a component model to the graph.
    pub fn create_component_model(&mut self, domain: Domain, name: &str) -> Result<String, GraphError> {
        self.check_name(EntityKind::ComponentModel, domain, name)?;
        let mut props = BTreeMap::new();
        props.insert("label".to_string(), name.to_string());
        props.insert("domain".to_string(), domain.as_str().to_string());
        Ok(self.insert_vertex(EntityKind::ComponentModel, props))
    }

    /// Add an interface model to the graph.
    pub fn create_interface_model(&mut self, domain: Domain, name: &str) -> Result<String, GraphError> {
        self.check_name(EntityKind::InterfaceModel, domain, name)?;
        let mut props = BTreeMap::new();
        props.insert("label".to_string(), name.to_string());
        props.insert("domain".to_string(), domain.as_str().to_string());
        Ok(self.insert_vertex(EntityKind::InterfaceModel, props))
    }

    /// Create an interface instance from an interface model.
    pub fn instantiate_interface(&mut self, imodel: &str, name: &str) -> Result<String, GraphError> {
        if name.is_empty() {
            return Err(GraphError::EmptyName);
        }
        let model = self
            .vertices
            .get(imodel)
            .filter(|v| v.kind == EntityKind::InterfaceModel)
            .ok_or_else(|| GraphError::UnknownModel(imodel.to_string()))?;
        let mut props = model.properties.clone();
        props.insert("label".to_string(), name.to_string());
        let imodel = imodel.to_string();
        let iface = self.insert_vertex(EntityKind::Interface, props);
        self.add_relation(RelationKind::InstanceOfInterfaceModel, &iface, &imodel)?;
        Ok(iface)
    }

    /// Create a component from a component model.
    ///
    /// Snapshot semantics: the model's properties and interfaces are
    /// copied onto the instance at creation time; later edits to the
    /// model do not retrofit existing instances.
    pub fn instantiate_component(&mut self, model: &str, name: &str) -> Result<String, GraphError> {
        if name.is_empty() {
            return Err(GraphError::EmptyName);
        }
        let model_vertex = self
            .vertices
            .get(model)
            .filter(|v| v.kind == EntityKind::ComponentModel)
            .ok_or_else(|| GraphError::UnknownModel(model.to_string()))?;
        let mut props = model_vertex.properties.clone();
        props.insert("label".to_string(), name.to_string());

        // model interfaces, in creation (edge id) order
        let mut model_ifaces: Vec<(String, String)> = Vec::new();
        for e in self.edges.values() {
            if e.kind == RelationKind::ModelHasInterface && e.source == model {
                model_ifaces.push((e.id.clone(), e.target.clone()));
            }
        }
        model_ifaces.sort();

        let component = self.insert_vertex(EntityKind::Component, props);
        self.add_relation(RelationKind::InstanceOfComponentModel, &component, model)?;
        for (_, iface_id) in model_ifaces {
            let iface = &self.vertices[&iface_id];
            let iface_props = iface.properties.clone();
            let iface_model = self.interface_model_of(&iface_id);
            let copy = self.insert_vertex(EntityKind::Interface, iface_props);
            self.add_relation(RelationKind::ComponentHasInterface, &component, &copy)?;
            if let Some(im) = iface_model {
                self.add_relation(RelationKind::InstanceOfInterfaceModel, &copy, &im)?;
            }
        }
        Ok(component)
    }

    /// The interface model an interface instantiates, if declared.
    pub fn interface_model_of(&self, iface: &str) -> Option<String> {
        self.edges
            .values()
            .find(|e| e.kind == RelationKind::InstanceOfInterfaceModel && e.source == iface)
            .map(|e| e.target.clone())
    }

    /// The component model a component instantiates, if declared.
    pub fn component_model_of(&self, component: &str) -> Option<String> {
        self.edges
            .values()
            .find(|e| e.kind == RelationKind::InstanceOfComponentModel && e.source == component)
            .map(|e| e.target.clone())
    }

    /// Interfaces owned by a component (or exposed by a model), in
    /// creation order.
    pub fn interfaces_of(&self, owner: &str) -> Vec<String> {
        let mut out: Vec<(String, String)> = self
            .edges
            .values()
            .filter(|e| {
                (e.kind == RelationKind::ComponentHasInterface
                    || e.kind == RelationKind::ModelHasInterface)
                    && e.source == owner
            })
            .map(|e| (e.id.clone(), e.target.clone()))
            .collect();
        out.sort();
        out.into_iter().map(|(_, t)| t).collect()
    }

    /// Find an owned interface by its label.
    pub fn interface_of(&self, owner: &str, label: &str) -> Option<String> {
        self.interfaces_of(owner)
            .into_iter()
            .find(|id| self.vertices[id].label() == label)
    }

    /// Declare two interface models compatible for [`Self::connect`].
    pub fn declare_compatible(&mut self, imodel_a: &str, imodel_b: &str) -> Result<(), GraphError> {
        for id in [imodel_a, imodel_b] {
            self.vertices
                .get(id)
                .filter(|v| v.kind == EntityKind::InterfaceModel)
                .ok_or_else(|| GraphError::UnknownModel(id.to_string()))?;
        }
        let pair = if imodel_a <= imodel_b {
            (imodel_a.to_string(), imodel_b.to_string())
        } else {
            (imodel_b.to_string(), imodel_a.to_string())
        };
        self.compatible.insert(pair);
        Ok(())
    }

    /// Whether two interface models may be connected. Defaults to
    /// identity (same model); anything else must be declared.
    pub fn models_compatible(&self, imodel_a: &str, imodel_b: &str) -> bool {
        if imodel_a == imodel_b {
            return true;
        }
        let pair = if imodel_a <= imodel_b {
            (imodel_a.to_string(), imodel_b.to_string())
        } else {
            (imodel_b.to_string(), imodel_a.to_string())
        };
        self.compatible.contains(&pair)
    }

    pub fn compatible_pairs(&self) -> impl Iterator<Item = &(String, String)> {
        self.compatible.iter()
    }

    /// Define a connection between two interface instances.
    pub fn connect(&mut self, iface_a: &str, iface_b: &str) -> Result<String, GraphError> {
        for id in [iface_a, iface_b] {
            match self.vertices.get(id) {
                Some(v) if v.kind == EntityKind::Interface => {}
                _ => return Err(GraphError::UnknownInterface(id.to_string())),
            }
        }
        let ma = self.interface_model_of(iface_a);
        let mb = self.interface_model_of(iface_b);
        let ok = match (&ma, &mb) {
            (Some(a), Some(b)) => self.models_compatible(a, b),
            _ => false,
        };
        if !ok {
            return Err(GraphError::IncompatibleInterfaces {
                a: iface_a.to_string(),
                b: iface_b.to_string(),
            });
        }
        self.add_relation(RelationKind::ConnectedTo, iface_a, iface_b)
    }

    /// Make a component part of a component model.
    pub fn compose(&mut self, component: &str, model: &str) -> Result<String, GraphError> {
        self.require(component)?;
        self.require(model)?;
        self.add_relation(RelationKind::PartOfComposition, component, model)
    }

    /// Make `child` a subclass of `parent`.
    pub fn is_a(&mut self, child: &str, parent: &str) -> Result<String, GraphError> {
        self.add_relation(RelationKind::SubclassOf, child, parent)
    }

    /// Associate an interface instance with a component model.
    pub fn has_interface_model(&mut self, model: &str, iface: &str) -> Result<String, GraphError> {
        self.add_relation(RelationKind::ModelHasInterface, model, iface)
    }

    /// Associate an interface instance with a component.
    pub fn has_interface(&mut self, component: &str, iface: &str) -> Result<String, GraphError> {
        self.add_relation(RelationKind::ComponentHasInterface, component, iface)
    }

    /// Define `outer` to be an alias for `inner`, exporting an interior
    /// interface to the exterior of a component model.
    pub fn export(&mut self, inner: &str, outer: &str) -> Result<String, GraphError> {
        self.add_relation(RelationKind::AliasOf, inner, outer)
    }

    /// Low-level relation insertion. Validates endpoint existence, the
    /// relation's entity-kind signature and its cardinality before
    /// committing; the named operators delegate here.
    pub fn add_relation(&mut self, kind: RelationKind, source: &str, target: &str) -> Result<String, GraphError> {
        let (src_kind, dst_kind) = kind.signature();
        self.require_kind(source, src_kind)?;
        self.require_kind(target, dst_kind)?;
        match kind.cardinality() {
            Cardinality::ManyToOne => self.check_unique_outgoing(kind, source)?,
            Cardinality::OneToMany => self.check_unique_incoming(kind, target)?,
            Cardinality::OneToOne => {
                self.check_unique_outgoing(kind, source)?;
                self.check_unique_incoming(kind, target)?;
            }
            Cardinality::ManyToMany => {}
        }
        let id = self.fresh_edge_id();
        let mut props = BTreeMap::new();
        props.insert("label".to_string(), kind.as_str().to_string());
        self.edges.insert(
            id.clone(),
            Edge { id: id.clone(), source: source.to_string(), target: target.to_string(), kind, properties: props },
        );
        Ok(id)
    }

    fn check_unique_outgoing(&self, kind: RelationKind, source: &str) -> Result<(), GraphError> {
        if self.edges.values().any(|e| e.kind == kind && e.source == source) {
            return Err(GraphError::CardinalityViolation {
                kind,
                card: kind.cardinality(),
                vertex: source.to_string(),
            });
        }
        Ok(())
    }

    fn check_unique_incoming(&self, kind: RelationKind, target: &str) -> Result<(), GraphError> {
        if self.edges.values().any(|e| e.kind == kind && e.target == target) {
            return Err(GraphError::CardinalityViolation {
                kind,
                card: kind.cardinality(),
                vertex: target.to_string(),
            });
        }
        Ok(())
    }

    /// Set a free-form string property on a vertex.
    ///
    /// Keys must be non-empty and free of whitespace and `=`. The
    /// reserved `label` key may be reassigned but never emptied.
    pub fn set_property(&mut self, vertex: &str, key: &str, value: &str) -> Result<(), GraphError> {
        if key.is_empty() || key.contains(|c: char| c.is_whitespace() || c == '=') {
            return Err(GraphError::InvalidPropertyKey(key.to_string()));
        }
        if key == "label" && value.is_empty() {
            return Err(GraphError::EmptyName);
        }
        let v = self
            .vertices
            .get_mut(vertex)
            .ok_or_else(|| GraphError::UnknownEntity(vertex.to_string()))?;
        v.properties.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Components composed into `model`, each resolved to its own
    /// component model: all `(g, name)` such that some component `x`
    /// named `name` instantiates `g` and is part of `model`.
    /// Ordered by composition edge creation.
    pub fn resolve_parts(&self, model: &str) -> Result<Vec<(String, String)>, GraphError> {
        self.vertices
            .get(model)
            .filter(|v| v.kind == EntityKind::ComponentModel)
            .ok_or_else(|| GraphError::UnknownModel(model.to_string()))?;
        let mut part_edges: Vec<&Edge> = self
            .edges
            .values()
            .filter(|e| e.kind == RelationKind::PartOfComposition && e.target == model)
            .collect();
        part_edges.sort_by(|a, b| a.id.cmp(&b.id));
        let mut out = Vec::new();
        for e in part_edges {
            if let Some(g) = self.component_model_of(&e.source) {
                out.push((g, self.vertices[&e.source].label().to_string()));
            }
        }
        Ok(out)
    }

    /// Recursive variant of [`Self::resolve_parts`]: flattens the
    /// composition hierarchy down to leaf component models. Names are
    /// `/`-joined instance paths.
    pub fn resolve_parts_recursive(&self, model: &str) -> Result<Vec<(String, String)>, GraphError> {
        let mut out = Vec::new();
        self.resolve_rec(model, "", &mut out)?;
        Ok(out)
    }

    fn resolve_rec(&self, model: &str, path: &str, out: &mut Vec<(String, String)>) -> Result<(), GraphError> {
        for (g, name) in self.resolve_parts(model)? {
            let qualified = if path.is_empty() { name } else { format!("{}/{}", path, name) };
            let inner = self.resolve_parts(&g)?;
            if inner.is_empty() {
                out.push((g, qualified));
            } else {
                self.resolve_rec(&g, &qualified, out)?;
            }
        }
        Ok(())
    }

    /// Components directly composed into `model` (instance vertex ids),
    /// in composition order.
    pub fn parts_of(&self, model: &str) -> Vec<String> {
        let mut part_edges: Vec<&Edge> = self
            .edges
            .values()
            .filter(|e| e.kind == RelationKind::PartOfComposition && e.target == model)
            .collect();
        part_edges.sort_by(|a, b| a.id.cmp(&b.id));
        part_edges.into_iter().map(|e| e.source.clone()).collect()
    }

    /// Find a component model by domain and label.
    pub fn find_component_model(&self, domain: Domain, name: &str) -> Option<String> {
        self.vertices
            .values()
            .find(|v| {
                v.kind == EntityKind::ComponentModel && v.label() == name && v.domain() == Some(domain)
            })
            .map(|v| v.id.clone())
    }

    /// Re-validate every structural invariant. Mutation-time checks make
    /// this a no-op on graphs built through the operators; it is the
    /// load-time gate for persisted documents.
    pub fn validate(&self) -> Result<(), GraphError> {
        for v in self.vertices.values() {
            if v.label().is_empty() {
                return Err(GraphError::SchemaViolation {
                    element: v.id.clone(),
                    reason: "vertex has no non-empty 'label' property".to_string(),
                });
            }
        }
        for e in self.edges.values() {
            if e.label().is_empty() {
                return Err(GraphError::SchemaViolation {
                    element: e.id.clone(),
                    reason: "edge has no non-empty 'label' property".to_string(),
                });
            }
            let (src_kind, dst_kind) = e.kind.signature();
            let src = self.vertices.get(&e.source).ok_or_else(|| GraphError::SchemaViolation {
                element: e.id.clone(),
                reason: format!("source {:?} does not resolve", e.source),
            })?;
            let dst = self.vertices.get(&e.target).ok_or_else(|| GraphError::SchemaViolation {
                element: e.id.clone(),
                reason: format!("target {:?} does not resolve", e.target),
            })?;
            if src.kind != src_kind || dst.kind != dst_kind {
                return Err(GraphError::SchemaViolation {
                    element: e.id.clone(),
                    reason: format!("{:?} endpoints must be {:?} -> {:?}", e.kind, src_kind, dst_kind),
                });
            }
        }
        // cardinalities
        let mut outgoing: BTreeMap<(RelationKind, &str), u32> = BTreeMap::new();
        let mut incoming: BTreeMap<(RelationKind, &str), u32> = BTreeMap::new();
        for e in self.edges.values() {
            *outgoing.entry((e.kind, e.source.as_str())).or_default() += 1;
            *incoming.entry((e.kind, e.target.as_str())).or_default() += 1;
        }
        for ((kind, vertex), n) in &outgoing {
            let unique_out = matches!(kind.cardinality(), Cardinality::ManyToOne | Cardinality::OneToOne);
            if unique_out && *n > 1 {
                return Err(GraphError::SchemaViolation {
                    element: vertex.to_string(),
                    reason: format!("{:?} out-degree {} exceeds cardinality {:?}", kind, n, kind.cardinality()),
                });
            }
        }
        for ((kind, vertex), n) in &incoming {
            let unique_in = matches!(kind.cardinality(), Cardinality::OneToMany | Cardinality::OneToOne);
            if unique_in && *n > 1 {
                return Err(GraphError::SchemaViolation {
                    element: vertex.to_string(),
                    reason: format!("{:?} in-degree {} exceeds cardinality {:?}", kind, n, kind.cardinality()),
                });
            }
        }
        for pair in &self.compatible {
            for id in [&pair.0, &pair.1] {
                let ok = self.vertices.get(id).map(|v| v.kind == EntityKind::InterfaceModel).unwrap_or(false);
                if !ok {
                    return Err(GraphError::SchemaViolation {
                        element: id.clone(),
                        reason: "compatibility entry does not name an interface model".to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}
