//! Desk-scale robot development cycle: model robots as typed component
//! graphs, explore their movement capabilities with a parametric
//! trajectory model, cluster the explored capabilities in labelled
//! feature spaces, ground behaviors as executable cognitive cores and
//! answer task/mission queries by matching semantic annotations.
//!
//! The crate is organized along the stages of that cycle:
//!
//! - [`graph`] — typed property graph of component models, components,
//!   interfaces and their relations, with cardinality enforcement and a
//!   deterministic text persistence format.
//! - [`sim`] — deterministic kinematic simulator derived from an
//!   assembly component model (serial chains plus an optional
//!   skid-steer wheeled base).
//! - [`cfm`] — the polynomial capability-function model mapping flat
//!   parameter vectors to joint trajectories.
//! - [`explore`] — goal-agnostic uniform sampling over parameter space,
//!   batch simulation and the feasibility validation network.
//! - [`cluster`] — feature functions, k-means clustering and Gaussian
//!   mixture densities over parameter space.
//! - [`cores`] — behavior models, semantic annotations, cognitive core
//!   creation and sampling by particle-swarm density maximization.
//! - [`reason`] — label ontology, planning vocabulary, mission
//!   decomposition and matching of tasks to cores and robots.

pub mod cfm;
pub mod cluster;
pub mod cores;
pub mod explore;
pub mod fixtures;
pub mod graph;
pub mod reason;
pub mod seeding;
pub mod sim;
pub mod textio;

pub use cfm::{ParameterSpace, ParameterVector};
pub use cluster::{Cluster, ClusterStore, FeatureKind, FeatureSpace};
pub use cores::{BehaviorModel, CognitiveCore, Constraint, SamplerConfig, SemanticAnnotation};
pub use explore::{CapabilitySet, ExplorationConfig, ValidationModel};
pub use graph::{Domain, EntityKind, PropertyGraph, RelationKind};
pub use reason::{Mission, Ontology, PlanningVocabulary, Solution};
pub use sim::{Capability, RobotSpec, SimConfig, WorldState};
