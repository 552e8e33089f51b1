//! Self-describing text persistence for [`PropertyGraph`].
//!
//! One document per graph: a header line, a counter line, then vertex,
//! edge and compatibility records in canonical (id-sorted) order.
//! Loading re-validates the full schema and fails closed with the
//! offending element id.

use std::path::Path;

use super::{Edge, EntityKind, GraphError, PropertyGraph, RelationKind, Vertex};
use crate::textio::{join_fields, split_fields};

pub const FORMAT_NAME: &str = "graphdoc";
pub const FORMAT_VERSION: u32 = 1;

impl PropertyGraph {
    /// Serialize to the canonical text document.
    pub fn to_document(&self) -> String {
        let mut lines = Vec::new();
        lines.push(format!("{}\t{}", FORMAT_NAME, FORMAT_VERSION));
        lines.push(join_fields(&[
            "counters",
            &self.prefix,
            &self.next_vertex.to_string(),
            &self.next_edge.to_string(),
        ]));
        for v in self.vertices.values() {
            let mut fields: Vec<String> =
                vec!["vertex".into(), v.id.clone(), v.kind.as_str().into()];
            for (k, val) in &v.properties {
                fields.push(format!("{}={}", k, val));
            }
            let refs: Vec<&str> = fields.iter().map(String::as_str).collect();
            lines.push(join_fields(&refs));
        }
        for e in self.edges.values() {
            let mut fields: Vec<String> = vec![
                "edge".into(),
                e.id.clone(),
                e.source.clone(),
                e.target.clone(),
                e.kind.as_str().into(),
            ];
            for (k, val) in &e.properties {
                fields.push(format!("{}={}", k, val));
            }
            let refs: Vec<&str> = fields.iter().map(String::as_str).collect();
            lines.push(join_fields(&refs));
        }
        for (a, b) in &self.compatible {
            lines.push(join_fields(&["compat", a, b]));
        }
        lines.push(String::new());
        lines.join("\n")
    }

    /// Parse a document produced by [`Self::to_document`] and validate it.
    pub fn from_document(doc: &str) -> Result<PropertyGraph, GraphError> {
        let mut lines = doc.lines();
        let header = lines.next().unwrap_or("");
        let expected = format!("{}\t{}", FORMAT_NAME, FORMAT_VERSION);
        if header != expected {
            return Err(GraphError::SchemaViolation {
                element: "header".to_string(),
                reason: format!("expected {:?}, found {:?}", expected, header),
            });
        }
        let mut graph = PropertyGraph::with_prefix("g");
        let mut have_counters = false;
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields = split_fields(line).map_err(|reason| GraphError::SchemaViolation {
                element: format!("line {}", lineno + 2),
                reason,
            })?;
            let bad = |reason: String| GraphError::SchemaViolation {
                element: format!("line {}", lineno + 2),
                reason,
            };
            match fields[0].as_str() {
                "counters" => {
                    if fields.len() != 4 {
                        return Err(bad("counters record needs 3 fields".into()));
                    }
                    graph.prefix = fields[1].clone();
                    graph.next_vertex =
                        fields[2].parse().map_err(|_| bad("bad vertex counter".into()))?;
                    graph.next_edge =
                        fields[3].parse().map_err(|_| bad("bad edge counter".into()))?;
                    have_counters = true;
                }
                "vertex" => {
                    if fields.len() < 3 {
                        return Err(bad("vertex record needs id and kind".into()));
                    }
                    let id = fields[1].clone();
                    let kind = EntityKind::parse(&fields[2]).ok_or_else(|| {
                        GraphError::SchemaViolation {
                            element: id.clone(),
                            reason: format!("unknown entity kind {:?}", fields[2]),
                        }
                    })?;
                    let properties = parse_properties(&id, &fields[3..])?;
                    if graph.vertices.contains_key(&id) {
                        return Err(GraphError::SchemaViolation {
                            element: id,
                            reason: "duplicate vertex id".to_string(),
                        });
                    }
                    graph.vertices.insert(id.clone(), Vertex { id, kind, properties });
                }
                "edge" => {
                    if fields.len() < 5 {
                        return Err(bad("edge record needs id, endpoints and kind".into()));
                    }
                    let id = fields[1].clone();
                    let kind = RelationKind::parse(&fields[4]).ok_or_else(|| {
                        GraphError::SchemaViolation {
                            element: id.clone(),
                            reason: format!("unknown relation kind {:?}", fields[4]),
                        }
                    })?;
                    let properties = parse_properties(&id, &fields[5..])?;
                    if graph.edges.contains_key(&id) {
                        return Err(GraphError::SchemaViolation {
                            element: id,
                            reason: "duplicate edge id".to_string(),
                        });
                    }
                    graph.edges.insert(
                        id.clone(),
                        Edge {
                            id,
                            source: fields[2].clone(),
                            target: fields[3].clone(),
                            kind,
                            properties,
                        },
                    );
                }
                "compat" => {
                    if fields.len() != 3 {
                        return Err(bad("compat record needs 2 fields".into()));
                    }
                    let pair = if fields[1] <= fields[2] {
                        (fields[1].clone(), fields[2].clone())
                    } else {
                        (fields[2].clone(), fields[1].clone())
                    };
                    graph.compatible.insert(pair);
                }
                other => return Err(bad(format!("unknown record type {:?}", other))),
            }
        }
        if !have_counters {
            return Err(GraphError::SchemaViolation {
                element: "counters".to_string(),
                reason: "missing counters record".to_string(),
            });
        }
        graph.validate()?;
        Ok(graph)
    }

    /// Write the document to a file.
    pub fn save(&self, path: &Path) -> Result<(), GraphError> {
        std::fs::write(path, self.to_document())
            .map_err(|e| GraphError::IoFailure(format!("{}: {}", path.display(), e)))
    }

    /// Load and validate a document from a file.
    pub fn load(path: &Path) -> Result<PropertyGraph, GraphError> {
        let doc = std::fs::read_to_string(path)
            .map_err(|e| GraphError::IoFailure(format!("{}: {}", path.display(), e)))?;
        PropertyGraph::from_document(&doc)
    }
}

fn parse_properties(
    element: &str,
    fields: &[String],
) -> Result<std::collections::BTreeMap<String, String>, GraphError> {
    let mut props = std::collections::BTreeMap::new();
    for f in fields {
        let (k, v) = f.split_once('=').ok_or_else(|| GraphError::SchemaViolation {
            element: element.to_string(),
            reason: format!("property field {:?} is not key=value", f),
        })?;
        if k.is_empty() {
            return Err(GraphError::SchemaViolation {
                element: element.to_string(),
                reason: "empty property key".to_string(),
            });
        }
        props.insert(k.to_string(), v.to_string());
    }
    Ok(props)
}
