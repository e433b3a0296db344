//! Mathematics knowledge graph: typed nodes, typed edges and an alias index.
//!
//! A graph is loaded once from a JSON document, validated, and never mutated
//! afterwards, so a single `Arc<KnowledgeGraph>` can back any number of
//! concurrent sessions.
//!
//! ```text
//! {
//!   "nodes": [{"id", "kind", "label", "description", "aliases"}],
//!   "edges": [{"source", "target", "relation", "note"?}]
//! }
//! ```

mod link;
pub mod normalize;
mod query;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use link::link_knowledge_points;
pub use query::{query_context, render_facts, ContextBundle, Fact, FactRef};

use normalize::normalize;

/// The bundled demo graph (linear equations, solution methods, the
/// chicken-rabbit example).
pub const DEMO_GRAPH_JSON: &str = include_str!("../../data/demo_graph.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Concept,
    Principle,
    Example,
}

/// Edge relation. Ordering and rendering use the snake_case wire name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    PrerequisiteOf,
    InstanceOf,
    RelatedTo,
    AppliesTo,
}

impl Relation {
    pub const ALL: [Relation; 4] = [
        Relation::PrerequisiteOf,
        Relation::InstanceOf,
        Relation::RelatedTo,
        Relation::AppliesTo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::PrerequisiteOf => "prerequisite_of",
            Relation::InstanceOf => "instance_of",
            Relation::RelatedTo => "related_to",
            Relation::AppliesTo => "applies_to",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl PartialOrd for Relation {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Relation {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.as_str().cmp(other.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeNode {
    pub id: String,
    pub kind: NodeKind,
    pub label: String,
    pub description: String,
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeEdge {
    pub source: String,
    pub target: String,
    pub relation: Relation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// On-disk shape of a graph file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub nodes: Vec<KnowledgeNode>,
    pub edges: Vec<KnowledgeEdge>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KgError {
    #[error("malformed graph document: {0}")]
    MalformedDocument(String),
    #[error("duplicate node id `{0}`")]
    DuplicateNodeId(String),
    #[error("alias `{alias}` is shared by nodes `{first}` and `{second}`")]
    DuplicateAlias {
        alias: String,
        first: String,
        second: String,
    },
    #[error("edge {source_id} -> {target}: node `{missing}` is not declared")]
    DanglingEdge {
        source_id: String,
        target: String,
        missing: String,
    },
    #[error("edge on `{0}` is a self-loop")]
    SelfLoopEdge(String),
    #[error("unknown seed node `{0}`")]
    UnknownSeed(String),
    #[error("fact cap must be at least 1")]
    ZeroCap,
}

/// A validated, immutable knowledge graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeGraph {
    nodes: Vec<KnowledgeNode>,
    node_index: HashMap<String, usize>,
    edges: Vec<KnowledgeEdge>,
    alias_index: BTreeMap<String, String>,
}

impl KnowledgeGraph {
    /// Parses and validates a JSON graph document.
    pub fn from_json(source: &str) -> Result<Self, KgError> {
        let doc: GraphDocument = serde_json::from_str(source)
            .map_err(|e| KgError::MalformedDocument(e.to_string()))?;
        Self::from_document(doc)
    }

    /// Validates a parsed document. A node whose label is missing from its
    /// aliases gets the label prepended.
    pub fn from_document(doc: GraphDocument) -> Result<Self, KgError> {
        let mut nodes = Vec::with_capacity(doc.nodes.len());
        let mut node_index = HashMap::with_capacity(doc.nodes.len());
        let mut alias_index: BTreeMap<String, String> = BTreeMap::new();

        for mut node in doc.nodes {
            if node.id.is_empty() || node.id.chars().any(char::is_whitespace) {
                return Err(KgError::MalformedDocument(format!(
                    "node id `{}` is empty or contains whitespace",
                    node.id
                )));
            }
            if node_index.contains_key(&node.id) {
                return Err(KgError::DuplicateNodeId(node.id));
            }
            let label_norm = normalize(&node.label);
            if !node.aliases.iter().any(|a| normalize(a) == label_norm) {
                node.aliases.insert(0, node.label.clone());
            }
            for alias in &node.aliases {
                let key = normalize(alias);
                if key.is_empty() {
                    return Err(KgError::MalformedDocument(format!(
                        "node `{}` has alias `{alias}` that normalizes to nothing",
                        node.id
                    )));
                }
                match alias_index.get(&key) {
                    Some(owner) if *owner != node.id => {
                        return Err(KgError::DuplicateAlias {
                            alias: key,
                            first: owner.clone(),
                            second: node.id.clone(),
                        });
                    }
                    Some(_) => {}
                    None => {
                        alias_index.insert(key, node.id.clone());
                    }
                }
            }
            node_index.insert(node.id.clone(), nodes.len());
            nodes.push(node);
        }

        for edge in &doc.edges {
            for end in [&edge.source, &edge.target] {
                if !node_index.contains_key(end) {
                    return Err(KgError::DanglingEdge {
                        source_id: edge.source.clone(),
                        target: edge.target.clone(),
                        missing: end.clone(),
                    });
                }
            }
            if edge.source == edge.target {
                return Err(KgError::SelfLoopEdge(edge.source.clone()));
            }
        }

        Ok(Self {
            nodes,
            node_index,
            edges: doc.edges,
            alias_index,
        })
    }

    /// The bundled demo graph.
    pub fn demo() -> Self {
        Self::from_json(DEMO_GRAPH_JSON).expect("bundled demo graph is valid")
    }

    pub fn empty() -> Self {
        Self::from_document(GraphDocument {
            nodes: Vec::new(),
            edges: Vec::new(),
        })
        .expect("empty graph is valid")
    }

    pub fn node(&self, id: &str) -> Option<&KnowledgeNode> {
        self.node_index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.node_index.contains_key(id)
    }

    /// Nodes in declaration order.
    pub fn nodes(&self) -> &[KnowledgeNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[KnowledgeEdge] {
        &self.edges
    }

    /// Normalized alias to owning node id.
    pub fn alias_index(&self) -> &BTreeMap<String, String> {
        &self.alias_index
    }

    pub fn has_edge(&self, fact: &FactRef) -> bool {
        self.edges.iter().any(|e| {
            e.source == fact.subject && e.target == fact.object && e.relation == fact.relation
        })
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("graph document serializes")
    }
}

/// Loads a graph from JSON text.
pub fn load_graph(source: &str) -> Result<KnowledgeGraph, KgError> {
    KnowledgeGraph::from_json(source)
}
