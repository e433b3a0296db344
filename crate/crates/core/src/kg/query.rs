use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{KgError, KnowledgeGraph, Relation};

/// A (subject, relation, object) triple naming one graph edge.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FactRef {
    pub subject: String,
    pub relation: Relation,
    pub object: String,
}

/// A retrieved edge with its rendered prompt line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fact {
    pub subject: String,
    pub relation: Relation,
    pub object: String,
    pub sentence: String,
}

impl Fact {
    pub fn to_ref(&self) -> FactRef {
        FactRef {
            subject: self.subject.clone(),
            relation: self.relation,
            object: self.object.clone(),
        }
    }
}

/// Graph facts retrieved for one turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBundle {
    pub seeds: Vec<String>,
    pub facts: Vec<Fact>,
    pub hop_limit: u32,
    pub truncated: bool,
}

impl ContextBundle {
    pub fn empty(hop_limit: u32) -> Self {
        Self {
            seeds: Vec::new(),
            facts: Vec::new(),
            hop_limit,
            truncated: false,
        }
    }

    pub fn fact_refs(&self) -> Vec<FactRef> {
        self.facts.iter().map(Fact::to_ref).collect()
    }
}

/// Breadth-first retrieval around `seeds`.
///
/// Edges are traversed in both directions. An edge is kept when both of its
/// endpoints lie within `hop_limit` hops of some seed; its hop distance is
/// the larger of the two endpoint distances. Facts are sorted by
/// (hop distance, relation name, subject id, object id) and cut at `cap`.
pub fn query_context(
    graph: &KnowledgeGraph,
    seeds: &[String],
    hop_limit: u32,
    cap: usize,
) -> Result<ContextBundle, KgError> {
    if cap == 0 {
        return Err(KgError::ZeroCap);
    }
    let mut unique_seeds: Vec<String> = Vec::with_capacity(seeds.len());
    for seed in seeds {
        if !graph.contains(seed) {
            return Err(KgError::UnknownSeed(seed.clone()));
        }
        if !unique_seeds.contains(seed) {
            unique_seeds.push(seed.clone());
        }
    }

    let mut adjacency: HashMap<&str, Vec<&str>> = HashMap::new();
    for e in graph.edges() {
        adjacency.entry(&e.source).or_default().push(&e.target);
        adjacency.entry(&e.target).or_default().push(&e.source);
    }

    let mut dist: HashMap<&str, u32> = HashMap::new();
    let mut queue = VecDeque::new();
    for s in &unique_seeds {
        dist.insert(s.as_str(), 0);
        queue.push_back(s.as_str());
    }
    while let Some(n) = queue.pop_front() {
        let d = dist[n];
        if d == hop_limit {
            continue;
        }
        for &m in adjacency.get(n).map(Vec::as_slice).unwrap_or_default() {
            if !dist.contains_key(m) {
                dist.insert(m, d + 1);
                queue.push_back(m);
            }
        }
    }

    let mut ranked: Vec<(u32, FactRef)> = graph
        .edges()
        .iter()
        .filter_map(|e| {
            let ds = *dist.get(e.source.as_str())?;
            let dt = *dist.get(e.target.as_str())?;
            Some((
                ds.max(dt),
                FactRef {
                    subject: e.source.clone(),
                    relation: e.relation,
                    object: e.target.clone(),
                },
            ))
        })
        .collect();
    ranked.sort_by(|(da, a), (db, b)| {
        da.cmp(db)
            .then_with(|| a.relation.cmp(&b.relation))
            .then_with(|| a.subject.cmp(&b.subject))
            .then_with(|| a.object.cmp(&b.object))
    });
    ranked.dedup_by(|a, b| a.1 == b.1);

    let truncated = ranked.len() > cap;
    ranked.truncate(cap);
    let facts = ranked
        .into_iter()
        .map(|(_, r)| Fact {
            sentence: render_line(graph, &r),
            subject: r.subject,
            relation: r.relation,
            object: r.object,
        })
        .collect();

    Ok(ContextBundle {
        seeds: unique_seeds,
        facts,
        hop_limit,
        truncated,
    })
}

fn render_line(graph: &KnowledgeGraph, fact: &FactRef) -> String {
    fn label<'a>(graph: &'a KnowledgeGraph, id: &'a str) -> &'a str {
        graph.node(id).map_or(id, |n| n.label.as_str())
    }
    let description = graph
        .node(&fact.object)
        .map(|n| n.description.as_str())
        .unwrap_or_default();
    format!(
        "{} \u{2014}{}\u{2192} {}: {}",
        label(graph, &fact.subject),
        fact.relation,
        label(graph, &fact.object),
        description
    )
}

/// Renders a bundle as prompt text, one line per fact in bundle order.
pub fn render_facts(bundle: &ContextBundle, graph: &KnowledgeGraph) -> String {
    bundle
        .facts
        .iter()
        .map(|f| render_line(graph, &f.to_ref()))
        .collect::<Vec<_>>()
        .join("\n")
}
