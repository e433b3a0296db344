use std::collections::BTreeMap;

use super::normalize::tokens;
use super::KnowledgeGraph;

struct Candidate<'g> {
    start: usize,
    end: usize,
    alias_len: usize,
    id: &'g str,
}

/// Finds the knowledge points mentioned in `text`.
///
/// An alias matches when its normalized token sequence occurs as a
/// contiguous run of the normalized text's tokens. Overlapping matches are
/// resolved longest alias first, then by node id; surviving ids are returned
/// in order of their first match position, each at most once.
pub fn link_knowledge_points(text: &str, graph: &KnowledgeGraph) -> Vec<String> {
    let words = tokens(text);
    if words.is_empty() {
        return Vec::new();
    }

    let mut candidates = Vec::new();
    for (alias, id) in graph.alias_index() {
        let alias_words: Vec<&str> = alias.split(' ').collect();
        if alias_words.len() > words.len() {
            continue;
        }
        for start in 0..=words.len() - alias_words.len() {
            if words[start..start + alias_words.len()]
                .iter()
                .zip(&alias_words)
                .all(|(w, a)| w == a)
            {
                candidates.push(Candidate {
                    start,
                    end: start + alias_words.len(),
                    alias_len: alias.chars().count(),
                    id,
                });
            }
        }
    }

    candidates.sort_by(|a, b| {
        b.alias_len
            .cmp(&a.alias_len)
            .then_with(|| a.id.cmp(b.id))
            .then_with(|| a.start.cmp(&b.start))
    });

    let mut taken = vec![false; words.len()];
    let mut first_pos: BTreeMap<&str, usize> = BTreeMap::new();
    for c in &candidates {
        if taken[c.start..c.end].iter().any(|&t| t) {
            continue;
        }
        taken[c.start..c.end].iter_mut().for_each(|t| *t = true);
        let pos = first_pos.entry(c.id).or_insert(c.start);
        *pos = (*pos).min(c.start);
    }

    let mut hits: Vec<(usize, &str)> = first_pos.into_iter().map(|(id, p)| (p, id)).collect();
    hits.sort();
    hits.into_iter().map(|(_, id)| id.to_owned()).collect()
}
