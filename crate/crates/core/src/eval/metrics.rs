use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dialogue::{DialogueSession, SessionStatus, Stage, SystemConfig};

/// Per-configuration measurements of one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub config: SystemConfig,
    pub turn_count: usize,
    pub instructor_turns: usize,
    /// Fraction of instructor turns citing at least one graph fact.
    pub grounding_coverage: f64,
    /// Fraction of instructor turns whose text ends with `?`.
    pub question_ratio: f64,
    /// Stages visited, in chain order.
    pub stage_coverage: Vec<Stage>,
    pub completed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub records: Vec<SessionMetrics>,
}

impl AblationReport {
    pub fn record(&self, config: SystemConfig) -> Option<&SessionMetrics> {
        self.records.iter().find(|r| r.config == config)
    }

    /// Pretty JSON with a trailing newline, as written by `ablate --out`.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn fraction(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

pub fn session_metrics(session: &DialogueSession) -> SessionMetrics {
    let instructor: Vec<_> = session.instructor_turns().collect();
    let grounded = instructor.iter().filter(|t| !t.cited_facts.is_empty()).count();
    let questions = instructor
        .iter()
        .filter(|t| t.text.trim_end().ends_with('?'))
        .count();
    let stages: BTreeSet<Stage> = session
        .transcript
        .iter()
        .map(|t| t.stage)
        .chain(std::iter::once(session.stage))
        .collect();
    SessionMetrics {
        config: session.config,
        turn_count: session.transcript.len(),
        instructor_turns: instructor.len(),
        grounding_coverage: fraction(grounded, instructor.len()),
        question_ratio: fraction(questions, instructor.len()),
        stage_coverage: stages.into_iter().collect(),
        completed: session.status == SessionStatus::Completed,
    }
}
