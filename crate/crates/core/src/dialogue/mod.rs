//! Socratic dialogue sessions: stage machine, transcript and prompt assembly.

mod prompt;
mod stage;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adaptation::BanditState;
use crate::eval::EvaluationSignal;
use crate::kg::FactRef;

pub use prompt::{assemble_prompt, stage_goal, INSTRUCTOR_PERSONA};
pub use stage::Remediation;

/// Bundled chicken-rabbit problem (35 heads, 94 legs).
pub const DEMO_PROBLEM_JSON: &str = include_str!("../../data/chicken_rabbit.json");

/// Socratic stages in chain order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    ProblemFraming,
    GuidedQuestioning,
    SequentialReasoning,
    IterativeFeedback,
    ExploratoryInquiry,
    Closure,
}

impl Stage {
    pub const CHAIN: [Stage; 6] = [
        Stage::ProblemFraming,
        Stage::GuidedQuestioning,
        Stage::SequentialReasoning,
        Stage::IterativeFeedback,
        Stage::ExploratoryInquiry,
        Stage::Closure,
    ];

    /// Next stage along the chain; `None` after `Closure`.
    pub fn successor(self) -> Option<Stage> {
        let pos = Self::CHAIN.iter().position(|&s| s == self)?;
        Self::CHAIN.get(pos + 1).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::ProblemFraming => "ProblemFraming",
            Stage::GuidedQuestioning => "GuidedQuestioning",
            Stage::SequentialReasoning => "SequentialReasoning",
            Stage::IterativeFeedback => "IterativeFeedback",
            Stage::ExploratoryInquiry => "ExploratoryInquiry",
            Stage::Closure => "Closure",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Instructor,
    Learner,
    System,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Instructor => "instructor",
            Role::Learner => "learner",
            Role::System => "system",
        }
    }
}

/// The three ablation configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemConfig {
    #[serde(rename = "no_agent")]
    NoAgent,
    #[serde(rename = "agent_no_kg")]
    AgentNoKG,
    #[serde(rename = "agent_kg")]
    AgentWithKG,
}

impl SystemConfig {
    pub const ALL: [SystemConfig; 3] = [
        SystemConfig::NoAgent,
        SystemConfig::AgentNoKG,
        SystemConfig::AgentWithKG,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SystemConfig::NoAgent => "no_agent",
            SystemConfig::AgentNoKG => "agent_no_kg",
            SystemConfig::AgentWithKG => "agent_kg",
        }
    }

    pub fn uses_agents(self) -> bool {
        !matches!(self, SystemConfig::NoAgent)
    }

    pub fn uses_graph(self) -> bool {
        matches!(self, SystemConfig::AgentWithKG)
    }
}

impl fmt::Display for SystemConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SystemConfig {
    type Err = DialogueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "no_agent" => Ok(SystemConfig::NoAgent),
            "agent_no_kg" => Ok(SystemConfig::AgentNoKG),
            "agent_kg" => Ok(SystemConfig::AgentWithKG),
            other => Err(DialogueError::UnknownConfig(other.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemInstance {
    #[serde(default)]
    pub id: String,
    pub title: String,
    pub statement: String,
    pub heads: u64,
    pub legs: u64,
    #[serde(default)]
    pub knowledge_point_hints: Vec<String>,
}

impl ProblemInstance {
    pub fn demo() -> Self {
        serde_json::from_str(DEMO_PROBLEM_JSON).expect("bundled problem is valid")
    }

    pub fn validate(&self) -> Result<(), DialogueError> {
        if self.statement.trim().is_empty() {
            return Err(DialogueError::InvalidProblem("statement is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub index: usize,
    pub role: Role,
    pub stage: Stage,
    pub strategy_arm: Option<String>,
    pub cited_facts: Vec<FactRef>,
    pub text: String,
    pub timestamp: u64,
}

impl Turn {
    /// An unindexed turn; `append_turn` assigns index and timestamp.
    pub fn new(role: Role, stage: Stage, text: impl Into<String>) -> Self {
        Self {
            index: 0,
            role,
            stage,
            strategy_arm: None,
            cited_facts: Vec::new(),
            text: text.into(),
            timestamp: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Completed,
}

/// Stage-machine thresholds and the prompt history window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DialogueSettings {
    pub advance_threshold: f64,
    pub remediation_threshold: f64,
    pub max_turns_per_stage: u32,
    pub history_window: usize,
}

impl Default for DialogueSettings {
    fn default() -> Self {
        Self {
            advance_threshold: 0.8,
            remediation_threshold: 0.3,
            max_turns_per_stage: 4,
            history_window: 8,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DialogueError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("unknown configuration `{0}` (expected no_agent, agent_no_kg or agent_kg)")]
    UnknownConfig(String),
    #[error("session is completed")]
    SessionCompleted,
    #[error("a {got} turn cannot follow a {previous} turn")]
    RoleOrderViolation { previous: &'static str, got: &'static str },
    #[error("cited facts are only allowed on instructor turns of agent_kg sessions")]
    CitationNotAllowed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueSession {
    pub id: String,
    pub config: SystemConfig,
    pub problem: ProblemInstance,
    pub stage: Stage,
    pub status: SessionStatus,
    pub transcript: Vec<Turn>,
    pub bandit: BanditState,
    pub stage_turn_count: u32,
    pub remediation: Option<Remediation>,
    pub last_signal: Option<EvaluationSignal>,
    pub settings: DialogueSettings,
}

/// Starts a session in `ProblemFraming` whose transcript holds one System
/// turn carrying the problem statement.
pub fn create_session(
    id: impl Into<String>,
    config: SystemConfig,
    problem: ProblemInstance,
    bandit: BanditState,
    settings: DialogueSettings,
) -> Result<DialogueSession, DialogueError> {
    problem.validate()?;
    let mut session = DialogueSession {
        id: id.into(),
        config,
        stage: Stage::ProblemFraming,
        status: SessionStatus::Active,
        transcript: Vec::new(),
        bandit,
        stage_turn_count: 0,
        remediation: None,
        last_signal: None,
        settings,
        problem,
    };
    let opening = Turn::new(Role::System, Stage::ProblemFraming, session.problem.statement.clone());
    session.transcript.push(opening);
    Ok(session)
}

impl DialogueSession {
    pub fn is_active(&self) -> bool {
        self.status == SessionStatus::Active
    }

    pub fn last_turn_with_role(&self, role: Role) -> Option<&Turn> {
        self.transcript.iter().rev().find(|t| t.role == role)
    }

    pub fn instructor_turns(&self) -> impl Iterator<Item = &Turn> {
        self.transcript.iter().filter(|t| t.role == Role::Instructor)
    }

    /// Appends a turn, assigning its index and timestamp.
    ///
    /// Only the opening turn may be a System turn; afterwards instructor and
    /// learner turns alternate (either may speak first).
    pub fn append_turn(&mut self, mut turn: Turn) -> Result<&Turn, DialogueError> {
        if !self.is_active() {
            return Err(DialogueError::SessionCompleted);
        }
        let previous = self.transcript.last().map(|t| t.role);
        let ok = match (previous, turn.role) {
            (None, Role::System) => true,
            (_, Role::System) | (None, _) => false,
            (Some(prev), role) => prev != role,
        };
        if !ok {
            return Err(DialogueError::RoleOrderViolation {
                previous: previous.map(Role::as_str).unwrap_or("(none)"),
                got: turn.role.as_str(),
            });
        }
        if !turn.cited_facts.is_empty()
            && !(turn.role == Role::Instructor && self.config.uses_graph())
        {
            return Err(DialogueError::CitationNotAllowed);
        }
        turn.index = self.transcript.len();
        turn.timestamp = self.transcript.last().map_or(0, |t| t.timestamp + 1);
        if turn.role == Role::Instructor {
            self.stage_turn_count += 1;
        }
        self.transcript.push(turn);
        Ok(self.transcript.last().expect("just pushed"))
    }

    /// Applies one evaluation signal to the stage machine.
    pub fn advance_stage(&mut self, signal: &EvaluationSignal) -> Result<Stage, DialogueError> {
        stage::advance(self, signal.score)
    }

    /// Turns as line-delimited JSON records.
    pub fn transcript_jsonl(&self) -> String {
        let mut out = String::new();
        for t in &self.transcript {
            out.push_str(&serde_json::to_string(t).expect("turn serializes"));
            out.push('\n');
        }
        out
    }
}
