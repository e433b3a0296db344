//! Role-based agents, completion backends and the instructor pipeline.

mod backend;
mod learner;
mod remote;
mod scripted;

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adaptation::StrategyArm;
use crate::dialogue::{assemble_prompt, DialogueSession, Role, Turn, INSTRUCTOR_PERSONA};
use crate::kg::{link_knowledge_points, query_context, render_facts, KgError, KnowledgeGraph};

pub use backend::{
    complete, BackendError, BackendFactory, ChatMessage, ChatRole, CompletionBackend,
    CompletionRequest,
};
pub use learner::{scripted_learner_step, LearnerScript, DEMO_LEARNER_JSON};
pub use remote::{wire_body, RemoteBackend, API_KEY_ENV, BASE_URL_ENV};
pub use scripted::{KeywordRule, ScriptedBackend, ScriptedSpec};

/// System prompt used when no agents are configured.
pub const PLAIN_TUTOR_PERSONA: &str = "You are a mathematics tutor. Help the learner with the \
problem using open-ended questions and step-by-step reasoning.";

pub const LEARNER_PERSONA: &str = "You are a learner working on a mathematics word problem. \
Answer the instructor's questions in a sentence or two and show your reasoning.";

pub const EVALUATOR_PERSONA: &str = "You are an evaluator. Compare the learner's latest answer \
with the known solution and report whether it is correct, partially correct or incorrect.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    Instructor,
    LearnerSim,
    Evaluator,
}

impl AgentRole {
    pub fn persona_text(self) -> &'static str {
        match self {
            AgentRole::Instructor => INSTRUCTOR_PERSONA,
            AgentRole::LearnerSim => LEARNER_PERSONA,
            AgentRole::Evaluator => EVALUATOR_PERSONA,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AgentError {
    #[error("backend failure: {0}")]
    BackendFailure(#[from] BackendError),
    #[error(transparent)]
    Retrieval(#[from] KgError),
    #[error("a knowledge graph must be supplied exactly when the session is agent_kg")]
    GraphConfigMismatch,
    #[error("learner script exhausted after {consumed} utterances")]
    ScriptExhausted { consumed: usize },
    #[error("session is not active")]
    SessionInactive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalSettings {
    pub hop_limit: u32,
    pub cap: usize,
}

impl Default for RetrievalSettings {
    fn default() -> Self {
        Self { hop_limit: 1, cap: 12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationSettings {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for GenerationSettings {
    fn default() -> Self {
        Self {
            temperature: 0.2,
            max_tokens: 512,
        }
    }
}

/// Call counters for instrumenting which subsystems a run touched.
#[derive(Debug, Default)]
pub struct CallCounters {
    retrievals: AtomicU64,
    completions: AtomicU64,
    bandit_selections: AtomicU64,
    bandit_updates: AtomicU64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallCounts {
    pub retrievals: u64,
    pub completions: u64,
    pub bandit_selections: u64,
    pub bandit_updates: u64,
}

impl CallCounters {
    pub fn snapshot(&self) -> CallCounts {
        CallCounts {
            retrievals: self.retrievals.load(Ordering::Relaxed),
            completions: self.completions.load(Ordering::Relaxed),
            bandit_selections: self.bandit_selections.load(Ordering::Relaxed),
            bandit_updates: self.bandit_updates.load(Ordering::Relaxed),
        }
    }

    pub(crate) fn retrieval(&self) {
        self.retrievals.fetch_add(1, Ordering::Relaxed);
    }

    pub(crate) fn completion(&self) {
        self.completions.fetch_add(1, Ordering::Relaxed);
    }

    pub(crate) fn bandit_selection(&self) {
        self.bandit_selections.fetch_add(1, Ordering::Relaxed);
    }

    pub(crate) fn bandit_update(&self) {
        self.bandit_updates.fetch_add(1, Ordering::Relaxed);
    }
}

/// Shared inputs to [`instructor_step`].
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub graph: Option<&'a KnowledgeGraph>,
    pub retrieval: RetrievalSettings,
    pub generation: GenerationSettings,
    pub counters: &'a CallCounters,
}

/// Produces the next instructor turn without appending it.
///
/// For `agent_kg` sessions the last learner utterance is linked to graph
/// nodes, the problem's hint ids are added as further seeds, and the
/// retrieved facts are rendered into the prompt and recorded as the turn's
/// citations. `no_agent` sessions get a plain completion over the history.
pub fn instructor_step(
    session: &DialogueSession,
    ctx: &StepContext<'_>,
    backend: &dyn CompletionBackend,
    directive: Option<&StrategyArm>,
) -> Result<Turn, AgentError> {
    if !session.is_active() {
        return Err(AgentError::SessionInactive);
    }
    if ctx.graph.is_some() != session.config.uses_graph() {
        return Err(AgentError::GraphConfigMismatch);
    }

    let last_learner = session.last_turn_with_role(Role::Learner);
    let mut cited = Vec::new();
    let request = if session.config.uses_agents() {
        let mut context = String::new();
        if let Some(graph) = ctx.graph {
            ctx.counters.retrieval();
            let mut seeds =
                link_knowledge_points(last_learner.map_or("", |t| t.text.as_str()), graph);
            for hint in &session.problem.knowledge_point_hints {
                if graph.contains(hint) && !seeds.contains(hint) {
                    seeds.push(hint.clone());
                }
            }
            let bundle =
                query_context(graph, &seeds, ctx.retrieval.hop_limit, ctx.retrieval.cap)?;
            context = render_facts(&bundle, graph);
            cited = bundle.fact_refs();
        }
        let prompt = assemble_prompt(
            session,
            &context,
            directive.map_or("", |a| a.directive.as_str()),
        );
        let user = last_learner.map_or(session.problem.statement.as_str(), |t| t.text.as_str());
        vec![
            ChatMessage::new(ChatRole::System, prompt),
            ChatMessage::new(ChatRole::User, user),
        ]
    } else {
        let window = session.settings.history_window;
        let start = session.transcript.len().saturating_sub(window);
        std::iter::once(ChatMessage::new(ChatRole::System, PLAIN_TUTOR_PERSONA))
            .chain(session.transcript[start..].iter().map(|t| {
                let role = match t.role {
                    Role::Instructor => ChatRole::Assistant,
                    Role::Learner | Role::System => ChatRole::User,
                };
                ChatMessage::new(role, t.text.clone())
            }))
            .collect()
    };

    let request = CompletionRequest {
        messages: request,
        temperature: ctx.generation.temperature,
        max_tokens: ctx.generation.max_tokens,
    };
    ctx.counters.completion();
    let text = complete(backend, &request)?;

    let mut turn = Turn::new(Role::Instructor, session.stage, text);
    if session.config.uses_agents() {
        turn.strategy_arm = directive.map(|a| a.id.clone());
    }
    turn.cited_facts = cited;
    turn.index = session.transcript.len();
    Ok(turn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptation::{default_arms, BanditState};
    use crate::dialogue::{create_session, DialogueSettings, ProblemInstance, SystemConfig};

    fn session(config: SystemConfig) -> DialogueSession {
        create_session(
            "a",
            config,
            ProblemInstance::demo(),
            BanditState::new(default_arms()),
            DialogueSettings::default(),
        )
        .unwrap()
    }

    fn ctx<'a>(graph: Option<&'a KnowledgeGraph>, counters: &'a CallCounters) -> StepContext<'a> {
        StepContext {
            graph,
            retrieval: RetrievalSettings::default(),
            generation: GenerationSettings::default(),
            counters,
        }
    }

    #[test]
    fn kg_turn_cites_the_retrieved_bundle() {
        let graph = KnowledgeGraph::demo();
        let counters = CallCounters::default();
        let mut s = session(SystemConfig::AgentWithKG);
        s.append_turn(Turn::new(Role::Instructor, s.stage, "What do the legs say?"))
            .unwrap();
        s.append_turn(Turn::new(Role::Learner, s.stage, "we should use substitution"))
            .unwrap();
        let backend = ScriptedBackend::from_responses(["Which variable would you isolate?"]);
        let arm = &default_arms()[1];
        let turn = instructor_step(&s, &ctx(Some(&graph), &counters), &backend, Some(arm)).unwrap();

        let mut seeds = vec!["substitution_method".to_string()];
        seeds.extend(s.problem.knowledge_point_hints.iter().cloned());
        let expected = query_context(&graph, &seeds, 1, 12).unwrap();
        assert!(!expected.facts.is_empty());
        assert_eq!(turn.cited_facts, expected.fact_refs());
        assert_eq!(turn.strategy_arm.as_deref(), Some("question_first"));
        assert_eq!(turn.role, Role::Instructor);
        assert_eq!(counters.snapshot().retrievals, 1);
    }

    #[test]
    fn no_kg_turn_uses_script_and_cites_nothing() {
        let counters = CallCounters::default();
        let s = session(SystemConfig::AgentNoKG);
        let backend = ScriptedBackend::from_responses(["What do we know about the total heads?"]);
        let turn = instructor_step(&s, &ctx(None, &counters), &backend, None).unwrap();
        assert_eq!(turn.text, "What do we know about the total heads?");
        assert!(turn.cited_facts.is_empty());
        assert_eq!(counters.snapshot().retrievals, 0);
    }

    #[test]
    fn empty_script_is_backend_failure() {
        let counters = CallCounters::default();
        let s = session(SystemConfig::AgentNoKG);
        let backend = ScriptedBackend::from_responses(Vec::<String>::new());
        let err = instructor_step(&s, &ctx(None, &counters), &backend, None).unwrap_err();
        assert!(matches!(err, AgentError::BackendFailure(_)));
    }

    #[test]
    fn graph_must_match_config() {
        let graph = KnowledgeGraph::demo();
        let counters = CallCounters::default();
        let backend = ScriptedBackend::from_responses(["q?"]);
        let s = session(SystemConfig::AgentNoKG);
        assert_eq!(
            instructor_step(&s, &ctx(Some(&graph), &counters), &backend, None),
            Err(AgentError::GraphConfigMismatch)
        );
        let s = session(SystemConfig::AgentWithKG);
        assert_eq!(
            instructor_step(&s, &ctx(None, &counters), &backend, None),
            Err(AgentError::GraphConfigMismatch)
        );
    }

    #[test]
    fn no_agent_sends_plain_history() {
        struct Capture(std::sync::Mutex<Vec<CompletionRequest>>);
        impl CompletionBackend for Capture {
            fn complete(&self, r: &CompletionRequest) -> Result<String, BackendError> {
                self.0.lock().unwrap().push(r.clone());
                Ok("ok?".into())
            }
        }
        let counters = CallCounters::default();
        let mut s = session(SystemConfig::NoAgent);
        s.append_turn(Turn::new(Role::Learner, s.stage, "help")).unwrap();
        let backend = Capture(Default::default());
        let arm = &default_arms()[0];
        let turn = instructor_step(&s, &ctx(None, &counters), &backend, Some(arm)).unwrap();
        assert_eq!(turn.strategy_arm, None);
        let sent = backend.0.lock().unwrap();
        let roles: Vec<ChatRole> = sent[0].messages.iter().map(|m| m.role).collect();
        assert_eq!(roles, vec![ChatRole::System, ChatRole::User, ChatRole::User]);
        assert_eq!(sent[0].messages[0].content, PLAIN_TUTOR_PERSONA);
        assert!(!sent[0].messages.iter().any(|m| m.content.contains("[STRATEGY]")));
    }

    #[test]
    fn personas_are_non_empty() {
        for role in [AgentRole::Instructor, AgentRole::LearnerSim, AgentRole::Evaluator] {
            assert!(!role.persona_text().is_empty());
        }
    }
}
