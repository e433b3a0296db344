//! One tutoring loop shared by the CLI, the HTTP service and the ablation
//! harness.
//!
//! Per learner message: append the learner turn, score it, credit the
//! strategy arm used by the previous instructor turn, advance the stage
//! machine, then generate the next instructor turn if the session is still
//! active.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adaptation::{reward_from_signals, BanditError, BanditState, StrategyArm};
use crate::agent::{
    instructor_step, AgentError, CallCounters, CallCounts, CompletionBackend, GenerationSettings,
    RetrievalSettings, StepContext,
};
use crate::dialogue::{
    create_session, DialogueError, DialogueSession, DialogueSettings, ProblemInstance, Role,
    SessionStatus, Stage, SystemConfig, Turn,
};
use crate::eval::{evaluate_learner, solve_heads_legs, EvalError, EvaluationSignal};
use crate::kg::KnowledgeGraph;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TutorSettings {
    pub dialogue: DialogueSettings,
    pub retrieval: RetrievalSettings,
    pub generation: GenerationSettings,
}

#[derive(Debug, Error, PartialEq)]
pub enum TutorError {
    #[error(transparent)]
    Dialogue(#[from] DialogueError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Bandit(#[from] BanditError),
}

/// Result of one learner message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub learner_turn: Turn,
    pub signal: EvaluationSignal,
    pub instructor_turn: Option<Turn>,
    pub stage: Stage,
    pub status: SessionStatus,
}

pub struct Tutor {
    graph: Arc<KnowledgeGraph>,
    arms: Vec<StrategyArm>,
    settings: TutorSettings,
    counters: CallCounters,
}

impl Tutor {
    pub fn new(
        graph: Arc<KnowledgeGraph>,
        arms: Vec<StrategyArm>,
        settings: TutorSettings,
    ) -> Result<Self, TutorError> {
        BanditState::try_new(arms.clone())?;
        Ok(Self {
            graph,
            arms,
            settings,
            counters: CallCounters::default(),
        })
    }

    pub fn graph(&self) -> &Arc<KnowledgeGraph> {
        &self.graph
    }

    pub fn settings(&self) -> &TutorSettings {
        &self.settings
    }

    pub fn counts(&self) -> CallCounts {
        self.counters.snapshot()
    }

    /// A fresh session; the problem must have a solution.
    pub fn create_session(
        &self,
        id: impl Into<String>,
        config: SystemConfig,
        problem: ProblemInstance,
    ) -> Result<DialogueSession, TutorError> {
        if solve_heads_legs(problem.heads, problem.legs).is_none() {
            return Err(DialogueError::InvalidProblem(format!(
                "no non-negative integer solution for {} heads and {} legs",
                problem.heads, problem.legs
            ))
            .into());
        }
        let bandit = BanditState::new(self.arms.clone());
        Ok(create_session(id, config, problem, bandit, self.settings.dialogue)?)
    }

    /// Agent configurations open with a `ProblemFraming` instructor turn;
    /// `no_agent` sessions wait for the learner.
    pub fn open(
        &self,
        session: &mut DialogueSession,
        backend: &dyn CompletionBackend,
    ) -> Result<Option<Turn>, TutorError> {
        if !session.config.uses_agents() || session.transcript.len() != 1 {
            return Ok(None);
        }
        self.instructor_turn(session, backend).map(Some)
    }

    pub fn start_session(
        &self,
        id: impl Into<String>,
        config: SystemConfig,
        problem: ProblemInstance,
        backend: &dyn CompletionBackend,
    ) -> Result<(DialogueSession, Option<Turn>), TutorError> {
        let mut session = self.create_session(id, config, problem)?;
        let opener = self.open(&mut session, backend)?;
        Ok((session, opener))
    }

    /// Generates and appends the next instructor turn.
    pub fn instructor_turn(
        &self,
        session: &mut DialogueSession,
        backend: &dyn CompletionBackend,
    ) -> Result<Turn, TutorError> {
        let arm = if session.config.uses_agents() {
            self.counters.bandit_selection();
            Some(session.bandit.select()?.clone())
        } else {
            None
        };
        let ctx = StepContext {
            graph: session.config.uses_graph().then_some(self.graph.as_ref()),
            retrieval: self.settings.retrieval,
            generation: self.settings.generation,
            counters: &self.counters,
        };
        let turn = instructor_step(session, &ctx, backend, arm.as_ref())?;
        Ok(session.append_turn(turn)?.clone())
    }

    /// Handles one learner message end to end.
    pub fn respond(
        &self,
        session: &mut DialogueSession,
        backend: &dyn CompletionBackend,
        text: &str,
    ) -> Result<Exchange, TutorError> {
        let learner_turn = session
            .append_turn(Turn::new(Role::Learner, session.stage, text))?
            .clone();
        let signal = evaluate_learner(text, &session.problem)?;

        if session.config.uses_agents() {
            let arm = session
                .last_turn_with_role(Role::Instructor)
                .and_then(|t| t.strategy_arm.clone());
            if let Some(arm) = arm {
                let previous = session.last_signal.clone().unwrap_or_else(EvaluationSignal::zero);
                session
                    .bandit
                    .update(&arm, reward_from_signals(&previous, &signal))?;
                self.counters.bandit_update();
            }
        }

        session.advance_stage(&signal)?;
        session.last_signal = Some(signal.clone());

        let instructor_turn = if session.is_active() {
            Some(self.instructor_turn(session, backend)?)
        } else {
            None
        };
        Ok(Exchange {
            learner_turn,
            signal,
            instructor_turn,
            stage: session.stage,
            status: session.status,
        })
    }
}
