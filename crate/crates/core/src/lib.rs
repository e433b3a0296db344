//! Knowledge-graph-grounded Socratic tutoring engine.
//!
//! - [`kg`]: the mathematics knowledge graph, alias linking and retrieval.
//! - [`dialogue`]: sessions, the Socratic stage machine and prompt assembly.
//! - [`agent`]: completion backends and the instructor pipeline.
//! - [`adaptation`]: UCB1 over strategy directives.
//! - [`eval`]: solver, learner rubric, metrics and the ablation harness.
//! - [`tutor`]: the per-message loop tying them together.

pub mod adaptation;
pub mod agent;
pub mod config;
pub mod dialogue;
pub mod eval;
pub mod kg;
pub mod tutor;

pub use adaptation::{BanditState, StrategyArm};
pub use config::AppConfig;
pub use dialogue::{DialogueSession, ProblemInstance, Role, Stage, SystemConfig, Turn};
pub use kg::KnowledgeGraph;
pub use tutor::{Exchange, Tutor, TutorError, TutorSettings};
