//! Ground-truth solver, learner scoring, and the three-configuration
//! ablation harness.

mod harness;
mod metrics;
mod rubric;
mod solver;

use thiserror::Error;

pub use harness::{run_ablation, run_session_to_completion, AblationInputs, AblationOutcome, SessionRun};
pub use metrics::{session_metrics, AblationReport, SessionMetrics};
pub use rubric::{evaluate_learner, EvaluationSignal, Verdict};
pub use solver::{solve_heads_legs, AnimalCounts};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("{heads} heads and {legs} legs admit no non-negative integer solution")]
    InfeasibleProblem { heads: u64, legs: u64 },
}
