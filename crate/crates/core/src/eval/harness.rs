use std::sync::Arc;

use crate::adaptation::StrategyArm;
use crate::agent::{scripted_learner_step, BackendFactory, CallCounts, LearnerScript};
use crate::dialogue::{DialogueSession, ProblemInstance, SystemConfig};
use crate::kg::KnowledgeGraph;
use crate::tutor::{Tutor, TutorError, TutorSettings};

use super::metrics::{session_metrics, AblationReport};
use super::rubric::EvaluationSignal;

/// Everything a scripted run needs. Each configuration gets a fresh backend
/// from `backend` and a rewound copy of `learner_script`.
#[derive(Clone, Copy)]
pub struct AblationInputs<'a> {
    pub problem: &'a ProblemInstance,
    pub graph: &'a Arc<KnowledgeGraph>,
    pub backend: &'a dyn BackendFactory,
    pub learner_script: &'a LearnerScript,
    pub arms: &'a [StrategyArm],
    pub settings: TutorSettings,
}

#[derive(Debug, Clone)]
pub struct SessionRun {
    pub session: DialogueSession,
    pub signals: Vec<EvaluationSignal>,
    pub counts: CallCounts,
}

#[derive(Debug, Clone)]
pub struct AblationOutcome {
    pub report: AblationReport,
    pub runs: Vec<SessionRun>,
}

/// Drives one scripted session until the stage machine completes it.
pub fn run_session_to_completion(
    config: SystemConfig,
    inputs: &AblationInputs<'_>,
) -> Result<SessionRun, TutorError> {
    let tutor = Tutor::new(Arc::clone(inputs.graph), inputs.arms.to_vec(), inputs.settings)?;
    let backend = inputs.backend.create();
    let (mut session, _) = tutor.start_session(
        format!("ablation-{config}"),
        config,
        inputs.problem.clone(),
        backend.as_ref(),
    )?;
    let mut script = inputs.learner_script.rewound();
    let mut signals = Vec::new();
    while session.is_active() {
        let learner = scripted_learner_step(&mut script, &session)?;
        let exchange = tutor.respond(&mut session, backend.as_ref(), &learner.text)?;
        signals.push(exchange.signal);
    }
    Ok(SessionRun {
        session,
        signals,
        counts: tutor.counts(),
    })
}

/// Runs all three configurations on identical inputs.
pub fn run_ablation(inputs: &AblationInputs<'_>) -> Result<AblationOutcome, TutorError> {
    let runs: Vec<Result<SessionRun, TutorError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = SystemConfig::ALL
            .iter()
            .map(|&config| scope.spawn(move || run_session_to_completion(config, inputs)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("ablation worker panicked"))
            .collect()
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let report = AblationReport {
        records: runs.iter().map(|r| session_metrics(&r.session)).collect(),
    };
    Ok(AblationOutcome { report, runs })
}
