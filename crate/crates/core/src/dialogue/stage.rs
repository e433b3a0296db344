use serde::{Deserialize, Serialize};

use super::{DialogueError, DialogueSession, SessionStatus, Stage};

/// An active remediation detour into `IterativeFeedback`.
///
/// `resume` is where the session goes when the detour ends (`None` means the
/// interrupted stage was `Closure`, so the session completes). `budget` is
/// what was left of the interrupted stage's turn allowance, which keeps the
/// detour inside that stage's share of the overall turn bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Remediation {
    pub resume: Option<Stage>,
    pub budget: u32,
}

pub(super) fn advance(session: &mut DialogueSession, score: f64) -> Result<Stage, DialogueError> {
    if session.status == SessionStatus::Completed {
        return Err(DialogueError::SessionCompleted);
    }
    let settings = session.settings;
    let limit = match session.remediation {
        Some(r) if session.stage == Stage::IterativeFeedback => r.budget,
        _ => settings.max_turns_per_stage,
    };

    if score >= settings.advance_threshold || session.stage_turn_count >= limit {
        move_forward(session);
    } else if score >= settings.remediation_threshold || session.stage == Stage::IterativeFeedback {
        // stay
    } else {
        let resume = session.stage.successor();
        if resume == Some(Stage::IterativeFeedback) {
            move_forward(session);
        } else {
            session.remediation = Some(Remediation {
                resume,
                budget: settings.max_turns_per_stage - session.stage_turn_count,
            });
            session.stage = Stage::IterativeFeedback;
            session.stage_turn_count = 0;
        }
    }
    Ok(session.stage)
}

fn move_forward(session: &mut DialogueSession) {
    let next = match session.remediation.take() {
        Some(r) if session.stage == Stage::IterativeFeedback => r.resume,
        _ => session.stage.successor(),
    };
    session.stage_turn_count = 0;
    match next {
        Some(stage) => session.stage = stage,
        None => session.status = SessionStatus::Completed,
    }
}
