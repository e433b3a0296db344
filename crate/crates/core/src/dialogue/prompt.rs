use super::{DialogueSession, Stage};

pub const INSTRUCTOR_PERSONA: &str = "You are the instructor in a Socratic mathematics tutoring \
dialogue. Lead the learner to the solution through questions so that they do the reasoning \
themselves. Never state the final answer outright. Always end your turn with a question.";

pub fn stage_goal(stage: Stage) -> &'static str {
    match stage {
        Stage::ProblemFraming => {
            "Help the learner restate the problem and separate what is known from what is unknown."
        }
        Stage::GuidedQuestioning => {
            "Ask targeted questions that lead the learner to express each condition as an equation."
        }
        Stage::SequentialReasoning => {
            "Have the learner solve the equations one explicit step at a time, justifying each step."
        }
        Stage::IterativeFeedback => {
            "Show the learner where the reasoning went wrong and have them check and correct it."
        }
        Stage::ExploratoryInquiry => {
            "Invite the learner to generalize, for example what would change if legs were counted differently."
        }
        Stage::Closure => {
            "Have the learner summarize the method and confirm the answer satisfies every condition."
        }
    }
}

/// Builds the instructor prompt from five labeled sections, always in the
/// order `[ROLE]`, `[STAGE]`, `[STRATEGY]`, `[KNOWLEDGE]`, `[HISTORY]`.
///
/// `[STRATEGY]` is left empty without agents and `[KNOWLEDGE]` is left empty
/// unless the session is grounded in the graph. `[HISTORY]` holds the last
/// `history_window` turns, oldest first.
pub fn assemble_prompt(session: &DialogueSession, context: &str, directive: &str) -> String {
    let strategy = if session.config.uses_agents() { directive } else { "" };
    let knowledge = if session.config.uses_graph() { context } else { "" };
    let window = session.settings.history_window;
    let start = session.transcript.len().saturating_sub(window);
    let history = session.transcript[start..]
        .iter()
        .map(|t| format!("{}: {}", t.role.as_str(), t.text))
        .collect::<Vec<_>>()
        .join("\n");
    let stage = format!("{}: {}", session.stage, stage_goal(session.stage));

    [
        ("ROLE", INSTRUCTOR_PERSONA),
        ("STAGE", stage.as_str()),
        ("STRATEGY", strategy),
        ("KNOWLEDGE", knowledge),
        ("HISTORY", history.as_str()),
    ]
    .iter()
    .map(|(name, body)| {
        if body.is_empty() {
            format!("[{name}]")
        } else {
            format!("[{name}]\n{body}")
        }
    })
    .collect::<Vec<_>>()
    .join("\n\n")
}
