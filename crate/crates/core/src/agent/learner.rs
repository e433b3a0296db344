use serde::{Deserialize, Serialize};

use super::AgentError;
use crate::dialogue::{DialogueSession, Role, Turn};

/// Bundled learner replies for the chicken-rabbit demo.
pub const DEMO_LEARNER_JSON: &str = include_str!("../../data/learner.json");

/// Scripted learner replies, consumed in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnerScript {
    pub utterances: Vec<String>,
    #[serde(skip)]
    cursor: usize,
}

impl LearnerScript {
    pub fn new<I, S>(utterances: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            utterances: utterances.into_iter().map(Into::into).collect(),
            cursor: 0,
        }
    }

    pub fn demo() -> Self {
        serde_json::from_str(DEMO_LEARNER_JSON).expect("bundled learner script is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn remaining(&self) -> usize {
        self.utterances.len() - self.cursor
    }

    /// The same utterances with the cursor rewound.
    pub fn rewound(&self) -> Self {
        Self::new(self.utterances.clone())
    }

    fn next_utterance(&mut self) -> Option<&str> {
        let text = self.utterances.get(self.cursor)?;
        self.cursor += 1;
        Some(text)
    }
}

/// Builds the next learner turn from `script`.
pub fn scripted_learner_step(
    script: &mut LearnerScript,
    session: &DialogueSession,
) -> Result<Turn, AgentError> {
    if !session.is_active() {
        return Err(AgentError::SessionInactive);
    }
    let used = script.cursor;
    let text = script
        .next_utterance()
        .ok_or(AgentError::ScriptExhausted { consumed: used })?;
    Ok(Turn::new(Role::Learner, session.stage, text))
}
