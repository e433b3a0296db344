use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::backend::{BackendError, BackendFactory, CompletionBackend, CompletionRequest};

/// Reply with `response` when `keyword` occurs (case-insensitively) in the
/// last user message. An empty keyword matches every message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordRule {
    pub keyword: String,
    pub response: String,
}

impl KeywordRule {
    pub fn new(keyword: impl Into<String>, response: impl Into<String>) -> Self {
        Self {
            keyword: keyword.into(),
            response: response.into(),
        }
    }
}

/// Configuration of a scripted backend: keyword rules, checked in order,
/// and an ordered list of responses used when no rule matches.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScriptedSpec {
    pub rules: Vec<KeywordRule>,
    pub responses: Vec<String>,
}

impl ScriptedSpec {
    pub fn from_responses<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            rules: Vec::new(),
            responses: responses.into_iter().map(Into::into).collect(),
        }
    }

    pub fn from_rules(rules: Vec<KeywordRule>) -> Self {
        Self {
            rules,
            responses: Vec::new(),
        }
    }

    /// Instructor replies for the bundled chicken-rabbit demo.
    pub fn demo() -> Self {
        Self::from_rules(vec![
            KeywordRule::new(
                "how many chickens and how many rabbits",
                "Before counting anything, what does each head tell us about the animals in the pen?",
            ),
            KeywordRule::new(
                "2c + 4r",
                "Now you have two equations. Which unknown could you eliminate first, and how?",
            ),
            KeywordRule::new(
                "c + r",
                "Good, one head per animal. What equation do the legs give us?",
            ),
            KeywordRule::new(
                "not sure",
                "Let us slow down. If every animal were a chicken, how many legs would we count?",
            ),
            KeywordRule::new(
                "if there were",
                "Nice generalization. Which steps of your method stay the same when the totals change?",
            ),
            KeywordRule::new(
                "checking",
                "You verified both conditions. What would change if we asked about ducks and dogs instead?",
            ),
            KeywordRule::new(
                "chickens and",
                "How can you confirm those counts satisfy both the heads and the legs?",
            ),
            KeywordRule::new("", "What do we know about the total number of heads?"),
        ])
    }
}

/// Deterministic backend driven by a [`ScriptedSpec`].
///
/// Running out of responses is an error; the script is never recycled.
#[derive(Debug)]
pub struct ScriptedBackend {
    spec: ScriptedSpec,
    lowered: Vec<String>,
    cursor: AtomicUsize,
}

impl ScriptedBackend {
    pub fn new(spec: ScriptedSpec) -> Self {
        Self::at(spec, 0)
    }

    pub fn at(spec: ScriptedSpec, cursor: usize) -> Self {
        let lowered = spec.rules.iter().map(|r| r.keyword.to_lowercase()).collect();
        Self {
            spec,
            lowered,
            cursor: AtomicUsize::new(cursor),
        }
    }

    pub fn from_responses<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(ScriptedSpec::from_responses(responses))
    }

    /// Number of sequential responses consumed so far.
    pub fn consumed(&self) -> usize {
        self.cursor.load(Ordering::SeqCst)
    }
}

impl CompletionBackend for ScriptedBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        let user = request.last_user_message().unwrap_or_default().to_lowercase();
        if let Some(i) = self.lowered.iter().position(|k| user.contains(k.as_str())) {
            return Ok(self.spec.rules[i].response.clone());
        }
        if self.spec.responses.is_empty() {
            return Err(BackendError::NoRuleMatched);
        }
        let next = self
            .cursor
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |c| {
                (c < self.spec.responses.len()).then_some(c + 1)
            })
            .map_err(|consumed| BackendError::ScriptExhausted { consumed })?;
        Ok(self.spec.responses[next].clone())
    }

    fn checkpoint(&self) -> Option<u64> {
        Some(self.consumed() as u64)
    }
}

impl BackendFactory for ScriptedSpec {
    fn create(&self) -> Arc<dyn CompletionBackend> {
        Arc::new(ScriptedBackend::new(self.clone()))
    }

    fn resume(&self, checkpoint: Option<u64>) -> Arc<dyn CompletionBackend> {
        let cursor = checkpoint.unwrap_or(0) as usize;
        Arc::new(ScriptedBackend::at(self.clone(), cursor))
    }
}
