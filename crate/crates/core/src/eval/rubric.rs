use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::solver::{solve_heads_legs, AnimalCounts};
use super::EvalError;
use crate::dialogue::ProblemInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Correct,
    Partial,
    Incorrect,
    NoAttempt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSignal {
    pub score: f64,
    pub verdict: Verdict,
    pub extracted_answer: Option<AnimalCounts>,
}

impl EvaluationSignal {
    /// The baseline a session starts from.
    pub fn zero() -> Self {
        Self {
            score: 0.0,
            verdict: Verdict::NoAttempt,
            extracted_answer: None,
        }
    }
}

fn integer_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[0-9]+").expect("valid regex"))
}

/// Lowercases and drops whitespace around `+`, `=` and multiplication signs
/// (and the signs themselves), so that `2 * c + 4 r = 94` becomes `2c+4r=94`
/// while separate words stay separate.
fn squash(text: &str) -> String {
    static OPERATOR_SPACE: OnceLock<Regex> = OnceLock::new();
    static COEFFICIENT_SPACE: OnceLock<Regex> = OnceLock::new();
    let operators = OPERATOR_SPACE
        .get_or_init(|| Regex::new(r"\s*([+=*\u{00b7}\u{00d7}])\s*").expect("valid regex"));
    let coefficients =
        COEFFICIENT_SPACE.get_or_init(|| Regex::new(r"([0-9])\s+([a-z])").expect("valid regex"));
    let lowered = text.to_lowercase();
    let tight = operators.replace_all(&lowered, "$1");
    let tight = coefficients.replace_all(&tight, "$1$2");
    tight
        .chars()
        .filter(|c| !matches!(c, '*' | '\u{00b7}' | '\u{00d7}'))
        .collect()
}

/// True when the text states `x+y=heads` or `2x+4y=legs` for single-letter
/// unknowns, with the problem's numbers in place.
fn states_constraint(text: &str, problem: &ProblemInstance) -> bool {
    let squashed = squash(text);
    let heads = format!(r"(?:^|[^a-z0-9])[a-z]\+[a-z]={}(?:[^0-9]|$)", problem.heads);
    let legs = format!(r"(?:^|[^a-z0-9])2[a-z]\+4[a-z]={}(?:[^0-9]|$)", problem.legs);
    [heads, legs]
        .iter()
        .any(|p| Regex::new(p).expect("valid regex").is_match(&squashed))
}

/// Scores a learner utterance against the problem's unique solution.
///
/// The last two integers in the text are read as (chickens, rabbits).
/// Both right scores 1.0; one right, or a correct constraint equation,
/// scores 0.5; anything else scores 0.0.
pub fn evaluate_learner(
    turn_text: &str,
    problem: &ProblemInstance,
) -> Result<EvaluationSignal, EvalError> {
    let solution = solve_heads_legs(problem.heads, problem.legs).ok_or(EvalError::InfeasibleProblem {
        heads: problem.heads,
        legs: problem.legs,
    })?;

    let numbers: Vec<Option<u64>> = integer_pattern()
        .find_iter(turn_text)
        .map(|m| m.as_str().parse().ok())
        .collect();

    let extracted_answer = match numbers.as_slice() {
        [.., Some(c), Some(r)] => Some(AnimalCounts { chickens: *c, rabbits: *r }),
        _ => None,
    };
    let matches = match numbers.as_slice() {
        [.., c, r] => {
            usize::from(*c == Some(solution.chickens)) + usize::from(*r == Some(solution.rabbits))
        }
        _ => 0,
    };

    let (score, verdict) = if matches == 2 {
        (1.0, Verdict::Correct)
    } else if matches == 1 || states_constraint(turn_text, problem) {
        (0.5, Verdict::Partial)
    } else if numbers.is_empty() {
        (0.0, Verdict::NoAttempt)
    } else {
        (0.0, Verdict::Incorrect)
    };

    Ok(EvaluationSignal {
        score,
        verdict,
        extracted_answer,
    })
}
