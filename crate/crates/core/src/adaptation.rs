//! UCB1 selection of the instructor's strategy directive.
//!
//! Each session carries its own [`BanditState`]. Before an instructor turn
//! the tutor picks an arm with [`BanditState::select_arm`]; once the
//! learner's reply has been scored the arm is credited with
//! [`reward_from_signals`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::EvaluationSignal;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyArm {
    pub id: String,
    pub directive: String,
}

impl StrategyArm {
    pub fn new(id: impl Into<String>, directive: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            directive: directive.into(),
        }
    }
}

/// hint-first, question-first, worked-example-first, recap-first.
pub fn default_arms() -> Vec<StrategyArm> {
    vec![
        StrategyArm::new(
            "hint_first",
            "Open with a small hint about the next step, then ask the learner to take it.",
        ),
        StrategyArm::new(
            "question_first",
            "Ask one short probing question without giving any hint.",
        ),
        StrategyArm::new(
            "worked_example_first",
            "Walk through a smaller analogous example, then ask the learner to apply the same idea.",
        ),
        StrategyArm::new(
            "recap_first",
            "Briefly recap what the learner has established so far, then ask what follows from it.",
        ),
    ]
}

#[derive(Debug, Error, PartialEq)]
pub enum BanditError {
    #[error("the arm set is empty")]
    EmptyArmSet,
    #[error("unknown arm `{0}`")]
    UnknownArm(String),
    #[error("reward {0} is outside [0, 1]")]
    RewardOutOfRange(f64),
    #[error("duplicate arm id `{0}`")]
    DuplicateArm(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditState {
    pub arms: Vec<StrategyArm>,
    pub counts: Vec<u64>,
    pub sums: Vec<f64>,
    pub total_pulls: u64,
}

impl BanditState {
    /// Fresh state. Panics on duplicate arm ids; use [`BanditState::try_new`]
    /// for untrusted arm sets.
    pub fn new(arms: Vec<StrategyArm>) -> Self {
        Self::try_new(arms).expect("arm ids are unique")
    }

    pub fn try_new(arms: Vec<StrategyArm>) -> Result<Self, BanditError> {
        for (i, arm) in arms.iter().enumerate() {
            if arms[..i].iter().any(|a| a.id == arm.id) {
                return Err(BanditError::DuplicateArm(arm.id.clone()));
            }
        }
        let n = arms.len();
        Ok(Self {
            arms,
            counts: vec![0; n],
            sums: vec![0.0; n],
            total_pulls: 0,
        })
    }

    pub fn arm_index(&self, id: &str) -> Option<usize> {
        self.arms.iter().position(|a| a.id == id)
    }

    pub fn mean(&self, index: usize) -> f64 {
        match self.counts[index] {
            0 => 0.0,
            n => self.sums[index] / n as f64,
        }
    }

    /// UCB1: the lowest-index unpulled arm if any, otherwise the argmax of
    /// `mean + sqrt(2 ln(total) / count)` with ties going to the lower index.
    pub fn select_arm(&self) -> Result<usize, BanditError> {
        if self.arms.is_empty() {
            return Err(BanditError::EmptyArmSet);
        }
        if let Some(i) = self.counts.iter().position(|&c| c == 0) {
            return Ok(i);
        }
        let ln_total = (self.total_pulls as f64).ln();
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for i in 0..self.arms.len() {
            let score = self.mean(i) + (2.0 * ln_total / self.counts[i] as f64).sqrt();
            if score > best_score {
                best = i;
                best_score = score;
            }
        }
        Ok(best)
    }

    pub fn select(&self) -> Result<&StrategyArm, BanditError> {
        self.select_arm().map(|i| &self.arms[i])
    }

    pub fn update(&mut self, arm_id: &str, reward: f64) -> Result<(), BanditError> {
        let i = self
            .arm_index(arm_id)
            .ok_or_else(|| BanditError::UnknownArm(arm_id.to_owned()))?;
        if !(0.0..=1.0).contains(&reward) {
            return Err(BanditError::RewardOutOfRange(reward));
        }
        self.counts[i] += 1;
        self.sums[i] += reward;
        self.total_pulls += 1;
        Ok(())
    }
}

/// 1 for an improved score, 0.5 for an unchanged one, 0 for a drop.
pub fn reward_from_signals(previous: &EvaluationSignal, current: &EvaluationSignal) -> f64 {
    reward_from_scores(previous.score, current.score)
}

pub fn reward_from_scores(previous: f64, current: f64) -> f64 {
    if current > previous {
        1.0
    } else if current == previous {
        0.5
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(n: usize) -> BanditState {
        BanditState::new(
            (0..n)
                .map(|i| StrategyArm::new(format!("arm{i}"), "d"))
                .collect(),
        )
    }

    #[test]
    fn cold_start_picks_first_unpulled() {
        let s = state(3);
        assert_eq!(s.select_arm(), Ok(0));
        let mut s = state(3);
        s.update("arm0", 0.0).unwrap();
        assert_eq!(s.select_arm(), Ok(1));
    }

    #[test]
    fn empty_arm_set() {
        assert_eq!(state(0).select_arm(), Err(BanditError::EmptyArmSet));
    }

    #[test]
    fn higher_mean_wins_with_equal_counts() {
        let mut s = state(2);
        s.update("arm0", 0.0).unwrap();
        s.update("arm1", 1.0).unwrap();
        // 1 + sqrt(2 ln 2) > 0 + sqrt(2 ln 2)
        assert_eq!(s.select_arm(), Ok(1));
    }

    #[test]
    fn exploration_bonus_can_beat_exploited_arm() {
        let mut s = state(2);
        for _ in 0..5 {
            s.update("arm0", 1.0).unwrap();
        }
        s.update("arm1", 0.9).unwrap();
        // Independent evaluation: ln 6 = 1.791759469228055
        // arm0: 1.0 + sqrt(2 * 1.791759 / 5) = 1.0 + 0.846584 = 1.846584
        // arm1: 0.9 + sqrt(2 * 1.791759 / 1) = 0.9 + 1.893018 = 2.793018
        let ln6 = 1.791_759_469_228_055_f64;
        let ucb0 = 1.0 + (2.0 * ln6 / 5.0).sqrt();
        let ucb1 = 0.9 + (2.0 * ln6).sqrt();
        assert!((ucb0 - 1.846_584).abs() < 1e-6);
        assert!((ucb1 - 2.793_018).abs() < 1e-6);
        assert_eq!(s.select_arm(), Ok(1));
    }

    #[test]
    fn select_does_not_mutate() {
        let mut s = state(2);
        s.update("arm0", 0.5).unwrap();
        let before = s.clone();
        let _ = s.select_arm();
        assert_eq!(s, before);
    }

    #[test]
    fn update_increments_one_arm() {
        let mut s = state(2);
        s.update("arm0", 1.0).unwrap();
        assert_eq!(s.counts, vec![1, 0]);
        assert_eq!(s.sums, vec![1.0, 0.0]);
        assert_eq!(s.total_pulls, 1);
    }

    #[test]
    fn update_errors() {
        let mut s = state(2);
        assert_eq!(s.update("arm0", 1.5), Err(BanditError::RewardOutOfRange(1.5)));
        assert_eq!(s.update("arm0", -0.1), Err(BanditError::RewardOutOfRange(-0.1)));
        assert_eq!(s.update("nope", 0.5), Err(BanditError::UnknownArm("nope".into())));
        assert_eq!(s.total_pulls, 0);
    }

    #[test]
    fn repeated_zero_rewards() {
        let mut s = state(2);
        for _ in 0..100 {
            s.update("arm1", 0.0).unwrap();
        }
        assert_eq!(s.counts[1], 100);
        assert_eq!(s.sums[1], 0.0);
        assert_eq!(s.mean(1), 0.0);
    }

    #[test]
    fn duplicate_arm_ids_rejected() {
        let arms = vec![StrategyArm::new("a", "x"), StrategyArm::new("a", "y")];
        assert_eq!(BanditState::try_new(arms), Err(BanditError::DuplicateArm("a".into())));
    }

    #[test]
    fn reward_rule() {
        assert_eq!(reward_from_scores(0.2, 0.9), 1.0);
        assert_eq!(reward_from_scores(0.5, 0.5), 0.5);
        assert_eq!(reward_from_scores(0.9, 0.1), 0.0);
    }

    #[test]
    fn default_arm_set_has_four_unique_arms() {
        let arms = default_arms();
        assert_eq!(arms.len(), 4);
        assert!(BanditState::try_new(arms).is_ok());
    }
}
