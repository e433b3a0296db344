use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnimalCounts {
    pub chickens: u64,
    pub rabbits: u64,
}

/// Solves `c + r = heads`, `2c + 4r = legs` over the non-negative integers.
///
/// Returns `None` when no such pair exists. When it exists it is unique:
/// `r = (legs - 2 * heads) / 2`.
pub fn solve_heads_legs(heads: u64, legs: u64) -> Option<AnimalCounts> {
    if !legs.is_multiple_of(2) {
        return None;
    }
    let extra = legs.checked_sub(heads.checked_mul(2)?)?;
    let rabbits = extra / 2;
    let chickens = heads.checked_sub(rabbits)?;
    Some(AnimalCounts { chickens, rabbits })
}
