use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SurvError};

/// Train, validation and test row indices for one permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub seed: u64,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Sizes: `floor(0.7 n)` train, then the ceiling half of the rest for
/// validation, remainder test.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let train = n * 7 / 10;
    let rest = n - train;
    let validation = rest.div_ceil(2);
    (train, validation, rest - validation)
}

pub fn make_split(n: usize, seed: u64) -> Result<SplitPlan> {
    if n < 10 {
        return Err(SurvError::InvalidInput(format!(
            "need at least 10 samples to split, got {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (tr, va, _) = split_sizes(n);
    Ok(SplitPlan {
        seed,
        train: order[..tr].to_vec(),
        validation: order[tr..tr + va].to_vec(),
        test: order[tr + va..].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_sizes() {
        assert_eq!(split_sizes(100), (70, 15, 15));
        assert_eq!(split_sizes(628), (439, 95, 94));
        assert_eq!(split_sizes(10), (7, 2, 1));
        assert!(make_split(9, 0).is_err());
    }
}
