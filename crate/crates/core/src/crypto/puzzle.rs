use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CryptoError, Digest, HashAlg};

/// Hash puzzle: find `s` with `digest(seed ‖ s) < target`, reading the
/// digest as a big-endian integer and `s` as 8 big-endian bytes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Puzzle {
    pub alg: HashAlg,
    pub seed: Digest,
    pub difficulty: u64,
    pub target: BigUint,
    /// `target` as big-endian bytes of digest length; `None` when the target
    /// is `2^(8·len)` and every digest qualifies.
    target_bytes: Option<Vec<u8>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Solution(pub u64);

impl Solution {
    pub fn to_bytes(self) -> [u8; 8] {
        self.0.to_be_bytes()
    }
}

/// `floor(2^(8·len) / (m · 2^(α·n)))`, at least one.
pub fn target_for(digest_len: usize, difficulty: u64, alpha: u32, covered: u64) -> BigUint {
    let space = BigUint::one() << (8 * digest_len);
    let shift = (alpha as u64).saturating_mul(covered).min(8 * digest_len as u64 + 64) as usize;
    let divisor = BigUint::from(difficulty.max(1)) << shift;
    let t = space / divisor;
    if t.is_zero() {
        BigUint::one()
    } else {
        t
    }
}

impl Puzzle {
    pub fn new(alg: HashAlg, seed: Digest, difficulty: u64, alpha: u32, covered: u64) -> Puzzle {
        let target = target_for(alg.len(), difficulty, alpha, covered);
        let space = BigUint::one() << (8 * alg.len());
        let target_bytes = (target < space).then(|| {
            let raw = target.to_bytes_be();
            let mut out = vec![0u8; alg.len() - raw.len()];
            out.extend_from_slice(&raw);
            out
        });
        Puzzle { alg, seed, difficulty, target, target_bytes }
    }

    /// Probability that a single uniformly random candidate solves the puzzle.
    pub fn acceptance_ratio(&self) -> f64 {
        let space = BigUint::one() << (8 * self.alg.len());
        crate::numerics::Rat::new(
            num_bigint::BigInt::from(self.target.clone()),
            num_bigint::BigInt::from(space),
        )
        .to_f64()
    }

    /// Expected number of attempts until the first solution.
    pub fn expected_attempts(&self) -> f64 {
        1.0 / self.acceptance_ratio()
    }
}

/// One digest evaluation.
pub fn check(puzzle: &Puzzle, s: Solution) -> bool {
    let Some(target) = &puzzle.target_bytes else {
        return true;
    };
    let d = puzzle.alg.digest_parts(&[puzzle.seed.as_bytes(), &s.to_bytes()]);
    d.0.as_slice() < target.as_slice()
}

/// Tries `s = 0, 1, 2, …` and returns the first solution within `budget`
/// attempts.
pub fn solve(puzzle: &Puzzle, budget: u64) -> Result<Solution, CryptoError> {
    if budget == 0 {
        return Err(CryptoError::ZeroBudget);
    }
    (0..budget).map(Solution).find(|s| check(puzzle, *s)).ok_or(CryptoError::Exhausted(budget))
}

/// Parallel search over disjoint ranges; the smallest solving `s` wins, so
/// the result equals [`solve`].
pub fn solve_parallel(puzzle: &Puzzle, budget: u64) -> Result<Solution, CryptoError> {
    if budget == 0 {
        return Err(CryptoError::ZeroBudget);
    }
    (0..budget)
        .into_par_iter()
        .map(Solution)
        .find_first(|s| check(puzzle, *s))
        .ok_or(CryptoError::Exhausted(budget))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seed(i: u64) -> Digest {
        HashAlg::Sha256.digest(&i.to_be_bytes())
    }

    #[test]
    fn maximal_target_accepts_zero() {
        let p = Puzzle::new(HashAlg::Sha256, seed(1), 1, 0, 0);
        assert_eq!(p.target, BigUint::one() << 256);
        assert_eq!(solve(&p, 1).unwrap(), Solution(0));
    }

    #[test]
    fn zero_budget_is_an_error() {
        let p = Puzzle::new(HashAlg::Sha256, seed(1), 4, 0, 0);
        assert_eq!(solve(&p, 0), Err(CryptoError::ZeroBudget));
    }

    #[test]
    fn solution_checks_and_predecessors_fail() {
        let p = Puzzle::new(HashAlg::Sha256, seed(2), 64, 0, 0);
        let s = solve(&p, 100_000).unwrap();
        assert!(check(&p, s));
        assert!((0..s.0).all(|i| !check(&p, Solution(i))));
        assert_eq!(solve_parallel(&p, 100_000).unwrap(), s);
    }

    #[test]
    fn exhaustion_reported() {
        let p = Puzzle::new(HashAlg::Sha256, seed(3), 1 << 40, 0, 0);
        assert_eq!(solve(&p, 16), Err(CryptoError::Exhausted(16)));
    }

    #[test]
    fn sloping_shrinks_target_exponentially() {
        let base = target_for(32, 8, 0, 5);
        let sloped = target_for(32, 8, 2, 5);
        assert_eq!(base, sloped << 10);
        assert_eq!(target_for(16, u64::MAX, 64, 1000), BigUint::one());
    }

    #[test]
    fn truncated_digest_targets() {
        for alg in [HashAlg::Sha256Trunc16, HashAlg::Sha512] {
            let p = Puzzle::new(alg, alg.digest(b"x"), 16, 0, 0);
            let s = solve(&p, 10_000).unwrap();
            assert!(check(&p, s));
        }
    }
}
