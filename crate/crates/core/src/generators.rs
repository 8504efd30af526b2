//! Deterministic generators for test sets: the full interval, self-similar
//! Cantor-type constructions, and branching-process (fractal percolation)
//! sets.
//!
//! # Random number generator
//!
//! Randomized generators use **splitmix64**, written out here in full so the
//! sets can be reproduced bit-for-bit in any language:
//!
//! ```text
//! state: u64, initialized to the seed
//!
//! next():
//!     state = state + 0x9E3779B97F4A7C15        (mod 2^64)
//!     z = state
//!     z = (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9 (mod 2^64)
//!     z = (z XOR (z >> 27)) * 0x94D049BB133111EB (mod 2^64)
//!     return z XOR (z >> 31)
//!
//! next_unit():  (uniform double in [0, 1))
//!     return (next() >> 11) * 2^-53
//! ```
//!
//! The branching process consumes the stream in a fixed order: levels from
//! the root down, surviving parents in ascending cell index, their `2^N`
//! children in ascending index, **one draw per child of a surviving parent**
//! (children of dead parents draw nothing). A child survives when
//! `next_unit() < p`. If the process dies out before reaching depth `L`, the
//! attempt is discarded and a new one starts, continuing on the same stream;
//! the result is still a pure function of the seed.

use crate::dyadic::{DyadicSet, GridParams};
use crate::{Error, Result};

/// The splitmix64 stream described in the module docs.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// The whole of `[0, 1)`: every finest cell occupied.
pub fn full_interval(params: GridParams) -> DyadicSet {
    DyadicSet::full(params)
}

/// Self-similar set with one fixed child pattern: at each of the `L`
/// subdivision steps every surviving cell keeps exactly the children whose
/// in-parent indices appear in `keep` (values in `0..2^N`). The result has
/// similarity dimension `log2(#keep) / N` in the length gauge.
pub fn self_similar(params: GridParams, keep: &[u32]) -> Result<DyadicSet> {
    let schedule = vec![keep.to_vec()];
    self_similar_schedule(params, &schedule)
}

/// Self-similar set with a per-step pattern: step `j` (from the root) keeps
/// the child indices in `schedule[j mod schedule.len()]`. A one-entry
/// schedule reproduces [`self_similar`].
pub fn self_similar_schedule(params: GridParams, schedule: &[Vec<u32>]) -> Result<DyadicSet> {
    if schedule.is_empty() {
        return Err(Error::InvalidParams("empty keep schedule".into()));
    }
    let fanout = 1u32 << params.n();
    for step in schedule {
        if step.is_empty() {
            return Err(Error::InvalidParams("a keep step is empty".into()));
        }
        if step.iter().any(|&k| k >= fanout) {
            return Err(Error::InvalidParams(format!(
                "keep index out of range 0..{}",
                fanout
            )));
        }
    }

    let mut survivors: Vec<u64> = vec![0]; // root
    for j in 0..params.l() {
        let keep = &schedule[(j as usize) % schedule.len()];
        let mut next = Vec::with_capacity(survivors.len() * keep.len());
        for &cell in &survivors {
            let base = cell << params.n();
            for &k in keep {
                next.push(base + k as u64);
            }
        }
        survivors = next;
    }

    let mut set = DyadicSet::empty(params);
    for cell in survivors {
        set.set_occupied(cell, true);
    }
    Ok(set)
}

/// Outcome of a branching-process draw, with the bookkeeping needed for
/// reproducibility checks.
#[derive(Debug, Clone)]
pub struct BranchingOutcome {
    pub set: DyadicSet,
    /// Number of attempts that died out before one survived to depth `L`.
    pub discarded_attempts: u32,
    /// Empirical dimension surrogate `log2(occupied) / L` in the length gauge
    /// (the population grows like `2^((N + log2 p) * L)`, so this tends to
    /// `N + log2(p)` for surviving draws).
    pub dim_surrogate: f64,
}

/// Fractal percolation: starting from the root, each child of a surviving
/// cell independently survives with probability `p`. Draws repeat (on the
/// same stream) until an attempt reaches depth `L` nonempty.
pub fn random_branching(params: GridParams, p: f64, seed: u64) -> Result<BranchingOutcome> {
    if !(0.0 < p && p <= 1.0) {
        return Err(Error::ParamDomain(format!(
            "survival probability p = {} outside (0, 1]",
            p
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut discarded = 0u32;
    loop {
        let mut survivors: Vec<u64> = vec![0];
        for _ in 0..params.l() {
            let mut next = Vec::with_capacity(survivors.len() * 2);
            for &cell in &survivors {
                let base = cell << params.n();
                for k in 0..(1u64 << params.n()) {
                    if rng.next_unit() < p {
                        next.push(base + k);
                    }
                }
            }
            survivors = next;
            if survivors.is_empty() {
                break;
            }
        }
        if survivors.is_empty() {
            discarded += 1;
            continue;
        }
        let mut set = DyadicSet::empty(params);
        let count = survivors.len() as f64;
        for cell in survivors {
            set.set_occupied(cell, true);
        }
        let dim_surrogate = count.log2() / params.l() as f64;
        return Ok(BranchingOutcome {
            set,
            discarded_attempts: discarded,
            dim_surrogate,
        });
    }
}
