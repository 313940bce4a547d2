//! Largest `A ⊆ {1..N}` whose differences avoid the positive values of `f`.
//!
//! The search uses translation invariance: the best set inside any window of
//! length `L` has size `size(L)`, so once `size(1..L-1)` are known, a set of
//! size `size(L-1) + 1` in `{1..L}` must contain 1, and from position `x` on
//! at most `size(L - x + 1)` further elements fit. Sets are `u64` bitmasks
//! with bit `i` standing for the integer `i + 1`.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::OddIntPolynomial;

pub const DEFAULT_CAP: u64 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffSetResult {
    pub n: u64,
    pub size: u32,
    pub witness: Vec<u64>,
    /// `size(L)` for `L = 1..=N`.
    pub profile: Vec<u32>,
}

/// Positive values `f(j) < N`, the differences that can occur in `{1..N}`.
pub fn forbidden_differences(f: &OddIntPolynomial, n: u64) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    // Values below the monotone start may still be positive.
    for v in f.skipped_prefix(1) {
        if let Some(v) = v.to_u64() {
            if v >= 1 && v < n {
                out.push(v);
            }
        }
    }
    let mut j = f.monotone_start(1);
    loop {
        let v = f.eval(&BigInt::from(j));
        match v.to_u64() {
            Some(v) if v < n => {
                if v >= 1 {
                    out.push(v);
                }
            }
            _ => break,
        }
        j += 1;
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Bitmask of positions conflicting with position `i` (0-based) in `{0..n}`.
fn conflict_masks(diffs: &[u64], n: u64) -> Vec<u64> {
    (0..n)
        .map(|i| {
            let mut m = 0u64;
            for &d in diffs {
                if i + d < n {
                    m |= 1 << (i + d);
                }
                if i >= d {
                    m |= 1 << (i - d);
                }
            }
            m
        })
        .collect()
}

struct Search<'a> {
    conflicts: &'a [u64],
    sizes: &'a [u32],
    len: u64,
    target: u32,
    found: Option<u64>,
}

impl Search<'_> {
    /// `allowed` is the set of still-usable positions `>= from`.
    fn dfs(&mut self, chosen: u64, count: u32, allowed: u64) {
        if count >= self.target {
            self.found = Some(chosen);
            return;
        }
        let mut rest = allowed;
        while rest != 0 {
            let x = rest.trailing_zeros() as u64;
            let remaining = (rest.count_ones()).min(self.sizes[(self.len - x) as usize]);
            if count + remaining < self.target {
                return;
            }
            rest &= rest - 1;
            self.dfs(chosen | 1 << x, count + 1, rest & !self.conflicts[x as usize]);
            if self.found.is_some() {
                return;
            }
        }
    }
}

/// Exact maximum with a witness set.
pub fn max_diff_avoiding(f: &OddIntPolynomial, n: u64, cap: u64) -> Result<DiffSetResult> {
    if n > cap.min(64) {
        return Err(Error::CapExceeded { n, cap: cap.min(64) });
    }
    if n == 0 {
        return Err(Error::InvalidParameter("N must be positive".into()));
    }
    let diffs = forbidden_differences(f, n);
    let conflicts = conflict_masks(&diffs, n);
    // sizes[L] = size(L); sizes[0] = 0.
    let mut sizes = vec![0u32; n as usize + 1];
    let mut best_set = 0u64;
    for len in 1..=n {
        let target = sizes[len as usize - 1] + 1;
        let window = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        let mut s = Search {
            conflicts: &conflicts,
            sizes: &sizes,
            len,
            target,
            found: None,
        };
        s.dfs(1, 1, window & !1 & !conflicts[0]);
        match s.found {
            Some(set) => {
                sizes[len as usize] = target;
                best_set = set;
            }
            None => sizes[len as usize] = target - 1,
        }
    }
    let witness = (0..n).filter(|i| best_set >> i & 1 == 1).map(|i| i + 1).collect();
    Ok(DiffSetResult {
        n,
        size: sizes[n as usize],
        witness,
        profile: sizes[1..].to_vec(),
    })
}

/// Direct double-loop check that no difference of `set` is forbidden.
pub fn is_diff_avoiding(set: &[u64], diffs: &[u64]) -> bool {
    set.iter().all(|&a| {
        set.iter()
            .all(|&b| a <= b || diffs.binary_search(&(a - b)).is_err())
    })
}
