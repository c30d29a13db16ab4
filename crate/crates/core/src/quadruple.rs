//! Canonical quadruples and their lexicographic enumeration.
//!
//! Quadruples are ranked in lexicographic order so that any rank range can be
//! unranked independently. Parallel scans split the rank space into fixed-size
//! chunks (independent of the thread count) and fold the chunk results in rank
//! order, so the outcome never depends on scheduling.

use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;

/// Rank-range size handed to a single task.
pub const CHUNK: u64 = 4096;

/// Four distinct indices in ascending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Quadruple(pub [usize; 4]);

impl Quadruple {
    /// Sorts the indices; returns `None` if they are not distinct.
    pub fn new(mut indices: [usize; 4]) -> Option<Self> {
        indices.sort_unstable();
        if indices.windows(2).all(|w| w[0] < w[1]) {
            Some(Self(indices))
        } else {
            None
        }
    }

    pub fn indices(&self) -> [usize; 4] {
        self.0
    }
}

/// Binomial coefficient; saturates instead of overflowing.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Number of canonical quadruples over `n` points.
pub fn quadruple_count(n: usize) -> u64 {
    binomial(n as u64, 4)
}

/// The quadruple at lexicographic position `rank`.
///
/// # Panics
/// If `rank >= quadruple_count(n)`.
pub fn unrank(n: usize, mut rank: u64) -> Quadruple {
    assert!(rank < quadruple_count(n), "rank {rank} out of range for n = {n}");
    let mut out = [0usize; 4];
    let mut next = 0usize;
    for (slot, item) in out.iter_mut().enumerate() {
        let remaining = 3 - slot as u64;
        loop {
            let block = binomial((n - next - 1) as u64, remaining);
            if rank < block {
                break;
            }
            rank -= block;
            next += 1;
        }
        *item = next;
        next += 1;
    }
    Quadruple(out)
}

/// Lexicographic position of `q` among quadruples over `n` points.
pub fn rank(n: usize, q: Quadruple) -> u64 {
    let mut r = 0;
    let mut start = 0usize;
    for (slot, &v) in q.0.iter().enumerate() {
        let remaining = 3 - slot as u64;
        for c in start..v {
            r += binomial((n - c - 1) as u64, remaining);
        }
        start = v + 1;
    }
    r
}

/// Lexicographic successor, or `None` after the last quadruple.
fn successor(n: usize, q: Quadruple) -> Option<Quadruple> {
    let mut idx = q.0;
    let mut pos = 4;
    while pos > 0 {
        pos -= 1;
        if idx[pos] < n - 4 + pos {
            idx[pos] += 1;
            for k in (pos + 1)..4 {
                idx[k] = idx[k - 1] + 1;
            }
            return Some(Quadruple(idx));
        }
    }
    None
}

/// Iterator over a rank range of the canonical quadruples.
#[derive(Debug, Clone)]
pub struct Quadruples {
    n: usize,
    next: Option<Quadruple>,
    remaining: u64,
}

impl Quadruples {
    pub fn all(n: usize) -> Self {
        Self::range(n, 0..quadruple_count(n))
    }

    pub fn range(n: usize, ranks: Range<u64>) -> Self {
        let end = ranks.end.min(quadruple_count(n));
        let remaining = end.saturating_sub(ranks.start);
        let next = (remaining > 0).then(|| unrank(n, ranks.start));
        Self { n, next, remaining }
    }
}

impl Iterator for Quadruples {
    type Item = Quadruple;

    fn next(&mut self) -> Option<Quadruple> {
        if self.remaining == 0 {
            return None;
        }
        let current = self.next?;
        self.remaining -= 1;
        self.next = if self.remaining > 0 { successor(self.n, current) } else { None };
        Some(current)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (r, Some(r))
    }
}

/// All canonical quadruples in lexicographic order; empty when `n < 4`.
pub fn enumerate_quadruples(n: usize) -> Quadruples {
    Quadruples::all(n)
}

/// Splits `0..total` into `CHUNK`-sized ranges.
pub fn chunks(total: u64) -> Vec<Range<u64>> {
    (0..total.div_ceil(CHUNK))
        .map(|c| c * CHUNK..((c + 1) * CHUNK).min(total))
        .collect()
}

/// Folds every chunk of `0..total` in parallel and combines the partial
/// results in rank order. `combine` must be associative.
pub fn par_fold_ranks<T, F, C>(total: u64, fold: F, combine: C) -> Option<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync + Send,
    C: Fn(T, T) -> T + Sync + Send,
{
    let parts = chunks(total);
    if parts.len() <= 1 {
        return parts.into_iter().map(&fold).reduce(&combine);
    }
    parts.into_par_iter().map(fold).reduce_with(combine)
}
