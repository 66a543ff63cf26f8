//! Non-crossing pair partitions of `{1, …, n}`.
//!
//! These index the surviving terms in operator-valued Gaussian moment
//! expansions.  `NC₂(2k)` has Catalan-number `C_k` many elements, so the
//! enumerator is only used for small `n`; moment evaluation proper goes
//! through the interval dynamic program in [`crate::moment_engine`].

use crate::error::{Error, Result};

/// A pair partition of `{1, …, n}`, stored as pairs `(i, j)` with `i < j`,
/// sorted by first element.  Indices are 1-based throughout this module;
/// the off-by-one boundary to internal storage is confined here.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PairPartition {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairPartition {
    /// Builds a partition from pairs, validating that every index in
    /// `1..=n` is covered exactly once and that no two pairs cross.
    pub fn new(n: usize, mut pairs: Vec<(usize, usize)>) -> Result<Self> {
        if pairs.len() * 2 != n {
            return Err(Error::InvalidParameter(format!(
                "{} pairs cannot cover {} indices",
                pairs.len(),
                n
            )));
        }
        let mut seen = vec![false; n + 1];
        for &(i, j) in &pairs {
            if i == 0 || j == 0 || i > n || j > n || i >= j {
                return Err(Error::InvalidParameter(format!(
                    "pair ({i}, {j}) out of range for n = {n}"
                )));
            }
            for k in [i, j] {
                if seen[k] {
                    return Err(Error::InvalidParameter(format!("index {k} appears twice")));
                }
                seen[k] = true;
            }
        }
        pairs.sort_unstable();
        let part = PairPartition { n, pairs };
        if !part.is_noncrossing() {
            return Err(Error::InvalidParameter("pairs cross".into()));
        }
        Ok(part)
    }

    /// The empty partition of the empty set.
    pub fn empty() -> Self {
        PairPartition { n: 0, pairs: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// The partner of index `i`.
    pub fn partner(&self, i: usize) -> Option<usize> {
        self.pairs.iter().find_map(|&(a, b)| {
            if a == i {
                Some(b)
            } else if b == i {
                Some(a)
            } else {
                None
            }
        })
    }

    /// No two pairs `(i, j)`, `(k, l)` interleave as `i < k < j < l`.
    pub fn is_noncrossing(&self) -> bool {
        for (idx, &(_i, j)) in self.pairs.iter().enumerate() {
            for &(k, l) in &self.pairs[idx + 1..] {
                // pairs are sorted, so i < k
                if k < j && j < l {
                    return false;
                }
            }
        }
        true
    }

    /// Splits off the pair containing index 1.
    ///
    /// Returns `(k, inner, outer)` where `k` is the partner of 1, `inner` is
    /// the restriction to `{2, …, k−1}` renumbered from 1 and `outer` the
    /// restriction to `{k+1, …, n}` renumbered from 1.  Reassembling via
    /// [`PairPartition::reassemble`] reproduces the original.
    pub fn decompose_first(&self) -> Result<(usize, PairPartition, PairPartition)> {
        if self.n == 0 {
            return Err(Error::InvalidParameter(
                "cannot decompose the empty partition".into(),
            ));
        }
        let k = self
            .partner(1)
            .ok_or_else(|| Error::InvalidParameter("index 1 is unpaired".into()))?;
        let mut inner = Vec::new();
        let mut outer = Vec::new();
        for &(a, b) in &self.pairs {
            if (a, b) == (1, k) {
                continue;
            }
            if a > 1 && b < k {
                inner.push((a - 1, b - 1));
            } else if a > k {
                outer.push((a - k, b - k));
            } else {
                return Err(Error::InvalidParameter(format!(
                    "pair ({a}, {b}) straddles the pair (1, {k})"
                )));
            }
        }
        Ok((
            k,
            PairPartition::new(k - 2, inner)?,
            PairPartition::new(self.n - k, outer)?,
        ))
    }

    /// Inverse of [`PairPartition::decompose_first`].
    pub fn reassemble(k: usize, inner: &PairPartition, outer: &PairPartition) -> Result<Self> {
        let n = inner.n + outer.n + 2;
        let mut pairs = vec![(1, k)];
        pairs.extend(inner.pairs.iter().map(|&(a, b)| (a + 1, b + 1)));
        pairs.extend(outer.pairs.iter().map(|&(a, b)| (a + k, b + k)));
        PairPartition::new(n, pairs)
    }
}

/// All non-crossing pair partitions of `{1, …, n}`.
///
/// Generated recursively from the split `π = {(1, 2k)} ∪ π' ∪ π''`, with the
/// partner of the smallest unpaired index ascending, so the output order is
/// lexicographic and stable across runs.  Odd `n` yields no partitions;
/// `n = 0` yields the singleton empty partition.
pub fn enumerate_nc2(n: usize) -> Vec<PairPartition> {
    if n % 2 == 1 {
        return Vec::new();
    }
    segment(1, n)
        .into_iter()
        .map(|mut pairs| {
            pairs.sort_unstable();
            PairPartition { n, pairs }
        })
        .collect()
}

/// Non-crossing pairings of the contiguous index range `lo..=hi`.
///
/// `lo` pairs with `lo + 1, lo + 3, …`; a pair straddling the arc
/// `(lo, k)` would cross it, so the inside and outside decouple into a
/// cartesian product.
fn segment(lo: usize, hi: usize) -> Vec<Vec<(usize, usize)>> {
    if lo > hi {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for k in (lo + 1..=hi).step_by(2) {
        for inner in segment(lo + 1, k - 1) {
            for outer in segment(k + 1, hi) {
                let mut pairs = Vec::with_capacity((hi - lo + 1) / 2);
                pairs.push((lo, k));
                pairs.extend_from_slice(&inner);
                pairs.extend_from_slice(&outer);
                out.push(pairs);
            }
        }
    }
    out
}

/// `|NC₂(n)|`: the Catalan number `C_{n/2}` for even `n`, zero for odd `n`.
pub fn count_nc2(n: usize) -> u128 {
    if n % 2 == 1 {
        return 0;
    }
    catalan(n / 2)
}

/// `C_k = binom(2k, k) / (k + 1)`.
pub fn catalan(k: usize) -> u128 {
    binomial(2 * k, k) / (k as u128 + 1)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // multiply before divide keeps every intermediate integral
        acc = acc * (n - i) as u128 / (i as u128 + 1);
    }
    acc
}
