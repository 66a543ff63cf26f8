//! Exact operator-valued *-moments of a circular element from its
//! covariance.
//!
//! A word `z^{s(1)} b₁ z^{s(2)} b₂ ⋯ z^{s(n)} b_n` has expectation equal to
//! a sum over non-crossing pair partitions that pair `z` with `z*`.  Each
//! partition evaluates by the nested bracket rule: the pair `(1, k)`
//! contributes
//!
//! ```text
//! cov(b₁ · inner) · b_k · outer
//! ```
//!
//! where `cov = α` if `s(1) = *` and `β` if `s(1) = 1`, and `inner`, `outer`
//! are the brackets of the enclosed and trailing sub-words.  Summing over
//! the partner `k` directly gives an interval recursion, evaluated here as
//! an `O(n³)`-interval dynamic program with `O(m²)` kernel work per split —
//! versus Catalan growth for the term-by-term sum, which is retained as the
//! brute-force oracle.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::nc_partitions::{enumerate_nc2, PairPartition};
use crate::step_algebra::{CovariancePair, StepFunction};

/// Symbol of a letter: the element itself or its adjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StarSymbol {
    /// `z`
    Z,
    /// `z*`
    ZStar,
}

impl StarSymbol {
    pub fn flip(self) -> StarSymbol {
        match self {
            StarSymbol::Z => StarSymbol::ZStar,
            StarSymbol::ZStar => StarSymbol::Z,
        }
    }
}

/// An alternating word `b₀ z^{s(1)} b₁ ⋯ z^{s(n)} b_n` with step-function
/// coefficients; the leading coefficient is optional and coefficients
/// default to the constant one.
#[derive(Debug, Clone)]
pub struct StarWord {
    pub leading: Option<StepFunction>,
    pub letters: Vec<(StarSymbol, StepFunction)>,
}

impl StarWord {
    pub fn new(letters: Vec<(StarSymbol, StepFunction)>) -> Self {
        StarWord { leading: None, letters }
    }

    /// A word of bare symbols, all coefficients 1.
    pub fn from_symbols(m: usize, symbols: &[StarSymbol]) -> Self {
        StarWord {
            leading: None,
            letters: symbols.iter().map(|&s| (s, StepFunction::one(m))).collect(),
        }
    }

    /// `(z*z)ⁿ` as a word.
    pub fn zstar_z_power(m: usize, n: usize) -> Self {
        let mut symbols = Vec::with_capacity(2 * n);
        for _ in 0..n {
            symbols.push(StarSymbol::ZStar);
            symbols.push(StarSymbol::Z);
        }
        Self::from_symbols(m, &symbols)
    }

    /// `zⁿ (z*)ⁿ` as a word.
    pub fn z_power_zstar_power(m: usize, n: usize) -> Self {
        let mut symbols = vec![StarSymbol::Z; n];
        symbols.extend(vec![StarSymbol::ZStar; n]);
        Self::from_symbols(m, &symbols)
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// The adjoint word: coefficients conjugate and shift around the
    /// reversed, starred letters, so `(b₀ z^{s1}b₁ ⋯ z^{sn}b_n)* =
    /// b_n* z^{s̄n} b_{n-1}* ⋯ z^{s̄1} b₀*`.
    pub fn adjoint(&self, m: usize) -> StarWord {
        let n = self.letters.len();
        if n == 0 {
            return StarWord {
                leading: self.leading.as_ref().map(|b| b.conj()),
                letters: Vec::new(),
            };
        }
        let leading = Some(self.letters[n - 1].1.conj());
        let mut letters = Vec::with_capacity(n);
        for i in (0..n).rev() {
            let coeff = if i == 0 {
                self.leading
                    .as_ref()
                    .map(|b| b.conj())
                    .unwrap_or_else(|| StepFunction::one(m))
            } else {
                self.letters[i - 1].1.conj()
            };
            letters.push((self.letters[i].0.flip(), coeff));
        }
        StarWord { leading, letters }
    }

    /// Cyclic shift by one letter: `z^{s1}b₁ w ↦ w z^{s1}b₁`.
    pub fn cyclic_shift(&self) -> StarWord {
        if self.letters.is_empty() {
            return self.clone();
        }
        let mut letters = self.letters.clone();
        let first = letters.remove(0);
        letters.push(first);
        StarWord { leading: self.leading.clone(), letters }
    }

    fn grid(&self, cov_m: usize) -> Result<usize> {
        let mut m = cov_m;
        if let Some(b) = &self.leading {
            if b.m() != m {
                return Err(Error::GridMismatch { left: m, right: b.m() });
            }
        }
        for (_, b) in &self.letters {
            if b.m() != m {
                return Err(Error::GridMismatch { left: m, right: b.m() });
            }
            m = b.m();
        }
        Ok(m)
    }

    fn is_balanced(&self) -> bool {
        let z = self.letters.iter().filter(|(s, _)| *s == StarSymbol::Z).count();
        2 * z == self.letters.len()
    }
}

fn apply_cov(cov: &CovariancePair, sym: StarSymbol, f: &StepFunction) -> Result<StepFunction> {
    match sym {
        // E(z* · z) pairs evaluate through α, E(z · z*) through β
        StarSymbol::ZStar => cov.alpha_apply(f),
        StarSymbol::Z => cov.beta_apply(f),
    }
}

/// The exact expectation `E(b₀ z^{s(1)} b₁ ⋯ z^{s(n)} b_n)` by interval
/// dynamic programming.  Returns the zero step function when the word has
/// odd length or unbalanced `z`/`z*` counts.
pub fn moment(cov: &CovariancePair, word: &StarWord) -> Result<StepFunction> {
    let m = word.grid(cov.m())?;
    let body = if word.is_balanced() {
        interval_dp(cov, &word.letters, m)
    } else {
        StepFunction::zero(m)
    };
    match &word.leading {
        Some(b) => b.mul(&body),
        None => Ok(body),
    }
}

fn interval_dp(
    cov: &CovariancePair,
    letters: &[(StarSymbol, StepFunction)],
    m: usize,
) -> StepFunction {
    let n = letters.len();
    if n == 0 {
        return StepFunction::one(m);
    }
    // memo[i][j] = bracket sum for letters i..=j, stored at even lengths
    let mut memo: Vec<Vec<Option<StepFunction>>> = vec![vec![None; n]; n];
    for len in (2..=n).step_by(2) {
        for i in 0..=(n - len) {
            let j = i + len - 1;
            let mut acc = StepFunction::zero(m);
            for k in ((i + 1)..=j).step_by(2) {
                if letters[k].0 == letters[i].0 {
                    continue;
                }
                let inner = if k == i + 1 {
                    None
                } else {
                    memo[i + 1][k - 1].as_ref()
                };
                let outer = if k == j { None } else { memo[k + 1][j].as_ref() };
                // cov(b_i · inner) · b_k · outer
                let mut term = letters[i].1.clone();
                if let Some(inner) = inner {
                    term = term.mul(inner).expect("grids validated");
                }
                term = apply_cov(cov, letters[i].0, &term).expect("grids validated");
                term = term.mul(&letters[k].1).expect("grids validated");
                if let Some(outer) = outer {
                    term = term.mul(outer).expect("grids validated");
                }
                acc = acc.add(&term).expect("grids validated");
            }
            memo[i][j] = Some(acc);
        }
    }
    memo[0][n - 1].clone().expect("filled for even n")
}

/// Maximum word length admitted by the brute-force sum (Catalan growth).
pub const BRUTE_FORCE_MAX_LEN: usize = 16;

/// The same expectation as [`moment`], evaluated as the explicit sum over
/// non-crossing pair partitions.  Exists as the independent oracle; the two
/// paths share no evaluation code.
pub fn moment_bruteforce(cov: &CovariancePair, word: &StarWord) -> Result<StepFunction> {
    if word.len() > BRUTE_FORCE_MAX_LEN {
        return Err(Error::LengthGuard { len: word.len(), max: BRUTE_FORCE_MAX_LEN });
    }
    let m = word.grid(cov.m())?;
    let mut total = StepFunction::zero(m);
    for partition in enumerate_nc2(word.len()) {
        if let Some(value) = bracket(cov, &partition, &word.letters, m)? {
            total = total.add(&value)?;
        }
    }
    match &word.leading {
        Some(b) => b.mul(&total),
        None => Ok(total),
    }
}

/// Evaluates one partition bracket recursively via the first-pair split.
/// Returns `None` when the partition pairs `z` with `z` or `z*` with `z*`.
fn bracket(
    cov: &CovariancePair,
    partition: &PairPartition,
    letters: &[(StarSymbol, StepFunction)],
    m: usize,
) -> Result<Option<StepFunction>> {
    if partition.n() == 0 {
        return Ok(Some(StepFunction::one(m)));
    }
    let (k, inner_part, outer_part) = partition.decompose_first()?;
    // 1-based partition indices over this sub-word
    if letters[k - 1].0 == letters[0].0 {
        return Ok(None);
    }
    let inner = match bracket(cov, &inner_part, &letters[1..k - 1], m)? {
        Some(v) => v,
        None => return Ok(None),
    };
    let outer = match bracket(cov, &outer_part, &letters[k..], m)? {
        Some(v) => v,
        None => return Ok(None),
    };
    let value = apply_cov(cov, letters[0].0, &letters[0].1.mul(&inner)?)?
        .mul(&letters[k - 1].1)?
        .mul(&outer)?;
    Ok(Some(value))
}

/// Evaluates the bracket of a single partition (zero if the partition pairs
/// equal symbols).  Used to check worked single-term identities.
pub fn partition_bracket(
    cov: &CovariancePair,
    partition: &PairPartition,
    word: &StarWord,
) -> Result<StepFunction> {
    let m = word.grid(cov.m())?;
    if partition.n() != word.len() {
        return Err(Error::InvalidParameter(format!(
            "partition of {} points against a word of length {}",
            partition.n(),
            word.len()
        )));
    }
    Ok(bracket(cov, partition, &word.letters, m)?.unwrap_or_else(|| StepFunction::zero(m)))
}

/// `τ ∘ E` applied to a word.
pub fn trace_moment(cov: &CovariancePair, word: &StarWord) -> Result<Complex64> {
    Ok(moment(cov, word)?.trace())
}

/// The nested-pairing iteration `f₀ = χ_{[a,1]}`, `f_{k+1} = χ_{[a,1]} β(f_k)`.
///
/// For `a = 0` and an upper-triangular density the only surviving pairing of
/// `zⁿ(z*)ⁿ` is fully nested and `f_n = E(zⁿ(z*)ⁿ)`.
pub fn nested_power(cov: &CovariancePair, n: usize, a: f64) -> Result<StepFunction> {
    let chi = StepFunction::indicator_from(cov.m(), a)?;
    let mut f = chi.clone();
    for _ in 0..n {
        f = chi.mul(&cov.beta_apply(&f)?)?;
    }
    Ok(f)
}
