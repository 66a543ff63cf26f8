//! The coefficient algebra of step functions on `[0,1]`, block densities on
//! `[0,1]²` and the covariance pairs they induce.
//!
//! Everything lives on a uniform grid of `m` half-open cells
//! `[(i−1)/m, i/m)`.  A block density `H` induces the covariance maps
//!
//! ```text
//! (α f)(t) = ∫ H(s,t) f(s) ds      (β g)(s) = ∫ H(s,t) g(t) dt
//! ```
//!
//! which are exact finite sums on block-constant data:
//! `(α f)_j = (1/m) Σ_i H[i][j] f_i` and `(β g)_i = (1/m) Σ_j H[i][j] g_j`.
//! The trace is integration against Lebesgue measure,
//! `τ(f) = (1/m) Σ_i f_i`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ALIGN_TOL: f64 = 1e-9;

/// Converts a grid-aligned coordinate `x ∈ [0,1]` to its cell count.
pub fn grid_index(x: f64, m: usize) -> Result<usize> {
    let scaled = x * m as f64;
    let rounded = scaled.round();
    if (scaled - rounded).abs() > ALIGN_TOL * m as f64 || !(0.0..=1.0 + ALIGN_TOL).contains(&x) {
        return Err(Error::Misaligned(format!("{x} on a grid of {m} cells")));
    }
    Ok(rounded as usize)
}

// ---------------------------------------------------------------------------
// Step functions
// ---------------------------------------------------------------------------

/// A piecewise-constant complex function on `[0,1]`: value `values[i]` on
/// the cell `[i/m, (i+1)/m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    m: usize,
    values: Vec<Complex64>,
}

impl StepFunction {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("empty step function".into()));
        }
        Ok(StepFunction { m: values.len(), values })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn constant(m: usize, value: Complex64) -> Self {
        StepFunction { m, values: vec![value; m] }
    }

    pub fn one(m: usize) -> Self {
        Self::constant(m, Complex64::new(1.0, 0.0))
    }

    pub fn zero(m: usize) -> Self {
        Self::constant(m, Complex64::new(0.0, 0.0))
    }

    /// Indicator of `[a, 1]` for grid-aligned `a`.
    pub fn indicator_from(m: usize, a: f64) -> Result<Self> {
        let start = grid_index(a, m)?;
        let mut values = vec![Complex64::new(0.0, 0.0); m];
        for v in values.iter_mut().skip(start) {
            *v = Complex64::new(1.0, 0.0);
        }
        Ok(StepFunction { m, values })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `τ(f) = (1/m) Σ f_i`, integration against Lebesgue measure.
    pub fn trace(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.m as f64
    }

    fn check_grid(&self, other: &StepFunction) -> Result<()> {
        if self.m != other.m {
            return Err(Error::GridMismatch { left: self.m, right: other.m });
        }
        Ok(())
    }

    /// Pointwise product (the algebra is commutative).
    pub fn mul(&self, other: &StepFunction) -> Result<StepFunction> {
        self.check_grid(other)?;
        Ok(StepFunction {
            m: self.m,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    pub fn add(&self, other: &StepFunction) -> Result<StepFunction> {
        self.check_grid(other)?;
        Ok(StepFunction {
            m: self.m,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &StepFunction) -> Result<StepFunction> {
        self.check_grid(other)?;
        Ok(StepFunction {
            m: self.m,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn scale(&self, c: Complex64) -> StepFunction {
        StepFunction { m: self.m, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn conj(&self) -> StepFunction {
        StepFunction { m: self.m, values: self.values.iter().map(|v| v.conj()).collect() }
    }

    /// Pointwise inverse; a cell of magnitude below `1e-14` is singular.
    pub fn inverse(&self) -> Result<StepFunction> {
        const SINGULAR_TOL: f64 = 1e-14;
        let mut values = Vec::with_capacity(self.m);
        for v in &self.values {
            if v.norm() < SINGULAR_TOL {
                return Err(Error::Singular(format!(
                    "cell magnitude {:.3e} below inversion threshold",
                    v.norm()
                )));
            }
            values.push(1.0 / v);
        }
        Ok(StepFunction { m: self.m, values })
    }

    /// `1 − f`, the usual resolvent building block.
    pub fn one_minus(&self) -> StepFunction {
        StepFunction {
            m: self.m,
            values: self.values.iter().map(|v| Complex64::new(1.0, 0.0) - v).collect(),
        }
    }

    pub fn sup_distance(&self, other: &StepFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// Block densities
// ---------------------------------------------------------------------------

/// A nonnegative block-constant density `H` on `[0,1]²`: `H[i][j]` is the
/// density on the cell `[i/m,(i+1)/m) × [j/m,(j+1)/m)`, first index `s`,
/// second index `t`.  Induced measure of a block is `H[i][j]/m²`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDensity {
    m: usize,
    h: Vec<f64>, // row-major m×m
}

/// Named density presets.  Regions are specified at grid resolution.
#[derive(Debug, Clone)]
pub enum Preset {
    /// `H ≡ 1`: Lebesgue measure on the square, the plain circular element.
    Square,
    /// `H[i][j] = 1` for `i ≤ j`: the block version of the region
    /// `{s ≤ t}` whose limit is the quasinilpotent DT-operator.
    UpperTriangle,
    /// `H[i][j] = 1` on `i ≤ j ≤ i + ⌈εm⌉`, a diagonal band of width `eps`.
    Band { eps: f64 },
    /// Density `r` on the blocks of `{c ≤ s ≤ t ≤ d}` plus density
    /// `big_r` on the blocks of `{a ≤ s ≤ t ≤ 1}`; zero elsewhere.
    CornerBox { c: f64, d: f64, r: f64, a: f64, big_r: f64 },
    /// An explicit nonnegative matrix.
    Custom { h: Vec<Vec<f64>> },
}

impl BlockDensity {
    pub fn new(m: usize, h: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("grid size must be positive".into()));
        }
        if h.len() != m * m {
            return Err(Error::InvalidParameter(format!(
                "density has {} entries, expected {}",
                h.len(),
                m * m
            )));
        }
        if h.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::InvalidParameter("negative density entry".into()));
        }
        Ok(BlockDensity { m, h })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidParameter("density matrix is not square".into()));
        }
        BlockDensity::new(m, rows.into_iter().flatten().collect())
    }

    pub fn preset(preset: &Preset, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("grid size must be positive".into()));
        }
        match preset {
            Preset::Square => BlockDensity::new(m, vec![1.0; m * m]),
            Preset::UpperTriangle => {
                let mut h = vec![0.0; m * m];
                for i in 0..m {
                    for j in i..m {
                        h[i * m + j] = 1.0;
                    }
                }
                BlockDensity::new(m, h)
            }
            Preset::Band { eps } => {
                if !(*eps > 0.0 && *eps <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "band width {eps} outside (0, 1]"
                    )));
                }
                let width = (eps * m as f64).ceil() as usize;
                let mut h = vec![0.0; m * m];
                for i in 0..m {
                    for j in i..(i + width + 1).min(m) {
                        h[i * m + j] = 1.0;
                    }
                }
                BlockDensity::new(m, h)
            }
            Preset::CornerBox { c, d, r, a, big_r } => {
                if !(c < d && d <= a && *a < 1.0 && *c >= 0.0) {
                    return Err(Error::InvalidParameter(
                        "corner box needs 0 ≤ c < d ≤ a < 1".into(),
                    ));
                }
                if *r < 0.0 || *big_r < 0.0 {
                    return Err(Error::InvalidParameter("negative densities".into()));
                }
                let ci = grid_index(*c, m)?;
                let di = grid_index(*d, m)?;
                let ai = grid_index(*a, m)?;
                let mut h = vec![0.0; m * m];
                for i in ci..di {
                    for j in i..di {
                        h[i * m + j] = *r;
                    }
                }
                for i in ai..m {
                    for j in i..m {
                        h[i * m + j] = *big_r;
                    }
                }
                BlockDensity::new(m, h)
            }
            Preset::Custom { h } => BlockDensity::from_rows(h.clone()),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.h[i * self.m + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.h
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.m)
            .map(|i| self.h[i * self.m..(i + 1) * self.m].to_vec())
            .collect()
    }

    /// `η([0,1]²) = (1/m²) Σ H[i][j]`.
    pub fn mass(&self) -> f64 {
        self.h.iter().sum::<f64>() / (self.m * self.m) as f64
    }

    /// First coordinate expectation `CE₁(H)(s) = ∫ H(s,t) dt` on cell `i`.
    pub fn marginal_1(&self, i: usize) -> f64 {
        self.h[i * self.m..(i + 1) * self.m].iter().sum::<f64>() / self.m as f64
    }

    /// Second coordinate expectation `CE₂(H)(t) = ∫ H(s,t) ds` on cell `j`.
    pub fn marginal_2(&self, j: usize) -> f64 {
        (0..self.m).map(|i| self.h[i * self.m + j]).sum::<f64>() / self.m as f64
    }

    pub fn sup(&self) -> f64 {
        self.h.iter().copied().fold(0.0, f64::max)
    }

    /// Upper-triangular support check at block level: all mass on `j ≥ i`.
    pub fn is_upper_triangular(&self) -> bool {
        (0..self.m).all(|i| (0..i).all(|j| self.h[i * self.m + j] == 0.0))
    }
}

/// Wire format `{"m": int, "H": [[real]]}`.
#[derive(Serialize, Deserialize)]
struct DensityWire {
    m: usize,
    #[serde(rename = "H")]
    h: Vec<Vec<f64>>,
}

impl Serialize for BlockDensity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DensityWire { m: self.m, h: self.rows() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BlockDensity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = DensityWire::deserialize(d)?;
        if wire.h.len() != wire.m {
            return Err(serde::de::Error::custom("H has wrong number of rows"));
        }
        BlockDensity::from_rows(wire.h).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Covariance pairs
// ---------------------------------------------------------------------------

/// The pair of kernels defining a general covariance `(α, β)`:
/// `α` integrates `H_α` over its first coordinate, `β` integrates `H_β` over
/// its second.  A tracial pair has `H_α = H_β`, and then both equal the
/// density of a single measure `η`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariancePair {
    m: usize,
    h_alpha: Vec<f64>,
    h_beta: Vec<f64>,
}

impl CovariancePair {
    /// The tracial covariance of the measure with density `H`.
    pub fn tracial(density: &BlockDensity) -> Self {
        CovariancePair {
            m: density.m,
            h_alpha: density.h.clone(),
            h_beta: density.h.clone(),
        }
    }

    pub fn from_kernels(h_alpha: BlockDensity, h_beta: BlockDensity) -> Result<Self> {
        if h_alpha.m != h_beta.m {
            return Err(Error::GridMismatch { left: h_alpha.m, right: h_beta.m });
        }
        Ok(CovariancePair { m: h_alpha.m, h_alpha: h_alpha.h, h_beta: h_beta.h })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h_alpha(&self) -> BlockDensity {
        BlockDensity { m: self.m, h: self.h_alpha.clone() }
    }

    pub fn h_beta(&self) -> BlockDensity {
        BlockDensity { m: self.m, h: self.h_beta.clone() }
    }

    fn check_grid_f(&self, f: &StepFunction) -> Result<()> {
        if self.m != f.m {
            return Err(Error::GridMismatch { left: self.m, right: f.m });
        }
        Ok(())
    }

    /// `(α f)_j = (1/m) Σ_i H_α[i][j] f_i`.
    pub fn alpha_apply(&self, f: &StepFunction) -> Result<StepFunction> {
        self.check_grid_f(f)?;
        let m = self.m;
        let mut out = vec![Complex64::new(0.0, 0.0); m];
        for i in 0..m {
            let fi = f.values[i];
            if fi == Complex64::new(0.0, 0.0) {
                continue;
            }
            let row = &self.h_alpha[i * m..(i + 1) * m];
            for (j, &hij) in row.iter().enumerate() {
                out[j] += fi * hij;
            }
        }
        let inv_m = 1.0 / m as f64;
        StepFunction::new(out.into_iter().map(|v| v * inv_m).collect())
    }

    /// `(β g)_i = (1/m) Σ_j H_β[i][j] g_j`.
    pub fn beta_apply(&self, g: &StepFunction) -> Result<StepFunction> {
        self.check_grid_f(g)?;
        let m = self.m;
        let mut out = Vec::with_capacity(m);
        for i in 0..m {
            let row = &self.h_beta[i * m..(i + 1) * m];
            let sum: Complex64 = row
                .iter()
                .zip(&g.values)
                .map(|(&hij, gj)| gj * hij)
                .sum();
            out.push(sum / m as f64);
        }
        StepFunction::new(out)
    }

    /// The covariance of the adjoint element: kernels transpose and swap
    /// roles, so the new `α` acts as the old `β` and vice versa.
    pub fn adjoint(&self) -> CovariancePair {
        let m = self.m;
        let transpose = |h: &[f64]| {
            let mut t = vec![0.0; m * m];
            for i in 0..m {
                for j in 0..m {
                    t[i * m + j] = h[j * m + i];
                }
            }
            t
        };
        CovariancePair {
            m,
            h_alpha: transpose(&self.h_beta),
            h_beta: transpose(&self.h_alpha),
        }
    }

    /// Covariance of a sum of *-free elements: kernels add.
    pub fn sum(&self, other: &CovariancePair) -> Result<CovariancePair> {
        if self.m != other.m {
            return Err(Error::GridMismatch { left: self.m, right: other.m });
        }
        Ok(CovariancePair {
            m: self.m,
            h_alpha: self
                .h_alpha
                .iter()
                .zip(&other.h_alpha)
                .map(|(a, b)| a + b)
                .collect(),
            h_beta: self
                .h_beta
                .iter()
                .zip(&other.h_beta)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Covariance of `d* z d` for a step function `d`: both kernels pick up
    /// the factor `|d(s)|² |d(t)|²`.
    pub fn conjugate(&self, d: &StepFunction) -> Result<CovariancePair> {
        self.check_grid_f(d)?;
        let m = self.m;
        let w: Vec<f64> = d.values.iter().map(|z| z.norm_sqr()).collect();
        let apply = |h: &[f64]| {
            let mut out = vec![0.0; m * m];
            for i in 0..m {
                for j in 0..m {
                    out[i * m + j] = w[i] * w[j] * h[i * m + j];
                }
            }
            out
        };
        Ok(CovariancePair {
            m,
            h_alpha: apply(&self.h_alpha),
            h_beta: apply(&self.h_beta),
        })
    }

    /// The renormalized corner: restrict both kernels to `[c,d]²`, rescale
    /// to a grid of `m(d−c)` cells, and multiply the density by `(d−c)`.
    ///
    /// The factor is the push-forward Jacobian `(d−c)²` of the affine map
    /// onto `[0,1]` times the `(d−c)⁻¹` mass renormalization of the corner
    /// trace.  On the upper-triangle density this reproduces the
    /// upper-triangle shape scaled by `(d−c)`.
    pub fn compress_rescale(&self, c: f64, d: f64) -> Result<CovariancePair> {
        if !(c < d) {
            return Err(Error::InvalidParameter(format!("need c < d, got ({c}, {d})")));
        }
        let lo = grid_index(c, self.m)?;
        let hi = grid_index(d, self.m)?;
        let new_m = hi - lo;
        let scale = d - c;
        let extract = |h: &[f64]| {
            let mut out = vec![0.0; new_m * new_m];
            for i in 0..new_m {
                for j in 0..new_m {
                    out[i * new_m + j] = scale * h[(lo + i) * self.m + (lo + j)];
                }
            }
            out
        };
        Ok(CovariancePair {
            m: new_m,
            h_alpha: extract(&self.h_alpha),
            h_beta: extract(&self.h_beta),
        })
    }

    /// True iff `τ(α(b)c) = τ(β(c)b)` for all step functions `b`, `c`,
    /// which at block resolution is exactly entrywise kernel equality.
    pub fn traciality_check(&self) -> bool {
        self.h_alpha
            .iter()
            .zip(&self.h_beta)
            .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs())))
    }

    /// `‖α‖ = sup CE₂(H_α)` and `‖β‖ = sup CE₁(H_β)`.
    pub fn map_norms(&self) -> (f64, f64) {
        let m = self.m;
        let alpha = (0..m)
            .map(|j| (0..m).map(|i| self.h_alpha[i * m + j]).sum::<f64>() / m as f64)
            .fold(0.0, f64::max);
        let beta = (0..m)
            .map(|i| self.h_beta[i * m..(i + 1) * m].iter().sum::<f64>() / m as f64)
            .fold(0.0, f64::max);
        (alpha, beta)
    }

    /// `(M^{1/2}, 2M^{1/2})` with `M = max(‖α‖, ‖β‖)`: the two-sided
    /// operator-norm bound for the circular element.
    pub fn norm_bounds(&self) -> (f64, f64) {
        let (na, nb) = self.map_norms();
        let root = na.max(nb).sqrt();
        (root, 2.0 * root)
    }

    /// `‖z‖₂ = η([0,1]²)^{1/2}` for a tracial pair.
    pub fn two_norm(&self) -> Result<f64> {
        if !self.traciality_check() {
            return Err(Error::InvalidParameter(
                "two_norm requires a tracial covariance".into(),
            ));
        }
        Ok((self.h_alpha.iter().sum::<f64>() / (self.m * self.m) as f64).sqrt())
    }

    /// The four kernels of the real/imaginary decomposition of `z`: with
    /// `z = (x₁ + ix₂)/√2`, `E(x_i b x_j)` has kernel `(H_α + H_β)/2` on the
    /// diagonal and `± i (H_β − H_α)/2` off it.
    pub fn gaussian_covariance_matrix(&self) -> GaussianCovariance {
        let m = self.m;
        let mut diag = vec![Complex64::new(0.0, 0.0); m * m];
        let mut e12 = vec![Complex64::new(0.0, 0.0); m * m];
        let mut e21 = vec![Complex64::new(0.0, 0.0); m * m];
        for idx in 0..m * m {
            let a = self.h_alpha[idx];
            let b = self.h_beta[idx];
            diag[idx] = Complex64::new((a + b) / 2.0, 0.0);
            e12[idx] = Complex64::new(0.0, (b - a) / 2.0);
            e21[idx] = Complex64::new(0.0, (a - b) / 2.0);
        }
        GaussianCovariance { m, e11: diag.clone(), e12, e21, e22: diag }
    }
}

/// Kernels of `E(x_i b x_j)` for the semicircular pair `x₁, x₂`.
#[derive(Debug, Clone)]
pub struct GaussianCovariance {
    pub m: usize,
    pub e11: Vec<Complex64>,
    pub e12: Vec<Complex64>,
    pub e21: Vec<Complex64>,
    pub e22: Vec<Complex64>,
}

impl GaussianCovariance {
    /// Inverts the four displayed formulas: `H_α = e11 + i·e12`,
    /// `H_β = e11 + i·e21` (entrywise, values real for a valid pair).
    pub fn reconstruct(&self) -> Result<CovariancePair> {
        let i = Complex64::new(0.0, 1.0);
        let h_alpha: Vec<f64> = self
            .e11
            .iter()
            .zip(&self.e12)
            .map(|(d, o)| (d + i * o).re)
            .collect();
        let h_beta: Vec<f64> = self
            .e11
            .iter()
            .zip(&self.e21)
            .map(|(d, o)| (d + i * o).re)
            .collect();
        Ok(CovariancePair { m: self.m, h_alpha, h_beta })
    }
}
