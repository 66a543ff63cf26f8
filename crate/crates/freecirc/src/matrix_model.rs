//! Random-matrix realization of a circular element with block covariance.
//!
//! A density `H` on the `m × m` block grid is realized at dimension `N` by
//! `A = Σ_{ij} w_ij P_i Z P_j` with `w = √H` entrywise, `P_i` the i-th
//! diagonal block projection and `Z` an i.i.d. complex Gaussian matrix with
//! entry variance `1/N`.  Entry `(r, c)` of `A` then has standard deviation
//! `w[i(r)][j(c)]/√N`, and `E tr(A*A)` equals the mass of the density.
//!
//! Everything downstream is empirical: trace moments, block conditional
//! expectations, singular-number profiles, spectral radii.

use ndarray::{Array1, Array2};
use ndarray_linalg::{EigVals, SVD};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::moment_engine::StarSymbol;
use crate::step_algebra::{BlockDensity, StepFunction};

pub type CMat = Array2<Complex64>;

#[link(name = "openblas")]
extern "C" {
    fn cblas_zgemm3m(
        layout: i32,
        transa: i32,
        transb: i32,
        m: i32,
        n: i32,
        k: i32,
        alpha: *const Complex64,
        a: *const Complex64,
        lda: i32,
        b: *const Complex64,
        ldb: i32,
        beta: *const Complex64,
        c: *mut Complex64,
        ldc: i32,
    );
}

const CBLAS_ROW_MAJOR: i32 = 101;
const CBLAS_NO_TRANS: i32 = 111;
const CBLAS_CONJ_TRANS: i32 = 113;

/// Which factor of a product gets conjugate-transposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conj {
    None,
    Left,
    Right,
}

/// Dense complex product via the three-real-multiply BLAS kernel.
pub fn gemm(conj: Conj, a: &CMat, b: &CMat) -> CMat {
    let (am, ak) = a.dim();
    let (bk, bn) = b.dim();
    let (m, k) = match conj {
        Conj::None | Conj::Right => (am, ak),
        Conj::Left => (ak, am),
    };
    let n = match conj {
        Conj::None | Conj::Left => bn,
        Conj::Right => bk,
    };
    let inner_b = match conj {
        Conj::Right => bn,
        _ => bk,
    };
    assert_eq!(k, inner_b, "inner dimensions must agree");
    assert!(
        a.is_standard_layout() && b.is_standard_layout(),
        "gemm expects row-major operands"
    );
    let mut out = Array2::<Complex64>::zeros((m, n));
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let (ta, tb) = match conj {
        Conj::None => (CBLAS_NO_TRANS, CBLAS_NO_TRANS),
        Conj::Left => (CBLAS_CONJ_TRANS, CBLAS_NO_TRANS),
        Conj::Right => (CBLAS_NO_TRANS, CBLAS_CONJ_TRANS),
    };
    unsafe {
        cblas_zgemm3m(
            CBLAS_ROW_MAJOR,
            ta,
            tb,
            m as i32,
            n as i32,
            k as i32,
            &one,
            a.as_ptr(),
            ak as i32,
            b.as_ptr(),
            bn as i32,
            &zero,
            out.as_mut_ptr(),
            n as i32,
        );
    }
    out
}

/// Pins the BLAS runtime before the first kernel call: caps the thread
/// count and, on x86-64 machines with AVX2, selects the Haswell kernels
/// when no core type was chosen (the auto-detected AVX-512 kernels run
/// slower than AVX2 under downclocking or virtualization).
///
/// Must run before any other call into this module to take effect.
pub fn configure_blas(threads: Option<usize>) {
    if let Some(t) = threads {
        std::env::set_var("OPENBLAS_NUM_THREADS", t.to_string());
    }
    #[cfg(target_arch = "x86_64")]
    {
        if std::env::var_os("OPENBLAS_CORETYPE").is_none() && is_x86_feature_detected!("avx2") {
            std::env::set_var("OPENBLAS_CORETYPE", "HASWELL");
        }
    }
}

/// An `N × N` sample of the block-weighted Gaussian model.
#[derive(Debug, Clone)]
pub struct MatrixSample {
    pub n_dim: usize,
    pub m: usize,
    pub seed: u64,
    /// `w = √H` entrywise, `m × m`.
    pub weights: Array2<f64>,
    pub data: CMat,
}

impl MatrixSample {
    pub fn block_of(&self, index: usize) -> usize {
        index / (self.n_dim / self.m)
    }
}

/// Draws the seeded Gaussian realization of a density.  Deterministic for
/// fixed `(density, n_dim, seed)`; densities sharing a seed share the
/// underlying Gaussian matrix and differ only in weights, so a zero block
/// of `H` yields an exactly zero block of the sample.
pub fn sample(density: &BlockDensity, n_dim: usize, seed: u64) -> Result<MatrixSample> {
    let m = density.m();
    if n_dim == 0 || n_dim % m != 0 {
        return Err(Error::InvalidParameter(format!(
            "dimension {n_dim} is not a positive multiple of the grid {m}"
        )));
    }
    let block = n_dim / m;
    let weights = Array2::from_shape_fn((m, m), |(i, j)| density.get(i, j).sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (2.0 * n_dim as f64).sqrt();
    let normal = StandardNormal;
    let mut data = Array2::<Complex64>::zeros((n_dim, n_dim));
    for r in 0..n_dim {
        let wi = r / block;
        for c in 0..n_dim {
            let g1: f64 = normal.sample(&mut rng);
            let g2: f64 = normal.sample(&mut rng);
            let w = weights[[wi, c / block]];
            data[[r, c]] = Complex64::new(w * g1 * scale, w * g2 * scale);
        }
    }
    Ok(MatrixSample { n_dim, m, seed, weights, data })
}

/// Normalized trace `tr(M)/N`.
pub fn normalized_trace(mat: &CMat) -> Complex64 {
    mat.diag().sum() / mat.nrows() as f64
}

/// `Σ |M_rc|²`, i.e. `N · tr(M*M)` under the normalized trace.
pub fn frobenius_sq(mat: &CMat) -> f64 {
    mat.iter().map(|z| z.norm_sqr()).sum()
}

/// `A*` as an owned row-major array (a transposed view keeps reversed
/// strides, which the raw BLAS call must not see).
pub fn conj_transpose(a: &CMat) -> CMat {
    let (r, c) = a.dim();
    Array2::from_shape_fn((c, r), |(i, j)| a[[j, i]].conj())
}

/// Evaluates the word matrix `A^{s(1)} ⋯ A^{s(k)}`.
pub fn word_matrix(sample: &MatrixSample, word: &[StarSymbol]) -> CMat {
    let a = &sample.data;
    match word.split_first() {
        None => Array2::eye(sample.n_dim),
        Some((first, rest)) => {
            let mut acc = match first {
                StarSymbol::Z => a.clone(),
                StarSymbol::ZStar => conj_transpose(a),
            };
            for s in rest {
                acc = match s {
                    StarSymbol::Z => gemm(Conj::None, &acc, a),
                    StarSymbol::ZStar => gemm(Conj::Right, &acc, a),
                };
            }
            acc
        }
    }
}

/// Normalized trace of a word in `A`, `A*`.
pub fn empirical_trace_moment(sample: &MatrixSample, word: &[StarSymbol]) -> Complex64 {
    if word.is_empty() {
        return Complex64::new(1.0, 0.0);
    }
    normalized_trace(&word_matrix(sample, word))
}

/// `tr((A*A)ⁿ)/N` for `n = 1..=n_max`, sharing intermediate powers.
pub fn empirical_zstarz_moments(sample: &MatrixSample, n_max: usize) -> Vec<f64> {
    if n_max == 0 {
        return Vec::new();
    }
    let n_dim = sample.n_dim as f64;
    let b = gemm(Conj::Left, &sample.data, &sample.data);
    let mut out = Vec::with_capacity(n_max);
    out.push(normalized_trace(&b).re);
    if n_max >= 2 {
        // tr(B²) = ‖B‖_F² for Hermitian B
        out.push(frobenius_sq(&b) / n_dim);
    }
    let mut power = b.clone();
    for _ in 3..=n_max {
        power = gemm(Conj::None, &power, &b);
        // tr(Bⁿ) = Σ_{ik} (B^{n-1})_{ik} B_{ki} without another product
        out.push(trace_product(&power, &b).re / n_dim);
    }
    out
}

/// `tr(X · Y)` via the entrywise sum, no product materialized.
pub fn trace_product(x: &CMat, y: &CMat) -> Complex64 {
    let n = x.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += x[[i, k]] * y[[k, i]];
        }
    }
    acc
}

/// Block conditional expectation of a word matrix: for each grid cell the
/// average of the diagonal entries inside that block.
pub fn empirical_conditional_expectation(
    sample: &MatrixSample,
    word: &[StarSymbol],
) -> StepFunction {
    let mat = word_matrix(sample, word);
    let block = sample.n_dim / sample.m;
    let values: Vec<Complex64> = (0..sample.m)
        .map(|i| {
            (i * block..(i + 1) * block)
                .map(|r| mat[[r, r]])
                .sum::<Complex64>()
                / block as f64
        })
        .collect();
    StepFunction::new(values).expect("m ≥ 1")
}

/// Singular values in descending order.
pub fn singular_values(mat: &CMat) -> Result<Vec<f64>> {
    let (_, s, _) = mat.svd(false, false)?;
    Ok(s.to_vec())
}

/// Eigenvalues of a general complex matrix, unordered.
pub fn eigenvalues(mat: &CMat) -> Result<Vec<Complex64>> {
    Ok(mat.eigvals()?.to_vec())
}

/// The `t`-th singular number under the normalized trace: with
/// `σ₁ ≥ … ≥ σ_N`, the infimum over spectral cuts of trace at most `t` is
/// attained at `σ_{⌊tN⌋+1}`.
pub fn singular_number(mat: &CMat, t: f64) -> Result<f64> {
    let s = singular_values(mat)?;
    singular_number_of(&s, t)
}

/// Same quantile against a precomputed descending value list.
pub fn singular_number_of(sorted: &[f64], t: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!("t = {t} outside [0, 1)")));
    }
    Ok(sorted[(t * sorted.len() as f64).floor() as usize])
}

/// Outcome of one compression-inequality check.
#[derive(Debug, Clone, Copy)]
pub struct CompressionCheck {
    pub holds: bool,
    pub full: f64,
    pub corner: f64,
}

/// Verifies `s_θ(a) ≥ s_{θ/τ(q)}(qaq)` for a coordinate projection `q`,
/// where the corner carries the renormalized trace.
pub fn compression_inequality_check(
    mat: &CMat,
    q_indices: &[usize],
    theta: f64,
) -> Result<CompressionCheck> {
    let n = mat.nrows();
    let tau_q = q_indices.len() as f64 / n as f64;
    if !(theta > 0.0 && theta < tau_q) {
        return Err(Error::InvalidParameter(format!(
            "θ = {theta} outside (0, τ(q) = {tau_q})"
        )));
    }
    if q_indices.iter().any(|&i| i >= n) {
        return Err(Error::InvalidParameter("projection index out of range".into()));
    }
    let full = singular_number(mat, theta)?;
    let k = q_indices.len();
    let corner_mat = Array2::from_shape_fn((k, k), |(r, c)| mat[[q_indices[r], q_indices[c]]]);
    let corner = singular_number(&corner_mat, theta / tau_q)?;
    Ok(CompressionCheck { holds: full >= corner - 1e-12, full, corner })
}

/// One row of a spectral-radius scan.
#[derive(Debug, Clone, Copy)]
pub struct PowerNormRow {
    pub n: usize,
    /// Trial-averaged `‖Aⁿ‖^{1/n}`; NaN when the power scan is skipped.
    pub norm_root: f64,
    /// Trial-averaged `max |eig(A)|`.
    pub max_eig: f64,
}

/// Trial-averaged operator-norm power roots `‖Aⁿ‖^{1/n}` for
/// `n = 1..=n_powers` together with the largest eigenvalue modulus.
/// `n_powers = 0` skips the power scan and reports eigenvalues only.
pub fn spectral_radius_estimate(
    density: &BlockDensity,
    n_dim: usize,
    n_powers: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<PowerNormRow>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let rows = n_powers.max(1);
    let mut norm_roots = vec![0.0; rows];
    let mut max_eig_acc = 0.0;
    for t in 0..trials {
        let s = sample(density, n_dim, seed + t as u64)?;
        let eigs: Array1<Complex64> = s.data.eigvals()?;
        max_eig_acc += eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut power = s.data.clone();
        for n in 1..=n_powers {
            if n > 1 {
                power = gemm(Conj::None, &power, &s.data);
            }
            let top = singular_values(&power)?.first().copied().unwrap_or(0.0);
            norm_roots[n - 1] += top.powf(1.0 / n as f64);
        }
    }
    let t = trials as f64;
    Ok((1..=rows)
        .map(|n| PowerNormRow {
            n,
            norm_root: if n_powers == 0 { f64::NAN } else { norm_roots[n - 1] / t },
            max_eig: max_eig_acc / t,
        })
        .collect())
}

/// Two routes to the same limit moment.
#[derive(Debug, Clone, Copy)]
pub struct MomentRouteReport {
    /// Mean `tr((A*)ⁿ Aⁿ)/N`.
    pub lhs: f64,
    /// `n^{-n} ·` mean `tr((A*A)ⁿ)/N`.
    pub rhs: f64,
    pub relative_gap: f64,
}

/// Compares the two moment routes `(T*)ⁿTⁿ` versus `(T*T/n)ⁿ` on an
/// upper-triangular block model.
pub fn moment_route_check(
    density: &BlockDensity,
    n_dim: usize,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<MomentRouteReport> {
    if n == 0 || trials == 0 {
        return Err(Error::InvalidParameter("need n ≥ 1 and trials ≥ 1".into()));
    }
    if !density.is_upper_triangular() {
        return Err(Error::SupportViolation(
            "the two-route moment identity needs an upper-triangular density".into(),
        ));
    }
    let mut lhs_acc = 0.0;
    let mut rhs_acc = 0.0;
    for t in 0..trials {
        let s = sample(density, n_dim, seed + t as u64)?;
        let a = &s.data;
        // tr((A*)ⁿAⁿ) = ‖Aⁿ‖_F²
        let mut an = a.clone();
        for _ in 1..n {
            an = gemm(Conj::None, &an, a);
        }
        lhs_acc += frobenius_sq(&an) / n_dim as f64;
        let b = gemm(Conj::Left, a, a);
        let trace_bn = match n {
            1 => normalized_trace(&b).re,
            2 => frobenius_sq(&b) / n_dim as f64,
            // tr(B³) = ‖AB‖_F² since B = A*A
            3 => frobenius_sq(&gemm(Conj::None, a, &b)) / n_dim as f64,
            _ => {
                let mut p = gemm(Conj::None, &b, &b);
                for _ in 3..n {
                    p = gemm(Conj::None, &p, &b);
                }
                normalized_trace(&gemm(Conj::None, &p, &b)).re
            }
        };
        rhs_acc += trace_bn;
    }
    let lhs = lhs_acc / trials as f64;
    let rhs = rhs_acc / trials as f64 / (n as f64).powi(n as i32);
    let relative_gap = (lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE);
    Ok(MomentRouteReport { lhs, rhs, relative_gap })
}

/// Block-averages a fine weight grid down to `m × m` and squares it into a
/// density: `w̄_ij` is the mean of `w` over the block, `H = w̄²`.  Coordinate
/// expectations never increase under this averaging.
pub fn discretize(w_fine: &Array2<f64>, m: usize) -> Result<BlockDensity> {
    let (rows, cols) = w_fine.dim();
    if rows != cols || rows == 0 {
        return Err(Error::InvalidParameter("weight grid must be square".into()));
    }
    if m == 0 || rows % m != 0 {
        return Err(Error::InvalidParameter(format!(
            "fine grid {rows} is not a multiple of target grid {m}"
        )));
    }
    if w_fine.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::InvalidParameter("weights must be nonnegative".into()));
    }
    let f = rows / m;
    let mut h = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            let mut acc = 0.0;
            for r in 0..f {
                for c in 0..f {
                    acc += w_fine[[i * f + r, j * f + c]];
                }
            }
            let mean = acc / (f * f) as f64;
            h[i * m + j] = mean * mean;
        }
    }
    BlockDensity::new(m, h)
}

/// [`discretize`] for a weight function sampled at fine-cell midpoints,
/// `fine` subdivisions per target cell.
pub fn discretize_fn<F: Fn(f64, f64) -> f64>(w: F, fine: usize, m: usize) -> Result<BlockDensity> {
    if fine == 0 {
        return Err(Error::InvalidParameter("need at least one subdivision".into()));
    }
    let big = m * fine;
    let grid = Array2::from_shape_fn((big, big), |(r, c)| {
        w((r as f64 + 0.5) / big as f64, (c as f64 + 0.5) / big as f64)
    });
    discretize(&grid, m)
}
