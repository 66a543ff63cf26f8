//! Finite-dimensional *-algebra generation and invariance testing.
//!
//! The central computations: the dimension of the unital *-algebra
//! generated by a matrix (numerical span closure under right
//! multiplication by `A`, `A*`), commutants as nullspaces of the
//! commutator map, and witnesses separating invariant subspaces from
//! hyperinvariant ones.

use ndarray::Array2;
use ndarray_linalg::{Inverse, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix_model::CMat;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn fro_norm(mat: &CMat) -> f64 {
    mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn conj_t(mat: &CMat) -> CMat {
    let (r, c) = mat.dim();
    Array2::from_shape_fn((c, r), |(i, j)| mat[[j, i]].conj())
}

fn frobenius_inner(x: &CMat, y: &CMat) -> Complex64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Default rank tolerance relative to the generator scale.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Dimension of the unital *-algebra generated by `A`, via iterated span
/// closure under right multiplication by `A` and `A*`.  Rank decisions use
/// the residual after (twice-iterated) orthogonal projection, measured
/// against `tol` on unit-normalized candidates.
pub fn star_algebra_dimension(a: &CMat, tol: f64) -> usize {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "square matrix required");
    let a_star = conj_t(a);
    let full = n * n;
    let mut basis: Vec<CMat> = Vec::with_capacity(full);
    let eye: CMat = Array2::eye(n);
    basis.push(eye.mapv(|z| z / (n as f64).sqrt()));
    let mut next = 0;
    while next < basis.len() && basis.len() < full {
        let x = basis[next].clone();
        next += 1;
        for cand in [x.dot(a), x.dot(&a_star)] {
            let norm = fro_norm(&cand);
            if norm < 1e-300 {
                continue;
            }
            let mut v = cand.mapv(|z| z / norm);
            // modified Gram-Schmidt, twice for stability
            for _ in 0..2 {
                for b in &basis {
                    let coeff = frobenius_inner(b, &v);
                    v = v - b.mapv(|z| z * coeff);
                }
            }
            let residual = fro_norm(&v);
            if residual > tol {
                basis.push(v.mapv(|z| z / residual));
            }
        }
    }
    basis.len()
}

/// The banded matrix `A = Σ b_k e_{k,k+p} + Σ_{k=2}^p a_k e_{1,p+k}` whose
/// generated *-algebra is full for small enough corner entries.
pub fn build_irreduc_matrix(n: usize, p: usize, b: &[f64], a_entries: &[f64]) -> Result<CMat> {
    if p < 2 || n <= 2 * p {
        return Err(Error::InvalidParameter(format!(
            "need p ≥ 2 and n > 2p, got n = {n}, p = {p}"
        )));
    }
    if b.len() != n - p {
        return Err(Error::InvalidParameter(format!(
            "need {} band entries, got {}",
            n - p,
            b.len()
        )));
    }
    if a_entries.len() != p - 1 {
        return Err(Error::InvalidParameter(format!(
            "need {} corner entries, got {}",
            p - 1,
            a_entries.len()
        )));
    }
    if b.iter().any(|&x| x <= 0.0) {
        return Err(Error::InvalidParameter("band entries must be positive".into()));
    }
    for i in 0..b.len() {
        for j in i + 1..b.len() {
            if b[i] == b[j] {
                return Err(Error::InvalidParameter("band entries must be distinct".into()));
            }
        }
    }
    if a_entries.iter().any(|&x| x <= 0.0) {
        return Err(Error::InvalidParameter("corner entries must be positive".into()));
    }
    let mut a = Array2::from_elem((n, n), zero());
    for (k, &bk) in b.iter().enumerate() {
        a[[k, k + p]] = Complex64::new(bk, 0.0);
    }
    for (idx, &ak) in a_entries.iter().enumerate() {
        let k = idx + 2; // entries a_2 … a_p sit at (1, p+k) in 1-based terms
        a[[0, p + k - 1]] = Complex64::new(ak, 0.0);
    }
    Ok(a)
}

/// The 3×3 operator whose invariant middle subspace fails to be
/// hyperinvariant, together with the offending projection.
pub fn example_3x3() -> (CMat, CMat) {
    let mut a = Array2::from_elem((3, 3), zero());
    a[[1, 2]] = one();
    a[[2, 2]] = one();
    let mut p = Array2::from_elem((3, 3), zero());
    p[[1, 1]] = one();
    p[[2, 2]] = one();
    (a, p)
}

/// The 6×6 irreducibility example with corner entry `a`.
pub fn example_6x6(a: f64) -> Result<CMat> {
    build_irreduc_matrix(6, 2, &[1.0, 2.0, 3.0, 4.0], &[a])
}

/// The 10×10 band matrix `F` with three corner entries `a`; its square
/// generates the full matrix algebra for small `a`.
pub fn example_10x10_f(a: f64) -> CMat {
    let mut f = Array2::from_elem((10, 10), zero());
    for k in 1..=8usize {
        f[[k - 1, k + 1]] = Complex64::new(k as f64, 0.0);
    }
    for col in [3, 4, 5] {
        f[[0, col]] = Complex64::new(a, 0.0);
    }
    f
}

/// Explicit Jordan chains of the 6×6 example: columns `(A²u, Au, u)` for
/// `u = e₅, e₆` give `A = S (J₃ ⊕ J₃) S⁻¹`.
pub fn jordan_similarity_6x6(a: f64) -> Result<(CMat, CMat)> {
    let mut s = Array2::from_elem((6, 6), zero());
    // chain from u = e5: (3e1, 3e3, e5)
    s[[0, 0]] = Complex64::new(3.0, 0.0);
    s[[2, 1]] = Complex64::new(3.0, 0.0);
    s[[4, 2]] = one();
    // chain from u = e6: (4a·e1 + 8e2, 4e4, e6)
    s[[0, 3]] = Complex64::new(4.0 * a, 0.0);
    s[[1, 3]] = Complex64::new(8.0, 0.0);
    s[[3, 4]] = Complex64::new(4.0, 0.0);
    s[[5, 5]] = one();
    let s_inv = s.inv()?;
    Ok((s, s_inv))
}

/// Two nilpotent Jordan blocks of size three.
pub fn jordan_form_6x6() -> CMat {
    let mut b = Array2::from_elem((6, 6), zero());
    for i in [0, 1, 3, 4] {
        b[[i, i + 1]] = one();
    }
    b
}

/// The swap of the two Jordan blocks; commutes with the Jordan form.
pub fn block_swap_6x6() -> CMat {
    let mut c = Array2::from_elem((6, 6), zero());
    for i in 0..3 {
        c[[i, i + 3]] = one();
        c[[i + 3, i]] = one();
    }
    c
}

/// Orthonormal basis of `{X : AX = XA}` via the nullspace of the
/// commutator map on vectorized matrices.
pub fn commutant_basis(a: &CMat, tol: f64) -> Result<Vec<CMat>> {
    commutant_basis_multi(std::slice::from_ref(a), tol)
}

/// Orthonormal basis of the joint commutant `{X : M_i X = X M_i ∀i}`.
pub fn commutant_basis_multi(mats: &[CMat], tol: f64) -> Result<Vec<CMat>> {
    let n = mats
        .first()
        .map(|m| m.nrows())
        .ok_or_else(|| Error::InvalidParameter("empty matrix list".into()))?;
    for m in mats {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::InvalidParameter(
                "matrices must share one square size".into(),
            ));
        }
    }
    let nn = n * n;
    // stacked commutator maps: row (mat, i, j), column (k, l)
    let mut l = Array2::from_elem((mats.len() * nn, nn), zero());
    for (mi, mat) in mats.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                let row = mi * nn + i * n + j;
                for k in 0..n {
                    l[[row, k * n + j]] += mat[[i, k]];
                }
                for lcol in 0..n {
                    l[[row, i * n + lcol]] -= mat[[lcol, j]];
                }
            }
        }
    }
    let (_, sv, vt) = l.svd(false, true)?;
    let vt = vt.expect("requested");
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let cut = tol * smax.max(1.0);
    let mut basis = Vec::new();
    for (idx, &sigma) in sv.iter().enumerate() {
        if sigma <= cut {
            let row = vt.row(idx);
            let x = Array2::from_shape_fn((n, n), |(i, j)| row[i * n + j].conj());
            basis.push(x);
        }
    }
    // V† rows beyond the listed singular values also span the nullspace
    for idx in sv.len()..nn {
        let row = vt.row(idx);
        let x = Array2::from_shape_fn((n, n), |(i, j)| row[i * n + j].conj());
        basis.push(x);
    }
    Ok(basis)
}

/// Searches the commutant of `A` for an operator that moves the range of
/// the projection `P`.  Returns such a witness (the subspace is invariant
/// but not hyperinvariant) or `None`.
pub fn invariance_witness(a: &CMat, p: &CMat, tol: f64) -> Result<Option<CMat>> {
    let n = a.nrows();
    if p.nrows() != n || p.ncols() != n {
        return Err(Error::InvalidParameter("projection has wrong shape".into()));
    }
    let scale = fro_norm(p).max(1.0);
    let p2 = p.dot(p);
    if fro_norm(&(&p2 - p)) > tol * scale * scale || fro_norm(&(p - &conj_t(p))) > tol * scale {
        return Err(Error::InvalidParameter("P is not an orthogonal projection".into()));
    }
    let eye: CMat = Array2::eye(n);
    let co_p = &eye - p;
    let ap = a.dot(p);
    if fro_norm(&co_p.dot(&ap)) > tol * fro_norm(a).max(1.0) {
        return Err(Error::InvalidParameter("range of P is not invariant".into()));
    }
    for x in commutant_basis(a, tol)? {
        if fro_norm(&co_p.dot(&x.dot(p))) > tol {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

/// Halving search over the corner entry: shrinks `a` until the generated
/// *-algebra reaches `target_dim`, reporting the dimension found and the
/// entry used.
pub fn generation_with_halving<F>(
    build: F,
    target_dim: usize,
    a_start: f64,
    tol: f64,
) -> Result<(usize, f64)>
where
    F: Fn(f64) -> Result<CMat>,
{
    let mut a = a_start;
    let mut last = (0usize, a);
    for _ in 0..20 {
        let mat = build(a)?;
        let dim = star_algebra_dimension(&mat, tol);
        last = (dim, a);
        if dim == target_dim {
            return Ok(last);
        }
        a /= 2.0;
    }
    Ok(last)
}

/// Orthogonal projection onto the span of the first `k` columns of `S`.
pub fn projection_onto_columns(s: &CMat, k: usize) -> Result<CMat> {
    let n = s.nrows();
    if k == 0 || k > s.ncols() {
        return Err(Error::InvalidParameter(format!("column count {k} out of range")));
    }
    let mut q: Vec<ndarray::Array1<Complex64>> = Vec::with_capacity(k);
    for j in 0..k {
        let mut v = s.column(j).to_owned();
        for u in &q {
            let coeff: Complex64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            v = v - u.mapv(|z| z * coeff);
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::InvalidParameter("columns are linearly dependent".into()));
        }
        q.push(v.mapv(|z| z / norm));
    }
    let mut p = Array2::from_elem((n, n), zero());
    for u in &q {
        for i in 0..n {
            for j in 0..n {
                p[[i, j]] += u[i] * u[j].conj();
            }
        }
    }
    Ok(p)
}
