//! Cauchy- and R-transforms of `z*cz` for a circular element `z`.
//!
//! With `G̃_x(b) = Σ_{n≥0} E(b(xb)ⁿ)` (related to the Cauchy transform by
//! `G_x(ζ) = G̃_x(ζ⁻¹)`), the transform of `z*cz` satisfies
//!
//! ```text
//! G̃(b) = b (1 − b α(c (1 − c β(G̃(b)))⁻¹))⁻¹
//! ```
//!
//! which is evaluated both as a truncated moment series (inside the
//! convergence guard) and as a fixed point of the displayed map.  The
//! R-transform has the closed form `R(b) = α(c (1 − c β(b))⁻¹)`, and scalar
//! spectral densities come out of `G` by Stieltjes inversion.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::moment_engine::{moment, StarSymbol, StarWord};
use crate::step_algebra::{CovariancePair, StepFunction};

/// Inputs of a transform evaluation.
#[derive(Debug, Clone)]
pub struct TransformQuery {
    pub cov: CovariancePair,
    /// Middle coefficient `c` of `z*cz`.
    pub c: StepFunction,
    /// Argument `b`.
    pub b: StepFunction,
    pub series_order: usize,
    pub fp_tolerance: f64,
    pub fp_max_iter: usize,
}

impl TransformQuery {
    pub fn new(cov: CovariancePair, c: StepFunction, b: StepFunction) -> Self {
        TransformQuery {
            cov,
            c,
            b,
            series_order: 40,
            fp_tolerance: 1e-12,
            fp_max_iter: 10_000,
        }
    }

    /// `4 M ‖b‖ ‖c‖ < 1` with `M = max(‖α‖, ‖β‖)`: inside this ball the
    /// Catalan bound makes the moment series geometric.
    pub fn guard_value(&self) -> f64 {
        let (na, nb) = self.cov.map_norms();
        4.0 * na.max(nb) * self.b.sup_norm() * self.c.sup_norm()
    }
}

/// A truncated series value together with a divergence flag (set when the
/// convergence guard fails; the partial sum is still returned).
#[derive(Debug, Clone)]
pub struct SeriesEval {
    pub value: StepFunction,
    pub diverged: bool,
}

/// Truncated series `Σ_{n ≤ N} E(b (z*czb)ⁿ)`.
pub fn gt_series(q: &TransformQuery) -> Result<SeriesEval> {
    let m = q.cov.m();
    if q.b.m() != m || q.c.m() != m {
        return Err(Error::GridMismatch { left: m, right: q.b.m().max(q.c.m()) });
    }
    let mut total = q.b.clone();
    let mut letters = Vec::with_capacity(2 * q.series_order);
    for _ in 0..q.series_order {
        letters.push((StarSymbol::ZStar, q.c.clone()));
        letters.push((StarSymbol::Z, q.b.clone()));
        let word = StarWord { leading: Some(q.b.clone()), letters: letters.clone() };
        total = total.add(&moment(&q.cov, &word)?)?;
    }
    Ok(SeriesEval { value: total, diverged: q.guard_value() >= 1.0 })
}

/// Fixed-point evaluation of `G̃_{z*cz}(b)`.
///
/// Plain iteration from `g₀ = b`, with a damping factor `1/2` engaged once
/// the change stops contracting after 200 steps (the map has derivative of
/// modulus near one on the spectrum, where damping restores convergence).
pub fn gt_fixed_point(q: &TransformQuery) -> Result<StepFunction> {
    let m = q.cov.m();
    if q.b.m() != m || q.c.m() != m {
        return Err(Error::GridMismatch { left: m, right: q.b.m().max(q.c.m()) });
    }
    let mut g = q.b.clone();
    let mut last_change = f64::INFINITY;
    let mut damped = false;
    for iter in 0..q.fp_max_iter {
        let next = gt_step(q, &g)?;
        let change = next.sup_distance(&g);
        if change < q.fp_tolerance {
            return Ok(next);
        }
        if !damped && iter >= 200 && change >= last_change {
            damped = true;
        }
        g = if damped {
            g.add(&next)?.scale(Complex64::new(0.5, 0.0))
        } else {
            next
        };
        last_change = change;
    }
    Err(Error::NonConvergence { iterations: q.fp_max_iter, last_change })
}

/// One application of `g ↦ b(1 − b α(c(1 − c β(g))⁻¹))⁻¹`.
fn gt_step(q: &TransformQuery, g: &StepFunction) -> Result<StepFunction> {
    let inner = q.c.mul(&q.cov.beta_apply(g)?)?.one_minus().inverse()?;
    let outer = q.cov.alpha_apply(&q.c.mul(&inner)?)?;
    q.b.mul(&q.b.mul(&outer)?.one_minus().inverse()?)
}

/// Closed-form R-transform `R_{z*cz}(b) = α(c (1 − c β(b))⁻¹)`.
pub fn r_transform(cov: &CovariancePair, c: &StepFunction, b: &StepFunction) -> Result<StepFunction> {
    let inner = c.mul(&cov.beta_apply(b)?)?.one_minus().inverse()?;
    cov.alpha_apply(&c.mul(&inner)?)
}

/// `K(b) = (b⁻¹ + R(b))⁻¹`, the inverse of `G̃` in the sense `G̃(K(b)) = b`.
pub fn k_transform(cov: &CovariancePair, c: &StepFunction, b: &StepFunction) -> Result<StepFunction> {
    b.inverse()?.add(&r_transform(cov, c, b)?)?.inverse()
}

/// Scalar Cauchy transform `G_{z*z}(ζ) = τ(G̃_{z*z}(ζ⁻¹ 1))`.
///
/// Requires `Im ζ > 0` or `|ζ|` beyond the squared upper norm bound, so the
/// resolvent is defined.
pub fn cauchy_scalar(cov: &CovariancePair, zeta: Complex64) -> Result<Complex64> {
    let (_, upper) = cov.norm_bounds();
    if zeta.im <= 0.0 && zeta.norm() <= upper * upper {
        return Err(Error::InvalidParameter(format!(
            "ζ = {zeta} is neither in the upper half-plane nor outside |ζ| > {:.3}",
            upper * upper
        )));
    }
    let m = cov.m();
    let q = TransformQuery::new(
        cov.clone(),
        StepFunction::one(m),
        StepFunction::constant(m, 1.0 / zeta),
    );
    Ok(gt_fixed_point(&q)?.trace())
}

/// Stieltjes inversion: `density(x) = −(1/π) Im G(x + iε)`.
pub fn spectral_density(
    cov: &CovariancePair,
    x_grid: &[f64],
    eps: f64,
) -> Result<Vec<(f64, f64)>> {
    if eps <= 0.0 {
        return Err(Error::InvalidParameter(format!("ε = {eps} must be positive")));
    }
    x_grid
        .iter()
        .map(|&x| {
            let g = cauchy_scalar(cov, Complex64::new(x, eps))?;
            Ok((x, -g.im / std::f64::consts::PI))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moment_engine::trace_moment;
    use crate::step_algebra::{BlockDensity, Preset};
    use approx::assert_abs_diff_eq;

    fn square(m: usize) -> CovariancePair {
        CovariancePair::tracial(&BlockDensity::preset(&Preset::Square, m).unwrap())
    }

    fn tri(m: usize) -> CovariancePair {
        CovariancePair::tracial(&BlockDensity::preset(&Preset::UpperTriangle, m).unwrap())
    }

    #[test]
    fn series_zero_argument() {
        let m = 4;
        let q = TransformQuery::new(square(m), StepFunction::one(m), StepFunction::zero(m));
        let s = gt_series(&q).unwrap();
        assert_eq!(s.value.sup_norm(), 0.0);
        assert!(!s.diverged);
        assert_eq!(gt_fixed_point(&q).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn series_order_zero_is_b() {
        let m = 4;
        let b = StepFunction::from_real(&[0.1, 0.2, 0.0, -0.1]).unwrap();
        let mut q = TransformQuery::new(square(m), StepFunction::one(m), b.clone());
        q.series_order = 0;
        assert!(gt_series(&q).unwrap().value.sup_distance(&b) < 1e-15);
    }

    #[test]
    fn series_matches_scalar_catalan_sum() {
        // square preset, c = 1, b = 0.1: partial sums of Σ Cₙ 0.1^{n+1}
        let m = 3;
        let mut q = TransformQuery::new(
            square(m),
            StepFunction::one(m),
            StepFunction::constant(m, Complex64::new(0.1, 0.0)),
        );
        q.series_order = 3;
        let got = gt_series(&q).unwrap();
        let expect = 0.1 + 0.01 + 2.0 * 0.001 + 5.0 * 0.0001;
        assert_abs_diff_eq!(got.value.trace().re, expect, epsilon = 1e-15);
        assert!(!got.diverged);
    }

    #[test]
    fn series_divergence_flag() {
        let m = 2;
        let q = TransformQuery::new(
            square(m),
            StepFunction::one(m),
            StepFunction::constant(m, Complex64::new(0.3, 0.0)),
        );
        assert!(gt_series(&q).unwrap().diverged);
    }

    #[test]
    fn fixed_point_agrees_with_series() {
        let m = 4;
        let mut q = TransformQuery::new(
            square(m),
            StepFunction::one(m),
            StepFunction::constant(m, Complex64::new(0.05, 0.0)),
        );
        q.series_order = 25;
        let series = gt_series(&q).unwrap();
        assert!(!series.diverged);
        let fp = gt_fixed_point(&q).unwrap();
        assert!(fp.sup_distance(&series.value) < 1e-10);
    }

    #[test]
    fn fixed_point_agrees_with_series_nonuniform() {
        let m = 4;
        let c = StepFunction::from_real(&[1.0, 0.5, 0.8, 0.2]).unwrap();
        let b = StepFunction::new(vec![
            Complex64::new(0.04, 0.01),
            Complex64::new(0.02, -0.03),
            Complex64::new(-0.05, 0.0),
            Complex64::new(0.01, 0.02),
        ])
        .unwrap();
        let mut q = TransformQuery::new(tri(m), c, b);
        q.series_order = 30;
        let series = gt_series(&q).unwrap();
        assert!(!series.diverged);
        let fp = gt_fixed_point(&q).unwrap();
        assert!(fp.sup_distance(&series.value) < 1e-10);
    }

    #[test]
    fn r_transform_at_zero_is_alpha_c() {
        let m = 5;
        let cov = tri(m);
        let c = StepFunction::from_real(&[0.3, 1.0, 0.1, 0.9, 0.5]).unwrap();
        let r = r_transform(&cov, &c, &StepFunction::zero(m)).unwrap();
        assert!(r.sup_distance(&cov.alpha_apply(&c).unwrap()) < 1e-15);
    }

    #[test]
    fn r_transform_square_free_poisson() {
        // α = β = averaging; on constants R(t) = 1/(1−t)
        let m = 3;
        let cov = square(m);
        for t in [0.1, 0.3, -0.2] {
            let r = r_transform(
                &cov,
                &StepFunction::one(m),
                &StepFunction::constant(m, Complex64::new(t, 0.0)),
            )
            .unwrap();
            assert_abs_diff_eq!(r.trace().re, 1.0 / (1.0 - t), epsilon = 1e-14);
        }
    }

    #[test]
    fn k_inverse_identity() {
        let m = 4;
        let cov = tri(m);
        let c = StepFunction::one(m);
        for scale in [0.02, 0.05] {
            let b = StepFunction::from_real(&[scale, scale * 0.7, scale * 1.3, scale * 0.4])
                .unwrap();
            let k = k_transform(&cov, &c, &b).unwrap();
            let q = TransformQuery::new(cov.clone(), c.clone(), k);
            let back = gt_fixed_point(&q).unwrap();
            assert!(back.sup_distance(&b) < 1e-10);
        }
    }

    #[test]
    fn cauchy_square_marchenko_pastur_value() {
        // G(5) = (5 − √5)/10 for the circular element
        let g = cauchy_scalar(&square(8), Complex64::new(5.0, 0.0)).unwrap();
        assert_abs_diff_eq!(g.re, (5.0 - 5f64.sqrt()) / 10.0, epsilon = 1e-10);
        assert_abs_diff_eq!(g.im, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn cauchy_leading_asymptotics() {
        let cov = tri(16);
        for zeta in [Complex64::new(200.0, 0.0), Complex64::new(0.0, 300.0)] {
            let g = cauchy_scalar(&cov, zeta).unwrap();
            assert!((zeta * g - Complex64::new(1.0, 0.0)).norm() < 0.02);
        }
    }

    #[test]
    fn cauchy_domain_validation() {
        let cov = square(4);
        assert!(cauchy_scalar(&cov, Complex64::new(2.0, 0.0)).is_err());
        assert!(cauchy_scalar(&cov, Complex64::new(2.0, 0.5)).is_ok());
    }

    #[test]
    fn cauchy_triangle_matches_moment_series() {
        let m = 32;
        let cov = tri(m);
        let zeta = Complex64::new(5.0, 0.0);
        let g = cauchy_scalar(&cov, zeta).unwrap();
        let mut series = Complex64::new(0.0, 0.0);
        for n in 0..=20 {
            let t = trace_moment(&cov, &StarWord::zstar_z_power(m, n)).unwrap();
            series += t / zeta.powu(n as u32 + 1);
        }
        assert!((g - series).norm() < 1e-8);
    }

    #[test]
    fn herglotz_sign() {
        for cov in [square(6), tri(6)] {
            for (x, y) in [(0.5, 0.3), (2.0, 0.01), (-1.0, 1.0), (3.5, 0.1)] {
                let g = cauchy_scalar(&cov, Complex64::new(x, y)).unwrap();
                assert!(g.im < 0.0, "Im G({x}+{y}i) = {}", g.im);
            }
        }
    }

    #[test]
    fn gzcz1_adjoint_route_consistency() {
        // g = b(1 − b α(G̃_{zbz*}(c)))⁻¹ where the inner transform runs on
        // the adjoint covariance with the roles of b and c swapped
        let m = 4;
        let cov = tri(m);
        let c = StepFunction::from_real(&[0.9, 0.4, 1.0, 0.6]).unwrap();
        let b = StepFunction::from_real(&[0.05, 0.03, 0.01, 0.04]).unwrap();
        let g_direct = gt_fixed_point(&TransformQuery::new(cov.clone(), c.clone(), b.clone()))
            .unwrap();
        let inner = gt_fixed_point(&TransformQuery::new(cov.adjoint(), b.clone(), c.clone()))
            .unwrap();
        let g_route = b
            .mul(&b.mul(&cov.alpha_apply(&inner).unwrap()).unwrap().one_minus().inverse().unwrap())
            .unwrap();
        assert!(g_direct.sup_distance(&g_route) < 1e-10);
    }

    #[test]
    fn spectral_density_square_free_poisson() {
        // The square preset has the free Poisson law on (0, 4), with an
        // integrable x^{-1/2} spike at the origin; integrate on a grid
        // graded like √x so the spike is resolved.
        let cov = square(4);
        let n_bins = 80;
        let eps = 1e-3;
        let u_max = 4.2f64.sqrt();
        let du = u_max / n_bins as f64;
        let us: Vec<f64> = (0..n_bins).map(|i| (i as f64 + 0.5) * du).collect();
        let xs: Vec<f64> = us.iter().map(|u| u * u).collect();
        let dens = spectral_density(&cov, &xs, eps).unwrap();
        let integral: f64 = dens
            .iter()
            .zip(&us)
            .map(|((_, d), u)| d * 2.0 * u * du)
            .sum();
        assert!((integral - 1.0).abs() < 0.02, "integral = {integral}");
        for (x, d) in &dens {
            if *x > 0.2 && *x < 3.8 {
                let exact = (4.0 / x - 1.0).max(0.0).sqrt() / (2.0 * std::f64::consts::PI);
                assert!((d - exact).abs() < 0.01 + 0.05 * exact, "x = {x}: {d} vs {exact}");
            }
        }
    }

    #[test]
    fn spectral_density_zero_covariance_concentrates_at_origin() {
        let cov = CovariancePair::tracial(&BlockDensity::new(2, vec![0.0; 4]).unwrap());
        let xs = [0.0, 0.5];
        for eps in [1e-2, 1e-3] {
            let d = spectral_density(&cov, &xs, eps).unwrap();
            // G(ζ) = 1/ζ exactly; the Lorentzian mass piles onto x = 0
            assert_abs_diff_eq!(d[0].1, 1.0 / (std::f64::consts::PI * eps), epsilon = 1e-6 / eps);
            assert_abs_diff_eq!(
                d[1].1,
                eps / (std::f64::consts::PI * (0.25 + eps * eps)),
                epsilon = 1e-9
            );
        }
        assert!(spectral_density(&cov, &xs, 0.0).is_err());
    }

    #[test]
    fn moment_recovery_from_cauchy_expansion() {
        // G(ζ) = Σ τ((z*z)ⁿ)/ζ^{n+1} at |ζ| = 50 recovers moments to 1e-6
        let m = 8;
        let cov = tri(m);
        let zeta = Complex64::new(50.0, 0.0);
        let g = cauchy_scalar(&cov, zeta).unwrap();
        let mut series = Complex64::new(0.0, 0.0);
        for n in 0..=6 {
            series += trace_moment(&cov, &StarWord::zstar_z_power(m, n)).unwrap()
                / zeta.powu(n as u32 + 1);
        }
        assert!((g - series).norm() < 1e-6);
    }
}
