//! Acceptance suite: one test per criterion, every tolerance pinned in
//! code.  Each test prints a `ACCEPTANCE <k> PASS` line with the measured
//! quantities; a failed assertion marks the criterion failed.

use std::time::Instant;

use freecirc::finite_algebra::{
    self, generation_with_halving, invariance_witness, star_algebra_dimension,
};
use freecirc::hyperinvariant::{
    criterion_report, discrete_f_bound_check, quasinilpotence_certificate, CriterionConfig,
    MonteCarlo,
};
use freecirc::matrix_model::{
    compression_inequality_check, configure_blas, discretize_fn, eigenvalues,
    empirical_zstarz_moments, sample, moment_route_check,
};
use freecirc::moment_engine::{
    moment, moment_bruteforce, nested_power, partition_bracket, trace_moment, StarSymbol,
    StarWord,
};
use freecirc::nc_partitions::{catalan, count_nc2, enumerate_nc2, PairPartition};
use freecirc::step_algebra::{BlockDensity, CovariancePair, Preset, StepFunction};
use freecirc::transforms::{
    cauchy_scalar, gt_fixed_point, gt_series, k_transform, TransformQuery,
};
use num_complex::Complex64;

/// Small deterministic generator for reproducible random instances.
struct Lcg(u64);

impl Lcg {
    fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    fn next_complex(&mut self) -> Complex64 {
        Complex64::new(self.next_f64() - 0.5, self.next_f64() - 0.5)
    }

    fn next_usize(&mut self, bound: usize) -> usize {
        (self.next_f64() * bound as f64) as usize % bound
    }
}

/// The measure discretization of the triangle `{s ≤ t}`: block averages of
/// the density, so diagonal blocks carry weight 1/2.
fn triangle_measure(m: usize) -> BlockDensity {
    let mut h = vec![0.0; m * m];
    for i in 0..m {
        h[i * m + i] = 0.5;
        for j in i + 1..m {
            h[i * m + j] = 1.0;
        }
    }
    BlockDensity::new(m, h).unwrap()
}

#[test]
fn criterion_01_catalan_counts() {
    let start = Instant::now();
    for n in 1..=8usize {
        assert_eq!(
            enumerate_nc2(2 * n).len() as u128,
            catalan(n),
            "enumeration disagrees at 2n = {}",
            2 * n
        );
    }
    let known: [(usize, u128); 4] = [(1, 1), (4, 14), (10, 16796), (30, 3_814_986_502_092_304)];
    for (n, value) in known {
        assert_eq!(count_nc2(2 * n), value);
        assert_eq!(catalan(n), value);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "runtime {elapsed:?} over 1 s");
    println!("ACCEPTANCE 01 PASS: |NC2(2n)| = C_n, enumerated n ≤ 8, formula n ≤ 30 ({elapsed:?})");
}

#[test]
fn criterion_02_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = Lcg(0x5EED_0002);
    let mut worst: f64 = 0.0;
    for case in 0..500 {
        let m = 1 + rng.next_usize(8);
        let h: Vec<f64> = (0..m * m).map(|_| rng.next_f64() * 2.0).collect();
        let cov = CovariancePair::tracial(&BlockDensity::new(m, h).unwrap());
        let len = 1 + rng.next_usize(8);
        let letters: Vec<(StarSymbol, StepFunction)> = (0..len)
            .map(|_| {
                let sym = if rng.next_f64() < 0.5 { StarSymbol::Z } else { StarSymbol::ZStar };
                let coeff =
                    StepFunction::new((0..m).map(|_| rng.next_complex()).collect()).unwrap();
                (sym, coeff)
            })
            .collect();
        let word = StarWord::new(letters);
        let dp = moment(&cov, &word).unwrap();
        let bf = moment_bruteforce(&cov, &word).unwrap();
        let dev = dp.sup_distance(&bf);
        worst = worst.max(dev);
        assert!(dev < 1e-12, "case {case}: deviation {dev}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "runtime {elapsed:?} over 30 s");
    println!("ACCEPTANCE 02 PASS: DP = brute force on 500 words, worst dev {worst:.3e} ({elapsed:?})");
}

#[test]
fn criterion_03_worked_partition_bracket() {
    let mut rng = Lcg(0x5EED_0003);
    let m = 6;
    let cov = CovariancePair::tracial(&triangle_measure(m));
    let pi = PairPartition::new(6, vec![(1, 4), (2, 3), (5, 6)]).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let b: Vec<StepFunction> = (0..6)
            .map(|_| StepFunction::new((0..m).map(|_| rng.next_complex()).collect()).unwrap())
            .collect();
        let word = StarWord::new(vec![
            (StarSymbol::Z, b[0].clone()),
            (StarSymbol::ZStar, b[1].clone()),
            (StarSymbol::Z, b[2].clone()),
            (StarSymbol::ZStar, b[3].clone()),
            (StarSymbol::ZStar, b[4].clone()),
            (StarSymbol::Z, b[5].clone()),
        ]);
        let got = partition_bracket(&cov, &pi, &word).unwrap();
        let expect = cov
            .beta_apply(&b[0].mul(&cov.alpha_apply(&b[1]).unwrap()).unwrap().mul(&b[2]).unwrap())
            .unwrap()
            .mul(&b[3])
            .unwrap()
            .mul(&cov.alpha_apply(&b[4]).unwrap())
            .unwrap()
            .mul(&b[5])
            .unwrap();
        let dev = got.sup_distance(&expect);
        worst = worst.max(dev);
        assert!(dev < 1e-13, "deviation {dev}");
    }
    println!("ACCEPTANCE 03 PASS: nested bracket identity on 50 tuples, worst dev {worst:.3e}");
}

#[test]
fn criterion_04_circular_specialization() {
    let m = 8;
    let cov = CovariancePair::tracial(&BlockDensity::preset(&Preset::Square, m).unwrap());
    let mut worst: f64 = 0.0;
    for n in 1..=7usize {
        let t = trace_moment(&cov, &StarWord::zstar_z_power(m, n)).unwrap();
        let dev = (t - Complex64::new(catalan(n) as f64, 0.0)).norm();
        worst = worst.max(dev);
        assert!(dev < 1e-10, "n = {n}: τ((z*z)ⁿ) = {t}, C_n = {}", catalan(n));
    }
    println!("ACCEPTANCE 04 PASS: τ((z*z)^n) = C_n for the square preset, n ≤ 7, worst dev {worst:.3e}");
}

#[test]
fn criterion_05_dt_nested_moments() {
    let start = Instant::now();
    for m in [16usize, 64, 256] {
        let density = triangle_measure(m);
        let cov = CovariancePair::tracial(&density);
        let mut factorial_next = 1.0; // (n+1)!
        for n in 1..=10usize {
            factorial_next *= (n + 1) as f64;
            let f = nested_power(&cov, n, 0.0).unwrap();
            let tau = f.trace().re;
            let target = 1.0 / factorial_next;
            let rel = (tau - target).abs() / target;
            let tol = 3.0 * n as f64 / m as f64;
            assert!(rel <= tol, "m = {m}, n = {n}: relative error {rel} over {tol}");
        }
        let bound = discrete_f_bound_check(&density, 0.0, 1.0, 10).unwrap();
        assert!(bound.holds, "m = {m}: chain bound violated, ratio {}", bound.max_ratio);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "runtime {elapsed:?} over 5 s");
    println!("ACCEPTANCE 05 PASS: τ(f_n) → 1/(n+1)! within 3n/m over m ∈ {{16,64,256}}, chain bound holds ({elapsed:?})");
}

#[test]
fn criterion_06_transform_consistency() {
    // fixed point versus series inside the guard
    let m = 8;
    let sq = CovariancePair::tracial(&BlockDensity::preset(&Preset::Square, m).unwrap());
    let mut q = TransformQuery::new(
        sq.clone(),
        StepFunction::one(m),
        StepFunction::constant(m, Complex64::new(0.05, 0.0)),
    );
    q.series_order = 30;
    let series = gt_series(&q).unwrap();
    assert!(!series.diverged);
    let fp = gt_fixed_point(&q).unwrap();
    let dev_fp_series = fp.sup_distance(&series.value);
    assert!(dev_fp_series < 1e-10, "fixed point vs series: {dev_fp_series}");

    // K-inverse identity on random small arguments
    let mut rng = Lcg(0x5EED_0006);
    let tri = CovariancePair::tracial(&triangle_measure(m));
    let mut worst_k: f64 = 0.0;
    for _ in 0..5 {
        let b = StepFunction::from_real(
            &(0..m).map(|_| 0.02 + 0.04 * rng.next_f64()).collect::<Vec<_>>(),
        )
        .unwrap();
        let c = StepFunction::from_real(
            &(0..m).map(|_| 0.3 + 0.7 * rng.next_f64()).collect::<Vec<_>>(),
        )
        .unwrap();
        let k = k_transform(&tri, &c, &b).unwrap();
        let back = gt_fixed_point(&TransformQuery::new(tri.clone(), c, k)).unwrap();
        let dev = back.sup_distance(&b);
        worst_k = worst_k.max(dev);
        assert!(dev < 1e-10, "K-inverse identity: {dev}");
    }

    // scalar Cauchy value at ζ = 5
    let g = cauchy_scalar(&sq, Complex64::new(5.0, 0.0)).unwrap();
    let exact = (5.0 - 5f64.sqrt()) / 10.0;
    let dev_g = (g - Complex64::new(exact, 0.0)).norm();
    assert!(dev_g < 1e-10, "G(5) = {g} vs {exact}");
    println!(
        "ACCEPTANCE 06 PASS: fp=series ({dev_fp_series:.2e}), G̃(K(b))=b ({worst_k:.2e}), G(5) dev {dev_g:.2e}"
    );
}

#[test]
fn criterion_07_norm_window() {
    let m = 8;
    let presets = [
        ("square", BlockDensity::preset(&Preset::Square, m).unwrap()),
        ("upper_triangle", BlockDensity::preset(&Preset::UpperTriangle, m).unwrap()),
        ("band", BlockDensity::preset(&Preset::Band { eps: 0.25 }, m).unwrap()),
        (
            "corner_box",
            BlockDensity::preset(
                &Preset::CornerBox { c: 0.25, d: 0.5, r: 1.0, a: 0.75, big_r: 1.0 },
                m,
            )
            .unwrap(),
        ),
    ];
    for (name, density) in presets {
        let cov = CovariancePair::tracial(&density);
        let (lower, upper) = cov.norm_bounds();
        for n in 1..=12usize {
            let e = moment(&cov, &StarWord::zstar_z_power(m, n)).unwrap();
            let root = e.sup_norm().powf(1.0 / (2.0 * n as f64));
            assert!(
                root >= lower - 1e-9 && root <= upper + 1e-9,
                "{name}, n = {n}: root {root} outside [{lower}, {upper}]"
            );
        }
    }
    println!("ACCEPTANCE 07 PASS: ‖E((z*z)^n)‖^(1/2n) inside [M^1/2, 2M^1/2] for n ≤ 12, all presets");
}

#[test]
fn criterion_08_matrix_model_moments() {
    configure_blas(None);
    let start = Instant::now();
    let n_dim = 1024;
    let m = 8;
    let trials = 20;
    for (name, density) in [
        ("square", BlockDensity::preset(&Preset::Square, m).unwrap()),
        ("upper_triangle", BlockDensity::preset(&Preset::UpperTriangle, m).unwrap()),
    ] {
        let cov = CovariancePair::tracial(&density);
        let mut acc = vec![0.0; 3];
        for t in 0..trials {
            let s = sample(&density, n_dim, 8_000 + t).unwrap();
            for (k, v) in empirical_zstarz_moments(&s, 3).iter().enumerate() {
                acc[k] += v / trials as f64;
            }
        }
        for n in 1..=3usize {
            let exact = trace_moment(&cov, &StarWord::zstar_z_power(m, n)).unwrap().re;
            let rel = (acc[n - 1] - exact).abs() / exact;
            assert!(
                rel < 0.05,
                "{name}, n = {n}: empirical {} vs exact {exact} (rel {rel})",
                acc[n - 1]
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "runtime {elapsed:?} over 2 min");
    println!("ACCEPTANCE 08 PASS: empirical τ((z*z)^n) within 5% at N = 1024, 20 trials ({elapsed:?})");
}

#[test]
fn criterion_09_moment_route_relation() {
    configure_blas(None);
    let start = Instant::now();
    let density = BlockDensity::preset(&Preset::UpperTriangle, 128).unwrap();
    let mut gaps = Vec::new();
    for n in [2usize, 3] {
        let report = moment_route_check(&density, 2048, n, 20, 9_000).unwrap();
        assert!(
            report.relative_gap < 0.10,
            "n = {n}: lhs {} vs rhs {} (gap {})",
            report.lhs,
            report.rhs,
            report.relative_gap
        );
        gaps.push((n, report.relative_gap));
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "runtime {elapsed:?} over 5 min");
    println!("ACCEPTANCE 09 PASS: two-route moment gaps {gaps:?} below 10% at N = 2048 ({elapsed:?})");
}

#[test]
fn criterion_10_singular_number_compression() {
    configure_blas(None);
    let mut rng = Lcg(0x5EED_000A);
    let square = BlockDensity::preset(&Preset::Square, 1).unwrap();
    let mut violations = 0;
    for case in 0..100u64 {
        let n = 24 + rng.next_usize(5) * 10;
        let s = sample(&square, n, 10_000 + case).unwrap();
        let k = n / 2 + rng.next_usize(n / 3);
        let mut indices: Vec<usize> = (0..n).collect();
        // deterministic shuffle
        for i in (1..n).rev() {
            let j = rng.next_usize(i + 1);
            indices.swap(i, j);
        }
        let mut q: Vec<usize> = indices.into_iter().take(k).collect();
        q.sort_unstable();
        let tau_q = k as f64 / n as f64;
        let theta = tau_q * (0.05 + 0.9 * rng.next_f64());
        let check = compression_inequality_check(&s.data, &q, theta).unwrap();
        if !check.holds {
            violations += 1;
        }
    }
    assert_eq!(violations, 0, "{violations} compression-inequality violations");
    println!("ACCEPTANCE 10 PASS: s_θ(a) ≥ s_(θ/τ(q))(qaq) on 100 random instances, zero violations");
}

#[test]
fn criterion_11_criterion_decay() {
    configure_blas(None);
    let start = Instant::now();
    let m = 16;
    let configs = [
        (
            "fig3",
            CriterionConfig {
                density: BlockDensity::preset(
                    &Preset::CornerBox { c: 0.25, d: 0.5, r: 1.0, a: 0.75, big_r: 1.0 },
                    m,
                )
                .unwrap(),
                a: 0.75,
                c: 0.25,
                d: 0.5,
                r: 1.0,
                big_r: 1.0,
                theta: 0.2,
                gamma: None,
                n_max: 8,
                mc: MonteCarlo { n_dim: 1024, trials: 5, seed: 11_000 },
            },
        ),
        (
            "triangle",
            CriterionConfig {
                density: BlockDensity::preset(&Preset::UpperTriangle, m).unwrap(),
                a: 0.5,
                c: 0.0,
                d: 0.5,
                r: 1.0,
                big_r: 1.0,
                theta: 0.25,
                gamma: None,
                n_max: 8,
                mc: MonteCarlo { n_dim: 1024, trials: 5, seed: 11_500 },
            },
        ),
    ];
    let mut slopes = Vec::new();
    for (name, cfg) in configs {
        let report = criterion_report(&cfg).unwrap();
        for w in report.rows.windows(2) {
            assert!(
                w[1].ratio < w[0].ratio,
                "{name}: ratio not decreasing at n = {}",
                w[1].n
            );
        }
        assert!(
            report.slope < -0.1,
            "{name}: fitted log-slope {} not below -0.1",
            report.slope
        );
        slopes.push((name, report.slope, report.verdict.to_string()));
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 600.0, "runtime {elapsed:?} over 10 min");
    println!("ACCEPTANCE 11 PASS: ratio decay over n = 1..8, slopes {slopes:?} ({elapsed:?})");
}

#[test]
fn criterion_12_quasinilpotence() {
    configure_blas(None);
    // the block realization of the triangle via the weight averaging
    let m = 64;
    let density = discretize_fn(|s, t| if s <= t { 1.0 } else { 0.0 }, 8, m).unwrap();
    let eps_grid: Vec<f64> = (1..=6).map(|k| 2f64.powi(-k)).collect();
    let cert = quasinilpotence_certificate(&density, 1.0, &eps_grid).unwrap();
    assert!(cert.quasinilpotent, "certified bounds fail to decrease");
    for w in cert.rows.windows(2) {
        assert!(w[1].crude < w[0].crude);
        assert!(w[1].sharper < w[0].sharper);
    }
    let min_bound = cert.rows.iter().map(|r| r.bound()).fold(f64::INFINITY, f64::min);
    assert!(min_bound < 0.2, "smallest certified bound {min_bound} not below 0.2");

    // Monte Carlo eigenvalues stay below every certified level
    let trials = 5;
    let mut tri_radius = 0.0;
    for t in 0..trials {
        let s = sample(&density, 1024, 12_000 + t).unwrap();
        let eigs = eigenvalues(&s.data).unwrap();
        tri_radius += eigs.iter().map(|z| z.norm()).fold(0.0, f64::max) / trials as f64;
    }
    for row in &cert.rows {
        assert!(
            tri_radius < row.bound(),
            "max|eig| = {tri_radius} exceeds certified bound {} at ε = {}",
            row.bound(),
            row.eps
        );
    }

    // the square preset is refused and its eigenvalue radius is near 1
    let square = BlockDensity::preset(&Preset::Square, 8).unwrap();
    assert!(quasinilpotence_certificate(&square, 1.0, &eps_grid).is_err());
    let mut sq_radius = 0.0;
    for t in 0..trials {
        let s = sample(&square, 1024, 12_500 + t).unwrap();
        let eigs = eigenvalues(&s.data).unwrap();
        sq_radius += eigs.iter().map(|z| z.norm()).fold(0.0, f64::max) / trials as f64;
    }
    assert!(
        (sq_radius - 1.0).abs() < 0.10,
        "square spectral radius {sq_radius} not within 10% of 1"
    );
    println!(
        "ACCEPTANCE 12 PASS: certified bounds fall to {min_bound:.3} (< 0.2), triangle max|eig| {tri_radius:.3}, square radius {sq_radius:.3}"
    );
}

#[test]
fn criterion_13_finite_algebra() {
    let tol = 1e-9;
    // 6×6 example: full generation with the halving-search corner entry
    let (dim6, a_used) = generation_with_halving(finite_algebra::example_6x6, 36, 0.01, tol)
        .unwrap();
    assert_eq!(dim6, 36, "6×6 generated dimension");
    // 10×10: the square of F generates everything
    let f = finite_algebra::example_10x10_f(0.01);
    let dim10 = star_algebra_dimension(&f.dot(&f), tol);
    assert_eq!(dim10, 100, "F² generated dimension");
    // 3×3: invariant-but-not-hyperinvariant witness
    let (a3, p3) = finite_algebra::example_3x3();
    let witness = invariance_witness(&a3, &p3, tol).unwrap();
    assert!(witness.is_some(), "3×3 witness not found");
    println!(
        "ACCEPTANCE 13 PASS: dims 36 (a = {a_used}) and 100; 3×3 hyperinvariance witness found"
    );
}
