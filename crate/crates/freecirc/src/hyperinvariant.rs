//! Numerical evaluation of the hyperinvariant-subspace criterion and the
//! quasinilpotence bounds for a block density.
//!
//! The criterion machinery compares two decay rates for a density meeting
//! the support conditions: the exact spectral-cut levels
//! `μ_n = Kⁿ(1−γ)ⁿ/n!` from the nested-expectation bound against Monte
//! Carlo estimates of the squared singular numbers `s_θ(zⁿ)²`.  A ratio
//! `μ_n/s_θ(zⁿ)²` decaying to zero is the numerical shadow of the
//! subspace construction; verdicts are heuristic evidence, never a proof.

use crate::error::{Error, Result};
use crate::matrix_model::{gemm, sample, singular_number_of, singular_values, Conj};
use crate::moment_engine::nested_power;
use crate::step_algebra::{grid_index, BlockDensity, CovariancePair, Preset};

/// Monte Carlo sampling plan.
#[derive(Debug, Clone, Copy)]
pub struct MonteCarlo {
    pub n_dim: usize,
    pub trials: usize,
    pub seed: u64,
}

/// Region parameters and sampling plan for the criterion.
#[derive(Debug, Clone)]
pub struct CriterionConfig {
    pub density: BlockDensity,
    /// Left edge of the diagonal strip carrying the `≤ R` bound.
    pub a: f64,
    /// The `[c, d]` square carrying exactly `r` times Lebesgue measure.
    pub c: f64,
    pub d: f64,
    pub r: f64,
    pub big_r: f64,
    /// Trace cut `θ ∈ (0, d−c)`.
    pub theta: f64,
    /// Spectral-cut location; auto-selected when absent.
    pub gamma: Option<f64>,
    pub n_max: usize,
    pub mc: MonteCarlo,
}

impl CriterionConfig {
    pub fn validate(&self) -> Result<()> {
        let m = self.density.m();
        for (name, x) in [("c", self.c), ("d", self.d), ("a", self.a)] {
            grid_index(x, m).map_err(|_| Error::Misaligned(format!("{name} = {x}")))?;
        }
        if !(0.0 <= self.c && self.c < self.d && self.d <= self.a && self.a < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 ≤ c < d ≤ a < 1, got ({}, {}, {})",
                self.c, self.d, self.a
            )));
        }
        if !(self.theta > 0.0 && self.theta < self.d - self.c) {
            return Err(Error::InvalidParameter(format!(
                "θ = {} outside (0, d−c = {})",
                self.theta,
                self.d - self.c
            )));
        }
        if let Some(g) = self.gamma {
            if !(g >= self.a && g < 1.0) {
                return Err(Error::InvalidParameter(format!("γ = {g} outside [a, 1)")));
            }
        }
        if self.r <= 0.0 || self.big_r <= 0.0 {
            return Err(Error::InvalidParameter("need r > 0 and R > 0".into()));
        }
        if self.n_max == 0 || self.mc.trials == 0 {
            return Err(Error::InvalidParameter("need n_max ≥ 1 and trials ≥ 1".into()));
        }
        Ok(())
    }
}

/// Block-level outcome of the three support conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupportReport {
    /// `H ≤ R` on the blocks of `{a ≤ s ≤ t ≤ 1}`.
    pub strip_bounded: bool,
    /// `H = r` on the blocks of `{c ≤ s ≤ t ≤ d}`.
    pub square_exact: bool,
    /// `H = 0` on the required union of zones.
    pub zero_zones: bool,
}

impl SupportReport {
    pub fn all(&self) -> bool {
        self.strip_bounded && self.square_exact && self.zero_zones
    }
}

const DENSITY_TOL: f64 = 1e-12;

/// Exact block-level verification of the three support conditions.
///
/// The zero region is taken as drawn: `[c,1]×[0,c]`, `[d,1]×[c,d]`, the
/// part of `[c,d]²` below the diagonal, and everything below the diagonal
/// with `s ≥ a`.  Diagonal blocks straddle the diagonal and are exempt
/// from the below-diagonal zones.
pub fn verify_support_conditions(cfg: &CriterionConfig) -> Result<SupportReport> {
    cfg.validate()?;
    let m = cfg.density.m();
    let ci = grid_index(cfg.c, m)?;
    let di = grid_index(cfg.d, m)?;
    let ai = grid_index(cfg.a, m)?;
    let h = |i: usize, j: usize| cfg.density.get(i, j);

    let mut strip_bounded = true;
    for i in ai..m {
        for j in i..m {
            strip_bounded &= h(i, j) <= cfg.big_r + DENSITY_TOL;
        }
    }
    let mut square_exact = true;
    for i in ci..di {
        for j in i..di {
            square_exact &= (h(i, j) - cfg.r).abs() <= DENSITY_TOL * cfg.r.max(1.0);
        }
    }
    let mut zero_zones = true;
    for i in 0..m {
        for j in 0..m {
            let in_left_band = i >= ci && j < ci;
            let in_mid_band = i >= di && j >= ci && j < di;
            let below_diag = j < i;
            let in_square_lower = below_diag && j >= ci && i < di;
            let in_strip_lower = below_diag && i >= ai;
            if in_left_band || in_mid_band || in_square_lower || in_strip_lower {
                zero_zones &= h(i, j) == 0.0;
            }
        }
    }
    Ok(SupportReport { strip_bounded, square_exact, zero_zones })
}

/// `μ_n = Kⁿ(1−γ)ⁿ/n!` for `n = 1..=n_max`.
pub fn mu_sequence(k: f64, gamma: f64, n_max: usize) -> Result<Vec<f64>> {
    if k <= 0.0 {
        return Err(Error::InvalidParameter(format!("K = {k} must be positive")));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("γ = {gamma} outside [0, 1)")));
    }
    let step = k * (1.0 - gamma);
    let mut out = Vec::with_capacity(n_max);
    let mut mu = 1.0;
    for n in 1..=n_max {
        mu *= step / n as f64;
        out.push(mu);
    }
    Ok(out)
}

/// Spectral-cut location `ρ = 1 − (n! μ)^{1/n}/K` for a level
/// `μ ∈ [0, Kⁿ(1−a)ⁿ/n!]`.
pub fn rho_level(mu: f64, n: usize, k: f64, a: f64) -> Result<f64> {
    if n == 0 || k <= 0.0 {
        return Err(Error::InvalidParameter("need n ≥ 1 and K > 0".into()));
    }
    let mut limit = 1.0;
    for l in 1..=n {
        limit *= k * (1.0 - a) / l as f64;
    }
    if !(0.0..=limit * (1.0 + 1e-12)).contains(&mu) {
        return Err(Error::InvalidParameter(format!(
            "μ = {mu} outside the admissible range [0, {limit}]"
        )));
    }
    if mu == 0.0 {
        return Ok(1.0);
    }
    let mut log_fact = 0.0;
    for l in 1..=n {
        log_fact += (l as f64).ln();
    }
    Ok(1.0 - ((log_fact + mu.ln()) / n as f64).exp() / k)
}

/// Outcome of the discrete nested-expectation bound.
#[derive(Debug, Clone, Copy)]
pub struct FBoundCheck {
    pub holds: bool,
    /// Largest ratio `f_{n,i} / bound_{n,i}` observed.
    pub max_ratio: f64,
}

/// Checks `f_{n,i} ≤ (Kⁿ/n!)((m−i+n)/m)ⁿ` for all cells `i` in `[a,1]` and
/// `n ≤ n_max`, where `f` is the nested-pairing iteration.  The bound
/// counts the weakly increasing index chains of the iteration and holds
/// exactly for every density supported upper-triangularly on the strip
/// with `H ≤ K`.
pub fn discrete_f_bound_check(
    density: &BlockDensity,
    a: f64,
    k: f64,
    n_max: usize,
) -> Result<FBoundCheck> {
    let m = density.m();
    let ai = grid_index(a, m)?;
    for i in ai..m {
        for j in 0..i {
            if density.get(i, j) != 0.0 {
                return Err(Error::SupportViolation(format!(
                    "density has mass below the diagonal at block ({i}, {j})"
                )));
            }
        }
    }
    if k <= 0.0 {
        return Err(Error::InvalidParameter("need K > 0".into()));
    }
    let cov = CovariancePair::tracial(density);
    let mut max_ratio: f64 = 0.0;
    let mut factorial = 1.0;
    for n in 1..=n_max {
        factorial *= n as f64;
        let f = nested_power(&cov, n, a)?;
        for i in ai..m {
            // 1-based bound ((m−i+n)/m)ⁿ at 0-based cell i
            let reach = (m - i - 1 + n) as f64 / m as f64;
            let bound = k.powi(n as i32) / factorial * reach.powi(n as i32);
            let value = f.values()[i].re;
            if bound > 0.0 {
                max_ratio = max_ratio.max(value / bound);
            }
        }
    }
    Ok(FBoundCheck { holds: max_ratio <= 1.0 + 1e-12, max_ratio })
}

/// The singular-number lower bound `(r(d−c)/n)^{n/2} ŝⁿ` transported from
/// the renormalized corner, where `ŝ` estimates `s_{θ/(d−c)}` of the unit
/// triangle operator.
pub fn s_theta_lower_bound(r: f64, d_minus_c: f64, n: usize, s_hat: Option<f64>) -> Result<f64> {
    let s_hat = s_hat.ok_or_else(|| {
        Error::InvalidParameter("missing corner singular-number estimate ŝ".into())
    })?;
    if n == 0 {
        return Err(Error::InvalidParameter("need n ≥ 1".into()));
    }
    Ok((r * d_minus_c / n as f64).powf(n as f64 / 2.0) * s_hat.powi(n as i32))
}

/// One row of the criterion table.
#[derive(Debug, Clone, Copy)]
pub struct CriterionRow {
    pub n: usize,
    pub mu: f64,
    /// Monte Carlo mean of `s_θ(Aⁿ)²`.
    pub s_sq: f64,
    /// Squared corner lower bound for `s_θ(zⁿ)`.
    pub lower_bound_sq: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Pass => write!(f, "PASS"),
            Verdict::Inconclusive => write!(f, "INCONCLUSIVE"),
        }
    }
}

/// Full criterion evaluation.
#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub rows: Vec<CriterionRow>,
    /// Least-squares slope of `log ratio` against `n`.
    pub slope: f64,
    pub r_squared: f64,
    pub verdict: Verdict,
    pub k_used: f64,
    pub gamma_used: f64,
    /// `α̂ = r(d−c) ŝ²`.
    pub alpha_hat: f64,
    /// Monte Carlo estimate of `s_{θ/(d−c)}` of the unit triangle model.
    pub s_hat_corner: f64,
}

/// Builds the decay table `μ_n` versus `ŝ_θ(zⁿ)²` and fits the log-ratio.
///
/// `K` is the blockwise maximum of the density on the strip `[a,1]×[0,1]`
/// (the minimal admissible constant); `γ`, unless supplied, is chosen so
/// that `K(1−γ) ≤ α̂/e`, clamped to `[a, 1)`.  The verdict is heuristic:
/// PASS for a fitted slope below −0.1 with `R² > 0.8`.
pub fn criterion_report(cfg: &CriterionConfig) -> Result<CriterionReport> {
    let support = verify_support_conditions(cfg)?;
    if !support.all() {
        return Err(Error::SupportViolation(format!(
            "support conditions failed: strip_bounded={} square_exact={} zero_zones={}",
            support.strip_bounded, support.square_exact, support.zero_zones
        )));
    }
    let m = cfg.density.m();
    let ai = grid_index(cfg.a, m)?;
    let mut k: f64 = 0.0;
    for i in ai..m {
        for j in 0..m {
            k = k.max(cfg.density.get(i, j));
        }
    }
    if k <= 0.0 {
        return Err(Error::InvalidParameter(
            "the strip [a,1]×[0,1] carries no density; K would vanish".into(),
        ));
    }

    // corner estimate on the unit triangle model at the same grid
    let theta_corner = cfg.theta / (cfg.d - cfg.c);
    let triangle = BlockDensity::preset(&Preset::UpperTriangle, m)?;
    let mut s_hat_acc = 0.0;
    for t in 0..cfg.mc.trials {
        let s = sample(&triangle, cfg.mc.n_dim, cfg.mc.seed + 10_000 + t as u64)?;
        let sv = singular_values(&s.data)?;
        s_hat_acc += singular_number_of(&sv, theta_corner)?;
    }
    let s_hat_corner = s_hat_acc / cfg.mc.trials as f64;
    let alpha_hat = cfg.r * (cfg.d - cfg.c) * s_hat_corner * s_hat_corner;

    let gamma_used = match cfg.gamma {
        Some(g) => g,
        None => (1.0 - alpha_hat / (std::f64::consts::E * k))
            .max(cfg.a)
            .min(1.0 - 1e-9),
    };
    let mu = mu_sequence(k, gamma_used, cfg.n_max)?;

    // Monte Carlo singular quantiles of the powers
    let mut s_sq = vec![0.0; cfg.n_max];
    for t in 0..cfg.mc.trials {
        let s = sample(&cfg.density, cfg.mc.n_dim, cfg.mc.seed + t as u64)?;
        let mut power = s.data.clone();
        for n in 1..=cfg.n_max {
            if n > 1 {
                power = gemm(Conj::None, &power, &s.data);
            }
            let sv = singular_values(&power)?;
            let q = singular_number_of(&sv, cfg.theta)?;
            s_sq[n - 1] += q * q / cfg.mc.trials as f64;
        }
    }

    let rows: Vec<CriterionRow> = (1..=cfg.n_max)
        .map(|n| {
            let lb = s_theta_lower_bound(cfg.r, cfg.d - cfg.c, n, Some(s_hat_corner))
                .expect("validated inputs");
            CriterionRow {
                n,
                mu: mu[n - 1],
                s_sq: s_sq[n - 1],
                lower_bound_sq: lb * lb,
                ratio: mu[n - 1] / s_sq[n - 1],
            }
        })
        .collect();

    let (slope, r_squared) = fit_log_slope(&rows)?;
    let verdict = if slope < -0.1 && r_squared > 0.8 {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    Ok(CriterionReport {
        rows,
        slope,
        r_squared,
        verdict,
        k_used: k,
        gamma_used,
        alpha_hat,
        s_hat_corner,
    })
}

fn fit_log_slope(rows: &[CriterionRow]) -> Result<(f64, f64)> {
    if rows.len() < 2 {
        return Err(Error::InvalidParameter("need at least two rows to fit".into()));
    }
    if rows.iter().any(|r| !(r.ratio > 0.0) || !r.ratio.is_finite()) {
        return Err(Error::InvalidParameter(
            "nonpositive ratio; Monte Carlo singular numbers degenerate".into(),
        ));
    }
    let n = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.ratio.ln()).collect();
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let syy: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok((slope, r_squared))
}

/// Restriction of an upper-triangular density to the diagonal band
/// `{0 ≤ s ≤ t ≤ 1, t − s ≤ ε}`: keeps the blocks lying inside the band,
/// i.e. `i ≤ j ≤ i + εm − 1`, and zeroes everything else.
pub fn band_restriction(density: &BlockDensity, eps: f64) -> Result<BlockDensity> {
    let m = density.m();
    let width = grid_index(eps, m)?;
    if width == 0 {
        return Err(Error::InvalidParameter(format!("band width {eps} below one cell")));
    }
    let mut h = vec![0.0; m * m];
    for i in 0..m {
        for j in i..(i + width).min(m) {
            h[i * m + j] = density.get(i, j);
        }
    }
    BlockDensity::new(m, h)
}

/// One certified level of the quasinilpotence scan.
#[derive(Debug, Clone, Copy)]
pub struct BandBound {
    pub eps: f64,
    /// `2 √(ε ‖H_δ‖_∞)`.
    pub crude: f64,
    /// `2 max(‖CE₁(H_ε)‖_∞, ‖CE₂(H_ε)‖_∞)^{1/2}`.
    pub sharper: f64,
}

impl BandBound {
    /// The best certified norm bound at this level.
    pub fn bound(&self) -> f64 {
        self.crude.min(self.sharper)
    }
}

#[derive(Debug, Clone)]
pub struct QuasinilCertificate {
    pub rows: Vec<BandBound>,
    /// True when the certified bounds decrease along the grid.
    pub quasinilpotent: bool,
}

/// Spectral-radius certificates from band restrictions: for every `ε` the
/// spectral radius is at most the norm of the band part, which the
/// marginal bounds control through `2√(ε‖H_δ‖_∞)` and the sharper
/// coordinate-expectation form.  Requires blockwise upper-triangular
/// support with the density bounded on the `δ`-band.
pub fn quasinilpotence_certificate(
    density: &BlockDensity,
    delta: f64,
    eps_grid: &[f64],
) -> Result<QuasinilCertificate> {
    if !density.is_upper_triangular() {
        return Err(Error::SupportViolation(
            "density has mass strictly below the diagonal".into(),
        ));
    }
    if eps_grid.is_empty() {
        return Err(Error::InvalidParameter("empty ε grid".into()));
    }
    let h_delta = band_restriction(density, delta)?;
    let h_delta_sup = h_delta.sup();
    let m = density.m();
    let mut rows = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        if eps > delta + 1e-12 {
            return Err(Error::InvalidParameter(format!("ε = {eps} exceeds δ = {delta}")));
        }
        let h_eps = band_restriction(density, eps)?;
        let ce1 = (0..m).map(|i| h_eps.marginal_1(i)).fold(0.0, f64::max);
        let ce2 = (0..m).map(|j| h_eps.marginal_2(j)).fold(0.0, f64::max);
        rows.push(BandBound {
            eps,
            crude: 2.0 * (eps * h_delta_sup).sqrt(),
            sharper: 2.0 * ce1.max(ce2).sqrt(),
        });
    }
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| b.eps.partial_cmp(&a.eps).unwrap());
    let quasinilpotent = sorted.windows(2).all(|w| w[1].bound() < w[0].bound());
    Ok(QuasinilCertificate { rows, quasinilpotent })
}
