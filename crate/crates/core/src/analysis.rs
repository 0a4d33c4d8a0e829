//! Hypotheses and rate envelopes of the convergence guarantees, and
//! certification of the weak Minty condition for linear operators.
//!
//! Every condition is reported as a residual that must be `≤ 0`. Strict
//! conditions such as `μ > 0` are reported as `−μ`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::algorithms::{PdhgConfig, Schedule, Trajectory};
use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, Vector};
use crate::problems::Problem;

/// Tolerance on eigenvalues when certifying semidefiniteness.
pub const CERTIFY_TOL: f64 = 1e-10;

/// Which per-iteration quantity an envelope bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// `‖Fz^k‖²`
    FzSq,
    /// `dist(0, Tz̄^k)²`
    GapSq,
    /// `dist_Γ(0, Tz̄^k)²`
    GapSqGamma,
}

/// Everything the checkers need about a problem instance and a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Setting {
    #[serde(rename = "L_F")]
    pub l_f: f64,
    #[serde(rename = "L_F_hat")]
    pub l_f_hat: f64,
    #[serde(default)]
    pub sigma_f: f64,
    /// `None` puts the checkers in assumed mode, see [`TheoremReport::assumed_rho`].
    #[serde(default)]
    pub rho: Option<f64>,
    pub gamma: f64,
    pub schedule: Schedule,
    /// `‖z⁰ − z⋆‖²`. Without it no envelope is produced.
    #[serde(default)]
    pub dist0_sq: Option<f64>,
    /// `E‖h⁻¹ − Hz⁻¹‖²` for the projected methods. Defaults to `γ²σ_F²`,
    /// which is exact for memory started at a sampled exploration step.
    #[serde(default)]
    pub memory_err_sq: Option<f64>,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<u64>,
    /// Overrides for the free parameters of the general statements.
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
}

fn default_horizons() -> Vec<u64> {
    vec![1_000, 10_000]
}

impl Setting {
    pub fn new(l_f: f64, l_f_hat: f64, sigma_f: f64, rho: Option<f64>, gamma: f64, schedule: Schedule) -> Self {
        Setting {
            l_f,
            l_f_hat,
            sigma_f,
            rho,
            gamma,
            schedule,
            dist0_sq: None,
            memory_err_sq: None,
            horizons: default_horizons(),
            b: None,
            epsilon: None,
        }
    }

    /// Constants from `problem`, with `‖z⁰ − z⋆‖²` filled in when `z⋆` is known.
    pub fn from_problem(problem: &Problem, gamma: f64, schedule: Schedule, z0: &Vector) -> Self {
        let c = &problem.constants;
        let mut s = Self::new(c.l_f, c.l_f_hat, c.sigma_f, c.rho, gamma, schedule);
        s.dist0_sq = c.z_star.as_ref().map(|zs| z0.dist_sq(zs));
        s
    }

    pub fn with_horizons(mut self, horizons: Vec<u64>) -> Self {
        self.horizons = horizons;
        self
    }

    pub fn with_alpha0(mut self, alpha0: f64) -> Self {
        self.schedule = Schedule::constant(alpha0);
        self
    }

    fn rho_or_zero(&self) -> f64 {
        self.rho.unwrap_or(0.0)
    }

    fn memory_err_sq(&self) -> f64 {
        self.memory_err_sq.unwrap_or(self.gamma * self.gamma * self.sigma_f * self.sigma_f)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("L_F", self.l_f), ("L_F_hat", self.l_f_hat), ("sigma_f", self.sigma_f)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, "must be finite and non-negative"));
            }
        }
        self.schedule.validate()
    }

    /// `γ ∈ (⌊−2ρ⌋₊, 1/L_F)`. With `ρ` unknown only the upper end is checked.
    fn check_gamma(&self) -> Result<()> {
        self.validate()?;
        let lower = (-2.0 * self.rho_or_zero()).max(0.0);
        let upper = 1.0 / self.l_f;
        if !(self.gamma > lower && self.gamma < upper) {
            return Err(Error::InadmissibleStepsize {
                gamma: self.gamma,
                lower,
                upper,
            });
        }
        Ok(())
    }
}

/// `(fixed + noise·Σα_j²) / (denom·Σα_j)` with sums over `j = 0..=K`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Envelope {
    fixed: f64,
    noise: f64,
    denom: f64,
    schedule: Schedule,
}

impl Envelope {
    fn at(&self, k_max: u64) -> f64 {
        let (s, s2) = self.schedule.sums(k_max);
        (self.fixed + self.noise * s2) / (self.denom * s)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremReport {
    pub theorem: String,
    pub metric: Metric,
    /// Each entry must be `≤ 0`.
    pub residuals: BTreeMap<String, f64>,
    pub satisfied: bool,
    /// `ρ` was unknown; residuals are evaluated at `ρ = 0` and `rho_min` in
    /// `constants` is the least `ρ` for which they all hold.
    pub assumed_rho: bool,
    /// Envelope value per horizon `K`, present only when satisfied and
    /// `‖z⁰ − z⋆‖²` is known.
    pub rate_envelope: BTreeMap<u64, f64>,
    pub constants: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip)]
    envelope: Option<Envelope>,
}

impl TheoremReport {
    fn new(theorem: &str, metric: Metric, setting: &Setting) -> Self {
        TheoremReport {
            theorem: theorem.to_string(),
            metric,
            residuals: BTreeMap::new(),
            satisfied: false,
            assumed_rho: setting.rho.is_none(),
            rate_envelope: BTreeMap::new(),
            constants: BTreeMap::new(),
            notes: Vec::new(),
            envelope: None,
        }
    }

    fn residual(&mut self, name: &str, value: f64) {
        self.residuals.insert(name.to_string(), value);
    }

    fn constant(&mut self, name: &str, value: f64) {
        self.constants.insert(name.to_string(), value);
    }

    pub fn constant_value(&self, name: &str) -> Option<f64> {
        self.constants.get(name).copied()
    }

    pub fn residual_value(&self, name: &str) -> Option<f64> {
        self.residuals.get(name).copied()
    }

    /// Settles `satisfied` and, if it holds, the envelope. `rho_slope` is the
    /// coefficient of `ρ` in the residual named `rho_residual`, used to
    /// report `rho_min`.
    fn finish(mut self, setting: &Setting, rho_residual: &str, rho_slope: f64, env: Option<(f64, f64, f64)>) -> Self {
        self.satisfied = self.residuals.values().all(|r| *r <= 0.0);
        let at_rho = self.residuals[rho_residual];
        self.constant("rho_min", setting.rho_or_zero() - at_rho / rho_slope);
        if self.assumed_rho {
            self.notes
                .push("rho unknown: residuals evaluated at rho = 0; the conditions hold for rho >= rho_min".into());
        }
        if self.satisfied {
            if let Some((fixed, noise, denom)) = env {
                let e = Envelope {
                    fixed,
                    noise,
                    denom,
                    schedule: setting.schedule,
                };
                for &k in &setting.horizons {
                    self.rate_envelope.insert(k, e.at(k));
                }
                self.envelope = Some(e);
            } else if setting.dist0_sq.is_none() {
                self.notes.push("no envelope: ||z0 - z*||^2 is unknown".into());
            }
        }
        self
    }

    /// Envelope at horizon `K`, when one is claimed.
    pub fn envelope_at(&self, k_max: u64) -> Option<f64> {
        self.envelope.map(|e| e.at(k_max))
    }
}

/// Random-iterate rate of BC-SEG+ for a diminishing schedule. The metric is
/// `E‖Fz^{k⋆}‖²`.
pub fn check_thm_bcsegplus_rate(setting: &Setting) -> Result<TheoremReport> {
    setting.check_gamma()?;
    let (g, l, lh, s) = (setting.gamma, setting.l_f, setting.l_f_hat, setting.sigma_f);
    let rho = setting.rho_or_zero();
    let a0 = setting.schedule.alpha0();
    let gl2 = g * g * l * l;
    let b = setting.b.unwrap_or(2.0 * gl2 / (1.0 - gl2));
    if !(b > 0.0) {
        return Err(Error::invalid("b", "must be positive"));
    }
    let mut r = TheoremReport::new("bc-seg+ rate", Metric::FzSq, setting);
    let cond = 2.0 * g * lh * a0.sqrt() + (1.0 + (b + 1.0) * gl2 * g * g * lh * lh) * a0 - (1.0 + 2.0 * rho / g);
    r.residual("stepsize", cond);
    let mu = g * g * (1.0 - gl2 * (1.0 + 1.0 / b));
    r.residual("mu", -mu);
    let eta = 0.5 * (b + 1.0) * gl2 + 1.0 / (g * lh * a0.sqrt());
    let c = 1.0 + 2.0 * eta * ((g * g * lh * lh + 1.0) + 2.0 * a0);
    for (k, v) in [("alpha0", a0), ("b", b), ("mu", mu), ("eta", eta), ("C", c)] {
        r.constant(k, v);
    }
    let env = setting
        .dist0_sq
        .map(|d| ((1.0 + eta * gl2) * d, c * s * s * g * g, mu));
    Ok(r.finish(setting, "stepsize", -2.0 / g, env))
}

/// Almost sure convergence of BC-SEG+ for `α_k = 1/(k + r)`. The condition is
/// checked at `k = 0`, where its left side is largest. `r_min` is the least
/// integer `r` for which it holds, or absent if none up to `10⁹` does.
pub fn check_thm_bcsegplus_as(setting: &Setting, r: u64) -> Result<TheoremReport> {
    setting.check_gamma()?;
    if r == 0 {
        return Err(Error::invalid("r", "must be a positive integer"));
    }
    let (g, l, lh) = (setting.gamma, setting.l_f, setting.l_f_hat);
    let rho = setting.rho_or_zero();
    let gl2 = g * g * l * l;
    let q = (1.0 + gl2) / (1.0 - gl2) * g.powi(4) * l * l * lh * lh;
    let lhs_at = |k: f64, r: f64| {
        let (a, a1) = (1.0 / (k + r), 1.0 / (k + 1.0 + r));
        (g * lh + 1.0) * a + 2.0 * (q * a1 + g * lh) * (a1 + 1.0) * a1
    };
    let rhs = 1.0 + 2.0 * rho / g;
    let mut rep = TheoremReport::new("bc-seg+ almost sure", Metric::FzSq, setting);
    rep.residual("stepsize", lhs_at(0.0, r as f64) - rhs);
    rep.constant("r", r as f64);
    rep.constant("rhs", rhs);
    let holds = |r: u64| lhs_at(0.0, r as f64) <= rhs;
    const R_MAX: u64 = 1_000_000_000;
    if holds(R_MAX) {
        let (mut lo, mut hi) = (0u64, R_MAX);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if holds(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        rep.constant("r_min", hi as f64);
    } else {
        rep.notes.push("no r <= 1e9 satisfies the condition".into());
    }
    Ok(rep.finish(setting, "stepsize", -2.0 / g, None))
}

/// Random-iterate rate of BC-PSEG+. The metric is `E[dist(0, Tz̄^{k⋆})²]`.
pub fn check_thm_const(setting: &Setting) -> Result<TheoremReport> {
    setting.check_gamma()?;
    let (g, l, lh, s) = (setting.gamma, setting.l_f, setting.l_f_hat, setting.sigma_f);
    let rho = setting.rho_or_zero();
    let a0 = setting.schedule.alpha0();
    let sq = a0.sqrt();
    let contraction = (1.0 - g * l).powi(2);
    let b = setting.b.unwrap_or(sq);
    let eps = setting.epsilon.unwrap_or(1.0 / (sq * contraction));
    if !(b > 0.0) || !(eps > 0.0) {
        return Err(Error::invalid("b, epsilon", "must be positive"));
    }
    let slack = 1.0 - 1.0 / (eps * contraction);
    let eta = eps + slack / b;
    let mu = slack / (1.0 + b) - a0 * (1.0 + 2.0 * g * g * lh * lh * eta) + 2.0 * rho / g;
    let c = 1.0 + 2.0 * eta * (1.0 + g * g * lh * lh) + 2.0 * a0 * eta;
    let mut r = TheoremReport::new("bc-pseg+ rate", Metric::GapSq, setting);
    r.residual("mu", -mu);
    r.residual("epsilon", -slack);
    for (k, v) in [("alpha0", a0), ("b", b), ("epsilon", eps), ("mu", mu), ("eta", eta), ("C", c)] {
        r.constant(k, v);
    }
    let env = setting
        .dist0_sq
        .map(|d| (d + eta * setting.memory_err_sq(), c * g * g * s * s, g * g * mu));
    Ok(r.finish(setting, "mu", -2.0 / g, env))
}

/// Random-iterate rate of NP-PDEG. The metric is `E[dist_Γ(0, Tz̄^{k⋆})²]`.
///
/// `setting.dist0_sq` and `setting.memory_err_sq` are Euclidean; they are
/// converted to the `Γ⁻¹` norm through the smallest eigenvalue of `Γ`, and
/// `σ_F²` to the `Γ` norm through the largest. All three conversions are
/// exact when `Γ` is a multiple of the identity.
pub fn check_thm_pdhg(cfg: &PdhgConfig, setting: &Setting) -> Result<TheoremReport> {
    cfg.validate()?;
    setting.validate()?;
    let rho = setting.rho_or_zero();
    let a0 = setting.schedule.alpha0();
    let sq = a0.sqrt();
    let gamma = cfg.gamma();
    let (gmin, gmax) = (gamma.smallest_eigenvalue(), gamma.largest_eigenvalue());
    let d = cfg.scalings();
    let t = &cfg.lipschitz;
    let th = cfg.theta;
    let pn = crate::algorithms::product_norm;
    let c1 = t.hat_xz.powi(2) * pn(&gamma, &d.hat_xz)
        + 2.0 * (1.0 - th).powi(2) * t.hat_yz.powi(2) * pn(&gamma, &d.hat_yz)
        + 2.0 * th * th * t.hat_yy.powi(2) * pn(&cfg.gamma2, &d.hat_yy);
    let c2 = 2.0 * th * th * t.hat_yx.powi(2) * pn(&cfg.gamma1, &d.hat_yx);
    let c3 = t.hat_xz.powi(2) * pn(&gamma, &d.hat_xz);
    let l_m = cfg.l_m();
    let big_theta = (1.0 - th).powi(2) + 2.0 * th * th;
    let base = 1.0 / (sq * (1.0 - l_m).powi(2)) + (1.0 - sq) / sq;
    let second = 1.0 - 4.0 * c2 * a0;
    let eta = (1.0 + 4.0 * c2 * a0 * a0) * base / second;
    let mu = (1.0 - sq) / (1.0 + sq) + 2.0 * rho / gmin - a0 - 2.0 * a0 * (c1 + 2.0 * c2 * (1.0 + c3)) * eta;
    let c = 2.0 * (eta + a0 * base) * (1.0 + 2.0 * c2) + 1.0 + 2.0 * (c1 + 2.0 * c2 * (big_theta + c3)) * eta;

    let mut r = TheoremReport::new("np-pdeg rate", Metric::GapSqGamma, setting);
    let [s1, s2] = cfg.stepsize_condition_residuals();
    r.residual("stepsize_x", s1);
    r.residual("stepsize_y", s2);
    r.residual("mu", if mu.is_nan() { f64::INFINITY } else { -mu });
    r.residual("c2", -second);
    for (k, v) in [
        ("alpha0", a0),
        ("c1", c1),
        ("c2", c2),
        ("c3", c3),
        ("L_M", l_m),
        ("gamma_bar", gmin),
        ("Theta", big_theta),
        ("mu", mu),
        ("eta", eta),
        ("C", c),
    ] {
        r.constant(k, v);
    }
    let sigma_gamma_sq = gmax * setting.sigma_f * setting.sigma_f;
    let env = setting
        .dist0_sq
        .map(|dd| (dd / gmin + eta * setting.memory_err_sq() / gmin, c * sigma_gamma_sq, mu));
    Ok(r.finish(setting, "mu", -2.0 / gmin, env))
}

/// SEG+ on an affine operator without constraints. The metric is
/// `Σ α_k E‖Fz^k‖² / Σ α_j`.
pub fn check_seg_plus_affine(setting: &Setting) -> Result<TheoremReport> {
    setting.validate()?;
    let (g, l, s) = (setting.gamma, setting.l_f, setting.sigma_f);
    if !(g > 0.0 && g * l < 1.0) {
        return Err(Error::InadmissibleStepsize {
            gamma: g,
            lower: 0.0,
            upper: 1.0 / l,
        });
    }
    let rho = setting.rho_or_zero();
    let a0 = setting.schedule.alpha0();
    let mut r = TheoremReport::new("seg+ affine rate", Metric::FzSq, setting);
    // Schedules are nonincreasing, so the largest γ(α_k − 1)/2 is at k = 0.
    r.residual("stepsize", g * (a0 - 1.0) / 2.0 - rho);
    r.constant("alpha0", a0);
    let gl2 = g * g * l * l;
    let env = setting
        .dist0_sq
        .map(|d| (d, g * g * (gl2 + 1.0) * s * s, g * g * (1.0 - gl2)));
    Ok(r.finish(setting, "stepsize", -1.0, env))
}

/// Normalized distance between a report's `ρ`-carrying condition and the
/// deterministic threshold `1 + 2ρ/γ > 0`: the value returned is
/// `(−residual) − (1 + 2ρ/γ)` after rescaling the residual to the
/// `1 + 2ρ/γ` scale. It tends to zero as `α₀ → 0` for every checker.
pub fn limit_gap(report: &TheoremReport, setting: &Setting) -> f64 {
    let g = setting.gamma;
    let threshold = 1.0 + 2.0 * setting.rho_or_zero() / g;
    let margin = match report.theorem.as_str() {
        "bc-seg+ rate" | "bc-seg+ almost sure" => -report.residuals["stepsize"],
        "bc-pseg+ rate" => -report.residuals["mu"],
        "np-pdeg rate" => -report.residuals["mu"],
        "seg+ affine rate" => -report.residuals["stepsize"] * 2.0 / g,
        other => unreachable!("unknown theorem {other}"),
    };
    margin - threshold
}

/// Outcome of comparing runs against a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopeComparison {
    pub theorem: String,
    /// False when the report does not claim an envelope. Nothing is
    /// asserted then.
    pub claimed: bool,
    pub k_max: u64,
    pub n_runs: usize,
    pub empirical: f64,
    pub envelope: Option<f64>,
    pub holds: Option<bool>,
}

/// Weighted average `Σ_k (α_k / Σ_j α_j) · mean_seeds m_k` of the report's
/// metric over the runs, against the envelope at the runs' horizon.
pub fn empirical_rate_vs_envelope(trajectories: &[Trajectory], report: &TheoremReport) -> Result<EnvelopeComparison> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::invalid("trajectories", "must not be empty"))?;
    let k_max = first.weighted.k_max;
    if trajectories.iter().any(|t| t.weighted.k_max != k_max || t.diverged_at.is_some()) {
        return Err(Error::invalid(
            "trajectories",
            "must share the horizon and run to completion",
        ));
    }
    let empirical = trajectories
        .iter()
        .map(|t| match report.metric {
            Metric::FzSq => t.weighted.mean_fz_sq(),
            Metric::GapSq => t.weighted.mean_gap_sq(),
            Metric::GapSqGamma => t.weighted.mean_gap_sq_gamma(),
        })
        .sum::<f64>()
        / trajectories.len() as f64;
    let claimed = report.satisfied && !report.assumed_rho && report.envelope.is_some();
    let envelope = if claimed { report.envelope_at(k_max) } else { None };
    Ok(EnvelopeComparison {
        theorem: report.theorem.clone(),
        claimed,
        k_max,
        n_runs: trajectories.len(),
        empirical,
        envelope,
        holds: envelope.map(|e| empirical <= e),
    })
}

fn weak_mvi_form(m: &DenseMatrix, rho: f64) -> DenseMatrix {
    m.symmetric_part().add_scaled(-rho, &m.transpose().matmul(m))
}

/// `⟨Mz, z⟩ ≥ ρ‖Mz‖²` for all `z`, i.e. `½(M + Mᵀ) − ρMᵀM ⪰ 0`.
pub fn certify_weak_mvi_linear(m: &DenseMatrix, rho: f64) -> bool {
    weak_mvi_form(m, rho)
        .min_symmetric_eigenvalue()
        .map(|l| l >= -CERTIFY_TOL)
        .unwrap_or(false)
}

/// `⟨Mz, z⟩ ≤ ρ̄‖Mz‖²` for all `z`, i.e. `½(M + Mᵀ) − ρ̄MᵀM ⪯ 0`.
pub fn certify_negative_weak_mvi_linear(m: &DenseMatrix, rho_bar: f64) -> bool {
    weak_mvi_form(m, rho_bar)
        .max_symmetric_eigenvalue()
        .map(|l| l <= CERTIFY_TOL)
        .unwrap_or(false)
}

/// Largest `ρ` certified by [`certify_weak_mvi_linear`], by bisection to
/// `1e−12`. `None` when every `ρ` is certified (`M = 0`) or none is.
pub fn weak_mvi_rho_max(m: &DenseMatrix) -> Option<f64> {
    if m.spectral_norm() == 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (-1.0, 1.0);
    while !certify_weak_mvi_linear(m, lo) {
        lo *= 2.0;
        if lo < -1e12 {
            return None;
        }
    }
    while certify_weak_mvi_linear(m, hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return None;
        }
    }
    while hi - lo > 1e-12 * (1.0 + lo.abs()) {
        let mid = 0.5 * (lo + hi);
        if certify_weak_mvi_linear(m, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// The `ρ` usable by the methods: certified and above `−1/(2L)`, the least
/// value `−γ/2` can take for `γ < 1/L`. Returns `(−1/(2L), ρ_max)`, or `None`
/// if that interval is empty.
pub fn weak_mvi_range(m: &DenseMatrix) -> Option<(f64, f64)> {
    let rho_max = weak_mvi_rho_max(m)?;
    let lower = -1.0 / (2.0 * m.spectral_norm());
    (rho_max > lower).then_some((lower, rho_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{run, AlgorithmId, Method};
    use crate::problems::quadratic_game;
    use proptest::prelude::{prop_assert, proptest};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setting(rho: f64, gamma: f64, alpha0: f64) -> Setting {
        Setting::new(1.0, 1.0, 0.0, Some(rho), gamma, Schedule::constant(alpha0))
    }

    #[test]
    fn bcsegplus_rate_examples() {
        let r = check_thm_bcsegplus_rate(&setting(-0.1, 0.5, 0.16)).unwrap();
        // 0.4 + (1 + (5/3)(1/4)(1/4))·0.16 − 0.6
        let expected = 0.4 + (1.0 + 5.0 / 48.0) * 0.16 - 0.6;
        assert!((r.residuals["stepsize"] - expected).abs() < 1e-15);
        assert!((expected + 0.02333).abs() < 1e-4);
        assert!(r.satisfied);

        let r = check_thm_bcsegplus_rate(&setting(-0.1, 0.5, 0.25)).unwrap();
        assert!((r.residuals["stepsize"] - 0.176).abs() < 1e-3);
        assert!(!r.satisfied);
        assert!(r.rate_envelope.is_empty());
    }

    #[test]
    fn bcsegplus_rate_default_b_matches_main_constants() {
        let (g, l, lh, a0): (f64, f64, f64, f64) = (0.4, 1.3, 1.7, 0.01);
        let mut s = Setting::new(l, lh, 0.2, Some(-0.05), g, Schedule::harmonic(a0, 100.0));
        s.dist0_sq = Some(2.0);
        let r = check_thm_bcsegplus_rate(&s).unwrap();
        let gl2 = g * g * l * l;
        let frac = (1.0 + gl2) / (1.0 - gl2);
        let eta = 0.5 * frac * gl2 + 1.0 / (g * lh * a0.sqrt());
        assert!((r.constants["eta"] - eta).abs() < 1e-12 * eta);
        assert!((r.constants["mu"] - g * g * (1.0 - gl2) / 2.0).abs() < 1e-15);
        assert!((r.constants["C"] - (1.0 + 2.0 * eta * (g * g * lh * lh + 1.0 + 2.0 * a0))).abs() < 1e-10);
    }

    #[test]
    fn inadmissible_gamma_is_an_error() {
        assert!(matches!(
            check_thm_bcsegplus_rate(&setting(0.0, 1.0, 0.1)),
            Err(Error::InadmissibleStepsize { .. })
        ));
        assert!(matches!(
            check_thm_const(&setting(-0.3, 0.5, 0.1)),
            Err(Error::InadmissibleStepsize { .. })
        ));
        assert!(check_thm_bcsegplus_as(&setting(0.0, 1.2, 0.1), 5).is_err());
    }

    #[test]
    fn as_check_threshold() {
        let r = check_thm_bcsegplus_as(&setting(0.0, 0.5, 0.1), 1000).unwrap();
        assert!(r.satisfied);
        assert!((r.constants["rhs"] - 1.0).abs() < 1e-15);

        let s = setting(-0.2, 0.5, 0.1);
        let r = check_thm_bcsegplus_as(&s, 1).unwrap();
        let r_min = r.constants["r_min"] as u64;
        // Independent scan of the left side at k = 0.
        let gl2: f64 = 0.25;
        let q = (1.0 + gl2) / (1.0 - gl2) * 0.5f64.powi(4);
        let lhs = |r: u64| {
            let (a, b) = (1.0 / r as f64, 1.0 / (r + 1) as f64);
            1.5 * a + 2.0 * (q * b + 0.5) * (b + 1.0) * b
        };
        let scan = (1..100_000u64).find(|&r| lhs(r) <= 0.2).unwrap();
        assert_eq!(r_min, scan);
        assert!(check_thm_bcsegplus_as(&s, scan).unwrap().satisfied);
        assert!(!check_thm_bcsegplus_as(&s, scan - 1).unwrap().satisfied);
    }

    #[test]
    fn as_condition_worst_case_is_first_iterate() {
        let g: f64 = 0.5;
        let q = (1.0 + 0.25) / 0.75 * g.powi(4);
        let lhs = |k: f64| {
            let (a, b) = (1.0 / (k + 3.0), 1.0 / (k + 4.0));
            1.5 * a + 2.0 * (q * b + 0.5) * (b + 1.0) * b
        };
        let mut last = lhs(0.0);
        for k in 1..1_000_000 {
            let v = lhs(k as f64);
            assert!(v <= last);
            last = v;
        }
    }

    #[test]
    fn const_examples() {
        let r = check_thm_const(&setting(0.0, 0.5, 0.01)).unwrap();
        let eta = 1.0 / (0.1 * 0.25) + 0.9 / 0.1;
        let mu = 0.9 / 1.1 - 0.01 * (1.0 + 2.0 * 0.25 * eta);
        assert!((r.constants["eta"] - eta).abs() < 1e-12);
        assert!((r.constants["mu"] - mu).abs() < 1e-12);
        assert!(mu > 0.0 && r.satisfied);

        // ρ = −γ/2 is the excluded endpoint of the admissible interval, so
        // approach it from above.
        for i in 1..=200 {
            let a0 = i as f64 / 201.0;
            let r = check_thm_const(&setting(-0.2 + 1e-12, 0.4, a0)).unwrap();
            assert!(r.constants["mu"] <= 0.0, "alpha0 {a0}");
        }
    }

    #[test]
    fn pdhg_scalar_toy() {
        let t = crate::algorithms::LipschitzTable {
            hat_xz: 1.0,
            hat_yz: 1.0,
            hat_yx: 1.0,
            hat_yy: 1.0,
            ..Default::default()
        };
        let cfg = PdhgConfig::scalar(0.5, 0.5, 1, 1, 1.0, t).unwrap();
        let r = check_thm_pdhg(&cfg, &setting(0.0, 0.5, 0.2)).unwrap();
        assert!((r.constants["c2"] - 1.0).abs() < 1e-15);
        assert!(r.residuals["c2"] < 0.0);
        assert_eq!(r.constants["Theta"], 2.0);
        let r = check_thm_pdhg(&cfg, &setting(0.0, 0.5, 0.3)).unwrap();
        assert!(r.residuals["c2"] > 0.0 && !r.satisfied);
    }

    #[test]
    fn pdhg_collapse_matches_const() {
        for (g, l, lh, rho, a0) in [(0.5, 1.0, 1.0, -0.1, 1e-3), (0.3, 2.0, 2.5, 0.0, 0.01), (0.1, 3.0, 3.0, -0.02, 1e-4)] {
            let mut s = Setting::new(l, lh, 0.3, Some(rho), g, Schedule::harmonic(a0, 100.0));
            s.dist0_sq = Some(2.0);
            let cfg = PdhgConfig::collapsed(g, 1, 1, l, lh).unwrap();
            let p = check_thm_pdhg(&cfg, &s).unwrap();
            let c = check_thm_const(&s).unwrap();
            assert_eq!(p.constants["c2"], 0.0);
            assert_eq!(p.constants["Theta"], 1.0);
            for k in ["mu", "eta", "C"] {
                assert!((p.constants[k] - c.constants[k]).abs() <= 1e-12 * c.constants[k].abs().max(1.0), "{k}");
            }
            assert_eq!(p.satisfied, c.satisfied);
            if p.satisfied {
                for (k, v) in &c.rate_envelope {
                    assert!((p.rate_envelope[k] - g * v).abs() <= 1e-12 * v);
                }
            }
        }
    }

    #[test]
    fn seg_plus_affine_examples() {
        assert!(check_seg_plus_affine(&setting(0.0, 0.5, 1.0)).unwrap().satisfied);
        assert!(!check_seg_plus_affine(&setting(-1e-9, 0.5, 1.0)).unwrap().satisfied);
        assert!(check_seg_plus_affine(&setting(-0.1, 0.5, 0.6)).unwrap().satisfied);
        assert!(!check_seg_plus_affine(&setting(-0.1, 0.5, 0.6 + 1e-9)).unwrap().satisfied);

        let mut s = setting(0.0, 0.5, 0.5);
        s.dist0_sq = Some(1.0);
        let s = s.with_horizons(vec![100, 10_000]);
        let r = check_seg_plus_affine(&s).unwrap();
        let ratio = r.rate_envelope[&100] / r.rate_envelope[&10_000];
        assert!((ratio - 10_001.0 / 101.0).abs() < 1e-9);
    }

    #[test]
    fn assumed_mode_reports_rho_min() {
        let mut s = setting(-0.1, 0.5, 0.16);
        let known = check_thm_bcsegplus_rate(&s).unwrap();
        s.rho = None;
        let r = check_thm_bcsegplus_rate(&s).unwrap();
        assert!(r.assumed_rho && !r.notes.is_empty());
        assert!((r.constants["rho_min"] - known.constants["rho_min"]).abs() < 1e-15);
        let at_min = setting(r.constants["rho_min"], 0.5, 0.16);
        assert!(check_thm_bcsegplus_rate(&at_min).unwrap().residuals["stepsize"].abs() < 1e-14);
    }

    #[test]
    fn limit_gap_shrinks_with_alpha0() {
        for rho in [-0.2, -0.1, 0.0, 0.05] {
            let mut prev = f64::INFINITY;
            for a0 in [1e-2, 1e-4, 1e-6, 1e-8] {
                let s = setting(rho, 0.5, a0);
                let cfg = PdhgConfig::collapsed(0.5, 1, 1, 1.0, 1.0).unwrap();
                let gaps = [
                    limit_gap(&check_thm_bcsegplus_rate(&s).unwrap(), &s),
                    limit_gap(&check_thm_const(&s).unwrap(), &s),
                    limit_gap(&check_thm_pdhg(&cfg, &s).unwrap(), &s),
                    limit_gap(&check_seg_plus_affine(&s).unwrap(), &s),
                ];
                let worst = gaps.iter().map(|g| g.abs()).fold(0.0, f64::max);
                // Every gap is O(√α₀).
                assert!(worst <= 5.0 * a0.sqrt(), "rho {rho} a0 {a0} gaps {gaps:?}");
                assert!(worst < prev);
                prev = worst;
            }
        }
    }

    #[test]
    fn envelope_holds_noise_free() {
        let p = quadratic_game(1.0, -0.1).unwrap();
        let sched = Schedule::harmonic(1.0 / 18.0, 100.0);
        let z0 = Vector::from([1.0, 1.0]);
        let s = Setting::from_problem(&p, 0.5, sched, &z0).with_horizons(vec![2000]);
        let rep = check_thm_bcsegplus_rate(&s).unwrap();
        assert!(rep.satisfied);
        let m = Method::new(AlgorithmId::BcSegPlus, 0.5, sched).with_init(crate::algorithms::MemoryInit::Exploration);
        let t = run(&p, &m, z0, 2000, 0).unwrap();
        let cmp = empirical_rate_vs_envelope(&[t], &rep).unwrap();
        assert!(cmp.claimed);
        assert_eq!(cmp.holds, Some(true), "{cmp:?}");
    }

    #[test]
    fn violated_report_is_not_claimed() {
        let p = quadratic_game(1.0, -0.1).unwrap();
        let sched = Schedule::constant(0.3);
        let z0 = Vector::from([1.0, 1.0]);
        let rep = check_thm_bcsegplus_rate(&Setting::from_problem(&p, 0.5, sched, &z0)).unwrap();
        assert!(!rep.satisfied);
        let t = run(&p, &Method::new(AlgorithmId::BcSegPlus, 0.5, sched), z0, 100, 0).unwrap();
        let cmp = empirical_rate_vs_envelope(&[t], &rep).unwrap();
        assert!(!cmp.claimed && cmp.holds.is_none() && cmp.envelope.is_none());
    }

    fn game(a: f64, b: f64) -> DenseMatrix {
        DenseMatrix::from_rows(vec![vec![b, a], vec![-a, b]]).unwrap()
    }

    #[test]
    fn certifier_quadratic_game_boundary() {
        for (a, b) in [(1.0, -0.1), (0.8, 0.3), (2.0, -0.5), (1.0, 0.0)] {
            let rho = b / (a * a + b * b);
            let m = game(a, b);
            assert!(certify_weak_mvi_linear(&m, rho - 1e-6));
            assert!(!certify_weak_mvi_linear(&m, rho + 1e-6));
            assert!((weak_mvi_rho_max(&m).unwrap() - rho).abs() < 1e-9);
        }
        assert!(certify_weak_mvi_linear(&game(1.0, 0.0), 0.0));
        assert!(!certify_weak_mvi_linear(&game(1.0, 0.0), 1e-3));
    }

    #[test]
    fn range_nonempty_iff_b_above_threshold() {
        let a: f64 = 1.0;
        let crit = -a / 3f64.sqrt();
        assert!(weak_mvi_range(&game(a, crit + 1e-4)).is_some());
        assert!(weak_mvi_range(&game(a, crit - 1e-4)).is_none());
        for i in 0..200 {
            let b = -2.0 + i as f64 * 0.02;
            if (b - crit).abs() > 1e-6 {
                assert_eq!(weak_mvi_range(&game(a, b)).is_some(), b > crit, "b = {b}");
            }
        }
    }

    #[test]
    fn negative_mode_mirrors() {
        // ⟨−Mz, z⟩ ≤ ρ̄‖Mz‖² is the weak MVI of M with ρ = −ρ̄.
        let m = game(1.0, -0.2);
        let rho = -0.2 / 1.04;
        assert!(certify_negative_weak_mvi_linear(&m.scaled(-1.0), -rho + 1e-6));
        assert!(!certify_negative_weak_mvi_linear(&m.scaled(-1.0), -rho - 1e-6));
        assert!(certify_negative_weak_mvi_linear(&game(0.0, -1.0), 0.0));
        assert!(!certify_negative_weak_mvi_linear(&game(0.0, 1.0), 0.0));
    }

    #[test]
    fn certifier_matches_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let m = DenseMatrix::from_rows(
                (0..2)
                    .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .collect(),
            )
            .unwrap();
            let rho = rng.random_range(-1.0..1.0);
            let brute = (0..10_000).all(|i| {
                let t = i as f64 * std::f64::consts::TAU / 10_000.0;
                let z = [t.cos(), t.sin()];
                let mz = m.matvec(&z);
                mz[0] * z[0] + mz[1] * z[1] >= rho * (mz[0] * mz[0] + mz[1] * mz[1]) - 1e-9
            });
            let margin = weak_mvi_form(&m, rho).min_symmetric_eigenvalue().unwrap();
            if margin.abs() > 1e-6 {
                assert_eq!(certify_weak_mvi_linear(&m, rho), brute);
            }
        }
    }

    proptest! {
        #[test]
        fn satisfied_iff_residuals_nonpositive(rho in -0.24..0.3f64, a0 in 1e-6..0.99f64, g in 0.05..0.95f64) {
            let s = setting(rho, g, a0);
            let mut reports = vec![check_thm_const(&s), check_seg_plus_affine(&s), check_thm_bcsegplus_rate(&s)];
            reports.push(check_thm_pdhg(&PdhgConfig::collapsed(g, 1, 1, 1.0, 1.0).unwrap(), &s));
            for r in reports.into_iter().flatten() {
                prop_assert!(r.satisfied == r.residuals.values().all(|v| *v <= 0.0));
                prop_assert!(r.rate_envelope.is_empty() || r.satisfied);
            }
        }
    }
}
