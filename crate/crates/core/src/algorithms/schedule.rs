use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sequence `α_k`, `k = 0, 1, …`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StepRule {
    Constant { alpha: f64 },
    /// `α₀ / (k/c + 1)`
    Harmonic { alpha0: f64, c: f64 },
    /// `α₀ / √(k/c + 1)`
    InverseSqrt { alpha0: f64, c: f64 },
    /// `1 / (k + r)`
    RobbinsMonro { r: f64 },
}

impl StepRule {
    pub fn at(&self, k: u64) -> f64 {
        let k = k as f64;
        match *self {
            StepRule::Constant { alpha } => alpha,
            StepRule::Harmonic { alpha0, c } => alpha0 / (k / c + 1.0),
            StepRule::InverseSqrt { alpha0, c } => alpha0 / (k / c + 1.0).sqrt(),
            StepRule::RobbinsMonro { r } => 1.0 / (k + r),
        }
    }

    /// Values lie in `(0, 1]` and never increase.
    pub fn validate(&self, field: &str) -> Result<()> {
        let ok = match *self {
            StepRule::Constant { alpha } => alpha > 0.0 && alpha <= 1.0,
            StepRule::Harmonic { alpha0, c } | StepRule::InverseSqrt { alpha0, c } => {
                alpha0 > 0.0 && alpha0 <= 1.0 && c > 0.0 && c.is_finite()
            }
            StepRule::RobbinsMonro { r } => r >= 1.0 && r.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(field, format!("{self:?} does not give values in (0, 1]")))
        }
    }
}

/// `α_k` together with an optional separate `β_k` for the exploration step of
/// the stochastic extragradient baselines. When `beta` is absent, `β_k = α_k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub alpha: StepRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<StepRule>,
}

impl Schedule {
    pub fn new(alpha: StepRule) -> Self {
        Schedule { alpha, beta: None }
    }

    pub fn constant(alpha: f64) -> Self {
        Self::new(StepRule::Constant { alpha })
    }

    pub fn harmonic(alpha0: f64, c: f64) -> Self {
        Self::new(StepRule::Harmonic { alpha0, c })
    }

    pub fn inverse_sqrt(alpha0: f64, c: f64) -> Self {
        Self::new(StepRule::InverseSqrt { alpha0, c })
    }

    pub fn robbins_monro(r: f64) -> Self {
        Self::new(StepRule::RobbinsMonro { r })
    }

    pub fn with_beta(mut self, beta: StepRule) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn alpha(&self, k: u64) -> f64 {
        self.alpha.at(k)
    }

    pub fn beta(&self, k: u64) -> f64 {
        self.beta.unwrap_or(self.alpha).at(k)
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha(0)
    }

    pub fn validate(&self) -> Result<()> {
        self.alpha.validate("schedule.alpha")?;
        if let Some(b) = &self.beta {
            b.validate("schedule.beta")?;
        }
        Ok(())
    }

    /// `(Σ_{j=0}^K α_j, Σ_{j=0}^K α_j²)`
    pub fn sums(&self, k_max: u64) -> (f64, f64) {
        (0..=k_max).fold((0.0, 0.0), |(s, s2), j| {
            let a = self.alpha(j);
            (s + a, s2 + a * a)
        })
    }

    /// Largest `α_k` over `k ≤ k_max`. All rules are nonincreasing, so this is
    /// `α₀`; the scan keeps the function honest for any future rule.
    pub fn max_alpha(&self, k_max: u64) -> f64 {
        (0..=k_max.min(1_000)).map(|j| self.alpha(j)).fold(0.0, f64::max)
    }
}
