//! Nonlinearly preconditioned primal-dual extragradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{BlockDiagMatrix, Vector};
use crate::problems::{Problem, Step};

use super::{draw, Memory, Schedule, SolverState, StepInfo, ROLE_XI, ROLE_XI_BAR, ROLE_XI_PRIME};

/// Lipschitz constants of the coupling, deterministic (`xx`, `xy`, `yx`,
/// `yy`) and in mean for the sampled gradients (`hat_*`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LipschitzTable {
    pub xx: f64,
    pub xy: f64,
    pub yx: f64,
    pub yy: f64,
    pub hat_xz: f64,
    pub hat_yz: f64,
    pub hat_yx: f64,
    pub hat_yy: f64,
}

/// Norm scalings paired with the Lipschitz table. `xx`, `yx` and `hat_yx` act
/// on `x`; `xy`, `yy` and `hat_yy` on `y`; `hat_xz` and `hat_yz` on `z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DScalings {
    pub xx: BlockDiagMatrix,
    pub xy: BlockDiagMatrix,
    pub yx: BlockDiagMatrix,
    pub yy: BlockDiagMatrix,
    pub hat_xz: BlockDiagMatrix,
    pub hat_yz: BlockDiagMatrix,
    pub hat_yx: BlockDiagMatrix,
    pub hat_yy: BlockDiagMatrix,
}

impl DScalings {
    pub fn identity(nx: usize, ny: usize) -> Self {
        let (x, y, z) = (
            BlockDiagMatrix::identity(nx),
            BlockDiagMatrix::identity(ny),
            BlockDiagMatrix::identity(nx + ny),
        );
        DScalings {
            xx: x.clone(),
            xy: y.clone(),
            yx: x.clone(),
            yy: y.clone(),
            hat_xz: z.clone(),
            hat_yz: z,
            hat_yx: x,
            hat_yy: y,
        }
    }
}

/// Stepsizes `Γ = blockdiag(Γ₁, Γ₂)`, the Gauss-Seidel weight `θ`, and the
/// constants used by the convergence conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdhgConfig {
    pub gamma1: BlockDiagMatrix,
    pub gamma2: BlockDiagMatrix,
    pub theta: f64,
    #[serde(default)]
    pub lipschitz: LipschitzTable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<DScalings>,
}

impl PdhgConfig {
    pub fn new(gamma1: BlockDiagMatrix, gamma2: BlockDiagMatrix, theta: f64, lipschitz: LipschitzTable) -> Result<Self> {
        let cfg = PdhgConfig {
            gamma1,
            gamma2,
            theta,
            lipschitz,
            d: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `Γ₁ = γ₁I`, `Γ₂ = γ₂I`.
    pub fn scalar(gamma1: f64, gamma2: f64, nx: usize, ny: usize, theta: f64, lipschitz: LipschitzTable) -> Result<Self> {
        Self::new(
            BlockDiagMatrix::scalar(gamma1, nx)?,
            BlockDiagMatrix::scalar(gamma2, ny)?,
            theta,
            lipschitz,
        )
    }

    /// `Γ = γI`, `θ = 0`, with the table chosen so that the primal-dual
    /// conditions coincide with those of the projected bias-corrected method
    /// for an operator with constants `L_F` and `L_F̂`: `L_M = γL_F` and
    /// `ĉ₁ = ĉ₃ = γ²L_F̂²`.
    pub fn collapsed(gamma: f64, nx: usize, ny: usize, l_f: f64, l_f_hat: f64) -> Result<Self> {
        let root = gamma.sqrt();
        let lipschitz = LipschitzTable {
            xx: root * l_f,
            xy: root * l_f,
            hat_xz: root * l_f_hat,
            ..LipschitzTable::default()
        };
        Self::scalar(gamma, gamma, nx, ny, 0.0, lipschitz)
    }

    pub fn with_d(mut self, d: DScalings) -> Result<Self> {
        self.d = Some(d);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta >= 0.0) || !self.theta.is_finite() {
            return Err(Error::invalid("theta", "must be finite and non-negative"));
        }
        let t = &self.lipschitz;
        for (name, v) in [
            ("lipschitz.xx", t.xx),
            ("lipschitz.xy", t.xy),
            ("lipschitz.yx", t.yx),
            ("lipschitz.yy", t.yy),
            ("lipschitz.hat_xz", t.hat_xz),
            ("lipschitz.hat_yz", t.hat_yz),
            ("lipschitz.hat_yx", t.hat_yx),
            ("lipschitz.hat_yy", t.hat_yy),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, "must be finite and non-negative"));
            }
        }
        if let Some(d) = &self.d {
            let (nx, ny) = (self.nx(), self.ny());
            for (m, n) in [
                (&d.xx, nx),
                (&d.yx, nx),
                (&d.hat_yx, nx),
                (&d.xy, ny),
                (&d.yy, ny),
                (&d.hat_yy, ny),
                (&d.hat_xz, nx + ny),
                (&d.hat_yz, nx + ny),
            ] {
                if m.dim() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        actual: m.dim(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn nx(&self) -> usize {
        self.gamma1.dim()
    }

    pub fn ny(&self) -> usize {
        self.gamma2.dim()
    }

    pub fn gamma(&self) -> BlockDiagMatrix {
        self.gamma1.stack(&self.gamma2)
    }

    pub fn scalings(&self) -> DScalings {
        self.d.clone().unwrap_or_else(|| DScalings::identity(self.nx(), self.ny()))
    }

    /// Largest eigenvalue of `L²_xx D_xx + L²_yx D_yx − Γ₁⁻¹` and of
    /// `L²_xy D_xy + L²_yy D_yy − Γ₂⁻¹`; both must be negative.
    pub fn stepsize_condition_residuals(&self) -> [f64; 2] {
        let d = self.scalings();
        let t = &self.lipschitz;
        let lhs = |a: f64, da: &BlockDiagMatrix, b: f64, db: &BlockDiagMatrix, g: &BlockDiagMatrix| {
            let m = da
                .to_dense()
                .scaled(a * a)
                .add_scaled(b * b, &db.to_dense())
                .add_scaled(-1.0, &g.inverse().to_dense());
            m.max_symmetric_eigenvalue().expect("sum of symmetric matrices is symmetric")
        };
        [
            lhs(t.xx, &d.xx, t.yx, &d.yx, &self.gamma1),
            lhs(t.xy, &d.xy, t.yy, &d.yy, &self.gamma2),
        ]
    }

    /// `L_M`
    pub fn l_m(&self) -> f64 {
        let d = self.scalings();
        let t = &self.lipschitz;
        let n = |a: &BlockDiagMatrix, b: &BlockDiagMatrix| product_norm(a, b);
        let first = t.xx * t.xx * n(&d.xx, &self.gamma1) + t.yx * t.yx * n(&d.yx, &self.gamma1);
        let second = t.xy * t.xy * n(&d.xy, &self.gamma2) + t.yy * t.yy * n(&d.yy, &self.gamma2);
        first.max(second).sqrt()
    }
}

/// Spectral norm of `A B`.
pub(crate) fn product_norm(a: &BlockDiagMatrix, b: &BlockDiagMatrix) -> f64 {
    a.to_dense().matmul(&b.to_dense()).spectral_norm()
}

fn mix(theta: f64, gauss_seidel: &Vector, jacobi: &Vector) -> Vector {
    &(gauss_seidel * theta) + &(jacobi * (1.0 - theta))
}

/// One iteration of NP-PDEG, written for `F̂ = (∇ₓφ̂, −∇ᵧφ̂)`:
///
/// ```text
/// x̂ = (x − Γ₁F̂ₓ(z, ξ)) + (1−α)(x̂₋ − (x₋ − Γ₁F̂ₓ(z₋, ξ)))
/// x̄ = prox_f(x̂)
/// ŷ = (y − Γ₂d) + (1−α)(ŷ₋ − (y₋ − Γ₂d₋)),  d = θF̂ᵧ(x̄, y, ξ′) + (1−θ)F̂ᵧ(z, ξ)
/// ȳ = prox_g(ŷ)
/// z⁺ = z − α((ẑ − z̄) + ΓF̂(z̄, ξ̄))
/// ```
///
/// `d₋` uses `x̄₋` and `z₋` with the current samples. With `θ = 0` the `ξ′`
/// evaluations are skipped.
pub fn step_np_pdeg(problem: &Problem, state: &mut SolverState, cfg: &PdhgConfig, schedule: &Schedule) -> Result<StepInfo> {
    let split = problem.minimax.as_ref().ok_or(Error::Unsupported {
        algorithm: "np-pdeg",
        what: "a minimax split with prox maps",
    })?;
    let Memory::NpPdeg {
        z_prev,
        zhat_prev,
        xbar_prev,
    } = &state.memory
    else {
        return Err(Error::MissingMemory { algorithm: "np-pdeg" });
    };
    let nx = split.nx;
    if cfg.nx() != nx || cfg.ny() != problem.dim() - nx {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            actual: cfg.nx() + cfg.ny(),
        });
    }
    let k = state.k;
    let alpha = schedule.alpha(k);
    let o = &problem.oracle;
    let z = &state.z;
    let d = draw(problem, k as i64, ROLE_XI);
    let fz = o.eval_draw(&d, z);
    let fzp = o.eval_draw(&d, z_prev);

    let (x, y) = (z.head(nx), z.tail(nx));
    let (xp, yp) = (z_prev.head(nx), z_prev.tail(nx));
    let (xhat_p, yhat_p) = (zhat_prev.head(nx), zhat_prev.tail(nx));

    let explore_x = &x - &cfg.gamma1.matvec(&fz.head(nx));
    let explore_xp = &xp - &cfg.gamma1.matvec(&fzp.head(nx));
    let xhat = &explore_x + &(&(&xhat_p - &explore_xp) * (1.0 - alpha));
    let xbar = split.prox_f.apply(&xhat, Step::Matrix(&cfg.gamma1));

    let (dy, dyp) = if cfg.theta == 0.0 {
        (fz.tail(nx), fzp.tail(nx))
    } else {
        let dp = draw(problem, k as i64, ROLE_XI_PRIME);
        let gs = o.eval_draw(&dp, &Vector::concat(&xbar, &y)).tail(nx);
        let gsp = o.eval_draw(&dp, &Vector::concat(xbar_prev, &yp)).tail(nx);
        (mix(cfg.theta, &gs, &fz.tail(nx)), mix(cfg.theta, &gsp, &fzp.tail(nx)))
    };
    let explore_y = &y - &cfg.gamma2.matvec(&dy);
    let explore_yp = &yp - &cfg.gamma2.matvec(&dyp);
    let yhat = &explore_y + &(&(&yhat_p - &explore_yp) * (1.0 - alpha));
    let ybar = split.prox_g.apply(&yhat, Step::Matrix(&cfg.gamma2));

    let zhat = Vector::concat(&xhat, &yhat);
    let zbar = Vector::concat(&xbar, &ybar);
    let fb = o.eval_draw(&draw(problem, k as i64, ROLE_XI_BAR), &zbar);
    let gfb = Vector::concat(&cfg.gamma1.matvec(&fb.head(nx)), &cfg.gamma2.matvec(&fb.tail(nx)));
    let z_next = z - &(&(&(&zhat - &zbar) + &gfb) * alpha);

    state.memory = Memory::NpPdeg {
        z_prev: z.clone(),
        zhat_prev: zhat.clone(),
        xbar_prev: xbar,
    };
    state.z = z_next;
    state.k += 1;
    Ok(StepInfo {
        zbar,
        pre: zhat,
        scale: None,
    })
}
