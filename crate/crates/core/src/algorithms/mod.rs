//! Iteration schemes.
//!
//! Every stochastic step draws its samples from tickets whose counter is a
//! pure function of the iteration index and the sample's role, see
//! [`ticket_counter`]. Methods that consume the same roles therefore see the
//! same noise, which is what makes the reduction identities between methods
//! hold bit for bit.

mod pdhg;
mod run;
mod schedule;
mod steps;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Vector;
use crate::oracles::Draw;
use crate::problems::Problem;

pub(crate) use pdhg::product_norm;
pub use pdhg::{step_np_pdeg, DScalings, LipschitzTable, PdhgConfig};
pub use run::{
    geometric_indices, run, run_with, sample_k_star, Record, RecordPlan, RunOptions, Status, Trajectory,
    WeightedSums, DIVERGENCE_NORM,
};
pub use schedule::{Schedule, StepRule};
pub use steps::{
    step_bc_pseg_plus, step_bc_seg_plus, step_ceg_plus, step_eg_plus, step_projected_baseline, step_seg,
    step_seg_plus, ProjectedMode,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgorithmId {
    EgPlus,
    Seg,
    SegPlus,
    SfEgPlus,
    Pseg,
    P1SegPlus,
    P2SegPlus,
    SfPegPlus,
    CegPlus,
    BcSegPlus,
    BcPsegPlus,
    NpPdeg,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 12] = [
        AlgorithmId::EgPlus,
        AlgorithmId::Seg,
        AlgorithmId::SegPlus,
        AlgorithmId::SfEgPlus,
        AlgorithmId::Pseg,
        AlgorithmId::P1SegPlus,
        AlgorithmId::P2SegPlus,
        AlgorithmId::SfPegPlus,
        AlgorithmId::CegPlus,
        AlgorithmId::BcSegPlus,
        AlgorithmId::BcPsegPlus,
        AlgorithmId::NpPdeg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmId::EgPlus => "eg+",
            AlgorithmId::Seg => "seg",
            AlgorithmId::SegPlus => "seg+",
            AlgorithmId::SfEgPlus => "sf-eg+",
            AlgorithmId::Pseg => "pseg",
            AlgorithmId::P1SegPlus => "p1seg+",
            AlgorithmId::P2SegPlus => "p2seg+",
            AlgorithmId::SfPegPlus => "sf-peg+",
            AlgorithmId::CegPlus => "ceg+",
            AlgorithmId::BcSegPlus => "bc-seg+",
            AlgorithmId::BcPsegPlus => "bc-pseg+",
            AlgorithmId::NpPdeg => "np-pdeg",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            AlgorithmId::EgPlus => "deterministic extragradient+ (unconstrained)",
            AlgorithmId::Seg => "stochastic extragradient with diminishing beta_k, alpha_k (unconstrained)",
            AlgorithmId::SegPlus => "stochastic extragradient+ with constant exploration step (unconstrained)",
            AlgorithmId::SfEgPlus => "stochastic extragradient+ with fixed alpha (unconstrained)",
            AlgorithmId::Pseg => "projected stochastic extragradient (constrained)",
            AlgorithmId::P1SegPlus => "SEG+ with a single resolvent (constrained)",
            AlgorithmId::P2SegPlus => "SEG+ with two resolvents (constrained)",
            AlgorithmId::SfPegPlus => "projected stochastic extragradient+ with fixed alpha (constrained)",
            AlgorithmId::CegPlus => "deterministic constrained extragradient+ (constrained)",
            AlgorithmId::BcSegPlus => "bias-corrected stochastic extragradient+ (unconstrained)",
            AlgorithmId::BcPsegPlus => "bias-corrected projected stochastic extragradient+ (constrained)",
            AlgorithmId::NpPdeg => "nonlinearly preconditioned primal-dual extragradient (minimax)",
        }
    }

    /// Methods without a resolvent step.
    pub fn unconstrained_only(self) -> bool {
        matches!(
            self,
            AlgorithmId::EgPlus | AlgorithmId::Seg | AlgorithmId::SegPlus | AlgorithmId::SfEgPlus | AlgorithmId::BcSegPlus
        )
    }

    /// Methods built around the resolvent of `A`. On an unconstrained problem
    /// the resolvent is the identity and they reduce to their plain versions.
    pub fn uses_resolvent(self) -> bool {
        !self.unconstrained_only()
    }

    pub fn needs_minimax(self) -> bool {
        self == AlgorithmId::NpPdeg
    }

    /// Stochastic feedback methods, run with a fixed `α`.
    pub fn fixed_alpha(self) -> bool {
        matches!(self, AlgorithmId::SfEgPlus | AlgorithmId::SfPegPlus)
    }

    /// Methods that query the exact operator instead of the oracle.
    pub fn deterministic(self) -> bool {
        matches!(self, AlgorithmId::EgPlus | AlgorithmId::CegPlus)
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        AlgorithmId::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "algorithm",
                name: s.to_string(),
            })
    }
}

impl Serialize for AlgorithmId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for AlgorithmId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Sample roles within one iteration.
pub const ROLE_XI: u64 = 0;
pub const ROLE_XI_BAR: u64 = 1;
pub const ROLE_XI_PRIME: u64 = 2;

/// Counter of the ticket for iteration `k ≥ −1` and a role. `k = −1` is
/// reserved for memory initialization.
pub fn ticket_counter(k: i64, role: u64) -> u64 {
    debug_assert!(k >= -1 && role < 4);
    4 * (k + 1) as u64 + role
}

pub(crate) fn draw(problem: &Problem, k: i64, role: u64) -> Draw {
    let oracle = &problem.oracle;
    oracle.realize(&oracle.draw_sample(ticket_counter(k, role)))
}

/// How the bias-correction memory is seeded before the first step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MemoryInit {
    /// Memory points equal `z⁰`: `z̄⁻¹ = z⁰` (BC-SEG+), `h⁻¹ = z⁰` (BC-PSEG+),
    /// `ẑ⁻¹ = z⁰` (NP-PDEG).
    Origin,
    /// Memory equals a stochastic exploration point from `z⁰`, e.g.
    /// `h⁻¹ = z⁰ − γF̂(z⁰, ξ₋₁)`, so that without noise the correction term
    /// vanishes from the first step on.
    #[default]
    Exploration,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Memory {
    None,
    BcSeg { z_prev: Vector, zbar_prev: Vector },
    BcPseg { z_prev: Vector, h_prev: Vector },
    NpPdeg { z_prev: Vector, zhat_prev: Vector, xbar_prev: Vector },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub z: Vector,
    /// Index of the next step.
    pub k: u64,
    pub memory: Memory,
}

impl SolverState {
    /// A state without memory, suitable for the memoryless methods.
    pub fn new(z0: Vector) -> Self {
        SolverState {
            z: z0,
            k: 0,
            memory: Memory::None,
        }
    }

    /// BC-SEG+ state with `z⁻¹ = z⁰` and `z̄⁻¹` per `init`.
    pub fn bc_seg_plus(problem: &Problem, z0: Vector, gamma: f64, init: MemoryInit) -> Self {
        let zbar_prev = match init {
            MemoryInit::Origin => z0.clone(),
            MemoryInit::Exploration => explore_from(problem, &z0, gamma),
        };
        SolverState {
            memory: Memory::BcSeg {
                z_prev: z0.clone(),
                zbar_prev,
            },
            ..SolverState::new(z0)
        }
    }

    /// BC-PSEG+ state with `z⁻¹ = z⁰` and `h⁻¹` per `init`.
    pub fn bc_pseg_plus(problem: &Problem, z0: Vector, gamma: f64, init: MemoryInit) -> Self {
        let h_prev = match init {
            MemoryInit::Origin => z0.clone(),
            MemoryInit::Exploration => explore_from(problem, &z0, gamma),
        };
        SolverState {
            memory: Memory::BcPseg {
                z_prev: z0.clone(),
                h_prev,
            },
            ..SolverState::new(z0)
        }
    }

    /// NP-PDEG state with `z⁻¹ = z⁰`, `x̄⁻¹ = x⁰` and `ẑ⁻¹` per `init`.
    pub fn np_pdeg(problem: &Problem, z0: Vector, cfg: &PdhgConfig, init: MemoryInit) -> Result<Self> {
        let split = problem.minimax.as_ref().ok_or(Error::Unsupported {
            algorithm: "np-pdeg",
            what: "a minimax split with prox maps",
        })?;
        let zhat_prev = match init {
            MemoryInit::Origin => z0.clone(),
            MemoryInit::Exploration => {
                let f = problem.oracle.eval_draw(&draw(problem, -1, ROLE_XI), &z0);
                &z0 - &cfg.gamma().matvec(&f)
            }
        };
        Ok(SolverState {
            memory: Memory::NpPdeg {
                z_prev: z0.clone(),
                zhat_prev,
                xbar_prev: z0.head(split.nx),
            },
            ..SolverState::new(z0)
        })
    }
}

fn explore_from(problem: &Problem, z0: &Vector, gamma: f64) -> Vector {
    let f = problem.oracle.eval_draw(&draw(problem, -1, ROLE_XI), z0);
    z0 - &(&f * gamma)
}

/// What a step explored: `z̄ = J(pre)` resolved with step `scale`, or with the
/// stepsize matrix of the method when `scale` is `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepInfo {
    pub zbar: Vector,
    pub pre: Vector,
    pub scale: Option<f64>,
}

/// A fully specified method: algorithm, stepsizes and memory seeding.
#[derive(Clone, Debug)]
pub struct Method {
    pub id: AlgorithmId,
    pub gamma: f64,
    pub schedule: Schedule,
    pub pdhg: Option<PdhgConfig>,
    pub init: MemoryInit,
}

impl Method {
    pub fn new(id: AlgorithmId, gamma: f64, schedule: Schedule) -> Self {
        Method {
            id,
            gamma,
            schedule,
            pdhg: None,
            init: default_init(id),
        }
    }

    pub fn with_pdhg(mut self, cfg: PdhgConfig) -> Self {
        self.pdhg = Some(cfg);
        self
    }

    pub fn with_init(mut self, init: MemoryInit) -> Self {
        self.init = init;
        self
    }

    /// PDHG configuration in use: the explicit one, or `Γ = γI` with `θ = 0`.
    pub fn pdhg_config(&self, problem: &Problem) -> Result<PdhgConfig> {
        if let Some(cfg) = &self.pdhg {
            return Ok(cfg.clone());
        }
        let split = problem.minimax.as_ref().ok_or(Error::Unsupported {
            algorithm: "np-pdeg",
            what: "a minimax split with prox maps",
        })?;
        PdhgConfig::collapsed(
            self.gamma,
            split.nx,
            problem.dim() - split.nx,
            problem.constants.l_f,
            problem.constants.l_f_hat,
        )
    }

    pub fn check_applicable(&self, problem: &Problem) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::invalid("gamma", "must be positive and finite"));
        }
        self.schedule.validate()?;
        if self.id.unconstrained_only() && problem.is_constrained() {
            return Err(Error::Unsupported {
                algorithm: self.id.as_str(),
                what: "an unconstrained problem",
            });
        }
        if self.id.needs_minimax() && problem.minimax.is_none() {
            return Err(Error::Unsupported {
                algorithm: self.id.as_str(),
                what: "a minimax split with prox maps",
            });
        }
        Ok(())
    }

    pub fn init_state(&self, problem: &Problem, z0: Vector) -> Result<SolverState> {
        z0.check_dim(problem.dim())?;
        self.check_applicable(problem)?;
        Ok(match self.id {
            AlgorithmId::BcSegPlus => SolverState::bc_seg_plus(problem, z0, self.gamma, self.init),
            AlgorithmId::BcPsegPlus => SolverState::bc_pseg_plus(problem, z0, self.gamma, self.init),
            AlgorithmId::NpPdeg => SolverState::np_pdeg(problem, z0, &self.pdhg_config(problem)?, self.init)?,
            _ => SolverState::new(z0),
        })
    }

    /// One iteration. `pdhg` must be the resolved configuration for NP-PDEG.
    pub(crate) fn step(&self, problem: &Problem, state: &mut SolverState, pdhg: Option<&PdhgConfig>) -> Result<StepInfo> {
        let (g, s) = (self.gamma, &self.schedule);
        match self.id {
            AlgorithmId::EgPlus => step_eg_plus(problem, state, g, s.alpha(state.k)),
            AlgorithmId::Seg => step_seg(problem, state, g, s),
            AlgorithmId::SegPlus | AlgorithmId::SfEgPlus => step_seg_plus(problem, state, g, s),
            AlgorithmId::Pseg => step_projected_baseline(ProjectedMode::Pseg, problem, state, g, s),
            AlgorithmId::P1SegPlus => step_projected_baseline(ProjectedMode::P1SegPlus, problem, state, g, s),
            AlgorithmId::P2SegPlus => step_projected_baseline(ProjectedMode::P2SegPlus, problem, state, g, s),
            AlgorithmId::SfPegPlus => step_projected_baseline(ProjectedMode::SfPegPlus, problem, state, g, s),
            AlgorithmId::CegPlus => step_ceg_plus(problem, state, g, s.alpha(state.k)),
            AlgorithmId::BcSegPlus => step_bc_seg_plus(problem, state, g, s),
            AlgorithmId::BcPsegPlus => step_bc_pseg_plus(problem, state, g, s),
            AlgorithmId::NpPdeg => {
                let cfg = pdhg.ok_or(Error::Unsupported {
                    algorithm: "np-pdeg",
                    what: "a PDHG configuration",
                })?;
                step_np_pdeg(problem, state, cfg, s)
            }
        }
    }
}

/// BC-SEG+ follows its published initialization; the resolvent-based
/// bias-corrected methods seed their memory with an exploration point.
pub fn default_init(id: AlgorithmId) -> MemoryInit {
    match id {
        AlgorithmId::BcSegPlus => MemoryInit::Origin,
        _ => MemoryInit::Exploration,
    }
}
