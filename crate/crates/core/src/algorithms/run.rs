//! Driving a method for many iterations and recording what happened.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{weighted_norm_sq, BlockDiagMatrix, Vector};
use crate::problems::Problem;

use super::{AlgorithmId, Method, Schedule, StepInfo};

/// Runs stop once `‖z‖` exceeds this.
pub const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub enum RecordPlan {
    All,
    /// Sorted iteration indices to keep.
    Indices(Vec<u64>),
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub record: RecordPlan,
    /// Terminal progress at or below this counts as converged.
    pub converged_tol: f64,
    /// Measure every iterate to fill [`Trajectory::weighted`]. Without it
    /// only recorded iterates are measured and the sums stay empty.
    pub weighted: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            record: RecordPlan::All,
            converged_tol: 1e-2,
            weighted: true,
        }
    }
}

/// Metrics at iteration `k`, all computed with the exact operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Record {
    pub k: u64,
    /// `‖Fz^k‖²`
    pub fz_sq: f64,
    /// `‖z^k − z⋆‖²` when `z⋆` is known.
    pub dist_sq: Option<f64>,
    /// `‖z^k − J(z^k − γFz^k)‖`
    pub residual: f64,
    /// `‖v^k‖²` for `v^k = Γ⁻¹(ẑ^k − z̄^k) + Fz̄^k ∈ Tz̄^k`.
    pub gap_sq: f64,
    /// `‖v^k‖²_Γ`
    pub gap_sq_gamma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    Running,
    Diverged,
}

/// `Σ_{k=0}^{K} α_k m_k` for each metric, unnormalized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct WeightedSums {
    pub k_max: u64,
    pub sum_alpha: f64,
    pub sum_alpha_sq: f64,
    pub fz_sq: f64,
    pub gap_sq: f64,
    pub gap_sq_gamma: f64,
}

impl WeightedSums {
    fn add(&mut self, alpha: f64, r: &Record) {
        self.k_max = r.k;
        self.sum_alpha += alpha;
        self.sum_alpha_sq += alpha * alpha;
        self.fz_sq += alpha * r.fz_sq;
        self.gap_sq += alpha * r.gap_sq;
        self.gap_sq_gamma += alpha * r.gap_sq_gamma;
    }

    pub fn mean_fz_sq(&self) -> f64 {
        self.fz_sq / self.sum_alpha
    }

    pub fn mean_gap_sq(&self) -> f64 {
        self.gap_sq / self.sum_alpha
    }

    pub fn mean_gap_sq_gamma(&self) -> f64 {
        self.gap_sq_gamma / self.sum_alpha
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub algorithm: AlgorithmId,
    pub seed: u64,
    pub records: Vec<Record>,
    /// Random iterate with `P[k⋆ = k] ∝ α_k` over `0..=n_iters`.
    pub k_star: u64,
    pub status: Status,
    /// First iteration at which the guard tripped.
    pub diverged_at: Option<u64>,
    pub weighted: WeightedSums,
    /// Progress measure at `z⁰` and at the last recorded iterate: the
    /// residual for constrained problems, `‖Fz‖` otherwise.
    pub initial_progress: f64,
    pub final_progress: f64,
    pub final_z: Vector,
}

/// Draws `k⋆ ∈ {0, …, K}` with `P[k⋆ = k] = α_k / Σ_j α_j` by inverse CDF on
/// a stream reserved for this purpose.
pub fn sample_k_star(schedule: &Schedule, k_max: u64, seed: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6b5f_5354_4152_0001);
    let total: f64 = (0..=k_max).map(|k| schedule.alpha(k)).sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for k in 0..=k_max {
        acc += schedule.alpha(k);
        if u < acc {
            return k;
        }
    }
    k_max
}

/// Up to `max_rows` indices in `0..=n`, geometrically spaced, always
/// including `0` and `n`.
pub fn geometric_indices(n: u64, max_rows: usize) -> Vec<u64> {
    let max_rows = max_rows.max(2);
    if n < max_rows as u64 {
        return (0..=n).collect();
    }
    let m = max_rows - 1;
    let ln = (n as f64).ln();
    let mut out = vec![0];
    for i in 0..m {
        let k = if i + 1 == m {
            n
        } else {
            (ln * i as f64 / (m - 1) as f64).exp().round() as u64
        };
        if *out.last().unwrap() < k {
            out.push(k);
        }
    }
    out
}

/// Runs `method` for `n_iters` steps on `problem` with oracle seed `seed`,
/// recording every iterate.
pub fn run(problem: &Problem, method: &Method, z0: Vector, n_iters: u64, seed: u64) -> Result<Trajectory> {
    run_with(problem, method, z0, n_iters, seed, &RunOptions::default())
}

pub fn run_with(
    problem: &Problem,
    method: &Method,
    z0: Vector,
    n_iters: u64,
    seed: u64,
    opts: &RunOptions,
) -> Result<Trajectory> {
    if n_iters == 0 {
        return Err(Error::invalid("n_iters", "must be at least 1"));
    }
    let problem = problem.clone().with_seed(seed);
    let pdhg = match method.id {
        AlgorithmId::NpPdeg => Some(method.pdhg_config(&problem)?),
        _ => None,
    };
    let gamma_matrix = match &pdhg {
        Some(cfg) => cfg.gamma(),
        None => BlockDiagMatrix::scalar(method.gamma, problem.dim())?,
    };
    let gamma_inv = gamma_matrix.inverse();
    let mut state = method.init_state(&problem, z0)?;
    let constrained = problem.is_constrained();
    let progress = |r: &Record| if constrained { r.residual } else { r.fz_sq.sqrt() };

    let mut records = Vec::new();
    let mut weighted = WeightedSums::default();
    let mut plan_at = 0usize;
    let mut diverged_at = None;
    let mut initial_progress = f64::NAN;
    let mut last = None;

    for k in 0..=n_iters {
        let z = state.z.clone();
        let info = if k < n_iters {
            method.step(&problem, &mut state, pdhg.as_ref())?
        } else {
            method.step(&problem, &mut state.clone(), pdhg.as_ref())?
        };
        let keep = match &opts.record {
            RecordPlan::All => true,
            RecordPlan::Indices(idx) => {
                while plan_at < idx.len() && idx[plan_at] < k {
                    plan_at += 1;
                }
                plan_at < idx.len() && idx[plan_at] == k
            }
        };
        if !(keep || opts.weighted || k == 0 || k == n_iters) {
            if !state.z.is_finite() || state.z.norm() > DIVERGENCE_NORM {
                let r = measure(&problem, method.gamma, &z, &info, &gamma_matrix, &gamma_inv, k);
                last = Some((r, z));
                diverged_at = Some(k + 1);
                break;
            }
            continue;
        }
        let r = measure(&problem, method.gamma, &z, &info, &gamma_matrix, &gamma_inv, k);
        if k == 0 {
            initial_progress = progress(&r);
        }
        if !(r.fz_sq.is_finite() && r.gap_sq.is_finite()) {
            diverged_at = Some(k);
            break;
        }
        if opts.weighted {
            weighted.add(method.schedule.alpha(k), &r);
        }
        if keep {
            records.push(r);
        }
        last = Some((r, z));
        if k < n_iters && (!state.z.is_finite() || state.z.norm() > DIVERGENCE_NORM) {
            diverged_at = Some(k + 1);
            break;
        }
    }

    let (last_record, final_z) = last.ok_or(Error::invalid("z0", "the first iterate is not finite"))?;
    if let Some(r) = records.last() {
        if r.k != last_record.k {
            records.push(last_record);
        }
    } else {
        records.push(last_record);
    }
    let final_progress = progress(&last_record);
    let status = if diverged_at.is_some() || (initial_progress > 0.0 && final_progress >= 2.0 * initial_progress) {
        Status::Diverged
    } else if final_progress <= opts.converged_tol {
        Status::Converged
    } else {
        Status::Running
    };
    Ok(Trajectory {
        algorithm: method.id,
        seed,
        records,
        k_star: sample_k_star(&method.schedule, n_iters, seed),
        status,
        diverged_at,
        weighted,
        initial_progress,
        final_progress,
        final_z,
    })
}

fn measure(
    problem: &Problem,
    gamma: f64,
    z: &Vector,
    info: &StepInfo,
    gamma_matrix: &BlockDiagMatrix,
    gamma_inv: &BlockDiagMatrix,
    k: u64,
) -> Record {
    let f = &problem.operator;
    let fz = f.apply(z);
    let resolved = problem.resolve(&(z - &(&fz * gamma)), crate::problems::Step::Scalar(gamma));
    let diff = &info.pre - &info.zbar;
    let scaled = match info.scale {
        Some(s) => &diff * (1.0 / s),
        None => gamma_inv.matvec(&diff),
    };
    let v = &scaled + &f.apply(&info.zbar);
    Record {
        k,
        fz_sq: fz.norm_sq(),
        dist_sq: problem.constants.z_star.as_ref().map(|zs| z.dist_sq(zs)),
        residual: z.dist_sq(&resolved).sqrt(),
        gap_sq: v.norm_sq(),
        gap_sq_gamma: match info.scale {
            Some(s) => s * v.norm_sq(),
            None => weighted_norm_sq(&v, gamma_matrix).unwrap_or(f64::NAN),
        },
    }
}
