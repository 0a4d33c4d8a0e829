//! Synthetic benchmark problems, resolvents, and the minimax-to-inclusion map.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{BlockDiagMatrix, DenseMatrix, Vector};
use crate::oracles::{DeterministicOperator, StochasticOracle};

/// Stepsize passed to a resolvent: a scalar `γ` or a matrix `Γ`.
#[derive(Clone, Copy, Debug)]
pub enum Step<'a> {
    Scalar(f64),
    Matrix(&'a BlockDiagMatrix),
}

pub type ResolventFn = Arc<dyn Fn(&Vector, Step<'_>) -> Vector + Send + Sync>;

/// `(id + γA)⁻¹`, or `(Γ⁻¹ + A)⁻¹ Γ⁻¹` for a matrix step.
#[derive(Clone)]
pub enum Resolvent {
    /// `A = 0`.
    Identity,
    /// Normal cone of `[−bound, bound]ⁿ`. The projection is a clamp for any
    /// scalar or diagonal step.
    Box { bound: f64 },
    Custom(ResolventFn),
}

impl fmt::Debug for Resolvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resolvent::Identity => write!(f, "Identity"),
            Resolvent::Box { bound } => write!(f, "Box {{ bound: {bound} }}"),
            Resolvent::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Resolvent {
    pub fn apply(&self, z: &Vector, step: Step<'_>) -> Vector {
        match self {
            Resolvent::Identity => z.clone(),
            Resolvent::Box { bound } => z.map(|x| x.clamp(-bound, *bound)),
            Resolvent::Custom(f) => f(z, step),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Resolvent::Identity)
    }
}

/// Componentwise clamp onto `[−bound, bound]ⁿ`, independent of the step.
pub fn box_resolvent(bound: f64) -> Result<Resolvent> {
    if !(bound > 0.0) || !bound.is_finite() {
        return Err(Error::invalid("bound", "must be positive and finite"));
    }
    Ok(Resolvent::Box { bound })
}

/// Split `z = (x, y)` with `x ∈ R^nx` and separable proximal maps.
#[derive(Clone, Debug)]
pub struct MinimaxSplit {
    pub nx: usize,
    pub prox_f: Resolvent,
    pub prox_g: Resolvent,
}

impl MinimaxSplit {
    fn joint_resolvent(&self) -> Resolvent {
        if self.prox_f.is_identity() && self.prox_g.is_identity() {
            return Resolvent::Identity;
        }
        if let (Resolvent::Box { bound: a }, Resolvent::Box { bound: b }) = (&self.prox_f, &self.prox_g) {
            if a == b {
                return Resolvent::Box { bound: *a };
            }
        }
        let split = self.clone();
        Resolvent::Custom(Arc::new(move |z: &Vector, step: Step<'_>| {
            let (x, y) = (z.head(split.nx), z.tail(split.nx));
            let (x, y) = match step {
                Step::Scalar(g) => (
                    split.prox_f.apply(&x, Step::Scalar(g)),
                    split.prox_g.apply(&y, Step::Scalar(g)),
                ),
                Step::Matrix(m) => {
                    let (m1, m2) = m
                        .split_at(split.nx)
                        .expect("stepsize blocks must not straddle the x/y split");
                    (
                        split.prox_f.apply(&x, Step::Matrix(&m1)),
                        split.prox_g.apply(&y, Step::Matrix(&m2)),
                    )
                }
            };
            Vector::concat(&x, &y)
        }))
    }
}

/// Known problem constants.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Constants {
    pub l_f: f64,
    pub l_f_hat: f64,
    /// `σ_F`, the square root of the vector noise second moment.
    pub sigma_f: f64,
    /// Per-coordinate noise standard deviation.
    pub sigma: f64,
    pub rho: Option<f64>,
    pub z_star: Option<Vector>,
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub name: String,
    pub operator: DeterministicOperator,
    pub oracle: StochasticOracle,
    /// `None` means `A = 0`.
    pub resolvent: Option<Resolvent>,
    pub minimax: Option<MinimaxSplit>,
    pub constants: Constants,
    /// `(M, c)` when `F z = M z + c`.
    pub affine: Option<(DenseMatrix, Vector)>,
}

impl Problem {
    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    pub fn is_constrained(&self) -> bool {
        self.resolvent.as_ref().is_some_and(|r| !r.is_identity())
    }

    pub fn resolve(&self, z: &Vector, step: Step<'_>) -> Vector {
        match &self.resolvent {
            Some(r) => r.apply(z, step),
            None => z.clone(),
        }
    }

    /// `Hz = z − γFz`
    pub fn h(&self, z: &Vector, gamma: f64) -> Vector {
        z - &(&self.operator.apply(z) * gamma)
    }

    /// Fixed-point residual `‖z − J_γA(z − γFz)‖`.
    pub fn residual(&self, z: &Vector, gamma: f64) -> f64 {
        let hz = self.h(z, gamma);
        z.dist_sq(&self.resolve(&hz, Step::Scalar(gamma))).sqrt()
    }

    /// Replaces the oracle by additive Gaussian noise with per-coordinate `sigma`.
    pub fn with_gaussian_noise(mut self, sigma: f64, seed: u64) -> Result<Self> {
        self.oracle = StochasticOracle::gaussian(self.operator.clone(), sigma, seed)?
            .with_mean_lipschitz(Some(self.constants.l_f_hat));
        self.constants.sigma = sigma;
        self.constants.sigma_f = (self.dim() as f64).sqrt() * sigma;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.oracle = self.oracle.with_seed(seed);
        self
    }

    /// `σ_F²`
    pub fn variance(&self) -> f64 {
        self.constants.sigma_f * self.constants.sigma_f
    }
}

fn two_by_two(m: [[f64; 2]; 2]) -> DenseMatrix {
    DenseMatrix::from_rows(vec![m[0].to_vec(), m[1].to_vec()]).expect("finite 2x2")
}

/// Entries `(a, b)` of the game matrix for a given `(L, ρ)`.
pub fn quadratic_game_coefficients(l: f64, rho: f64) -> Result<(f64, f64)> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::invalid("L", "must be positive and finite"));
    }
    if !rho.is_finite() || rho.abs() > 1.0 / (2.0 * l) {
        return Err(Error::invalid("rho", format!("|rho| must not exceed 1/(2L) = {}", 1.0 / (2.0 * l))));
    }
    Ok(((l * l - l.powi(4) * rho * rho).sqrt(), l * l * rho))
}

fn affine_problem(
    name: &str,
    m: DenseMatrix,
    shift: f64,
    rho: Option<f64>,
    bound: Option<f64>,
) -> Result<Problem> {
    let n = m.dim();
    let offset = Vector::from(m.matvec(&vec![-shift; n]));
    let l = m.spectral_norm();
    let lin = m.clone();
    let c = offset.clone();
    let operator = if shift == 0.0 {
        DeterministicOperator::linear(m.clone())
    } else {
        DeterministicOperator::new(n, Some(l), move |z: &Vector| {
            Vector::from(lin.matvec(z.map(|x| x - shift).as_slice()))
        })?
    };
    let prox = match bound {
        Some(b) => box_resolvent(b)?,
        None => Resolvent::Identity,
    };
    let split = MinimaxSplit {
        nx: n / 2,
        prox_f: prox.clone(),
        prox_g: prox.clone(),
    };
    Ok(Problem {
        name: name.to_string(),
        oracle: StochasticOracle::exact(operator.clone()),
        operator,
        resolvent: bound.map(|_| prox),
        minimax: Some(split),
        constants: Constants {
            l_f: l,
            l_f_hat: l,
            sigma_f: 0.0,
            sigma: 0.0,
            rho,
            z_star: Some(Vector::filled(n, shift)),
        },
        affine: Some((m, c)),
    })
}

/// Unconstrained game `F(x, y) = (bx + ay, −ax + by)` with `a = √(L² − L⁴ρ²)`
/// and `b = L²ρ`, so that `‖F‖ = L` and the weak MVI holds with exactly `ρ`.
pub fn quadratic_game(l: f64, rho: f64) -> Result<Problem> {
    let (a, b) = quadratic_game_coefficients(l, rho)?;
    affine_problem("quadratic", two_by_two([[b, a], [-a, b]]), 0.0, Some(rho), None)
}

/// The game with explicit entries `(a, b)`. `ρ` is the largest value for which
/// the weak MVI holds, `b / (a² + b²)`.
pub fn quadratic_game_ab(a: f64, b: f64) -> Result<Problem> {
    if a == 0.0 && b == 0.0 {
        return Err(Error::invalid("a, b", "must not both be zero"));
    }
    let rho = b / (a * a + b * b);
    affine_problem("quadratic", two_by_two([[b, a], [-a, b]]), 0.0, Some(rho), None)
}

/// `F(x, y) = (y − s, −(x − s))` on the box `[−bound, bound]²`.
pub fn bilinear_box(shift: f64, bound: f64) -> Result<Problem> {
    if !(shift.abs() < bound) {
        return Err(Error::invalid("shift", "|shift| must be below bound"));
    }
    affine_problem("bilinear-box", two_by_two([[0.0, 1.0], [-1.0, 0.0]]), shift, Some(0.0), Some(bound))
}

/// The quadratic game translated so that `z⋆ = (shift, shift)`, on a box.
pub fn shifted_quadratic_box(l: f64, rho: f64, shift: f64, bound: f64) -> Result<Problem> {
    let (a, b) = quadratic_game_coefficients(l, rho)?;
    if !(shift.abs() < bound) {
        return Err(Error::invalid("shift", "|shift| must be below bound"));
    }
    affine_problem(
        "shifted-quadratic-box",
        two_by_two([[b, a], [-a, b]]),
        shift,
        Some(rho),
        Some(bound),
    )
}

pub const FORSAKEN_BOUND: f64 = 4.0 / 3.0;

/// `ψ′(z) = (4/7)z⁵ − (4/3)z³ + (2/3)z`
pub fn forsaken_psi_prime(z: f64) -> f64 {
    let z2 = z * z;
    z * (2.0 / 3.0 + z2 * (-4.0 / 3.0 + z2 * (4.0 / 7.0)))
}

fn forsaken_psi_second(z: f64) -> f64 {
    let z2 = z * z;
    2.0 / 3.0 + z2 * (-4.0 + z2 * (20.0 / 7.0))
}

/// Lipschitz constant of the forsaken operator restricted to its box.
///
/// The Jacobian is `[[ψ″(x), 1], [−1, ψ″(y)]]`. Its spectral norm is convex
/// in `(ψ″(x), ψ″(y))`, so the maximum sits at a corner of the range of ψ″,
/// which is found by dense sampling.
pub fn forsaken_lipschitz() -> f64 {
    let n = 200_000;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..=n {
        let z = -FORSAKEN_BOUND + 2.0 * FORSAKEN_BOUND * i as f64 / n as f64;
        let v = forsaken_psi_second(z);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    [(lo, lo), (lo, hi), (hi, lo), (hi, hi)]
        .iter()
        .map(|&(p, q)| two_by_two([[p, 1.0], [-1.0, q]]).spectral_norm())
        .fold(0.0, f64::max)
}

/// `min_{x,y} max … xy + ψ(x) − ψ(y)` on `[−4/3, 4/3]²`, in inclusion form
/// `F(x, y) = (y + ψ′(x), −x + ψ′(y))`. `ρ` is left unknown.
pub fn global_forsaken() -> Result<Problem> {
    let l = forsaken_lipschitz();
    let operator = DeterministicOperator::new(2, Some(l), |z: &Vector| {
        Vector::from([z[1] + forsaken_psi_prime(z[0]), -z[0] + forsaken_psi_prime(z[1])])
    })?;
    let prox = box_resolvent(FORSAKEN_BOUND)?;
    Ok(Problem {
        name: "global-forsaken".into(),
        oracle: StochasticOracle::exact(operator.clone()),
        operator,
        resolvent: Some(prox.clone()),
        minimax: Some(MinimaxSplit {
            nx: 1,
            prox_f: prox.clone(),
            prox_g: prox,
        }),
        constants: Constants {
            l_f: l,
            l_f_hat: l,
            sigma_f: 0.0,
            sigma: 0.0,
            rho: None,
            z_star: Some(Vector::zeros(2)),
        },
        affine: None,
    })
}

pub type GradFn = Arc<dyn Fn(&Vector, &Vector) -> Vector + Send + Sync>;

/// Assembles `F(z) = (∇ₓφ(x, y), −∇ᵧφ(x, y))` and `A = (∂f, ∂g)` from the
/// gradients of a smooth coupling `φ` and the proximal maps of `f` and `g`.
pub fn minimax_to_inclusion(
    nx: usize,
    ny: usize,
    grad_x: impl Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static,
    grad_y: impl Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static,
    prox_f: Resolvent,
    prox_g: Resolvent,
    lipschitz: Option<f64>,
) -> Result<Problem> {
    if nx == 0 || ny == 0 {
        return Err(Error::invalid("dims", "both blocks must be non-empty"));
    }
    let operator = DeterministicOperator::new(nx + ny, lipschitz, move |z: &Vector| {
        let (x, y) = (z.head(nx), z.tail(nx));
        let gx = grad_x(&x, &y);
        let gy = grad_y(&x, &y);
        debug_assert_eq!((gx.dim(), gy.dim()), (nx, ny));
        Vector::concat(&gx, &-&gy)
    })?;
    let split = MinimaxSplit { nx, prox_f, prox_g };
    let joint = split.joint_resolvent();
    let l = lipschitz.unwrap_or(f64::NAN);
    Ok(Problem {
        name: "minimax".into(),
        oracle: StochasticOracle::exact(operator.clone()),
        operator,
        resolvent: (!joint.is_identity()).then_some(joint),
        minimax: Some(split),
        constants: Constants {
            l_f: l,
            l_f_hat: l,
            sigma_f: 0.0,
            sigma: 0.0,
            rho: None,
            z_star: None,
        },
        affine: None,
    })
}

/// A problem selected by name, as it appears in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    Quadratic {
        #[serde(rename = "L")]
        l: f64,
        rho: f64,
    },
    GlobalForsaken,
    BilinearBox {
        #[serde(default = "default_shift")]
        shift: f64,
        #[serde(default = "default_bound")]
        bound: f64,
    },
    ShiftedQuadraticBox {
        #[serde(rename = "L")]
        l: f64,
        rho: f64,
        #[serde(default = "default_shift")]
        shift: f64,
        #[serde(default = "default_bound")]
        bound: f64,
    },
}

fn default_shift() -> f64 {
    0.9
}

fn default_bound() -> f64 {
    1.0
}

pub const PROBLEM_NAMES: [&str; 4] = ["quadratic", "global-forsaken", "bilinear-box", "shifted-quadratic-box"];

impl ProblemSpec {
    pub fn build(&self) -> Result<Problem> {
        match *self {
            ProblemSpec::Quadratic { l, rho } => quadratic_game(l, rho),
            ProblemSpec::GlobalForsaken => global_forsaken(),
            ProblemSpec::BilinearBox { shift, bound } => bilinear_box(shift, bound),
            ProblemSpec::ShiftedQuadraticBox { l, rho, shift, bound } => {
                shifted_quadratic_box(l, rho, shift, bound)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Quadratic { .. } => "quadratic",
            ProblemSpec::GlobalForsaken => "global-forsaken",
            ProblemSpec::BilinearBox { .. } => "bilinear-box",
            ProblemSpec::ShiftedQuadraticBox { .. } => "shifted-quadratic-box",
        }
    }
}
