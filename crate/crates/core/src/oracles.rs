//! Deterministic operators and seeded two-point stochastic oracles.
//!
//! A [`SampleTicket`] is just `(seed, counter)`. Realizing it always produces
//! the same noise, so evaluating one ticket at several points is pure replay.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_pcg::Pcg64Mcg;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, Vector};

pub type OperatorFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

/// A map `F: Rⁿ → Rⁿ` with an optionally declared Lipschitz constant.
#[derive(Clone)]
pub struct DeterministicOperator {
    dim: usize,
    lipschitz: Option<f64>,
    eval: OperatorFn,
}

impl fmt::Debug for DeterministicOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DeterministicOperator")
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

impl DeterministicOperator {
    pub fn new(
        dim: usize,
        lipschitz: Option<f64>,
        eval: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be positive"));
        }
        if let Some(l) = lipschitz {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(Error::invalid("lipschitz", "must be finite and non-negative"));
            }
        }
        Ok(DeterministicOperator {
            dim,
            lipschitz,
            eval: Arc::new(eval),
        })
    }

    /// `z ↦ M z`, with the spectral norm of `M` as Lipschitz constant.
    pub fn linear(m: DenseMatrix) -> Self {
        let l = m.spectral_norm();
        let dim = m.dim();
        DeterministicOperator {
            dim,
            lipschitz: Some(l),
            eval: Arc::new(move |z: &Vector| Vector::from(m.matvec(z.as_slice()))),
        }
    }

    pub fn zero(dim: usize) -> Self {
        DeterministicOperator {
            dim,
            lipschitz: Some(0.0),
            eval: Arc::new(move |_: &Vector| Vector::zeros(dim)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn with_lipschitz(mut self, lipschitz: Option<f64>) -> Self {
        self.lipschitz = lipschitz;
        self
    }

    pub fn eval(&self, z: &Vector) -> Result<Vector> {
        z.check_dim(self.dim)?;
        Ok((self.eval)(z))
    }

    /// Evaluation without the dimension check, for inner loops.
    pub(crate) fn apply(&self, z: &Vector) -> Vector {
        (self.eval)(z)
    }

    /// `z ↦ −F(z)`
    pub fn negate(&self) -> Self {
        let inner = self.eval.clone();
        DeterministicOperator {
            dim: self.dim,
            lipschitz: self.lipschitz,
            eval: Arc::new(move |z: &Vector| -&inner(z)),
        }
    }
}

#[derive(Clone, Debug)]
pub enum NoiseModel {
    None,
    /// `F̂(z, ξ) = Fz + ζ` with `ζ ~ N(0, σ² I)`.
    AdditiveGaussian { sigma: f64 },
    /// `F̂(z, ξ) = F_ξ z` with `ξ` uniform over the components.
    FiniteSum { components: Vec<DeterministicOperator> },
}

/// An opaque sample `ξ`. Tickets are plain values and may be replayed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SampleTicket {
    pub seed: u64,
    pub counter: u64,
}

/// The randomness behind a ticket, materialized once so it can be applied at
/// many points cheaply.
#[derive(Clone, Debug, PartialEq)]
pub enum Draw {
    Exact,
    Shift(Vector),
    Component(usize),
}

/// Unbiased two-point estimator `F̂(·, ξ)` of a deterministic operator.
#[derive(Clone, Debug)]
pub struct StochasticOracle {
    base: DeterministicOperator,
    noise: NoiseModel,
    seed: u64,
    variance_bound: Option<f64>,
    mean_lipschitz: Option<f64>,
    noise_sign: f64,
}

impl StochasticOracle {
    /// The noiseless oracle `F̂(z, ξ) = Fz`.
    pub fn exact(base: DeterministicOperator) -> Self {
        StochasticOracle {
            mean_lipschitz: base.lipschitz,
            base,
            noise: NoiseModel::None,
            seed: 0,
            variance_bound: Some(0.0),
            noise_sign: 1.0,
        }
    }

    /// Additive isotropic Gaussian noise with per-coordinate standard deviation
    /// `sigma`. The recorded variance bound is `n σ²`.
    pub fn gaussian(base: DeterministicOperator, sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::invalid("sigma", "must be finite and non-negative"));
        }
        let n = base.dim as f64;
        Ok(StochasticOracle {
            mean_lipschitz: base.lipschitz,
            base,
            noise: NoiseModel::AdditiveGaussian { sigma },
            seed,
            variance_bound: Some(n * sigma * sigma),
            noise_sign: 1.0,
        })
    }

    /// Uniform finite sum `F = (1/N) Σ F_i`. The mean's Lipschitz constant is
    /// bounded by the average of the component constants when all are known;
    /// the variance bound is left unset since it is generally point dependent.
    pub fn finite_sum(components: Vec<DeterministicOperator>, seed: u64) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::invalid("components", "at least one component is required"))?;
        let dim = first.dim;
        for c in &components {
            if c.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: c.dim,
                });
            }
        }
        let n = components.len() as f64;
        let lipschitz = components
            .iter()
            .map(|c| c.lipschitz)
            .sum::<Option<f64>>()
            .map(|s| s / n);
        let mean_lipschitz = components
            .iter()
            .map(|c| c.lipschitz.map(|l| l * l))
            .sum::<Option<f64>>()
            .map(|s| (s / n).sqrt());
        let parts = components.clone();
        let base = DeterministicOperator::new(dim, lipschitz, move |z| {
            let mut acc = parts[0].apply(z);
            for p in &parts[1..] {
                acc = &acc + &p.apply(z);
            }
            acc.map(|x| x / n)
        })?;
        Ok(StochasticOracle {
            base,
            noise: NoiseModel::FiniteSum { components },
            seed,
            variance_bound: None,
            mean_lipschitz,
            noise_sign: 1.0,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mean_lipschitz(mut self, mean_lipschitz: Option<f64>) -> Self {
        self.mean_lipschitz = mean_lipschitz;
        self
    }

    pub fn with_variance_bound(mut self, variance_bound: Option<f64>) -> Self {
        self.variance_bound = variance_bound;
        self
    }

    pub fn dim(&self) -> usize {
        self.base.dim
    }

    pub fn base(&self) -> &DeterministicOperator {
        &self.base
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `σ_F²`, when known.
    pub fn variance_bound(&self) -> Option<f64> {
        self.variance_bound
    }

    pub fn mean_lipschitz(&self) -> Option<f64> {
        self.mean_lipschitz
    }

    /// Per-coordinate σ of the Gaussian model, zero for the noiseless oracle.
    pub fn sigma(&self) -> Option<f64> {
        match self.noise {
            NoiseModel::None => Some(0.0),
            NoiseModel::AdditiveGaussian { sigma } => Some(sigma),
            NoiseModel::FiniteSum { .. } => None,
        }
    }

    pub fn draw_sample(&self, counter: u64) -> SampleTicket {
        SampleTicket {
            seed: self.seed,
            counter,
        }
    }

    pub fn realize(&self, ticket: &SampleTicket) -> Draw {
        match &self.noise {
            NoiseModel::None => Draw::Exact,
            NoiseModel::AdditiveGaussian { sigma } => {
                if *sigma == 0.0 {
                    return Draw::Exact;
                }
                let mut rng = ticket_rng(ticket);
                let s = self.noise_sign * sigma;
                Draw::Shift(Vector::from(
                    (0..self.dim())
                        .map(|_| s * rng.sample::<f64, _>(StandardNormal))
                        .collect::<Vec<_>>(),
                ))
            }
            NoiseModel::FiniteSum { components } => {
                Draw::Component(ticket_rng(ticket).random_range(0..components.len()))
            }
        }
    }

    /// `F̂(z, ξ)` for a ticket.
    pub fn eval_at(&self, ticket: &SampleTicket, z: &Vector) -> Result<Vector> {
        z.check_dim(self.dim())?;
        Ok(self.eval_draw(&self.realize(ticket), z))
    }

    /// `F̂(z, ξ)` for an already realized draw. No dimension check.
    pub fn eval_draw(&self, draw: &Draw, z: &Vector) -> Vector {
        match (draw, &self.noise) {
            (Draw::Component(i), NoiseModel::FiniteSum { components }) => components[*i].apply(z),
            (Draw::Shift(zeta), _) => &self.base.apply(z) + zeta,
            _ => self.base.apply(z),
        }
    }

    /// `−F̂`. Constants are preserved.
    pub fn negate(&self) -> Self {
        let noise = match &self.noise {
            NoiseModel::FiniteSum { components } => NoiseModel::FiniteSum {
                components: components.iter().map(|c| c.negate()).collect(),
            },
            other => other.clone(),
        };
        StochasticOracle {
            base: self.base.negate(),
            noise,
            seed: self.seed,
            variance_bound: self.variance_bound,
            mean_lipschitz: self.mean_lipschitz,
            noise_sign: -self.noise_sign,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// A small generator whose 128-bit state is a keyed hash of the ticket, so
/// every ticket has its own stream and replays exactly.
fn ticket_rng(ticket: &SampleTicket) -> Pcg64Mcg {
    let hi = splitmix64(ticket.seed ^ splitmix64(ticket.counter));
    let lo = splitmix64(hi ^ ticket.counter.rotate_left(32));
    Pcg64Mcg::new(((hi as u128) << 64 | lo as u128) | 1)
}

pub fn draw_sample(oracle: &StochasticOracle, counter: u64) -> SampleTicket {
    oracle.draw_sample(counter)
}

pub fn eval_at(oracle: &StochasticOracle, ticket: &SampleTicket, z: &Vector) -> Result<Vector> {
    oracle.eval_at(ticket, z)
}

/// Wrapping with `z ↦ −F(z)`.
pub trait Negate {
    fn negate(&self) -> Self;
}

impl Negate for DeterministicOperator {
    fn negate(&self) -> Self {
        DeterministicOperator::negate(self)
    }
}

impl Negate for StochasticOracle {
    fn negate(&self) -> Self {
        StochasticOracle::negate(self)
    }
}

pub fn negate<T: Negate>(op: &T) -> T {
    op.negate()
}

/// Sampling setup for [`estimate_mean_lipschitz`].
#[derive(Clone, Copy, Debug)]
pub struct LipschitzSampling {
    /// Points are drawn uniformly from the ball of this radius around the origin.
    pub radius: f64,
    pub seed: u64,
}

impl Default for LipschitzSampling {
    fn default() -> Self {
        LipschitzSampling {
            radius: 1.0,
            seed: 0x5eed,
        }
    }
}

/// Statistical lower bound on the mean-square Lipschitz constant `L_F̂`,
/// with point pairs from the unit ball.
pub fn estimate_mean_lipschitz(
    oracle: &StochasticOracle,
    n_pairs: usize,
    n_tickets: usize,
) -> Result<f64> {
    estimate_mean_lipschitz_with(oracle, n_pairs, n_tickets, LipschitzSampling::default())
}

pub fn estimate_mean_lipschitz_with(
    oracle: &StochasticOracle,
    n_pairs: usize,
    n_tickets: usize,
    sampling: LipschitzSampling,
) -> Result<f64> {
    if n_pairs == 0 {
        return Err(Error::invalid("n_pairs", "must be at least 1"));
    }
    if !(sampling.radius > 0.0) {
        return Err(Error::invalid("radius", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let n = oracle.dim();
    let mut ball_point = || {
        let dir: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let r = sampling.radius * rng.random::<f64>().powf(1.0 / n as f64);
        Vector::from(dir.into_iter().map(|x| r * x / norm).collect::<Vec<_>>())
    };
    let pairs: Vec<(Vector, Vector)> = (0..n_pairs).map(|_| (ball_point(), ball_point())).collect();
    estimate_mean_lipschitz_on(oracle, &pairs, n_tickets)
}

/// As [`estimate_mean_lipschitz`] over explicit point pairs. The same
/// tickets are shared by every pair. Pairs with `z = z′` are skipped.
pub fn estimate_mean_lipschitz_on(
    oracle: &StochasticOracle,
    pairs: &[(Vector, Vector)],
    n_tickets: usize,
) -> Result<f64> {
    if n_tickets == 0 {
        return Err(Error::invalid("n_tickets", "must be at least 1"));
    }
    // Counters from the top of the range stay clear of those used by solvers.
    let draws: Vec<Draw> = (0..n_tickets as u64)
        .map(|i| oracle.realize(&oracle.draw_sample(u64::MAX - i)))
        .collect();
    let mut best: Option<f64> = None;
    for (z, w) in pairs {
        z.check_dim(oracle.dim())?;
        w.check_dim(oracle.dim())?;
        let d = z.dist_sq(w);
        if d == 0.0 {
            continue;
        }
        let mean: f64 = draws
            .iter()
            .map(|x| oracle.eval_draw(x, z).dist_sq(&oracle.eval_draw(x, w)))
            .sum::<f64>()
            / n_tickets as f64;
        let ratio = (mean / d).sqrt();
        best = Some(best.map_or(ratio, |b: f64| b.max(ratio)));
    }
    best.ok_or(Error::DegeneratePairs)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiniteSumGap {
    pub l_f: f64,
    pub l_f_hat: f64,
    pub ratio: f64,
}

/// Constants of the worst-case finite sum built by [`worst_case_finite_sum`]:
/// one component with constant `N L`, the others with constant `L`.
pub fn finite_sum_gap_report(n: usize, l: f64) -> Result<FiniteSumGap> {
    if n == 0 {
        return Err(Error::invalid("N", "must be at least 1"));
    }
    if !(l > 0.0) {
        return Err(Error::invalid("L", "must be positive"));
    }
    let nf = n as f64;
    let l_f = (2.0 * nf - 1.0) * l / nf;
    let l_f_hat = ((nf * nf + nf - 1.0) / nf).sqrt() * l;
    Ok(FiniteSumGap {
        l_f,
        l_f_hat,
        ratio: l_f_hat / l_f,
    })
}

/// Scalar-multiple components `N L z, L z, …, L z` in `dim` dimensions.
pub fn worst_case_finite_sum(n: usize, l: f64, dim: usize, seed: u64) -> Result<StochasticOracle> {
    finite_sum_gap_report(n, l)?;
    let components = (0..n)
        .map(|i| {
            let c = if i == 0 { n as f64 * l } else { l };
            DeterministicOperator::linear(DenseMatrix::identity(dim).scaled(c))
        })
        .collect();
    StochasticOracle::finite_sum(components, seed)
}
