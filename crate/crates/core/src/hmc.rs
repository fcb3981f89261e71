//! Hamiltonian Monte Carlo kernel with an explicit temperature.
//!
//! The Hamiltonian is `H(q, p) = ||p||^2 / (2m) + V(q)`. Temperature enters in
//! two places: momenta are drawn from `Normal(0, m k_B T)` per coordinate, and
//! a proposal is accepted with probability `min(1, exp(-dH / (k_B T)))`, so
//! the joint stationary density is `exp(-H / (k_B T))`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::ModelSpec;

/// `|dH|` above this multiple of `k_B T` (or any non-finite `H`) counts as a
/// divergent trajectory, which is rejected and reported, never fatal.
pub const DIVERGENCE_FACTOR: f64 = 1000.0;

/// Leapfrog and acceptance parameters shared by every particle.
#[derive(Clone, Copy, Debug)]
pub struct KernelConfig {
    /// Leapfrog step size.
    pub step_size: f64,
    /// Leapfrog steps per proposal.
    pub n_leapfrog: usize,
    /// Particle mass, shared across coordinates.
    pub mass: f64,
    /// Boltzmann constant; carries the energy-per-temperature dimension.
    pub k_b: f64,
    /// Negate the momentum after an accepted proposal. Off by default: on a
    /// smooth potential the inversion retraces trajectories into a slow
    /// zig-zag walk.
    pub invert_momentum_on_accept: bool,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            step_size: 0.01,
            n_leapfrog: 100,
            mass: 1.0,
            k_b: 1.0,
            invert_momentum_on_accept: false,
        }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::invalid("step_size must be positive"));
        }
        if self.n_leapfrog == 0 {
            return Err(Error::invalid("n_leapfrog must be at least 1"));
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::invalid("mass must be positive"));
        }
        if !(self.k_b.is_finite() && self.k_b > 0.0) {
            return Err(Error::invalid("k_b must be positive"));
        }
        Ok(())
    }
}

/// A position-momentum pair on phase space.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::invalid("position and momentum lengths differ"));
        }
        if q.iter().chain(&p).any(|x| !x.is_finite()) {
            return Err(Error::invalid("phase point has non-finite components"));
        }
        Ok(Self { q, p })
    }
}

/// Thermal momentum draw: each component `Normal(0, m k_B T)`. `T = 0` gives
/// the zero vector.
pub fn sample_momentum<R: Rng + ?Sized>(
    dim: usize,
    temperature: f64,
    config: &KernelConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !temperature.is_finite() || temperature < 0.0 {
        return Err(Error::invalid("temperature must be non-negative"));
    }
    if temperature == 0.0 {
        return Ok(vec![0.0; dim]);
    }
    let sd = (config.mass * config.k_b * temperature).sqrt();
    Ok((0..dim)
        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
        .collect())
}

fn kinetic(p: &[f64], mass: f64) -> f64 {
    p.iter().map(|x| x * x).sum::<f64>() / (2.0 * mass)
}

pub(crate) fn hamiltonian_raw(q: &[f64], p: &[f64], model: &ModelSpec, config: &KernelConfig) -> f64 {
    kinetic(p, config.mass) + model.potential_raw(q)
}

/// Total energy `||p||^2 / (2m) + V(q)` of a phase point.
pub fn hamiltonian(point: &PhasePoint, model: &ModelSpec, config: &KernelConfig) -> Result<f64> {
    let v = model.potential(&point.q)?;
    if point.p.len() != point.q.len() {
        return Err(Error::invalid("position and momentum lengths differ"));
    }
    Ok(kinetic(&point.p, config.mass) + v)
}

/// Integrate `n_leapfrog` velocity-Verlet steps: half-kick, drift, half-kick.
///
/// Deterministic; each consecutive pair of half-kicks reuses one gradient
/// evaluation, so a trajectory costs `n_leapfrog + 1` gradient calls.
pub fn leapfrog(point: &PhasePoint, model: &ModelSpec, config: &KernelConfig) -> Result<PhasePoint> {
    if point.q.len() != model.dim() {
        return Err(Error::invalid("phase point does not match model dimension"));
    }
    config.validate()?;
    let eps = config.step_size;
    let mass = config.mass;
    let mut q = point.q.clone();
    let mut p = point.p.clone();
    let mut grad = vec![0.0; q.len()];

    model.grad_into_raw(&q, &mut grad);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::IntegrationDiverged { step: 0 });
    }
    for step in 0..config.n_leapfrog {
        for (pi, gi) in p.iter_mut().zip(&grad) {
            *pi -= 0.5 * eps * gi;
        }
        for (qi, pi) in q.iter_mut().zip(&p) {
            *qi += eps * pi / mass;
        }
        model.grad_into_raw(&q, &mut grad);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::IntegrationDiverged { step });
        }
        for (pi, gi) in p.iter_mut().zip(&grad) {
            *pi -= 0.5 * eps * gi;
        }
    }
    Ok(PhasePoint { q, p })
}

/// Metropolis acceptance probability `min(1, exp(-dH / (k_B T)))`.
pub fn acceptance_probability(delta_h: f64, temperature: f64, k_b: f64) -> f64 {
    if delta_h.is_nan() {
        return 0.0;
    }
    (-delta_h / (k_b * temperature)).exp().min(1.0)
}

/// Result of one HMC transition.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    /// The particle's phase point after the step (the fresh thermal momentum
    /// is kept on rejection).
    pub point: PhasePoint,
    /// `H` at the returned phase point.
    pub energy: f64,
    pub accepted: bool,
    /// The trajectory hit a non-finite gradient or an energy jump beyond
    /// [`DIVERGENCE_FACTOR`] times `k_B T`.
    pub diverged: bool,
}

/// One HMC transition starting from position `q`: draw a thermal momentum,
/// integrate a leapfrog trajectory, then accept or reject.
pub fn hmc_step_from<R: Rng + ?Sized>(
    q: &[f64],
    model: &ModelSpec,
    config: &KernelConfig,
    temperature: f64,
    rng: &mut R,
) -> Result<StepOutcome> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::invalid("temperature must be positive"));
    }
    let momentum = sample_momentum(q.len(), temperature, config, rng)?;
    let start = PhasePoint {
        q: q.to_vec(),
        p: momentum,
    };
    let h0 = hamiltonian_raw(&start.q, &start.p, model, config);

    let proposal = match leapfrog(&start, model, config) {
        Ok(point) => point,
        Err(Error::IntegrationDiverged { .. }) => {
            return Ok(StepOutcome {
                point: start,
                energy: h0,
                accepted: false,
                diverged: true,
            });
        }
        Err(e) => return Err(e),
    };

    let h1 = hamiltonian_raw(&proposal.q, &proposal.p, model, config);
    let delta_h = h1 - h0;
    let diverged = !h1.is_finite()
        || !delta_h.is_finite()
        || delta_h.abs() > DIVERGENCE_FACTOR * config.k_b * temperature;

    let accepted = !diverged
        && rng.random::<f64>() < acceptance_probability(delta_h, temperature, config.k_b);

    if accepted {
        let mut point = proposal;
        if config.invert_momentum_on_accept {
            for pi in &mut point.p {
                *pi = -*pi;
            }
        }
        Ok(StepOutcome {
            point,
            energy: h1,
            accepted: true,
            diverged: false,
        })
    } else {
        Ok(StepOutcome {
            point: start,
            energy: h0,
            accepted: false,
            diverged,
        })
    }
}

/// [`hmc_step_from`] taking a full phase point; the stored momentum is
/// replaced by the thermal draw.
pub fn hmc_step<R: Rng + ?Sized>(
    point: &PhasePoint,
    model: &ModelSpec,
    config: &KernelConfig,
    temperature: f64,
    rng: &mut R,
) -> Result<StepOutcome> {
    hmc_step_from(&point.q, model, config, temperature, rng)
}
