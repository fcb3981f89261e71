//! Deterministic data-parallel particle propagation.
//!
//! Every particle's HMC update draws from a generator stream derived only
//! from the root seed, the iteration index, and the particle index — never
//! from worker identity or scheduling. Reductions after the gather run in
//! fixed particle-index order. Together these make full traces bit-identical
//! across worker counts and across runs.

use std::ops::Range;
use std::thread;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hmc::{hmc_step_from, KernelConfig};
use crate::model::ModelSpec;
use crate::smc::{Ensemble, Particle};

const TAG_INIT: u64 = 0x01;
const TAG_PROPAGATE: u64 = 0x02;
const TAG_RESAMPLE: u64 = 0x03;

/// SplitMix64 finalizer; scrambles stream labels into seeds.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based generator streams for one run.
///
/// Each (purpose, iteration, particle) triple owns an independent stream, so
/// concurrent propagation is race-free by construction and the draw sequence
/// does not depend on how particles are assigned to workers.
#[derive(Clone, Copy, Debug)]
pub struct SeedPlan {
    root: u64,
}

impl SeedPlan {
    pub fn new(root_seed: u64) -> Self {
        Self { root: root_seed }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    fn stream(&self, tag: u64, a: u64, b: u64) -> ChaCha8Rng {
        let mut seed = mix64(self.root ^ 0x517C_C1B7_2722_0A95);
        seed = mix64(seed ^ tag);
        seed = mix64(seed ^ a);
        seed = mix64(seed ^ b);
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// Stream for drawing the initial ensemble.
    pub fn init_rng(&self) -> ChaCha8Rng {
        self.stream(TAG_INIT, 0, 0)
    }

    /// Stream for one particle's HMC transitions within one iteration.
    pub fn particle_rng(&self, iteration: u64, particle: usize) -> ChaCha8Rng {
        self.stream(TAG_PROPAGATE, iteration, particle as u64)
    }

    /// Stream for the resampling draws and momentum reset of one iteration.
    pub fn resample_rng(&self, iteration: u64) -> ChaCha8Rng {
        self.stream(TAG_RESAMPLE, iteration, 0)
    }
}

/// Contiguous, balanced assignment of particle indices to workers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShardPlan {
    n_particles: usize,
    ranges: Vec<Range<usize>>,
}

impl ShardPlan {
    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn n_workers(&self) -> usize {
        self.ranges.len()
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }
}

/// Split `[0, n_particles)` into `n_workers` contiguous ranges whose sizes
/// differ by at most one.
pub fn partition(n_particles: usize, n_workers: usize) -> Result<ShardPlan> {
    if n_particles == 0 {
        return Err(Error::invalid("need at least one particle"));
    }
    if n_workers == 0 {
        return Err(Error::invalid("need at least one worker"));
    }
    if n_workers > n_particles {
        return Err(Error::invalid(format!(
            "{n_workers} workers for {n_particles} particles"
        )));
    }
    let base = n_particles / n_workers;
    let extra = n_particles % n_workers;
    let mut ranges = Vec::with_capacity(n_workers);
    let mut start = 0;
    for worker in 0..n_workers {
        let len = base + usize::from(worker < extra);
        ranges.push(start..start + len);
        start += len;
    }
    Ok(ShardPlan {
        n_particles,
        ranges,
    })
}

/// Accepted-transition and divergence counts summed over all particles.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PropagationStats {
    pub accepted: usize,
    pub divergences: usize,
}

/// Propagate every particle through `hmc_calls` HMC transitions, shard by
/// shard on scoped threads.
///
/// Any worker error aborts the whole iteration; the ensemble must then be
/// considered torn and discarded.
pub fn propagate_shards(
    ensemble: &mut Ensemble,
    plan: &ShardPlan,
    model: &ModelSpec,
    kernel: &KernelConfig,
    hmc_calls: usize,
    seeds: &SeedPlan,
) -> Result<PropagationStats> {
    if plan.n_particles() != ensemble.len() {
        return Err(Error::invalid(format!(
            "plan covers {} particles, ensemble has {}",
            plan.n_particles(),
            ensemble.len()
        )));
    }
    if hmc_calls == 0 {
        return Err(Error::invalid("hmc_calls must be at least 1"));
    }
    let temperature = ensemble.temperature;
    let iteration = ensemble.iteration;

    let mut shards: Vec<(Range<usize>, &mut [Particle])> = Vec::with_capacity(plan.n_workers());
    let mut rest = ensemble.particles.as_mut_slice();
    for range in plan.ranges() {
        let (head, tail) = rest.split_at_mut(range.len());
        shards.push((range.clone(), head));
        rest = tail;
    }

    let outcomes: Vec<Result<PropagationStats>> = thread::scope(|scope| {
        let handles: Vec<_> = shards
            .into_iter()
            .map(|(range, shard)| {
                scope.spawn(move || -> Result<PropagationStats> {
                    let mut stats = PropagationStats::default();
                    for (offset, particle) in shard.iter_mut().enumerate() {
                        let mut rng = seeds.particle_rng(iteration, range.start + offset);
                        for _ in 0..hmc_calls {
                            let out = hmc_step_from(
                                &particle.position,
                                model,
                                kernel,
                                temperature,
                                &mut rng,
                            )?;
                            particle.position = out.point.q;
                            particle.momentum = out.point.p;
                            particle.energy = out.energy;
                            stats.accepted += usize::from(out.accepted);
                            stats.divergences += usize::from(out.diverged);
                        }
                    }
                    Ok(stats)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("propagation worker panicked"))
            .collect()
    });

    let mut total = PropagationStats::default();
    for outcome in outcomes {
        let stats = outcome?;
        total.accepted += stats.accepted;
        total.divergences += stats.divergences;
    }
    Ok(total)
}

/// Fixed-order reduction over freshly propagated particles.
#[derive(Clone, Debug)]
pub struct EnsembleReduction {
    /// Minimum particle energy, before any subtraction.
    pub e_min: f64,
    /// Boltzmann-weighted mean of the constrained-space positions.
    pub mean_params: Vec<f64>,
    /// Sum of the un-normalized Boltzmann factors `exp(-(E_i - e_min)/(k_B T))`.
    pub weight_sum: f64,
}

/// Compute minimum energy, weight sum, and the weighted constrained-space
/// mean in particle-index order, independent of how many workers propagated
/// the particles.
pub fn reduce_ensemble(
    particles: &[Particle],
    model: &ModelSpec,
    temperature: f64,
    k_b: f64,
) -> Result<EnsembleReduction> {
    if particles.is_empty() {
        return Err(Error::invalid("no particles to reduce"));
    }
    if !(temperature.is_finite() && temperature > 0.0) || !(k_b.is_finite() && k_b > 0.0) {
        return Err(Error::invalid("temperature and k_b must be positive"));
    }
    let e_min = particles
        .iter()
        .map(|p| p.energy)
        .fold(f64::INFINITY, f64::min);
    let scale = k_b * temperature;
    let mut weight_sum = 0.0;
    let mut mean = vec![0.0; model.dim()];
    let mut constrained = vec![0.0; model.dim()];
    for particle in particles {
        let w = (-(particle.energy - e_min) / scale).exp();
        weight_sum += w;
        model.to_support_into(&particle.position, &mut constrained);
        for (acc, x) in mean.iter_mut().zip(&constrained) {
            *acc += w * x;
        }
    }
    for acc in &mut mean {
        *acc /= weight_sum;
    }
    Ok(EnsembleReduction {
        e_min,
        mean_params: mean,
        weight_sum,
    })
}
