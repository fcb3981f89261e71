//! Sequential Monte Carlo over a thermal particle ensemble.
//!
//! Each iteration propagates every particle with HMC, renormalizes energies
//! by subtracting the ensemble minimum (the energy origin is arbitrary, and
//! the shift keeps the exponentials in range), converts energies to Boltzmann
//! weights, records the weighted ensemble mean in constrained space, and
//! resamples when the effective sample size drops below a threshold fraction
//! of the ensemble. The final estimate is a moving average of the stored
//! per-iteration means, weighted by the stored minimum energies.

use std::time::{Duration, Instant};

use rand::Rng;

use crate::error::{Error, Result};
use crate::hmc::{hamiltonian_raw, sample_momentum, KernelConfig};
use crate::model::ModelSpec;
use crate::parallel::{propagate_shards, reduce_ensemble, SeedPlan, ShardPlan};

/// One ensemble member: a position in unconstrained parameter space with its
/// auxiliary momentum, total energy, and importance weight.
#[derive(Clone, Debug)]
pub struct Particle {
    pub position: Vec<f64>,
    pub momentum: Vec<f64>,
    /// `H(q, p)` of the particle, possibly shifted by the ensemble minimum.
    pub energy: f64,
    pub weight: f64,
}

/// The population of particles evolved jointly, at a fixed temperature.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub particles: Vec<Particle>,
    pub temperature: f64,
    pub k_b: f64,
    /// Completed SMC iterations.
    pub iteration: u64,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.particles.iter().map(|p| p.energy).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.particles.iter().map(|p| p.weight).collect()
    }
}

/// How resampling duplicates the surviving particles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResampleMethod {
    /// Independent categorical draws from the survivor weights.
    Multinomial,
    /// One uniform offset, then equally spaced points through the cumulative
    /// survivor weights; lower variance than multinomial.
    Systematic,
}

/// Orchestrator settings for one SMC run.
#[derive(Clone, Copy, Debug)]
pub struct SmcConfig {
    /// Resample when `ESS < ess_threshold * N`.
    pub ess_threshold: f64,
    pub resampler: ResampleMethod,
    /// HMC transitions per particle per SMC iteration.
    pub hmc_calls_per_iteration: usize,
}

impl Default for SmcConfig {
    fn default() -> Self {
        Self {
            ess_threshold: 0.5,
            resampler: ResampleMethod::Multinomial,
            hmc_calls_per_iteration: 1,
        }
    }
}

impl SmcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ess_threshold.is_finite() && (0.0..=1.0).contains(&self.ess_threshold)) {
            return Err(Error::invalid("ess_threshold must lie in [0, 1]"));
        }
        if self.hmc_calls_per_iteration == 0 {
            return Err(Error::invalid("hmc_calls_per_iteration must be at least 1"));
        }
        Ok(())
    }
}

/// Per-iteration diagnostics and the stored quantities the final estimator
/// consumes.
#[derive(Clone, Debug)]
pub struct TraceRecord {
    /// 1-based SMC iteration index.
    pub iteration: u64,
    /// Minimum particle energy before the renormalization subtracted it.
    pub e_min: f64,
    /// Boltzmann-weighted ensemble mean in constrained space.
    pub mean_params: Vec<f64>,
    pub ess: f64,
    pub resampled: bool,
    pub acceptance_rate: f64,
    pub divergences: usize,
    pub wall_time: Duration,
}

/// Draw a fresh ensemble: positions i.i.d. standard normal on `R^d`, momenta
/// thermal at `T`, uniform weights, energies from the Hamiltonian.
pub fn init_ensemble<R: Rng + ?Sized>(
    n_particles: usize,
    model: &ModelSpec,
    temperature: f64,
    config: &KernelConfig,
    rng: &mut R,
) -> Result<Ensemble> {
    if n_particles == 0 {
        return Err(Error::invalid("ensemble needs at least one particle"));
    }
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::invalid("temperature must be positive"));
    }
    config.validate()?;
    let dim = model.dim();
    let weight = 1.0 / n_particles as f64;
    let mut particles = Vec::with_capacity(n_particles);
    for _ in 0..n_particles {
        let position: Vec<f64> = (0..dim)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let momentum = sample_momentum(dim, temperature, config, rng)?;
        let energy = hamiltonian_raw(&position, &momentum, model, config);
        particles.push(Particle {
            position,
            momentum,
            energy,
            weight,
        });
    }
    Ok(Ensemble {
        particles,
        temperature,
        k_b: config.k_b,
        iteration: 0,
    })
}

/// Subtract the minimum energy from every particle and return it.
///
/// The weights are unchanged by this shift (the Boltzmann ratio cancels it);
/// the subtraction just pins the scale so exponentials stay representable.
pub fn renormalize_energies(ensemble: &mut Ensemble) -> f64 {
    let e_min = ensemble
        .particles
        .iter()
        .map(|p| p.energy)
        .fold(f64::INFINITY, f64::min);
    for p in &mut ensemble.particles {
        p.energy -= e_min;
    }
    e_min
}

/// Boltzmann weights `exp(-E_i / (k_B T))`, normalized to sum to one.
///
/// The minimum energy is subtracted before exponentiating, so at least one
/// un-normalized weight is exactly 1 and the sum can never underflow.
pub fn weights_from_energies(energies: &[f64], temperature: f64, k_b: f64) -> Result<Vec<f64>> {
    if energies.is_empty() {
        return Err(Error::invalid("no energies given"));
    }
    if !(temperature.is_finite() && temperature > 0.0) || !(k_b.is_finite() && k_b > 0.0) {
        return Err(Error::invalid("temperature and k_b must be positive"));
    }
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::invalid("energies must be finite"));
    }
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = k_b * temperature;
    let mut weights: Vec<f64> = energies
        .iter()
        .map(|e| (-(e - e_min) / scale).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

/// Effective sample size `(sum w)^2 / sum w^2`; equals `1 / sum w^2` for
/// normalized weights and lies in `[1, N]`.
pub fn effective_size(weights: &[f64]) -> Result<f64> {
    if weights.is_empty() {
        return Err(Error::invalid("no weights given"));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::invalid("weights must be finite and non-negative"));
    }
    let total: f64 = weights.iter().sum();
    let total_sq: f64 = weights.iter().map(|w| w * w).sum();
    if total_sq == 0.0 {
        return Err(Error::invalid("weights sum to zero"));
    }
    Ok(total * total / total_sq)
}

/// Replace the ensemble with duplicates of its highest-weight particles.
///
/// The `ceil(ESS)` largest-weight particles survive; the ensemble is refilled
/// by drawing from them proportionally to their weights. Momenta are reset to
/// the thermal distribution, weights to exactly `1/N`, and energies are
/// recomputed from the fresh phase points.
pub fn resample<R: Rng + ?Sized>(
    ensemble: &mut Ensemble,
    model: &ModelSpec,
    config: &KernelConfig,
    method: ResampleMethod,
    rng: &mut R,
) -> Result<()> {
    let n = ensemble.len();
    if n == 0 {
        return Err(Error::invalid("cannot resample an empty ensemble"));
    }
    let weights = ensemble.weights();
    let ess = effective_size(&weights)?;
    let n_survivors = (ess.ceil() as usize).clamp(1, n);

    // stable sort: ties keep index order, so the survivor set is deterministic
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| weights[b].partial_cmp(&weights[a]).expect("finite weights"));
    let survivors = &order[..n_survivors];

    let mut cumulative = Vec::with_capacity(n_survivors);
    let mut total = 0.0;
    for &idx in survivors {
        total += weights[idx];
        cumulative.push(total);
    }

    let pick = |u: f64| -> usize {
        let slot = cumulative.partition_point(|&c| c <= u);
        survivors[slot.min(n_survivors - 1)]
    };
    let chosen: Vec<usize> = match method {
        ResampleMethod::Multinomial => (0..n).map(|_| pick(rng.random::<f64>() * total)).collect(),
        ResampleMethod::Systematic => {
            let stride = total / n as f64;
            let offset = rng.random::<f64>() * stride;
            (0..n)
                .map(|slot| pick(offset + stride * slot as f64))
                .collect()
        }
    };

    let positions: Vec<Vec<f64>> = chosen
        .iter()
        .map(|&idx| ensemble.particles[idx].position.clone())
        .collect();
    let uniform = 1.0 / n as f64;
    let temperature = ensemble.temperature;
    for (particle, position) in ensemble.particles.iter_mut().zip(positions) {
        let momentum = sample_momentum(position.len(), temperature, config, rng)?;
        particle.energy = hamiltonian_raw(&position, &momentum, model, config);
        particle.position = position;
        particle.momentum = momentum;
        particle.weight = uniform;
    }
    Ok(())
}

/// One full SMC iteration: propagate, renormalize, weight, average, and
/// resample if the effective size fell below the threshold.
pub fn smc_iterate(
    ensemble: &mut Ensemble,
    model: &ModelSpec,
    kernel: &KernelConfig,
    smc: &SmcConfig,
    plan: &ShardPlan,
    seeds: &SeedPlan,
) -> Result<TraceRecord> {
    smc.validate()?;
    let started = Instant::now();
    ensemble.iteration += 1;

    let stats = propagate_shards(
        ensemble,
        plan,
        model,
        kernel,
        smc.hmc_calls_per_iteration,
        seeds,
    )?;

    let reduction = reduce_ensemble(
        &ensemble.particles,
        model,
        ensemble.temperature,
        ensemble.k_b,
    )?;
    let e_min = renormalize_energies(ensemble);

    let energies = ensemble.energies();
    let weights = weights_from_energies(&energies, ensemble.temperature, ensemble.k_b)?;
    for (particle, w) in ensemble.particles.iter_mut().zip(&weights) {
        particle.weight = *w;
    }
    let ess = effective_size(&weights)?;

    let n = ensemble.len();
    let resampled = ess < smc.ess_threshold * n as f64;
    if resampled {
        let mut rng = seeds.resample_rng(ensemble.iteration);
        resample(ensemble, model, kernel, smc.resampler, &mut rng)?;
    }

    let attempts = n * smc.hmc_calls_per_iteration;
    Ok(TraceRecord {
        iteration: ensemble.iteration,
        e_min,
        mean_params: reduction.mean_params,
        ess,
        resampled,
        acceptance_rate: stats.accepted as f64 / attempts as f64,
        divergences: stats.divergences,
        wall_time: started.elapsed(),
    })
}

/// Moving average of the stored per-iteration means, weighted by the stored
/// minimum energies through the Boltzmann factor.
///
/// The global minimum of the stored energies is subtracted first; the energy
/// origin is free, so the estimate is invariant under a common shift.
pub fn weighted_estimate(trace: &[TraceRecord], temperature: f64, k_b: f64) -> Result<Vec<f64>> {
    if trace.is_empty() {
        return Err(Error::invalid("trace is empty, nothing to estimate"));
    }
    if !(temperature.is_finite() && temperature > 0.0) || !(k_b.is_finite() && k_b > 0.0) {
        return Err(Error::invalid("temperature and k_b must be positive"));
    }
    let dim = trace[0].mean_params.len();
    if trace.iter().any(|r| r.mean_params.len() != dim) {
        return Err(Error::invalid("trace records disagree on dimension"));
    }
    let e_ref = trace.iter().map(|r| r.e_min).fold(f64::INFINITY, f64::min);
    let scale = k_b * temperature;
    let mut total = 0.0;
    let mut estimate = vec![0.0; dim];
    for record in trace {
        let w = (-(record.e_min - e_ref) / scale).exp();
        total += w;
        for (acc, m) in estimate.iter_mut().zip(&record.mean_params) {
            *acc += w * m;
        }
    }
    for acc in &mut estimate {
        *acc /= total;
    }
    Ok(estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ct_model, gaussian_toy, CoinTossData};
    use crate::parallel::partition;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn record(e_min: f64, mean: Vec<f64>) -> TraceRecord {
        TraceRecord {
            iteration: 0,
            e_min,
            mean_params: mean,
            ess: 1.0,
            resampled: false,
            acceptance_rate: 1.0,
            divergences: 0,
            wall_time: Duration::ZERO,
        }
    }

    #[test]
    fn init_uniform_weights_and_determinism() {
        let model = gaussian_toy(2).unwrap();
        let cfg = KernelConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ensemble = init_ensemble(4, &model, 1.0, &cfg, &mut rng).unwrap();
        assert_eq!(ensemble.len(), 4);
        for p in &ensemble.particles {
            assert_eq!(p.weight, 0.25);
        }
        let mut rng2 = ChaCha8Rng::seed_from_u64(5);
        let again = init_ensemble(4, &model, 1.0, &cfg, &mut rng2).unwrap();
        for (a, b) in ensemble.particles.iter().zip(&again.particles) {
            assert_eq!(a.position, b.position);
            assert_eq!(a.momentum, b.momentum);
            assert_eq!(a.energy, b.energy);
        }
        assert!(init_ensemble(0, &model, 1.0, &cfg, &mut rng).is_err());
        assert!(init_ensemble(4, &model, 0.0, &cfg, &mut rng).is_err());
    }

    #[test]
    fn init_position_moments_are_standard_normal() {
        let model = gaussian_toy(1).unwrap();
        let cfg = KernelConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ensemble = init_ensemble(100_000, &model, 1.0, &cfg, &mut rng).unwrap();
        let n = ensemble.len() as f64;
        let mean: f64 = ensemble.particles.iter().map(|p| p.position[0]).sum::<f64>() / n;
        let var: f64 = ensemble
            .particles
            .iter()
            .map(|p| (p.position[0] - mean).powi(2))
            .sum::<f64>()
            / n;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((0.98..=1.02).contains(&var), "variance {var}");
    }

    #[test]
    fn renormalize_reference_case() {
        let model = gaussian_toy(1).unwrap();
        let cfg = KernelConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ensemble = init_ensemble(3, &model, 1.0, &cfg, &mut rng).unwrap();
        for (p, e) in ensemble.particles.iter_mut().zip([3.0, 5.0, 7.0]) {
            p.energy = e;
        }
        let e_min = renormalize_energies(&mut ensemble);
        assert_eq!(e_min, 3.0);
        assert_eq!(ensemble.energies(), vec![0.0, 2.0, 4.0]);

        // degenerate: all equal
        for p in &mut ensemble.particles {
            p.energy = 1.25;
        }
        assert_eq!(renormalize_energies(&mut ensemble), 1.25);
        assert_eq!(ensemble.energies(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn weights_reference_cases() {
        let w = weights_from_energies(&[2.0, 2.0, 2.0, 2.0], 1.0, 1.0).unwrap();
        assert_eq!(w, vec![0.25; 4]);

        let w = weights_from_energies(&[0.0, 2.0_f64.ln()], 1.0, 1.0).unwrap();
        assert_relative_eq!(w[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(w[1], 1.0 / 3.0, epsilon = 1e-15);

        // high-temperature limit flattens the weights
        let w = weights_from_energies(&[0.0, 5.0, 9.0], 1e9, 1.0).unwrap();
        for wi in w {
            assert_relative_eq!(wi, 1.0 / 3.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn weights_are_shift_invariant_and_normalized() {
        let energies = [4.0, 9.5, 3.2, 100.0, 3.9];
        let base = weights_from_energies(&energies, 2.0, 1.5).unwrap();
        assert_relative_eq!(base.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        let shifted: Vec<f64> = energies.iter().map(|e| e + 123.456).collect();
        let moved = weights_from_energies(&shifted, 2.0, 1.5).unwrap();
        for (a, b) in base.iter().zip(&moved) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn weights_survive_huge_energy_spread() {
        // Without the min-subtraction all of these would underflow.
        let w = weights_from_energies(&[5000.0, 5100.0, 6000.0], 1.0, 1.0).unwrap();
        assert!(w[0] > 0.99);
        assert_relative_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn effective_size_reference_cases() {
        assert_eq!(effective_size(&[0.125; 8]).unwrap(), 8.0);
        assert_eq!(effective_size(&[0.0, 1.0, 0.0]).unwrap(), 1.0);
        assert_relative_eq!(
            effective_size(&[2.0 / 3.0, 1.0 / 3.0]).unwrap(),
            1.8,
            epsilon = 1e-12
        );
        assert!(effective_size(&[0.0, 0.0]).is_err());
        assert!(effective_size(&[]).is_err());
    }

    fn weighted_ensemble(weights: &[f64]) -> (Ensemble, ModelSpec, KernelConfig) {
        let model = gaussian_toy(2).unwrap();
        let cfg = KernelConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut ensemble = init_ensemble(weights.len(), &model, 1.0, &cfg, &mut rng).unwrap();
        for (p, &w) in ensemble.particles.iter_mut().zip(weights) {
            p.weight = w;
        }
        (ensemble, model, cfg)
    }

    #[test]
    fn resample_restores_uniform_weights_and_size() {
        let weights = [0.5, 0.2, 0.15, 0.1, 0.05];
        let (mut ensemble, model, cfg) = weighted_ensemble(&weights);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        resample(&mut ensemble, &model, &cfg, ResampleMethod::Multinomial, &mut rng).unwrap();
        assert_eq!(ensemble.len(), 5);
        for p in &ensemble.particles {
            assert_eq!(p.weight, 0.2);
            let expected = hamiltonian_raw(&p.position, &p.momentum, &model, &cfg);
            assert_eq!(p.energy, expected);
        }
    }

    #[test]
    fn resample_degenerate_dominance_copies_the_heavy_particle() {
        let mut weights = vec![1e-12; 8];
        weights[3] = 1.0 - 7e-12;
        let (mut ensemble, model, cfg) = weighted_ensemble(&weights);
        let heavy = ensemble.particles[3].position.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        resample(&mut ensemble, &model, &cfg, ResampleMethod::Multinomial, &mut rng).unwrap();
        for p in &ensemble.particles {
            assert_eq!(p.position, heavy);
        }
    }

    #[test]
    fn resample_uniform_weights_draws_from_everyone() {
        let (mut ensemble, model, cfg) = weighted_ensemble(&[0.125; 8]);
        let originals: Vec<Vec<f64>> = ensemble
            .particles
            .iter()
            .map(|p| p.position.clone())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        resample(&mut ensemble, &model, &cfg, ResampleMethod::Multinomial, &mut rng).unwrap();
        for p in &ensemble.particles {
            assert!(originals.contains(&p.position));
        }
    }

    #[test]
    fn systematic_resampling_keeps_the_contract() {
        let weights = [0.4, 0.3, 0.2, 0.1];
        let (mut ensemble, model, cfg) = weighted_ensemble(&weights);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        resample(&mut ensemble, &model, &cfg, ResampleMethod::Systematic, &mut rng).unwrap();
        assert_eq!(ensemble.len(), 4);
        for p in &ensemble.particles {
            assert_eq!(p.weight, 0.25);
        }
    }

    #[test]
    fn resampled_momenta_are_thermal() {
        let temperature = 2.5;
        let model = gaussian_toy(2).unwrap();
        let cfg = KernelConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut ensemble = init_ensemble(4096, &model, temperature, &cfg, &mut rng).unwrap();
        let uniform = 1.0 / 4096.0;
        for p in &mut ensemble.particles {
            p.weight = uniform;
        }
        resample(&mut ensemble, &model, &cfg, ResampleMethod::Multinomial, &mut rng).unwrap();
        let count = (ensemble.len() * 2) as f64;
        let var: f64 = ensemble
            .particles
            .iter()
            .flat_map(|p| p.momentum.iter().map(|x| x * x))
            .sum::<f64>()
            / count;
        let expected = cfg.mass * cfg.k_b * temperature;
        let tol = 5.0 * (2.0_f64 / count).sqrt() * expected;
        assert!(
            (var - expected).abs() < tol,
            "momentum variance {var} vs {expected} (tol {tol})"
        );
    }

    #[test]
    fn weighted_estimate_reference_cases() {
        let single = [record(3.0, vec![1.0, 2.0])];
        assert_eq!(weighted_estimate(&single, 1.0, 1.0).unwrap(), vec![1.0, 2.0]);

        let equal = [record(5.0, vec![1.0, 0.0]), record(5.0, vec![3.0, 1.0])];
        assert_eq!(weighted_estimate(&equal, 1.0, 1.0).unwrap(), vec![2.0, 0.5]);

        // e_min gap of k_B T ln 9 weights the records 0.9 / 0.1
        let gap = [
            record(0.0, vec![1.0]),
            record(2.0 * 1.5 * 9.0_f64.ln(), vec![2.0]),
        ];
        let est = weighted_estimate(&gap, 1.5, 2.0).unwrap();
        assert_relative_eq!(est[0], 0.9 + 0.1 * 2.0, epsilon = 1e-12);

        assert!(weighted_estimate(&[], 1.0, 1.0).is_err());
    }

    #[test]
    fn weighted_estimate_shift_invariance() {
        let trace = [
            record(10.0, vec![0.4]),
            record(12.5, vec![0.6]),
            record(11.0, vec![0.5]),
        ];
        let shifted: Vec<TraceRecord> = trace
            .iter()
            .map(|r| record(r.e_min + 500.0, r.mean_params.clone()))
            .collect();
        let a = weighted_estimate(&trace, 1.0, 1.0).unwrap();
        let b = weighted_estimate(&shifted, 1.0, 1.0).unwrap();
        assert_relative_eq!(a[0], b[0], epsilon = 1e-12);
    }

    #[test]
    fn iterate_flags_resampling_exactly_at_threshold() {
        let data = CoinTossData::new(40, [20, 30]).unwrap();
        let model = ct_model(&data);
        let kernel = KernelConfig {
            step_size: 0.05,
            n_leapfrog: 20,
            ..KernelConfig::default()
        };
        let smc = SmcConfig::default();
        let seeds = SeedPlan::new(42);
        let plan = partition(64, 1).unwrap();
        let mut ensemble =
            init_ensemble(64, &model, 1.0, &kernel, &mut seeds.init_rng()).unwrap();
        for _ in 0..5 {
            let before = ensemble.clone();
            let rec = smc_iterate(&mut ensemble, &model, &kernel, &smc, &plan, &seeds).unwrap();
            assert_eq!(rec.resampled, rec.ess < smc.ess_threshold * 64.0);
            assert!(rec.ess >= 1.0 && rec.ess <= 64.0);
            assert!((0.0..=1.0).contains(&rec.acceptance_rate));
            assert_eq!(ensemble.len(), before.len());
        }
        assert_eq!(ensemble.iteration, 5);
    }

    #[test]
    fn iterate_on_flat_potential_keeps_ess_high() {
        use crate::model::Support;
        // Constant V: energy differences are kinetic only, so after the
        // renormalization the weights stay spread and ESS near N.
        let model = ModelSpec::new(
            1,
            vec!["x".into()],
            vec![Support::Real],
            |_| 0.0,
            |_, out| out.fill(0.0),
        );
        let kernel = KernelConfig {
            step_size: 0.1,
            n_leapfrog: 5,
            ..KernelConfig::default()
        };
        let smc = SmcConfig::default();
        let seeds = SeedPlan::new(7);
        let n = 256;
        let plan = partition(n, 1).unwrap();
        let mut ensemble =
            init_ensemble(n, &model, 1.0, &kernel, &mut seeds.init_rng()).unwrap();
        let rec = smc_iterate(&mut ensemble, &model, &kernel, &smc, &plan, &seeds).unwrap();
        // kinetic-only weights in 1-D keep ESS around 2N/3
        assert!(rec.ess > 0.5 * n as f64, "ess {}", rec.ess);
        assert_eq!(rec.acceptance_rate, 1.0);
    }
}
