//! Two independent coins observed for a fixed number of tosses each.
//!
//! With a uniform prior on each bias the posterior is a product of Beta
//! densities and the MAP estimator is `K/N` per coin, which makes this model
//! a closed-form check of the potential and its gradients.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::model::{sigmoid, softplus, ModelSpec, Support};

/// Head counts for two coins tossed `n_obs` times each.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoinTossData {
    n_obs: u32,
    heads: [u32; 2],
}

impl CoinTossData {
    /// `n_obs = 0` is allowed (prior-only model); head counts may not exceed
    /// the number of observations.
    pub fn new(n_obs: u32, heads: [u32; 2]) -> Result<Self> {
        if let Some(k) = heads.iter().find(|&&k| k > n_obs) {
            return Err(Error::invalid(format!(
                "{k} heads observed in {n_obs} tosses"
            )));
        }
        Ok(Self { n_obs, heads })
    }

    pub fn n_obs(&self) -> u32 {
        self.n_obs
    }

    pub fn heads(&self) -> [u32; 2] {
        self.heads
    }
}

/// Posterior of the two-coin model as a potential on `R^2`.
///
/// In unconstrained coordinates with `p_i = sigmoid(q_i)` the potential
/// collapses to `(K_i+1) softplus(-q_i) + (N-K_i+1) softplus(q_i)`, which is
/// finite for every finite `q` and has its stationary point at
/// `p_i = (K_i+1)/(N+2)`.
pub fn ct_model(data: &CoinTossData) -> ModelSpec {
    let n = f64::from(data.n_obs);
    let heads = [f64::from(data.heads[0]), f64::from(data.heads[1])];

    let potential = move |q: &[f64]| -> f64 {
        q.iter()
            .zip(heads)
            .map(|(&qi, k)| (k + 1.0) * softplus(-qi) + (n - k + 1.0) * softplus(qi))
            .sum()
    };
    let gradient = move |q: &[f64], out: &mut [f64]| {
        for ((&qi, k), g) in q.iter().zip(heads).zip(out.iter_mut()) {
            *g = (n + 2.0) * sigmoid(qi) - (k + 1.0);
        }
    };

    let model = ModelSpec::new(
        2,
        vec!["p1".into(), "p2".into()],
        vec![Support::UnitInterval, Support::UnitInterval],
        potential,
        gradient,
    );
    match ct_map(data) {
        Ok(map) => model.with_truth(map.to_vec()),
        Err(_) => model,
    }
}

/// Maximum a-posteriori bias estimates `(K_1/N, K_2/N)`.
pub fn ct_map(data: &CoinTossData) -> Result<[f64; 2]> {
    if data.n_obs == 0 {
        return Err(Error::invalid(
            "MAP estimator undefined without observations",
        ));
    }
    let n = f64::from(data.n_obs);
    Ok(data.heads.map(|k| f64::from(k) / n))
}

/// Draw head counts for both coins from seeded binomials.
pub fn ct_generate(p_true: [f64; 2], n_obs: u32, seed: u64) -> Result<CoinTossData> {
    if p_true.iter().any(|p| !(p.is_finite() && 0.0 < *p && *p < 1.0)) {
        return Err(Error::invalid("true biases must lie in (0, 1)"));
    }
    if n_obs == 0 {
        return Err(Error::invalid("need at least one observation"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut heads = [0u32; 2];
    for (h, p) in heads.iter_mut().zip(p_true) {
        let binomial = Binomial::new(u64::from(n_obs), p).expect("bias validated above");
        *h = binomial.sample(&mut rng) as u32;
    }
    CoinTossData::new(n_obs, heads)
}
