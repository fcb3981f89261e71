//! Item response theory, two-parameter logistic model.
//!
//! Each person `p` answers each item `i` correctly with probability
//! `sigmoid(a_i (theta_p - b_i))`: `theta` is ability, `a` discrimination,
//! `b` difficulty. Priors are `theta ~ N(0,1)`, `b ~ N(0,1)` and
//! `ln a ~ N(0,1)`; with the exponential bijection for `a` the lognormal's
//! `1/a` factor cancels against the Jacobian, so every unconstrained
//! coordinate carries a plain standard-normal penalty.
//!
//! Parameter layout: `[theta_1..theta_P, ln a_1..ln a_I, b_1..b_I]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{sigmoid, softplus, ModelSpec, Support};

/// Binary response matrix, one row per person, one column per item.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IrtData {
    n_persons: usize,
    n_items: usize,
    responses: Vec<u8>, // row-major P x I
}

impl IrtData {
    pub fn new(n_persons: usize, n_items: usize, responses: Vec<u8>) -> Result<Self> {
        if n_persons == 0 || n_items == 0 {
            return Err(Error::invalid("need at least one person and one item"));
        }
        if responses.len() != n_persons * n_items {
            return Err(Error::invalid(format!(
                "expected {} responses for {n_persons} persons x {n_items} items, got {}",
                n_persons * n_items,
                responses.len()
            )));
        }
        if responses.iter().any(|&r| r > 1) {
            return Err(Error::invalid("responses must be 0 or 1"));
        }
        Ok(Self {
            n_persons,
            n_items,
            responses,
        })
    }

    pub fn n_persons(&self) -> usize {
        self.n_persons
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn response(&self, person: usize, item: usize) -> u8 {
        self.responses[person * self.n_items + item]
    }

    pub fn responses(&self) -> &[u8] {
        &self.responses
    }

    /// Model dimension for this dataset: one ability per person plus
    /// discrimination and difficulty per item.
    pub fn dim(&self) -> usize {
        self.n_persons + 2 * self.n_items
    }
}

/// Probability of a correct response, `sigmoid(a (theta - b))`.
pub fn irt_response_prob(theta: f64, a: f64, b: f64) -> f64 {
    sigmoid(a * (theta - b))
}

/// Posterior of the 2PL model as a potential on `R^(P + 2I)`.
pub fn irt_model(data: &IrtData) -> ModelSpec {
    let data = Arc::new(data.clone());
    let n_persons = data.n_persons;
    let n_items = data.n_items;
    let dim = data.dim();

    let mut names = Vec::with_capacity(dim);
    names.extend((1..=n_persons).map(|p| format!("theta{p}")));
    names.extend((1..=n_items).map(|i| format!("a{i}")));
    names.extend((1..=n_items).map(|i| format!("b{i}")));

    let mut supports = vec![Support::Real; n_persons];
    supports.extend(vec![Support::Positive; n_items]);
    supports.extend(vec![Support::Real; n_items]);

    let d = Arc::clone(&data);
    let potential = move |q: &[f64]| -> f64 {
        let (theta, rest) = q.split_at(n_persons);
        let (log_a, b) = rest.split_at(n_items);
        let mut v: f64 = q.iter().map(|x| 0.5 * x * x).sum();
        for item in 0..n_items {
            let a = log_a[item].exp();
            let b_i = b[item];
            for person in 0..n_persons {
                let z = a * (theta[person] - b_i);
                v += if d.response(person, item) == 1 {
                    softplus(-z)
                } else {
                    softplus(z)
                };
            }
        }
        v
    };

    let d = Arc::clone(&data);
    let gradient = move |q: &[f64], out: &mut [f64]| {
        out.copy_from_slice(q); // standard-normal priors
        let (theta, rest) = q.split_at(n_persons);
        let (log_a, b) = rest.split_at(n_items);
        for item in 0..n_items {
            let a = log_a[item].exp();
            let b_i = b[item];
            let mut resid_sum = 0.0;
            let mut resid_dist_sum = 0.0;
            for person in 0..n_persons {
                let dist = theta[person] - b_i;
                let resid = sigmoid(a * dist) - f64::from(d.response(person, item));
                out[person] += resid * a;
                resid_sum += resid;
                resid_dist_sum += resid * dist;
            }
            out[n_persons + item] += a * resid_dist_sum;
            out[n_persons + n_items + item] -= a * resid_sum;
        }
    };

    ModelSpec::new(dim, names, supports, potential, gradient)
}

fn sample_responses<R: Rng + ?Sized>(theta: &[f64], a: &[f64], b: &[f64], rng: &mut R) -> Vec<u8> {
    let mut responses = Vec::with_capacity(theta.len() * a.len());
    for &t in theta {
        for (&ai, &bi) in a.iter().zip(b) {
            let correct = rng.random::<f64>() < irt_response_prob(t, ai, bi);
            responses.push(u8::from(correct));
        }
    }
    responses
}

/// Draw a response matrix from given abilities and item parameters.
pub fn irt_generate(theta: &[f64], a: &[f64], b: &[f64], seed: u64) -> Result<IrtData> {
    if theta.is_empty() || a.is_empty() {
        return Err(Error::invalid("need at least one person and one item"));
    }
    if a.len() != b.len() {
        return Err(Error::invalid(
            "discrimination and difficulty counts differ",
        ));
    }
    if a.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
        return Err(Error::invalid("discriminations must be positive"));
    }
    if theta.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::invalid("abilities and difficulties must be finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    IrtData::new(theta.len(), a.len(), sample_responses(theta, a, b, &mut rng))
}

/// Draw abilities and item parameters from the model priors, then a response
/// matrix from them. Returns the data and the constrained-space truth
/// `[theta.., a.., b..]`.
pub fn irt_generate_synthetic(
    n_persons: usize,
    n_items: usize,
    seed: u64,
) -> Result<(IrtData, Vec<f64>)> {
    if n_persons == 0 || n_items == 0 {
        return Err(Error::invalid("need at least one person and one item"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta: Vec<f64> = (0..n_persons)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let a: Vec<f64> = (0..n_items)
        .map(|_| rng.sample::<f64, _>(StandardNormal).exp())
        .collect();
    let b: Vec<f64> = (0..n_items)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let data = IrtData::new(n_persons, n_items, sample_responses(&theta, &a, &b, &mut rng))?;
    let mut truth = theta;
    truth.extend(a);
    truth.extend(b);
    Ok((data, truth))
}
