//! Model abstraction: posteriors expressed as potentials on unconstrained space.
//!
//! A model's parameters live on a constrained support (the unit square for the
//! coin-toss model, `(0, inf)` for IRT discriminations). Sampling runs on all of
//! `R^d` instead: each constrained coordinate is reached through a smooth
//! monotone bijection, and the bijection's log-Jacobian is folded into the
//! potential so the pushed-forward density is the correct posterior. The
//! potential is the negative log posterior, so minima correspond to
//! high-probability parameters.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Numerically stable logistic function `1 / (1 + e^{-x})`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Per-coordinate support of a model parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Support {
    /// Unbounded coordinate; identity map.
    Real,
    /// Open unit interval `(0, 1)`; logistic map.
    UnitInterval,
    /// Positive half-line `(0, inf)`; exponential map.
    Positive,
}

impl Support {
    /// Map an unconstrained value into the support.
    pub fn to_support(self, q: f64) -> f64 {
        match self {
            Support::Real => q,
            Support::UnitInterval => sigmoid(q),
            Support::Positive => q.exp(),
        }
    }

    /// Inverse of [`Support::to_support`].
    pub fn from_support(self, x: f64) -> f64 {
        match self {
            Support::Real => x,
            Support::UnitInterval => (x / (1.0 - x)).ln(),
            Support::Positive => x.ln(),
        }
    }

    /// `ln |d to_support / dq|` at `q`.
    pub fn log_jacobian(self, q: f64) -> f64 {
        match self {
            Support::Real => 0.0,
            // ln sigma'(q) = ln sigma(q) + ln(1 - sigma(q))
            Support::UnitInterval => -softplus(q) - softplus(-q),
            Support::Positive => q,
        }
    }

    /// `d/dq ln |d to_support / dq|` at `q`.
    pub fn dlog_jacobian(self, q: f64) -> f64 {
        match self {
            Support::Real => 0.0,
            Support::UnitInterval => 1.0 - 2.0 * sigmoid(q),
            Support::Positive => 1.0,
        }
    }
}

type PotentialFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradientFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// A target posterior packaged as a potential on unconstrained space.
///
/// The stored potential is `V(q) = -ln P(x|X) - ln|J(q)|` with `x =
/// to_support(q)`, so builders must fold the support bijection's Jacobian in.
/// Gradients are supplied analytically; [`ModelSpec::check_gradient`] is the
/// enforcement mechanism.
///
/// Immutable after construction; evaluation is pure and safe to share across
/// worker threads.
#[derive(Clone)]
pub struct ModelSpec {
    dim: usize,
    param_names: Vec<String>,
    supports: Vec<Support>,
    potential: PotentialFn,
    gradient: GradientFn,
    truth: Option<Vec<f64>>,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("dim", &self.dim)
            .field("param_names", &self.param_names)
            .field("supports", &self.supports)
            .field("truth", &self.truth)
            .finish_non_exhaustive()
    }
}

impl ModelSpec {
    /// Build a model from its unconstrained-space potential and gradient.
    ///
    /// Panics if the name or support lists do not match `dim`; that is a
    /// builder bug, not a runtime input.
    pub fn new(
        dim: usize,
        param_names: Vec<String>,
        supports: Vec<Support>,
        potential: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        assert!(dim > 0, "model dimension must be positive");
        assert_eq!(param_names.len(), dim, "one name per parameter");
        assert_eq!(supports.len(), dim, "one support per parameter");
        Self {
            dim,
            param_names,
            supports,
            potential: Arc::new(potential),
            gradient: Arc::new(gradient),
            truth: None,
        }
    }

    /// Attach ground-truth parameter values (constrained space).
    pub fn with_truth(mut self, truth: Vec<f64>) -> Self {
        assert_eq!(truth.len(), self.dim, "one truth value per parameter");
        self.truth = Some(truth);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn param_names(&self) -> &[String] {
        &self.param_names
    }

    pub fn supports(&self) -> &[Support] {
        &self.supports
    }

    /// Ground-truth parameters in constrained space, when known.
    pub fn truth(&self) -> Option<&[f64]> {
        self.truth.as_deref()
    }

    fn validate_point(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.dim {
            return Err(Error::invalid(format!(
                "point has dimension {}, model expects {}",
                q.len(),
                self.dim
            )));
        }
        if q.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("point has non-finite components"));
        }
        Ok(())
    }

    /// Map an unconstrained point into the model's support.
    pub fn to_support(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.validate_point(q)?;
        Ok(q.iter()
            .zip(&self.supports)
            .map(|(&qi, s)| s.to_support(qi))
            .collect())
    }

    /// Inverse of [`ModelSpec::to_support`].
    pub fn from_support(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::invalid(format!(
                "point has dimension {}, model expects {}",
                x.len(),
                self.dim
            )));
        }
        Ok(x.iter()
            .zip(&self.supports)
            .map(|(&xi, s)| s.from_support(xi))
            .collect())
    }

    /// `to_support` without allocation; `out` must have length `dim`.
    pub(crate) fn to_support_into(&self, q: &[f64], out: &mut [f64]) {
        for ((&qi, s), o) in q.iter().zip(&self.supports).zip(out) {
            *o = s.to_support(qi);
        }
    }

    /// Potential energy `-ln P(x|X) - ln|J(q)|` at an unconstrained point.
    pub fn potential(&self, q: &[f64]) -> Result<f64> {
        self.validate_point(q)?;
        Ok((self.potential)(q))
    }

    /// Gradient of the potential at an unconstrained point.
    pub fn grad_potential(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.validate_point(q)?;
        let mut out = vec![0.0; self.dim];
        (self.gradient)(q, &mut out);
        Ok(out)
    }

    pub(crate) fn potential_raw(&self, q: &[f64]) -> f64 {
        (self.potential)(q)
    }

    pub(crate) fn grad_into_raw(&self, q: &[f64], out: &mut [f64]) {
        (self.gradient)(q, out);
    }

    /// Worst relative disagreement between the analytic gradient and central
    /// finite differences of the potential, over all coordinates.
    ///
    /// Returns `max_i |analytic_i - fd_i| / max(1, |analytic_i|)`.
    pub fn check_gradient(&self, q: &[f64], h: f64) -> Result<f64> {
        if h <= 0.0 || !h.is_finite() {
            return Err(Error::invalid("finite-difference step h must be positive"));
        }
        self.validate_point(q)?;
        let analytic = self.grad_potential(q)?;
        let mut probe = q.to_vec();
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            probe[i] = q[i] + h;
            let fp = self.potential_raw(&probe);
            probe[i] = q[i] - h;
            let fm = self.potential_raw(&probe);
            probe[i] = q[i];
            let fd = (fp - fm) / (2.0 * h);
            let err = (analytic[i] - fd).abs() / analytic[i].abs().max(1.0);
            worst = worst.max(err);
        }
        Ok(worst)
    }

    /// Same model with the gradient perturbed by `eps` on every coordinate.
    ///
    /// Fault-injection hook for gradient-check tooling; never use for
    /// inference.
    pub fn with_corrupted_gradient(&self, eps: f64) -> ModelSpec {
        let inner = Arc::clone(&self.gradient);
        let mut out = self.clone();
        out.gradient = Arc::new(move |q: &[f64], g: &mut [f64]| {
            inner(q, g);
            for gi in g.iter_mut() {
                *gi += eps;
            }
        });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toy_linear() -> ModelSpec {
        // V(q) = q on R; the difference quotient is exact up to rounding.
        ModelSpec::new(
            1,
            vec!["x".into()],
            vec![Support::Real],
            |q| q[0],
            |_, out| out[0] = 1.0,
        )
    }

    fn toy_gaussian2() -> ModelSpec {
        ModelSpec::new(
            2,
            vec!["x1".into(), "x2".into()],
            vec![Support::Real, Support::Real],
            |q| 0.5 * q.iter().map(|x| x * x).sum::<f64>(),
            |q, out| out.copy_from_slice(q),
        )
    }

    #[test]
    fn logistic_map_reference_points() {
        let m = ModelSpec::new(
            2,
            vec!["p1".into(), "p2".into()],
            vec![Support::UnitInterval, Support::UnitInterval],
            |_| 0.0,
            |_, out| out.fill(0.0),
        );
        let x = m.to_support(&[0.0, 0.0]).unwrap();
        assert_eq!(x, vec![0.5, 0.5]);
        let x = m.to_support(&[3.0_f64.ln(), 0.0]).unwrap();
        assert_relative_eq!(x[0], 0.75, max_relative = 1e-15);
        assert_eq!(x[1], 0.5);
    }

    #[test]
    fn identity_on_unbounded_coordinate() {
        let m = toy_linear();
        assert_eq!(m.to_support(&[0.0]).unwrap(), vec![0.0]);
        assert_eq!(m.to_support(&[-3.25]).unwrap(), vec![-3.25]);
    }

    #[test]
    fn to_support_rejects_non_finite() {
        let m = toy_linear();
        assert!(m.to_support(&[f64::NAN]).is_err());
        assert!(m.to_support(&[f64::INFINITY]).is_err());
        assert!(m.to_support(&[0.0, 1.0]).is_err()); // wrong length
    }

    #[test]
    fn support_round_trip() {
        for s in [Support::Real, Support::UnitInterval, Support::Positive] {
            for q in [-8.0, -1.5, 0.0, 0.3, 2.0, 8.0] {
                let back = s.from_support(s.to_support(q));
                assert_relative_eq!(back, q, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn log_jacobian_matches_numeric_derivative() {
        let h = 1e-6;
        for s in [Support::Real, Support::UnitInterval, Support::Positive] {
            for q in [-2.0, -0.5, 0.0, 1.0, 3.0] {
                let numeric = ((s.to_support(q + h) - s.to_support(q - h)) / (2.0 * h)).abs();
                if numeric > 0.0 {
                    assert_relative_eq!(s.log_jacobian(q), numeric.ln(), epsilon = 1e-7);
                }
                let numeric_dlog = (s.log_jacobian(q + h) - s.log_jacobian(q - h)) / (2.0 * h);
                assert_relative_eq!(s.dlog_jacobian(q), numeric_dlog, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn gaussian_potential_value() {
        let m = toy_gaussian2();
        assert_eq!(m.potential(&[1.0, 0.0]).unwrap(), 0.5);
        // purity: repeated evaluation is bit-identical
        let q = [0.37, -1.2];
        assert_eq!(m.potential(&q).unwrap(), m.potential(&q).unwrap());
    }

    #[test]
    fn check_gradient_gaussian_is_tight() {
        let m = toy_gaussian2();
        let err = m.check_gradient(&[1.0, 1.0], 1e-5).unwrap();
        assert!(err < 1e-8, "gradient error {err} too large");
    }

    #[test]
    fn check_gradient_linear_is_machine_precision() {
        let m = toy_linear();
        let err = m.check_gradient(&[0.3], 1e-5).unwrap();
        assert!(err < 1e-10, "difference quotient of a line: got {err}");
    }

    #[test]
    fn check_gradient_rejects_bad_step() {
        let m = toy_linear();
        assert!(m.check_gradient(&[0.0], 0.0).is_err());
        assert!(m.check_gradient(&[0.0], -1e-5).is_err());
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let m = toy_gaussian2().with_corrupted_gradient(1e-3);
        let err = m.check_gradient(&[0.2, -0.4], 1e-5).unwrap();
        assert!(err > 1e-5, "fault injection must trip the check, got {err}");
    }
}
