//! Isotropic Gaussian toy target, `V(q) = ||q||^2 / 2` on `R^d`.
//!
//! The 1-D case doubles as the harmonic oscillator used by the integrator
//! tests, and the stationary distribution at temperature `T` is
//! `Normal(0, k_B T I)` in closed form.

use crate::error::{Error, Result};
use crate::model::{ModelSpec, Support};

pub fn gaussian_toy(dim: usize) -> Result<ModelSpec> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let names = (1..=dim).map(|i| format!("x{i}")).collect();
    let model = ModelSpec::new(
        dim,
        names,
        vec![Support::Real; dim],
        |q| 0.5 * q.iter().map(|x| x * x).sum::<f64>(),
        |q, out| out.copy_from_slice(q),
    );
    Ok(model.with_truth(vec![0.0; dim]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_value_and_gradient() {
        let m = gaussian_toy(2).unwrap();
        assert_eq!(m.potential(&[1.0, 0.0]).unwrap(), 0.5);
        assert_eq!(m.grad_potential(&[0.3, -0.7]).unwrap(), vec![0.3, -0.7]);
        assert!(m.check_gradient(&[1.0, 1.0], 1e-5).unwrap() < 1e-8);
    }

    #[test]
    fn rejects_zero_dimension() {
        assert!(gaussian_toy(0).is_err());
    }
}
