//! Built-in targets: the two-coin model, IRT 2PL, and a Gaussian toy.

mod coin_toss;
mod gaussian;
mod irt;

pub use coin_toss::{ct_generate, ct_map, ct_model, CoinTossData};
pub use gaussian::gaussian_toy;
pub use irt::{irt_generate, irt_generate_synthetic, irt_model, irt_response_prob, IrtData};
