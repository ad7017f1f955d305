//! Ground-truth arrival generators used for validation.

mod cir;
mod pgnorta;
pub mod special;

pub use cir::{simulate_cir_day, simulate_cir_days, simulate_cir_path, thin_path, CirConfig, CirPath, RateProfile};
pub use pgnorta::{cholesky_with_jitter, simulate_pgnorta_day, Pgnorta, PgnortaConfig};

#[cfg(test)]
mod tests;
