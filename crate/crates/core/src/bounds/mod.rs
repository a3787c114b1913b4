//! Closed-form rate, certificate and divergence bounds.
//!
//! A certificate turns the dissipativity constants `(ζ, κ)` and the energy
//! constants `(μ, b, b₁, b₂)` into an explicit contraction rate
//! `λ = α₀ χ`. The divergence helpers convert Kullback–Leibler budgets and
//! fractional Girsanov moments into total-variation bounds.

mod certificate;
mod divergence;
mod rate;

pub use certificate::{
    certificate_at, check_condtheta, check_nse_threshold, default_gamma_grid, derive_certificate,
    nse_h_constants, Certificate, HConstants, GAMMA_GRID_POINTS,
};
pub use divergence::{
    kl_girsanov, measure_lower_bound, pinsker_tv, tv_delta_floor, tv_delta_upper, tv_exp_bound,
    wiener_lower_bound, Bound, BoundKind,
};
pub use rate::{h_phi, h_phi_inverse, rate_curve, PhiSpec};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no certificate: {0}")]
    Infeasible(String),
}

pub(crate) fn domain(msg: impl Into<String>) -> BoundsError {
    BoundsError::Domain(msg.into())
}

pub(crate) fn check_delta(delta: f64) -> Result<(), BoundsError> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("δ must lie in (0, 1), got {delta}")))
    }
}
