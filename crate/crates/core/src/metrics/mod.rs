//! Premetrics, the capped distance `d_N`, exact empirical Wasserstein-1,
//! projected total-variation estimates and the contraction/smallness budgets.

mod budgets;
mod premetric;
mod transport;
mod tv;

pub use budgets::{
    contraction_budget, smallness_budget_b1, smallness_budget_b2, Budget, Rejection,
};
pub use premetric::{d_n_eval, theta_alpha_eval, PremetricSpec};
pub use transport::{
    empirical_wasserstein, empirical_wasserstein_with_cap, EmpiricalMeasure, DEFAULT_TRANSPORT_CAP,
};
pub use tv::{tv_histogram, tv_histogram_by};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("measure has {size} points, above the transport cap {cap}; subsample first")]
    TooLarge { size: usize, cap: usize },
    #[error("weights do not balance: total {left} vs {right}")]
    WeightMismatch { left: f64, right: f64 },
}

pub(crate) fn domain(msg: impl Into<String>) -> MetricsError {
    MetricsError::Domain(msg.into())
}
