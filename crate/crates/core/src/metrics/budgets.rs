use std::fmt;

use num_traits::Num;

use super::{domain, MetricsError};

/// Why a budget could not be granted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    /// The true-coupling rate `r(t)` exceeds 1/3.
    RateTooLarge,
    /// The cap scale is below `2 L(t)`.
    CapTooSmall,
    /// `N·R(t)` exceeds `ε/2`.
    RadiusTooLarge,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rejection::RateTooLarge => "r(t) > 1/3",
            Rejection::CapTooSmall => "N < 2 L(t)",
            Rejection::RadiusTooLarge => "N R(t) > eps/2",
        })
    }
}

/// Outcome of a budget evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget<T> {
    Accepted(T),
    Rejected(Rejection),
}

impl<T> Budget<T> {
    pub fn accepted(self) -> Option<T> {
        match self {
            Budget::Accepted(v) => Some(v),
            Budget::Rejected(_) => None,
        }
    }
}

/// Contraction factor `r + L/N` of `d_N` on `{d_N < 1}`, granted when
/// `r ≤ 1/3` and `N ≥ 2L`; the factor is then at most 5/6.
///
/// Generic so that exact rational arithmetic can be used.
pub fn contraction_budget<T>(r_t: T, l_t: T, n: T) -> Budget<T>
where
    T: Num + Copy + PartialOrd,
{
    let one = T::one();
    let two = one + one;
    let three = two + one;
    // r ≤ 1/3 and N ≥ 2L written without division
    if three * r_t > one {
        return Budget::Rejected(Rejection::RateTooLarge);
    }
    if n < two * l_t || n <= T::zero() {
        return Budget::Rejected(Rejection::CapTooSmall);
    }
    Budget::Accepted(r_t + l_t / n)
}

/// `1 − δ²/2`: the `W_{d_N}` bound on `B × B` when the hitting probability
/// into the contracting region is at least `δ` and `ε = 1/(2N)`.
pub fn smallness_budget_b1(delta_hit: f64, n: f64, eps: f64) -> Result<f64, MetricsError> {
    if !(delta_hit > 0.0 && delta_hit <= 1.0) {
        return Err(domain(format!("hitting probability must lie in (0, 1], got {delta_hit}")));
    }
    if !(n > 0.0) || !(eps > 0.0) {
        return Err(domain("N and eps must be positive"));
    }
    Ok(1.0 - 0.5 * delta_hit * delta_hit)
}

/// `1 − ε/2`, granted when `N·R(t) ≤ ε/2`. The comparison allows a few ulps
/// so that decimal inputs on the boundary (e.g. `10 × 0.01` vs `0.2/2`) are
/// accepted.
pub fn smallness_budget_b2(n: f64, r_t: f64, eps: f64) -> Result<Budget<f64>, MetricsError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(n > 0.0) || !(r_t >= 0.0) {
        return Err(domain("N must be positive and R(t) nonnegative"));
    }
    if n * r_t <= eps / 2.0 * (1.0 + 4.0 * f64::EPSILON) {
        Ok(Budget::Accepted(1.0 - eps / 2.0))
    } else {
        Ok(Budget::Rejected(Rejection::RadiusTooLarge))
    }
}
