use std::f64::consts::LN_2;

use serde::Serialize;

use super::{check_delta, domain, BoundsError};

/// Which inequality produced a [`Bound`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// `√(KL/2)`
    Pinsker,
    /// `1 − e^{−KL}/2`
    KlExponential,
    /// `2^{(1−δ)/(1+δ)} M_δ^{1/(1+δ)}`
    FractionalMoment,
    /// `1 − min(1/8, e^{−(2^{2−δ} M_δ)^{1/δ}})/6`
    FractionalMomentFloor,
    /// `μ(A)/N − (KL + log 2)/(N log N)`
    KlMassTransfer,
    /// `(μ_ξ(A) − 2^{1−δ}M_δ/(log N)^δ − log 2/log N)/N`
    FractionalMassTransfer,
}

/// A probability bound in `[0, 1]`; `clamped` marks a raw value outside
/// that range (a vacuous bound).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bound {
    pub value: f64,
    pub raw: f64,
    pub clamped: bool,
    pub kind: BoundKind,
}

impl Bound {
    fn new(raw: f64, kind: BoundKind) -> Self {
        let value = raw.clamp(0.0, 1.0);
        Self {
            value,
            raw,
            clamped: value != raw,
            kind,
        }
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<(), BoundsError> {
    if v >= 0.0 && !v.is_nan() {
        Ok(())
    } else {
        Err(domain(format!("{name} must be nonnegative, got {v}")))
    }
}

fn check_n(n: f64) -> Result<(), BoundsError> {
    if n > 1.0 && n.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("N must exceed 1, got {n}")))
    }
}

fn check_prob(p: f64) -> Result<(), BoundsError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(domain(format!("probability must lie in [0, 1], got {p}")))
    }
}

pub fn pinsker_tv(kl: f64) -> Result<Bound, BoundsError> {
    check_nonneg("KL", kl)?;
    Ok(Bound::new((0.5 * kl).sqrt(), BoundKind::Pinsker))
}

pub fn tv_exp_bound(kl: f64) -> Result<Bound, BoundsError> {
    check_nonneg("KL", kl)?;
    Ok(Bound::new(1.0 - 0.5 * (-kl).exp(), BoundKind::KlExponential))
}

/// Lower bound on `ν(A)` from `μ(A)` and `KL(μ‖ν)`.
pub fn measure_lower_bound(mu_a: f64, kl: f64, n: f64) -> Result<Bound, BoundsError> {
    check_prob(mu_a)?;
    check_nonneg("KL", kl)?;
    check_n(n)?;
    Ok(Bound::new(mu_a / n - (kl + LN_2) / (n * n.ln()), BoundKind::KlMassTransfer))
}

/// Half the expected control energy.
pub fn kl_girsanov(expected_cost: f64) -> Result<f64, BoundsError> {
    check_nonneg("expected cost", expected_cost)?;
    Ok(0.5 * expected_cost)
}

pub fn tv_delta_upper(m_delta: f64, delta: f64) -> Result<Bound, BoundsError> {
    check_nonneg("M_δ", m_delta)?;
    check_delta(delta)?;
    let raw = 2f64.powf((1.0 - delta) / (1.0 + delta)) * m_delta.powf(1.0 / (1.0 + delta));
    Ok(Bound::new(raw, BoundKind::FractionalMoment))
}

/// Upper bound that stays strictly below one however large `M_δ` is.
pub fn tv_delta_floor(m_delta: f64, delta: f64) -> Result<Bound, BoundsError> {
    check_nonneg("M_δ", m_delta)?;
    check_delta(delta)?;
    let tail = (-(2f64.powf(2.0 - delta) * m_delta).powf(1.0 / delta)).exp();
    Ok(Bound::new(1.0 - tail.min(0.125) / 6.0, BoundKind::FractionalMomentFloor))
}

/// Lower bound on `μ_W(A)` from `μ_ξ(A)` and the fractional moment `M_δ`.
pub fn wiener_lower_bound(mu_xi_a: f64, m_delta: f64, delta: f64, n: f64) -> Result<Bound, BoundsError> {
    check_prob(mu_xi_a)?;
    check_nonneg("M_δ", m_delta)?;
    check_delta(delta)?;
    check_n(n)?;
    let ln = n.ln();
    let raw = (mu_xi_a - 2f64.powf(1.0 - delta) * m_delta / ln.powf(delta) - LN_2 / ln) / n;
    Ok(Bound::new(raw, BoundKind::FractionalMassTransfer))
}
