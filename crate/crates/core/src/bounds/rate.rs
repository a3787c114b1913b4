use serde::{Deserialize, Serialize};

use super::{check_delta, domain, BoundsError};

/// Concave rate function `φ` with `φ(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PhiSpec {
    /// `φ(u) = γu`
    Linear { gamma: f64 },
    /// `φ(u) = u^p`, `0 < p < 1`
    Power { p: f64 },
}

impl PhiSpec {
    pub fn validate(&self) -> Result<(), BoundsError> {
        match *self {
            PhiSpec::Linear { gamma } if gamma > 0.0 && gamma.is_finite() => Ok(()),
            PhiSpec::Power { p } if p > 0.0 && p < 1.0 => Ok(()),
            other => Err(domain(format!("invalid rate function {other:?}"))),
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            PhiSpec::Linear { gamma } => gamma * u,
            PhiSpec::Power { p } => u.powf(p),
        }
    }
}

/// `H_φ(x) = ∫_1^x du/φ(u)`.
pub fn h_phi(x: f64, phi: PhiSpec) -> Result<f64, BoundsError> {
    phi.validate()?;
    if !(x >= 1.0) {
        return Err(domain(format!("H_φ needs x ≥ 1, got {x}")));
    }
    Ok(match phi {
        PhiSpec::Linear { gamma } => x.ln() / gamma,
        PhiSpec::Power { p } => (x.powf(1.0 - p) - 1.0) / (1.0 - p),
    })
}

pub fn h_phi_inverse(t: f64, phi: PhiSpec) -> Result<f64, BoundsError> {
    phi.validate()?;
    if !(t >= 0.0) {
        return Err(domain(format!("H_φ⁻¹ needs t ≥ 0, got {t}")));
    }
    Ok(match phi {
        PhiSpec::Linear { gamma } => (gamma * t).exp(),
        PhiSpec::Power { p } => (1.0 + (1.0 - p) * t).powf(1.0 / (1.0 - p)),
    })
}

/// `C₁ (1 + φ(V)^δ) / φ(H_φ⁻¹(C₂ t))^δ`.
pub fn rate_curve(v_x: f64, delta: f64, c1: f64, c2: f64, t: f64, phi: PhiSpec) -> Result<f64, BoundsError> {
    check_delta(delta)?;
    if !(v_x >= 0.0 && c1 > 0.0 && c2 > 0.0) {
        return Err(domain("rate curve needs V ≥ 0 and C₁, C₂ > 0"));
    }
    let at = h_phi_inverse(c2 * t, phi)?;
    Ok(c1 * (1.0 + phi.eval(v_x).powf(delta)) / phi.eval(at).powf(delta))
}
