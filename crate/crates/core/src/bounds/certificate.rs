use serde::Serialize;

use super::{domain, BoundsError};

/// Points in [`default_gamma_grid`].
pub const GAMMA_GRID_POINTS: usize = 64;
const GAMMA_GRID_MIN: f64 = 1e-4;
const GAMMA_GRID_SHRINK: f64 = 1.0 - 1e-6;

/// Dissipativity `(ζ, κ)` and energy `(μ, b, b₁, b₂)` constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HConstants {
    pub zeta: f64,
    pub kappa: f64,
    pub mu: f64,
    pub b: f64,
    pub b1: f64,
    pub b2: f64,
}

impl HConstants {
    pub fn validate(&self) -> Result<(), BoundsError> {
        let fields = [
            ("zeta", self.zeta),
            ("kappa", self.kappa),
            ("mu", self.mu),
            ("b", self.b),
            ("b1", self.b1),
            ("b2", self.b2),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(domain(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        if self.zeta <= 0.0 || self.mu <= 0.0 {
            return Err(domain("zeta and mu must be positive"));
        }
        Ok(())
    }
}

/// `ζ > κ b / μ`, checked without division.
pub fn check_condtheta(h: &HConstants) -> bool {
    h.zeta * h.mu > h.kappa * h.b
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    pub constants: HConstants,
    pub gamma: f64,
    /// `κ / (μ − γ b₁)`
    pub upsilon: f64,
    /// `ζ − κ (b + γ b₂) / (μ − γ b₁)`
    pub chi: f64,
    /// `min(γ/υ, 1/2)`
    pub alpha0: f64,
    /// `α₀ χ`
    pub lambda: f64,
    /// `α₀ υ`
    pub q: f64,
}

/// The certificate quantities at one `γ`, whether or not `χ > 0`.
pub fn certificate_at(h: &HConstants, gamma: f64) -> Result<Certificate, BoundsError> {
    h.validate()?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(domain(format!("γ must be positive, got {gamma}")));
    }
    let slack = h.mu - gamma * h.b1;
    if slack <= 0.0 {
        return Err(domain(format!("γ = {gamma} is not below μ/b₁ = {}", h.mu / h.b1)));
    }
    let upsilon = h.kappa / slack;
    let chi = h.zeta - h.kappa * (h.b + gamma * h.b2) / slack;
    let alpha0 = if upsilon == 0.0 { 0.5 } else { (gamma / upsilon).min(0.5) };
    Ok(Certificate {
        constants: *h,
        gamma,
        upsilon,
        chi,
        alpha0,
        lambda: alpha0 * chi,
        q: alpha0 * upsilon,
    })
}

/// 64 geometric points from `1e-4` to `(1 − 1e-6)·γ_max`, where
/// `γ_max = μ/b₁`, or `max(1, κ/μ)` when `b₁ = 0` (beyond `κ/(2μ)` the
/// exponent `α₀` is already capped).
pub fn default_gamma_grid(h: &HConstants) -> Result<Vec<f64>, BoundsError> {
    h.validate()?;
    let top = if h.b1 > 0.0 { h.mu / h.b1 } else { (h.kappa / h.mu).max(1.0) } * GAMMA_GRID_SHRINK;
    if top <= GAMMA_GRID_MIN {
        return Ok(vec![top]);
    }
    let ratio = (top / GAMMA_GRID_MIN).ln() / (GAMMA_GRID_POINTS - 1) as f64;
    let mut grid: Vec<f64> = (0..GAMMA_GRID_POINTS)
        .map(|i| GAMMA_GRID_MIN * (ratio * i as f64).exp())
        .collect();
    grid[GAMMA_GRID_POINTS - 1] = top;
    Ok(grid)
}

/// Best certificate on `grid`: largest `λ`, ties to the smaller `γ`.
pub fn derive_certificate(h: &HConstants, grid: &[f64]) -> Result<Certificate, BoundsError> {
    h.validate()?;
    if !check_condtheta(h) {
        return Err(BoundsError::Infeasible(format!(
            "ζ ≤ κb/μ: ζ = {} but κb/μ = {}",
            h.zeta,
            h.kappa * h.b / h.mu
        )));
    }
    if grid.is_empty() {
        return Err(domain("empty γ grid"));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best: Option<Certificate> = None;
    for &gamma in &sorted {
        let c = certificate_at(h, gamma)?;
        if c.chi > 0.0 && best.is_none_or(|b| c.lambda > b.lambda) {
            best = Some(c);
        }
    }
    best.ok_or_else(|| {
        let g = sorted[0];
        let at = certificate_at(h, g).map(|c| c.chi).unwrap_or(f64::NAN);
        BoundsError::Infeasible(format!(
            "χ > 0 fails on the whole γ grid (χ = {at} at the smallest γ = {g}); \
             refine the grid toward 0"
        ))
    })
}

/// Constants for the truncated Navier–Stokes coupling: `ζ = νλ_{N+1}`,
/// `κ = 4/ν`, `μ = ν`, `b = ‖A^{-1/2}f‖²/ν + ‖σ‖²`, `b₁ = 4‖σ‖²`, `b₂ = 0`.
pub fn nse_h_constants(
    nu: f64,
    f_norm_ahalf: f64,
    sigma_norm2: f64,
    lambda_next: f64,
) -> Result<HConstants, BoundsError> {
    check_nse_inputs(nu, f_norm_ahalf, sigma_norm2, lambda_next)?;
    let h = HConstants {
        zeta: nu * lambda_next,
        kappa: 4.0 / nu,
        mu: nu,
        b: f_norm_ahalf * f_norm_ahalf / nu + sigma_norm2,
        b1: 4.0 * sigma_norm2,
        b2: 0.0,
    };
    h.validate()?;
    Ok(h)
}

/// `λ_{N+1} > 4ν⁻⁴‖A^{-1/2}f‖² + 4ν⁻³‖σ‖²`.
pub fn check_nse_threshold(
    nu: f64,
    f_norm_ahalf: f64,
    sigma_norm2: f64,
    lambda_next: f64,
) -> Result<bool, BoundsError> {
    check_nse_inputs(nu, f_norm_ahalf, sigma_norm2, lambda_next)?;
    Ok(lambda_next > 4.0 * f_norm_ahalf.powi(2) / nu.powi(4) + 4.0 * sigma_norm2 / nu.powi(3))
}

fn check_nse_inputs(nu: f64, f: f64, s: f64, l: f64) -> Result<(), BoundsError> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(domain(format!("viscosity must be positive, got {nu}")));
    }
    if !(f >= 0.0 && s >= 0.0 && l > 0.0) || !(f.is_finite() && s.is_finite() && l.is_finite()) {
        return Err(domain("forcing norm, noise norm and λ_{N+1} must be finite, λ_{N+1} > 0"));
    }
    Ok(())
}
