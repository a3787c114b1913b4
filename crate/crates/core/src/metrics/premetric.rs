use super::{domain, MetricsError};

/// The two built-in premetric families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PremetricSpec {
    /// `q(x, y) = ‖x − y‖²`
    Norm,
    /// `θ(x, y) = e^{Q·U(x)} q(x, y)^α`; asymmetric through `U(x)`.
    ExpWeighted { alpha: f64, q_weight: f64 },
}

impl PremetricSpec {
    pub fn validate(&self) -> Result<(), MetricsError> {
        match *self {
            PremetricSpec::Norm => Ok(()),
            PremetricSpec::ExpWeighted { alpha, q_weight } => {
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return Err(domain(format!("alpha must lie in (0, 1], got {alpha}")));
                }
                if !(q_weight >= 0.0) {
                    return Err(domain(format!("Q must be nonnegative, got {q_weight}")));
                }
                Ok(())
            }
        }
    }

    /// Evaluates the premetric from the squared distance `q_xy` and the
    /// energy `u_x` of the first argument.
    pub fn eval(&self, q_xy: f64, u_x: f64) -> Result<f64, MetricsError> {
        self.validate()?;
        if !(q_xy >= 0.0) || !(u_x >= 0.0) {
            return Err(domain("q and U must be nonnegative"));
        }
        Ok(match *self {
            PremetricSpec::Norm => q_xy,
            PremetricSpec::ExpWeighted { alpha, q_weight } => {
                if q_xy == 0.0 {
                    0.0
                } else {
                    (q_weight * u_x).exp() * q_xy.powf(alpha)
                }
            }
        })
    }

    /// `d_N(x, y)` from both orientations of the premetric.
    pub fn d_n(&self, q_xy: f64, u_x: f64, u_y: f64, n: f64) -> Result<f64, MetricsError> {
        d_n_eval(self.eval(q_xy, u_x)?, self.eval(q_xy, u_y)?, n)
    }
}

/// `min(N θ(x,y), N θ(y,x), 1)`
pub fn d_n_eval(theta_xy: f64, theta_yx: f64, n: f64) -> Result<f64, MetricsError> {
    if !(theta_xy >= 0.0) || !(theta_yx >= 0.0) {
        return Err(domain("premetric values must be nonnegative"));
    }
    if !(n > 0.0) {
        return Err(domain(format!("N must be positive, got {n}")));
    }
    Ok((n * theta_xy).min(n * theta_yx).min(1.0))
}

/// `θ_α = q^α e^{α υ U}`
pub fn theta_alpha_eval(q_xy: f64, u_x: f64, alpha: f64, upsilon: f64) -> Result<f64, MetricsError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(q_xy >= 0.0) || !(u_x >= 0.0) || !(upsilon >= 0.0) {
        return Err(domain("q, U and upsilon must be nonnegative"));
    }
    if q_xy == 0.0 {
        return Ok(0.0);
    }
    Ok(q_xy.powf(alpha) * (alpha * upsilon * u_x).exp())
}
