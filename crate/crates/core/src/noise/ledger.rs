use serde::Serialize;

use super::NoiseError;
use crate::stats::{CompensatedSum, Estimate};

/// Running Girsanov bookkeeping for one controlled trajectory, using
/// left-point sums.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GirsanovLedger {
    cost: CompensatedSum,
    ito: CompensatedSum,
    t: CompensatedSum,
}

/// Plain-value view of a ledger at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LedgerSnapshot {
    pub t: f64,
    pub cost: f64,
    pub ito_sum: f64,
    pub logweight: f64,
}

impl GirsanovLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `|β|²dt` to the cost, `β·ΔW` to the Itô sum and `dt` to the clock.
    pub fn update(&mut self, beta: &[f64], dw: &[f64], dt: f64) -> Result<(), NoiseError> {
        if beta.len() != dw.len() {
            return Err(NoiseError::Dimension {
                expected: beta.len(),
                got: dw.len(),
            });
        }
        if !(dt > 0.0) {
            return Err(NoiseError::Domain(format!("dt must be positive, got {dt}")));
        }
        let beta2: f64 = beta.iter().map(|b| b * b).sum();
        let dot: f64 = beta.iter().zip(dw).map(|(b, w)| b * w).sum();
        self.update_scalar(beta2, dot, dt);
        Ok(())
    }

    /// Same as [`Self::update`] with `|β|²` and `β·ΔW` already formed.
    pub fn update_scalar(&mut self, beta2: f64, beta_dot_dw: f64, dt: f64) {
        self.cost.add(beta2 * dt);
        self.ito.add(beta_dot_dw);
        self.t.add(dt);
    }

    pub fn cost(&self) -> f64 {
        self.cost.value()
    }

    pub fn ito_sum(&self) -> f64 {
        self.ito.value()
    }

    pub fn t(&self) -> f64 {
        self.t.value()
    }

    /// Girsanov exponent `−∫β·dW − ½∫|β|²dt`.
    pub fn logweight(&self) -> f64 {
        -self.ito_sum() - 0.5 * self.cost()
    }

    pub fn snapshot(&self) -> LedgerSnapshot {
        LedgerSnapshot {
            t: self.t(),
            cost: self.cost(),
            ito_sum: self.ito_sum(),
            logweight: self.logweight(),
        }
    }
}

/// `½ E∫|β|²dt` over the ensemble, with its Monte-Carlo standard error.
pub fn ledger_kl_bound(ensemble: &[GirsanovLedger]) -> Result<Estimate, NoiseError> {
    let e = Estimate::from_samples(ensemble.iter().map(|l| l.cost()))
        .ok_or_else(|| NoiseError::Domain("empty ensemble".into()))?;
    Ok(Estimate {
        mean: 0.5 * e.mean,
        std_err: 0.5 * e.std_err,
        n: e.n,
    })
}

/// `M_δ = E(∫|β|²dt)^δ` over the ensemble.
pub fn ledger_m_delta(ensemble: &[GirsanovLedger], delta: f64) -> Result<Estimate, NoiseError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(NoiseError::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    Estimate::from_samples(ensemble.iter().map(|l| l.cost().powf(delta)))
        .ok_or_else(|| NoiseError::Domain("empty ensemble".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_control_has_unit_weight() {
        let mut l = GirsanovLedger::new();
        for k in 0..100 {
            l.update(&[0.0, 0.0], &[0.1 * k as f64, -0.3], 0.01).unwrap();
            assert_eq!(l.logweight().exp(), 1.0);
        }
        assert_eq!((l.cost(), l.ito_sum()), (0.0, 0.0));
        assert!(l.update(&[0.0], &[0.0, 1.0], 0.1).is_err());
    }

    #[test]
    fn constant_drift_cost_is_deterministic() {
        let mut l = GirsanovLedger::new();
        let dt = 1e-3;
        for _ in 0..4000 {
            l.update_scalar(0.25, 0.0, dt);
        }
        assert!((l.t() - 4.0).abs() < 1e-15);
        assert!((l.cost() - 1.0).abs() < 1e-15);
        let kl = ledger_kl_bound(&[l, l, l]).unwrap();
        assert!((kl.mean - 0.5).abs() < 1e-15);
        assert_eq!(kl.std_err, 0.0);
    }

    #[test]
    fn m_delta_examples() {
        let zero = [GirsanovLedger::new(); 4];
        assert_eq!(ledger_m_delta(&zero, 0.5).unwrap().mean, 0.0);
        assert_eq!(ledger_kl_bound(&zero).unwrap().mean, 0.0);
        let mut four = GirsanovLedger::new();
        four.update_scalar(4.0, 0.0, 1.0);
        assert_eq!(ledger_m_delta(&[four], 0.5).unwrap().mean, 2.0);
        assert!(ledger_m_delta(&[four], 1.0).is_err());
        assert!(ledger_m_delta(&[], 0.5).is_err());
    }
}
