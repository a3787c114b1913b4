use serde::Serialize;

use super::{CoupledRun, CouplingError};
use crate::stats::fit_line;

/// Exponential fit `v(t) ≈ e^{intercept} e^{−rate·t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub rate: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares line through `(t, ln v)`; `rate` is minus its slope.
pub fn fit_decay_rate(times: &[f64], values: &[f64]) -> Result<DecayFit, CouplingError> {
    if times.len() != values.len() {
        return Err(CouplingError::Domain(format!(
            "{} times but {} values",
            times.len(),
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(CouplingError::Domain(format!("values must be positive, got {v}")));
    }
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let line = fit_line(times, &logs)
        .ok_or_else(|| CouplingError::Domain("need at least two distinct times".into()))?;
    Ok(DecayFit {
        rate: -line.slope,
        intercept: line.intercept,
        r2: line.r2,
    })
}

/// Pointwise ensemble mean of a recorded series (runs share one grid).
pub fn mean_series<S, F>(runs: &[CoupledRun<S>], series: F) -> Result<Vec<f64>, CouplingError>
where
    F: Fn(&CoupledRun<S>) -> &[f64],
{
    let first = runs.first().ok_or(CouplingError::EmptyEnsemble)?;
    let len = series(first).len();
    let mut out = vec![0.0; len];
    for run in runs {
        let s = series(run);
        if s.len() != len {
            return Err(CouplingError::Domain("runs have different time grids".into()));
        }
        out.iter_mut().zip(s).for_each(|(o, v)| *o += v);
    }
    out.iter_mut().for_each(|o| *o /= runs.len() as f64);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_closed_forms() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let v: Vec<f64> = t.iter().map(|t| (-2.0 * t).exp()).collect();
        let f = fit_decay_rate(&t, &v).unwrap();
        assert!((f.rate - 2.0).abs() < 1e-12);
        let flat = fit_decay_rate(&t, &vec![3.0; 50]).unwrap();
        assert_eq!(flat.rate, 0.0);
        let v: Vec<f64> = t.iter().map(|t| 5.0 * (-3.0 * t).exp()).collect();
        let f = fit_decay_rate(&t, &v).unwrap();
        assert!((f.rate - 3.0).abs() < 1e-12 && (f.intercept - 5f64.ln()).abs() < 1e-12);
        assert!(fit_decay_rate(&t[..2], &[1.0, 0.0]).is_err());
    }
}
