use serde::Serialize;

use super::{CoupledRun, CouplingError};
use crate::stats::Estimate;

/// Pathwise check of `q_t ≤ q_0 exp(−ζt + κ∫_0^t S)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DissipativityReport {
    pub zeta: f64,
    pub kappa: f64,
    pub tol: f64,
    /// `ln q_0 − ζt + κ S_int(t) − ln q_t` per recorded time (single runs only).
    pub margins: Vec<f64>,
    /// Points with margin below `−tol`.
    pub violations: usize,
    pub checked: usize,
    /// Smallest margin over `t > 0` (`+∞` when nothing can be violated).
    pub worst_margin: f64,
    pub worst_time: f64,
    pub worst_stream: Option<u64>,
}

/// `10 · dt · L` for a local Lipschitz scale `L`.
pub fn default_tolerance(dt: f64, lipschitz_scale: f64) -> f64 {
    10.0 * dt * lipschitz_scale
}

pub fn verify_dissipativity<S>(
    run: &CoupledRun<S>,
    zeta: f64,
    kappa: f64,
    tol: f64,
) -> Result<DissipativityReport, CouplingError> {
    let q0 = run.q[0];
    let mut report = DissipativityReport {
        zeta,
        kappa,
        tol,
        margins: Vec::with_capacity(run.len()),
        violations: 0,
        checked: run.len().saturating_sub(1),
        worst_margin: f64::INFINITY,
        worst_time: f64::NAN,
        worst_stream: None,
    };
    if q0 == 0.0 {
        if let Some(&q) = run.q.iter().find(|&&q| q != 0.0) {
            return Err(CouplingError::InconsistentRun(q));
        }
        report.margins = vec![f64::INFINITY; run.len()];
        return Ok(report);
    }
    let lq0 = q0.ln();
    for (i, (&t, (&q, &s))) in run.times.iter().zip(run.q.iter().zip(&run.s_int)).enumerate() {
        let margin = if q == 0.0 {
            f64::INFINITY
        } else {
            lq0 - zeta * t + kappa * s - q.ln()
        };
        report.margins.push(margin);
        if i == 0 {
            continue;
        }
        if margin < -tol {
            report.violations += 1;
        }
        if margin < report.worst_margin {
            report.worst_margin = margin;
            report.worst_time = t;
            report.worst_stream = Some(run.stream_index);
        }
    }
    Ok(report)
}

/// Folds per-run reports; per-point margins are dropped.
pub fn verify_dissipativity_ensemble<S>(
    runs: &[CoupledRun<S>],
    zeta: f64,
    kappa: f64,
    tol: f64,
) -> Result<DissipativityReport, CouplingError> {
    if runs.is_empty() {
        return Err(CouplingError::EmptyEnsemble);
    }
    let mut total = DissipativityReport {
        zeta,
        kappa,
        tol,
        margins: Vec::new(),
        violations: 0,
        checked: 0,
        worst_margin: f64::INFINITY,
        worst_time: f64::NAN,
        worst_stream: None,
    };
    for run in runs {
        let r = verify_dissipativity(run, zeta, kappa, tol)?;
        total.violations += r.violations;
        total.checked += r.checked;
        if r.worst_margin < total.worst_margin {
            total.worst_margin = r.worst_margin;
            total.worst_time = r.worst_time;
            total.worst_stream = r.worst_stream;
        }
    }
    Ok(total)
}

/// Energy-estimate diagnostics for `M̂_t = U(X_t) + μ∫S − U(X_0) − bt`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub mu: f64,
    pub b: f64,
    pub b1: f64,
    pub b2: f64,
    pub t_end: f64,
    /// `M̂_T` across the ensemble.
    pub m_hat: Estimate,
    /// `mean(M̂_T) / s.e.`; zero when both vanish.
    pub z_score: f64,
    /// `|mean(M̂_T)| ≤ 3 s.e.`
    pub mean_consistent: bool,
    /// Realized quadratic variation of `M̂` over `b1·∫S + b2·T`, per run.
    pub qv_ratio: Estimate,
    pub qv_ratio_max: f64,
    pub m_hat_per_run: Vec<f64>,
}

pub fn verify_energy<S>(
    runs: &[CoupledRun<S>],
    mu: f64,
    b: f64,
    b1: f64,
    b2: f64,
) -> Result<EnergyReport, CouplingError> {
    if runs.is_empty() {
        return Err(CouplingError::EmptyEnsemble);
    }
    let mut finals = Vec::with_capacity(runs.len());
    let mut ratios = Vec::with_capacity(runs.len());
    for run in runs {
        let u0 = run.u_x[0];
        let m_hat: Vec<f64> = run
            .times
            .iter()
            .zip(run.u_x.iter().zip(&run.s_int))
            .map(|(&t, (&u, &s))| u + mu * s - u0 - b * t)
            .collect();
        finals.push(*m_hat.last().expect("runs record t = 0"));
        let qv: f64 = m_hat.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
        let bound = b1 * run.s_int.last().expect("nonempty") + b2 * run.t_end();
        ratios.push(if bound > 0.0 {
            qv / bound
        } else if qv == 0.0 {
            0.0
        } else {
            f64::INFINITY
        });
    }
    let m_hat = Estimate::from_samples(finals.iter().copied()).expect("nonempty");
    let z_score = if m_hat.std_err > 0.0 {
        m_hat.mean / m_hat.std_err
    } else if m_hat.mean == 0.0 {
        0.0
    } else {
        m_hat.mean.signum() * f64::INFINITY
    };
    Ok(EnergyReport {
        mu,
        b,
        b1,
        b2,
        t_end: runs[0].t_end(),
        mean_consistent: m_hat.within(0.0, 3.0),
        z_score,
        m_hat,
        qv_ratio_max: ratios.iter().copied().fold(0.0, f64::max),
        qv_ratio: Estimate::from_samples(ratios).expect("nonempty"),
        m_hat_per_run: finals,
    })
}

/// Largest recorded `|β|² / (c · q)`; at most one when the reimbursement
/// bound holds.
pub fn check_reimbursement<S>(run: &CoupledRun<S>, c: f64) -> f64 {
    run.beta2
        .iter()
        .zip(&run.q)
        .map(|(&b2, &q)| {
            if b2 == 0.0 {
                0.0
            } else if c * q == 0.0 {
                f64::INFINITY
            } else {
                b2 / (c * q)
            }
        })
        .fold(0.0, f64::max)
}
