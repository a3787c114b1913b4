//! Generalized-coupling runs, pathwise diagnostics and decay fits.
//!
//! `X` is driven by the raw Brownian increments, so its law is the true
//! transition law from `x`. `Y` receives the same increments plus the
//! control drift `β`; the Girsanov ledger records `β` with left-point sums.

mod fit;
mod hitting;
mod run;
mod tune;
mod verify;

pub use fit::{fit_decay_rate, mean_series, DecayFit};
pub use hitting::{estimate_hitting_prob, HittingReport};
pub use run::{run_coupled_pair, run_ensemble, run_true_pair, CoupledRun, RunConfig};
pub use tune::{fit_distance_decay, tune_gain, GainTuning, TuningOptions};
pub use verify::{
    check_reimbursement, default_tolerance, verify_dissipativity, verify_dissipativity_ensemble,
    verify_energy, DissipativityReport, EnergyReport,
};

use thiserror::Error;

use crate::models::ModelError;
use crate::noise::NoiseError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("trajectory {stream} blew up at t = {t}: norm {norm:e}")]
    BlowUp { stream: u64, t: f64, norm: f64 },
    #[error(transparent)]
    Model(ModelError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error("invalid run configuration: {0}")]
    Invalid(String),
    #[error("inconsistent run: q(x, y) = 0 but q becomes {0:e}")]
    InconsistentRun(f64),
    #[error("empty ensemble")]
    EmptyEnsemble,
    #[error("domain error: {0}")]
    Domain(String),
}

impl CouplingError {
    pub(crate) fn from_model(err: ModelError, stream: u64) -> Self {
        match err {
            ModelError::BlowUp { t, norm } => CouplingError::BlowUp { stream, t, norm },
            other => CouplingError::Model(other),
        }
    }
}

impl From<ModelError> for CouplingError {
    fn from(err: ModelError) -> Self {
        CouplingError::Model(err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ControlLaw, CouplingModel, DissipativeSde, DissipativeSdeSpec, Nonlinearity};
    use nalgebra::DMatrix;

    fn ou(a: f64, s: f64) -> DissipativeSde {
        DissipativeSde::new(DissipativeSdeSpec {
            eigenvalues: vec![a],
            nonlinearity: Nonlinearity::Zero,
            sigma: DMatrix::from_element(1, 1, s),
        })
        .unwrap()
    }

    #[test]
    fn diagonal_start_stays_on_diagonal() {
        let m = ou(1.0, 1.0);
        let run = run_coupled_pair(&m, &vec![0.7], &vec![0.7], ControlLaw::Gain(3.0), &RunConfig::new(1.0, 1e-2, 5)).unwrap();
        assert!(run.q.iter().all(|&q| q == 0.0));
        assert_eq!(run.final_ledger.cost(), 0.0);
        let rep = verify_dissipativity(&run, 1.0, 0.0, 1e-6).unwrap();
        assert_eq!(rep.violations, 0);
        let t = run_true_pair(&m, &vec![0.7], &vec![0.7], &RunConfig::new(1.0, 1e-2, 5)).unwrap();
        assert!(t.q.iter().all(|&q| q == 0.0));
    }

    #[test]
    fn ou_controlled_difference_closed_form() {
        let m = ou(1.0, 1.0);
        let cfg = RunConfig::new(1.0, 1e-4, 11);
        let run = run_coupled_pair(&m, &vec![1.0], &vec![0.0], ControlLaw::Gain(1.0), &cfg).unwrap();
        let q1 = *run.q.last().unwrap();
        assert!((q1 - (-4.0f64).exp()).abs() < 1e-6, "{q1}");
        assert!((run.t_end() - 1.0).abs() < 1e-12);
        let rep = verify_dissipativity(&run, 4.0, 0.0, 1e-6).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.worst_margin >= -1e-6);
        assert!(check_reimbursement(&run, m.reimbursement_constant(ControlLaw::Gain(1.0)).unwrap()) <= 1.0 + 1e-12);
        // ledger: cost = ∫ gain² |D|² = (1 − e^{−4})/4, left-point sum is O(dt) high
        let cost = run.final_ledger.cost();
        let exact = (1.0 - (-4.0f64).exp()) / 4.0;
        assert!(cost > exact && cost - exact < 1e-4, "{cost}");
    }

    #[test]
    fn true_coupling_decays_at_twice_lambda() {
        let m = ou(1.5, 0.8);
        let run = run_true_pair(&m, &vec![2.0], &vec![-1.0], &RunConfig::new(2.0, 1e-3, 3)).unwrap();
        let fit = fit_decay_rate(&run.times, &run.q).unwrap();
        assert!((fit.rate - 3.0).abs() < 1e-9, "{}", fit.rate);
        assert_eq!(run.final_ledger.cost(), 0.0);
    }

    #[test]
    fn ensembles_are_reproducible_across_worker_counts() {
        let m = ou(1.0, 1.0);
        let mut cfg = RunConfig::new(0.5, 1e-2, 42);
        cfg.record_every = 7;
        let a = run_ensemble(&m, &vec![1.0], &vec![-1.0], ControlLaw::Gain(1.0), &cfg, 6, Some(1)).unwrap();
        let b = run_ensemble(&m, &vec![1.0], &vec![-1.0], ControlLaw::Gain(1.0), &cfg, 6, Some(3)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].u_x, a[1].u_x);
        // recorded at multiples of 7 steps plus the last one
        assert_eq!(a[0].len(), 1 + 50 / 7 + 1);
        assert!(a[0].times.windows(2).all(|w| w[1] > w[0]));
        assert!(a[0].s_int.windows(2).all(|w| w[1] >= w[0]));
        assert!((a[0].ledger.last().unwrap().t - a[0].t_end()).abs() < 1e-12);
    }

    #[test]
    fn inconsistent_and_invalid_configurations() {
        let m = ou(1.0, 1.0);
        let mut run = run_true_pair(&m, &vec![0.0], &vec![0.0], &RunConfig::new(0.1, 1e-2, 0)).unwrap();
        run.q[3] = 1e-3;
        assert_eq!(
            verify_dissipativity(&run, 1.0, 0.0, 0.0),
            Err(CouplingError::InconsistentRun(1e-3))
        );
        assert!(RunConfig::new(1.0, 0.3, 0).steps().is_err());
        assert!(RunConfig::new(-1.0, 0.1, 0).steps().is_err());
        assert!(run_coupled_pair(&m, &vec![0.0], &vec![0.0], ControlLaw::LowModes, &RunConfig::new(0.1, 1e-2, 0)).is_err());
        assert_eq!(
            run_ensemble(&m, &vec![0.0], &vec![0.0], ControlLaw::None, &RunConfig::new(0.1, 1e-2, 0), 0, None),
            Err(CouplingError::EmptyEnsemble)
        );
    }

    #[test]
    fn violations_are_counted_not_hidden() {
        let m = ou(1.0, 1.0);
        let run = run_coupled_pair(&m, &vec![1.0], &vec![0.0], ControlLaw::Gain(1.0), &RunConfig::new(1.0, 1e-2, 0)).unwrap();
        // claimed rate 5 exceeds the true rate 4
        let rep = verify_dissipativity(&run, 5.0, 0.0, 1e-6).unwrap();
        assert_eq!(rep.violations, rep.checked);
        assert!((rep.worst_margin + 1.0).abs() < 1e-6);
        assert!((rep.worst_time - 1.0).abs() < 1e-12);
    }

    #[test]
    fn energy_identity_without_noise() {
        // d|x|² = −2a|x|² dt: M̂ vanishes with μ = 2, b = 0
        let m = ou(1.0, 0.0);
        let runs = run_ensemble(&m, &vec![1.3], &vec![0.0], ControlLaw::None, &RunConfig::new(1.0, 1e-3, 0), 4, None).unwrap();
        let rep = verify_energy(&runs, 2.0, 0.0, 0.0, 0.0).unwrap();
        assert!(rep.m_hat.mean.abs() < 1e-6, "{:?}", rep.m_hat);
        assert!(rep.qv_ratio_max.is_infinite() || rep.qv_ratio_max < 1e-10);
    }

    #[test]
    fn energy_martingale_is_centred_for_ou() {
        // U = x², S = a x², μ = 2, b = s², d⟨M⟩ = 4 s² x² dt = (4 s²/a) S dt
        let (a, s) = (1.0, 0.7);
        let m = ou(a, s);
        let runs = run_ensemble(&m, &vec![1.0], &vec![0.0], ControlLaw::None, &RunConfig::new(1.0, 1e-3, 9), 256, None).unwrap();
        let rep = verify_energy(&runs, 2.0, s * s, 4.0 * s * s / a, 0.0).unwrap();
        assert!(rep.mean_consistent, "{:?}", rep.m_hat);
        assert!((rep.qv_ratio.mean - 1.0).abs() < 0.05, "{:?}", rep.qv_ratio);
    }

    #[test]
    fn hitting_probabilities() {
        let m = ou(1.0, 1.0);
        let points: Vec<Vec<f64>> = vec![vec![-1.0], vec![0.0], vec![1.0]];
        let all = estimate_hitting_prob(&m, &points, |_| true, 1.0, 1e-2, 10, 0, None).unwrap();
        assert_eq!(all.min.mean, 1.0);
        let none = estimate_hitting_prob(&m, &points, |_| false, 1.0, 1e-2, 10, 0, None).unwrap();
        assert_eq!(none.min.mean, 0.0);
        // stationary N(0, 1/2): P(|x| > 3) ≈ 2e-5
        let rep = estimate_hitting_prob(&m, &points, |x: &Vec<f64>| x[0].abs() <= 3.0, 5.0, 1e-2, 400, 1, Some(2)).unwrap();
        assert!(rep.min.mean >= 0.99, "{:?}", rep.min);
        assert_eq!(rep.blowups, 0);
        assert_eq!(rep.per_point.len(), 3);
    }

    #[test]
    fn gain_tuner_doubles_until_rate_is_met() {
        let m = ou(0.1, 1.0);
        let opts = TuningOptions {
            t_end: 2.0,
            dt: 1e-2,
            pilot_size: 2,
            target_rate: 3.0,
            ..TuningOptions::default()
        };
        let tuned = tune_gain(&m, &vec![1.0], &vec![0.0], &opts).unwrap();
        // √q decays at a + gain
        assert_eq!(tuned.gain, 4.0);
        assert_eq!(tuned.history.len(), 3);
        assert!((tuned.fit.rate - 4.1).abs() < 1e-6);
        let stuck = TuningOptions { max_doublings: 1, ..opts };
        assert!(tune_gain(&m, &vec![1.0], &vec![0.0], &stuck).is_err());
    }
}
