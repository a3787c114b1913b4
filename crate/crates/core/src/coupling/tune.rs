use serde::Serialize;

use super::{fit_decay_rate, run_ensemble, CoupledRun, CouplingError, DecayFit, RunConfig};
use crate::models::{ControlLaw, CouplingModel};

/// Pilot settings for [`tune_gain`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningOptions {
    pub t_end: f64,
    pub dt: f64,
    pub pilot_size: usize,
    pub seed: u64,
    /// Left end of the fit window; the decay of a sup-norm over a delay
    /// window only starts once the initial segment has been forgotten.
    pub fit_from: f64,
    /// Required decay rate of `E √q`.
    pub target_rate: f64,
    pub initial_gain: f64,
    pub max_doublings: u32,
    pub workers: Option<usize>,
}

impl Default for TuningOptions {
    fn default() -> Self {
        Self {
            t_end: 5.0,
            dt: 1e-3,
            pilot_size: 32,
            seed: 0,
            fit_from: 0.0,
            target_rate: 1.0,
            initial_gain: 1.0,
            max_doublings: 12,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainTuning {
    pub gain: f64,
    pub fit: DecayFit,
    /// Every gain tried with its fit, in order.
    pub history: Vec<(f64, DecayFit)>,
}

/// Doubles the gain from `initial_gain` until the fitted decay rate of
/// `E √q(X_t, Y_t)` over `[fit_from, T]` reaches `target_rate`.
pub fn tune_gain<M: CouplingModel>(
    model: &M,
    x0: &M::State,
    y0: &M::State,
    opts: &TuningOptions,
) -> Result<GainTuning, CouplingError> {
    if !(opts.initial_gain > 0.0 && opts.initial_gain.is_finite()) {
        return Err(CouplingError::Invalid(format!(
            "initial gain must be positive, got {}",
            opts.initial_gain
        )));
    }
    if !(opts.fit_from >= 0.0 && opts.fit_from < opts.t_end) {
        return Err(CouplingError::Invalid(format!(
            "fit window start {} must lie in [0, {})",
            opts.fit_from, opts.t_end
        )));
    }
    let cfg = RunConfig::new(opts.t_end, opts.dt, opts.seed);
    let mut history = Vec::new();
    let mut gain = opts.initial_gain;
    for _ in 0..=opts.max_doublings {
        let runs = run_ensemble(model, x0, y0, ControlLaw::Gain(gain), &cfg, opts.pilot_size, opts.workers)?;
        let fit = fit_distance_decay(&runs, opts.fit_from)?;
        history.push((gain, fit));
        if fit.rate >= opts.target_rate {
            return Ok(GainTuning { gain, fit, history });
        }
        gain *= 2.0;
    }
    Err(CouplingError::Domain(format!(
        "no gain up to {} reaches decay rate {}",
        gain / 2.0,
        opts.target_rate
    )))
}

/// Exponential fit of `E √q` over `t ≥ from`, truncated at the first
/// nonpositive mean.
pub fn fit_distance_decay<S>(runs: &[CoupledRun<S>], from: f64) -> Result<DecayFit, CouplingError> {
    if runs.is_empty() {
        return Err(CouplingError::EmptyEnsemble);
    }
    let dist: Vec<Vec<f64>> = runs.iter().map(|r| r.q.iter().map(|q| q.sqrt()).collect()).collect();
    let mean = {
        let n = dist.len() as f64;
        let mut acc = vec![0.0; dist[0].len()];
        for d in &dist {
            acc.iter_mut().zip(d).for_each(|(a, v)| *a += v / n);
        }
        acc
    };
    let (t, v): (Vec<f64>, Vec<f64>) = runs[0]
        .times
        .iter()
        .zip(&mean)
        .filter(|(t, _)| **t >= from)
        .take_while(|(_, v)| **v > 0.0)
        .map(|(t, v)| (*t, *v))
        .unzip();
    fit_decay_rate(&t, &v)
}
