use rayon::prelude::*;

use super::CouplingError;
use crate::models::{ControlLaw, CouplingModel, Observation};
use crate::noise::{GirsanovLedger, LedgerSnapshot, NoiseStream};

/// Time grid and randomness of one coupled run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub t_end: f64,
    pub dt: f64,
    pub master_seed: u64,
    pub stream_index: u64,
    /// Record every `record_every`-th step (the final step is always kept).
    pub record_every: usize,
}

impl RunConfig {
    pub fn new(t_end: f64, dt: f64, master_seed: u64) -> Self {
        Self {
            t_end,
            dt,
            master_seed,
            stream_index: 0,
            record_every: 1,
        }
    }

    /// Number of steps; `t_end` must be a whole multiple of `dt`.
    pub fn steps(&self) -> Result<u64, CouplingError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CouplingError::Invalid(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(CouplingError::Invalid(format!("T must be > 0, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(CouplingError::Invalid("record_every must be at least 1".into()));
        }
        let ratio = self.t_end / self.dt;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-9 * ratio {
            return Err(CouplingError::Invalid(format!(
                "T = {} is not a whole number of steps of size {}",
                self.t_end, self.dt
            )));
        }
        Ok(n as u64)
    }
}

/// Recorded time series of a coupled pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledRun<S> {
    pub stream_index: u64,
    pub times: Vec<f64>,
    /// `q(X_t, Y_t)`
    pub q: Vec<f64>,
    /// `U(X_t)`
    pub u_x: Vec<f64>,
    /// `S(X_t)`
    pub s_x: Vec<f64>,
    /// Trapezoidal `∫_0^t S(X_s) ds` over every step.
    pub s_int: Vec<f64>,
    /// `|β_t|²` at each recorded time.
    pub beta2: Vec<f64>,
    pub ledger: Vec<LedgerSnapshot>,
    pub final_ledger: GirsanovLedger,
    pub terminal: (S, S),
}

impl<S> CoupledRun<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("runs record t = 0")
    }
}

/// Runs `X` from `x0` and the controlled `Y` from `y0` on `[0, T]`.
pub fn run_coupled_pair<M: CouplingModel>(
    model: &M,
    x0: &M::State,
    y0: &M::State,
    control: ControlLaw,
    cfg: &RunConfig,
) -> Result<CoupledRun<M::State>, CouplingError> {
    let steps = cfg.steps()?;
    if let Some(fixed) = model.fixed_dt() {
        if (fixed - cfg.dt).abs() > 1e-12 * fixed {
            return Err(CouplingError::Invalid(format!(
                "model is discretized with dt = {fixed}, run requested {}",
                cfg.dt
            )));
        }
    }
    let m = model.noise_dim();
    let mut pair = model.pair(x0, y0, control)?;
    let mut stream = NoiseStream::new(cfg.master_seed, cfg.stream_index, m, cfg.dt)?;
    let mut ledger = GirsanovLedger::new();
    let mut beta = vec![0.0; m];
    let mut dw = vec![0.0; m];

    let capacity = (steps as usize / cfg.record_every) + 2;
    let mut run = CoupledRun {
        stream_index: cfg.stream_index,
        times: Vec::with_capacity(capacity),
        q: Vec::with_capacity(capacity),
        u_x: Vec::with_capacity(capacity),
        s_x: Vec::with_capacity(capacity),
        s_int: Vec::with_capacity(capacity),
        beta2: Vec::with_capacity(capacity),
        ledger: Vec::with_capacity(capacity),
        final_ledger: ledger,
        terminal: (x0.clone(), y0.clone()),
    };

    let mut obs = model.observe(&pair);
    let mut s_int = 0.0;
    model.control(&pair, &mut beta);
    record(&mut run, 0.0, &obs, s_int, &beta, &ledger);

    for step in 0..steps {
        let t_end = (step + 1) as f64 * cfg.dt;
        stream.fill_increment(step, &mut dw);
        ledger.update_scalar(
            beta.iter().map(|b| b * b).sum(),
            beta.iter().zip(&dw).map(|(b, w)| b * w).sum(),
            cfg.dt,
        );
        model
            .advance(&mut pair, &dw, cfg.dt, t_end)
            .map_err(|e| CouplingError::from_model(e, cfg.stream_index))?;
        let next = model.observe(&pair);
        s_int += 0.5 * (obs.s_x + next.s_x) * cfg.dt;
        obs = next;
        model.control(&pair, &mut beta);
        if (step + 1) % cfg.record_every as u64 == 0 || step + 1 == steps {
            record(&mut run, t_end, &obs, s_int, &beta, &ledger);
        }
    }
    run.final_ledger = ledger;
    run.terminal = model.states(&pair);
    Ok(run)
}

fn record<S>(run: &mut CoupledRun<S>, t: f64, obs: &Observation, s_int: f64, beta: &[f64], ledger: &GirsanovLedger) {
    run.times.push(t);
    run.q.push(obs.q);
    run.u_x.push(obs.u_x);
    run.s_x.push(obs.s_x);
    run.s_int.push(s_int);
    run.beta2.push(beta.iter().map(|b| b * b).sum());
    run.ledger.push(ledger.snapshot());
}

/// True coupling: same noise, no control.
pub fn run_true_pair<M: CouplingModel>(
    model: &M,
    x0: &M::State,
    y0: &M::State,
    cfg: &RunConfig,
) -> Result<CoupledRun<M::State>, CouplingError> {
    run_coupled_pair(model, x0, y0, ControlLaw::None, cfg)
}

/// `n` independent coupled runs on streams `cfg.stream_index + i`, spread
/// over `workers` threads (all available cores when `None`). The result is
/// ordered by stream and independent of the worker count; the first
/// failure in stream order is returned.
pub fn run_ensemble<M: CouplingModel>(
    model: &M,
    x0: &M::State,
    y0: &M::State,
    control: ControlLaw,
    cfg: &RunConfig,
    n: usize,
    workers: Option<usize>,
) -> Result<Vec<CoupledRun<M::State>>, CouplingError> {
    if n == 0 {
        return Err(CouplingError::EmptyEnsemble);
    }
    let job = || {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let cfg = RunConfig {
                    stream_index: cfg.stream_index + i as u64,
                    ..*cfg
                };
                run_coupled_pair(model, x0, y0, control, &cfg)
            })
            .collect::<Vec<_>>()
    };
    let results = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| CouplingError::Invalid(e.to_string()))?
            .install(job),
        None => job(),
    };
    results.into_iter().collect()
}
