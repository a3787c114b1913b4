pub mod bounds;
pub mod certify;
pub mod couple;
pub mod hitprob;
pub mod report;
pub mod wasserstein;

use std::path::PathBuf;

use rayon::prelude::*;

use gencoupling::coupling::{CouplingError, RunConfig};
use gencoupling::models::{CouplingModel, ModelError};
use gencoupling::noise::NoiseStream;

use crate::build::Built;
use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Validated configuration plus command-line overrides.
pub struct Context {
    pub cfg: ExperimentConfig,
    pub model: Option<Built>,
    pub seed: u64,
    pub workers: Option<usize>,
    pub out: PathBuf,
}

impl Context {
    pub fn model(&self) -> Result<&Built, CliError> {
        self.model
            .as_ref()
            .ok_or_else(|| CliError::config("model section is required for this command"))
    }
}

/// Runs `$body` with `$m`, `$x`, `$y` bound to the concrete model and its
/// initial states.
#[macro_export]
macro_rules! with_model {
    ($built:expr, |$m:ident, $x:ident, $y:ident| $body:expr) => {
        match $built {
            $crate::build::Built::Sde($m, $x, $y) => $body,
            $crate::build::Built::Sfde($m, $x, $y) => $body,
            $crate::build::Built::Nse($m, $x, $y) => $body,
        }
    };
}


/// Terminal states of `n` uncontrolled trajectories from `x0`, on streams
/// `first_stream..first_stream + n`.
#[allow(clippy::too_many_arguments)]
pub fn sample_terminal<M: CouplingModel>(
    model: &M,
    x0: &M::State,
    t: f64,
    dt: f64,
    n: usize,
    seed: u64,
    first_stream: u64,
    workers: Option<usize>,
) -> Result<Vec<M::State>, CliError> {
    let steps = RunConfig::new(t, dt, seed).steps()?;
    let m = model.noise_dim();
    let one = |i: usize| -> Result<M::State, CouplingError> {
        let stream_index = first_stream + i as u64;
        let mut stream = NoiseStream::new(seed, stream_index, m, dt)?;
        let mut ws = model.workspace();
        let mut x = x0.clone();
        let (mut dw, zero) = (vec![0.0; m], vec![0.0; m]);
        for step in 0..steps {
            stream.fill_increment(step, &mut dw);
            model
                .step(&mut ws, &mut x, &dw, &zero, dt, (step + 1) as f64 * dt)
                .map_err(|e| match e {
                    ModelError::BlowUp { t, norm } => CouplingError::BlowUp {
                        stream: stream_index,
                        t,
                        norm,
                    },
                    other => CouplingError::Model(other),
                })?;
        }
        Ok(x)
    };
    let job = || (0..n).into_par_iter().map(one).collect::<Result<Vec<_>, _>>();
    let out = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| CliError::config(e.to_string()))?
            .install(job),
        None => job(),
    };
    Ok(out?)
}
