use rayon::prelude::*;
use serde::Serialize;

use super::{CouplingError, RunConfig};
use crate::models::{CouplingModel, ModelError};
use crate::noise::NoiseStream;
use crate::stats::Estimate;

/// Monte-Carlo estimate of `min_x P_{t0}(x, D)` over sampled points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingReport {
    pub per_point: Vec<Estimate>,
    /// Index and estimate of the least likely starting point.
    pub argmin: usize,
    pub min: Estimate,
    /// Trajectories that blew up (counted as misses).
    pub blowups: usize,
}

/// Runs `n_traj` uncontrolled trajectories from each point up to `t0` and
/// records whether they end in `D`. Point `p`, trajectory `j` uses stream
/// `p · n_traj + j`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_hitting_prob<M, P>(
    model: &M,
    points: &[M::State],
    in_target: P,
    t0: f64,
    dt: f64,
    n_traj: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<HittingReport, CouplingError>
where
    M: CouplingModel,
    P: Fn(&M::State) -> bool + Sync,
{
    if n_traj == 0 || points.is_empty() {
        return Err(CouplingError::EmptyEnsemble);
    }
    let steps = RunConfig::new(t0, dt, seed).steps()?;
    let m = model.noise_dim();
    let zero = vec![0.0; m];

    let trajectory = |p: usize, j: usize| -> Result<Option<bool>, CouplingError> {
        let mut stream = NoiseStream::new(seed, (p * n_traj + j) as u64, m, dt)?;
        let mut ws = model.workspace();
        let mut x = points[p].clone();
        let mut dw = vec![0.0; m];
        for step in 0..steps {
            stream.fill_increment(step, &mut dw);
            match model.step(&mut ws, &mut x, &dw, &zero, dt, (step + 1) as f64 * dt) {
                Ok(()) => {}
                Err(ModelError::BlowUp { .. }) => return Ok(None),
                Err(e) => return Err(e.into()),
            }
        }
        Ok(Some(in_target(&x)))
    };
    let job = || {
        (0..points.len() * n_traj)
            .into_par_iter()
            .map(|i| trajectory(i / n_traj, i % n_traj))
            .collect::<Result<Vec<_>, _>>()
    };
    let outcomes = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| CouplingError::Invalid(e.to_string()))?
            .install(job),
        None => job(),
    }?;

    let blowups = outcomes.iter().filter(|o| o.is_none()).count();
    let per_point: Vec<Estimate> = outcomes
        .chunks(n_traj)
        .map(|c| {
            Estimate::from_samples(c.iter().map(|o| if *o == Some(true) { 1.0 } else { 0.0 }))
                .expect("n_traj >= 1")
        })
        .collect();
    let argmin = per_point
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.mean.total_cmp(&b.1.mean))
        .map(|(i, _)| i)
        .expect("nonempty");
    Ok(HittingReport {
        min: per_point[argmin],
        argmin,
        per_point,
        blowups,
    })
}
