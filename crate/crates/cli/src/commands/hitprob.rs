use serde::Serialize;

use gencoupling::coupling::{estimate_hitting_prob, HittingReport};

use super::Context;
use crate::build::Probe;
use crate::error::CliError;
use crate::output::write_json;
use crate::with_model;

#[derive(Debug, Clone, Serialize)]
pub struct HittingSummary {
    pub radius: f64,
    pub t0: f64,
    pub dt: f64,
    pub n_traj: usize,
    pub report: HittingReport,
}

pub fn run(ctx: &Context) -> Result<HittingSummary, CliError> {
    let built = ctx.model()?;
    with_model!(built, |m, _x, _y| hit(ctx, m))
}

fn hit<M: Probe>(ctx: &Context, model: &M) -> Result<HittingSummary, CliError> {
    let h = ctx
        .cfg
        .hitting
        .as_ref()
        .ok_or_else(|| CliError::config("hitting section is required for hitprob"))?;
    let mut errs = Vec::new();
    let points: Vec<M::State> = h
        .points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| model.parse_state(p).map_err(|e| errs.push(format!("hitting.points[{i}]: {e}"))).ok())
        .collect();
    if !errs.is_empty() {
        return Err(CliError::Config(errs));
    }
    let radius = h.radius;
    let report = estimate_hitting_prob(
        model,
        &points,
        |x: &M::State| model.size(x) <= radius,
        h.t0,
        h.dt,
        h.n_traj,
        ctx.seed,
        ctx.workers,
    )?;
    println!(
        "hitting probability into {{|x| <= {radius}}} at t0 = {}: min over {} points {:.4} +- {:.4} (point {}), {} blow-ups counted as misses",
        h.t0,
        points.len(),
        report.min.mean,
        report.min.std_err,
        report.argmin,
        report.blowups
    );
    for (i, e) in report.per_point.iter().enumerate() {
        println!("  point {i}: {:.4} +- {:.4}", e.mean, e.std_err);
    }
    let summary = HittingSummary {
        radius,
        t0: h.t0,
        dt: h.dt,
        n_traj: h.n_traj,
        report,
    };
    if ctx.cfg.output.wants("json") {
        write_json(&ctx.out.join("hitting.json"), &summary)?;
    }
    Ok(summary)
}
