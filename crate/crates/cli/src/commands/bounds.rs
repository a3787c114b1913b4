use std::fmt::Write;

use serde::Serialize;

use gencoupling::bounds::{
    measure_lower_bound, pinsker_tv, tv_delta_floor, tv_delta_upper, tv_exp_bound, wiener_lower_bound, Bound,
    BoundsError,
};

use super::Context;
use crate::error::CliError;
use crate::output::{write_atomic, write_json};

#[derive(Debug, Clone, Serialize)]
pub struct BoundRow {
    pub kl: Option<f64>,
    pub delta: Option<f64>,
    pub m_delta: Option<f64>,
    pub n: Option<f64>,
    pub bound: Bound,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub mass: f64,
    pub rows: Vec<BoundRow>,
}

fn row(kl: Option<f64>, delta: Option<f64>, m_delta: Option<f64>, n: Option<f64>, b: Result<Bound, BoundsError>) -> Result<BoundRow, CliError> {
    Ok(BoundRow {
        kl,
        delta,
        m_delta,
        n,
        bound: b.map_err(|e| CliError::config(format!("bounds: {e}")))?,
    })
}

pub fn run(ctx: &Context) -> Result<BoundsReport, CliError> {
    let b = ctx
        .cfg
        .bounds
        .as_ref()
        .ok_or_else(|| CliError::config("bounds section is required for bounds"))?;
    let mut rows = Vec::new();
    for &kl in &b.kl {
        rows.push(row(Some(kl), None, None, None, pinsker_tv(kl))?);
        rows.push(row(Some(kl), None, None, None, tv_exp_bound(kl))?);
        for &n in &b.n {
            rows.push(row(Some(kl), None, None, Some(n), measure_lower_bound(b.mass, kl, n))?);
        }
    }
    for (&delta, &m) in b.delta.iter().zip(&b.m_delta) {
        rows.push(row(None, Some(delta), Some(m), None, tv_delta_upper(m, delta))?);
        rows.push(row(None, Some(delta), Some(m), None, tv_delta_floor(m, delta))?);
        for &n in &b.n {
            rows.push(row(None, Some(delta), Some(m), Some(n), wiener_lower_bound(b.mass, m, delta, n))?);
        }
    }
    let report = BoundsReport { mass: b.mass, rows };
    let text = render(&report);
    print!("{text}");
    if ctx.cfg.output.wants("json") {
        write_json(&ctx.out.join("bounds.json"), &report)?;
    }
    if ctx.cfg.output.wants("text") {
        write_atomic(&ctx.out.join("bounds.txt"), text.as_bytes())?;
    }
    Ok(report)
}

pub fn render(r: &BoundsReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "bound evaluations (mass {})", r.mass);
    for row in &r.rows {
        let mut inputs = Vec::new();
        for (k, v) in [("kl", row.kl), ("delta", row.delta), ("M_delta", row.m_delta), ("N", row.n)] {
            if let Some(v) = v {
                inputs.push(format!("{k} = {v}"));
            }
        }
        let tag = serde_json::to_value(row.bound.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let _ = writeln!(
            s,
            "  {:<40} {:.6}{} [{tag}]",
            inputs.join(", "),
            row.bound.value,
            if row.bound.clamped { " (clamped)" } else { "" }
        );
    }
    s
}
