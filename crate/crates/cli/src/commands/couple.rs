use std::fmt::Write;

use serde::Serialize;

use gencoupling::bounds::{pinsker_tv, tv_delta_floor, tv_delta_upper, tv_exp_bound, Bound, BoundKind};
use gencoupling::coupling::{
    check_reimbursement, default_tolerance, fit_decay_rate, fit_distance_decay, mean_series, run_ensemble,
    tune_gain, verify_dissipativity_ensemble, verify_energy, DecayFit, RunConfig, TuningOptions,
};
use gencoupling::metrics::tv_histogram;
use gencoupling::models::ControlLaw;
use gencoupling::noise::{ledger_kl_bound, ledger_m_delta, GirsanovLedger};
use gencoupling::stats::Estimate;

use super::Context;
use crate::build::{NseInfo, Probe};
use crate::config::{ControlConfig, CouplingConfig};
use crate::error::CliError;
use crate::output::{run_csv, write_atomic, write_json};
use crate::with_model;

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub model: String,
    pub control: String,
    pub gain: Option<f64>,
    pub tuning: Option<Vec<(f64, DecayFit)>>,
    pub t_end: f64,
    pub dt: f64,
    pub ensemble: usize,
    pub master_seed: u64,
    pub nse: Option<NseInfo>,
    /// Exponential fit of `E q(X_t, Y_t)`.
    pub q_decay: Option<DecayFit>,
    /// Exponential fit of `E √q(X_t, Y_t)`.
    pub distance_decay: Option<DecayFit>,
    pub fit_from: f64,
    pub dissipativity: Option<DissipativitySummary>,
    pub energy: Option<EnergySummary>,
    pub reimbursement: ReimbursementSummary,
    pub girsanov: GirsanovSummary,
    pub tv: TvSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct DissipativitySummary {
    pub zeta: f64,
    pub kappa: f64,
    pub tol: f64,
    pub violations: usize,
    pub checked: usize,
    pub worst_margin: f64,
    pub worst_time: f64,
    pub worst_stream: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergySummary {
    pub mu: f64,
    pub b: f64,
    pub b1: f64,
    pub b2: f64,
    pub m_hat: Estimate,
    pub z_score: f64,
    pub mean_consistent: bool,
    pub qv_ratio: Estimate,
    pub qv_ratio_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReimbursementSummary {
    pub c: f64,
    /// Largest `|β|²/(c q)` over all recorded points.
    pub max_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GirsanovSummary {
    /// Half the mean control energy.
    pub kl: Estimate,
    pub m_delta: Vec<(f64, Estimate)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TvSummary {
    /// Histogram TV between `Y_T` and uncontrolled samples from `y0`.
    pub empirical: f64,
    pub reference_size: usize,
    pub bins: usize,
    pub tolerance: f64,
    pub bounds: Vec<TvLine>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TvLine {
    pub kind: BoundKind,
    pub delta: Option<f64>,
    pub bound: Bound,
}

impl TvLine {
    pub fn violated(&self, empirical: f64, tolerance: f64) -> bool {
        empirical > self.bound.value + tolerance
    }
}

fn coupling(ctx: &Context) -> Result<&CouplingConfig, CliError> {
    ctx.cfg
        .coupling
        .as_ref()
        .ok_or_else(|| CliError::config("coupling section is required for couple"))
}

pub fn run(ctx: &Context) -> Result<Summary, CliError> {
    let built = ctx.model()?;
    with_model!(built, |m, x, y| couple(ctx, m, x, y))
}

fn positive_prefix(times: &[f64], values: &[f64], from: f64) -> (Vec<f64>, Vec<f64>) {
    times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= from)
        .take_while(|(_, v)| **v > 0.0)
        .map(|(t, v)| (*t, *v))
        .unzip()
}

fn couple<M: Probe>(ctx: &Context, model: &M, x0: &M::State, y0: &M::State) -> Result<Summary, CliError> {
    let c = coupling(ctx)?;
    let nse = model.nse_info();
    let mut tuning = None;
    let control = match c.control {
        ControlConfig::None => ControlLaw::None,
        ControlConfig::Gain => ControlLaw::Gain(c.gain.expect("validated")),
        ControlConfig::LowModes => ControlLaw::LowModes,
        ControlConfig::Auto => {
            let tuned = tune_gain(
                model,
                x0,
                y0,
                &TuningOptions {
                    t_end: c.t_end,
                    dt: c.dt,
                    pilot_size: c.pilot_size,
                    seed: ctx.seed.wrapping_add(1),
                    fit_from: c.fit_from,
                    target_rate: c.target_rate,
                    initial_gain: c.gain.unwrap_or(1.0),
                    workers: ctx.workers,
                    ..TuningOptions::default()
                },
            )?;
            tuning = Some(tuned.history);
            ControlLaw::Gain(tuned.gain)
        }
    };
    let mut cfg = RunConfig::new(c.t_end, c.dt, ctx.seed);
    cfg.record_every = c.record_every;
    let runs = run_ensemble(model, x0, y0, control, &cfg, c.ensemble, ctx.workers)?;

    let times = &runs[0].times;
    let mean_q = mean_series(&runs, |r| &r.q)?;
    let (t, v) = positive_prefix(times, &mean_q, c.fit_from);
    let q_decay = fit_decay_rate(&t, &v).ok();
    let distance_decay = fit_distance_decay(&runs, c.fit_from).ok();

    let constants = match (c.zeta, c.kappa, nse) {
        (Some(z), Some(k), _) => Some((z, k)),
        (None, None, Some(n)) => Some((n.nu * n.lambda_next, 4.0 / n.nu)),
        (Some(z), None, _) => Some((z, 0.0)),
        _ => None,
    };
    let dissipativity = match constants {
        Some((zeta, kappa)) => {
            let s_max = runs.iter().flat_map(|r| r.s_x.iter().copied()).fold(0.0, f64::max);
            let scale = c.lipschitz_scale.unwrap_or(zeta + kappa * s_max);
            let r = verify_dissipativity_ensemble(&runs, zeta, kappa, default_tolerance(c.dt, scale))?;
            Some(DissipativitySummary {
                zeta,
                kappa,
                tol: r.tol,
                violations: r.violations,
                checked: r.checked,
                worst_margin: r.worst_margin,
                worst_time: r.worst_time,
                worst_stream: r.worst_stream,
            })
        }
        None => None,
    };

    let energy_constants = match (c.mu, c.b, nse) {
        (Some(mu), Some(b), _) => Some((mu, b, c.b1.unwrap_or(0.0), c.b2.unwrap_or(0.0))),
        (None, None, Some(n)) => Some((
            n.nu,
            n.forcing_norm_ahalf.powi(2) / n.nu + n.sigma_norm2,
            4.0 * n.sigma_norm2,
            0.0,
        )),
        _ => None,
    };
    let energy = match energy_constants {
        Some((mu, b, b1, b2)) => {
            let r = verify_energy(&runs, mu, b, b1, b2)?;
            Some(EnergySummary {
                mu,
                b,
                b1,
                b2,
                m_hat: r.m_hat,
                z_score: r.z_score,
                mean_consistent: r.mean_consistent,
                qv_ratio: r.qv_ratio,
                qv_ratio_max: r.qv_ratio_max,
            })
        }
        None => None,
    };

    let rc = model.reimbursement_constant(control).map_err(|e| CliError::config(e.to_string()))?;
    let reimbursement = ReimbursementSummary {
        c: rc,
        max_ratio: runs.iter().map(|r| check_reimbursement(r, rc)).fold(0.0, f64::max),
    };

    let ledgers: Vec<GirsanovLedger> = runs.iter().map(|r| r.final_ledger).collect();
    let kl = ledger_kl_bound(&ledgers).map_err(|e| CliError::config(e.to_string()))?;
    let deltas = ctx.cfg.bounds.as_ref().map_or(vec![0.5], |b| b.delta.clone());
    let mut m_delta = Vec::new();
    for &d in &deltas {
        m_delta.push((d, ledger_m_delta(&ledgers, d).map_err(|e| CliError::config(e.to_string()))?));
    }

    let reference_size = c.reference_size.unwrap_or(c.ensemble);
    let reference = super::sample_terminal(
        model,
        y0,
        c.t_end,
        c.dt,
        reference_size,
        ctx.seed,
        c.ensemble as u64,
        ctx.workers,
    )?;
    let controlled: Vec<f64> = runs.iter().map(|r| model.project(&r.terminal.1)).collect();
    let uncontrolled: Vec<f64> = reference.iter().map(|s| model.project(s)).collect();
    let empirical = tv_histogram(&controlled, &uncontrolled, c.tv_bins).map_err(|e| CliError::config(e.to_string()))?;
    let bad = |e: gencoupling::bounds::BoundsError| CliError::config(e.to_string());
    let mut bounds = vec![
        TvLine {
            kind: BoundKind::Pinsker,
            delta: None,
            bound: pinsker_tv(kl.mean).map_err(bad)?,
        },
        TvLine {
            kind: BoundKind::KlExponential,
            delta: None,
            bound: tv_exp_bound(kl.mean).map_err(bad)?,
        },
    ];
    for (d, m) in &m_delta {
        bounds.push(TvLine {
            kind: BoundKind::FractionalMoment,
            delta: Some(*d),
            bound: tv_delta_upper(m.mean, *d).map_err(bad)?,
        });
        bounds.push(TvLine {
            kind: BoundKind::FractionalMomentFloor,
            delta: Some(*d),
            bound: tv_delta_floor(m.mean, *d).map_err(bad)?,
        });
    }

    let summary = Summary {
        model: ctx.cfg.model.as_ref().map_or("", |m| m.kind()).to_string(),
        control: control.name().to_string(),
        gain: match control {
            ControlLaw::Gain(g) => Some(g),
            _ => None,
        },
        tuning,
        t_end: c.t_end,
        dt: c.dt,
        ensemble: runs.len(),
        master_seed: ctx.seed,
        nse,
        q_decay,
        distance_decay,
        fit_from: c.fit_from,
        dissipativity,
        energy,
        reimbursement,
        girsanov: GirsanovSummary { kl, m_delta },
        tv: TvSummary {
            empirical,
            reference_size,
            bins: c.tv_bins,
            tolerance: c.tv_tolerance,
            bounds,
        },
    };

    let out = &ctx.out;
    if ctx.cfg.output.wants("csv") {
        let keep = c.run_csvs.unwrap_or(runs.len()).min(runs.len());
        for run in &runs[..keep] {
            write_atomic(&out.join(format!("runs/run_{:05}.csv", run.stream_index)), &run_csv(run)?)?;
        }
    }
    if ctx.cfg.output.wants("json") {
        write_json(&out.join("summary.json"), &summary)?;
    }
    let text = render(&summary);
    if ctx.cfg.output.wants("text") {
        write_atomic(&out.join("summary.txt"), text.as_bytes())?;
    }
    print!("{text}");
    Ok(summary)
}

pub fn render(s: &Summary) -> String {
    let mut o = String::new();
    let _ = writeln!(
        o,
        "coupled ensemble: {} model, control {}{}, {} runs, T = {}, dt = {}, seed {}",
        s.model,
        s.control,
        s.gain.map(|g| format!(" (gain {g})")).unwrap_or_default(),
        s.ensemble,
        s.t_end,
        s.dt,
        s.master_seed
    );
    if let Some(h) = &s.tuning {
        let tried: Vec<String> = h.iter().map(|(g, f)| format!("{g}: {:.4}", f.rate)).collect();
        let _ = writeln!(o, "  gain tuning (gain: rate) {}", tried.join(", "));
    }
    let fit = |f: &Option<DecayFit>| {
        f.map(|f| format!("{:.6} (r2 {:.4})", f.rate, f.r2)).unwrap_or_else(|| "n/a".into())
    };
    let _ = writeln!(o, "  decay rate of E q over t >= {}: {}", s.fit_from, fit(&s.q_decay));
    let _ = writeln!(o, "  decay rate of E sqrt(q) over t >= {}: {}", s.fit_from, fit(&s.distance_decay));
    if let Some(d) = &s.dissipativity {
        let _ = writeln!(
            o,
            "  dissipativity (zeta {}, kappa {}): {} violations of {} points beyond tol {:.3e}, worst margin {:.4e} at t = {} [pathwise-dissipativity]",
            d.zeta, d.kappa, d.violations, d.checked, d.tol, d.worst_margin, d.worst_time
        );
    }
    if let Some(e) = &s.energy {
        let _ = writeln!(
            o,
            "  energy (mu {}, b {}): mean M_T = {:.4e} +- {:.2e}, z = {:.2}, consistent {}; QV ratio {:.4} (max {:.4}) [energy-martingale]",
            e.mu, e.b, e.m_hat.mean, e.m_hat.std_err, e.z_score, e.mean_consistent, e.qv_ratio.mean, e.qv_ratio_max
        );
    }
    let _ = writeln!(
        o,
        "  reimbursement: max |beta|^2/(c q) = {:.6} with c = {:.6} [reimbursement]",
        s.reimbursement.max_ratio, s.reimbursement.c
    );
    let _ = writeln!(
        o,
        "  KL bound {:.6e} +- {:.2e} [girsanov-kl]",
        s.girsanov.kl.mean, s.girsanov.kl.std_err
    );
    for (d, m) in &s.girsanov.m_delta {
        let _ = writeln!(o, "  M_delta (delta {d}) = {:.6e} [fractional-moment]", m.mean);
    }
    let _ = writeln!(
        o,
        "  empirical TV(Y_T, P_T(y0)) = {:.4} ({} bins, {} reference samples)",
        s.tv.empirical, s.tv.bins, s.tv.reference_size
    );
    for line in &s.tv.bounds {
        let _ = writeln!(o, "{}", tv_line(line, s.tv.empirical, s.tv.tolerance));
    }
    o
}

pub fn tv_line(line: &TvLine, empirical: f64, tolerance: f64) -> String {
    let tag = serde_json::to_value(line.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    format!(
        "  TV bound {:.6}{}{} [{}]{}",
        line.bound.value,
        line.delta.map(|d| format!(" (delta {d})")).unwrap_or_default(),
        if line.bound.clamped { " (clamped)" } else { "" },
        tag,
        if line.violated(empirical, tolerance) {
            format!("  VIOLATED: empirical {empirical:.4} exceeds bound + {tolerance}")
        } else {
            String::new()
        }
    )
}
