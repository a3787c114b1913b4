use std::fmt::Write;

use serde::Serialize;

use gencoupling::bounds::{
    check_condtheta, check_nse_threshold, default_gamma_grid, derive_certificate, nse_h_constants, Certificate,
    HConstants,
};

use super::Context;
use crate::build::{NseInfo, Probe};
use crate::error::CliError;
use crate::output::{write_atomic, write_json};
use crate::with_model;

#[derive(Debug, Clone, Serialize)]
pub struct CertifyReport {
    pub source: String,
    pub constants: HConstants,
    pub nse: Option<NseThreshold>,
    pub condition_holds: bool,
    pub grid_points: usize,
    pub certificate: Option<Certificate>,
    pub infeasible: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NseThreshold {
    #[serde(flatten)]
    pub info: NseInfo,
    /// `4ν⁻⁴‖A^{-1/2}f‖² + 4ν⁻³‖σ‖²`
    pub required: f64,
    pub holds: bool,
}

pub fn run(ctx: &Context) -> Result<CertifyReport, CliError> {
    let section = ctx.cfg.certificate.clone().unwrap_or(crate::config::CertificateConfig {
        constants: None,
        gamma_grid: None,
    });
    let (source, h, nse) = match section.constants {
        Some(c) => ("explicit constants".to_string(), HConstants::from(c), None),
        None => {
            let info = match ctx.model.as_ref() {
                Some(built) => with_model!(built, |m, _x, _y| m.nse_info()),
                None => None,
            }
            .ok_or_else(|| CliError::config("certificate.constants is required unless the model is nse"))?;
            let h = nse_h_constants(info.nu, info.forcing_norm_ahalf, info.sigma_norm2, info.lambda_next)
                .map_err(|e| CliError::config(e.to_string()))?;
            let holds = check_nse_threshold(info.nu, info.forcing_norm_ahalf, info.sigma_norm2, info.lambda_next)
                .map_err(|e| CliError::config(e.to_string()))?;
            let required = 4.0 * info.forcing_norm_ahalf.powi(2) / info.nu.powi(4) + 4.0 * info.sigma_norm2 / info.nu.powi(3);
            ("nse model".to_string(), h, Some(NseThreshold { info, required, holds }))
        }
    };
    h.validate().map_err(|e| CliError::config(format!("certificate.constants: {e}")))?;
    let grid = match section.gamma_grid {
        Some(g) => g,
        None => default_gamma_grid(&h).map_err(|e| CliError::config(e.to_string()))?,
    };
    let result = derive_certificate(&h, &grid);
    let report = CertifyReport {
        source,
        constants: h,
        nse,
        condition_holds: check_condtheta(&h),
        grid_points: grid.len(),
        certificate: result.as_ref().ok().copied(),
        infeasible: result.as_ref().err().map(|e| e.to_string()),
    };
    let text = render(&report);
    print!("{text}");
    if ctx.cfg.output.wants("json") {
        write_json(&ctx.out.join("certificate.json"), &report)?;
    }
    write_atomic(&ctx.out.join("certificate.txt"), text.as_bytes())?;
    match &report.infeasible {
        Some(msg) => Err(CliError::Infeasible(msg.clone())),
        None => Ok(report),
    }
}

pub fn render(r: &CertifyReport) -> String {
    let h = &r.constants;
    let mut s = String::new();
    let _ = writeln!(s, "certificate report ({})", r.source);
    let _ = writeln!(
        s,
        "  constants: zeta = {}, kappa = {}, mu = {}, b = {}, b1 = {}, b2 = {}",
        h.zeta, h.kappa, h.mu, h.b, h.b1, h.b2
    );
    if let Some(n) = &r.nse {
        let _ = writeln!(
            s,
            "  nse: nu = {}, |A^-1/2 f| = {}, |sigma|^2 = {}, lambda_(N+1) = {}",
            n.info.nu, n.info.forcing_norm_ahalf, n.info.sigma_norm2, n.info.lambda_next
        );
        let _ = writeln!(
            s,
            "  threshold lambda_(N+1) > 4 nu^-4 |A^-1/2 f|^2 + 4 nu^-3 |sigma|^2: {} > {} is {} [nse-threshold]",
            n.info.lambda_next, n.required, n.holds
        );
    }
    let _ = writeln!(
        s,
        "  condition zeta > kappa b / mu: {} > {} is {} [energy-dissipativity-balance]",
        h.zeta,
        h.kappa * h.b / h.mu,
        r.condition_holds
    );
    match (&r.certificate, &r.infeasible) {
        (Some(c), _) => {
            let _ = writeln!(
                s,
                "  certificate over {} gamma values: gamma = {}, upsilon = {}, chi = {}, alpha0 = {}, lambda = {}, Q = {} [rate-certificate]",
                r.grid_points, c.gamma, c.upsilon, c.chi, c.alpha0, c.lambda, c.q
            );
        }
        (None, Some(msg)) => {
            let _ = writeln!(s, "  INFEASIBLE: {msg}");
        }
        (None, None) => {}
    }
    let _ = writeln!(s, "\n[certificate]");
    let _ = writeln!(s, "source = {:?}", r.source);
    for (k, v) in [
        ("zeta", h.zeta),
        ("kappa", h.kappa),
        ("mu", h.mu),
        ("b", h.b),
        ("b1", h.b1),
        ("b2", h.b2),
    ] {
        let _ = writeln!(s, "{k} = {v:?}");
    }
    let _ = writeln!(s, "condition = {}", r.condition_holds);
    if let Some(n) = &r.nse {
        let _ = writeln!(s, "lambda_next = {:?}", n.info.lambda_next);
        let _ = writeln!(s, "nse_threshold = {}", n.holds);
    }
    let _ = writeln!(s, "feasible = {}", r.certificate.is_some());
    if let Some(c) = &r.certificate {
        for (k, v) in [
            ("gamma", c.gamma),
            ("upsilon", c.upsilon),
            ("chi", c.chi),
            ("alpha0", c.alpha0),
            ("lambda", c.lambda),
            ("q", c.q),
        ] {
            let _ = writeln!(s, "{k} = {v:?}");
        }
    }
    s
}
