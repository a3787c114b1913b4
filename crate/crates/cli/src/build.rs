//! Turns validated configuration into model objects.

use nalgebra::DMatrix;

use gencoupling::models::{
    CouplingModel, DissipativeSde, ModelError, DissipativeSdeSpec, NavierStokes2d, NoiseDirection, Nonlinearity,
    NseSpec, Segment, Sfde, SfdeDiffusion, SfdeDrift, SfdeLyapunov, SfdeSpec,
};
use gencoupling::spectral::{ModeProjector, Phase, SpectralField, WaveVector};

use crate::config::{
    DiffusionConfig, DriftConfig, LyapunovConfig, ModeConfig, ModelConfig, NonlinearityConfig, PhaseConfig,
    StateConfig,
};

/// What the harness needs from a model beyond the coupling interface.
pub trait Probe: CouplingModel {
    fn parse_state(&self, s: &StateConfig) -> Result<Self::State, String>;
    /// Distance between states in the model's natural norm.
    fn distance(&self, a: &Self::State, b: &Self::State) -> f64;
    /// Scalar summary used for histogram TV estimates.
    fn project(&self, s: &Self::State) -> f64;
    fn size(&self, s: &Self::State) -> f64;
    /// Navier–Stokes parameters, when the model has them.
    fn nse_info(&self) -> Option<NseInfo> {
        None
    }
}

/// Quantities entering the Navier–Stokes constants and threshold.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct NseInfo {
    pub nu: f64,
    pub forcing_norm_ahalf: f64,
    pub sigma_norm2: f64,
    pub lambda_next: f64,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn vector(s: &StateConfig, dim: usize) -> Result<Vec<f64>, String> {
    match s {
        StateConfig::Vector(v) if v.len() == dim => Ok(v.clone()),
        StateConfig::Vector(v) => Err(format!("state has {} entries, model dimension is {dim}", v.len())),
        StateConfig::Modes(_) => Err("expected a vector state, got a mode list".into()),
    }
}

impl Probe for DissipativeSde {
    fn parse_state(&self, s: &StateConfig) -> Result<Vec<f64>, String> {
        vector(s, self.dim())
    }

    fn distance(&self, a: &Vec<f64>, b: &Vec<f64>) -> f64 {
        euclid(a, b)
    }

    fn project(&self, s: &Vec<f64>) -> f64 {
        s[0]
    }

    fn size(&self, s: &Vec<f64>) -> f64 {
        euclid(s, &vec![0.0; s.len()])
    }
}

impl Probe for Sfde {
    fn parse_state(&self, s: &StateConfig) -> Result<Segment, String> {
        let v = vector(s, self.dim())?;
        self.constant_segment(&v).map_err(|e| e.to_string())
    }

    fn distance(&self, a: &Segment, b: &Segment) -> f64 {
        a.difference(b).sup_norm()
    }

    fn project(&self, s: &Segment) -> f64 {
        s.endpoint()[0]
    }

    fn size(&self, s: &Segment) -> f64 {
        s.sup_norm()
    }
}

impl Probe for NavierStokes2d {
    fn parse_state(&self, s: &StateConfig) -> Result<SpectralField, String> {
        match s {
            StateConfig::Modes(m) => field(self.k_max(), m),
            StateConfig::Vector(v) if v.is_empty() => Ok(SpectralField::zeros(self.k_max())),
            StateConfig::Vector(_) => Err("expected a list of modes {k, phase, amplitude}".into()),
        }
    }

    fn distance(&self, a: &SpectralField, b: &SpectralField) -> f64 {
        (a - b).h_norm()
    }

    /// First velocity coordinate of the `(1, 0)` mode.
    fn project(&self, s: &SpectralField) -> f64 {
        s.velocity_coordinates(&[WaveVector::new(1, 0)])[0]
    }

    fn size(&self, s: &SpectralField) -> f64 {
        s.h_norm()
    }

    fn nse_info(&self) -> Option<NseInfo> {
        Some(NseInfo {
            nu: self.nu(),
            forcing_norm_ahalf: self.forcing_norm_ahalf(),
            sigma_norm2: self.sigma_norm2(),
            lambda_next: self.lambda_next()?,
        })
    }
}

/// A constructed model with its two initial states.
pub enum Built {
    Sde(DissipativeSde, Vec<f64>, Vec<f64>),
    Sfde(Sfde, Segment, Segment),
    Nse(NavierStokes2d, SpectralField, SpectralField),
}

fn matrix(rows: &[Vec<f64>], key: &str) -> Result<DMatrix<f64>, String> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Err(format!("{key} must be a nonempty matrix"));
    }
    if rows.iter().any(|row| row.len() != c) {
        return Err(format!("{key} rows must all have {c} entries"));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn phase(p: PhaseConfig) -> Phase {
    match p {
        PhaseConfig::Cos => Phase::Cos,
        PhaseConfig::Sin => Phase::Sin,
    }
}

fn directions(modes: &[ModeConfig]) -> Vec<NoiseDirection> {
    modes
        .iter()
        .map(|m| NoiseDirection {
            k: WaveVector::new(m.k[0], m.k[1]),
            phase: phase(m.phase),
            amplitude: m.amplitude,
        })
        .collect()
}

fn field(k_max: usize, modes: &[ModeConfig]) -> Result<SpectralField, String> {
    let mut f = SpectralField::zeros(k_max);
    for m in modes {
        let k = WaveVector::new(m.k[0], m.k[1]);
        let s = SpectralField::stokes_mode(k_max, k, phase(m.phase), m.amplitude).map_err(|e| e.to_string())?;
        f.axpy(1.0, &s);
    }
    Ok(f)
}

/// Builds the model and both initial states, collecting every error.
pub fn build(cfg: &ModelConfig) -> Result<Built, Vec<String>> {
    let mut errs = Vec::new();
    let built = match cfg {
        ModelConfig::Sde(c) => {
            let sigma = matrix(&c.sigma, "model.sigma").map_err(|e| errs.push(e)).ok();
            let nonlinearity = match c.nonlinearity {
                NonlinearityConfig::Zero => Nonlinearity::Zero,
                NonlinearityConfig::SaturatedCubic { strength } => Nonlinearity::SaturatedCubic { strength },
                NonlinearityConfig::Rotation { rate } => Nonlinearity::Rotation { rate },
            };
            sigma.and_then(|sigma| {
                DissipativeSde::new(DissipativeSdeSpec {
                    eigenvalues: c.eigenvalues.clone(),
                    nonlinearity,
                    sigma,
                })
                .map_err(|e| errs.push(format!("model: {e}")))
                .ok()
            })
            .and_then(|m| {
                let x = m.parse_state(&c.x0).map_err(|e| errs.push(format!("model.x0: {e}"))).ok();
                let y = m.parse_state(&c.y0).map_err(|e| errs.push(format!("model.y0: {e}"))).ok();
                Some(Built::Sde(m, x?, y?))
            })
        }
        ModelConfig::Sfde(c) => {
            let pair = |a: &[Vec<f64>], b: &[Vec<f64>], ka: &str, kb: &str| -> Result<(DMatrix<f64>, DMatrix<f64>), String> {
                Ok((matrix(a, ka)?, matrix(b, kb)?))
            };
            let drift = match &c.drift {
                DriftConfig::LinearDelay { a, b } => {
                    pair(a, b, "model.drift.a", "model.drift.b").map(|(a, b)| SfdeDrift::LinearDelay { a, b })
                }
                DriftConfig::DistributedDelay { a, c } => {
                    pair(a, c, "model.drift.a", "model.drift.c").map(|(a, c)| SfdeDrift::DistributedDelay { a, c })
                }
                DriftConfig::TanhDelay { a, b } => {
                    pair(a, b, "model.drift.a", "model.drift.b").map(|(a, b)| SfdeDrift::TanhDelay { a, b })
                }
            }
            .map_err(|e| errs.push(e))
            .ok();
            let diffusion = match &c.diffusion {
                DiffusionConfig::Constant { matrix: m } => matrix(m, "model.diffusion.matrix").map(SfdeDiffusion::Constant),
                DiffusionConfig::Modulated { base, amplitude } => matrix(base, "model.diffusion.base").map(|base| {
                    SfdeDiffusion::Modulated {
                        base,
                        amplitude: *amplitude,
                    }
                }),
            }
            .map_err(|e| errs.push(e))
            .ok();
            let lyapunov = match c.lyapunov {
                LyapunovConfig::SupNorm => SfdeLyapunov::SupNorm,
                LyapunovConfig::Endpoint => SfdeLyapunov::Endpoint,
            };
            match (drift, diffusion) {
                (Some(drift), Some(diffusion)) => Sfde::new(SfdeSpec {
                    delay: c.delay,
                    dt: c.dt,
                    drift,
                    diffusion,
                    lyapunov,
                })
                .map_err(|e| errs.push(format!("model: {e}")))
                .ok()
                .and_then(|m| {
                    let x = m.parse_state(&c.x0).map_err(|e| errs.push(format!("model.x0: {e}"))).ok();
                    let y = m.parse_state(&c.y0).map_err(|e| errs.push(format!("model.y0: {e}"))).ok();
                    Some(Built::Sfde(m, x?, y?))
                }),
                _ => None,
            }
        }
        ModelConfig::Nse(c) => {
            let k_max = c.k_max;
            let forcing = field(k_max, &c.forcing).map_err(|e| errs.push(format!("model.forcing: {e}"))).ok();
            let sigma = NseSpec::sigma_from_directions(k_max, &directions(&c.noise))
                .map_err(|e| errs.push(format!("model.noise: {e}")))
                .ok();
            let projector = ModeProjector::up_to_shell(k_max, c.control_shell)
                .map_err(|e| errs.push(format!("model.control_shell: {e}")))
                .ok();
            match (forcing, sigma, projector) {
                (Some(forcing), Some(sigma), Some(projector)) => NavierStokes2d::new(NseSpec {
                    k_max,
                    nu: c.nu,
                    forcing,
                    sigma,
                    projector,
                })
                .map_err(|e| match e {
                    ModelError::RangeCondition(_) => errs.push(format!("model.noise: {e}")),
                    other => errs.push(format!("model: {other}")),
                })
                .ok()
                .and_then(|m| {
                    let x = m.parse_state(&c.x0).map_err(|e| errs.push(format!("model.x0: {e}"))).ok();
                    let y = m.parse_state(&c.y0).map_err(|e| errs.push(format!("model.y0: {e}"))).ok();
                    Some(Built::Nse(m, x?, y?))
                }),
                _ => None,
            }
        }
    };
    match built {
        Some(b) if errs.is_empty() => Ok(b),
        _ => Err(errs),
    }
}
