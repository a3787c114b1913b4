//! Experiment configuration: TOML with sections, unknown keys rejected,
//! every validation problem reported at once.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use gencoupling::bounds::HConstants;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Option<ModelConfig>,
    pub coupling: Option<CouplingConfig>,
    #[serde(default)]
    pub seeds: SeedConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub bounds: Option<BoundsConfig>,
    pub certificate: Option<CertificateConfig>,
    pub hitting: Option<HittingConfig>,
    pub wasserstein: Option<WassersteinConfig>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelConfig {
    Sde(SdeConfig),
    Sfde(SfdeConfig),
    Nse(NseConfig),
}

impl ModelConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelConfig::Sde(_) => "sde",
            ModelConfig::Sfde(_) => "sfde",
            ModelConfig::Nse(_) => "nse",
        }
    }
}

/// A vector state, or a list of Stokes modes for the Navier–Stokes model.
/// Delay models read a vector as a constant initial segment.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum StateConfig {
    Vector(Vec<f64>),
    Modes(Vec<ModeConfig>),
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub k: [i32; 2],
    pub phase: PhaseConfig,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseConfig {
    Cos,
    Sin,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SdeConfig {
    pub eigenvalues: Vec<f64>,
    #[serde(default)]
    pub nonlinearity: NonlinearityConfig,
    /// Rows of the `n × m` diffusion matrix.
    pub sigma: Vec<Vec<f64>>,
    pub x0: StateConfig,
    pub y0: StateConfig,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NonlinearityConfig {
    #[default]
    Zero,
    SaturatedCubic { strength: f64 },
    Rotation { rate: f64 },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SfdeConfig {
    pub delay: f64,
    /// Grid step of the delay window; runs must use the same step.
    pub dt: f64,
    pub drift: DriftConfig,
    pub diffusion: DiffusionConfig,
    #[serde(default)]
    pub lyapunov: LyapunovConfig,
    pub x0: StateConfig,
    pub y0: StateConfig,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
#[allow(clippy::enum_variant_names)]
pub enum DriftConfig {
    LinearDelay { a: Vec<Vec<f64>>, b: Vec<Vec<f64>> },
    DistributedDelay { a: Vec<Vec<f64>>, c: Vec<Vec<f64>> },
    TanhDelay { a: Vec<Vec<f64>>, b: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DiffusionConfig {
    Constant { matrix: Vec<Vec<f64>> },
    Modulated { base: Vec<Vec<f64>>, amplitude: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LyapunovConfig {
    #[default]
    SupNorm,
    Endpoint,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NseConfig {
    pub k_max: usize,
    pub nu: f64,
    #[serde(default)]
    pub forcing: Vec<ModeConfig>,
    pub noise: Vec<ModeConfig>,
    /// The control acts on all modes with `|k|² ≤ control_shell`.
    pub control_shell: i64,
    pub x0: StateConfig,
    pub y0: StateConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlConfig {
    None,
    Gain,
    LowModes,
    /// Gain chosen by the doubling tuner.
    Auto,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub control: ControlConfig,
    pub gain: Option<f64>,
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "default_ensemble")]
    pub ensemble: usize,
    #[serde(default = "one")]
    pub record_every: usize,
    /// Start of the window for decay fits.
    #[serde(default)]
    pub fit_from: f64,
    /// Dissipativity constants; defaults come from the model when it has them.
    pub zeta: Option<f64>,
    pub kappa: Option<f64>,
    /// Local Lipschitz scale for the violation tolerance `10·dt·L`.
    pub lipschitz_scale: Option<f64>,
    /// Energy constants.
    pub mu: Option<f64>,
    pub b: Option<f64>,
    pub b1: Option<f64>,
    pub b2: Option<f64>,
    #[serde(default = "default_target_rate")]
    pub target_rate: f64,
    #[serde(default = "default_pilot")]
    pub pilot_size: usize,
    /// Per-run CSV files to write (default: every run).
    pub run_csvs: Option<usize>,
    /// Uncontrolled reference trajectories from `y0` for the TV estimate.
    pub reference_size: Option<usize>,
    #[serde(default = "default_bins")]
    pub tv_bins: usize,
    /// Slack allowed between an empirical TV estimate and a bound.
    #[serde(default = "default_tv_tolerance")]
    pub tv_tolerance: f64,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    #[serde(default)]
    pub master_seed: u64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_out(),
            formats: default_formats(),
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f == format)
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    #[serde(default = "default_deltas")]
    pub delta: Vec<f64>,
    #[serde(default = "default_ns")]
    pub n: Vec<f64>,
    /// KL budgets to evaluate.
    #[serde(default)]
    pub kl: Vec<f64>,
    /// Fractional moments `M_δ`, paired with `delta`.
    #[serde(default)]
    pub m_delta: Vec<f64>,
    /// `μ(A)` for the mass-transfer lower bounds.
    #[serde(default = "one_f")]
    pub mass: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateConfig {
    /// Explicit constants; derived from the Navier–Stokes model otherwise.
    pub constants: Option<ConstantsConfig>,
    pub gamma_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub zeta: f64,
    pub kappa: f64,
    pub mu: f64,
    pub b: f64,
    #[serde(default)]
    pub b1: f64,
    #[serde(default)]
    pub b2: f64,
}

impl From<ConstantsConfig> for HConstants {
    fn from(c: ConstantsConfig) -> Self {
        HConstants {
            zeta: c.zeta,
            kappa: c.kappa,
            mu: c.mu,
            b: c.b,
            b1: c.b1,
            b2: c.b2,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct HittingConfig {
    /// Sampled starting points of the set `B`.
    pub points: Vec<StateConfig>,
    /// Target `D = {x : U(x) ≤ radius²}`.
    pub radius: f64,
    pub t0: f64,
    pub dt: f64,
    pub n_traj: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct WassersteinConfig {
    /// Samples per law (at most the exact solver's cap).
    pub samples: usize,
    pub t: f64,
    pub dt: f64,
    /// Distances are capped at this value.
    #[serde(default = "one_f")]
    pub cap: f64,
}

fn default_ensemble() -> usize {
    256
}
fn one() -> usize {
    1
}
fn one_f() -> f64 {
    1.0
}
fn default_target_rate() -> f64 {
    1.0
}
fn default_pilot() -> usize {
    16
}
fn default_bins() -> usize {
    30
}
fn default_tv_tolerance() -> f64 {
    0.05
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}
fn default_deltas() -> Vec<f64> {
    vec![0.5]
}
fn default_ns() -> Vec<f64> {
    vec![8.0]
}

/// Parse failure with its 1-based position.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ParseError> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|s| line_col(text, s.start))
            .unwrap_or((1, 1));
        ParseError {
            line,
            column,
            message: e.message().to_string(),
        }
    })
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

pub fn read_config(path: &Path) -> Result<String, std::io::Error> {
    std::fs::read_to_string(path)
}

/// Checks every parameter that does not need a constructed model.
pub fn validate(cfg: &ExperimentConfig) -> Vec<String> {
    let mut errs = Vec::new();
    if let Some(c) = &cfg.coupling {
        positive(&mut errs, "coupling.t_end", c.t_end);
        positive(&mut errs, "coupling.dt", c.dt);
        positive(&mut errs, "coupling.target_rate", c.target_rate);
        if let Some(g) = c.gain {
            positive(&mut errs, "coupling.gain", g);
        }
        for (key, v) in [
            ("coupling.zeta", c.zeta),
            ("coupling.mu", c.mu),
            ("coupling.lipschitz_scale", c.lipschitz_scale),
        ] {
            if let Some(v) = v {
                positive(&mut errs, key, v);
            }
        }
        for (key, v) in [("coupling.kappa", c.kappa), ("coupling.b", c.b), ("coupling.b1", c.b1), ("coupling.b2", c.b2)] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    errs.push(format!("{key} must be >= 0"));
                }
            }
        }
        if !(c.tv_tolerance >= 0.0) {
            errs.push("coupling.tv_tolerance must be >= 0".into());
        }
        if c.ensemble == 0 {
            errs.push("coupling.ensemble must be at least 1".into());
        }
        if c.record_every == 0 {
            errs.push("coupling.record_every must be at least 1".into());
        }
        if c.pilot_size == 0 {
            errs.push("coupling.pilot_size must be at least 1".into());
        }
        if c.tv_bins < 2 {
            errs.push("coupling.tv_bins must be at least 2".into());
        }
        if c.control == ControlConfig::Gain && c.gain.is_none() {
            errs.push("coupling.gain is required when coupling.control = \"gain\"".into());
        }
        if !(c.fit_from >= 0.0 && c.fit_from < c.t_end) {
            errs.push("coupling.fit_from must lie in [0, coupling.t_end)".into());
        }
        if c.t_end > 0.0 && c.dt > 0.0 {
            let ratio = c.t_end / c.dt;
            if (ratio - ratio.round()).abs() > 1e-9 * ratio {
                errs.push("coupling.t_end must be a whole number of coupling.dt steps".into());
            }
        }
        if let Some(model) = &cfg.model {
            let gain_based = matches!(model, ModelConfig::Sde(_) | ModelConfig::Sfde(_));
            match c.control {
                ControlConfig::LowModes if gain_based => {
                    errs.push(format!("coupling.control = \"low-modes\" needs an nse model, got {}", model.kind()))
                }
                ControlConfig::Gain | ControlConfig::Auto if !gain_based => {
                    errs.push("coupling.control for an nse model must be \"none\" or \"low-modes\"".into())
                }
                _ => {}
            }
        }
    }
    if let Some(ModelConfig::Sfde(m)) = &cfg.model {
        let steps = [
            ("coupling.dt", cfg.coupling.as_ref().map(|c| c.dt)),
            ("hitting.dt", cfg.hitting.as_ref().map(|h| h.dt)),
            ("wasserstein.dt", cfg.wasserstein.as_ref().map(|w| w.dt)),
        ];
        for (key, dt) in steps {
            if let Some(dt) = dt {
                if dt != m.dt {
                    errs.push(format!("{key} must equal model.dt ({}) for an sfde model, got {dt}", m.dt));
                }
            }
        }
    }
    if let Some(b) = &cfg.bounds {
        for d in &b.delta {
            if !(*d > 0.0 && *d < 1.0) {
                errs.push(format!("bounds.delta entries must lie in (0, 1), got {d}"));
            }
        }
        for n in &b.n {
            if !(*n > 1.0 && n.is_finite()) {
                errs.push(format!("bounds.n entries must exceed 1, got {n}"));
            }
        }
        for k in &b.kl {
            if !(*k >= 0.0) {
                errs.push(format!("bounds.kl entries must be >= 0, got {k}"));
            }
        }
        if !b.m_delta.is_empty() && b.m_delta.len() != b.delta.len() {
            errs.push("bounds.m_delta must have one entry per bounds.delta".into());
        }
        if !(0.0..=1.0).contains(&b.mass) {
            errs.push("bounds.mass must lie in [0, 1]".into());
        }
    }
    if let Some(h) = &cfg.hitting {
        positive(&mut errs, "hitting.radius", h.radius);
        positive(&mut errs, "hitting.t0", h.t0);
        positive(&mut errs, "hitting.dt", h.dt);
        if h.n_traj == 0 {
            errs.push("hitting.n_traj must be at least 1".into());
        }
        if h.points.is_empty() {
            errs.push("hitting.points must not be empty".into());
        }
    }
    if let Some(w) = &cfg.wasserstein {
        positive(&mut errs, "wasserstein.t", w.t);
        positive(&mut errs, "wasserstein.dt", w.dt);
        positive(&mut errs, "wasserstein.cap", w.cap);
        if w.samples == 0 || w.samples > gencoupling::metrics::DEFAULT_TRANSPORT_CAP {
            errs.push(format!(
                "wasserstein.samples must lie in 1..={}",
                gencoupling::metrics::DEFAULT_TRANSPORT_CAP
            ));
        }
    }
    for f in &cfg.output.formats {
        if !matches!(f.as_str(), "csv" | "json" | "text") {
            errs.push(format!("output.formats: unknown format {f:?} (expected csv, json or text)"));
        }
    }
    errs
}

fn positive(errs: &mut Vec<String>, key: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        errs.push(format!("{key} must be > 0"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const OU: &str = r#"
[model]
kind = "sde"
eigenvalues = [1.0]
sigma = [[1.0]]
x0 = [1.0]
y0 = [0.0]

[coupling]
control = "gain"
gain = 1.0
t_end = 1.0
dt = 0.001
"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = parse_config(OU).unwrap();
        assert!(validate(&cfg).is_empty());
        assert_eq!(cfg.coupling.unwrap().ensemble, 256);
        assert_eq!(cfg.seeds.master_seed, 0);
    }

    #[test]
    fn negative_dt_is_named() {
        let cfg = parse_config(&OU.replace("dt = 0.001", "dt = -0.001")).unwrap();
        let errs = validate(&cfg);
        assert!(errs.iter().any(|e| e == "coupling.dt must be > 0"), "{errs:?}");
    }

    #[test]
    fn sfde_step_must_match_delay_grid() {
        let text = r#"
[model]
kind = "sfde"
delay = 1.0
dt = 0.01
drift = { kind = "linear-delay", a = [[-2.0]], b = [[0.5]] }
diffusion = { kind = "constant", matrix = [[1.0]] }
x0 = [1.0]
y0 = [0.0]

[coupling]
control = "none"
t_end = 1.0
dt = 0.001
"#;
        let errs = validate(&parse_config(text).unwrap());
        assert_eq!(errs, vec!["coupling.dt must equal model.dt (0.01) for an sfde model, got 0.001".to_string()]);
    }

    #[test]
    fn all_errors_are_collected() {
        let text = OU.replace("dt = 0.001", "dt = -0.001").replace("t_end = 1.0", "t_end = 0.0");
        let errs = validate(&parse_config(&text).unwrap());
        assert!(errs.len() >= 2, "{errs:?}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let text = OU.replace("gain = 1.0", "gain = 1.0\ngian = 2.0");
        let e = parse_config(&text).unwrap_err();
        assert!(e.message.contains("gian"), "{e:?}");
        assert_eq!(e.line, 12);
        let e = parse_config("[model\nkind = 1").unwrap_err();
        assert_eq!(e.line, 1);
    }
}
