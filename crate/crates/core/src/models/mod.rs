//! Concrete Markov models and their generalized-coupling pairs.
//!
//! Every model advances a single trajectory ([`CouplingModel::step`]) and a
//! coupled pair ([`CouplingModel::advance`]). Pairs are stored as `(X, D)`
//! with `D = X − Y`: the shared noise enters `X` only, so for additive noise
//! it cancels from the difference exactly, not just up to rounding.
//!
//! Additive-noise models (the dissipative SDE and Navier–Stokes) use a
//! noise-first splitting followed by a fourth-order integrating-factor
//! Runge–Kutta step for the drift, with the stiff diagonal part integrated
//! exactly. The delay equation uses Euler–Maruyama on the path endpoint.

mod integrator;
mod nse;
mod sde;
mod segment;
mod sfde;

pub use nse::{NavierStokes2d, NoiseDirection, NsePair, NseSpec, NseWorkspace, RANGE_TOLERANCE};
pub use sde::{DissipativeSde, DissipativeSdeSpec, Nonlinearity, SdePair};
pub use segment::Segment;
pub use sfde::{Sfde, SfdeDiffusion, SfdeDrift, SfdeLyapunov, SfdePair, SfdeSpec};

use thiserror::Error;

use crate::spectral::SpectralError;

/// Any norm above this aborts a trajectory.
pub const BLOW_UP_THRESHOLD: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("blow-up at t = {t}: norm {norm:e} exceeds threshold or is not finite")]
    BlowUp { t: f64, norm: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("range condition H_N ⊂ Range(σ) fails: {0}")]
    RangeCondition(String),
    #[error("diffusion has no right inverse: {0}")]
    Singular(String),
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("control law {0} is not supported by this model")]
    UnsupportedControl(&'static str),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// How the controlled copy `Y` is steered toward `X`, as a drift in noise
/// space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlLaw {
    /// True coupling: both copies see exactly the same noise.
    None,
    /// `β = gain · Σ⁺ (X − Y)` (SDE) or `β = gain · g(Y)⁻¹ (X(0) − Y(0))` (SFDE).
    Gain(f64),
    /// `β = (ν λ_{N+1}/2) σ⁺ P_N (X − Y)` (Navier–Stokes).
    LowModes,
}

impl ControlLaw {
    pub fn name(&self) -> &'static str {
        match self {
            ControlLaw::None => "none",
            ControlLaw::Gain(_) => "gain",
            ControlLaw::LowModes => "low-modes",
        }
    }
}

/// Per-time diagnostics of a pair: `q(X, Y)`, `U(X)` and `S(X)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub q: f64,
    pub u_x: f64,
    pub s_x: f64,
}

/// A Markov model that can run a single trajectory and a generalized
/// coupling of two trajectories driven by the same Brownian increments.
pub trait CouplingModel: Sync {
    type State: Clone + Send + Sync + std::fmt::Debug;
    type Pair: Clone + Send;
    /// Mutable scratch for single-trajectory steps.
    type Workspace: Send;

    fn noise_dim(&self) -> usize;

    /// Time step the model is tied to, if any (delay grids).
    fn fixed_dt(&self) -> Option<f64> {
        None
    }

    fn workspace(&self) -> Self::Workspace;

    /// One step of `X` with increment `dw` and constant control drift
    /// `control` (noise space) over `[t_end − dt, t_end]`.
    fn step(
        &self,
        ws: &mut Self::Workspace,
        state: &mut Self::State,
        dw: &[f64],
        control: &[f64],
        dt: f64,
        t_end: f64,
    ) -> Result<(), ModelError>;

    fn lyapunov(&self, state: &Self::State) -> f64;

    fn pair(&self, x0: &Self::State, y0: &Self::State, control: ControlLaw) -> Result<Self::Pair, ModelError>;

    /// Control drift `β` at the current pair state.
    fn control(&self, pair: &Self::Pair, beta: &mut [f64]);

    /// Advances both copies; `Y` additionally receives the control drift.
    fn advance(&self, pair: &mut Self::Pair, dw: &[f64], dt: f64, t_end: f64) -> Result<(), ModelError>;

    fn observe(&self, pair: &Self::Pair) -> Observation;

    fn states(&self, pair: &Self::Pair) -> (Self::State, Self::State);

    /// `c` with `|β|² ≤ c · q(X, Y)` for the given control law.
    fn reimbursement_constant(&self, control: ControlLaw) -> Result<f64, ModelError>;
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<(), ModelError> {
    if expected == got {
        Ok(())
    } else {
        Err(ModelError::Dimension { expected, got })
    }
}

pub(crate) fn check_norm(norm: f64, t: f64) -> Result<(), ModelError> {
    if norm.is_finite() && norm <= BLOW_UP_THRESHOLD {
        Ok(())
    } else {
        Err(ModelError::BlowUp { t, norm })
    }
}
