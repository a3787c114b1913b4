//! Truncated Fourier representation of 2D incompressible flow on the
//! 2π-periodic torus.
//!
//! States are scalar vorticity fields. Velocity norms are recovered through
//! Biot–Savart: `‖u‖²_H = Σ |ω̂_k|²/|k|²` and `‖u‖²_V = Σ |ω̂_k|²`, with
//! Parseval taken against the normalized measure on the torus. Stokes
//! eigenvalues are `|k|²`, so the first one is 1.

mod field;
mod nonlinear;

pub use field::{ModeProjector, Phase, SpectralField, WaveVector};
pub(crate) use field::cmp_spectral;
pub use nonlinear::{biot_savart, dealiased_grid_size, nonlinear_term, NonlinearKernel, VelocityField};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("empty spectrum: cutoff must be at least 1")]
    EmptySpectrum,
    #[error("mode {k} is not retained at cutoff {k_max}")]
    ModeNotRetained { k: WaveVector, k_max: usize },
    #[error("projector needs {requested} modes but only {available} are retained")]
    Dimension { requested: usize, available: usize },
    #[error("projector of rank {n} splits the conjugate pair of {k}")]
    SplitConjugatePair { n: usize, k: WaveVector },
}

/// Stokes spectrum of the truncation: `(λ, k)` for every retained wave
/// vector, ascending in `λ = |k|²` with ties broken lexicographically.
pub fn stokes_eigenvalues(k_max: usize) -> Result<Vec<(f64, WaveVector)>, SpectralError> {
    if k_max == 0 {
        return Err(SpectralError::EmptySpectrum);
    }
    let mut modes: Vec<WaveVector> = SpectralField::zeros(k_max).modes().collect();
    modes.sort_by(|a, b| field::cmp_spectral(*a, *b));
    Ok(modes.into_iter().map(|k| (k.norm2() as f64, k)).collect())
}
