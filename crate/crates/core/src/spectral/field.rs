use std::fmt;
use std::ops::{Add, Neg, Sub};

use rustfft::num_complex::Complex64;

use super::SpectralError;

/// Integer wave vector on the 2π-periodic torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WaveVector {
    pub kx: i32,
    pub ky: i32,
}

impl WaveVector {
    pub const fn new(kx: i32, ky: i32) -> Self {
        Self { kx, ky }
    }

    /// |k|², which is also the Stokes eigenvalue of the mode on the torus.
    pub fn norm2(self) -> i64 {
        let (x, y) = (self.kx as i64, self.ky as i64);
        x * x + y * y
    }

    /// Representative of the pair {k, -k}: ky > 0, or ky = 0 and kx > 0.
    pub fn is_canonical(self) -> bool {
        self.ky > 0 || (self.ky == 0 && self.kx > 0)
    }

    pub fn canonical(self) -> Self {
        if self.is_canonical() {
            self
        } else {
            -self
        }
    }
}

impl Neg for WaveVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.kx, -self.ky)
    }
}

impl fmt::Display for WaveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.kx, self.ky)
    }
}

/// Which real eigenfunction of a conjugate pair a mode amplitude refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Cos,
    Sin,
}

/// Truncated Fourier representation of a real, zero-mean scalar vorticity
/// field on [0, 2π]². Retained modes are `0 < |k|² ≤ k_max²`.
///
/// Coefficients are stored densely on the `(2K+1)²` square; entries outside
/// the retained disc (and the zero mode) are kept at zero. Every constructor
/// and mutator preserves Hermitian symmetry `ω̂(-k) = conj ω̂(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    k_max: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(k_max: usize) -> Self {
        let side = 2 * k_max + 1;
        Self {
            k_max,
            coeffs: vec![Complex64::new(0.0, 0.0); side * side],
        }
    }

    /// Builds a field from `(k, ω̂_k)` pairs; the conjugate mode is filled in.
    /// Non-retained wave vectors are rejected.
    pub fn from_modes<I>(k_max: usize, modes: I) -> Result<Self, SpectralError>
    where
        I: IntoIterator<Item = (WaveVector, Complex64)>,
    {
        let mut field = Self::zeros(k_max);
        for (k, c) in modes {
            field.set(k, c)?;
        }
        Ok(field)
    }

    /// Field whose induced velocity is `amplitude` times a unit-norm real
    /// Stokes eigenfunction (`√2 cos(k·x)` or `√2 sin(k·x)` profile).
    pub fn stokes_mode(
        k_max: usize,
        k: WaveVector,
        phase: Phase,
        amplitude: f64,
    ) -> Result<Self, SpectralError> {
        let k = k.canonical();
        let scale = amplitude * (k.norm2() as f64).sqrt() / std::f64::consts::SQRT_2;
        let c = match phase {
            Phase::Cos => Complex64::new(scale, 0.0),
            Phase::Sin => Complex64::new(0.0, -scale),
        };
        Self::from_modes(k_max, [(k, c)])
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn is_retained(&self, k: WaveVector) -> bool {
        let n2 = k.norm2();
        n2 > 0 && n2 <= (self.k_max * self.k_max) as i64
    }

    #[inline]
    pub(crate) fn index(&self, k: WaveVector) -> usize {
        let side = 2 * self.k_max + 1;
        let k_max = self.k_max as i32;
        (k.kx + k_max) as usize * side + (k.ky + k_max) as usize
    }

    pub fn get(&self, k: WaveVector) -> Complex64 {
        if self.is_retained(k) {
            self.coeffs[self.index(k)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Sets `ω̂_k = c` and `ω̂_{-k} = conj c`.
    pub fn set(&mut self, k: WaveVector, c: Complex64) -> Result<(), SpectralError> {
        if !self.is_retained(k) {
            return Err(SpectralError::ModeNotRetained { k, k_max: self.k_max });
        }
        let (i, j) = (self.index(k), self.index(-k));
        self.coeffs[i] = c;
        self.coeffs[j] = c.conj();
        Ok(())
    }

    /// Retained wave vectors in lexicographic order.
    pub fn modes(&self) -> impl Iterator<Item = WaveVector> + '_ {
        let k_max = self.k_max as i32;
        (-k_max..=k_max)
            .flat_map(move |kx| (-k_max..=k_max).map(move |ky| WaveVector::new(kx, ky)))
            .filter(move |&k| self.is_retained(k))
    }

    /// Canonical representatives of the retained conjugate pairs.
    pub fn canonical_modes(&self) -> impl Iterator<Item = WaveVector> + '_ {
        self.modes().filter(|k| k.is_canonical())
    }

    pub(crate) fn raw(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn raw_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Energy norm of the induced velocity, `(Σ |ω̂_k|² / |k|²)^{1/2}`.
    pub fn h_norm(&self) -> f64 {
        self.h_norm2().sqrt()
    }

    pub fn h_norm2(&self) -> f64 {
        self.modes()
            .map(|k| self.coeffs[self.index(k)].norm_sqr() / k.norm2() as f64)
            .sum()
    }

    /// Gradient norm of the induced velocity; equals the vorticity L² norm.
    pub fn v_norm(&self) -> f64 {
        self.v_norm2().sqrt()
    }

    pub fn v_norm2(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `(‖u‖_H, ‖u‖_V)` of the induced velocity.
    pub fn norms(&self) -> (f64, f64) {
        (self.h_norm(), self.v_norm())
    }

    /// Velocity inner product `(u, u')_H` of the induced velocities.
    pub fn h_inner(&self, other: &Self) -> f64 {
        self.modes()
            .map(|k| {
                let i = self.index(k);
                (self.coeffs[i] * other.coeffs[i].conj()).re / k.norm2() as f64
            })
            .sum()
    }

    /// Vorticity inner product `Σ ω̂_k conj(ω̂'_k)` (real part).
    pub fn vorticity_inner(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    /// Largest Hermitian-symmetry defect `|ω̂(-k) - conj ω̂(k)|`.
    pub fn hermitian_defect(&self) -> f64 {
        self.modes()
            .map(|k| (self.get(-k) - self.get(k).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert_eq!(self.k_max, x.k_max);
        for (s, v) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *s += v * a;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for c in &mut self.coeffs {
            *c *= a;
        }
    }

    pub fn fill_zero(&mut self) {
        self.coeffs.fill(Complex64::new(0.0, 0.0));
    }

    /// Multiplies every mode by `exp(-rate · |k|² · h)`.
    pub fn apply_heat(&mut self, rate: f64, h: f64) {
        self.mul_table(&Self::heat_table(self.k_max, rate, h));
    }

    /// `exp(-rate · |k|² · h)` for every stored coefficient, for use with
    /// [`Self::mul_table`].
    pub fn heat_table(k_max: usize, rate: f64, h: f64) -> Vec<f64> {
        let k = k_max as i32;
        (-k..=k)
            .flat_map(|kx| (-k..=k).map(move |ky| (-rate * (kx * kx + ky * ky) as f64 * h).exp()))
            .collect()
    }

    /// Multiplies coefficients elementwise by a table from [`Self::heat_table`].
    pub fn mul_table(&mut self, table: &[f64]) {
        debug_assert_eq!(table.len(), self.coeffs.len());
        for (c, t) in self.coeffs.iter_mut().zip(table) {
            *c *= *t;
        }
    }

    /// Real coordinates of the induced velocity in the orthonormal
    /// `(cos, sin)` Stokes eigenbasis, one pair per canonical mode in `modes`.
    pub fn velocity_coordinates(&self, modes: &[WaveVector]) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * modes.len());
        for &k in modes {
            let c = self.get(k.canonical());
            let s = std::f64::consts::SQRT_2 / (k.norm2() as f64).sqrt();
            out.push(c.re * s);
            out.push(-c.im * s);
        }
        out
    }

    /// Adds the field described by `coords` (see [`Self::velocity_coordinates`]).
    pub fn add_velocity_coordinates(&mut self, modes: &[WaveVector], coords: &[f64]) {
        for (j, &k) in modes.iter().enumerate() {
            let k = k.canonical();
            let s = (k.norm2() as f64).sqrt() / std::f64::consts::SQRT_2;
            let c = Complex64::new(coords[2 * j] * s, -coords[2 * j + 1] * s);
            let (i, ineg) = (self.index(k), self.index(-k));
            self.coeffs[i] += c;
            self.coeffs[ineg] += c.conj();
        }
    }
}

impl Add<&SpectralField> for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub<&SpectralField> for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

/// Orthogonal projector onto the span of the `n` lowest Stokes modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeProjector {
    n: usize,
    k_max: usize,
    modes: Vec<WaveVector>,
    lambda_next: Option<f64>,
}

impl ModeProjector {
    /// Keeps the first `n` entries of [`super::stokes_eigenvalues`]`(k_max)`.
    /// The retained set must be closed under `k -> -k`, otherwise the
    /// projection of a real field would not be real.
    pub fn new(k_max: usize, n: usize) -> Result<Self, SpectralError> {
        let spectrum = super::stokes_eigenvalues(k_max)?;
        if n > spectrum.len() {
            return Err(SpectralError::Dimension {
                requested: n,
                available: spectrum.len(),
            });
        }
        let modes: Vec<WaveVector> = spectrum[..n].iter().map(|&(_, k)| k).collect();
        if let Some(&k) = modes.iter().find(|k| !modes.contains(&-**k)) {
            return Err(SpectralError::SplitConjugatePair { n, k });
        }
        let lambda_next = spectrum.get(n).map(|&(lambda, _)| lambda);
        Ok(Self {
            n,
            k_max,
            modes,
            lambda_next,
        })
    }

    /// Largest closed projector whose modes all satisfy `|k|² ≤ shell`.
    pub fn up_to_shell(k_max: usize, shell: i64) -> Result<Self, SpectralError> {
        let n = super::stokes_eigenvalues(k_max)?
            .iter()
            .take_while(|(_, k)| k.norm2() <= shell)
            .count();
        Self::new(k_max, n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn modes(&self) -> &[WaveVector] {
        &self.modes
    }

    pub fn canonical_modes(&self) -> Vec<WaveVector> {
        self.modes.iter().copied().filter(|k| k.is_canonical()).collect()
    }

    /// λ_{N+1}, the first eigenvalue not covered by the projector.
    pub fn lambda_next(&self) -> Option<f64> {
        self.lambda_next
    }

    pub fn contains(&self, k: WaveVector) -> bool {
        self.modes.binary_search_by(|m| cmp_spectral(*m, k)).is_ok()
    }

    pub fn apply(&self, field: &SpectralField) -> Result<SpectralField, SpectralError> {
        if let Some(&k) = self.modes.iter().find(|&&k| !field.is_retained(k)) {
            return Err(SpectralError::ModeNotRetained {
                k,
                k_max: field.k_max(),
            });
        }
        let mut out = SpectralField::zeros(field.k_max());
        for &k in &self.modes {
            let i = out.index(k);
            out.raw_mut()[i] = field.raw()[i];
        }
        Ok(out)
    }
}

/// Spectral ordering: ascending `|k|²`, ties lexicographic on `(kx, ky)`.
pub(crate) fn cmp_spectral(a: WaveVector, b: WaveVector) -> std::cmp::Ordering {
    a.norm2().cmp(&b.norm2()).then(a.cmp(&b))
}
