use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{SpectralField, WaveVector};

/// Velocity induced by a vorticity field, stored as the amplitude `a_k` of
/// `û_k = i·k^⊥·a_k` with `k^⊥ = (-ky, kx)`. Every representable field is
/// divergence-free.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    amplitude: SpectralField,
}

impl VelocityField {
    pub fn k_max(&self) -> usize {
        self.amplitude.k_max()
    }

    /// `(û_x, û_y)` at `k`.
    pub fn coeff(&self, k: WaveVector) -> (Complex64, Complex64) {
        let a = self.amplitude.get(k) * Complex64::new(0.0, 1.0);
        (a * -(k.ky as f64), a * k.kx as f64)
    }

    /// `k · û_k`, evaluated as `(k·k^⊥)·i·a_k`.
    pub fn divergence(&self, k: WaveVector) -> Complex64 {
        let dot = k.kx * -k.ky + k.ky * k.kx;
        self.amplitude.get(k) * Complex64::new(0.0, dot as f64)
    }

    /// `(û_x, û_y)` as two Hermitian coefficient fields.
    pub fn components(&self) -> (SpectralField, SpectralField) {
        let mut ux = SpectralField::zeros(self.k_max());
        let mut uy = SpectralField::zeros(self.k_max());
        for k in self.amplitude.modes() {
            let (cx, cy) = self.coeff(k);
            let i = ux.index(k);
            ux.raw_mut()[i] = cx;
            uy.raw_mut()[i] = cy;
        }
        (ux, uy)
    }

    /// `(Σ_k |û_k|²)^{1/2}`
    pub fn l2_norm(&self) -> f64 {
        self.amplitude
            .modes()
            .map(|k| {
                let (ux, uy) = self.coeff(k);
                ux.norm_sqr() + uy.norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Biot–Savart: `û_k = i·k^⊥·ω̂_k/|k|²`.
pub fn biot_savart(omega: &SpectralField) -> VelocityField {
    let mut amplitude = omega.clone();
    for k in omega.modes() {
        let i = amplitude.index(k);
        amplitude.raw_mut()[i] /= k.norm2() as f64;
    }
    VelocityField { amplitude }
}

/// Smallest 5-smooth grid size that dealiases quadratic products of modes
/// with `|k_x|, |k_y| ≤ k_max` (the 2/3 rule: `M ≥ 3·k_max + 1`).
pub fn dealiased_grid_size(k_max: usize) -> usize {
    let mut m = 3 * k_max + 1;
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Pseudo-spectral evaluation of `-(u·∇)ω` with 2/3-rule padding.
///
/// Owns its FFT buffers; clone one per worker. Plans are shared.
pub struct NonlinearKernel {
    k_max: usize,
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Clone for NonlinearKernel {
    fn clone(&self) -> Self {
        Self {
            k_max: self.k_max,
            m: self.m,
            fwd: Arc::clone(&self.fwd),
            inv: Arc::clone(&self.inv),
            a: self.a.clone(),
            b: self.b.clone(),
            scratch: self.scratch.clone(),
        }
    }
}

impl std::fmt::Debug for NonlinearKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NonlinearKernel")
            .field("k_max", &self.k_max)
            .field("grid", &self.m)
            .finish()
    }
}

impl NonlinearKernel {
    pub fn new(k_max: usize) -> Self {
        let m = dealiased_grid_size(k_max);
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        let scratch_len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        let zero = Complex64::new(0.0, 0.0);
        Self {
            k_max,
            m,
            fwd,
            inv,
            a: vec![zero; m * m],
            b: vec![zero; m * m],
            scratch: vec![zero; scratch_len],
        }
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn grid_size(&self) -> usize {
        self.m
    }

    #[inline]
    fn wrap(&self, k: i32) -> usize {
        k.rem_euclid(self.m as i32) as usize
    }

    /// Writes `-(u·∇)ω` (truncated to the retained modes) into `out`.
    pub fn apply(&mut self, omega: &SpectralField, out: &mut SpectralField) {
        assert_eq!(omega.k_max(), self.k_max, "kernel/field cutoff mismatch");
        assert_eq!(out.k_max(), self.k_max, "kernel/output cutoff mismatch");
        let m = self.m;
        let zero = Complex64::new(0.0, 0.0);
        self.a.fill(zero);
        self.b.fill(zero);

        // a ↔ u_x + i u_y, b ↔ ∂_x ω + i ∂_y ω; both inverse transforms are
        // of Hermitian pairs, so each physical array packs two real fields.
        for k in omega.modes() {
            let w = omega.raw()[omega.index(k)];
            let (kx, ky) = (k.kx as f64, k.ky as f64);
            let n2 = k.norm2() as f64;
            let idx = self.wrap(k.kx) * m + self.wrap(k.ky);
            self.a[idx] = w * Complex64::new(-kx, -ky) / n2;
            self.b[idx] = w * Complex64::new(-ky, kx);
        }

        let live_rows: Vec<usize> = (-(self.k_max as i32)..=self.k_max as i32)
            .map(|k| self.wrap(k))
            .collect();
        for buf in [&mut self.a, &mut self.b] {
            for &r in &live_rows {
                self.inv
                    .process_with_scratch(&mut buf[r * m..(r + 1) * m], &mut self.scratch);
            }
            transpose(buf, m);
            self.inv.process_with_scratch(buf, &mut self.scratch);
        }

        // pointwise u·∇ω, stored back into `a` as a real signal
        for (p, q) in self.a.iter_mut().zip(&self.b) {
            *p = Complex64::new(p.re * q.re + p.im * q.im, 0.0);
        }

        self.fwd.process_with_scratch(&mut self.a, &mut self.scratch);
        transpose(&mut self.a, m);
        for &r in &live_rows {
            self.fwd
                .process_with_scratch(&mut self.a[r * m..(r + 1) * m], &mut self.scratch);
        }

        let norm = -1.0 / (m * m) as f64;
        out.fill_zero();
        for k in omega.modes() {
            let idx = self.wrap(k.kx) * m + self.wrap(k.ky);
            let i = out.index(k);
            out.raw_mut()[i] = self.a[idx] * norm;
        }
        // restore exact Hermitian symmetry lost to roundoff
        for k in omega.canonical_modes() {
            let c = out.get(k);
            let c = (c + out.get(-k).conj()) * 0.5;
            out.set(k, c).expect("retained mode");
        }
    }
}

fn transpose(buf: &mut [Complex64], m: usize) {
    for i in 0..m {
        for j in (i + 1)..m {
            buf.swap(i * m + j, j * m + i);
        }
    }
}

/// One-shot `-(u·∇)ω`; builds a fresh kernel.
pub fn nonlinear_term(omega: &SpectralField) -> SpectralField {
    let mut kernel = NonlinearKernel::new(omega.k_max());
    let mut out = SpectralField::zeros(omega.k_max());
    kernel.apply(omega, &mut out);
    out
}
