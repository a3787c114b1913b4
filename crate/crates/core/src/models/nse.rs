use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;

use super::integrator::{ifrk4, Axpy};
use super::{check_dim, check_norm, ControlLaw, CouplingModel, ModelError, Observation};
use crate::spectral::{cmp_spectral, ModeProjector, NonlinearKernel, Phase, SpectralField, WaveVector};

/// Least-squares residual accepted for the control solve and range check.
pub const RANGE_TOLERANCE: f64 = 1e-10;

/// One real noise direction: `amplitude` times a unit Stokes eigenfunction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseDirection {
    pub k: WaveVector,
    pub phase: Phase,
    pub amplitude: f64,
}

/// Spectrally truncated 2D stochastic Navier–Stokes equations in vorticity
/// form: `dω = (ν Δω − (u·∇)ω + f) dt + Σ_j σ_j dW_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct NseSpec {
    pub k_max: usize,
    pub nu: f64,
    /// Deterministic forcing, stored like a state (vorticity coefficients).
    pub forcing: SpectralField,
    pub sigma: Vec<SpectralField>,
    /// `P_N`, the modes steered by the control.
    pub projector: ModeProjector,
}

impl NseSpec {
    pub fn sigma_from_directions(k_max: usize, dirs: &[NoiseDirection]) -> Result<Vec<SpectralField>, ModelError> {
        dirs.iter()
            .map(|d| SpectralField::stokes_mode(k_max, d.k, d.phase, d.amplitude).map_err(ModelError::from))
            .collect()
    }
}

/// Per-trajectory scratch: FFT buffers and cached heat factors.
#[derive(Debug, Clone)]
pub struct NseWorkspace {
    kernel: NonlinearKernel,
    heat: Option<(f64, Vec<f64>)>,
}

impl NseWorkspace {
    fn half_table(&mut self, k_max: usize, nu: f64, dt: f64) -> &[f64] {
        if self.heat.as_ref().map(|(h, _)| *h) != Some(dt) {
            self.heat = Some((dt, SpectralField::heat_table(k_max, nu, 0.5 * dt)));
        }
        &self.heat.as_ref().expect("just filled").1
    }
}

#[derive(Debug, Clone, PartialEq)]
struct PairField {
    x: SpectralField,
    d: SpectralField,
}

impl Axpy for PairField {
    fn axpy(&mut self, a: f64, other: &Self) {
        self.x.axpy(a, &other.x);
        self.d.axpy(a, &other.d);
    }
}

#[derive(Debug, Clone)]
pub struct NsePair {
    u: PairField,
    controlled: bool,
    ws: NseWorkspace,
}

/// Model object with the precomputed control solve.
#[derive(Debug, Clone)]
pub struct NavierStokes2d {
    spec: NseSpec,
    kernel: NonlinearKernel,
    /// Sparse `(storage index, coefficient)` lists of the σ_j.
    sigma_sparse: Vec<Vec<(usize, Complex64)>>,
    projector_modes: Vec<WaveVector>,
    /// `σ⁺` restricted to velocity coordinates of `H_N`.
    control_matrix: DMatrix<f64>,
    control_norm: f64,
    /// `ν λ_{N+1} / 2`, or zero when the projector is empty.
    control_scale: f64,
}

impl NavierStokes2d {
    pub fn new(spec: NseSpec) -> Result<Self, ModelError> {
        if !(spec.nu >= 0.0 && spec.nu.is_finite()) {
            return Err(ModelError::Invalid("viscosity must be nonnegative".into()));
        }
        let k_max = spec.k_max;
        if k_max == 0 {
            return Err(ModelError::Invalid("cutoff must be at least 1".into()));
        }
        for (what, f) in std::iter::once(("forcing", &spec.forcing)).chain(spec.sigma.iter().map(|s| ("sigma", s))) {
            if f.k_max() != k_max {
                return Err(ModelError::Invalid(format!("{what} has cutoff {} instead of {k_max}", f.k_max())));
            }
            if !f.is_finite() {
                return Err(ModelError::Invalid(format!("{what} is not finite")));
            }
        }
        if spec.projector.k_max() != k_max {
            return Err(ModelError::Invalid("projector cutoff differs from model cutoff".into()));
        }

        let sigma_sparse = spec
            .sigma
            .iter()
            .map(|s| {
                s.modes()
                    .map(|k| (s.index(k), s.get(k)))
                    .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
                    .collect()
            })
            .collect();

        // velocity coordinates on the union of noise support and H_N
        let projector_modes = spec.projector.canonical_modes();
        let mut basis: Vec<WaveVector> = spec
            .sigma
            .iter()
            .flat_map(|s| s.canonical_modes().filter(|&k| s.get(k) != Complex64::new(0.0, 0.0)).collect::<Vec<_>>())
            .chain(projector_modes.iter().copied())
            .collect();
        basis.sort_by(|a, b| cmp_spectral(*a, *b));
        basis.dedup();
        let m = spec.sigma.len();
        let dim = 2 * basis.len();
        let mut sigma_mat = DMatrix::zeros(dim, m);
        for (j, s) in spec.sigma.iter().enumerate() {
            sigma_mat.set_column(j, &DVector::from_vec(s.velocity_coordinates(&basis)));
        }

        let n_proj = 2 * projector_modes.len();
        let mut control_matrix = DMatrix::zeros(m, n_proj);
        let mut control_norm = 0.0;
        if n_proj > 0 {
            let pinv = if m == 0 {
                DMatrix::zeros(0, dim)
            } else {
                let smax = sigma_mat.clone().svd(false, false).singular_values.max();
                sigma_mat
                    .clone()
                    .pseudo_inverse(1e-12 * smax.max(f64::MIN_POSITIVE))
                    .map_err(|e| ModelError::RangeCondition(e.to_string()))?
            };
            for (c, &k) in projector_modes.iter().enumerate() {
                let row = basis.binary_search_by(|b| cmp_spectral(*b, k)).expect("projector mode in basis");
                for (off, phase) in ["cos", "sin"].iter().enumerate() {
                    let mut e = DVector::zeros(dim);
                    e[2 * row + off] = 1.0;
                    let beta = if m == 0 { DVector::zeros(0) } else { &pinv * &e };
                    let residual = if m == 0 { 1.0 } else { (&sigma_mat * &beta - &e).norm() };
                    if residual > RANGE_TOLERANCE {
                        return Err(ModelError::RangeCondition(format!(
                            "the {phase} mode at k = {k} of P_N H is not reached by the noise directions (residual {residual:e})"
                        )));
                    }
                    control_matrix.set_column(2 * c + off, &beta);
                }
            }
            control_norm = control_matrix.clone().svd(false, false).singular_values.max();
        }
        let control_scale = match spec.projector.lambda_next() {
            Some(l) if n_proj > 0 => 0.5 * spec.nu * l,
            _ => 0.0,
        };
        Ok(Self {
            kernel: NonlinearKernel::new(k_max),
            sigma_sparse,
            projector_modes,
            control_matrix,
            control_norm,
            control_scale,
            spec,
        })
    }

    pub fn spec(&self) -> &NseSpec {
        &self.spec
    }

    pub fn k_max(&self) -> usize {
        self.spec.k_max
    }

    pub fn nu(&self) -> f64 {
        self.spec.nu
    }

    /// `λ_{N+1}`
    pub fn lambda_next(&self) -> Option<f64> {
        self.spec.projector.lambda_next()
    }

    /// `‖σ‖²_H = Σ_j ‖σ_j‖²_H`
    pub fn sigma_norm2(&self) -> f64 {
        self.spec.sigma.iter().map(|s| s.h_norm2()).sum()
    }

    /// `‖A^{-1/2} f‖_H`
    pub fn forcing_norm_ahalf(&self) -> f64 {
        let f = &self.spec.forcing;
        f.modes()
            .map(|k| f.get(k).norm_sqr() / (k.norm2() as f64).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Operator norm of `σ⁺` on `H_N`; the control satisfies
    /// `|β| ≤ (ν λ_{N+1}/2) · C · ‖X − Y‖_H`.
    pub fn control_operator_norm(&self) -> f64 {
        self.control_norm
    }

    /// `(U, S) = (‖x‖²_H, ‖x‖²_V)`
    pub fn energy_terms(&self, state: &SpectralField) -> (f64, f64) {
        (state.h_norm2(), state.v_norm2())
    }

    fn beta(&self, d: &SpectralField) -> Vec<f64> {
        if self.control_scale == 0.0 {
            return vec![0.0; self.spec.sigma.len()];
        }
        let coords = DVector::from_vec(d.velocity_coordinates(&self.projector_modes));
        (&self.control_matrix * coords * self.control_scale).as_slice().to_vec()
    }

    /// `β = (ν λ_{N+1}/2) σ⁺ P_N (X − Y)`.
    pub fn control_drift(&self, x: &SpectralField, y: &SpectralField) -> Result<Vec<f64>, ModelError> {
        check_dim(self.k_max(), x.k_max())?;
        check_dim(self.k_max(), y.k_max())?;
        Ok(self.beta(&(x - y)))
    }

    /// `Σ_j w_j σ_j` added to `field` with weight `scale`.
    pub fn add_noise_field(&self, field: &mut SpectralField, w: &[f64], scale: f64) {
        let raw = field.raw_mut();
        for (entries, &wj) in self.sigma_sparse.iter().zip(w) {
            if wj == 0.0 {
                continue;
            }
            for &(i, c) in entries {
                raw[i] += c * (wj * scale);
            }
        }
    }

    fn validate_state(&self, s: &SpectralField) -> Result<(), ModelError> {
        check_dim(self.k_max(), s.k_max())
    }
}

impl CouplingModel for NavierStokes2d {
    type State = SpectralField;
    type Pair = NsePair;
    type Workspace = NseWorkspace;

    fn noise_dim(&self) -> usize {
        self.spec.sigma.len()
    }

    fn workspace(&self) -> NseWorkspace {
        NseWorkspace {
            kernel: self.kernel.clone(),
            heat: None,
        }
    }

    fn step(
        &self,
        ws: &mut NseWorkspace,
        state: &mut SpectralField,
        dw: &[f64],
        control: &[f64],
        dt: f64,
        t_end: f64,
    ) -> Result<(), ModelError> {
        self.validate_state(state)?;
        check_dim(self.noise_dim(), dw.len())?;
        check_dim(self.noise_dim(), control.len())?;
        self.add_noise_field(state, dw, 1.0);
        let mut push = self.spec.forcing.clone();
        self.add_noise_field(&mut push, control, 1.0);
        let table = ws.half_table(self.k_max(), self.spec.nu, dt).to_vec();
        let kernel = &mut ws.kernel;
        ifrk4(
            state,
            dt,
            |v: &mut SpectralField| v.mul_table(&table),
            |v: &SpectralField, out: &mut SpectralField| {
                kernel.apply(v, out);
                out.axpy(1.0, &push);
            },
        );
        check_norm(state.v_norm(), t_end)
    }

    fn lyapunov(&self, state: &SpectralField) -> f64 {
        state.h_norm2()
    }

    fn pair(&self, x0: &SpectralField, y0: &SpectralField, control: ControlLaw) -> Result<NsePair, ModelError> {
        self.validate_state(x0)?;
        self.validate_state(y0)?;
        let controlled = match control {
            ControlLaw::None => false,
            ControlLaw::LowModes => true,
            other => return Err(ModelError::UnsupportedControl(other.name())),
        };
        Ok(NsePair {
            u: PairField { x: x0.clone(), d: x0 - y0 },
            controlled,
            ws: self.workspace(),
        })
    }

    fn control(&self, pair: &NsePair, beta: &mut [f64]) {
        if pair.controlled {
            beta.copy_from_slice(&self.beta(&pair.u.d));
        } else {
            beta.fill(0.0);
        }
    }

    fn advance(&self, pair: &mut NsePair, dw: &[f64], dt: f64, t_end: f64) -> Result<(), ModelError> {
        check_dim(self.noise_dim(), dw.len())?;
        self.add_noise_field(&mut pair.u.x, dw, 1.0);
        let table = pair.ws.half_table(self.k_max(), self.spec.nu, dt).to_vec();
        let kernel = &mut pair.ws.kernel;
        let controlled = pair.controlled;
        let mut y = SpectralField::zeros(self.k_max());
        let mut ny = SpectralField::zeros(self.k_max());
        ifrk4(
            &mut pair.u,
            dt,
            |v: &mut PairField| {
                v.x.mul_table(&table);
                v.d.mul_table(&table);
            },
            |v: &PairField, out: &mut PairField| {
                kernel.apply(&v.x, &mut out.x);
                y.clone_from(&v.x);
                y.axpy(-1.0, &v.d);
                kernel.apply(&y, &mut ny);
                out.d.clone_from(&out.x);
                out.d.axpy(-1.0, &ny);
                out.x.axpy(1.0, &self.spec.forcing);
                if controlled {
                    let beta = self.beta(&v.d);
                    self.add_noise_field(&mut out.d, &beta, -1.0);
                }
            },
        );
        check_norm(pair.u.x.v_norm().max(pair.u.d.v_norm()), t_end)
    }

    fn observe(&self, pair: &NsePair) -> Observation {
        let (u_x, s_x) = self.energy_terms(&pair.u.x);
        Observation {
            q: pair.u.d.h_norm2(),
            u_x,
            s_x,
        }
    }

    fn states(&self, pair: &NsePair) -> (SpectralField, SpectralField) {
        (pair.u.x.clone(), &pair.u.x - &pair.u.d)
    }

    fn reimbursement_constant(&self, control: ControlLaw) -> Result<f64, ModelError> {
        match control {
            ControlLaw::None => Ok(0.0),
            ControlLaw::LowModes => Ok((self.control_scale * self.control_norm).powi(2)),
            other => Err(ModelError::UnsupportedControl(other.name())),
        }
    }
}
