use nalgebra::{DMatrix, DVector};

use super::segment::Segment;
use super::{check_dim, check_norm, ControlLaw, CouplingModel, ModelError, Observation};

/// Drift `f(x_t)` of the delay equation, built from `x(0)`, `x(−r)` and the
/// window average.
#[derive(Debug, Clone, PartialEq)]
pub enum SfdeDrift {
    /// `a x(0) + b x(−r)`
    LinearDelay { a: DMatrix<f64>, b: DMatrix<f64> },
    /// `a x(0) + c (1/r)∫_{−r}^0 x(s) ds`
    DistributedDelay { a: DMatrix<f64>, c: DMatrix<f64> },
    /// `a x(0) + b tanh(x(−r))`, tanh taken componentwise.
    TanhDelay { a: DMatrix<f64>, b: DMatrix<f64> },
}

/// Diffusion `g(x_t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum SfdeDiffusion {
    /// Constant `n × m` matrix of full row rank.
    Constant(DMatrix<f64>),
    /// `(1 + amplitude · tanh|x(0)|²) · base`.
    Modulated { base: DMatrix<f64>, amplitude: f64 },
}

/// Lyapunov functional for the delay equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfdeLyapunov {
    /// `‖x‖²_sup`
    SupNorm,
    /// `|x(0)|²`
    Endpoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SfdeSpec {
    pub delay: f64,
    pub dt: f64,
    pub drift: SfdeDrift,
    pub diffusion: SfdeDiffusion,
    pub lyapunov: SfdeLyapunov,
}

/// Stochastic delay equation `dX = f(X_t) dt + g(X_t) dW` stepped by
/// Euler–Maruyama on the endpoint.
#[derive(Debug, Clone)]
pub struct Sfde {
    spec: SfdeSpec,
    dim: usize,
    points: usize,
    base: DMatrix<f64>,
    base_pinv: DMatrix<f64>,
    pinv_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SfdePair {
    x: Segment,
    d: Segment,
    gain: f64,
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (m * DVector::from_column_slice(v)).as_slice().to_vec()
}

impl Sfde {
    pub fn new(spec: SfdeSpec) -> Result<Self, ModelError> {
        if !(spec.delay > 0.0 && spec.delay.is_finite()) {
            return Err(ModelError::Invalid("delay must be positive".into()));
        }
        if !(spec.dt > 0.0) {
            return Err(ModelError::Invalid("dt must be positive".into()));
        }
        let ratio = spec.delay / spec.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
            return Err(ModelError::Invalid(format!(
                "delay {} is not a whole number of steps of size {}",
                spec.delay, spec.dt
            )));
        }
        let base = match &spec.diffusion {
            SfdeDiffusion::Constant(g) => g.clone(),
            SfdeDiffusion::Modulated { base, amplitude } => {
                if !(*amplitude >= 0.0) {
                    return Err(ModelError::Invalid("modulation amplitude must be nonnegative".into()));
                }
                base.clone()
            }
        };
        let dim = base.nrows();
        let (a, other) = match &spec.drift {
            SfdeDrift::LinearDelay { a, b } | SfdeDrift::TanhDelay { a, b } => (a, b),
            SfdeDrift::DistributedDelay { a, c } => (a, c),
        };
        for m in [a, other] {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(ModelError::Dimension {
                    expected: dim,
                    got: m.nrows().max(m.ncols()),
                });
            }
        }
        if dim == 0 || base.ncols() < dim {
            return Err(ModelError::Singular(format!(
                "{}×{} diffusion cannot have a right inverse",
                dim,
                base.ncols()
            )));
        }
        let base_pinv = base
            .clone()
            .pseudo_inverse(1e-12)
            .map_err(|e| ModelError::Singular(e.to_string()))?;
        let defect = (&base * &base_pinv - DMatrix::identity(dim, dim)).amax();
        if defect > 1e-10 {
            return Err(ModelError::Singular(format!(
                "diffusion is rank deficient (g g⁺ differs from I by {defect:e})"
            )));
        }
        let pinv_norm = base_pinv.clone().svd(false, false).singular_values.max();
        Ok(Self {
            points: ratio.round() as usize + 1,
            dim,
            spec,
            base,
            base_pinv,
            pinv_norm,
        })
    }

    pub fn spec(&self) -> &SfdeSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Grid points per segment, `r/dt + 1`.
    pub fn segment_points(&self) -> usize {
        self.points
    }

    /// `sup_x ‖g(x)⁻¹‖` for the right inverse used by the control.
    pub fn right_inverse_bound(&self) -> f64 {
        self.pinv_norm
    }

    /// Constant initial segment.
    pub fn constant_segment(&self, value: &[f64]) -> Result<Segment, ModelError> {
        check_dim(self.dim, value.len())?;
        Segment::constant(self.points, value)
    }

    fn scale(&self, endpoint: &[f64]) -> f64 {
        match self.spec.diffusion {
            SfdeDiffusion::Constant(_) => 1.0,
            SfdeDiffusion::Modulated { amplitude, .. } => 1.0 + amplitude * norm2(endpoint).tanh(),
        }
    }

    fn drift(&self, path: &Segment) -> Vec<f64> {
        let (a, second) = match &self.spec.drift {
            SfdeDrift::LinearDelay { a, b } => (a, mat_vec(b, path.oldest())),
            SfdeDrift::DistributedDelay { a, c } => (a, mat_vec(c, &path.mean())),
            SfdeDrift::TanhDelay { a, b } => {
                let t: Vec<f64> = path.oldest().iter().map(|v| v.tanh()).collect();
                (a, mat_vec(b, &t))
            }
        };
        let mut out = mat_vec(a, path.endpoint());
        out.iter_mut().zip(&second).for_each(|(o, s)| *o += s);
        out
    }

    /// `f(X_t) − f(Y_t)` from `X_t` and `D_t = X_t − Y_t`; linear parts are
    /// applied to `D` directly so that noise carried by `X` does not leak
    /// into the difference through rounding.
    fn drift_gap(&self, x: &Segment, d: &Segment) -> Vec<f64> {
        match &self.spec.drift {
            SfdeDrift::LinearDelay { .. } | SfdeDrift::DistributedDelay { .. } => self.drift(d),
            SfdeDrift::TanhDelay { a, b } => {
                let t: Vec<f64> = x
                    .oldest()
                    .iter()
                    .zip(d.oldest())
                    .map(|(xv, dv)| xv.tanh() - (xv - dv).tanh())
                    .collect();
                let mut out = mat_vec(a, d.endpoint());
                out.iter_mut().zip(mat_vec(b, &t)).for_each(|(o, s)| *o += s);
                out
            }
        }
    }

    /// `β = gain · g(Y_t)⁻¹ (X(0) − Y(0))`.
    pub fn control_drift(&self, x: &Segment, y: &Segment, gain: f64) -> Result<Vec<f64>, ModelError> {
        check_dim(self.points, x.len())?;
        check_dim(self.points, y.len())?;
        let diff = sub(x.endpoint(), y.endpoint());
        Ok(self.beta(&diff, y.endpoint(), gain))
    }

    fn beta(&self, d0: &[f64], y0: &[f64], gain: f64) -> Vec<f64> {
        let s = gain / self.scale(y0);
        mat_vec(&self.base_pinv, d0).into_iter().map(|v| v * s).collect()
    }

    fn gain_of(control: ControlLaw) -> Result<f64, ModelError> {
        match control {
            ControlLaw::None => Ok(0.0),
            ControlLaw::Gain(g) if g >= 0.0 && g.is_finite() => Ok(g),
            ControlLaw::Gain(_) => Err(ModelError::Invalid("gain must be nonnegative".into())),
            other => Err(ModelError::UnsupportedControl(other.name())),
        }
    }

    fn check_segment(&self, s: &Segment) -> Result<(), ModelError> {
        check_dim(self.points, s.len())?;
        check_dim(self.dim, s.dim())
    }
}

impl CouplingModel for Sfde {
    type State = Segment;
    type Pair = SfdePair;
    type Workspace = ();

    fn noise_dim(&self) -> usize {
        self.base.ncols()
    }

    fn fixed_dt(&self) -> Option<f64> {
        Some(self.spec.dt)
    }

    fn workspace(&self) {}

    fn step(
        &self,
        _ws: &mut (),
        state: &mut Segment,
        dw: &[f64],
        control: &[f64],
        dt: f64,
        t_end: f64,
    ) -> Result<(), ModelError> {
        self.check_segment(state)?;
        check_dim(self.noise_dim(), dw.len())?;
        check_dim(self.noise_dim(), control.len())?;
        let f = self.drift(state);
        let s = self.scale(state.endpoint());
        let push: Vec<f64> = dw.iter().zip(control).map(|(w, b)| w + b * dt).collect();
        let g = mat_vec(&self.base, &push);
        let next: Vec<f64> = (0..self.dim)
            .map(|i| state.endpoint()[i] + f[i] * dt + s * g[i])
            .collect();
        check_norm(norm2(&next).sqrt(), t_end)?;
        state.push(next);
        Ok(())
    }

    fn lyapunov(&self, state: &Segment) -> f64 {
        match self.spec.lyapunov {
            SfdeLyapunov::SupNorm => state.sup_norm().powi(2),
            SfdeLyapunov::Endpoint => norm2(state.endpoint()),
        }
    }

    fn pair(&self, x0: &Segment, y0: &Segment, control: ControlLaw) -> Result<SfdePair, ModelError> {
        self.check_segment(x0)?;
        self.check_segment(y0)?;
        Ok(SfdePair {
            x: x0.clone(),
            d: x0.difference(y0),
            gain: Self::gain_of(control)?,
        })
    }

    fn control(&self, pair: &SfdePair, beta: &mut [f64]) {
        let y0 = sub(pair.x.endpoint(), pair.d.endpoint());
        beta.copy_from_slice(&self.beta(pair.d.endpoint(), &y0, pair.gain));
    }

    fn advance(&self, pair: &mut SfdePair, dw: &[f64], dt: f64, t_end: f64) -> Result<(), ModelError> {
        check_dim(self.noise_dim(), dw.len())?;
        let x0 = pair.x.endpoint().to_vec();
        let d0 = pair.d.endpoint().to_vec();
        let y0 = sub(&x0, &d0);
        let fx = self.drift(&pair.x);
        let gap = self.drift_gap(&pair.x, &pair.d);
        let (sx, sy) = (self.scale(&x0), self.scale(&y0));
        let gw = mat_vec(&self.base, dw);
        let beta = self.beta(&d0, &y0, pair.gain);
        let gb = mat_vec(&self.base, &beta);
        let mut x_next = vec![0.0; self.dim];
        let mut d_next = vec![0.0; self.dim];
        for i in 0..self.dim {
            x_next[i] = x0[i] + fx[i] * dt + sx * gw[i];
            // (g(X) − g(Y)) ΔW vanishes identically for constant diffusion
            let noise_gap = if sx == sy { 0.0 } else { (sx - sy) * gw[i] };
            d_next[i] = d0[i] + gap[i] * dt + noise_gap - sy * gb[i] * dt;
        }
        check_norm(norm2(&x_next).sqrt().max(norm2(&d_next).sqrt()), t_end)?;
        pair.x.push(x_next);
        pair.d.push(d_next);
        Ok(())
    }

    fn observe(&self, pair: &SfdePair) -> Observation {
        Observation {
            q: pair.d.sup_norm().powi(2),
            u_x: self.lyapunov(&pair.x),
            s_x: norm2(pair.x.endpoint()),
        }
    }

    fn states(&self, pair: &SfdePair) -> (Segment, Segment) {
        let y = pair.x.difference(&pair.d);
        (pair.x.clone(), y)
    }

    fn reimbursement_constant(&self, control: ControlLaw) -> Result<f64, ModelError> {
        Ok((Self::gain_of(control)? * self.pinv_norm).powi(2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseStream;

    fn scalar(a: f64, b: f64, dt: f64) -> Sfde {
        Sfde::new(SfdeSpec {
            delay: 1.0,
            dt,
            drift: SfdeDrift::LinearDelay {
                a: DMatrix::from_element(1, 1, a),
                b: DMatrix::from_element(1, 1, b),
            },
            diffusion: SfdeDiffusion::Constant(DMatrix::identity(1, 1)),
            lyapunov: SfdeLyapunov::Endpoint,
        })
        .unwrap()
    }

    #[test]
    fn driftless_path_is_a_random_walk() {
        let m = scalar(0.0, 0.0, 0.01);
        assert_eq!(m.segment_points(), 101);
        let mut x = m.constant_segment(&[0.5]).unwrap();
        let mut s = NoiseStream::new(9, 0, 1, 0.01).unwrap();
        let mut expect = 0.5;
        for k in 0..250u64 {
            let dw = s.sample_increment(k);
            expect += dw[0];
            m.step(&mut (), &mut x, &dw, &[0.0], 0.01, 0.0).unwrap();
        }
        assert!((x.endpoint()[0] - expect).abs() < 1e-13);
        assert_eq!(m.lyapunov(&x), x.endpoint()[0].powi(2));
    }

    #[test]
    fn control_examples() {
        let dt = 0.1;
        let ident = Sfde::new(SfdeSpec {
            delay: 1.0,
            dt,
            drift: SfdeDrift::LinearDelay {
                a: DMatrix::zeros(2, 2),
                b: DMatrix::zeros(2, 2),
            },
            diffusion: SfdeDiffusion::Constant(DMatrix::identity(2, 2)),
            lyapunov: SfdeLyapunov::SupNorm,
        })
        .unwrap();
        let x = ident.constant_segment(&[1.0, 0.0]).unwrap();
        let y = ident.constant_segment(&[0.0, 0.0]).unwrap();
        assert_eq!(ident.control_drift(&x, &x, 2.0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(ident.control_drift(&x, &y, 2.0).unwrap(), vec![2.0, 0.0]);

        let g = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let m = Sfde::new(SfdeSpec {
            diffusion: SfdeDiffusion::Constant(g.clone()),
            ..ident.spec().clone()
        })
        .unwrap();
        let x = m.constant_segment(&[0.3, -0.7]).unwrap();
        let beta = m.control_drift(&x, &y, 1.5).unwrap();
        let expect = g.lu().solve(&DVector::from_column_slice(&[0.45, -1.05])).unwrap();
        assert!((beta[0] - expect[0]).abs() < 1e-14 && (beta[1] - expect[1]).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_specs() {
        let ok = scalar(-1.0, 0.0, 0.1).spec().clone();
        assert!(Sfde::new(SfdeSpec { dt: 0.3, ..ok.clone() }).is_err());
        assert!(Sfde::new(SfdeSpec {
            diffusion: SfdeDiffusion::Constant(DMatrix::zeros(1, 1)),
            ..ok.clone()
        })
        .is_err());
        let m = scalar(-1.0, 0.0, 0.1);
        let short = Segment::constant(3, &[0.0]).unwrap();
        assert!(m.pair(&short, &short, ControlLaw::None).is_err());
    }

    #[test]
    fn constant_diffusion_difference_sees_no_noise() {
        let m = scalar(-2.0, 0.5, 0.01);
        let x = m.constant_segment(&[1.0]).unwrap();
        let y = m.constant_segment(&[0.0]).unwrap();
        let mut noisy = m.pair(&x, &y, ControlLaw::Gain(2.0)).unwrap();
        let mut quiet = noisy.clone();
        let mut s = NoiseStream::new(1, 4, 1, 0.01).unwrap();
        for k in 0..300 {
            m.advance(&mut noisy, &s.sample_increment(k), 0.01, 0.0).unwrap();
            m.advance(&mut quiet, &[0.0], 0.01, 0.0).unwrap();
        }
        assert_eq!(noisy.d, quiet.d);
        let c = m.reimbursement_constant(ControlLaw::Gain(2.0)).unwrap();
        let mut beta = [0.0];
        m.control(&noisy, &mut beta);
        assert!(beta[0] * beta[0] <= c * m.observe(&noisy).q);
    }

    #[test]
    fn modulated_diffusion_bounds_inverse() {
        let m = Sfde::new(SfdeSpec {
            delay: 1.0,
            dt: 0.5,
            drift: SfdeDrift::TanhDelay {
                a: DMatrix::from_element(1, 1, -1.0),
                b: DMatrix::from_element(1, 1, 0.5),
            },
            diffusion: SfdeDiffusion::Modulated {
                base: DMatrix::from_element(1, 2, 1.0),
                amplitude: 0.5,
            },
            lyapunov: SfdeLyapunov::SupNorm,
        })
        .unwrap();
        assert!((m.right_inverse_bound() - 0.5f64.sqrt()).abs() < 1e-14);
        let x = m.constant_segment(&[2.0]).unwrap();
        let y = m.constant_segment(&[1.0]).unwrap();
        let beta = m.control_drift(&x, &y, 1.0).unwrap();
        let s = 1.0 + 0.5 * 1f64.tanh();
        assert!((beta[0] - 0.5 / s).abs() < 1e-15 && (beta[1] - 0.5 / s).abs() < 1e-15);
    }
}
