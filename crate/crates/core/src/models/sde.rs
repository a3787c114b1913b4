use nalgebra::{DMatrix, DVector};

use super::integrator::ifrk4;
use super::{check_dim, check_norm, ControlLaw, CouplingModel, ModelError, Observation};

/// Built-in nonlinearities `B` with known global Lipschitz constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Nonlinearity {
    Zero,
    /// `B(x)_i = −c x_i³ / (1 + x_i²)`, Lipschitz constant `9c/8`.
    SaturatedCubic { strength: f64 },
    /// `B(x) = ω J x` with `J` rotating consecutive coordinate pairs by 90°.
    Rotation { rate: f64 },
}

impl Nonlinearity {
    pub fn lipschitz(&self) -> f64 {
        match *self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::SaturatedCubic { strength } => 9.0 * strength.abs() / 8.0,
            Nonlinearity::Rotation { rate } => rate.abs(),
        }
    }

    pub fn is_linear(&self) -> bool {
        !matches!(self, Nonlinearity::SaturatedCubic { .. })
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        match *self {
            Nonlinearity::Zero => out.fill(0.0),
            Nonlinearity::SaturatedCubic { strength } => {
                for (o, &v) in out.iter_mut().zip(x) {
                    *o = -strength * v * v * v / (1.0 + v * v);
                }
            }
            Nonlinearity::Rotation { rate } => {
                out.fill(0.0);
                for i in (0..x.len() / 2).map(|p| 2 * p) {
                    out[i] = -rate * x[i + 1];
                    out[i + 1] = rate * x[i];
                }
            }
        }
    }
}

/// `dX = −ΛX dt + B(X) dt + Σ dW` with `Λ = diag(λ_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipativeSdeSpec {
    pub eigenvalues: Vec<f64>,
    pub nonlinearity: Nonlinearity,
    /// `n × m` constant diffusion matrix.
    pub sigma: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct DissipativeSde {
    spec: DissipativeSdeSpec,
    sigma_pinv: DMatrix<f64>,
    /// `Σ Σ⁺`, orthogonal projector onto the range of `Σ`.
    range_projector: DMatrix<f64>,
    pinv_norm: f64,
}

/// `(X, D)` stacked as one vector of length `2n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdePair {
    u: Vec<f64>,
    gain: f64,
}

impl DissipativeSde {
    pub fn new(spec: DissipativeSdeSpec) -> Result<Self, ModelError> {
        let n = spec.eigenvalues.len();
        if n == 0 {
            return Err(ModelError::Invalid("state dimension must be positive".into()));
        }
        if spec.eigenvalues.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(ModelError::Invalid("eigenvalues must be positive and finite".into()));
        }
        if spec.eigenvalues.windows(2).any(|w| w[0] > w[1]) {
            return Err(ModelError::Invalid("eigenvalues must be sorted ascending".into()));
        }
        check_dim(n, spec.sigma.nrows())?;
        if spec.sigma.ncols() == 0 || spec.sigma.iter().any(|s| !s.is_finite()) {
            return Err(ModelError::Invalid("diffusion must be finite with at least one column".into()));
        }
        let sigma_pinv = spec
            .sigma
            .clone()
            .pseudo_inverse(1e-12)
            .map_err(|e| ModelError::Singular(e.to_string()))?;
        let range_projector = &spec.sigma * &sigma_pinv;
        let pinv_norm = sigma_pinv.clone().svd(false, false).singular_values.max();
        Ok(Self {
            spec,
            sigma_pinv,
            range_projector,
            pinv_norm,
        })
    }

    pub fn spec(&self) -> &DissipativeSdeSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.eigenvalues.len()
    }

    fn half_propagator(&self, h: f64) -> Vec<f64> {
        self.spec.eigenvalues.iter().map(|l| (-0.5 * l * h).exp()).collect()
    }

    fn add_noise(&self, x: &mut [f64], dw: &[f64]) {
        let noise = &self.spec.sigma * DVector::from_column_slice(dw);
        for (xi, ni) in x.iter_mut().zip(noise.iter()) {
            *xi += ni;
        }
    }

    fn gain_of(control: ControlLaw) -> Result<f64, ModelError> {
        match control {
            ControlLaw::None => Ok(0.0),
            ControlLaw::Gain(g) if g >= 0.0 && g.is_finite() => Ok(g),
            ControlLaw::Gain(_) => Err(ModelError::Invalid("gain must be nonnegative".into())),
            other => Err(ModelError::UnsupportedControl(other.name())),
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl CouplingModel for DissipativeSde {
    type State = Vec<f64>;
    type Pair = SdePair;
    type Workspace = ();

    fn noise_dim(&self) -> usize {
        self.spec.sigma.ncols()
    }

    fn workspace(&self) {}

    fn step(
        &self,
        _ws: &mut (),
        state: &mut Vec<f64>,
        dw: &[f64],
        control: &[f64],
        dt: f64,
        t_end: f64,
    ) -> Result<(), ModelError> {
        check_dim(self.dim(), state.len())?;
        check_dim(self.noise_dim(), dw.len())?;
        check_dim(self.noise_dim(), control.len())?;
        self.add_noise(state, dw);
        let push = &self.spec.sigma * DVector::from_column_slice(control);
        let half = self.half_propagator(dt);
        let b = self.spec.nonlinearity;
        ifrk4(
            state,
            dt,
            |v: &mut Vec<f64>| v.iter_mut().zip(&half).for_each(|(x, e)| *x *= e),
            |v: &Vec<f64>, out: &mut Vec<f64>| {
                b.eval(v, out);
                out.iter_mut().zip(push.iter()).for_each(|(o, p)| *o += p);
            },
        );
        check_norm(norm(state), t_end)
    }

    fn lyapunov(&self, state: &Vec<f64>) -> f64 {
        state.iter().map(|v| v * v).sum()
    }

    fn pair(&self, x0: &Vec<f64>, y0: &Vec<f64>, control: ControlLaw) -> Result<SdePair, ModelError> {
        check_dim(self.dim(), x0.len())?;
        check_dim(self.dim(), y0.len())?;
        let gain = Self::gain_of(control)?;
        let mut u = x0.clone();
        u.extend(x0.iter().zip(y0).map(|(x, y)| x - y));
        Ok(SdePair { u, gain })
    }

    fn control(&self, pair: &SdePair, beta: &mut [f64]) {
        let d = DVector::from_column_slice(&pair.u[self.dim()..]);
        let b = &self.sigma_pinv * d * pair.gain;
        beta.copy_from_slice(b.as_slice());
    }

    fn advance(&self, pair: &mut SdePair, dw: &[f64], dt: f64, t_end: f64) -> Result<(), ModelError> {
        check_dim(self.noise_dim(), dw.len())?;
        let n = self.dim();
        self.add_noise(&mut pair.u[..n], dw);
        let mut half = self.half_propagator(dt);
        half.extend_from_within(..);
        let (b, gain) = (self.spec.nonlinearity, pair.gain);
        let mut y = vec![0.0; n];
        let mut by = vec![0.0; n];
        ifrk4(
            &mut pair.u,
            dt,
            |v: &mut Vec<f64>| v.iter_mut().zip(&half).for_each(|(x, e)| *x *= e),
            |v: &Vec<f64>, out: &mut Vec<f64>| {
                let (x, d) = v.split_at(n);
                let (ox, od) = out.split_at_mut(n);
                b.eval(x, ox);
                if b.is_linear() {
                    b.eval(d, od);
                } else {
                    y.iter_mut().zip(x.iter().zip(d)).for_each(|(yi, (xi, di))| *yi = xi - di);
                    b.eval(&y, &mut by);
                    od.iter_mut()
                        .zip(ox.iter().zip(&by))
                        .for_each(|(o, (bx, byi))| *o = bx - byi);
                }
                if gain != 0.0 {
                    let pd = &self.range_projector * DVector::from_column_slice(d);
                    od.iter_mut().zip(pd.iter()).for_each(|(o, p)| *o -= gain * p);
                }
            },
        );
        check_norm(norm(&pair.u[..n]).max(norm(&pair.u[n..])), t_end)
    }

    fn observe(&self, pair: &SdePair) -> Observation {
        let (x, d) = pair.u.split_at(self.dim());
        Observation {
            q: d.iter().map(|v| v * v).sum(),
            u_x: x.iter().map(|v| v * v).sum(),
            s_x: x.iter().zip(&self.spec.eigenvalues).map(|(v, l)| l * v * v).sum(),
        }
    }

    fn states(&self, pair: &SdePair) -> (Vec<f64>, Vec<f64>) {
        let (x, d) = pair.u.split_at(self.dim());
        (x.to_vec(), x.iter().zip(d).map(|(a, b)| a - b).collect())
    }

    fn reimbursement_constant(&self, control: ControlLaw) -> Result<f64, ModelError> {
        let gain = Self::gain_of(control)?;
        Ok((gain * self.pinv_norm).powi(2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseStream;

    fn ou(a: f64) -> DissipativeSde {
        DissipativeSde::new(DissipativeSdeSpec {
            eigenvalues: vec![a],
            nonlinearity: Nonlinearity::Zero,
            sigma: DMatrix::identity(1, 1),
        })
        .unwrap()
    }

    #[test]
    fn pure_linear_decay() {
        let m = DissipativeSde::new(DissipativeSdeSpec {
            eigenvalues: vec![1.0],
            nonlinearity: Nonlinearity::Zero,
            sigma: DMatrix::zeros(1, 1),
        })
        .unwrap();
        let mut x = vec![1.0];
        let dt = 0.37;
        let mut expect = 1.0;
        for k in 1..=10 {
            m.step(&mut (), &mut x, &[0.3], &[0.0], dt, k as f64 * dt).unwrap();
            expect *= (-dt).exp();
            assert!((x[0] - expect).abs() <= 4.0 * f64::EPSILON * expect);
        }
    }

    #[test]
    fn saturated_cubic_lipschitz_bound_is_sharp() {
        let b = Nonlinearity::SaturatedCubic { strength: 2.0 };
        let (mut lo, mut hi) = ([0.0], [0.0]);
        let h = 1e-6;
        let x = 3f64.sqrt();
        b.eval(&[x - h], &mut lo);
        b.eval(&[x + h], &mut hi);
        let slope = ((hi[0] - lo[0]) / (2.0 * h)).abs();
        assert!((slope - b.lipschitz()).abs() < 1e-6, "{slope}");
        let mut r = [0.0; 3];
        Nonlinearity::Rotation { rate: 2.0 }.eval(&[1.0, 2.0, 3.0], &mut r);
        assert_eq!(r, [-4.0, 2.0, 0.0]);
    }

    #[test]
    fn difference_ignores_noise_bitwise() {
        let m = DissipativeSde::new(DissipativeSdeSpec {
            eigenvalues: vec![1.0, 2.0],
            nonlinearity: Nonlinearity::Zero,
            sigma: DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 2.0]),
        })
        .unwrap();
        let mut noisy = m.pair(&vec![1.0, -1.0], &vec![0.0, 0.5], ControlLaw::Gain(1.5)).unwrap();
        let mut quiet = noisy.clone();
        let mut s = NoiseStream::new(3, 0, 2, 1e-3).unwrap();
        for k in 0..500 {
            let dw = s.sample_increment(k);
            m.advance(&mut noisy, &dw, 1e-3, 0.0).unwrap();
            m.advance(&mut quiet, &[0.0, 0.0], 1e-3, 0.0).unwrap();
            assert_eq!(noisy.u[2..], quiet.u[2..]);
        }
    }

    #[test]
    fn ou_difference_decays_at_combined_rate() {
        let m = ou(1.0);
        let mut p = m.pair(&vec![1.0], &vec![0.0], ControlLaw::Gain(1.0)).unwrap();
        let dt = 1e-3;
        for k in 0..1000 {
            m.advance(&mut p, &[0.01 * (k as f64).sin()], dt, 0.0).unwrap();
        }
        let q = m.observe(&p).q;
        assert!((q / (-4.0f64).exp() - 1.0).abs() < 1e-10, "{q}");
        assert_eq!(m.reimbursement_constant(ControlLaw::Gain(2.0)).unwrap(), 4.0);
        let mut beta = [0.0];
        m.control(&p, &mut beta);
        assert!((beta[0] - (-2.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn control_uses_pseudo_inverse() {
        let sigma = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 1.0]);
        let m = DissipativeSde::new(DissipativeSdeSpec {
            eigenvalues: vec![1.0, 1.0],
            nonlinearity: Nonlinearity::Zero,
            sigma: sigma.clone(),
        })
        .unwrap();
        let p = m.pair(&vec![1.0, 1.0], &vec![0.0, 0.0], ControlLaw::Gain(2.0)).unwrap();
        let mut beta = [0.0; 2];
        m.control(&p, &mut beta);
        let expect = sigma.lu().solve(&DVector::from_column_slice(&[2.0, 2.0])).unwrap();
        assert!((beta[0] - expect[0]).abs() < 1e-14 && (beta[1] - expect[1]).abs() < 1e-14);
        assert!(m.pair(&vec![1.0], &vec![0.0], ControlLaw::None).is_err());
        assert!(m.pair(&vec![1.0, 1.0], &vec![0.0, 0.0], ControlLaw::LowModes).is_err());
    }

    #[test]
    fn blow_up_is_reported() {
        let m = DissipativeSde::new(DissipativeSdeSpec {
            eigenvalues: vec![1.0],
            nonlinearity: Nonlinearity::Zero,
            sigma: DMatrix::identity(1, 1),
        })
        .unwrap();
        let mut x = vec![0.0];
        let err = m.step(&mut (), &mut x, &[1e13], &[0.0], 1e-3, 0.5).unwrap_err();
        assert!(matches!(err, ModelError::BlowUp { t, .. } if t == 0.5));
    }
}
