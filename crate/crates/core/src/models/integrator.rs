//! Integrating-factor RK4 for `u' = L u + N(u)` with `L` diagonal.

use crate::spectral::SpectralField;

pub(crate) trait Axpy: Clone {
    /// `self += a · x`
    fn axpy(&mut self, a: f64, x: &Self);
}

impl Axpy for Vec<f64> {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x) {
            *s += a * v;
        }
    }
}

impl Axpy for SpectralField {
    fn axpy(&mut self, a: f64, x: &Self) {
        SpectralField::axpy(self, a, x);
    }
}

/// One step of size `h`. `half` applies `exp(L h/2)` in place; `rhs(u, out)`
/// overwrites `out` with `N(u)`.
pub(crate) fn ifrk4<V, H, R>(u: &mut V, h: f64, mut half: H, mut rhs: R)
where
    V: Axpy,
    H: FnMut(&mut V),
    R: FnMut(&V, &mut V),
{
    let mut k1 = u.clone();
    rhs(u, &mut k1);

    let mut a = u.clone();
    a.axpy(0.5 * h, &k1);
    half(&mut a);
    let mut k2 = u.clone();
    rhs(&a, &mut k2);

    let mut e0 = u.clone();
    half(&mut e0);
    let mut b = e0.clone();
    b.axpy(0.5 * h, &k2);
    let mut k3 = a;
    rhs(&b, &mut k3);

    let mut c = e0;
    c.axpy(h, &k3);
    half(&mut c);
    let mut k4 = b;
    rhs(&c, &mut k4);

    // E(h/2)[E(h/2)(u + h/6 k1) + h/3 (k2 + k3)] + h/6 k4
    u.axpy(h / 6.0, &k1);
    half(u);
    u.axpy(h / 3.0, &k2);
    u.axpy(h / 3.0, &k3);
    half(u);
    u.axpy(h / 6.0, &k4);
}

#[cfg(test)]
mod tests {
    use super::*;

    /// u' = -u + u² has the closed form u(t) = 1 / (1 + (1/u0 - 1) e^t).
    #[test]
    fn fourth_order_on_logistic_equation() {
        let exact = |t: f64| 1.0 / (1.0 + (1.0 / 0.5 - 1.0) * t.exp());
        let mut errors = Vec::new();
        for steps in [20usize, 40] {
            let h = 1.0 / steps as f64;
            let mut u = vec![0.5];
            for _ in 0..steps {
                ifrk4(
                    &mut u,
                    h,
                    |v: &mut Vec<f64>| v[0] *= (-0.5 * h).exp(),
                    |v: &Vec<f64>, out: &mut Vec<f64>| out[0] = v[0] * v[0],
                );
            }
            errors.push((u[0] - exact(1.0)).abs());
        }
        let order = (errors[0] / errors[1]).log2();
        assert!(order > 3.7 && order < 4.3, "observed order {order}");
    }

    #[test]
    fn pure_linear_part_is_exact() {
        let mut u = vec![1.0, -2.0];
        let h = 0.1;
        ifrk4(
            &mut u,
            h,
            |v: &mut Vec<f64>| {
                v[0] *= (-0.5 * h).exp();
                v[1] *= (-1.5 * h).exp();
            },
            |_: &Vec<f64>, out: &mut Vec<f64>| out.iter_mut().for_each(|x| *x = 0.0),
        );
        assert!((u[0] - (-h).exp()).abs() <= 2.0 * f64::EPSILON);
        assert!((u[1] + 2.0 * (-3.0 * h).exp()).abs() < 1e-15);
    }
}
