//! Property tests across module boundaries, each against an independent
//! oracle or a conserved quantity.

use std::f64::consts::SQRT_2;

use gencoupling::bounds::{
    certificate_at, h_phi, h_phi_inverse, measure_lower_bound, pinsker_tv, tv_delta_upper, HConstants, PhiSpec,
};
use gencoupling::metrics::{empirical_wasserstein, EmpiricalMeasure};
use gencoupling::models::{CouplingModel, NavierStokes2d, NseSpec};
use gencoupling::noise::NoiseStream;
use gencoupling::spectral::{nonlinear_term, ModeProjector, SpectralField};
use proptest::prelude::*;
use rustfft::num_complex::Complex64;
use statrs::distribution::{ContinuousCDF, Normal};

fn field(k_max: usize, coeffs: &[(f64, f64)]) -> SpectralField {
    let mut f = SpectralField::zeros(k_max);
    let modes: Vec<_> = f.canonical_modes().collect();
    for (k, &(re, im)) in modes.into_iter().zip(coeffs.iter().cycle()) {
        f.set(k, Complex64::new(re, im)).unwrap();
    }
    f
}

fn coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projector_is_idempotent_and_orthogonal(c in coeffs(), n_shell in 0i64..10) {
        let f = field(4, &c);
        let p = ModeProjector::up_to_shell(4, n_shell).unwrap();
        let pf = p.apply(&f).unwrap();
        prop_assert_eq!(p.apply(&pf).unwrap(), pf.clone());
        let rest = &f - &pf;
        prop_assert!(pf.h_inner(&rest).abs() <= 1e-14);
        let pyth = pf.h_norm2() + rest.h_norm2();
        prop_assert!((pyth - f.h_norm2()).abs() <= 1e-13 * (1.0 + f.h_norm2()));
    }

    #[test]
    fn nonlinearity_conserves_energy_and_enstrophy(c in coeffs(), k_max in 2usize..7) {
        let w = field(k_max, &c);
        let b = nonlinear_term(&w);
        let scale = w.v_norm2() * w.v_norm();
        // (B(u), u)_H and (B(u), ω) vanish for the dealiased product
        prop_assert!(b.h_inner(&w).abs() <= 1e-12 * (1.0 + scale));
        prop_assert!(b.vorticity_inner(&w).abs() <= 1e-12 * (1.0 + scale));
        prop_assert_eq!(b.hermitian_defect(), 0.0);
    }

    #[test]
    fn certificate_fields_recompute_exactly(
        zeta in 0.1..10.0f64, kappa in 0.0..5.0f64, mu in 0.1..5.0f64,
        b in 0.0..3.0f64, b1 in 0.0..3.0f64, b2 in 0.0..3.0f64, frac in 0.01..0.99f64,
    ) {
        let h = HConstants { zeta, kappa, mu, b, b1, b2 };
        let gamma = if b1 > 0.0 { frac * mu / b1 } else { frac * 10.0 };
        let c = certificate_at(&h, gamma).unwrap();
        let slack = mu - gamma * b1;
        let upsilon = kappa / slack;
        let chi = zeta - kappa * (b + gamma * b2) / slack;
        let alpha0 = if upsilon == 0.0 { 0.5 } else { (gamma / upsilon).min(0.5) };
        prop_assert_eq!((c.upsilon, c.chi, c.alpha0), (upsilon, chi, alpha0));
        prop_assert_eq!((c.lambda, c.q), (alpha0 * chi, alpha0 * upsilon));
    }

    #[test]
    fn bounds_are_monotone(a in 0.0..5.0f64, d in 0.0..5.0f64, delta in 0.05..0.95f64, n in 1.5..1e4f64) {
        let hi = a + d;
        prop_assert!(pinsker_tv(a).unwrap().value <= pinsker_tv(hi).unwrap().value);
        prop_assert!(tv_delta_upper(a, delta).unwrap().value <= tv_delta_upper(hi, delta).unwrap().value);
        prop_assert!(measure_lower_bound(0.7, a, n).unwrap().value >= measure_lower_bound(0.7, hi, n).unwrap().value);
    }

    #[test]
    fn gaussian_shift_obeys_pinsker(m in 0.0..4.0f64) {
        // two unit Gaussians at distance m: TV = 2Φ(m/2) − 1, KL = m²/2
        let exact = 2.0 * Normal::standard().cdf(m / 2.0) - 1.0;
        prop_assert!(exact <= pinsker_tv(m * m / 2.0).unwrap().value + 1e-15);
    }

    #[test]
    fn h_phi_round_trip(e in 0.0..6.0f64, gamma in 0.05..5.0f64, p in 0.0..0.95f64) {
        let x = 10f64.powf(e);
        for phi in [PhiSpec::Linear { gamma }, PhiSpec::Power { p }] {
            let back = h_phi_inverse(h_phi(x, phi).unwrap(), phi).unwrap();
            prop_assert!((back - x).abs() <= 1e-12 * x, "{:?}: {} -> {}", phi, x, back);
        }
    }

    #[test]
    fn transport_on_the_line_matches_sorted_matching(
        a in prop::collection::vec(-10.0..10.0f64, 1..30),
        shift in -3.0..3.0f64,
        perm_seed in any::<u64>(),
    ) {
        let n = a.len();
        let mut b: Vec<f64> = a.iter().map(|x| (x * 0.7 + shift).sin() * 5.0).collect();
        b.rotate_left((perm_seed % n as u64) as usize);
        let w = empirical_wasserstein(
            &EmpiricalMeasure::uniform(a.clone()).unwrap(),
            &EmpiricalMeasure::uniform(b.clone()).unwrap(),
            |x: &f64, y: &f64| (x - y).abs(),
        ).unwrap();
        let (mut sa, mut sb) = (a, b);
        sa.sort_by(f64::total_cmp);
        sb.sort_by(f64::total_cmp);
        let oracle = sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).sum::<f64>() / n as f64;
        prop_assert!((w - oracle).abs() <= 1e-12 * (1.0 + oracle), "{} vs {}", w, oracle);
    }

    #[test]
    fn noise_is_addressable_by_step(seed in any::<u64>(), stream in 0u64..1000, step in 0u64..10_000) {
        let mut a = NoiseStream::new(seed, stream, 3, 0.01).unwrap();
        let mut b = NoiseStream::new(seed, stream, 3, 0.01).unwrap();
        for s in 0..5 {
            a.sample_increment(s);
        }
        prop_assert_eq!(a.sample_increment(step), b.sample_increment(step));
    }
}

#[test]
fn increments_have_variance_dt() {
    let dt = 0.25;
    let mut s = NoiseStream::new(42, 0, 2, dt).unwrap();
    let n = 100_000u64;
    let (mut m, mut v) = (0.0, 0.0);
    for step in 0..n {
        for x in s.sample_increment(step) {
            m += x;
            v += x * x;
        }
    }
    let count = 2.0 * n as f64;
    let (mean, var) = (m / count, v / count);
    // five standard errors of each moment
    assert!(mean.abs() < 5.0 * (dt / count).sqrt(), "{mean}");
    assert!((var - dt).abs() < 5.0 * dt * SQRT_2 / count.sqrt(), "{var}");
}

#[test]
fn deterministic_nse_energy_balance() {
    // σ = 0, f = 0: |u(T)|² + 2ν ∫ |∇u|² = |u(0)|²
    let k_max = 8;
    let nu = 0.3;
    let model = NavierStokes2d::new(NseSpec {
        k_max,
        nu,
        forcing: SpectralField::zeros(k_max),
        sigma: vec![],
        projector: ModeProjector::new(k_max, 0).unwrap(),
    })
    .unwrap();
    let mut w = field(k_max, &[(0.4, -0.2), (-0.3, 0.5), (0.1, 0.1), (0.6, 0.0)]);
    let (u0, s0) = model.energy_terms(&w);
    let dt = 1e-3;
    let mut ws = model.workspace();
    let mut s = vec![s0];
    for step in 0..2000 {
        model.step(&mut ws, &mut w, &[], &[], dt, (step + 1) as f64 * dt).unwrap();
        s.push(model.energy_terms(&w).1);
    }
    // Simpson's rule; the trapezoid error on the fast modes would dominate
    let integral = s
        .windows(3)
        .step_by(2)
        .map(|p| (p[0] + 4.0 * p[1] + p[2]) * dt / 3.0)
        .sum::<f64>();
    let u1 = model.energy_terms(&w).0;
    let defect = (u1 + 2.0 * nu * integral - u0).abs() / u0;
    assert!(defect < 1e-6, "{defect:e}");
}
