mod common;

use std::f64::consts::PI;

use lowzero::kernels::{make_cosine_kernel, make_quadratic_kernel};
use lowzero::quad::QuadConfig;
use lowzero::testfun::{make_naive, make_omega, make_zero, omega_pieces, PairKind};

use common::{gl, naive_hat, naive_phi};

/// `∫ φ̂(y) cos(2πxy) dy` over `[-r, r]` with panelled Gauss–Legendre.
fn inverse_transform(hat: impl Fn(f64) -> f64, r: f64, x: f64, panels: usize) -> f64 {
    let w = 2.0 * r / panels as f64;
    (0..panels)
        .map(|j| {
            let a = -r + j as f64 * w;
            gl(|y| hat(y) * (2.0 * PI * x * y).cos(), a, a + w)
        })
        .sum()
}

#[test]
fn naive_pair_is_a_fourier_pair() {
    for sigma in [0.5, 1.0, 2.0] {
        let tf = make_naive(sigma).unwrap();
        for i in 0..50 {
            let y = -1.2 * sigma + 2.4 * sigma * i as f64 / 49.0;
            assert!((tf.phi_hat(y) - naive_hat(sigma, y)).abs() < 1e-15, "σ={sigma}, y={y}");
        }
        for i in 0..50 {
            let x = -6.0 + 12.0 * i as f64 / 49.0;
            // Panels split at 0 so the kink of the triangle is a panel edge.
            let back = inverse_transform(|y| tf.phi_hat(y), sigma, x, 64);
            assert!((back - naive_phi(sigma, x)).abs() < 1e-9, "σ={sigma}, x={x}: {back}");
            assert!((tf.phi(x) - naive_phi(sigma, x)).abs() < 1e-14);
        }
    }
}

#[test]
fn zero_pair_vanishes() {
    let tf = make_zero(1.0).unwrap();
    assert_eq!(tf.kind(), PairKind::Zero);
    for x in [-3.0, 0.0, 0.4, 7.0] {
        assert_eq!(tf.phi(x), 0.0);
        assert_eq!(tf.phi_hat(x), 0.0);
    }
}

#[test]
fn omega_pair_support_and_sign_pattern() {
    let cfg = QuadConfig::default();
    for k in [make_cosine_kernel(), make_quadratic_kernel()] {
        for (n, omega) in [(1u32, 0.25), (1, 0.5), (3, 0.8)] {
            let tf = make_omega(&k, 2.0, n, omega, &cfg).unwrap();
            let r = tf.hat_support_radius();
            assert!((r - 2.0 / n as f64).abs() < 1e-15);
            for i in 1..=200 {
                let y = r * (1.0 + i as f64 / 100.0);
                assert_eq!(tf.phi_hat(y), 0.0);
                assert_eq!(tf.phi_hat(-y), 0.0);
            }
            for i in 0..=4000 {
                let x = -6.0 * omega + 12.0 * omega * i as f64 / 4000.0;
                let v = tf.phi(x);
                if x.abs() < omega {
                    assert!(v >= 0.0, "{} n={n}: φ({x}) = {v}", k.name());
                } else if x.abs() > omega {
                    assert!(v <= 0.0, "{} n={n}: φ({x}) = {v}", k.name());
                }
            }
            assert!(tf.phi(omega).abs() < 1e-14);
        }
    }
}

/// The gridded `φ̂_ω` transformed back by quadrature reproduces the analytic `φ_ω`.
#[test]
fn omega_pair_is_a_fourier_pair() {
    let cfg = QuadConfig::default();
    for k in [make_cosine_kernel(), make_quadratic_kernel()] {
        let tf = make_omega(&k, 2.0, 1, 0.5, &cfg).unwrap();
        let grid = tf.hat_grid(&cfg).unwrap();
        for i in 0..25 {
            let x = -3.0 + 6.0 * i as f64 / 24.0;
            let back = grid.map(|y, v| v * (2.0 * PI * x * y).cos()).integral();
            assert!((back - tf.phi(x)).abs() < 1e-6, "{} x={x}: {back} vs {}", k.name(), tf.phi(x));
        }
    }
}

/// `g″` assembled from the pointwise `f″` and the endpoint jumps agrees with
/// a centered second difference of the gridded `g` away from its kinks.
#[test]
fn second_derivative_routes_agree() {
    let cfg = QuadConfig::default();
    for k in [make_cosine_kernel(), make_quadratic_kernel()] {
        let p = omega_pieces(&k, 2.0, 1, &cfg).unwrap();
        let (g, gdd) = (&p.g, &p.g_dd);
        let h = g.step();
        let scale = gdd.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0f64;
        for i in 2..g.len() - 2 {
            let y = g.x(i);
            // Skip the endpoints and 0, where g″ itself jumps.
            if y.abs() < 4.0 * h || (y.abs() - 2.0 * p.scale).abs() < 4.0 * h {
                continue;
            }
            let fd = (g.values()[i + 2] - 2.0 * g.values()[i] + g.values()[i - 2]) / (4.0 * h * h);
            worst = worst.max((fd - gdd.values()[i]).abs() / scale);
        }
        assert!(worst < 1e-3, "{}: relative gap {worst:.2e}", k.name());
    }
}

/// `g = f ∗ f`, so its transform is `f̂² ≥ 0`.
#[test]
fn seed_autocorrelation_has_nonnegative_transform() {
    let cfg = QuadConfig::default();
    for k in [make_cosine_kernel(), make_quadratic_kernel()] {
        let p = omega_pieces(&k, 2.0, 1, &cfg).unwrap();
        let s = p.scale;
        for i in 0..200 {
            let x = i as f64 * 0.1;
            let ghat = p.g.map(|y, v| v * (2.0 * PI * x * y).cos()).integral();
            let fhat = s * k.transform(s * x);
            assert!(ghat >= -1e-9, "{} x={x}: {ghat}", k.name());
            assert!((ghat - fhat * fhat).abs() < 1e-6, "{} x={x}: {ghat} vs {}", k.name(), fhat * fhat);
        }
    }
}

#[test]
fn invalid_parameters_are_rejected() {
    let k = make_cosine_kernel();
    let cfg = QuadConfig::default();
    assert!(make_naive(0.0).is_err());
    assert!(make_naive(f64::NAN).is_err());
    assert!(make_omega(&k, 2.0, 1, 0.0, &cfg).is_err());
    assert!(make_omega(&k, 2.0, 0, 0.5, &cfg).is_err());
    assert!(make_omega(&k, -1.0, 1, 0.5, &cfg).is_err());
}
