mod common;

use lowzero::kernels::make_cosine_kernel;
use lowzero::moments::{
    binomial, double_factorial, pairing_coefficient, InnerRoute, MomentEngine, MomentSpec, Sign,
};
use lowzero::quad::QuadConfig;
use lowzero::testfun::{make_naive, make_omega};

use common::{gl, naive_hat, naive_window, tensor_big_r};

#[test]
fn windows_match_bspline_oracle() {
    for sigma in [0.5, 1.0, 2.0] {
        let tf = make_naive(sigma).unwrap();
        let engine = MomentEngine::new(&tf, 4, &QuadConfig::default()).unwrap();
        for p in 1..=4 {
            for t in [0.1, 0.5, 1.0, 1.7, 3.0, 9.0] {
                let got = engine.window(p, t);
                let want = naive_window(sigma, p, t);
                assert!((got - want).abs() < 1e-6, "σ={sigma} p={p} T={t}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn big_r_matches_tensor_oracle() {
    let sigma = 1.0;
    let engine = MomentEngine::new(&make_naive(sigma).unwrap(), 6, &QuadConfig::default()).unwrap();
    for m in 1..=6u32 {
        for i in 1..=(m + 1).min(3) {
            let got = engine.big_r(m, i).unwrap();
            let want = tensor_big_r(m, i, sigma);
            assert!((got - want).abs() < 1e-4, "R({m},{i}): {got} vs {want}");
        }
    }
}

#[test]
fn big_r_argument_checks() {
    let engine = MomentEngine::new(&make_naive(1.0).unwrap(), 3, &QuadConfig::default()).unwrap();
    assert_eq!(engine.big_r(2, 0).unwrap(), 0.0);
    assert!(engine.big_r(2, 3).is_ok());
    assert!(engine.big_r(2, 4).is_err());
    assert!(engine.big_r(4, 1).is_err());
    assert!(engine.big_r(0, 1).is_err());
}

/// `σ_φ² = 2∫|y|φ̂(y)² dy`, evaluated independently of the engine's grid.
#[test]
fn variance_matches_direct_quadrature() {
    for sigma in [0.5, 1.0] {
        let engine = MomentEngine::new(&make_naive(sigma).unwrap(), 1, &QuadConfig::default()).unwrap();
        let direct = 4.0 * gl(|y| y * naive_hat(sigma, y).powi(2), 0.0, sigma);
        assert!((engine.sigma_phi_sq() - direct).abs() < 1e-6, "σ={sigma}");
    }
    let engine = MomentEngine::new(&make_naive(1.0).unwrap(), 1, &QuadConfig::default()).unwrap();
    assert!((engine.sigma_phi_sq() - 1.0 / 3.0).abs() < 1e-6);

    let cfg = QuadConfig::default();
    let k = make_cosine_kernel();
    let tf = make_omega(&k, 2.0, 1, 0.25, &cfg).unwrap();
    let engine = MomentEngine::new(&tf, 1, &cfg).unwrap();
    let panels = 200;
    let r = tf.hat_support_radius();
    let direct: f64 = (0..panels)
        .map(|j| {
            let (a, b) = (r * j as f64 / panels as f64, r * (j + 1) as f64 / panels as f64);
            4.0 * gl(|y| y * tf.phi_hat(y).powi(2), a, b)
        })
        .sum();
    assert!((engine.sigma_phi_sq() - direct).abs() < 1e-6 * direct.abs().max(1.0));
}

/// The Fourier-side and x-side evaluations of `I_l` give the same `R(m, i)`.
#[test]
fn inner_routes_agree() {
    let cfg = QuadConfig::default().with_points(401);
    let tf = make_naive(1.0).unwrap();
    let fourier = MomentEngine::with_route(&tf, 2, &cfg, InnerRoute::Fourier).unwrap();
    let xside = MomentEngine::with_route(&tf, 2, &cfg, InnerRoute::XSide).unwrap();
    for (m, i) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
        let a = fourier.big_r(m, i).unwrap();
        let b = xside.big_r(m, i).unwrap();
        assert!((a - b).abs() < 1e-4, "R({m},{i}): {a} vs {b}");
    }
}

#[test]
fn level_one_and_two_reduce_to_known_values() {
    let cfg = QuadConfig::default();
    for n in [2u32, 4, 6] {
        let sigma = 2.0 / n as f64;
        let engine = MomentEngine::new(&make_naive(sigma).unwrap(), 2, &cfg).unwrap();
        assert!((engine.mean_so_even() - (1.0 / sigma + 0.5)).abs() < 1e-9, "n={n}");
        assert_eq!(engine.big_s(1, 1).unwrap(), engine.big_r(1, 1).unwrap());
        let plus = engine.rhs_limit(&MomentSpec::new(2)).unwrap();
        let minus = engine.rhs_limit(&MomentSpec::new(2).with_sign(Sign::Minus)).unwrap();
        let s = engine.big_s(2, 2).unwrap();
        assert!((plus - (engine.sigma_phi_sq() + s)).abs() < 1e-15);
        assert!((minus - (engine.sigma_phi_sq() - s)).abs() < 1e-15);
    }
}

#[test]
fn combinatorics() {
    assert_eq!(binomial(10, 3), 120);
    assert_eq!(binomial(5, 0), 1);
    assert_eq!(binomial(3, 5), 0);
    assert_eq!(binomial(60, 30), 118_264_581_564_861_424);
    assert_eq!(double_factorial(-1), 1);
    assert_eq!(double_factorial(0), 1);
    assert_eq!(double_factorial(7), 105);
    assert_eq!(double_factorial(8), 384);
    // n!/((n−2l)! l!) as a falling factorial over l!.
    for n in 0..12u64 {
        for l in 0..=n / 2 {
            let want = (0..2 * l).fold(1u128, |acc, j| acc * (n - j) as u128) / (1..=l).product::<u64>().max(1) as u128;
            assert_eq!(pairing_coefficient(n, l), want, "n={n} l={l}");
        }
    }
}
