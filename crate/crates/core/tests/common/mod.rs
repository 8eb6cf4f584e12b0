//! Reference computations shared by the integration tests. Nothing here calls
//! the moment or convolution code under test.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Order-`k` cardinal B-spline on `[0, k]` by the Cox–de Boor recursion.
pub fn bspline(k: u32, x: f64) -> f64 {
    if k == 1 {
        return if (0.0..1.0).contains(&x) { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    (x * bspline(k - 1, x) + (kf - x) * bspline(k - 1, x - 1.0)) / (kf - 1.0)
}

/// 10-point Gauss–Legendre nodes on `[-1, 1]`, tabulated.
const GL_X: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_W: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_4,
    0.219_086_362_515_982,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

pub fn gl(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    let mut s = 0.0;
    for (x, w) in GL_X.iter().zip(GL_W) {
        s += w * (f(m - h * x) + f(m + h * x));
    }
    s * h
}

/// `∫₀^x B_k`, integrating each polynomial piece exactly.
pub fn bspline_cdf(k: u32, x: f64) -> f64 {
    let x = x.clamp(0.0, k as f64);
    let mut acc = 0.0;
    let mut left = 0.0;
    while left < x {
        let right = (left + 1.0).min(x);
        acc += gl(|t| bspline(k, t), left, right);
        left += 1.0;
    }
    acc
}

/// `∫₀^T` of the `p`-fold self-convolution of the naive transform with
/// parameter `σ`, which is `(1/σ) B_{2p}(y/σ + p)`. For `p = 0` this is the
/// Dirichlet integral `1/2`.
pub fn naive_window(sigma: f64, p: u32, t: f64) -> f64 {
    if p == 0 {
        return 0.5;
    }
    bspline_cdf(2 * p, t / sigma + p as f64) - bspline_cdf(2 * p, p as f64)
}

pub fn naive_hat(sigma: f64, y: f64) -> f64 {
    ((1.0 - y.abs() / sigma) / sigma).max(0.0)
}

pub fn naive_phi(sigma: f64, x: f64) -> f64 {
    let z = PI * sigma * x;
    if z == 0.0 {
        1.0
    } else {
        (z.sin() / z).powi(2)
    }
}

pub fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Relative difference `|a/b − 1|`.
pub fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

/// `R(m, i)` for the naive pair by brute force: each `I_l` is an
/// `l`-dimensional tensor-product integral of `φ̂(x₂)···φ̂(x_{l+1})` against
/// the exact window `J_{m−l}(1 + |x₂| + ··· + |x_{l+1}|)`.
pub fn tensor_big_r(m: u32, i: u32, sigma: f64) -> f64 {
    use lowzero::quad::{integrate_nd, QuadConfig, Rule};
    let cfg = QuadConfig::default().with_rule(Rule::GaussLegendre).with_points(200);
    let mut total = 0.0;
    for l in 0..i {
        let inner = if l == 0 {
            naive_window(sigma, m, 1.0)
        } else {
            let bounds = vec![(-sigma, sigma); l as usize];
            integrate_nd(
                |x: &[f64]| {
                    let weight: f64 = x.iter().map(|&y| naive_hat(sigma, y)).product();
                    let shift: f64 = x.iter().map(|y| y.abs()).sum();
                    weight * naive_window(sigma, m - l, 1.0 + shift)
                },
                &bounds,
                &cfg,
            )
            .expect("tensor quadrature")
            .value
        };
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * binom(m, l) * (-0.5 + inner);
    }
    let parity = if m % 2 == 1 { 1.0 } else { -1.0 };
    2f64.powi(m as i32 - 1) * parity * total
}
