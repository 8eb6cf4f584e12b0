//! Test-function pairs `(φ, φ̂)`.
//!
//! Two families are provided. The naive Fejér pair has a triangular
//! transform. The ω-family is built on the Fourier side as
//! `φ̂_ω = g + (2πω)⁻² g″` with `g = f ∗ f`, which makes `φ_ω` non-negative
//! exactly on `[-ω, ω]`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{ensure_admissible, Kernel};
use crate::quad::{GridFunction, QuadConfig, TailBound};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairKind {
    Naive,
    Omega,
    Zero,
}

/// Echo of the construction inputs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PairParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
}

#[derive(Clone)]
enum Repr {
    Naive { sigma: f64 },
    Omega { hat: GridFunction, fhat: Arc<dyn Fn(f64) -> f64 + Send + Sync>, omega: f64, tail_coeff: f64 },
    Zero,
}

/// An even test function together with its Fourier transform.
#[derive(Clone)]
pub struct TestFunctionPair {
    kind: PairKind,
    params: PairParams,
    radius: f64,
    repr: Repr,
}

impl std::fmt::Debug for TestFunctionPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunctionPair")
            .field("kind", &self.kind)
            .field("params", &self.params)
            .field("radius", &self.radius)
            .finish()
    }
}

fn sinc_pi(z: f64) -> f64 {
    if z.abs() < 1e-6 {
        let t = PI * z;
        1.0 - t * t / 6.0
    } else {
        (PI * z).sin() / (PI * z)
    }
}

impl TestFunctionPair {
    pub fn kind(&self) -> PairKind {
        self.kind
    }

    pub fn params(&self) -> &PairParams {
        &self.params
    }

    /// `φ̂` vanishes outside `(-radius, radius)`.
    pub fn hat_support_radius(&self) -> f64 {
        self.radius
    }

    pub fn phi(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Naive { sigma } => sinc_pi(sigma * x).powi(2),
            Repr::Omega { fhat, omega, .. } => {
                let v = fhat(x);
                v * v * (1.0 - (x / omega).powi(2))
            }
            Repr::Zero => 0.0,
        }
    }

    pub fn phi_hat(&self, y: f64) -> f64 {
        match &self.repr {
            Repr::Naive { sigma } => {
                let t = y.abs() / sigma;
                if t < 1.0 {
                    (1.0 - t) / sigma
                } else {
                    0.0
                }
            }
            Repr::Omega { hat, .. } => {
                if y.abs() >= self.radius {
                    0.0
                } else {
                    hat.eval(y)
                }
            }
            Repr::Zero => 0.0,
        }
    }

    /// Samples of `φ̂` on the symmetric grid `[-radius, radius]`.
    ///
    /// Analytic pairs are sampled with `cfg`'s odd point count. The ω-pair
    /// returns the grid it was built on.
    pub fn hat_grid(&self, cfg: &QuadConfig) -> Result<GridFunction> {
        match &self.repr {
            Repr::Omega { hat, .. } => Ok(hat.clone()),
            _ => GridFunction::from_fn(-self.radius, self.radius, cfg.odd_points(), |y| self.phi_hat(y)),
        }
    }

    /// Envelope of `|φ|` used to truncate x-side integrals.
    pub fn tail_bound(&self) -> TailBound {
        let (coeff, power) = match &self.repr {
            Repr::Naive { sigma } => (1.0 / (PI * sigma).powi(2), 2.0),
            Repr::Omega { tail_coeff, .. } => (*tail_coeff, 2.0),
            Repr::Zero => (0.0, 2.0),
        };
        TailBound { coeff, power, bandwidth: self.radius }
    }
}

/// The Fejér pair `φ(x) = sinc²(σx)`, `φ̂(y) = (1/σ)(1 − |y|/σ)₊`.
pub fn make_naive(sigma_n: f64) -> Result<TestFunctionPair> {
    if !(sigma_n > 0.0) || !sigma_n.is_finite() {
        return Err(Error::invalid(format!("sigma_n must be positive (got {sigma_n})")));
    }
    Ok(TestFunctionPair {
        kind: PairKind::Naive,
        params: PairParams { sigma: Some(sigma_n), ..Default::default() },
        radius: sigma_n,
        repr: Repr::Naive { sigma: sigma_n },
    })
}

/// The identically zero pair, with a nominal support radius.
pub fn make_zero(radius: f64) -> Result<TestFunctionPair> {
    if !(radius > 0.0) {
        return Err(Error::invalid("radius must be positive"));
    }
    Ok(TestFunctionPair { kind: PairKind::Zero, params: PairParams::default(), radius, repr: Repr::Zero })
}

/// Gridded pieces of the ω-construction before the `ω`-dependent sum.
///
/// `f(y) = h(y/s)` with `s = σ/(2n)`. Since `h′(±1)` may be non-zero, `f″`
/// carries point masses `J·δ(y ∓ s)` with `J = −f′(s⁻)`, so
/// `g″ = f ∗ f″_pointwise + J·[f(y − s) + f(y + s)]`.
#[derive(Debug, Clone)]
pub struct OmegaPieces {
    pub f: GridFunction,
    pub f_dd: GridFunction,
    pub g: GridFunction,
    pub g_dd: GridFunction,
    /// Scale `s` of the seed: `supp f = [-s, s]`.
    pub scale: f64,
}

/// Build `f`, `f″`, `g` and `g″` on grids sharing one step.
pub fn omega_pieces(k: &Kernel, sigma: f64, n: u32, cfg: &QuadConfig) -> Result<OmegaPieces> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("sigma must be positive (got {sigma})")));
    }
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    cfg.validate()?;
    let s = sigma / (2.0 * n as f64);
    let inv = 1.0 / s;
    let nf = cfg.odd_points().div_ceil(2);
    let f = GridFunction::from_fn(-s, s, nf, |y| k.eval(y * inv))?;
    let f_dd = GridFunction::from_fn(-s, s, nf, |y| inv * inv * k.eval_d2_closed(y * inv))?;
    let g = crate::quad::convolve_grid(&f, &f)?;
    let jump = inv * k.derivative_jump();
    let pointwise = crate::quad::convolve_grid(&f, &f_dd)?;
    let g_dd = pointwise.map(|y, v| v + jump * (k.eval((y - s) * inv) + k.eval((y + s) * inv)));
    Ok(OmegaPieces { f, f_dd, g, g_dd, scale: s })
}

/// The ω-pair for seed `k`, support budget `σ`, level `n` and sign change at `ω`.
pub fn make_omega(k: &Kernel, sigma: f64, n: u32, omega: f64, cfg: &QuadConfig) -> Result<TestFunctionPair> {
    ensure_admissible(k)?;
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::invalid(format!("omega must be positive (got {omega})")));
    }
    let pieces = omega_pieces(k, sigma, n, cfg)?;
    let c = (2.0 * PI * omega).powi(-2);
    let hat = pieces.g.add(&pieces.g_dd.scale(c))?;

    let s = pieces.scale;
    let kernel = k.clone();
    let fhat = Arc::new(move |x: f64| s * kernel.transform(s * x));

    // |f̂(x)| ≤ V/(2πx)² with V the total variation of f′.
    let variation = 2.0 * (k.eval_d1(1.0).abs() / s) + pieces.f_dd.map(|_, v| v.abs()).integral();
    let tail_coeff = variation.powi(2) * (1.0 + omega * omega) / ((2.0 * PI).powi(4) * omega * omega);

    Ok(TestFunctionPair {
        kind: PairKind::Omega,
        params: PairParams {
            sigma: Some(sigma),
            n: Some(n),
            omega: Some(omega),
            kernel: Some(k.name().to_string()),
        },
        radius: sigma / n as f64,
        repr: Repr::Omega { hat, fhat, omega, tail_coeff },
    })
}

/// `∫ φ̂` over its support, which equals `φ(0)`.
pub fn hat_integral(tf: &TestFunctionPair, cfg: &QuadConfig) -> Result<f64> {
    if tf.kind() == PairKind::Zero {
        return Ok(0.0);
    }
    Ok(tf.hat_grid(cfg)?.integral())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{make_cosine_kernel, make_quadratic_kernel};
    use approx::assert_abs_diff_eq;

    fn cfg() -> QuadConfig {
        QuadConfig::default().with_points(2001)
    }

    #[test]
    fn naive_values() {
        let tf = make_naive(1.0).unwrap();
        assert_eq!(tf.phi(0.0), 1.0);
        assert_eq!(tf.phi_hat(0.0), 1.0);
        // (sin(0.2π)/(0.2π))², written out independently
        let z = 0.2 * PI;
        assert_abs_diff_eq!(tf.phi(0.2), (z.sin() / z).powi(2), epsilon = 1e-15);
        assert_abs_diff_eq!(tf.phi(0.2), 0.8751402, epsilon = 1e-7);
        assert_eq!(tf.phi_hat(1.0), 0.0);
        assert!(make_naive(0.0).is_err());
    }

    #[test]
    fn naive_hat_integral_is_phi0() {
        for sigma in [1.0, 0.5, 2.0 / 3.0] {
            let tf = make_naive(sigma).unwrap();
            assert_abs_diff_eq!(hat_integral(&tf, &cfg()).unwrap(), 1.0, epsilon = 1e-9);
        }
        assert_eq!(hat_integral(&make_zero(1.0).unwrap(), &cfg()).unwrap(), 0.0);
    }

    #[test]
    fn omega_support_and_zero_at_omega() {
        let k = make_cosine_kernel();
        let tf = make_omega(&k, 2.0, 1, 0.5, &cfg()).unwrap();
        assert_eq!(tf.hat_support_radius(), 2.0);
        assert_eq!(tf.phi_hat(2.0001), 0.0);
        assert_eq!(tf.phi_hat(-2.0001), 0.0);
        assert_abs_diff_eq!(tf.phi(0.5), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn omega_phi0_matches_direct_fourier_integral() {
        let k = make_cosine_kernel();
        let cfg = QuadConfig::default();
        let tf = make_omega(&k, 2.0, 1, 0.5, &cfg).unwrap();
        // f̂(0) = ∫_{-1}^{1} cos(πy/2) dy = 4/π with s = 1
        assert_abs_diff_eq!(tf.phi(0.0), (4.0 / PI).powi(2), epsilon = 1e-12);
        assert_abs_diff_eq!(hat_integral(&tf, &cfg).unwrap(), tf.phi(0.0), epsilon = 1e-6);
    }

    #[test]
    fn omega_sign_pattern() {
        for k in [make_cosine_kernel(), make_quadratic_kernel()] {
            let omega = 0.4;
            let tf = make_omega(&k, 2.0, 3, omega, &cfg()).unwrap();
            for i in 0..2001 {
                let x = -5.0 * omega + 10.0 * omega * i as f64 / 2000.0;
                let v = tf.phi(x);
                if x.abs() <= omega {
                    assert!(v >= -1e-12, "{x} {v}");
                } else {
                    assert!(v <= 1e-12, "{x} {v}");
                }
            }
        }
    }

    #[test]
    fn g_second_derivative_routes_agree() {
        let k = make_quadratic_kernel();
        let p = omega_pieces(&k, 2.0, 1, &cfg()).unwrap();
        let h = p.g.step();
        let vals = p.g.values();
        let mut worst: f64 = 0.0;
        for i in 1..vals.len() - 1 {
            let fd = (vals[i + 1] - 2.0 * vals[i] + vals[i - 1]) / (h * h);
            worst = worst.max((fd - p.g_dd.values()[i]).abs());
        }
        assert!(worst < 1e-2, "worst {worst}");
    }

    #[test]
    fn g_hat_is_nonnegative() {
        let k = make_quadratic_kernel();
        let tf = make_omega(&k, 2.0, 1, 0.3, &cfg()).unwrap();
        if let Repr::Omega { fhat, .. } = &tf.repr {
            for i in 0..500 {
                let x = i as f64 * 0.05;
                assert!(fhat(x).powi(2) >= 0.0);
            }
        }
    }

    #[test]
    fn bad_omega_inputs() {
        let k = make_cosine_kernel();
        assert!(make_omega(&k, 2.0, 1, 0.0, &cfg()).is_err());
        assert!(make_omega(&k, -1.0, 1, 0.5, &cfg()).is_err());
        let bad = Kernel::custom("half", |u| 0.5 * (1.0 - u * u), |u| -u, |_| -1.0);
        assert!(matches!(make_omega(&bad, 2.0, 1, 0.5, &cfg()), Err(Error::InadmissibleKernel { .. })));
    }
}
