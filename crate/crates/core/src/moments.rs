//! Centered-moment limits of the one-test-function statistic.
//!
//! The main entry point is [`MomentEngine`], which tabulates everything that
//! `R(m, i)` needs for one test function: the self-convolutions `φ̂^{∗p}`, the
//! folded densities `ρ_l`, and the windowed integrals `J_p(T) = ∫₀^T φ̂^{∗p}`.
//! The free functions build a throwaway engine for one-off queries.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{abs_sum_density, convolve_grid, sinc_inner, CompensatedSum, GridFunction, QuadConfig};
use crate::testfun::TestFunctionPair;

/// Family sign: `+1` for the even family, `−1` for the odd one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Whether the support budget is inside the unconditionally proven range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupportRegime {
    GrhProven,
    Conjectural,
}

impl SupportRegime {
    pub fn of(sigma: f64) -> Self {
        if sigma <= 2.0 {
            SupportRegime::GrhProven
        } else {
            SupportRegime::Conjectural
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSpec {
    pub n: u32,
    pub a: u32,
    pub sign: Sign,
    pub sigma: f64,
}

impl MomentSpec {
    /// Level `n` with the defaults `a = n`, even family and `σ = 2`.
    pub fn new(n: u32) -> Self {
        MomentSpec { n, a: n, sign: Sign::Plus, sigma: 2.0 }
    }

    pub fn with_a(mut self, a: u32) -> Self {
        self.a = a;
        self
    }

    pub fn with_sign(mut self, sign: Sign) -> Self {
        self.sign = sign;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn regime(&self) -> SupportRegime {
        SupportRegime::of(self.sigma)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("moment level n must be at least 1"));
        }
        if self.a == 0 {
            return Err(Error::invalid("parameter a must be at least 1"));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::invalid("sigma must be positive"));
        }
        Ok(())
    }
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
    }
    acc
}

/// `n!! = n(n−2)(n−4)···`, with `0!! = (−1)!! = 1`.
pub fn double_factorial(n: i64) -> u128 {
    let mut acc: u128 = 1;
    let mut k = n;
    while k > 1 {
        acc *= k as u128;
        k -= 2;
    }
    acc
}

/// `n! / ((n − 2l)! l!)`, the number of ways to pick `l` disjoint pairs
/// from `n` labelled items times `2^l`.
pub fn pairing_coefficient(n: u64, l: u64) -> u128 {
    assert!(2 * l <= n);
    let mut acc: u128 = 1;
    for j in (n - 2 * l + 1)..=n {
        acc *= j as u128;
    }
    for j in 2..=l {
        acc /= j as u128;
    }
    acc
}

/// How `I_l` is evaluated inside `R(m, i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InnerRoute {
    /// `∫φ^p(x) sin(2πxT)/(2πx) dx = ∫₀^T φ̂^{∗p}`, read off gridded self-convolutions.
    #[default]
    Fourier,
    /// Truncated oscillatory quadrature on the x-side at every `t` node.
    XSide,
}

/// Tabulated ingredients of the moment formulas for one test function.
pub struct MomentEngine {
    tf: TestFunctionPair,
    cfg: QuadConfig,
    route: InnerRoute,
    hat: GridFunction,
    /// Cumulative integrals of `φ̂^{∗p}` for `p = 1..=max_p`, index `p − 1`.
    cumulative: Vec<GridFunction>,
    /// `ρ_l` for `l = 1..=max_p`, index `l − 1`.
    densities: Vec<GridFunction>,
    phi0: f64,
    max_p: u32,
}

impl MomentEngine {
    /// Engine able to answer `R(m, i)` for `m ≤ max_p`.
    pub fn new(tf: &TestFunctionPair, max_p: u32, cfg: &QuadConfig) -> Result<Self> {
        Self::with_route(tf, max_p, cfg, InnerRoute::Fourier)
    }

    pub fn with_route(tf: &TestFunctionPair, max_p: u32, cfg: &QuadConfig, route: InnerRoute) -> Result<Self> {
        cfg.validate()?;
        if max_p == 0 {
            return Err(Error::invalid("max_p must be at least 1"));
        }
        let hat = tf.hat_grid(cfg)?;
        let mut powers = vec![hat.clone()];
        for _ in 1..max_p {
            let next = convolve_grid(powers.last().expect("non-empty"), &hat)?;
            powers.push(next);
        }
        let cumulative = powers.iter().map(GridFunction::cumulative).collect();
        let densities = (1..=max_p).map(|l| abs_sum_density(&hat, l as usize)).collect::<Result<Vec<_>>>()?;
        Ok(MomentEngine { tf: tf.clone(), cfg: *cfg, route, hat, cumulative, densities, phi0: tf.phi(0.0), max_p })
    }

    pub fn test_function(&self) -> &TestFunctionPair {
        &self.tf
    }

    pub fn hat(&self) -> &GridFunction {
        &self.hat
    }

    /// `J_p(T) = ∫₀^T φ̂^{∗p}(y) dy`.
    pub fn window(&self, p: u32, t: f64) -> f64 {
        let c = &self.cumulative[(p - 1) as usize];
        c.eval_clamped(t) - c.eval_clamped(0.0)
    }

    /// `ρ_l`, the density of `|x₂| + ··· + |x_{l+1}|` under `φ̂^{⊗l}`.
    pub fn density(&self, l: u32) -> &GridFunction {
        &self.densities[(l - 1) as usize]
    }

    fn inner(&self, p: u32, shift: f64) -> Result<f64> {
        if p == 0 {
            // φ⁰ ≡ 1 and ∫ sin(2πxT)/(2πx) dx = 1/2 for every T > 0.
            return Ok(0.5);
        }
        match self.route {
            InnerRoute::Fourier => Ok(self.window(p, 1.0 + shift)),
            InnerRoute::XSide => {
                Ok(sinc_inner(|x| self.tf.phi(x), p, shift, self.tf.tail_bound(), &self.cfg)?.value)
            }
        }
    }

    /// `I_l = ∫ ρ_l(t) · inner(m − l, t) dt`, and `I_0 = inner(m, 0)`.
    fn outer(&self, m: u32, l: u32) -> Result<f64> {
        if l == 0 {
            return self.inner(m, 0.0);
        }
        let rho = self.density(l);
        let p = m - l;
        let table: Vec<Result<f64>> =
            (0..rho.len()).into_par_iter().map(|k| self.inner(p, rho.x(k))).collect();
        let n = rho.len();
        let mut acc = CompensatedSum::new();
        for (k, (r, v)) in rho.values().iter().zip(table).enumerate() {
            let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            acc.add(w * r * v?);
        }
        Ok(acc.value() * rho.step())
    }

    /// `R(m, i) = 2^{m−1}(−1)^{m+1} Σ_{l<i} (−1)^l C(m,l) [−½φ(0)^m + I_l]`.
    pub fn big_r(&self, m: u32, i: u32) -> Result<f64> {
        if i == 0 {
            return Ok(0.0);
        }
        if m == 0 || m > self.max_p {
            return Err(Error::invalid(format!("R(m, i) needs 1 ≤ m ≤ {} (got m = {m})", self.max_p)));
        }
        if i > m + 1 {
            return Err(Error::invalid(format!(
                "R({m}, {i}) would need φ^{{m−l}} with l > m; require i ≤ m + 1"
            )));
        }
        let base = -0.5 * self.phi0.powi(m as i32);
        let mut acc = CompensatedSum::new();
        for l in 0..i {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            acc.add(sign * binomial(m as u64, l as u64) as f64 * (base + self.outer(m, l)?));
        }
        let prefactor = 2f64.powi(m as i32 - 1) * if m % 2 == 1 { 1.0 } else { -1.0 };
        Ok(prefactor * acc.value())
    }

    pub fn sigma_phi_sq(&self) -> f64 {
        sigma_phi_sq_grid(&self.hat)
    }

    /// `S(n, a) = Σ_{l ≤ (a−1)/2} n!/((n−2l)! l!) · R(n−2l, a−2l) · (σ_φ²/2)^l`.
    pub fn big_s(&self, n: u32, a: u32) -> Result<f64> {
        if n == 0 || a == 0 {
            return Err(Error::invalid("S(n, a) needs n ≥ 1 and a ≥ 1"));
        }
        let half_var = 0.5 * self.sigma_phi_sq();
        let mut acc = CompensatedSum::new();
        for l in 0..=(a - 1) / 2 {
            if 2 * l > n {
                return Err(Error::invalid(format!("S({n}, {a}) reaches R(m, i) with m < 0")));
            }
            let coeff = pairing_coefficient(n as u64, l as u64) as f64;
            acc.add(coeff * self.big_r(n - 2 * l, a - 2 * l)? * half_var.powi(l as i32));
        }
        Ok(acc.value())
    }

    /// `1_{n even}(n−1)!!(σ_φ²)^{n/2} ± S(n, a)`.
    pub fn rhs_limit(&self, spec: &MomentSpec) -> Result<f64> {
        spec.validate()?;
        let gaussian = if spec.n.is_multiple_of(2) {
            double_factorial(spec.n as i64 - 1) as f64 * self.sigma_phi_sq().powi((spec.n / 2) as i32)
        } else {
            0.0
        };
        Ok(gaussian + spec.sign.value() * self.big_s(spec.n, spec.a)?)
    }

    /// `μ = φ̂(0) + ½∫φ̂`.
    pub fn mean_so_even(&self) -> f64 {
        self.tf.phi_hat(0.0) + 0.5 * self.hat.integral()
    }
}

fn sigma_phi_sq_grid(hat: &GridFunction) -> f64 {
    2.0 * hat.map(|y, v| y.abs() * v * v).integral()
}

/// `σ_φ² = 2∫|y| φ̂(y)² dy`.
pub fn sigma_phi_sq(tf: &TestFunctionPair, cfg: &QuadConfig) -> Result<f64> {
    Ok(sigma_phi_sq_grid(&tf.hat_grid(cfg)?))
}

pub fn big_r(m: u32, i: u32, tf: &TestFunctionPair, cfg: &QuadConfig) -> Result<f64> {
    if i == 0 {
        return Ok(0.0);
    }
    MomentEngine::new(tf, m.max(1), cfg)?.big_r(m, i)
}

pub fn big_s(n: u32, a: u32, tf: &TestFunctionPair, cfg: &QuadConfig) -> Result<f64> {
    MomentEngine::new(tf, n.max(1), cfg)?.big_s(n, a)
}

pub fn rhs_limit(spec: &MomentSpec, tf: &TestFunctionPair, cfg: &QuadConfig) -> Result<f64> {
    spec.validate()?;
    MomentEngine::new(tf, spec.n, cfg)?.rhs_limit(spec)
}

pub fn mean_so_even(tf: &TestFunctionPair, cfg: &QuadConfig) -> Result<f64> {
    Ok(tf.phi_hat(0.0) + 0.5 * crate::testfun::hat_integral(tf, cfg)?)
}

/// Exact formulas for the naive pair, where `φ̂^{∗p}` is a scaled cardinal
/// B-spline: `φ̂^{∗p}(y) = (1/σ) B_{2p}(y/σ + p)`.
pub mod naive_exact {
    use super::binomial;

    /// `∫₀^x B_k`, the distribution function of the order-`k` cardinal B-spline.
    pub fn bspline_cdf(k: u32, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= k as f64 {
            return 1.0;
        }
        let mut fact = 1.0;
        for j in 2..=k {
            fact *= j as f64;
        }
        let mut acc = 0.0;
        for j in 0..=k {
            let d = x - j as f64;
            if d <= 0.0 {
                break;
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binomial(k as u64, j as u64) as f64 * d.powi(k as i32);
        }
        acc / fact
    }

    /// `∫₀^T φ̂^{∗p}` for the naive pair with parameter `σ`.
    pub fn window(sigma: f64, p: u32, t: f64) -> f64 {
        let k = 2 * p;
        bspline_cdf(k, t / sigma + p as f64) - 0.5
    }
}

/// `sin(2πx T)/(2πx)` continued at the origin.
pub fn sinc_window(x: f64, t: f64) -> f64 {
    let z = 2.0 * PI * x;
    if (z * t).abs() < 1e-8 {
        t
    } else {
        (z * t).sin() / z
    }
}
