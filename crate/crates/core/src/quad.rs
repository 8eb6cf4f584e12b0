//! Quadrature engine: 1-D rules with Richardson error estimates, a tensor
//! product oracle for low-dimensional boxes, uniform grid functions with
//! discrete convolution, and the oscillatory sinc-kernel inner integral.
//!
//! All reductions run left to right with Neumaier compensation, so results do
//! not depend on how many worker threads produced the summands.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sum in index order with compensation.
pub fn ordered_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    MidpointRiemann,
    Trapezoid,
    GaussLegendre,
}

impl Rule {
    /// Convergence order in the step size for smooth integrands.
    fn order(self) -> i32 {
        match self {
            Rule::MidpointRiemann | Rule::Trapezoid => 2,
            Rule::GaussLegendre => 2 * GL_PANEL_NODES as i32,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::MidpointRiemann => "midpoint-riemann",
            Rule::Trapezoid => "trapezoid",
            Rule::GaussLegendre => "gauss-legendre",
        })
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "midpoint-riemann" | "midpoint" => Ok(Rule::MidpointRiemann),
            "trapezoid" => Ok(Rule::Trapezoid),
            "gauss-legendre" | "gl" => Ok(Rule::GaussLegendre),
            other => Err(Error::invalid(format!("unknown quadrature rule `{other}`"))),
        }
    }
}

/// Quadrature settings shared by every integral in a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub rule: Rule,
    /// Sample count per dimension; also the size of the `φ̂` grid.
    pub points_per_dim: usize,
    /// Number of step halvings used for the error estimate.
    pub refinement: u32,
    pub tolerance: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { rule: Rule::Trapezoid, points_per_dim: 4001, refinement: 1, tolerance: 1e-8 }
    }
}

impl QuadConfig {
    pub fn with_points(mut self, points: usize) -> Self {
        self.points_per_dim = points;
        self
    }

    pub fn with_rule(mut self, rule: Rule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.points_per_dim < 8 {
            return Err(Error::invalid("points_per_dim must be at least 8"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        Ok(())
    }

    /// Odd grid size (so a symmetric grid has a node at the origin).
    pub fn odd_points(&self) -> usize {
        self.points_per_dim | 1
    }
}

/// A quadrature value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

const GL_PANEL_NODES: usize = 10;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn panel_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre_nodes(GL_PANEL_NODES))
}

/// Composite 10-point Gauss–Legendre over `panels` equal panels.
pub fn gauss_legendre_composite<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, panels: usize) -> f64 {
    let (x, w) = panel_rule();
    let panels = panels.max(1);
    let width = (hi - lo) / panels as f64;
    let mut acc = CompensatedSum::new();
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * width;
        for (xi, wi) in x.iter().zip(w) {
            acc.add(wi * f(mid + 0.5 * width * xi));
        }
    }
    acc.value() * 0.5 * width
}

/// Nodes and weights of `rule` with roughly `n` samples on `[lo, hi]`.
pub fn rule_nodes(rule: Rule, n: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    match rule {
        Rule::MidpointRiemann => {
            let h = (hi - lo) / n as f64;
            ((0..n).map(|i| lo + (i as f64 + 0.5) * h).collect(), vec![h; n])
        }
        Rule::Trapezoid => {
            let n = n.max(2);
            let h = (hi - lo) / (n - 1) as f64;
            let xs = (0..n).map(|i| lo + i as f64 * h).collect();
            let mut ws = vec![h; n];
            ws[0] = 0.5 * h;
            ws[n - 1] = 0.5 * h;
            (xs, ws)
        }
        Rule::GaussLegendre => {
            let (x, w) = panel_rule();
            let panels = (n / GL_PANEL_NODES).max(1);
            let width = (hi - lo) / panels as f64;
            let mut xs = Vec::with_capacity(panels * GL_PANEL_NODES);
            let mut ws = Vec::with_capacity(panels * GL_PANEL_NODES);
            for p in 0..panels {
                let mid = lo + (p as f64 + 0.5) * width;
                for (xi, wi) in x.iter().zip(w) {
                    xs.push(mid + 0.5 * width * xi);
                    ws.push(0.5 * width * wi);
                }
            }
            (xs, ws)
        }
    }
}

/// Sample count after `k` halvings of the step of an `n`-sample rule.
fn refined_count(rule: Rule, n: usize, k: u32) -> usize {
    match rule {
        Rule::Trapezoid => ((n.max(2) - 1) << k) + 1,
        _ => n << k,
    }
}

fn apply_rule<F: Fn(f64) -> f64 + Sync>(f: &F, rule: Rule, n: usize, lo: f64, hi: f64) -> Result<f64> {
    let (xs, ws) = rule_nodes(rule, n, lo, hi);
    let vals: Vec<f64> = xs.par_iter().map(|&x| f(x)).collect();
    let mut acc = CompensatedSum::new();
    for ((x, w), v) in xs.iter().zip(&ws).zip(&vals) {
        if !v.is_finite() {
            return Err(Error::NonFinite { abscissa: *x });
        }
        acc.add(w * v);
    }
    Ok(acc.value())
}

/// `∫_lo^hi f` with the configured rule. The value comes from the finest
/// level; the error is the Richardson estimate from the last two levels.
pub fn integrate_1d<F>(f: F, lo: f64, hi: f64, cfg: &QuadConfig) -> Result<Estimate>
where
    F: Fn(f64) -> f64 + Sync,
{
    cfg.validate()?;
    if !(lo < hi) {
        return Err(Error::invalid(format!("integration bounds must satisfy lo < hi (got {lo}, {hi})")));
    }
    let base = cfg.points_per_dim;
    let levels = cfg.refinement.max(1);
    let mut prev = apply_rule(&f, cfg.rule, base, lo, hi)?;
    let mut error = f64::INFINITY;
    for k in 1..=levels {
        let cur = apply_rule(&f, cfg.rule, refined_count(cfg.rule, base, k), lo, hi)?;
        error = (cur - prev).abs() / ((1u64 << cfg.rule.order().min(62)) as f64 - 1.0);
        prev = cur;
    }
    Ok(Estimate { value: prev, error })
}

/// Tensor-product rule over a box of dimension at most 4.
pub fn integrate_nd<F>(f: F, bounds: &[(f64, f64)], cfg: &QuadConfig) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let d = bounds.len();
    if d == 0 || d > 4 {
        return Err(Error::invalid(format!("integrate_nd supports 1 to 4 dimensions (got {d})")));
    }
    if bounds.iter().any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
        return Err(Error::invalid("integrate_nd needs a finite box with lo < hi"));
    }
    let coarse_n = (cfg.points_per_dim / 2).max(4);
    let fine = tensor_rule(&f, bounds, cfg.rule, cfg.points_per_dim)?;
    let coarse = tensor_rule(&f, bounds, cfg.rule, coarse_n)?;
    let ratio = cfg.points_per_dim as f64 / coarse_n as f64;
    let error = (fine - coarse).abs() / (ratio.powi(cfg.rule.order().min(30)) - 1.0).max(1.0);
    Ok(Estimate { value: fine, error })
}

fn tensor_rule<F>(f: &F, bounds: &[(f64, f64)], rule: Rule, n: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let axes: Vec<(Vec<f64>, Vec<f64>)> =
        bounds.iter().map(|&(lo, hi)| rule_nodes(rule, n, lo, hi)).collect();
    let d = axes.len();
    let (x0, w0) = &axes[0];
    let slabs: Vec<Result<f64>> = x0
        .par_iter()
        .zip(w0)
        .map(|(&x, &w)| {
            let mut point = vec![0.0; d];
            point[0] = x;
            let mut acc = CompensatedSum::new();
            let mut idx = vec![0usize; d];
            loop {
                let mut weight = w;
                for k in 1..d {
                    point[k] = axes[k].0[idx[k]];
                    weight *= axes[k].1[idx[k]];
                }
                let v = f(&point);
                if !v.is_finite() {
                    return Err(Error::NonFinite { abscissa: point[0] });
                }
                acc.add(weight * v);
                // odometer over axes 1..d
                let mut k = d;
                loop {
                    if k == 1 {
                        return Ok(acc.value());
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < axes[k].0.len() {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        })
        .collect();
    let mut acc = CompensatedSum::new();
    for s in slabs {
        acc.add(s?);
    }
    Ok(acc.value())
}

/// Uniform samples of a function on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    lo: f64,
    step: f64,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(lo: f64, hi: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid("a grid function needs at least two samples"));
        }
        if !(hi > lo) {
            return Err(Error::invalid("grid interval must have hi > lo"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            let step = (hi - lo) / (values.len() - 1) as f64;
            return Err(Error::NonFinite { abscissa: lo + i as f64 * step });
        }
        let step = (hi - lo) / (values.len() - 1) as f64;
        Ok(GridFunction { lo, step, values })
    }

    /// Sample `f` at `count` equally spaced points on `[lo, hi]`.
    pub fn from_fn<F: Fn(f64) -> f64 + Sync>(lo: f64, hi: f64, count: usize, f: F) -> Result<Self> {
        if count < 2 {
            return Err(Error::invalid("a grid function needs at least two samples"));
        }
        let step = (hi - lo) / (count - 1) as f64;
        let values = (0..count).into_par_iter().map(|i| f(lo + i as f64 * step)).collect();
        Self::new(lo, hi, values)
    }

    fn from_parts(lo: f64, step: f64, values: Vec<f64>) -> Self {
        GridFunction { lo, step, values }
    }

    pub fn zeros_like(&self) -> Self {
        Self::from_parts(self.lo, self.step, vec![0.0; self.values.len()])
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.lo + self.step * (self.values.len() - 1) as f64
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn x(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step
    }

    /// Linear interpolation; zero outside `[lo, hi]`.
    pub fn eval(&self, x: f64) -> f64 {
        let pos = (x - self.lo) / self.step;
        let last = (self.values.len() - 1) as f64;
        if !(pos >= -1e-9) || pos > last + 1e-9 {
            return 0.0;
        }
        let pos = pos.clamp(0.0, last);
        let i = (pos.floor() as usize).min(self.values.len() - 2);
        let t = pos - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    /// Trapezoid integral over the whole grid.
    pub fn integral(&self) -> f64 {
        let n = self.values.len();
        let mut acc = CompensatedSum::new();
        for (i, v) in self.values.iter().enumerate() {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            acc.add(w * v);
        }
        acc.value() * self.step
    }

    /// Running trapezoid integral `∫_lo^x`, sampled on the same grid.
    pub fn cumulative(&self) -> GridFunction {
        let mut out = Vec::with_capacity(self.values.len());
        let mut acc = CompensatedSum::new();
        out.push(0.0);
        for w in self.values.windows(2) {
            acc.add(0.5 * (w[0] + w[1]) * self.step);
            out.push(acc.value());
        }
        Self::from_parts(self.lo, self.step, out)
    }

    /// `∫_a^b` of the piecewise-linear interpolant.
    pub fn integral_between(&self, a: f64, b: f64) -> f64 {
        let c = self.cumulative();
        c.eval_clamped(b) - c.eval_clamped(a)
    }

    /// Like [`eval`](Self::eval) but holds the end values outside the grid.
    pub fn eval_clamped(&self, x: f64) -> f64 {
        let x = x.clamp(self.lo, self.hi());
        let pos = (x - self.lo) / self.step;
        let i = (pos.floor() as usize).min(self.values.len() - 2);
        let t = pos - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    pub fn map<F: Fn(f64, f64) -> f64>(&self, f: F) -> GridFunction {
        let values = self.values.iter().enumerate().map(|(i, &v)| f(self.x(i), v)).collect();
        Self::from_parts(self.lo, self.step, values)
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        self.map(|_, v| c * v)
    }

    /// Pointwise sum of two grids on the same nodes.
    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        if self.values.len() != other.values.len()
            || (self.lo - other.lo).abs() > 1e-12 * (1.0 + self.lo.abs())
        {
            return Err(Error::invalid("grid functions live on different nodes"));
        }
        check_step(self.step, other.step)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Self::from_parts(self.lo, self.step, values))
    }

    /// The samples on `[0, hi]` of a grid symmetric about the origin.
    pub fn right_half(&self) -> Result<GridFunction> {
        let n = self.values.len();
        if n.is_multiple_of(2) || (self.lo + self.hi()).abs() > 1e-9 * self.hi().abs().max(1.0) {
            return Err(Error::invalid("expected an odd-length grid symmetric about 0"));
        }
        Ok(Self::from_parts(0.0, self.step, self.values[n / 2..].to_vec()))
    }
}

fn check_step(a: f64, b: f64) -> Result<()> {
    if (a - b).abs() > 1e-9 * a.abs().max(b.abs()) {
        Err(Error::StepMismatch { left: a, right: b })
    } else {
        Ok(())
    }
}

/// `(a ∗ b)(x) = ∫ a(t) b(x - t) dt` on the sum interval.
///
/// Each output node is a trapezoid sum over the overlap of the two supports,
/// with half weights at both ends of the overlap.
pub fn convolve_grid(a: &GridFunction, b: &GridFunction) -> Result<GridFunction> {
    check_step(a.step, b.step)?;
    let (na, nb) = (a.values.len(), b.values.len());
    let h = a.step;
    let values: Vec<f64> = (0..na + nb - 1)
        .into_par_iter()
        .map(|k| {
            let jlo = k.saturating_sub(nb - 1);
            let jhi = k.min(na - 1);
            if jlo == jhi {
                return 0.0;
            }
            let mut acc = CompensatedSum::new();
            acc.add(0.5 * a.values[jlo] * b.values[k - jlo]);
            for j in jlo + 1..jhi {
                acc.add(a.values[j] * b.values[k - j]);
            }
            acc.add(0.5 * a.values[jhi] * b.values[k - jhi]);
            acc.value() * h
        })
        .collect();
    Ok(GridFunction::from_parts(a.lo + b.lo, h, values))
}

/// Density `ρ_l` of `|x₂| + ... + |x_{l+1}|` under the weight `φ̂(x₂)···φ̂(x_{l+1})`.
///
/// `hat` must be even and sampled on a symmetric odd-length grid `[-s, s]`.
/// The result lives on `[0, l·s]` and has mass `(∫φ̂)^l`.
pub fn abs_sum_density(hat: &GridFunction, l: usize) -> Result<GridFunction> {
    if l == 0 {
        return Err(Error::invalid("abs_sum_density needs l ≥ 1; the empty product is handled by the caller"));
    }
    let rho1 = hat.right_half()?.scale(2.0);
    let mut rho = rho1.clone();
    for _ in 1..l {
        rho = convolve_grid(&rho, &rho1)?;
    }
    Ok(rho)
}

/// Power-law envelope `|φ(x)| ≤ coeff·|x|^(-power)` for `|x| ≥ 1`, plus the
/// half-width of `supp φ̂` (the highest frequency present in `φ`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBound {
    pub coeff: f64,
    pub power: f64,
    pub bandwidth: f64,
}

/// `∫ φ(x)^p · sin(2πx(1 + shift)) / (2πx) dx` computed on the x-side.
///
/// The integrand is continued to `φ(0)^p (1 + shift)` at the origin. The
/// integral is truncated at a radius where the envelope's tail falls below
/// the configured tolerance.
pub fn sinc_inner<F>(phi: F, p: u32, shift: f64, tail: TailBound, cfg: &QuadConfig) -> Result<Estimate>
where
    F: Fn(f64) -> f64 + Sync,
{
    if p == 0 {
        return Err(Error::invalid("sinc_inner needs p ≥ 1"));
    }
    if !(shift >= 0.0) {
        return Err(Error::invalid("sinc_inner needs shift ≥ 0"));
    }
    cfg.validate()?;
    let pf = p as f64;
    let decay = pf * tail.power;
    let c = tail.coeff.powi(p as i32);
    let radius = if c == 0.0 {
        50.0
    } else {
        (c / (PI * decay * cfg.tolerance)).powf(1.0 / decay).max(50.0)
    };
    let freq = 1.0 + shift + pf * tail.bandwidth;
    let panels = (radius * 2.0 * freq).ceil() as usize + 1;
    let omega = 2.0 * PI * (1.0 + shift);
    let integrand = |x: f64| {
        let v = phi(x).powi(p as i32);
        let kernel = if (omega * x).abs() < 1e-8 {
            1.0 + shift
        } else {
            (omega * x).sin() / (2.0 * PI * x)
        };
        v * kernel
    };
    let fine = 2.0 * gauss_legendre_composite(integrand, 0.0, radius, panels);
    let coarse = 2.0 * gauss_legendre_composite(integrand, 0.0, radius, panels.div_ceil(2));
    if !fine.is_finite() {
        return Err(Error::Numerical("sinc_inner produced a non-finite value".into()));
    }
    let tail_err = if c == 0.0 { 0.0 } else { c * radius.powf(-decay) / (PI * decay) };
    Ok(Estimate { value: fine, error: (fine - coarse).abs() + tail_err })
}
