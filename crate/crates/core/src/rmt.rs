//! Monte-Carlo oracle over Haar-random `SO(2N)`.
//!
//! Each sample draws a special orthogonal matrix, takes its eigenangles,
//! rescales them to unit mean spacing near 1 and sums a test function over
//! them. Empirical mean and centered moments of that statistic are compared
//! with the limits from [`crate::moments`].

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{binomial, MomentEngine, MomentSpec};
use crate::quad::QuadConfig;
use crate::testfun::TestFunctionPair;

/// Scale applied to eigenangles before evaluating the test function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `(2N − 1)/(2π)`: the exact bulk density of `SO(2N)` eigenangles, so the
    /// mean spacing is 1 at finite `N`.
    #[default]
    UnitSpacing,
    /// `2N/(2π)`, the large-`N` form of the same scaling.
    Dimension,
}

impl Normalization {
    pub fn scale(self, half_size: usize) -> f64 {
        let n2 = 2.0 * half_size as f64;
        match self {
            Normalization::UnitSpacing => (n2 - 1.0) / (2.0 * PI),
            Normalization::Dimension => n2 / (2.0 * PI),
        }
    }
}

/// How many draws get the full group-membership audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditMode {
    Every,
    /// Every hundredth sample index.
    OnePercent,
    Off,
}

impl AuditMode {
    fn audits(self, index: u64) -> bool {
        match self {
            AuditMode::Every => true,
            AuditMode::OnePercent => index.is_multiple_of(100),
            AuditMode::Off => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmtConfig {
    /// `N`, so matrices are `2N × 2N`.
    pub half_size: usize,
    pub samples: usize,
    pub seed: u64,
    pub normalization: Normalization,
    pub audit: AuditMode,
}

impl Default for RmtConfig {
    fn default() -> Self {
        RmtConfig {
            half_size: 50,
            samples: 20_000,
            seed: 7,
            normalization: Normalization::UnitSpacing,
            audit: AuditMode::OnePercent,
        }
    }
}

impl RmtConfig {
    pub fn validate(&self) -> Result<()> {
        if self.half_size < 2 {
            return Err(Error::invalid("matrix half-size N must be at least 2"));
        }
        if self.samples < 2 {
            return Err(Error::invalid("at least two samples are needed for standard errors"));
        }
        Ok(())
    }

    pub fn scale(&self) -> f64 {
        self.normalization.scale(self.half_size)
    }
}

const MAX_REDRAWS: u64 = 16;

/// A sampled matrix's eigenangles, `±θ` pairs in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub angles: Vec<f64>,
    pub redraws: u32,
}

fn rng_for(seed: u64, index: u64, attempt: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(attempt << 48));
    rng
}

/// Haar `SO(dim)` from the QR factorization of a Gaussian matrix, or `None`
/// if the draw is numerically singular.
fn haar_special_orthogonal(dim: usize, rng: &mut ChaCha12Rng) -> Option<DMatrix<f64>> {
    let z = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.sample(StandardNormal));
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        if d.abs() < 1e-12 {
            return None;
        }
        if d < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        // left-multiplying by diag(−1, 1, …, 1) is a measure-preserving
        // bijection between the two components
        q.row_mut(0).neg_mut();
    }
    Some(q)
}

/// Eigenangles of an orthogonal matrix from the symmetric part `(Q + Qᵀ)/2`,
/// whose eigenvalues are `cos θ`, each appearing twice.
fn eigenangles(q: &DMatrix<f64>) -> Vec<f64> {
    let sym = (q + q.transpose()) * 0.5;
    let mut c: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    c.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(c.len());
    for pair in c.chunks(2) {
        let mean = pair.iter().sum::<f64>() / pair.len() as f64;
        let theta = mean.clamp(-1.0, 1.0).acos();
        out.push(-theta);
        out.push(theta);
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Group-membership and spectral checks for one draw.
pub fn audit_draw(q: &DMatrix<f64>, angles: &[f64]) -> Result<()> {
    let dim = q.nrows();
    let gram = q.transpose() * q - DMatrix::<f64>::identity(dim, dim);
    let orth = gram.amax();
    if orth > 1e-10 {
        return Err(Error::Numerical(format!("QᵀQ deviates from I by {orth:e}")));
    }
    let det = q.determinant();
    if (det - 1.0).abs() > 1e-8 {
        return Err(Error::Numerical(format!("det Q = {det}")));
    }
    let eig = q.clone().complex_eigenvalues();
    let mut reference = Vec::with_capacity(dim);
    for z in eig.iter() {
        if (z.norm() - 1.0).abs() > 1e-8 {
            return Err(Error::Numerical(format!("eigenvalue modulus {} ≠ 1", z.norm())));
        }
        reference.push(z.im.atan2(z.re));
    }
    let key = |t: &f64| (t.cos(), t.sin().abs());
    let mut ours: Vec<(f64, f64)> = angles.iter().map(key).collect();
    let mut theirs: Vec<(f64, f64)> = reference.iter().map(key).collect();
    ours.sort_by(|a, b| a.0.total_cmp(&b.0));
    theirs.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (a, b) in ours.iter().zip(&theirs) {
        if (a.0 - b.0).abs() > 1e-6 || (a.1 - b.1).abs() > 1e-6 {
            return Err(Error::Numerical("eigenangles disagree with the Schur spectrum".into()));
        }
    }
    let mut sorted = angles.to_vec();
    sorted.sort_by(f64::total_cmp);
    for (x, y) in sorted.iter().zip(sorted.iter().rev()) {
        if (x + y).abs() > 1e-8 {
            return Err(Error::Numerical("eigenangles are not in ± pairs".into()));
        }
    }
    Ok(())
}

/// Draw sample `index` of the run described by `cfg`.
pub fn sample_so_even(cfg: &RmtConfig, index: u64) -> Result<Draw> {
    cfg.validate()?;
    sample_with_audit(cfg, index, cfg.audit.audits(index))
}

fn sample_with_audit(cfg: &RmtConfig, index: u64, audit: bool) -> Result<Draw> {
    let dim = 2 * cfg.half_size;
    for attempt in 0..MAX_REDRAWS {
        let mut rng = rng_for(cfg.seed, index, attempt);
        if let Some(q) = haar_special_orthogonal(dim, &mut rng) {
            let angles = eigenangles(&q);
            if audit {
                audit_draw(&q, &angles)?;
            }
            return Ok(Draw { angles, redraws: attempt as u32 });
        }
    }
    Err(Error::Numerical(format!("sample {index}: {MAX_REDRAWS} consecutive singular draws")))
}

/// `Σ_j φ(θ_j · scale)`.
pub fn statistic_d(angles: &[f64], tf: &TestFunctionPair, scale: f64) -> f64 {
    angles.iter().map(|&t| tf.phi(t * scale)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralMoment {
    pub order: u32,
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMoments {
    pub samples: usize,
    pub mean: f64,
    pub mean_se: f64,
    /// Centered moments of orders `2..=max_n`.
    pub central: Vec<CentralMoment>,
    pub redraws: u64,
}

impl EmpiricalMoments {
    pub fn moment(&self, order: u32) -> Option<&CentralMoment> {
        self.central.iter().find(|m| m.order == order)
    }
}

/// Pairwise sum keyed by position, so the result does not depend on threads.
fn tree_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => {
            let (a, b) = xs.split_at(n / 2);
            tree_sum(a) + tree_sum(b)
        }
    }
}

/// Central moment of order `k` from raw moments `raw[j] = E[yʲ]`.
fn central_from_raw(raw: &[f64], k: usize) -> f64 {
    let m1 = raw[1];
    (0..=k)
        .map(|j| {
            let sign = if (k - j).is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * binomial(k as u64, j as u64) as f64 * raw[j] * m1.powi((k - j) as i32)
        })
        .sum()
}

/// Mean and centered moments of `values` with delete-one jackknife errors.
pub fn moments_with_jackknife(values: &[f64], max_n: u32) -> EmpiricalMoments {
    let m = values.len();
    let mf = m as f64;
    let k_max = max_n as usize;
    // shift by the plain mean to keep power sums well conditioned
    let shift = tree_sum(values) / mf;
    let powers: Vec<Vec<f64>> = (0..=k_max)
        .map(|k| values.iter().map(|x| (x - shift).powi(k as i32)).collect())
        .collect();
    let sums: Vec<f64> = powers.iter().map(|p| tree_sum(p)).collect();
    let full_raw: Vec<f64> = sums.iter().map(|s| s / mf).collect();

    let stat = |raw: &[f64], k: usize| if k == 1 { raw[1] } else { central_from_raw(raw, k) };
    let full: Vec<f64> = (1..=k_max).map(|k| stat(&full_raw, k)).collect();

    let leave_one: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let raw: Vec<f64> = (0..=k_max).map(|k| (sums[k] - powers[k][i]) / (mf - 1.0)).collect();
            (1..=k_max).map(|k| stat(&raw, k)).collect()
        })
        .collect();
    let se: Vec<f64> = (0..k_max)
        .map(|j| {
            let col: Vec<f64> = leave_one.iter().map(|v| v[j]).collect();
            let centre = tree_sum(&col) / mf;
            let dev: Vec<f64> = col.iter().map(|x| (x - centre).powi(2)).collect();
            ((mf - 1.0) / mf * tree_sum(&dev)).sqrt()
        })
        .collect();

    EmpiricalMoments {
        samples: m,
        mean: shift + full[0],
        mean_se: se[0],
        central: (2..=max_n)
            .map(|k| CentralMoment { order: k, value: full[k as usize - 1], se: se[k as usize - 1] })
            .collect(),
        redraws: 0,
    }
}

/// Sampled values of the statistic, in sample order.
pub fn sample_statistics(cfg: &RmtConfig, tf: &TestFunctionPair) -> Result<(Vec<f64>, u64)> {
    cfg.validate()?;
    let scale = cfg.scale();
    let draws: Vec<Result<(f64, u32)>> = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| {
            let d = sample_so_even(cfg, i)?;
            Ok((statistic_d(&d.angles, tf, scale), d.redraws))
        })
        .collect();
    let mut values = Vec::with_capacity(cfg.samples);
    let mut redraws = 0u64;
    for d in draws {
        let (v, r) = d?;
        values.push(v);
        redraws += r as u64;
    }
    Ok((values, redraws))
}

pub fn empirical_moments(cfg: &RmtConfig, tf: &TestFunctionPair, max_n: u32) -> Result<EmpiricalMoments> {
    if !(1..=6).contains(&max_n) {
        return Err(Error::invalid(format!("max_n must be between 1 and 6 (got {max_n})")));
    }
    let (values, redraws) = sample_statistics(cfg, tf)?;
    let mut out = moments_with_jackknife(&values, max_n);
    out.redraws = redraws;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub quantity: String,
    pub empirical: f64,
    pub se: f64,
    pub predicted: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmtCheck {
    pub settings: RmtConfig,
    pub a: u32,
    pub empirical: EmpiricalMoments,
    pub comparisons: Vec<Comparison>,
}

impl RmtCheck {
    pub fn max_abs_z(&self) -> f64 {
        self.comparisons.iter().map(|c| c.z.abs()).fold(0.0, f64::max)
    }
}

/// Compare the empirical mean and centered moments `2..=max_n` with the
/// predicted limits `μ` and `rhs_limit(n, a, +)`. `a = None` uses `a = n`.
pub fn rmt_check(
    cfg: &RmtConfig,
    tf: &TestFunctionPair,
    max_n: u32,
    a: Option<u32>,
    quad: &QuadConfig,
) -> Result<RmtCheck> {
    let emp = empirical_moments(cfg, tf, max_n)?;
    let engine = MomentEngine::new(tf, max_n, quad)?;
    let z = |e: f64, se: f64, p: f64| if se > 0.0 { (e - p) / se } else { f64::INFINITY };
    let mu = engine.mean_so_even();
    let mut comparisons = vec![Comparison {
        quantity: "mean".into(),
        empirical: emp.mean,
        se: emp.mean_se,
        predicted: mu,
        z: z(emp.mean, emp.mean_se, mu),
    }];
    for m in &emp.central {
        let spec = MomentSpec::new(m.order).with_a(a.unwrap_or(m.order).min(m.order));
        let p = engine.rhs_limit(&spec)?;
        comparisons.push(Comparison {
            quantity: format!("m{}", m.order),
            empirical: m.value,
            se: m.se,
            predicted: p,
            z: z(m.value, m.se, p),
        });
    }
    Ok(RmtCheck { settings: *cfg, a: a.unwrap_or(max_n), empirical: emp, comparisons })
}
