//! Headline bounds: the smallest interval `(-ω, ω)` forced to contain a zero,
//! and the percentage bounds `P_{r,ρ}` on forms with many zeros near the
//! central point.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{ensure_admissible, Kernel};
use crate::moments::{MomentEngine, MomentSpec, SupportRegime};
use crate::quad::{convolve_grid, integrate_1d, GridFunction, QuadConfig, Rule};
use crate::testfun::{make_naive, make_omega, TestFunctionPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    OmegaMin,
    Percent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    RootSolve,
    Formula,
}

/// Inputs echoed into every report. Unused fields are omitted from JSON.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<u32>,
    pub sigma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_function: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    /// `None` when the bound does not apply (printed as N/A).
    pub value: Option<f64>,
    pub inputs: BoundInputs,
    pub applicable: bool,
    pub quad_error: f64,
    pub provenance: Provenance,
    pub support: SupportRegime,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Which `h″` enters the double integral of the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SecondDerivative {
    /// The classical `h″` on the open support.
    Pointwise,
    /// Adds the point masses of `h″` at `±1` coming from `h′(±1) ≠ 0`.
    Distributional,
}

struct ClosedFormParts {
    numerator: f64,
    denominator: f64,
}

fn closed_form_parts(k: &Kernel, sigma: f64, cfg: &QuadConfig, which: SecondDerivative) -> Result<ClosedFormParts> {
    let gl = cfg.with_rule(Rule::GaussLegendre);
    let hh = integrate_1d(|u| k.eval(u).powi(2), 0.0, 1.0, &gl)?.value;
    let hhdd = integrate_1d(|u| k.eval(u) * k.eval_d2(u), 0.0, 1.0, &gl)?.value;

    let n = cfg.odd_points();
    let h = GridFunction::from_fn(-1.0, 1.0, n, |u| k.eval(u))?;
    let hdd = GridFunction::from_fn(-1.0, 1.0, n, |u| k.eval_d2_closed(u))?;
    let top = 2.0 / sigma;
    let conv_h = convolve_grid(&h, &h)?.integral_between(0.0, top);
    let mut conv_hdd = convolve_grid(&h, &hdd)?.integral_between(0.0, top);
    if which == SecondDerivative::Distributional {
        let jump = k.derivative_jump();
        let shifted = integrate_1d(|v| k.eval(v - 1.0) + k.eval(v + 1.0), 0.0, top, &gl)?.value;
        conv_hdd += jump * shifted;
    }
    Ok(ClosedFormParts {
        numerator: sigma * hh + 0.25 * sigma * sigma * conv_h,
        denominator: hhdd / sigma + 0.25 * conv_hdd,
    })
}

fn closed_form_value(k: &Kernel, sigma: f64, cfg: &QuadConfig, which: SecondDerivative) -> Result<f64> {
    let p = closed_form_parts(k, sigma, cfg, which)?;
    let ratio = -p.numerator / p.denominator;
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(Error::Numerical(format!(
            "closed form ratio is {ratio} (numerator {}, denominator {}); the kernel is probably not admissible",
            p.numerator, p.denominator
        )));
    }
    Ok(ratio.powf(-0.5) / std::f64::consts::PI)
}

/// `ω_min(σ, h)` from the explicit one-level formula, with the pointwise `h″`.
pub fn omega_min_closed_form(k: &Kernel, sigma: f64, cfg: &QuadConfig) -> Result<BoundReport> {
    omega_min_closed_form_with(k, sigma, cfg, SecondDerivative::Pointwise)
}

/// The closed form with a chosen treatment of `h″` at the support endpoints.
pub fn omega_min_closed_form_with(
    k: &Kernel,
    sigma: f64,
    cfg: &QuadConfig,
    which: SecondDerivative,
) -> Result<BoundReport> {
    ensure_admissible(k)?;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("sigma must be positive (got {sigma})")));
    }
    cfg.validate()?;
    let fine = closed_form_value(k, sigma, cfg, which)?;
    let coarse = closed_form_value(k, sigma, &cfg.with_points(cfg.odd_points().div_ceil(2)), which)?;
    let note = match which {
        SecondDerivative::Pointwise => None,
        SecondDerivative::Distributional => Some("h″ includes the endpoint point masses".to_string()),
    };
    Ok(BoundReport {
        kind: BoundKind::OmegaMin,
        value: Some(fine),
        inputs: BoundInputs {
            n: Some(1),
            a: Some(1),
            sigma,
            kernel: Some(k.name().to_string()),
            ..Default::default()
        },
        applicable: true,
        quad_error: (fine - coarse).abs() / 3.0,
        provenance: Provenance::ClosedForm,
        support: SupportRegime::of(sigma),
        note,
    })
}

/// `G(ω) = S(n, a; φ_ω) + μ(φ_ω)^n`; a zero is forced in `(-ω, ω)` once `G > 0`.
pub fn omega_objective(spec: &MomentSpec, k: &Kernel, omega: f64, cfg: &QuadConfig) -> Result<f64> {
    let tf = make_omega(k, spec.sigma, spec.n, omega, cfg)?;
    let e = MomentEngine::new(&tf, spec.n, cfg)?;
    Ok(e.big_s(spec.n, spec.a)? + e.mean_so_even().powi(spec.n as i32))
}

pub const DEFAULT_BRACKET: (f64, f64) = (0.05, 5.0);
const SCAN_POINTS: usize = 64;
const SOLVE_TOL: f64 = 1e-3;

/// Smallest `ω` in `bracket` with `G(ω) > 0`, by an ascending log-spaced
/// scan followed by bisection of the first sign change.
pub fn omega_min_solver(spec: &MomentSpec, k: &Kernel, cfg: &QuadConfig, bracket: (f64, f64)) -> Result<BoundReport> {
    spec.validate()?;
    if spec.n.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "omega-min needs an odd level (got n = {}); even centered moments carry the positive Gaussian term, which is why only odd levels are used",
            spec.n
        )));
    }
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::invalid(format!("bracket must satisfy 0 < lo < hi (got {lo}, {hi})")));
    }
    ensure_admissible(k)?;
    let g = |w: f64| omega_objective(spec, k, w, cfg);

    let ratio = (hi / lo).ln() / (SCAN_POINTS - 1) as f64;
    let nodes: Vec<f64> = (0..SCAN_POINTS).map(|i| lo * (ratio * i as f64).exp()).collect();
    let mut below = None;
    let mut above = None;
    for &w in &nodes {
        if g(w)? > 0.0 {
            above = Some(w);
            break;
        }
        below = Some(w);
    }
    let Some(mut upper) = above else {
        return Err(Error::NoBound(format!(
            "G(ω) = S + μⁿ stays ≤ 0 on [{lo}, {hi}] for n = {}, a = {}",
            spec.n, spec.a
        )));
    };
    let note;
    let mut width = 0.0;
    if let Some(mut lower) = below {
        while upper - lower > SOLVE_TOL {
            let mid = 0.5 * (lower + upper);
            if g(mid)? > 0.0 {
                upper = mid;
            } else {
                lower = mid;
            }
        }
        width = upper - lower;
        note = None;
    } else {
        note = Some("G > 0 already at the lower end of the bracket".to_string());
    }
    Ok(BoundReport {
        kind: BoundKind::OmegaMin,
        value: Some(upper),
        inputs: BoundInputs {
            n: Some(spec.n),
            a: Some(spec.a),
            sigma: spec.sigma,
            kernel: Some(k.name().to_string()),
            ..Default::default()
        },
        applicable: true,
        quad_error: width,
        provenance: Provenance::RootSolve,
        support: spec.regime(),
        note,
    })
}

fn check_percent_args(spec: &MomentSpec, r: u32, rho: f64) -> Result<()> {
    spec.validate()?;
    if spec.n % 2 == 1 {
        return Err(Error::invalid(format!(
            "percent bounds need an even level (got n = {}): the argument works with an even moment",
            spec.n
        )));
    }
    if r == 0 || r % 2 == 1 {
        return Err(Error::invalid(format!(
            "r must be a positive even number (got {r}): zeros of forms in the family come in symmetric pairs, so r is an even number"
        )));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::invalid(format!("rho must be positive (got {rho})")));
    }
    Ok(())
}

/// The naive pair used by the tables: support `2/n`.
pub fn table_test_function(n: u32) -> Result<TestFunctionPair> {
    make_naive(2.0 / n as f64)
}

/// Moment-side ingredients of a percentage bound, shared by a table column.
#[derive(Debug, Clone, Copy)]
pub struct PercentInputs {
    pub rhs: f64,
    pub rhs_error: f64,
    pub mean: f64,
}

/// Evaluate the limit and the mean for `tf`, with a Richardson error from a
/// half-resolution recomputation.
pub fn percent_inputs(spec: &MomentSpec, tf: &TestFunctionPair, cfg: &QuadConfig) -> Result<PercentInputs> {
    let fine = MomentEngine::new(tf, spec.n, cfg)?;
    let rhs = fine.rhs_limit(spec)?;
    let coarse_cfg = cfg.with_points(cfg.odd_points().div_ceil(2));
    let coarse = MomentEngine::new(tf, spec.n, &coarse_cfg)?.rhs_limit(spec)?;
    Ok(PercentInputs { rhs, rhs_error: (rhs - coarse).abs() / 3.0, mean: fine.mean_so_even() })
}

fn percent_report(spec: &MomentSpec, tf: &TestFunctionPair, inputs: &PercentInputs, r: u32, rho: f64) -> BoundReport {
    let margin = r as f64 * tf.phi(rho) - inputs.mean;
    let applicable = margin > 0.0;
    let denom = margin.powi(spec.n as i32);
    let (value, quad_error, note) = if applicable {
        (Some(inputs.rhs / denom), inputs.rhs_error / denom, None)
    } else {
        let note = format!(
            "N/A: r·φ(ρ) = {:.6} does not exceed the mean μ = {:.6}, so level {} cannot give a bound",
            r as f64 * tf.phi(rho),
            inputs.mean,
            spec.n
        );
        (None, 0.0, Some(note))
    };
    BoundReport {
        kind: BoundKind::Percent,
        value,
        inputs: BoundInputs {
            n: Some(spec.n),
            a: Some(spec.a),
            sigma: tf.hat_support_radius(),
            test_function: Some(format!("{:?}", tf.kind()).to_lowercase()),
            rho: Some(rho),
            r: Some(r),
            ..Default::default()
        },
        applicable,
        quad_error,
        provenance: Provenance::Formula,
        support: SupportRegime::of(spec.sigma),
        note,
    }
}

/// `P_{r,ρ} ≤ rhs / (rφ(ρ) − μ)^n` with the naive pair of support `2/n`.
pub fn percent_bound(spec: &MomentSpec, r: u32, rho: f64, cfg: &QuadConfig) -> Result<BoundReport> {
    check_percent_args(spec, r, rho)?;
    let tf = table_test_function(spec.n)?;
    percent_bound_with(spec, &tf, r, rho, cfg)
}

/// Percentage bound for a caller-supplied test function.
pub fn percent_bound_with(
    spec: &MomentSpec,
    tf: &TestFunctionPair,
    r: u32,
    rho: f64,
    cfg: &QuadConfig,
) -> Result<BoundReport> {
    check_percent_args(spec, r, rho)?;
    let inputs = percent_inputs(spec, tf, cfg)?;
    Ok(percent_report(spec, tf, &inputs, r, rho))
}

/// A grid of percentage bounds: one row per `r`, one column per level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PercentTable {
    pub rho: f64,
    pub levels: Vec<u32>,
    pub r_values: Vec<u32>,
    /// `cells[row][col]` for `r_values[row]` and `levels[col]`.
    pub cells: Vec<Vec<BoundReport>>,
}

/// Compute the table; the moment side is evaluated once per level.
pub fn percent_table(levels: &[u32], r_values: &[u32], rho: f64, a: Option<u32>, cfg: &QuadConfig) -> Result<PercentTable> {
    if levels.is_empty() || r_values.is_empty() {
        return Err(Error::invalid("a table needs at least one level and one r"));
    }
    let specs: Vec<MomentSpec> = levels
        .iter()
        .map(|&n| {
            let spec = MomentSpec::new(n).with_a(a.unwrap_or(n));
            for &r in r_values {
                check_percent_args(&spec, r, rho)?;
            }
            Ok(spec)
        })
        .collect::<Result<_>>()?;
    let columns: Vec<(TestFunctionPair, PercentInputs)> = specs
        .par_iter()
        .map(|spec| {
            let tf = table_test_function(spec.n)?;
            let inputs = percent_inputs(spec, &tf, cfg)?;
            Ok((tf, inputs))
        })
        .collect::<Result<_>>()?;
    let cells = r_values
        .iter()
        .map(|&r| {
            specs
                .iter()
                .zip(&columns)
                .map(|(spec, (tf, inputs))| percent_report(spec, tf, inputs, r, rho))
                .collect()
        })
        .collect();
    Ok(PercentTable { rho, levels: levels.to_vec(), r_values: r_values.to_vec(), cells })
}

/// Six digits after the point; scientific notation below `1e-3` and from `1e3`.
pub fn format_value(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e3).contains(&a) {
        format!("{v:.6e}")
    } else {
        format!("{v:.6}")
    }
}

pub fn format_cell(report: &BoundReport) -> String {
    match report.value {
        Some(v) if report.applicable => format_value(v),
        _ => "N/A".to_string(),
    }
}

impl PercentTable {
    pub fn column(&self, level: u32) -> Option<usize> {
        self.levels.iter().position(|&n| n == level)
    }

    pub fn cell(&self, r: u32, level: u32) -> Option<&BoundReport> {
        let row = self.r_values.iter().position(|&x| x == r)?;
        Some(&self.cells[row][self.column(level)?])
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["r".to_string()];
        header.extend(self.levels.iter().map(|n| format!("level{n}")));
        w.write_record(&header)?;
        for (r, row) in self.r_values.iter().zip(&self.cells) {
            let mut rec = vec![r.to_string()];
            rec.extend(row.iter().map(format_cell));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// All reports in row-major order.
    pub fn reports(&self) -> Vec<&BoundReport> {
        self.cells.iter().flatten().collect()
    }

    /// Applicable `(r, percent)` points of one level's curve.
    pub fn curve(&self, level: u32) -> Vec<(u32, f64)> {
        let Some(col) = self.column(level) else { return Vec::new() };
        self.r_values
            .iter()
            .zip(&self.cells)
            .filter_map(|(&r, row)| row[col].value.filter(|_| row[col].applicable).map(|v| (r, v)))
            .collect()
    }

    /// Write one two-column `r,percent` file per level into `dir`.
    pub fn write_figure_data(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for &n in &self.levels {
            let path = dir.join(format!("level{n}.csv"));
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["r", "percent"])?;
            for (r, v) in self.curve(n) {
                w.write_record([r.to_string(), format_value(v)])?;
            }
            w.flush()?;
            paths.push(path);
        }
        Ok(paths)
    }
}

/// Even values `lo, lo + 2, …, hi`.
pub fn even_range(lo: u32, hi: u32) -> Vec<u32> {
    let start = if lo.is_multiple_of(2) { lo } else { lo + 1 };
    (start.max(2)..=hi).step_by(2).collect()
}
