//! Invariant suites runnable from the command line.

use std::f64::consts::PI;
use std::time::Instant;

use serde::Serialize;

use crate::bounds::percent_table;
use crate::error::Result;
use crate::kernels::{make_cosine_kernel, make_quadratic_kernel, validate_kernel, Kernel};
use crate::moments::naive_exact;
use crate::quad::{convolve_grid, gauss_legendre_composite, sinc_inner, GridFunction, QuadConfig};
use crate::rmt::{empirical_moments, AuditMode, RmtConfig};
use crate::testfun::{hat_integral, make_naive, make_omega, TestFunctionPair};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub mode: &'static str,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
    pub seconds: f64,
}

struct Settings {
    grid: usize,
    fourier_points: usize,
    rmt_samples: usize,
}

struct Suite {
    checks: Vec<CheckResult>,
}

impl Suite {
    fn record(&mut self, suite: &'static str, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(CheckResult { suite, name: name.into(), passed, detail: detail.into() });
    }

    fn record_result(&mut self, suite: &'static str, name: &str, r: Result<(bool, String)>) {
        match r {
            Ok((ok, detail)) => self.record(suite, name, ok, detail),
            Err(e) => self.record(suite, name, false, format!("error: {e}")),
        }
    }
}

/// Run every suite. `quick` uses fewer Fourier points and RMT samples.
pub fn run_selftest(quick: bool) -> SelftestReport {
    let start = Instant::now();
    let s = if quick {
        Settings { grid: 4001, fourier_points: 10, rmt_samples: 64 }
    } else {
        Settings { grid: 4001, fourier_points: 50, rmt_samples: 400 }
    };
    let mut suite = Suite { checks: Vec::new() };
    kernels_suite(&mut suite);
    testfun_suite(&mut suite, &s);
    convolution_suite(&mut suite);
    plancherel_suite(&mut suite, &s);
    determinism_suite(&mut suite, &s);
    let passed = suite.checks.iter().all(|c| c.passed);
    SelftestReport {
        mode: if quick { "quick" } else { "full" },
        passed,
        checks: suite.checks,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn kernels_suite(suite: &mut Suite) {
    for k in [make_cosine_kernel(), make_quadratic_kernel()] {
        match validate_kernel(&k, 1001) {
            Ok(v) => suite.record("kernels", format!("{} admissible", k.name()), v.is_empty(), format!("{} violations", v.len())),
            Err(e) => suite.record("kernels", format!("{} admissible", k.name()), false, e.to_string()),
        }
        let even = (0..=4000).all(|i| {
            let u = -2.0 + i as f64 * 1e-3;
            k.eval(u) == k.eval(-u)
        });
        suite.record("kernels", format!("{} even", k.name()), even, "exact on [-2, 2]");
        let (d1, d2) = derivative_errors(&k);
        suite.record(
            "kernels",
            format!("{} derivatives", k.name()),
            d1 < 1e-6 && d2 < 1e-4,
            format!("max |Δh′| = {d1:.2e}, max |Δh″| = {d2:.2e}"),
        );
    }
}

fn derivative_errors(k: &Kernel) -> (f64, f64) {
    let h = 1e-5;
    let (mut d1, mut d2) = (0.0f64, 0.0f64);
    for i in 0..=198 {
        let u = -0.99 + i as f64 * 0.01;
        let c1 = (k.eval(u + h) - k.eval(u - h)) / (2.0 * h);
        let c2 = (k.eval(u + h) - 2.0 * k.eval(u) + k.eval(u - h)) / (h * h);
        d1 = d1.max((c1 - k.eval_d1(u)).abs());
        d2 = d2.max((c2 - k.eval_d2(u)).abs());
    }
    (d1, d2)
}

fn support_check(tf: &TestFunctionPair) -> f64 {
    let r = tf.hat_support_radius();
    (0..=1000).map(|i| tf.phi_hat(r + r * i as f64 / 1000.0).abs()).fold(0.0, f64::max)
}

/// `∫ φ(x) cos(2πxy) dx`, truncated where the envelope's tail is below `tol`.
fn naive_transform_numeric(sigma: f64, y: f64, tol: f64) -> f64 {
    let tf = make_naive(sigma).expect("positive sigma");
    let radius = 2.0 / ((PI * sigma).powi(2) * tol);
    let panels = (radius * 2.0 * (sigma + y.abs() + 1.0)).ceil() as usize;
    2.0 * gauss_legendre_composite(|x| tf.phi(x) * (2.0 * PI * x * y).cos(), 0.0, radius, panels)
}

fn testfun_suite(suite: &mut Suite, s: &Settings) {
    let cfg = QuadConfig::default().with_points(s.grid);
    let naive = make_naive(1.0).expect("valid");
    suite.record("testfun", "naive support", support_check(&naive) < 1e-10, "φ̂ = 0 on [σ, 2σ]");

    let ys: Vec<f64> = (0..s.fourier_points).map(|i| -0.98 + 1.96 * i as f64 / (s.fourier_points - 1) as f64).collect();
    let worst = {
        use rayon::prelude::*;
        ys.par_iter()
            .map(|&y| (naive_transform_numeric(1.0, y, 1e-6) - naive.phi_hat(y)).abs())
            .reduce(|| 0.0, f64::max)
    };
    suite.record("testfun", "naive Fourier pair", worst < 1e-6, format!("max error {worst:.2e} at {} points", ys.len()));

    for k in [make_cosine_kernel(), make_quadratic_kernel()] {
        let name = k.name().to_string();
        let omega = 0.5;
        let r = make_omega(&k, 2.0, 1, omega, &cfg).map(|tf| {
            let support = support_check(&tf);
            let mut sign_ok = true;
            for i in 0..2001 {
                let x = -5.0 * omega + 10.0 * omega * i as f64 / 2000.0;
                let v = tf.phi(x);
                sign_ok &= if x.abs() <= omega { v >= -1e-12 } else { v <= 1e-12 };
            }
            let integral = hat_integral(&tf, &cfg).unwrap_or(f64::NAN);
            (support, sign_ok, (integral - tf.phi(0.0)).abs())
        });
        match r {
            Ok((support, sign_ok, gap)) => {
                suite.record("testfun", format!("omega[{name}] support"), support < 1e-10, format!("{support:.1e}"));
                suite.record("testfun", format!("omega[{name}] sign pattern"), sign_ok, "2001 points on [-5ω, 5ω]");
                suite.record("testfun", format!("omega[{name}] ∫φ̂ = φ(0)"), gap < 1e-6, format!("gap {gap:.2e}"));
            }
            Err(e) => suite.record("testfun", format!("omega[{name}]"), false, e.to_string()),
        }
    }
}

fn convolution_suite(suite: &mut Suite) {
    let r = GridFunction::from_fn(-1.0, 1.0, 401, |_| 1.0).and_then(|b| convolve_grid(&b, &b)).map(|t| {
        let doubled = (t.lo() + 2.0).abs() < 1e-12 && (t.hi() - 2.0).abs() < 1e-12;
        let peak = (t.eval(0.0) - 2.0).abs() < 1e-12;
        let ends = t.values()[0] == 0.0 && *t.values().last().expect("non-empty") == 0.0;
        (doubled && peak && ends, format!("support [{}, {}], peak {}", t.lo(), t.hi(), t.eval(0.0)))
    });
    suite.record_result("quad", "convolution support doubling", r);
}

fn plancherel_suite(suite: &mut Suite, s: &Settings) {
    let cfg = QuadConfig::default().with_points(s.grid.max(1001)).with_tolerance(1e-8);
    let r = make_naive(2.0).and_then(|tf| {
        let x_side = sinc_inner(|x| tf.phi(x), 1, 0.0, tf.tail_bound(), &cfg)?.value;
        let fourier = naive_exact::window(2.0, 1, 1.0);
        let gap = (x_side - fourier).abs();
        Ok((gap < 1e-5 && (fourier - 0.375).abs() < 1e-12, format!("x-side {x_side:.9}, ∫₀¹φ̂ = {fourier}")))
    });
    suite.record_result("quad", "Plancherel consistency", r);
}

fn determinism_suite(suite: &mut Suite, s: &Settings) {
    let run = |threads: usize| -> Result<(String, Vec<u64>)> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| crate::Error::Numerical(e.to_string()))?;
        pool.install(|| {
            let cfg = QuadConfig::default().with_points(s.grid);
            let table = percent_table(&[2, 4], &[4, 8], 0.4, None, &cfg)?.to_csv_string()?;
            let rmt = RmtConfig { half_size: 8, samples: s.rmt_samples, seed: 3, audit: AuditMode::Every, ..Default::default() };
            let m = empirical_moments(&rmt, &make_naive(1.0)?, 3)?;
            let mut bits = vec![m.mean.to_bits(), m.mean_se.to_bits()];
            bits.extend(m.central.iter().flat_map(|c| [c.value.to_bits(), c.se.to_bits()]));
            Ok((table, bits))
        })
    };
    let r = run(1).and_then(|a| {
        let b = run(4)?;
        Ok((a == b, "1 vs 4 worker threads".to_string()))
    });
    suite.record_result("determinism", "thread-count invariance", r);
}
