//! Seed functions `h` for the ω-construction.
//!
//! A kernel is even, supported in `[-1, 1]`, equal to 1 at the origin and 0 at
//! the endpoints. First and second derivatives are supplied in closed form so
//! that downstream convolutions do not stack a numerical-differentiation error
//! on top of the quadrature error.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

type RealMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// An admissible (or candidate) seed function together with its derivatives.
///
/// The stored closures describe `h` on the closed support `[-1, 1]`; the
/// public evaluators apply the support cut-off. `eval_d2` returns 0 at the
/// endpoints `u = ±1`, the outside value.
#[derive(Clone)]
pub struct Kernel {
    name: String,
    h: RealMap,
    d1: RealMap,
    d2: RealMap,
    transform: Option<RealMap>,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("name", &self.name)
            .field("analytic_transform", &self.transform.is_some())
            .finish()
    }
}

impl Kernel {
    /// Build a kernel from its restriction to `[-1, 1]`.
    pub fn custom<H, D1, D2>(name: impl Into<String>, h: H, d1: D1, d2: D2) -> Self
    where
        H: Fn(f64) -> f64 + Send + Sync + 'static,
        D1: Fn(f64) -> f64 + Send + Sync + 'static,
        D2: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Kernel {
            name: name.into(),
            h: Arc::new(h),
            d1: Arc::new(d1),
            d2: Arc::new(d2),
            transform: None,
        }
    }

    /// Attach a closed-form Fourier transform `ĥ(ξ) = ∫ h(u) e^{-2πiuξ} du`.
    pub fn with_transform<F>(mut self, t: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.transform = Some(Arc::new(t));
        self
    }

    /// Look a shipped kernel up by its CLI name.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "cos" | "cosine" => Ok(make_cosine_kernel()),
            "quadratic" | "quad" => Ok(make_quadratic_kernel()),
            other => Err(Error::invalid(format!(
                "unknown kernel `{other}` (expected `cos` or `quadratic`)"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn support_radius(&self) -> f64 {
        1.0
    }

    pub fn eval(&self, u: f64) -> f64 {
        if u.abs() > 1.0 {
            0.0
        } else {
            (self.h)(u)
        }
    }

    /// `h'(u)`; on the closed support this is the one-sided limit from inside.
    pub fn eval_d1(&self, u: f64) -> f64 {
        if u.abs() > 1.0 {
            0.0
        } else {
            (self.d1)(u)
        }
    }

    pub fn eval_d2(&self, u: f64) -> f64 {
        if u.abs() >= 1.0 {
            0.0
        } else {
            (self.d2)(u)
        }
    }

    /// `h''` continued to the closed support by its limit from inside.
    pub(crate) fn eval_d2_closed(&self, u: f64) -> f64 {
        if u.abs() > 1.0 {
            0.0
        } else {
            let inside = u.clamp(-1.0 + f64::EPSILON, 1.0 - f64::EPSILON);
            (self.d2)(inside)
        }
    }

    /// Size of the jump of `h'` at `u = +1` (outside value minus inside limit).
    /// By evenness the jump at `u = -1` is the same.
    pub fn derivative_jump(&self) -> f64 {
        -(self.d1)(1.0)
    }

    pub fn has_analytic_transform(&self) -> bool {
        self.transform.is_some()
    }

    /// `ĥ(ξ)`, analytic when available, Gauss–Legendre otherwise.
    pub fn transform(&self, xi: f64) -> f64 {
        match &self.transform {
            Some(t) => t(xi),
            None => self.transform_by_quadrature(xi),
        }
    }

    /// `ĥ(ξ) = 2∫₀¹ h(u) cos(2πuξ) du` by composite Gauss–Legendre, with the
    /// panel count scaled to the number of oscillations on `[0, 1]`.
    pub fn transform_by_quadrature(&self, xi: f64) -> f64 {
        let panels = 8 + (4.0 * xi.abs()).ceil() as usize;
        let w = 2.0 * PI * xi;
        2.0 * crate::quad::gauss_legendre_composite(|u| (self.h)(u) * (w * u).cos(), 0.0, 1.0, panels)
    }
}

/// `h(u) = cos(πu/2)` on `[-1, 1]`.
pub fn make_cosine_kernel() -> Kernel {
    Kernel::custom(
        "cos",
        |u| (FRAC_PI_2 * u).cos(),
        |u| -FRAC_PI_2 * (FRAC_PI_2 * u).sin(),
        |u| -(FRAC_PI_2 * FRAC_PI_2) * (FRAC_PI_2 * u).cos(),
    )
    .with_transform(|xi| {
        let b = 2.0 * PI * xi;
        sinc_unnormalized(FRAC_PI_2 - b) + sinc_unnormalized(FRAC_PI_2 + b)
    })
}

/// `h(u) = 1 - u²` on `[-1, 1]`.
pub fn make_quadratic_kernel() -> Kernel {
    Kernel::custom("quadratic", |u| 1.0 - u * u, |u| -2.0 * u, |_| -2.0).with_transform(|xi| {
        let b = 2.0 * PI * xi;
        if b.abs() < 1e-2 {
            let b2 = b * b;
            4.0 / 3.0 - 2.0 * b2 / 15.0 + b2 * b2 / 210.0
        } else {
            4.0 * (b.sin() - b * b.cos()) / (b * b * b)
        }
    })
}

/// `sin(z)/z` with the removable singularity filled in.
pub(crate) fn sinc_unnormalized(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        1.0 - z * z / 6.0
    } else {
        z.sin() / z
    }
}

/// A failed admissibility condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    NotEven { u: f64, left: f64, right: f64 },
    NotMonotone { u: f64 },
    CentreValue { value: f64 },
    EndpointValue { value: f64 },
    OutsideSupport { u: f64, value: f64 },
    NonFinite { u: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotEven { u, left, right } => {
                write!(f, "h({u}) = {left} but h({}) = {right}", -u)
            }
            Violation::NotMonotone { u } => write!(f, "h increases near u = {u}"),
            Violation::CentreValue { value } => write!(f, "h(0) ≠ 1 (got {value})"),
            Violation::EndpointValue { value } => write!(f, "h(1) ≠ 0 (got {value})"),
            Violation::OutsideSupport { u, value } => {
                write!(f, "h({u}) = {value} outside [-1, 1]")
            }
            Violation::NonFinite { u } => write!(f, "h is not finite at u = {u}"),
        }
    }
}

const ADMISSIBILITY_TOL: f64 = 1e-12;

/// Sample `h` on a symmetric grid over `[-2, 2]` and list every failed
/// admissibility condition. An empty list means admissible.
pub fn validate_kernel(k: &Kernel, grid_points: usize) -> Result<Vec<Violation>> {
    if grid_points < 3 {
        return Err(Error::invalid("validate_kernel needs at least 3 grid points"));
    }
    let mut out = Vec::new();
    let step = 1.0 / (grid_points - 1) as f64;

    let mut prev = f64::INFINITY;
    for i in 0..grid_points {
        let u = i as f64 * step;
        let right = k.eval(u);
        let left = k.eval(-u);
        if !right.is_finite() || !left.is_finite() {
            out.push(Violation::NonFinite { u });
            continue;
        }
        if (right - left).abs() > ADMISSIBILITY_TOL {
            out.push(Violation::NotEven { u, left: right, right: left });
        }
        if right > prev + ADMISSIBILITY_TOL {
            out.push(Violation::NotMonotone { u });
        }
        prev = right;
    }

    let centre = k.eval(0.0);
    if (centre - 1.0).abs() > ADMISSIBILITY_TOL {
        out.push(Violation::CentreValue { value: centre });
    }
    let end = k.eval(1.0);
    if end.abs() > ADMISSIBILITY_TOL {
        out.push(Violation::EndpointValue { value: end });
    }

    // `eval` already masks |u| > 1, so this only fires if that contract breaks.
    for i in 1..grid_points {
        let u = 1.0 + i as f64 * step;
        for x in [u, -u] {
            let v = k.eval(x);
            if v != 0.0 {
                out.push(Violation::OutsideSupport { u: x, value: v });
            }
        }
    }
    Ok(out)
}

/// Reject kernels that fail [`validate_kernel`].
pub fn ensure_admissible(k: &Kernel) -> Result<()> {
    let violations = validate_kernel(k, 1001)?;
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::InadmissibleKernel { name: k.name().to_string(), violations })
    }
}
