//! Maxwellian collision kernels b on (-1, 1).
//!
//! A kernel is carried through assembly by its moment table
//! `mu_m = (1/2) ∫_{-1}^{1} b(t) t^m dt`; pointwise evaluation is only used for
//! validation and for the Monte Carlo oracle.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quadrature::adaptive;

/// Absolute tolerance used for moment quadrature.
pub const MOMENT_TOL: f64 = 1e-13;
/// Tolerance for the structural checks on a validated kernel.
pub const CHECK_TOL: f64 = 1e-10;
/// Largest basis degree supported by default moment tables.
pub const DEFAULT_DEGREE_CAP: usize = 12;

pub type KernelFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone, Debug, Serialize)]
pub struct MomentTable {
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
}

impl MomentTable {
    pub fn m_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, m: usize) -> f64 {
        self.values[m]
    }

    /// CSV with columns `m,mu_m,est_error`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,mu_m,est_error\n");
        for (m, (v, e)) in self.values.iter().zip(&self.errors).enumerate() {
            out.push_str(&format!("{m},{},{}\n", crate::io::fmt17(*v), crate::io::fmt17(*e)));
        }
        out
    }
}

/// Computes `mu_m` for `m = 0..=m_max` by adaptive Gauss–Legendre split at 0.
pub fn kernel_moments(b: &dyn Fn(f64) -> f64, m_max: usize, tol: f64) -> Result<MomentTable> {
    let mut values = Vec::with_capacity(m_max + 1);
    let mut errors = Vec::with_capacity(m_max + 1);
    for m in 0..=m_max {
        let f = |t: f64| b(t) * t.powi(m as i32);
        let neg = adaptive(&f, -1.0, 0.0, tol);
        let pos = adaptive(&f, 0.0, 1.0, tol);
        let value = 0.5 * (neg.value + pos.value);
        let err = 0.5 * (neg.error + pos.error);
        if !neg.converged || !pos.converged || !value.is_finite() || err > tol {
            return Err(Error::NotIntegrable { moment: m });
        }
        values.push(value);
        errors.push(err);
    }
    Ok(MomentTable { values, errors })
}

/// Pointwise residual of the symmetry condition at `x`: the larger of
/// `|b(x) - b(sqrt(1-x^2)) |x| / sqrt(1-x^2)|` and `|b(x) - b(-x)|`.
pub fn symmetry_residual_at(b: &dyn Fn(f64) -> f64, x: f64) -> f64 {
    let c = (1.0 - x * x).sqrt();
    let swap = (b(x) - b(c) * x.abs() / c).abs();
    let even = (b(x) - b(-x)).abs();
    swap.max(even)
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelReport {
    pub symmetry_residual: f64,
    pub symmetry_worst_x: f64,
    pub cutoff_residual: f64,
    pub nonnegative: bool,
    pub pass: bool,
}

/// Number of sample points per unit length of the validation grid.
const CHECK_SAMPLES: usize = 2000;

/// Checks symmetry, evenness, nonnegativity and the Grad cutoff normalization.
pub fn check_kernel(b: &dyn Fn(f64) -> f64, tol: f64) -> Result<KernelReport> {
    let mut worst = 0.0f64;
    let mut worst_x = 0.0;
    let mut nonnegative = true;
    // midpoints of a uniform grid on (0, 1), mirrored; never hits 0 or ±1
    for k in 0..CHECK_SAMPLES {
        let x0 = (k as f64 + 0.5) / CHECK_SAMPLES as f64;
        for x in [x0, -x0] {
            let v = b(x);
            if !v.is_finite() {
                return Err(Error::KernelUndefined { x });
            }
            if v < 0.0 {
                nonnegative = false;
            }
            let r = symmetry_residual_at(b, x);
            if !r.is_finite() {
                return Err(Error::KernelUndefined { x });
            }
            if r > worst {
                worst = r;
                worst_x = x;
            }
        }
    }
    let integral = adaptive(&|t: f64| b(t), 0.0, 1.0, MOMENT_TOL);
    let cutoff_residual = (integral.value - 1.0).abs();
    let pass = nonnegative && worst <= tol && cutoff_residual <= tol && integral.converged;
    Ok(KernelReport {
        symmetry_residual: worst,
        symmetry_worst_x: worst_x,
        cutoff_residual,
        nonnegative,
        pass,
    })
}

/// A collision kernel with its moment table.
#[derive(Clone)]
pub struct CollisionKernel {
    name: String,
    eval: KernelFn,
    moments: MomentTable,
}

impl fmt::Debug for CollisionKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CollisionKernel")
            .field("name", &self.name)
            .field("m_max", &self.moments.m_max())
            .finish()
    }
}

impl CollisionKernel {
    /// Wraps an arbitrary function without structural validation.
    pub fn from_fn(name: impl Into<String>, eval: KernelFn, m_max: usize) -> Result<Self> {
        let moments = kernel_moments(eval.as_ref(), m_max, MOMENT_TOL)?;
        Ok(Self {
            name: name.into(),
            eval,
            moments,
        })
    }

    /// Builds the kernel `b(x) = g(x^2) |x|` from a symmetric profile `g`.
    ///
    /// Requires `g(s) = g(1 - s)` and `∫_0^1 g = 2`.
    pub fn family(name: impl Into<String>, g: Arc<dyn Fn(f64) -> f64 + Send + Sync>, m_max: usize) -> Result<Self> {
        for k in 0..=1000 {
            let s = k as f64 / 1000.0;
            let (a, b) = (g(s), g(1.0 - s));
            if !a.is_finite() || !b.is_finite() {
                // endpoints may be singular; interior must be defined
                if k != 0 && k != 1000 {
                    return Err(Error::FamilyConstraint(format!("g undefined at s = {s}")));
                }
                continue;
            }
            if (a - b).abs() > 1e-12 * (1.0 + a.abs()) {
                return Err(Error::FamilyConstraint(format!(
                    "g(s) != g(1-s) at s = {s}: {a} vs {b}"
                )));
            }
            if a < 0.0 {
                return Err(Error::FamilyConstraint(format!("g negative at s = {s}")));
            }
        }
        let total = adaptive(&|s: f64| g(s), 0.0, 1.0, MOMENT_TOL);
        if !total.converged || (total.value - 2.0).abs() > CHECK_TOL {
            return Err(Error::FamilyConstraint(format!(
                "integral of g over [0,1] is {} (must be 2)",
                total.value
            )));
        }
        let eval: KernelFn = Arc::new(move |x: f64| g(x * x) * x.abs());
        Self::from_fn(name, eval, m_max)
    }

    /// Resolves a kernel spec:
    ///
    /// * `linear`: `b(x) = 2|x|`
    /// * `quintic`: `b(x) = 12 x^2 (1 - x^2) |x|`
    /// * `family:<g(s)>`: `b(x) = g(x^2)|x|`, validated
    /// * `expr:<b(x)>`: raw kernel, not validated (for checking)
    pub fn builtin(spec: &str) -> Result<Self> {
        Self::builtin_with_moments(spec, 2 * DEFAULT_DEGREE_CAP + 2)
    }

    pub fn builtin_with_moments(spec: &str, m_max: usize) -> Result<Self> {
        let spec = spec.trim();
        match spec {
            "linear" => Self::family("linear", Arc::new(|_s: f64| 2.0), m_max),
            "quintic" => Self::family("quintic", Arc::new(|s: f64| 12.0 * s * (1.0 - s)), m_max),
            _ => {
                if let Some(src) = spec.strip_prefix("family:") {
                    let e = Expr::parse(src, "s")?;
                    Self::family(spec, Arc::new(move |s| e.eval(s)), m_max)
                } else if let Some(src) = spec.strip_prefix("expr:") {
                    let e = Expr::parse(src, "x")?;
                    Self::from_fn(spec, Arc::new(move |x| e.eval(x)), m_max)
                } else {
                    Err(Error::UnknownKernel(spec.to_string()))
                }
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn function(&self) -> &KernelFn {
        &self.eval
    }

    pub fn moments(&self) -> &MomentTable {
        &self.moments
    }

    pub fn mu(&self, m: usize) -> f64 {
        self.moments.values[m]
    }

    pub fn check(&self, tol: f64) -> Result<KernelReport> {
        check_kernel(self.eval.as_ref(), tol)
    }

    /// `Λ_b = -2 (mu_2 - mu_4)`.
    pub fn spectral_gap(&self) -> Result<f64> {
        let gap = -2.0 * (self.mu(2) - self.mu(4));
        if gap.abs() < 1e-14 {
            return Err(Error::DegenerateKernel);
        }
        Ok(gap)
    }

    /// Neighborhood radius `|Λ_b| / 16`.
    pub fn theorem_delta(&self) -> Result<f64> {
        Ok(self.spectral_gap()?.abs() / 16.0)
    }
}
