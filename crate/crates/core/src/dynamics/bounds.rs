use serde::Serialize;

use crate::error::{Error, Result};

/// `C* = (1/‖h₀‖* + 2/Λ_b)^{-2}`.
pub fn c_star(norm0: f64, gap: f64) -> f64 {
    (1.0 / norm0 + 2.0 / gap).powi(-2)
}

/// Exact solution of `θ' = Λ θ + 2 θ^{3/2}`, `θ(0) = θ₀`:
/// `y(t)^{-2}` with `y(t) = (θ₀^{-1/2} + 2/Λ) e^{-Λt/2} − 2/Λ`.
pub fn riccati_envelope(theta0: f64, gap: f64, t: f64) -> Result<f64> {
    if !(gap < 0.0) {
        return Err(Error::InvalidArgument(format!("gap must be negative, got {gap}")));
    }
    if theta0 < 0.0 || t < 0.0 {
        return Err(Error::InvalidArgument("negative theta or time".into()));
    }
    if 2.0 * theta0.sqrt() >= gap.abs() {
        return Err(Error::OutsideBasin(2.0 * theta0.sqrt()));
    }
    if theta0 == 0.0 {
        return Ok(0.0);
    }
    let y = (theta0.powf(-0.5) + 2.0 / gap) * (-gap * t / 2.0).exp() - 2.0 / gap;
    Ok(y.powi(-2))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RateFit {
    pub rate: f64,
    pub intercept: f64,
    pub points: usize,
    /// Points were dropped because θ underflowed.
    pub truncated: bool,
}

/// Least-squares slope of `log θ` against `t` over `t >= t_min`.
pub fn decay_rate_fit(times: &[f64], theta: &[f64], t_min: f64) -> Result<RateFit> {
    let mut truncated = false;
    let mut pts = Vec::new();
    for (&t, &th) in times.iter().zip(theta) {
        if t < t_min {
            continue;
        }
        if th > 1e-280 && th.is_finite() {
            pts.push((t, th.ln()));
        } else {
            truncated = true;
        }
    }
    if pts.len() < 10 {
        return Err(Error::InvalidArgument(format!(
            "decay fit needs at least 10 points with theta > 0, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let rate = sxy / sxx;
    Ok(RateFit {
        rate,
        intercept: my - rate * mt,
        points: pts.len(),
        truncated,
    })
}
