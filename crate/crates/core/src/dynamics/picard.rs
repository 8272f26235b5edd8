use serde::Serialize;

use super::integrate::{phi1, phi2, prepare_initial, ModalRemainder, Trajectory};
use super::semigroup::Semigroup;
use crate::basis::{HermiteBasis, InvariantProjector, StateVector};
use crate::error::{Error, Result};
use crate::operators::{LMatrix, RTensor};

/// Below this successive distance the ratio is dominated by rounding and is
/// not reported as a contraction factor.
const FACTOR_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct PicardOptions {
    /// Window length; windows are chained until `t_end`.
    pub window: f64,
    /// Grid points per unit time inside each window.
    pub steps_per_unit: usize,
    /// Successive sup distance at which a window is accepted.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            window: 1.0,
            steps_per_unit: 128,
            tol: 1e-13,
            max_iter: 60,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PicardWindow {
    pub t_start: f64,
    pub t_end: f64,
    pub iterations: usize,
    /// `sup_t ‖x^{k}(t) − x^{k−1}(t)‖*` for each iteration.
    pub distances: Vec<f64>,
    /// Ratios of successive distances.
    pub contraction_factors: Vec<f64>,
    /// Largest `sup_t ‖x^k(t)‖*` over all iterates.
    pub max_iterate_norm: f64,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct PicardResult {
    pub trajectory: Trajectory,
    pub windows: Vec<PicardWindow>,
    /// Radius `|Λ_b|/8` of the ball every iterate must stay in.
    pub radius: f64,
}

impl PicardResult {
    pub fn max_contraction_factor(&self) -> f64 {
        self.windows
            .iter()
            .flat_map(|w| w.contraction_factors.iter())
            .fold(0.0f64, |m, f| m.max(*f))
    }

    pub fn converged(&self) -> bool {
        self.windows.iter().all(|w| w.converged)
    }

    pub fn max_iterate_norm(&self) -> f64 {
        self.windows.iter().fold(0.0f64, |m, w| m.max(w.max_iterate_norm))
    }
}

fn sup_norm(x: &[Vec<f64>]) -> f64 {
    x.iter().map(|y| y.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max)
}

/// Fixed-point iteration of the Duhamel map
/// `Z[x](t) = e^{(t−t₀)L} h(t₀) + ∫_{t₀}^t e^{(t−s)L} R[x(s), x(s)] ds`
/// window by window, starting each window from the linear evolution.
///
/// The time integral uses the exponential trapezoid rule on a uniform grid,
/// exact for piecewise linear `R[x, x]`.
pub fn picard_solve(
    h0: &StateVector,
    l: &LMatrix,
    r: &RTensor,
    basis: &HermiteBasis,
    gap: f64,
    t_end: f64,
    opts: &PicardOptions,
) -> Result<PicardResult> {
    let delta = gap.abs() / 16.0;
    let radius = gap.abs() / 8.0;
    if h0.norm() > delta * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "initial norm {} exceeds the neighbourhood radius {delta}",
            h0.norm()
        )));
    }
    if !(opts.window > 0.0) || opts.steps_per_unit == 0 || !(t_end > 0.0) {
        return Err(Error::InvalidArgument("window, steps and horizon must be positive".into()));
    }
    let projector = InvariantProjector::new(basis);
    let h0 = prepare_initial(h0, &projector)?;
    let semigroup = Semigroup::new(l);
    let rem = ModalRemainder { semigroup: &semigroup, r };
    let lambdas = semigroup.eigenvalues().to_vec();
    let m = lambdas.len();

    let mut times = vec![0.0];
    let mut modes = vec![semigroup.to_modes(h0.coeffs())];
    let mut windows = Vec::new();
    let mut t0 = 0.0;
    while t0 < t_end - 1e-12 {
        let len = opts.window.min(t_end - t0);
        let steps = ((len * opts.steps_per_unit as f64).round() as usize).max(1);
        let tau = len / steps as f64;
        let e: Vec<f64> = lambdas.iter().map(|l| (l * tau).exp()).collect();
        let c0: Vec<f64> = lambdas.iter().map(|l| tau * (phi1(l * tau) - phi2(l * tau))).collect();
        let c1: Vec<f64> = lambdas.iter().map(|l| tau * phi2(l * tau)).collect();
        let start = modes.last().unwrap().clone();

        // x⁰: linear evolution
        let mut x: Vec<Vec<f64>> = (0..=steps)
            .map(|j| {
                let t = j as f64 * tau;
                start.iter().zip(&lambdas).map(|(y, l)| y * (l * t).exp()).collect()
            })
            .collect();
        let mut win = PicardWindow {
            t_start: t0,
            t_end: t0 + len,
            iterations: 0,
            distances: Vec::new(),
            contraction_factors: Vec::new(),
            max_iterate_norm: sup_norm(&x),
            converged: false,
        };
        if win.max_iterate_norm > radius {
            return Err(Error::PicardStability {
                norm: win.max_iterate_norm,
                radius,
            });
        }
        for _ in 0..opts.max_iter {
            let rs: Vec<Vec<f64>> = x.iter().map(|y| rem.eval(y).0).collect();
            let mut next = Vec::with_capacity(steps + 1);
            next.push(start.clone());
            for j in 1..=steps {
                let prev: &Vec<f64> = &next[j - 1];
                let y: Vec<f64> = (0..m)
                    .map(|k| e[k] * prev[k] + c0[k] * rs[j - 1][k] + c1[k] * rs[j][k])
                    .collect();
                next.push(y);
            }
            let dist = x
                .iter()
                .zip(&next)
                .map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt())
                .fold(0.0, f64::max);
            if let Some(&last) = win.distances.last() {
                if last > FACTOR_FLOOR {
                    win.contraction_factors.push(dist / last);
                }
            }
            win.distances.push(dist);
            win.iterations += 1;
            let norm = sup_norm(&next);
            win.max_iterate_norm = win.max_iterate_norm.max(norm);
            if norm > radius {
                return Err(Error::PicardStability { norm, radius });
            }
            x = next;
            if dist < opts.tol {
                win.converged = true;
                break;
            }
        }
        for (j, y) in x.into_iter().enumerate().skip(1) {
            times.push(t0 + j as f64 * tau);
            modes.push(y);
        }
        windows.push(win);
        t0 += len;
    }

    let states: Vec<StateVector> = modes
        .iter()
        .map(|y| StateVector::from_coeffs(basis, semigroup.from_modes(y)))
        .collect::<Result<_>>()?;
    let invariant_residual = states.iter().map(|s| projector.residual(s)).collect();
    let theta = states.iter().map(|s| s.norm_sq()).collect();
    let step = 1.0 / opts.steps_per_unit as f64;
    Ok(PicardResult {
        trajectory: Trajectory {
            times,
            states,
            theta,
            invariant_residual,
            max_projection_residual: 0.0,
            step,
            halvings: 0,
            refinement_change: 0.0,
        },
        windows,
        radius,
    })
}
