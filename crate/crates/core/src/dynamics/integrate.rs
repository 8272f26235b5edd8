use serde::Serialize;

use super::semigroup::{invariant_residual_raw, Semigroup};
use crate::basis::{HermiteBasis, InvariantProjector, StateVector};
use crate::error::{Error, Result};
use crate::operators::{LMatrix, RTensor};

/// States are projected onto `H₀` silently only below this residual.
const PROJECT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct IntegrateOptions {
    /// Keep the quadratic term; `false` gives the pure semigroup evolution.
    pub nonlinear: bool,
    /// Initial step, halved until θ on the grid settles.
    pub dt0: f64,
    /// Sup over the grid of the θ change between successive halvings.
    pub tol: f64,
    pub max_halvings: usize,
    /// θ above this aborts the run.
    pub blowup: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            nonlinear: true,
            dt0: 0.1,
            tol: 1e-8,
            max_halvings: 12,
            blowup: 1e6,
        }
    }
}

/// States on an output grid with refinement evidence.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    /// `θ(t) = ‖h(t)‖*²`, from coefficients.
    pub theta: Vec<f64>,
    /// Invariant components of each stored state.
    pub invariant_residual: Vec<f64>,
    /// Largest invariant component of the quadratic term before it is
    /// dropped by the `H₀` projection, over all steps.
    pub max_projection_residual: f64,
    /// Final internal step bound.
    pub step: f64,
    pub halvings: usize,
    /// Sup change of θ at the last refinement.
    pub refinement_change: f64,
}

impl Trajectory {
    pub fn norms(&self) -> Vec<f64> {
        self.theta.iter().map(|t| t.sqrt()).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.theta.iter().fold(0.0f64, |m, t| m.max(t.sqrt()))
    }

    pub fn max_invariant_residual(&self) -> f64 {
        self.invariant_residual.iter().fold(0.0f64, |m, r| m.max(*r))
    }

    /// `sup_j ‖h(t_j) − g(t_j)‖*` over the common grid points.
    pub fn sup_distance(&self, other: &Trajectory) -> f64 {
        let mut worst: f64 = 0.0;
        let mut j = 0;
        for (i, t) in self.times.iter().enumerate() {
            while j < other.times.len() && other.times[j] < t - 1e-12 {
                j += 1;
            }
            if j < other.times.len() && (other.times[j] - t).abs() <= 1e-12 {
                worst = worst.max(self.states[i].distance(&other.states[j]));
            }
        }
        worst
    }
}

/// Sorted union of the uniform grid `0, dt, 2dt, …, t_end` and the geometric
/// grid `t_geo, t_geo·ratio, …` below `t_end`.
pub fn union_grid(t_end: f64, dt: f64, t_geo: f64, ratio: f64) -> Vec<f64> {
    let mut g: Vec<f64> = Vec::new();
    let n = (t_end / dt).round() as usize;
    for i in 0..=n {
        g.push((i as f64 * dt).min(t_end));
    }
    if t_geo > 0.0 && ratio > 1.0 {
        let mut t = t_geo;
        while t < t_end {
            g.push(t);
            t *= ratio;
        }
    }
    g.push(t_end);
    g.sort_by(f64::total_cmp);
    g.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    g
}

pub(crate) fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-3 {
        1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    } else {
        z.exp_m1() / z
    }
}

pub(crate) fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-3 {
        0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// Quadratic term in mode coordinates; also returns the invariant residual
/// of `R[h, h]` before projection.
pub(crate) struct ModalRemainder<'a> {
    pub semigroup: &'a Semigroup,
    pub r: &'a RTensor,
}

impl ModalRemainder<'_> {
    pub fn eval(&self, y: &[f64]) -> (Vec<f64>, f64) {
        let h = self.semigroup.from_modes(y);
        let z = self.r.apply_slices(&h, &h);
        let res = invariant_residual_raw(&z, z.len());
        (self.semigroup.to_modes(&z), res)
    }
}

pub(crate) fn prepare_initial(h0: &StateVector, projector: &InvariantProjector) -> Result<StateVector> {
    let res = projector.residual(h0);
    if res >= PROJECT_TOL {
        return Err(Error::NotInH0(res));
    }
    Ok(projector.project_h0(h0))
}

struct Run {
    modes: Vec<Vec<f64>>,
    max_projection_residual: f64,
}

fn run_fixed(
    y0: &[f64],
    lambdas: &[f64],
    rem: Option<&ModalRemainder>,
    grid: &[f64],
    dt: f64,
    blowup: f64,
) -> Result<Run> {
    let mut y = y0.to_vec();
    let mut modes = vec![y.clone()];
    let mut max_res: f64 = 0.0;
    for w in grid.windows(2) {
        let len = w[1] - w[0];
        let m = ((len / dt) - 1e-9).ceil().max(1.0) as usize;
        let tau = len / m as f64;
        let e_full: Vec<f64> = lambdas.iter().map(|l| (l * tau).exp()).collect();
        let p_full: Vec<f64> = lambdas.iter().map(|l| tau * phi1(l * tau)).collect();
        let e_half: Vec<f64> = lambdas.iter().map(|l| (l * tau / 2.0).exp()).collect();
        let p_half: Vec<f64> = lambdas.iter().map(|l| tau / 2.0 * phi1(l * tau / 2.0)).collect();
        for _ in 0..m {
            match rem {
                None => {
                    for (yk, e) in y.iter_mut().zip(&e_full) {
                        *yk *= e;
                    }
                }
                Some(rem) => {
                    let (n0, r0) = rem.eval(&y);
                    let mid: Vec<f64> = (0..y.len()).map(|k| e_half[k] * y[k] + p_half[k] * n0[k]).collect();
                    let (nm, rm) = rem.eval(&mid);
                    max_res = max_res.max(r0).max(rm);
                    for k in 0..y.len() {
                        y[k] = e_full[k] * y[k] + p_full[k] * nm[k];
                    }
                }
            }
            let theta: f64 = y.iter().map(|v| v * v).sum();
            if !theta.is_finite() || theta > blowup {
                return Err(Error::LeftPerturbativeRegime(theta));
            }
        }
        modes.push(y.clone());
    }
    Ok(Run {
        modes,
        max_projection_residual: max_res,
    })
}

/// Exponential midpoint integration of `ḣ = L h + R[h, h]` on `grid`.
///
/// Each step is `h⁺ = e^{ΔL} h + Δ φ₁(ΔL) R[h_m, h_m]` with the midpoint
/// predictor `h_m = e^{ΔL/2} h + (Δ/2) φ₁(ΔL/2) R[h, h]`, carried out in the
/// eigenbasis of `L` on `H₀` so invariant components never enter. The step
/// is halved until θ on the grid changes by less than `opts.tol`.
pub fn integrate(
    h0: &StateVector,
    l: &LMatrix,
    r: &RTensor,
    basis: &HermiteBasis,
    grid: &[f64],
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    if grid.is_empty() || grid[0] != 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("grid must start at 0 and increase".into()));
    }
    if !(opts.dt0 > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {}", opts.dt0)));
    }
    let projector = InvariantProjector::new(basis);
    let h0 = prepare_initial(h0, &projector)?;
    let semigroup = Semigroup::new(l);
    let rem = ModalRemainder { semigroup: &semigroup, r };
    let rem = opts.nonlinear.then_some(&rem);
    let y0 = semigroup.to_modes(h0.coeffs());
    let lambdas = semigroup.eigenvalues();
    let theta_of = |run: &Run| -> Vec<f64> { run.modes.iter().map(|y| y.iter().map(|v| v * v).sum()).collect() };

    let mut dt = opts.dt0;
    let mut prev_theta = theta_of(&run_fixed(&y0, lambdas, rem, grid, dt, opts.blowup)?);
    let mut change = f64::INFINITY;
    for halvings in 1..=opts.max_halvings {
        dt /= 2.0;
        let next = run_fixed(&y0, lambdas, rem, grid, dt, opts.blowup)?;
        let theta = theta_of(&next);
        change = theta.iter().zip(&prev_theta).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if change < opts.tol {
            let states: Vec<StateVector> = next
                .modes
                .iter()
                .map(|y| StateVector::from_coeffs(basis, semigroup.from_modes(y)))
                .collect::<Result<_>>()?;
            let invariant_residual = states.iter().map(|s| projector.residual(s)).collect();
            return Ok(Trajectory {
                times: grid.to_vec(),
                theta: states.iter().map(|s| s.norm_sq()).collect(),
                states,
                invariant_residual,
                max_projection_residual: next.max_projection_residual,
                step: dt,
                halvings,
                refinement_change: change,
            });
        }
        prev_theta = theta;
    }
    Err(Error::IntegratorTolerance {
        halvings: opts.max_halvings,
        change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::random_h0_state;
    use crate::kernel::CollisionKernel;
    use crate::operators::{assemble_l, assemble_r};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize) -> (CollisionKernel, HermiteBasis, LMatrix, RTensor) {
        let k = CollisionKernel::builtin("linear").unwrap();
        let b = HermiteBasis::new(n).unwrap();
        let l = assemble_l(&k, &b).unwrap();
        let r = assemble_r(&k, &b).unwrap();
        (k, b, l, r)
    }

    #[test]
    fn grid_union() {
        let g = union_grid(2.0, 0.5, 0.1, 2.0);
        assert_eq!(g, vec![0.0, 0.1, 0.2, 0.4, 0.5, 0.8, 1.0, 1.5, 1.6, 2.0]);
    }

    #[test]
    fn phi_series_matches_closed_form() {
        for z in [1e-3 * 0.999, -9e-4] {
            assert!((phi1(z) - z.exp_m1() / z).abs() < 1e-13);
            assert!((phi2(z) - (z.exp_m1() - z) / (z * z)).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_stays_zero() {
        let (_, b, l, r) = setup(4);
        let t = integrate(&b.zero_state(), &l, &r, &b, &union_grid(3.0, 0.5, 0.0, 0.0), &IntegrateOptions::default()).unwrap();
        assert!(t.theta.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn linear_gap_mode_decays_exactly() {
        let (k, b, l, r) = setup(4);
        let gap = k.spectral_gap().unwrap();
        let h0 = l.gap_eigenvector(&b).scale(0.02);
        let opts = IntegrateOptions {
            nonlinear: false,
            ..Default::default()
        };
        let t = integrate(&h0, &l, &r, &b, &union_grid(10.0, 0.5, 0.01, 1.5), &opts).unwrap();
        for (time, th) in t.times.iter().zip(&t.theta) {
            let expect = 4e-4 * (2.0 * gap * time).exp();
            assert!((th - expect).abs() <= 1e-9 * expect, "{time}");
        }
    }

    #[test]
    fn nonlinear_run_decreases_and_stays_in_h0() {
        let (k, b, l, r) = setup(4);
        let p = InvariantProjector::new(&b);
        let delta = k.theorem_delta().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h0 = random_h0_state(&b, &p, &mut rng, delta);
        let t = integrate(&h0, &l, &r, &b, &union_grid(5.0, 0.25, 0.01, 1.5), &IntegrateOptions::default()).unwrap();
        assert!(t.theta.windows(2).all(|w| w[1] < w[0]));
        assert!(t.max_invariant_residual() < 1e-12);
        assert!(t.max_projection_residual < 1e-12);
    }

    #[test]
    fn rejects_states_off_h0() {
        let (_, b, l, r) = setup(3);
        let mut c = vec![0.0; b.len()];
        c[0] = 0.1;
        let s = StateVector::from_coeffs(&b, c).unwrap();
        let e = integrate(&s, &l, &r, &b, &[0.0, 1.0], &IntegrateOptions::default());
        assert!(matches!(e, Err(Error::NotInH0(_))));
    }

    #[test]
    fn blow_up_is_reported() {
        let (_, b, l, r) = setup(4);
        let p = InvariantProjector::new(&b);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h0 = random_h0_state(&b, &p, &mut rng, 2000.0);
        let e = integrate(&h0, &l, &r, &b, &[0.0, 5.0], &IntegrateOptions::default());
        assert!(matches!(e, Err(Error::LeftPerturbativeRegime(_))), "{e:?}");
        // far from equilibrium the step refinement does not settle
        let opts = IntegrateOptions {
            max_halvings: 3,
            ..Default::default()
        };
        let e = integrate(&h0.scale(0.1), &l, &r, &b, &[0.0, 5.0], &opts);
        assert!(matches!(e, Err(Error::IntegratorTolerance { halvings: 3, .. })), "{e:?}");
    }
}
