use serde::Serialize;

use super::bounds::{c_star, decay_rate_fit, riccati_envelope, RateFit};
use super::integrate::Trajectory;
use crate::basis::{l1_estimate, HermiteBasis};
use crate::error::Result;
use crate::io::fmt17;

#[derive(Clone, Debug, Serialize)]
pub struct TheoremOptions {
    /// Starting Gauss–Hermite order for the L¹ estimate.
    pub l1_order: usize,
    /// Relative slack on `θ ≤ C* e^{Λt}`.
    pub theta_tol: f64,
    /// Relative slack on the L¹ decay bound.
    pub l1_tol: f64,
    /// Relative slack on the Riccati comparison.
    pub envelope_tol: f64,
    /// Decay fit uses `t >= fit_t_min`; `None` takes a third of the horizon.
    pub fit_t_min: Option<f64>,
}

impl TheoremOptions {
    pub fn for_basis(basis: &HermiteBasis) -> Self {
        Self {
            l1_order: basis.degree() + 4,
            theta_tol: 1e-6,
            l1_tol: 1e-4,
            envelope_tol: 1e-9,
            fit_t_min: None,
        }
    }
}

/// One verified statement with its worst signed margin (negative = violated).
#[derive(Clone, Debug, Serialize)]
pub struct Clause {
    pub name: String,
    pub margin: f64,
    pub worst_time: f64,
    pub pass: bool,
}

impl Clause {
    fn relative(name: &str, rows: &[(f64, f64, f64)], tol: f64) -> Self {
        // rows: (t, value, bound); margin = 1 + tol − value/bound
        let mut margin = f64::INFINITY;
        let mut worst_time = 0.0;
        for &(t, v, b) in rows {
            let m = if b > 0.0 {
                1.0 + tol - v / b
            } else if v <= 0.0 {
                tol
            } else {
                f64::NEG_INFINITY
            };
            if m < margin {
                margin = m;
                worst_time = t;
            }
        }
        Self {
            name: name.to_string(),
            margin,
            worst_time,
            pass: margin >= 0.0,
        }
    }
}

/// One output row of a verified trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct TheoremRow {
    pub t: f64,
    pub theta: f64,
    /// `sup_{s<=t} ‖h(s)‖*`.
    pub sup_norm: f64,
    pub c_star_bound: f64,
    pub riccati_envelope: f64,
    pub l1_estimate: f64,
    pub l1_bound_sqrt_c_star: f64,
    pub invariant_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremReport {
    pub delta: f64,
    pub spectral_gap: f64,
    pub c_star: f64,
    pub initial_norm: f64,
    pub theta0: f64,
    pub hypothesis_satisfied: bool,
    /// `pass`, `fail` or `hypothesis_failed`.
    pub status: String,
    pub sup_norm: f64,
    /// (a) `sup ‖h‖* ≤ 2δ`.
    pub clause_a: Option<Clause>,
    /// (b) `θ ≤ C* e^{Λt}`.
    pub clause_b: Option<Clause>,
    /// (c) L¹ estimate `≤ √C* e^{Λt/2}`.
    pub clause_c: Option<Clause>,
    /// (d) `θ ≤` Riccati envelope.
    pub clause_d: Option<Clause>,
    /// `sup ‖h‖* ≤ |Λ|/8`.
    pub ball_d: Option<Clause>,
    /// Informational: L¹ estimate against the prefactor `C*` instead of `√C*`.
    pub l1_prefactor_c_star: Option<Clause>,
    pub l1_flagged_points: usize,
    pub l1_max_doubling_delta: f64,
    pub max_invariant_residual: f64,
    pub decay_fit: Option<RateFit>,
    /// Fitted rate at least as fast as `Λ` (within 1%).
    pub decay_rate_pass: Option<bool>,
    pub pass: bool,
}

/// Bound columns for every grid point. The Riccati envelope is `NaN` when
/// `θ(0)` lies outside its basin.
pub fn trajectory_rows(traj: &Trajectory, basis: &HermiteBasis, gap: f64, l1_order: usize) -> Result<Vec<TheoremRow>> {
    Ok(rows_with_stats(traj, basis, gap, l1_order)?.0)
}

fn rows_with_stats(
    traj: &Trajectory,
    basis: &HermiteBasis,
    gap: f64,
    l1_order: usize,
) -> Result<(Vec<TheoremRow>, (usize, f64))> {
    let theta0 = traj.theta[0];
    let cs = c_star(traj.states[0].norm(), gap);
    let mut rows = Vec::with_capacity(traj.times.len());
    let mut running_sup: f64 = 0.0;
    let mut flagged = 0;
    let mut max_delta: f64 = 0.0;
    for (i, &t) in traj.times.iter().enumerate() {
        running_sup = running_sup.max(traj.theta[i].sqrt());
        let l1 = l1_estimate(basis, &traj.states[i], l1_order)?;
        if l1.flagged {
            flagged += 1;
        }
        max_delta = max_delta.max(l1.delta);
        rows.push(TheoremRow {
            t,
            theta: traj.theta[i],
            sup_norm: running_sup,
            c_star_bound: cs * (gap * t).exp(),
            riccati_envelope: riccati_envelope(theta0, gap, t).unwrap_or(f64::NAN),
            l1_estimate: l1.value,
            l1_bound_sqrt_c_star: cs.sqrt() * (gap * t / 2.0).exp(),
            invariant_residual: traj.invariant_residual[i],
        });
    }
    Ok((rows, (flagged, max_delta)))
}

/// Checks the decay statements on a computed trajectory.
pub fn theorem_check(
    traj: &Trajectory,
    basis: &HermiteBasis,
    gap: f64,
    delta: f64,
    opts: &TheoremOptions,
) -> Result<(TheoremReport, Vec<TheoremRow>)> {
    let norm0 = traj.states[0].norm();
    let theta0 = traj.theta[0];
    let cs = c_star(norm0, gap);
    let hypothesis = norm0 <= delta * (1.0 + 1e-12);
    let mut report = TheoremReport {
        delta,
        spectral_gap: gap,
        c_star: cs,
        initial_norm: norm0,
        theta0,
        hypothesis_satisfied: hypothesis,
        status: "hypothesis_failed".into(),
        sup_norm: traj.sup_norm(),
        clause_a: None,
        clause_b: None,
        clause_c: None,
        clause_d: None,
        ball_d: None,
        l1_prefactor_c_star: None,
        l1_flagged_points: 0,
        l1_max_doubling_delta: 0.0,
        max_invariant_residual: traj.max_invariant_residual(),
        decay_fit: None,
        decay_rate_pass: None,
        pass: false,
    };
    if !hypothesis {
        return Ok((report, Vec::new()));
    }

    let (rows, l1_stats) = rows_with_stats(traj, basis, gap, opts.l1_order)?;
    report.l1_flagged_points = l1_stats.0;
    report.l1_max_doubling_delta = l1_stats.1;
    let col = |f: &dyn Fn(&TheoremRow) -> (f64, f64)| -> Vec<(f64, f64, f64)> {
        rows.iter().map(|r| {
            let (v, b) = f(r);
            (r.t, v, b)
        }).collect()
    };
    let a = Clause::relative("sup_norm <= 2 delta", &col(&|r| (r.sup_norm, 2.0 * delta)), 0.0);
    let b = Clause::relative("theta <= C* exp(gap t)", &col(&|r| (r.theta, r.c_star_bound)), opts.theta_tol);
    let c = Clause::relative(
        "l1 <= sqrt(C*) exp(gap t / 2)",
        &col(&|r| (r.l1_estimate, r.l1_bound_sqrt_c_star)),
        opts.l1_tol,
    );
    let d = Clause::relative("theta <= riccati envelope", &col(&|r| (r.theta, r.riccati_envelope)), opts.envelope_tol);
    let ball = Clause::relative("sup_norm <= |gap|/8", &col(&|r| (r.sup_norm, gap.abs() / 8.0)), 0.0);
    let stated = Clause::relative(
        "l1 <= C* exp(gap t / 2)",
        &col(&|r| (r.l1_estimate, cs * (gap * r.t / 2.0).exp())),
        opts.l1_tol,
    );
    let t_end = *traj.times.last().unwrap();
    let t_min = opts.fit_t_min.unwrap_or(t_end / 3.0);
    if let Ok(fit) = decay_rate_fit(&traj.times, &traj.theta, t_min) {
        report.decay_rate_pass = Some(fit.rate <= gap + 0.01 * gap.abs());
        report.decay_fit = Some(fit);
    }
    let pass = a.pass && b.pass && c.pass && d.pass && ball.pass;
    report.status = if pass { "pass" } else { "fail" }.into();
    report.pass = pass;
    report.clause_a = Some(a);
    report.clause_b = Some(b);
    report.clause_c = Some(c);
    report.clause_d = Some(d);
    report.ball_d = Some(ball);
    report.l1_prefactor_c_star = Some(stated);
    Ok((report, rows))
}

/// CSV with columns `t, theta, sup_norm, C_star_bound, riccati_envelope,
/// l1_estimate, l1_bound_sqrtCstar, invariant_residual`.
pub fn trajectory_csv(rows: &[TheoremRow]) -> String {
    let mut s = String::from(
        "t,theta,sup_norm,C_star_bound,riccati_envelope,l1_estimate,l1_bound_sqrtCstar,invariant_residual\n",
    );
    for r in rows {
        let vals = [
            r.t,
            r.theta,
            r.sup_norm,
            r.c_star_bound,
            r.riccati_envelope,
            r.l1_estimate,
            r.l1_bound_sqrt_c_star,
            r.invariant_residual,
        ];
        s.push_str(&vals.iter().map(|v| fmt17(*v)).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}
