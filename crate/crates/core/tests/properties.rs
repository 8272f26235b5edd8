//! Property tests on the public API.

use std::sync::OnceLock;

use maxwell_core::basis::{
    admissible_sigma_interval, chi_square_product_gaussian, product_gaussian_state, HermiteBasis, InvariantProjector,
    StateVector,
};
use maxwell_core::dynamics::{c_star, riccati_envelope, Semigroup};
use maxwell_core::kernel::CollisionKernel;
use maxwell_core::operators::{assemble_l, assemble_r, LMatrix, RTensor};
use maxwell_core::quadrature::adaptive;
use proptest::prelude::*;

struct Setup {
    basis: HermiteBasis,
    projector: InvariantProjector,
    gap: f64,
    l: LMatrix,
    r: RTensor,
    semigroup: Semigroup,
}

fn setup() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| {
        let k = CollisionKernel::builtin("quintic").unwrap();
        let basis = HermiteBasis::new(4).unwrap();
        let l = assemble_l(&k, &basis).unwrap();
        let r = assemble_r(&k, &basis).unwrap();
        Setup {
            projector: InvariantProjector::new(&basis),
            gap: k.spectral_gap().unwrap(),
            semigroup: Semigroup::new(&l),
            basis,
            l,
            r,
        }
    })
}

const DIM: usize = 35;

fn state(c: Vec<f64>) -> StateVector {
    StateVector::from_coeffs(&setup().basis, c).unwrap()
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, DIM)
}

fn close(a: &StateVector, b: &StateVector, tol: f64) -> bool {
    a.distance(b) <= tol * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quadratic_term_is_symmetric_and_bilinear(x in coeffs(), y in coeffs(), z in coeffs(), a in -3.0f64..3.0) {
        let s = setup();
        let (x, y, z) = (state(x), state(y), state(z));
        let xy = s.r.apply(&x, &y).unwrap();
        prop_assert!(close(&xy, &s.r.apply(&y, &x).unwrap(), 1e-13));
        let lhs = s.r.apply(&x.scale(a).add(&y), &z).unwrap();
        let rhs = s.r.apply(&x, &z).unwrap().scale(a).add(&s.r.apply(&y, &z).unwrap());
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn quadratic_term_conserves_invariants(x in coeffs(), y in coeffs()) {
        let s = setup();
        let z = s.r.apply(&state(x), &state(y)).unwrap();
        prop_assert!(s.projector.residual(&z) <= 1e-12 * (1.0 + z.norm()));
    }

    #[test]
    fn projection_is_idempotent_and_orthogonal(x in coeffs()) {
        let s = setup();
        let x = state(x);
        let p = s.projector.project_h0(&x);
        prop_assert!(s.projector.residual(&p) <= 1e-14);
        prop_assert!(close(&s.projector.project_h0(&p), &p, 1e-15));
        // x − Px is orthogonal to H₀
        prop_assert!(x.sub(&p).dot(&p).abs() <= 1e-13);
    }

    #[test]
    fn rayleigh_quotient_respects_gap(x in coeffs()) {
        let s = setup();
        let p = s.projector.project_h0(&state(x));
        prop_assume!(p.norm() > 1e-6);
        prop_assert!(s.l.rayleigh_quotient(&p) <= s.gap + 1e-12);
    }

    #[test]
    fn semigroup_composes_and_decays(x in coeffs(), t1 in 0.0f64..3.0, t2 in 0.0f64..3.0) {
        let s = setup();
        let g = s.projector.project_h0(&state(x));
        let both = s.semigroup.apply(t1 + t2, &g).unwrap();
        let stepwise = s.semigroup.apply(t2, &s.semigroup.apply(t1, &g).unwrap()).unwrap();
        prop_assert!(close(&both, &stepwise, 1e-13));
        prop_assert!(both.norm() <= (s.gap * (t1 + t2)).exp() * g.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn riccati_envelope_solves_its_equation(r in 0.01f64..0.95, t in 0.0f64..20.0) {
        let gap: f64 = -1.0 / 3.0;
        // 2 sqrt(θ0) = r |gap| stays inside the basin
        let theta0 = (r * gap.abs() / 2.0).powi(2);
        let f = |t: f64| riccati_envelope(theta0, gap, t).unwrap();
        prop_assert!((f(0.0) - theta0).abs() <= 1e-15 * theta0.max(1e-300) + 1e-300);
        let h = 1e-5;
        let deriv = (f(t + h) - f(t.max(h) - h)) / (t + h - (t.max(h) - h));
        let tc = 0.5 * (t + h + t.max(h) - h);
        let rhs = gap * f(tc) + 2.0 * f(tc).powf(1.5);
        prop_assert!((deriv - rhs).abs() <= 1e-6 * rhs.abs() + 1e-18, "{deriv} vs {rhs}");
        prop_assert!(f(t + 1.0) <= f(t));
        // the envelope decays no slower than θ0 e^{Λt} and no faster than C* e^{Λt}
        prop_assert!(f(t) >= theta0 * (gap * t).exp() * (1.0 - 1e-12));
        prop_assert!(f(t) <= c_star(theta0.sqrt(), gap) * (gap * t).exp() * (1.0 + 1e-12));
    }

    #[test]
    fn riccati_envelope_is_monotone_in_initial_value(a in 0.0f64..0.9, b in 0.0f64..0.9, t in 0.0f64..10.0) {
        let gap = -0.4;
        let th = |r: f64| (r * 0.2).powi(2);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(riccati_envelope(th(lo), gap, t).unwrap() <= riccati_envelope(th(hi), gap, t).unwrap() * (1.0 + 1e-14));
    }

    #[test]
    fn telescoped_bound_dominates_chi_square(u in 0.0f64..1.0, v in 0.0f64..1.0, delta in 0.001f64..0.1) {
        let (lo, hi) = admissible_sigma_interval(delta);
        let a = lo + (hi - lo) * u;
        let b = lo + (hi - lo) * v;
        let chi = chi_square_product_gaussian([a, b, 3.0 - a - b]).unwrap();
        prop_assert!(chi.exact >= -1e-16);
        prop_assert!(chi.exact <= chi.telescoped_bound * (1.0 + 1e-12) + 1e-18);
    }

    #[test]
    fn interval_endpoints_stay_in_the_ball(delta in 0.001f64..0.1) {
        let (lo, hi) = admissible_sigma_interval(delta);
        for s in [[hi, 1.0, lo], [lo, 1.0, hi], [1.0, lo, hi]] {
            let chi = chi_square_product_gaussian(s).unwrap();
            prop_assert!(chi.exact.sqrt() <= delta * (1.0 + 1e-12));
        }
    }

    #[test]
    fn truncated_gaussian_state_loses_norm(u in 0.9f64..1.1, v in 0.9f64..1.1) {
        let s = setup();
        let st = product_gaussian_state([u, v, 3.0 - u - v], &s.basis).unwrap();
        prop_assert!(st.truncation_error >= -1e-15);
        prop_assert!(s.projector.residual(&st.state) <= 1e-14);
    }

    #[test]
    fn state_csv_round_trips(x in coeffs()) {
        let s = setup();
        let x = state(x);
        let back = StateVector::from_csv(&s.basis, &x.to_csv(&s.basis)).unwrap();
        prop_assert_eq!(back.coeffs(), x.coeffs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// `g(s) = 2 + a (6 s (1 − s) − 1)` is symmetric, integrates to 2 and is
    /// nonnegative for `a ∈ [−1, 2]`.
    #[test]
    fn family_gap_matches_direct_integral(a in -1.0f64..2.0) {
        let k = CollisionKernel::builtin(&format!("family:2 + ({a}) * (6*s*(1-s) - 1)")).unwrap();
        let b = |x: f64| (2.0 + a * (6.0 * x * x * (1.0 - x * x) - 1.0)) * x.abs();
        let direct = -2.0 * adaptive(&|x: f64| x * x * (1.0 - x * x) * b(x), 0.0, 1.0, 1e-14).value;
        prop_assert!((k.spectral_gap().unwrap() - direct).abs() < 1e-12);
        prop_assert!(k.check(1e-10).unwrap().pass);
    }
}
