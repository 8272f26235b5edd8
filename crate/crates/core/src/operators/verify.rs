//! Property checks on assembled operators.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{LMatrix, RTensor};
use crate::basis::{random_h0_state, random_state, HermiteBasis, InvariantProjector};
use crate::error::Result;

/// Tolerance for symmetry, invariant annihilation and semidefiniteness.
pub const STRUCTURE_TOL: f64 = 1e-10;
/// Tolerance for the top `H₀` eigenvalue matching the gap formula.
pub const GAP_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct StructureReport {
    pub symmetry_residual: f64,
    pub invariant_residual: f64,
    pub max_h0_eigenvalue: f64,
    pub spectral_gap: f64,
    pub gap_error: f64,
    /// Top eigenvalue equals the gap formula, so the gap mode is resolved.
    pub stabilized: bool,
    pub gap_mode_degree: usize,
    pub gap_multiplicity: usize,
    pub gap_mode_degrees: Vec<usize>,
    pub pass: bool,
}

pub fn verify_structure(l: &LMatrix, basis: &HermiteBasis, gap: f64) -> StructureReport {
    let projector = InvariantProjector::new(basis);
    let symmetry_residual = l.symmetry_residual();
    let invariant_residual = l.invariant_residual(&projector);
    let top = l.top_eigenvalue();
    let gap_error = (top - gap).abs();
    StructureReport {
        symmetry_residual,
        invariant_residual,
        max_h0_eigenvalue: top,
        spectral_gap: gap,
        gap_error,
        stabilized: gap_error <= GAP_TOL,
        gap_mode_degree: l.mode_degree(basis, 0),
        gap_multiplicity: l.top_multiplicity(1e-9),
        gap_mode_degrees: l.top_mode_degrees(basis, 1e-9),
        pass: symmetry_residual <= STRUCTURE_TOL && invariant_residual <= STRUCTURE_TOL && top <= STRUCTURE_TOL,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub trials: usize,
    pub spectral_gap: f64,
    pub max_quotient: f64,
    /// `max (quotient − Λ_b)`; must stay below `1e-9`.
    pub max_excess: f64,
    pub gap_vector_quotient: f64,
    pub equality_residual: f64,
    pub stabilized: bool,
    pub pass: bool,
}

/// Rayleigh quotients of random `H₀` states against the gap. Equality at the
/// computed top eigenvector is required only once the gap mode is resolved.
pub fn verify_spectral_inequality(l: &LMatrix, basis: &HermiteBasis, gap: f64, trials: usize, seed: u64) -> SpectralReport {
    let projector = InvariantProjector::new(basis);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_quotient = f64::NEG_INFINITY;
    for _ in 0..trials {
        let phi = random_h0_state(basis, &projector, &mut rng, 1.0);
        max_quotient = max_quotient.max(l.rayleigh_quotient(&phi));
    }
    let gap_vector_quotient = l.rayleigh_quotient(&l.gap_eigenvector(basis));
    let equality_residual = (gap_vector_quotient - gap).abs();
    let stabilized = (l.top_eigenvalue() - gap).abs() <= GAP_TOL;
    let max_excess = max_quotient.max(gap_vector_quotient) - gap;
    SpectralReport {
        trials,
        spectral_gap: gap,
        max_quotient,
        max_excess,
        gap_vector_quotient,
        equality_residual,
        stabilized,
        pass: max_excess <= 1e-9 && (!stabilized || equality_residual <= 1e-10),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrilinearReport {
    pub trials: usize,
    /// Largest `|(R[φ,ψ],ρ)| / (‖φ‖‖ψ‖‖ρ‖)` observed.
    pub max_ratio: f64,
    /// Largest `‖R[x,y]‖ / (‖x‖‖y‖)` observed.
    pub apply_max_ratio: f64,
    pub constant_ratio: f64,
    pub pass: bool,
}

pub fn verify_trilinear_bound(r: &RTensor, basis: &HermiteBasis, trials: usize, seed: u64) -> Result<TrilinearReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio: f64 = 0.0;
    let mut apply_max_ratio: f64 = 0.0;
    for _ in 0..trials {
        let phi = random_state(basis, &mut rng);
        let psi = random_state(basis, &mut rng);
        let rho = random_state(basis, &mut rng);
        let z = r.apply(&phi, &psi)?;
        let scale = phi.norm() * psi.norm();
        max_ratio = max_ratio.max(z.dot(&rho).abs() / (scale * rho.norm()));
        apply_max_ratio = apply_max_ratio.max(z.norm() / scale);
    }
    let one = {
        let mut c = vec![0.0; basis.len()];
        c[0] = 1.0;
        crate::basis::StateVector::from_coeffs(basis, c)?
    };
    let constant_ratio = r.trilinear(&one, &one, &one)?.abs();
    let bound = 2.0 * (1.0 + 1e-9);
    Ok(TrilinearReport {
        trials,
        max_ratio,
        apply_max_ratio,
        constant_ratio,
        pass: max_ratio <= bound && apply_max_ratio <= bound && constant_ratio <= bound,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConservationReport {
    pub trials: usize,
    pub max_l_residual: f64,
    pub max_r_residual: f64,
    pub pass: bool,
}

/// Invariant components of `L[x]` and `R[x, y]` for unit random states.
pub fn verify_conservation(l: &LMatrix, r: &RTensor, basis: &HermiteBasis, trials: usize, seed: u64) -> Result<ConservationReport> {
    let projector = InvariantProjector::new(basis);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_l: f64 = 0.0;
    let mut max_r: f64 = 0.0;
    for _ in 0..trials {
        let x = random_state(basis, &mut rng);
        let x = x.scale(1.0 / x.norm());
        let y = random_state(basis, &mut rng);
        let y = y.scale(1.0 / y.norm());
        let comps_l = projector.invariant_components(&l.apply(&x));
        let comps_r = projector.invariant_components(&r.apply(&x, &y)?);
        max_l = comps_l.iter().fold(max_l, |m, c| m.max(c.abs()));
        max_r = comps_r.iter().fold(max_r, |m, c| m.max(c.abs()));
    }
    Ok(ConservationReport {
        trials,
        max_l_residual: max_l,
        max_r_residual: max_r,
        pass: max_l <= STRUCTURE_TOL && max_r <= STRUCTURE_TOL,
    })
}
