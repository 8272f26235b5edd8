//! Literal polynomial pipeline for single coefficients.
//!
//! Far slower than the structured route and used to cross-check it: the
//! integrand is formed with the collision substitution, moved to centre of
//! mass and relative coordinates, integrated in the centre of mass, averaged
//! over ω with the angular table and finished with the factorized Gaussian
//! moments of the relative velocity.

use crate::basis::{HermiteBasis, MultiIndex};
use crate::error::Result;
use crate::kernel::CollisionKernel;
use crate::polyalg::{
    angular_average, collision_map, names, radial_moment, sphere_average, AngularTable, MultiPoly, Substitution,
};

fn phi_at(basis: &HermiteBasis, alpha: MultiIndex, offset: usize) -> MultiPoly {
    // φ_α over (v, w, ω) with its variables placed at `offset..offset+3`
    let p = basis.phi(basis.position(alpha).expect("index in basis"));
    let mut out = MultiPoly::zero(&names::VWO);
    for (e, c) in p.terms() {
        let mut ne = vec![0u8; 9];
        ne[offset..offset + 3].copy_from_slice(&e[..3]);
        out.add_term(ne, c);
    }
    out
}

fn centre_of_mass() -> Substitution {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = |i: usize| MultiPoly::var(&names::XEO, i);
    let mut map = Substitution::new(&names::XEO, 9);
    for i in 0..3 {
        map.set(i, x(i).add(&x(3 + i)).scale(s));
        map.set(3 + i, x(i).sub(&x(3 + i)).scale(s));
        map.set(6 + i, x(6 + i));
    }
    map
}

/// Finishes `E_η[p(η, η̂)]` for a polynomial over `(e1..e3, u1..u3)`.
fn relative_expectation(p: &MultiPoly) -> Result<f64> {
    let mut acc = 0.0;
    for (e, c) in p.terms() {
        let gamma = [e[0] as u32, e[1] as u32, e[2] as u32];
        let delta = [e[3] as u32, e[4] as u32, e[5] as u32];
        let total = [gamma[0] + delta[0], gamma[1] + delta[1], gamma[2] + delta[2]];
        let sph = sphere_average(total);
        if sph == 0.0 {
            continue;
        }
        acc += c * radial_moment((gamma[0] + gamma[1] + gamma[2]) as i32)? * sph;
    }
    Ok(acc)
}

/// `∫∫∫ φ_γ(v) φ_α(v*) φ_β(w*) b dω M(v)M(w) dv dw` through the literal
/// pipeline.
pub fn gain_direct(
    kernel: &CollisionKernel,
    basis: &HermiteBasis,
    table: &AngularTable,
    alpha: MultiIndex,
    beta: MultiIndex,
    gamma: MultiIndex,
) -> Result<f64> {
    let map = collision_map();
    let post_v = phi_at(basis, alpha, 0).compose_linear(&map)?;
    let post_w = phi_at(basis, beta, 3).compose_linear(&map)?;
    let integrand = phi_at(basis, gamma, 0).mul(&post_v).mul(&post_w).reduce_omega_norm([6, 7, 8]);
    let moved = integrand.compose_linear(&centre_of_mass())?;
    let reduced = moved.gaussian_integrate(&[0, 1, 2]);
    let averaged = angular_average(&reduced, [3, 4, 5], table, kernel.moments())?;
    relative_expectation(&averaged)
}

/// Symmetrized remainder coefficient through the literal pipeline.
pub fn r_entry_direct(
    kernel: &CollisionKernel,
    basis: &HermiteBasis,
    table: &AngularTable,
    alpha: MultiIndex,
    beta: MultiIndex,
    gamma: MultiIndex,
) -> Result<f64> {
    let zero = [0, 0, 0];
    let mut loss = 0.0;
    if alpha == gamma && beta == zero {
        loss += 1.0;
    }
    if beta == gamma && alpha == zero {
        loss += 1.0;
    }
    let g1 = gain_direct(kernel, basis, table, alpha, beta, gamma)?;
    let g2 = gain_direct(kernel, basis, table, beta, alpha, gamma)?;
    Ok(0.5 * (g1 + g2 - loss))
}

/// `(L φ_α, φ_γ)*` through the literal pipeline.
pub fn l_entry_direct(
    kernel: &CollisionKernel,
    basis: &HermiteBasis,
    table: &AngularTable,
    alpha: MultiIndex,
    gamma: MultiIndex,
) -> Result<f64> {
    Ok(2.0 * r_entry_direct(kernel, basis, table, alpha, [0, 0, 0], gamma)?)
}
