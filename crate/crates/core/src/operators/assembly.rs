//! Structured exact assembly.
//!
//! With `v = (ξ+η)/√2`, `w = (ξ−η)/√2` the post-collisional pair is
//! `v* = (ξ+η')/√2`, `w* = (ξ−η')/√2` where `η' = η − 2(η·ω)ω`. Hermite
//! functions transform under the 45° rotation by a finite sum,
//!
//! ```text
//! ĥ_a((x+y)/√2) ĥ_b((x−y)/√2) = Σ_k D^{ab}_k ĥ_k(x) ĥ_{a+b−k}(y),
//! ```
//!
//! so the ξ integral collapses by orthonormality and every gain coefficient is
//! a finite sum of products of `D` with the matrix of the reflection average
//! `A[p](η) = ∫ p(η') b(η̂·ω) dω` between Hermite functions in `η`. `A` is
//! self-adjoint, commutes with rotations and maps homogeneous polynomials to
//! homogeneous polynomials of the same degree, hence is block diagonal by
//! Hermite degree and its blocks are read off from leading coefficients.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::basis::{HermiteBasis, MultiIndex};
use crate::error::{Error, Result};
use crate::kernel::{CollisionKernel, MomentTable};
use crate::polyalg::{binomial, double_factorial, factorial, MultiPoly};

const EA: [&str; 6] = ["e1", "e2", "e3", "a1", "a2", "a3"];
const E: [&str; 3] = ["e1", "e2", "e3"];

/// One-dimensional rotation coefficient `D^{ab}_k`.
pub fn rotation_coefficient(a: u32, b: u32, k: u32) -> f64 {
    let n = a + b;
    if k > n {
        return 0.0;
    }
    let m = n - k;
    // [x^k y^m] (x+y)^a (x−y)^b
    let mut s = 0.0;
    for i in 0..=a.min(k) {
        if k - i > b {
            continue;
        }
        let sign = if (b - (k - i)) % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * binomial(a, i) * binomial(b, k - i);
    }
    s * (factorial(k) * factorial(m) / (factorial(a) * factorial(b))).sqrt() * 2f64.powf(-(n as f64) / 2.0)
}

fn rotation3(a: MultiIndex, b: MultiIndex, k: MultiIndex) -> f64 {
    (0..3)
        .map(|i| rotation_coefficient(a[i] as u32, b[i] as u32, k[i] as u32))
        .product()
}

fn mfact(a: MultiIndex) -> f64 {
    a.iter().map(|&x| factorial(x as u32)).product()
}

fn deg(a: MultiIndex) -> usize {
    a.iter().map(|&x| x as usize).sum()
}

/// `K_β(η) = ∫ (η·ω)^{|β|} ω^β b(η̂·ω) dω` for all `|β| <= n_max`, as
/// polynomials in η.
fn reflection_kernels(moments: &MomentTable, n_max: usize) -> Result<HashMap<MultiIndex, MultiPoly>> {
    if 2 * n_max > moments.m_max() {
        return Err(Error::AngularTableTooSmall {
            needed: 2 * n_max,
            available: moments.m_max(),
        });
    }
    let var = |i: usize| MultiPoly::var(&EA, i);
    let mut a_eta = MultiPoly::zero(&EA);
    let mut aa = MultiPoly::zero(&EA);
    let mut ee = MultiPoly::zero(&EA);
    for i in 0..3 {
        a_eta = a_eta.add(&var(i).mul(&var(3 + i)));
        aa = aa.add(&var(3 + i).pow(2));
        ee = ee.add(&var(i).pow(2));
    }
    let perp = aa.mul(&ee).sub(&a_eta.pow(2));
    let mut out = HashMap::new();
    for j in 0..=n_max as u32 {
        let mut kj = MultiPoly::zero(&EA);
        for k in (0..=j).step_by(2) {
            let half = k / 2;
            let mut integral = 0.0;
            for i in 0..=half {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                integral += sign * binomial(half, i) * moments.get((2 * j - k + 2 * i) as usize);
            }
            let wallis = double_factorial(k as i64 - 1) / double_factorial(k as i64);
            let c = binomial(j, k) * wallis * integral;
            kj = kj.add(&a_eta.pow((j - k) as usize).mul(&perp.pow(half as usize)).scale(c));
        }
        let jf = factorial(j);
        for (e, c) in kj.terms() {
            let beta = [e[3], e[4], e[5]];
            let entry = out.entry(beta).or_insert_with(|| MultiPoly::zero(&E));
            let scale = mfact(beta) / jf;
            let p: &mut MultiPoly = entry;
            p.add_term(vec![e[0], e[1], e[2]], c * scale);
        }
        // make sure every β of degree j is present
        for a in 0..=j as u8 {
            for b in 0..=(j as u8 - a) {
                out.entry([a, b, j as u8 - a - b]).or_insert_with(|| MultiPoly::zero(&E));
            }
        }
    }
    Ok(out)
}

/// Degree blocks of `(φ_κ, A φ_λ)*`.
#[derive(Clone, Debug)]
pub struct ReflectionBlocks {
    blocks: Vec<DMatrix<f64>>,
    start: Vec<usize>,
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
}

impl ReflectionBlocks {
    pub fn new(moments: &MomentTable, basis: &HermiteBasis) -> Result<Self> {
        let n_max = basis.degree();
        let kernels = reflection_kernels(moments, n_max)?;
        let indices = basis.indices().to_vec();
        let lookup: HashMap<MultiIndex, usize> = indices.iter().enumerate().map(|(i, a)| (*a, i)).collect();
        let start: Vec<usize> = (0..=n_max).map(|n| basis.block(n).start).collect();
        let blocks: Vec<DMatrix<f64>> = (0..=n_max)
            .into_par_iter()
            .map(|n| {
                let range = basis.block(n);
                let size = range.len();
                let mut m = DMatrix::zeros(size, size);
                for (col, li) in range.clone().enumerate() {
                    let lambda = indices[li];
                    // A(η^λ) = Σ_{β<=λ} C(λ,β) (−2)^{|β|} η^{λ−β} K_β(η)
                    let mut a = MultiPoly::zero(&E);
                    for b0 in 0..=lambda[0] {
                        for b1 in 0..=lambda[1] {
                            for b2 in 0..=lambda[2] {
                                let beta = [b0, b1, b2];
                                let c = (0..3)
                                    .map(|i| binomial(lambda[i] as u32, beta[i] as u32))
                                    .product::<f64>()
                                    * (-2f64).powi(deg(beta) as i32);
                                let shift = MultiPoly::monomial(
                                    &E,
                                    vec![lambda[0] - b0, lambda[1] - b1, lambda[2] - b2],
                                    c,
                                );
                                a = a.add(&shift.mul(&kernels[&beta]));
                            }
                        }
                    }
                    for (row, ki) in range.clone().enumerate() {
                        let kappa = indices[ki];
                        let lead = a.coefficient(&kappa);
                        m[(row, col)] = (mfact(kappa) / mfact(lambda)).sqrt() * lead;
                    }
                }
                m
            })
            .collect();
        Ok(Self {
            blocks,
            start,
            indices,
            lookup,
        })
    }

    /// `(φ_κ, A φ_λ)*`; zero across degrees.
    pub fn get(&self, kappa: MultiIndex, lambda: MultiIndex) -> f64 {
        let n = deg(kappa);
        if n != deg(lambda) || n >= self.blocks.len() {
            return 0.0;
        }
        let r = self.lookup[&kappa] - self.start[n];
        let c = self.lookup[&lambda] - self.start[n];
        self.blocks[n][(r, c)]
    }

    pub fn block(&self, n: usize) -> &DMatrix<f64> {
        &self.blocks[n]
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }
}

/// Gain coefficient `∫∫∫ φ_γ(v) φ_α(v*) φ_β(w*) b dω M(w)M(v) dw dv`.
pub fn gain(blocks: &ReflectionBlocks, alpha: MultiIndex, beta: MultiIndex, gamma: MultiIndex) -> f64 {
    let s = [alpha[0] + beta[0], alpha[1] + beta[1], alpha[2] + beta[2]];
    if deg(s) != deg(gamma) {
        return 0.0;
    }
    if (0..3).any(|i| (s[i] + gamma[i]) % 2 == 1) {
        return 0.0;
    }
    let mut acc = 0.0;
    for k0 in 0..=gamma[0].min(s[0]) {
        for k1 in 0..=gamma[1].min(s[1]) {
            for k2 in 0..=gamma[2].min(s[2]) {
                let kappa = [k0, k1, k2];
                let g_rest = [gamma[0] - k0, gamma[1] - k1, gamma[2] - k2];
                let s_rest = [s[0] - k0, s[1] - k1, s[2] - k2];
                let b = blocks.get(g_rest, s_rest);
                if b == 0.0 {
                    continue;
                }
                acc += rotation3(gamma, [0, 0, 0], kappa) * rotation3(alpha, beta, kappa) * b;
            }
        }
    }
    acc
}

/// Symmetrized `T_{αβγ} = ½(T⁰_{αβγ} + T⁰_{βαγ})` with
/// `T⁰_{αβγ} = gain(α,β,γ) − δ_{αγ} δ_{β0}`.
pub fn symmetric_entry(blocks: &ReflectionBlocks, alpha: MultiIndex, beta: MultiIndex, gamma: MultiIndex) -> f64 {
    let zero = [0, 0, 0];
    let mut loss = 0.0;
    if alpha == gamma && beta == zero {
        loss += 1.0;
    }
    if beta == gamma && alpha == zero {
        loss += 1.0;
    }
    0.5 * (gain(blocks, alpha, beta, gamma) + gain(blocks, beta, alpha, gamma) - loss)
}

/// Dense `(L φ_α, φ_γ)*` (row γ, column α).
pub fn l_entries(kernel: &CollisionKernel, basis: &HermiteBasis) -> Result<DMatrix<f64>> {
    let blocks = ReflectionBlocks::new(kernel.moments(), basis)?;
    let n = basis.len();
    let zero = [0, 0, 0];
    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|a| {
            let alpha = basis.index(a);
            (0..n)
                .map(|g| {
                    let gamma = basis.index(g);
                    2.0 * symmetric_entry(&blocks, alpha, zero, gamma)
                })
                .collect()
        })
        .collect();
    Ok(DMatrix::from_fn(n, n, |r, c| cols[c][r]))
}

/// Sparse tensor grouped by output index: `entries[γ]` lists every ordered
/// pair `(α, β)` with a nonzero coefficient, in canonical order.
pub fn r_entries(kernel: &CollisionKernel, basis: &HermiteBasis) -> Result<Vec<Vec<(u32, u32, f64)>>> {
    let blocks = ReflectionBlocks::new(kernel.moments(), basis)?;
    let n = basis.len();
    Ok((0..n)
        .into_par_iter()
        .map(|g| {
            let gamma = basis.index(g);
            let total = deg(gamma);
            let mut row = Vec::new();
            for da in 0..=total {
                for a in basis.block(da) {
                    let alpha = basis.index(a);
                    for b in basis.block(total - da) {
                        let beta = basis.index(b);
                        if (0..3).any(|i| (alpha[i] + beta[i] + gamma[i]) % 2 == 1) {
                            continue;
                        }
                        let v = symmetric_entry(&blocks, alpha, beta, gamma);
                        if v != 0.0 {
                            row.push((a as u32, b as u32, v));
                        }
                    }
                }
            }
            row.sort_by_key(|&(a, b, _)| (a, b));
            row
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::hermite_values;

    #[test]
    fn rotation_identity_pointwise() {
        // ĥ_a((x+y)/√2) ĥ_b((x−y)/√2) = Σ_k D^{ab}_k ĥ_k(x) ĥ_{a+b−k}(y)
        let (x, y) = (0.37, -1.21);
        let s = 2f64.sqrt();
        let hu = hermite_values((x + y) / s, 8);
        let hv = hermite_values((x - y) / s, 8);
        let hx = hermite_values(x, 16);
        let hy = hermite_values(y, 16);
        for a in 0..=5u32 {
            for b in 0..=5u32 {
                let lhs = hu[a as usize] * hv[b as usize];
                let rhs: f64 = (0..=a + b)
                    .map(|k| rotation_coefficient(a, b, k) * hx[k as usize] * hy[(a + b - k) as usize])
                    .sum();
                assert!((lhs - rhs).abs() < 1e-12, "a={a} b={b}: {lhs} vs {rhs}");
            }
        }
        // D^{a0}_k = sqrt(C(a,k)) 2^{-a/2}
        for a in 0..6 {
            for k in 0..=a {
                let expect = binomial(a, k).sqrt() * 2f64.powf(-(a as f64) / 2.0);
                assert!((rotation_coefficient(a, 0, k) - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn reflection_blocks_are_symmetric_and_fix_invariants() {
        let k = CollisionKernel::builtin("linear").unwrap();
        let basis = HermiteBasis::new(6).unwrap();
        let b = ReflectionBlocks::new(k.moments(), &basis).unwrap();
        for n in 0..=6 {
            let m = b.block(n);
            assert!((m - m.transpose()).abs().max() < 1e-12, "block {n}");
        }
        // A fixes constants and the energy |η|²: degree 0 block is 1
        assert!((b.block(0)[(0, 0)] - 1.0).abs() < 1e-15);
        // degree 1: E[(η·ω)ω] = mu_2 η, so A[η] = (1 − 2 mu_2) η
        let s = b.get([1, 0, 0], [1, 0, 0]);
        let mu2 = k.mu(2);
        assert!((s - (1.0 - 2.0 * mu2)).abs() < 1e-13, "{s}");
    }
}
