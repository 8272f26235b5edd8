//! The weighted space `H = L²(R³, M dv)` truncated to polynomials of total
//! degree `<= N`, in the orthonormal tensor Hermite basis.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::fmt17;
use crate::polyalg::{names, MultiPoly};
use crate::quadrature::gauss_hermite;

pub type MultiIndex = [u8; 3];

/// Default cap on the basis degree.
pub const DEGREE_CAP: usize = 12;

/// Monomial coefficients of the orthonormal probabilists' Hermite polynomial
/// `ĥ_n = He_n / sqrt(n!)`, lowest power first.
pub fn hermite_coefficients(n: usize) -> Vec<f64> {
    // He_{k+1} = x He_k - k He_{k-1}, integer coefficients
    let mut prev = vec![1.0];
    if n == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 1.0];
    for k in 1..n {
        let mut next = vec![0.0; k + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= k as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    let norm = (1..=n).map(|k| k as f64).product::<f64>().sqrt();
    cur.iter().map(|c| c / norm).collect()
}

/// `ĥ_0(x), …, ĥ_n(x)` by the normalized three-term recurrence.
pub fn hermite_values(x: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(x);
    }
    for k in 1..n {
        let next = (x * out[k] - (k as f64).sqrt() * out[k - 1]) / ((k + 1) as f64).sqrt();
        out.push(next);
    }
    out
}

/// Orthonormal basis `φ_α(v) = ĥ_{α₁}(v₁) ĥ_{α₂}(v₂) ĥ_{α₃}(v₃)`, `|α| <= N`,
/// ordered by total degree, then by descending exponent of `v₁`, then `v₂`.
#[derive(Clone, Debug)]
pub struct HermiteBasis {
    degree: usize,
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
    block_start: Vec<usize>,
}

impl HermiteBasis {
    pub fn new(degree: usize) -> Result<Self> {
        Self::with_cap(degree, DEGREE_CAP)
    }

    pub fn with_cap(degree: usize, cap: usize) -> Result<Self> {
        if degree < 2 {
            return Err(Error::BasisTooSmall(degree));
        }
        if degree > cap {
            return Err(Error::BasisTooLarge { degree, cap });
        }
        let mut indices = Vec::new();
        let mut block_start = Vec::new();
        for n in 0..=degree as u8 {
            block_start.push(indices.len());
            for a in (0..=n).rev() {
                for b in (0..=n - a).rev() {
                    indices.push([a, b, n - a - b]);
                }
            }
        }
        block_start.push(indices.len());
        let lookup = indices.iter().enumerate().map(|(i, a)| (*a, i)).collect();
        let basis = Self {
            degree,
            indices,
            lookup,
            block_start,
        };
        basis.validate_orthonormality(1e-10)?;
        Ok(basis)
    }

    /// One-dimensional orthonormality through exact Gaussian moments; the
    /// tensor structure carries it to three dimensions.
    fn validate_orthonormality(&self, tol: f64) -> Result<()> {
        let polys: Vec<MultiPoly> = (0..=self.degree)
            .map(|n| {
                let mut p = MultiPoly::zero(&["x"]);
                for (k, c) in hermite_coefficients(n).into_iter().enumerate() {
                    p.add_term(vec![k as u8], c);
                }
                p
            })
            .collect();
        for i in 0..=self.degree {
            for j in 0..=i {
                let g = polys[i].mul(&polys[j]).gaussian_integrate(&[0]).coefficient(&[]);
                let expect = if i == j { 1.0 } else { 0.0 };
                if (g - expect).abs() > tol {
                    return Err(Error::InvalidArgument(format!(
                        "Hermite orthonormality failed at ({i},{j}): {g}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn index(&self, i: usize) -> MultiIndex {
        self.indices[i]
    }

    pub fn position(&self, alpha: MultiIndex) -> Option<usize> {
        self.lookup.get(&alpha).copied()
    }

    /// Positions of the multi-indices of total degree `n`.
    pub fn block(&self, n: usize) -> std::ops::Range<usize> {
        self.block_start[n]..self.block_start[n + 1]
    }

    /// `φ_α` as a polynomial in `v1, v2, v3`.
    pub fn phi(&self, i: usize) -> MultiPoly {
        let alpha = self.indices[i];
        let mut p = MultiPoly::constant(&names::V, 1.0);
        for (axis, &n) in alpha.iter().enumerate() {
            let mut f = MultiPoly::zero(&names::V);
            for (k, c) in hermite_coefficients(n as usize).into_iter().enumerate() {
                let mut e = vec![0u8; 3];
                e[axis] = k as u8;
                f.add_term(e, c);
            }
            p = p.mul(&f);
        }
        p
    }

    /// Evaluates `Σ c_α φ_α(v)`.
    pub fn evaluate(&self, coeffs: &[f64], v: [f64; 3]) -> f64 {
        let h = v.map(|x| hermite_values(x, self.degree));
        self.indices
            .iter()
            .zip(coeffs)
            .map(|(a, c)| c * h[0][a[0] as usize] * h[1][a[1] as usize] * h[2][a[2] as usize])
            .sum()
    }

    pub fn zero_state(&self) -> StateVector {
        StateVector::zeros(self.degree, self.len())
    }
}

/// Coefficients of `h = Σ c_α φ_α` in a Hermite basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    degree: usize,
    coeffs: Vec<f64>,
}

impl StateVector {
    pub fn zeros(degree: usize, len: usize) -> Self {
        Self {
            degree,
            coeffs: vec![0.0; len],
        }
    }

    pub fn from_coeffs(basis: &HermiteBasis, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            degree: basis.degree(),
            coeffs,
        })
    }

    pub(crate) fn from_coeffs_unchecked(degree: usize, coeffs: Vec<f64>) -> Self {
        Self { degree, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    /// `‖h‖*²` by Parseval.
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            degree: self.degree,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).norm()
    }

    /// Same function in another basis: coefficients are matched by
    /// multi-index and dropped when the target degree is lower.
    pub fn embed(&self, from: &HermiteBasis, to: &HermiteBasis) -> Self {
        let mut coeffs = vec![0.0; to.len()];
        for (a, c) in from.indices().iter().zip(&self.coeffs) {
            if let Some(p) = to.position(*a) {
                coeffs[p] = *c;
            }
        }
        Self {
            degree: to.degree(),
            coeffs,
        }
    }

    /// CSV with columns `alpha1,alpha2,alpha3,coefficient`.
    pub fn to_csv(&self, basis: &HermiteBasis) -> String {
        let mut s = String::from("alpha1,alpha2,alpha3,coefficient\n");
        for (a, c) in basis.indices().iter().zip(&self.coeffs) {
            s.push_str(&format!("{},{},{},{}\n", a[0], a[1], a[2], fmt17(*c)));
        }
        s
    }

    pub fn from_csv(basis: &HermiteBasis, text: &str) -> Result<Self> {
        let mut coeffs = vec![0.0; basis.len()];
        for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
            let bad = || Error::InvalidArgument(format!("bad state line '{line}'"));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad());
            }
            let a = [0, 1, 2].map(|i| f[i].trim().parse::<u8>());
            let alpha = [
                a[0].clone().map_err(|_| bad())?,
                a[1].clone().map_err(|_| bad())?,
                a[2].clone().map_err(|_| bad())?,
            ];
            let pos = basis.position(alpha).ok_or_else(bad)?;
            coeffs[pos] = f[3].trim().parse().map_err(|_| bad())?;
        }
        Self::from_coeffs(basis, coeffs)
    }
}

/// Orthonormal coefficient vectors spanning the collision invariants
/// `{1, v₁, v₂, v₃, |v|²}`.
#[derive(Clone, Debug)]
pub struct InvariantProjector {
    vectors: Vec<Vec<f64>>,
    complement: DMatrix<f64>,
}

impl InvariantProjector {
    pub fn new(basis: &HermiteBasis) -> Self {
        let n = basis.len();
        let pos = |a: MultiIndex| basis.position(a).expect("basis degree >= 2");
        let unit = |i: usize| {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            v
        };
        let (p200, p020, p002) = (pos([2, 0, 0]), pos([0, 2, 0]), pos([0, 0, 2]));
        let mut energy = vec![0.0; n];
        // (|v|² - 3)/sqrt(6) = (ĥ₂(v₁) + ĥ₂(v₂) + ĥ₂(v₃))/sqrt(3)
        for p in [p200, p020, p002] {
            energy[p] = 1.0 / 3f64.sqrt();
        }
        let vectors = vec![
            unit(pos([0, 0, 0])),
            unit(pos([1, 0, 0])),
            unit(pos([0, 1, 0])),
            unit(pos([0, 0, 1])),
            energy,
        ];
        let skip = [
            pos([0, 0, 0]),
            pos([1, 0, 0]),
            pos([0, 1, 0]),
            pos([0, 0, 1]),
            p200,
            p020,
            p002,
        ];
        let mut columns: Vec<Vec<f64>> = Vec::with_capacity(n - 5);
        for i in 0..n {
            if i == p200 {
                let mut a = vec![0.0; n];
                a[p200] = 1.0 / 2f64.sqrt();
                a[p020] = -1.0 / 2f64.sqrt();
                columns.push(a);
                let mut b = vec![0.0; n];
                b[p200] = 1.0 / 6f64.sqrt();
                b[p020] = 1.0 / 6f64.sqrt();
                b[p002] = -2.0 / 6f64.sqrt();
                columns.push(b);
            }
            if !skip.contains(&i) {
                columns.push(unit(i));
            }
        }
        let complement = DMatrix::from_fn(n, columns.len(), |r, c| columns[c][r]);
        Self { vectors, complement }
    }

    /// Components along the five orthonormal invariants.
    pub fn invariant_components(&self, state: &StateVector) -> [f64; 5] {
        let mut out = [0.0; 5];
        for (o, v) in out.iter_mut().zip(&self.vectors) {
            *o = v.iter().zip(state.coeffs()).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// Euclidean norm of the invariant components.
    pub fn residual(&self, state: &StateVector) -> f64 {
        self.invariant_components(state).iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Orthogonal projection onto `H₀`.
    pub fn project_h0(&self, state: &StateVector) -> StateVector {
        let comps = self.invariant_components(state);
        let mut out = state.clone();
        for (c, v) in comps.iter().zip(&self.vectors) {
            for (o, vi) in out.coeffs_mut().iter_mut().zip(v) {
                *o -= c * vi;
            }
        }
        out
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Orthonormal basis of `H₀` as columns (`len × (len − 5)`).
    pub fn complement(&self) -> &DMatrix<f64> {
        &self.complement
    }
}

/// Random state in `H₀` with prescribed norm.
pub fn random_h0_state<R: Rng + ?Sized>(basis: &HermiteBasis, projector: &InvariantProjector, rng: &mut R, norm: f64) -> StateVector {
    let coeffs: Vec<f64> = (0..basis.len()).map(|_| rng.sample(StandardNormal)).collect();
    let s = projector.project_h0(&StateVector::from_coeffs(basis, coeffs).expect("sized"));
    let n = s.norm();
    s.scale(norm / n)
}

/// Random state in `H` (no projection) with Gaussian coefficients.
pub fn random_state<R: Rng + ?Sized>(basis: &HermiteBasis, rng: &mut R) -> StateVector {
    let coeffs: Vec<f64> = (0..basis.len()).map(|_| rng.sample(StandardNormal)).collect();
    StateVector::from_coeffs(basis, coeffs).expect("sized")
}

/// `E[ĥ_n(X)]` for `X ~ N(0, σ²)`, i.e. `(n−1)!! (σ²−1)^{n/2} / sqrt(n!)` for
/// even `n`, zero for odd `n`.
pub fn gaussian_hermite_coefficients(sigma2: f64, n_max: usize) -> Vec<f64> {
    let mut c = vec![0.0; n_max + 1];
    c[0] = 1.0;
    let mut n = 0;
    while n + 2 <= n_max {
        c[n + 2] = c[n] * (sigma2 - 1.0) * ((n + 1) as f64 / (n + 2) as f64).sqrt();
        n += 2;
    }
    c
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChiSquare {
    /// `‖(f₀ − M)/M‖*²` exactly.
    pub exact: f64,
    /// The three-term telescoped upper bound.
    pub telescoped_bound: f64,
}

fn validate_sigma(sigma2: f64) -> Result<()> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::InvalidVariance(sigma2));
    }
    if sigma2 >= 2.0 {
        return Err(Error::ChiSquareDivergent(sigma2));
    }
    Ok(())
}

/// Exact chi-square distance of the product Gaussian `∏ g_{σᵢ}(vᵢ)` from `M`,
/// with the telescoped bound for comparison.
pub fn chi_square_product_gaussian(sigma2: [f64; 3]) -> Result<ChiSquare> {
    for s in sigma2 {
        validate_sigma(s)?;
    }
    let a = sigma2.map(|s| 1.0 / (s * (2.0 - s)).sqrt());
    let exact = a[0] * a[1] * a[2] - 1.0;
    let telescoped_bound = 3.0 * a[1] * a[2] * (a[0] - 1.0) + 3.0 * a[2] * (a[1] - 1.0) + 3.0 * (a[2] - 1.0);
    Ok(ChiSquare { exact, telescoped_bound })
}

#[derive(Clone, Debug)]
pub struct ProductGaussianState {
    pub state: StateVector,
    pub chi_square: ChiSquare,
    /// `‖h₀‖*² − Σ c_α²`, the part of the norm outside the truncated basis.
    pub truncation_error: f64,
}

/// Coefficients of `h₀ = f₀/M − 1` for the product Gaussian initial datum.
pub fn product_gaussian_state(sigma2: [f64; 3], basis: &HermiteBasis) -> Result<ProductGaussianState> {
    for s in sigma2 {
        validate_sigma(s)?;
    }
    let total: f64 = sigma2.iter().sum();
    if (total - 3.0).abs() > 1e-12 {
        return Err(Error::EnergyNormalization(total));
    }
    let chi = chi_square_product_gaussian(sigma2)?;
    let one_d = sigma2.map(|s| gaussian_hermite_coefficients(s, basis.degree()));
    let coeffs: Vec<f64> = basis
        .indices()
        .iter()
        .map(|a| {
            if *a == [0, 0, 0] {
                0.0
            } else {
                one_d[0][a[0] as usize] * one_d[1][a[1] as usize] * one_d[2][a[2] as usize]
            }
        })
        .collect();
    let state = StateVector::from_coeffs(basis, coeffs)?;
    let truncation_error = chi.exact - state.norm_sq();
    Ok(ProductGaussianState {
        state,
        chi_square: chi,
        truncation_error,
    })
}

/// Interval for each `σᵢ²` that keeps the product Gaussian in the ball of
/// radius `δ`: `1 ± δ sqrt(42 + δ²)/(21 + δ²)`.
pub fn admissible_sigma_interval(delta: f64) -> (f64, f64) {
    let r = delta * (42.0 + delta * delta).sqrt() / (21.0 + delta * delta);
    (1.0 - r, 1.0 + r)
}

/// Certified upper bound `‖h‖*` on `‖f − M‖₁`.
pub fn l1_upper_bound(state: &StateVector) -> f64 {
    state.norm()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct L1Estimate {
    pub value: f64,
    pub delta: f64,
    pub order: usize,
    pub flagged: bool,
}

/// Tolerance on the order-doubling change of the L¹ estimate.
pub const L1_DOUBLING_TOL: f64 = 1e-4;

fn l1_at_order(basis: &HermiteBasis, state: &StateVector, q: usize) -> f64 {
    let (x, w) = gauss_hermite(q);
    let n = basis.degree();
    let table: Vec<Vec<f64>> = x.iter().map(|&xi| hermite_values(xi, n)).collect();
    // staged contraction: g[a1][a2][k] = Σ_{a3} c_α ĥ_{a3}(x_k)
    let mut g = vec![0.0; (n + 1) * (n + 1) * q];
    for (a, c) in basis.indices().iter().zip(state.coeffs()) {
        if *c == 0.0 {
            continue;
        }
        let base = (a[0] as usize * (n + 1) + a[1] as usize) * q;
        for k in 0..q {
            g[base + k] += c * table[k][a[2] as usize];
        }
    }
    (0..q)
        .into_par_iter()
        .map(|i| {
            // f[a2][k] = Σ_{a1} ĥ_{a1}(x_i) g[a1][a2][k]
            let mut f = vec![0.0; (n + 1) * q];
            for a1 in 0..=n {
                let h1 = table[i][a1];
                for a2 in 0..=n - a1 {
                    let src = &g[(a1 * (n + 1) + a2) * q..(a1 * (n + 1) + a2 + 1) * q];
                    let dst = &mut f[a2 * q..(a2 + 1) * q];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += h1 * s;
                    }
                }
            }
            let mut acc = 0.0;
            for j in 0..q {
                let mut row = 0.0;
                for k in 0..q {
                    let mut h = 0.0;
                    for a2 in 0..=n {
                        h += table[j][a2] * f[a2 * q + k];
                    }
                    row += w[k] * h.abs();
                }
                acc += w[j] * row;
            }
            w[i] * acc
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .sum()
}

/// Tensor Gauss–Hermite estimate of `∫ |h| M dv = ‖f − M‖₁`.
///
/// Starts at order `quad_order`, doubles once, and doubles again if the
/// change exceeds [`L1_DOUBLING_TOL`]; still exceeding it after that flags the
/// estimate.
pub fn l1_estimate(basis: &HermiteBasis, state: &StateVector, quad_order: usize) -> Result<L1Estimate> {
    if quad_order < basis.degree() + 4 {
        return Err(Error::InvalidArgument(format!(
            "quadrature order {quad_order} below basis degree + 4"
        )));
    }
    let mut q = quad_order;
    let mut prev = l1_at_order(basis, state, q);
    let mut delta = f64::INFINITY;
    for _ in 0..2 {
        q *= 2;
        let next = l1_at_order(basis, state, q);
        delta = (next - prev).abs();
        prev = next;
        if delta <= L1_DOUBLING_TOL {
            break;
        }
    }
    Ok(L1Estimate {
        value: prev,
        delta,
        order: q,
        flagged: delta > L1_DOUBLING_TOL,
    })
}
