//! Galerkin matrices of the linearized collision operator `L` and the
//! quadratic remainder `R`, their validation routes and property checks.

mod assembly;
pub mod direct;
pub mod oracle;
pub mod verify;

pub use assembly::{gain, rotation_coefficient, symmetric_entry, ReflectionBlocks};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{HermiteBasis, InvariantProjector, StateVector};
use crate::error::{Error, Result};
use crate::io::fmt17;
use crate::kernel::CollisionKernel;

/// `(L φ_α, φ_γ)*` with the spectrum of `L` restricted to `H₀`.
#[derive(Clone, Debug)]
pub struct LMatrix {
    degree: usize,
    matrix: DMatrix<f64>,
    /// H₀ eigenvalues, descending.
    eigenvalues: Vec<f64>,
    /// Matching orthonormal eigenvectors in full basis coordinates (columns).
    eigenvectors: DMatrix<f64>,
}

/// Assembles `L` on `basis` and diagonalizes it on `H₀`.
pub fn assemble_l(kernel: &CollisionKernel, basis: &HermiteBasis) -> Result<LMatrix> {
    let matrix = assembly::l_entries(kernel, basis)?;
    LMatrix::from_matrix(basis, matrix)
}

impl LMatrix {
    pub fn from_matrix(basis: &HermiteBasis, matrix: DMatrix<f64>) -> Result<Self> {
        let n = basis.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: matrix.nrows(),
            });
        }
        let q = InvariantProjector::new(basis).complement().clone();
        let mut reduced = q.transpose() * &matrix * &q;
        // exact symmetry for the eigen-solver; the residual is reported separately
        let rt = reduced.transpose();
        reduced = (reduced + rt) * 0.5;
        let eig = SymmetricEigen::new(reduced);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vecs = DMatrix::zeros(q.ncols(), order.len());
        for (c, &i) in order.iter().enumerate() {
            let mut col = eig.eigenvectors.column(i).clone_owned();
            // deterministic sign: largest-magnitude component positive
            let imax = col.iamax();
            if col[imax] < 0.0 {
                col = -col;
            }
            vecs.set_column(c, &col);
        }
        Ok(Self {
            degree: basis.degree(),
            matrix,
            eigenvalues,
            eigenvectors: q * vecs,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// Largest eigenvalue on `H₀`.
    pub fn top_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Eigenvector `k` (descending order) as a unit state.
    pub fn eigenvector(&self, basis: &HermiteBasis, k: usize) -> StateVector {
        StateVector::from_coeffs(basis, self.eigenvectors.column(k).iter().copied().collect()).expect("sized")
    }

    pub fn gap_eigenvector(&self, basis: &HermiteBasis) -> StateVector {
        self.eigenvector(basis, 0)
    }

    /// Multiplicity of the top eigenvalue within `tol`.
    pub fn top_multiplicity(&self, tol: f64) -> usize {
        let top = self.top_eigenvalue();
        self.eigenvalues.iter().take_while(|&&l| (l - top).abs() <= tol).count()
    }

    /// Polynomial degree carrying most of the weight of eigenvector `k`.
    pub fn mode_degree(&self, basis: &HermiteBasis, k: usize) -> usize {
        let col = self.eigenvectors.column(k);
        (0..=basis.degree())
            .map(|n| (n, basis.block(n).map(|i| col[i] * col[i]).sum::<f64>()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(n, _)| n)
            .unwrap_or(0)
    }

    /// Dominant degrees of all eigenvectors sharing the top eigenvalue.
    pub fn top_mode_degrees(&self, basis: &HermiteBasis, tol: f64) -> Vec<usize> {
        (0..self.top_multiplicity(tol)).map(|k| self.mode_degree(basis, k)).collect()
    }

    pub fn apply(&self, x: &StateVector) -> StateVector {
        let y = &self.matrix * DVector::from_column_slice(x.coeffs());
        StateVector::from_coeffs_unchecked(x.degree(), y.iter().copied().collect())
    }

    /// `(L φ, φ)* / ‖φ‖*²`.
    pub fn rayleigh_quotient(&self, phi: &StateVector) -> f64 {
        self.apply(phi).dot(phi) / phi.norm_sq()
    }

    /// `max |L − Lᵀ|`.
    pub fn symmetry_residual(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).abs().max()
    }

    /// Largest entry of `L u` and `uᵀ L` over the invariant vectors `u`.
    pub fn invariant_residual(&self, projector: &InvariantProjector) -> f64 {
        let mut worst: f64 = 0.0;
        for v in projector.vectors() {
            let u = DVector::from_column_slice(v);
            worst = worst.max((&self.matrix * &u).abs().max());
            worst = worst.max((self.matrix.transpose() * &u).abs().max());
        }
        worst
    }

    /// Text export: `alpha1 alpha2 alpha3 gamma1 gamma2 gamma3 value` per
    /// nonzero entry, row index γ first.
    pub fn to_text(&self, basis: &HermiteBasis) -> String {
        let mut s = String::from("# gamma1 gamma2 gamma3 alpha1 alpha2 alpha3 value\n");
        for g in 0..self.dim() {
            for a in 0..self.dim() {
                let v = self.matrix[(g, a)];
                if v != 0.0 {
                    let (gi, ai) = (basis.index(g), basis.index(a));
                    s.push_str(&format!(
                        "{} {} {} {} {} {} {}\n",
                        gi[0],
                        gi[1],
                        gi[2],
                        ai[0],
                        ai[1],
                        ai[2],
                        fmt17(v)
                    ));
                }
            }
        }
        s
    }
}

/// Sparse coefficients `T_{αβγ} = (R[φ_α, φ_β], φ_γ)*`, symmetric in `(α, β)`.
#[derive(Clone, Debug)]
pub struct RTensor {
    degree: usize,
    dim: usize,
    rows: Vec<Vec<(u32, u32, f64)>>,
}

/// Assembles the symmetrized quadratic remainder on `basis`.
pub fn assemble_r(kernel: &CollisionKernel, basis: &HermiteBasis) -> Result<RTensor> {
    Ok(RTensor {
        degree: basis.degree(),
        dim: basis.len(),
        rows: assembly::r_entries(kernel, basis)?,
    })
}

impl RTensor {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    /// Nonzero `(α, β, T_{αβγ})` for output index γ.
    pub fn row(&self, gamma: usize) -> &[(u32, u32, f64)] {
        &self.rows[gamma]
    }

    pub fn get(&self, alpha: usize, beta: usize, gamma: usize) -> f64 {
        let row = &self.rows[gamma];
        row.binary_search_by_key(&(alpha as u32, beta as u32), |&(a, b, _)| (a, b))
            .map(|i| row[i].2)
            .unwrap_or(0.0)
    }

    /// `max |T_{αβγ} − T_{βαγ}|`.
    pub fn symmetry_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (g, row) in self.rows.iter().enumerate() {
            for &(a, b, v) in row {
                worst = worst.max((v - self.get(b as usize, a as usize, g)).abs());
            }
        }
        worst
    }

    /// `z_γ = Σ_{αβ} T_{αβγ} x_α y_β`.
    pub fn apply(&self, x: &StateVector, y: &StateVector) -> Result<StateVector> {
        for s in [x, y] {
            if s.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: s.len(),
                });
            }
        }
        Ok(StateVector::from_coeffs_unchecked(self.degree, self.apply_slices(x.coeffs(), y.coeffs())))
    }

    pub(crate) fn apply_slices(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        self.rows
            .par_iter()
            .map(|row| row.iter().map(|&(a, b, v)| v * x[a as usize] * y[b as usize]).sum())
            .collect()
    }

    /// `(R[φ, ψ], ρ)*`.
    pub fn trilinear(&self, phi: &StateVector, psi: &StateVector, rho: &StateVector) -> Result<f64> {
        Ok(self.apply(phi, psi)?.dot(rho))
    }

    /// Text export: nine index components and the value per nonzero entry.
    pub fn to_text(&self, basis: &HermiteBasis) -> String {
        let mut s = String::from("# alpha1 alpha2 alpha3 beta1 beta2 beta3 gamma1 gamma2 gamma3 value\n");
        for (g, row) in self.rows.iter().enumerate() {
            let gi = basis.index(g);
            for &(a, b, v) in row {
                let (ai, bi) = (basis.index(a as usize), basis.index(b as usize));
                s.push_str(&format!(
                    "{} {} {} {} {} {} {} {} {} {}\n",
                    ai[0],
                    ai[1],
                    ai[2],
                    bi[0],
                    bi[1],
                    bi[2],
                    gi[0],
                    gi[1],
                    gi[2],
                    fmt17(v)
                ));
            }
        }
        s
    }
}

/// Summary written next to the text exports.
#[derive(Clone, Debug, Serialize)]
pub struct AssemblySummary {
    pub kernel: String,
    pub degree: usize,
    pub dimension: usize,
    pub l_symmetry_residual: f64,
    pub l_invariant_residual: f64,
    pub r_symmetry_residual: f64,
    pub r_nonzeros: usize,
    pub top_eigenvalues: Vec<f64>,
    pub spectral_gap: f64,
    pub gap_mode_degree: usize,
    pub gap_multiplicity: usize,
    pub gap_mode_degrees: Vec<usize>,
}

impl AssemblySummary {
    pub fn new(kernel: &CollisionKernel, basis: &HermiteBasis, l: &LMatrix, r: &RTensor) -> Result<Self> {
        let projector = InvariantProjector::new(basis);
        Ok(Self {
            kernel: kernel.name().to_string(),
            degree: basis.degree(),
            dimension: basis.len(),
            l_symmetry_residual: l.symmetry_residual(),
            l_invariant_residual: l.invariant_residual(&projector),
            r_symmetry_residual: r.symmetry_residual(),
            r_nonzeros: r.nnz(),
            top_eigenvalues: l.eigenvalues().iter().take(10).copied().collect(),
            spectral_gap: kernel.spectral_gap()?,
            gap_mode_degree: l.mode_degree(basis, 0),
            gap_multiplicity: l.top_multiplicity(1e-9),
            gap_mode_degrees: l.top_mode_degrees(basis, 1e-9),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{random_h0_state, random_state};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(kernel: &str, n: usize) -> (CollisionKernel, HermiteBasis, LMatrix, RTensor) {
        let k = CollisionKernel::builtin(kernel).unwrap();
        let b = HermiteBasis::new(n).unwrap();
        let l = assemble_l(&k, &b).unwrap();
        let r = assemble_r(&k, &b).unwrap();
        (k, b, l, r)
    }

    #[test]
    fn l_annihilates_energy() {
        let (_, b, l, _) = setup("linear", 4);
        let s = 2f64.sqrt();
        let mut e = vec![0.0; b.len()];
        e[0] = 3.0;
        for a in [[2, 0, 0], [0, 2, 0], [0, 0, 2]] {
            e[b.position(a).unwrap()] = s;
        }
        let out = l.apply(&StateVector::from_coeffs(&b, e).unwrap());
        assert!(out.norm() < 1e-12);
    }

    #[test]
    fn gap_for_both_kernels() {
        for (name, gap) in [("linear", -1.0 / 3.0), ("quintic", -0.4)] {
            for n in [4, 6] {
                let (_, b, l, _) = setup(name, n);
                assert!((l.top_eigenvalue() - gap).abs() < 1e-10, "{name} N={n}: {}", l.top_eigenvalue());
                assert_eq!(l.mode_degree(&b, 0), 3);
            }
        }
    }

    #[test]
    fn traceless_degree_two_eigenvalue() {
        // on traceless quadratics L acts as −3(mu_2 − mu_4)
        let (k, b, l, _) = setup("linear", 4);
        let mut x = vec![0.0; b.len()];
        x[b.position([1, 1, 0]).unwrap()] = 1.0;
        let y = l.apply(&StateVector::from_coeffs(&b, x.clone()).unwrap());
        let lam = -3.0 * (k.mu(2) - k.mu(4));
        for (yi, xi) in y.coeffs().iter().zip(&x) {
            assert!((yi - lam * xi).abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_pair_has_no_remainder() {
        let (_, b, _, r) = setup("quintic", 4);
        for g in 0..b.len() {
            assert!(r.get(0, 0, g).abs() < 1e-14);
        }
    }

    #[test]
    fn r_conserves_invariants_and_is_bounded() {
        let (_, b, _, r) = setup("linear", 5);
        let p = InvariantProjector::new(&b);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let x = random_state(&b, &mut rng);
            let y = random_state(&b, &mut rng);
            let z = r.apply(&x, &y).unwrap();
            assert!(p.residual(&z) < 1e-10 * x.norm() * y.norm());
            assert!(z.norm() <= 2.0 * x.norm() * y.norm());
        }
        assert_eq!(r.symmetry_residual(), 0.0);
    }

    #[test]
    fn r_output_degree_is_sum_of_input_degrees() {
        let (_, b, _, r) = setup("linear", 6);
        let deg = |i: usize| b.index(i).iter().map(|&x| x as usize).sum::<usize>();
        for g in 0..b.len() {
            for &(a, bb, _) in r.row(g) {
                assert_eq!(deg(a as usize) + deg(bb as usize), deg(g));
            }
        }
    }

    #[test]
    fn linearization_is_consistent_with_remainder() {
        // L = R[1,·] + R[·,1]
        let (_, b, l, r) = setup("quintic", 4);
        for a in 0..b.len() {
            for g in 0..b.len() {
                let via_r = r.get(0, a, g) + r.get(a, 0, g);
                assert!((l.matrix()[(g, a)] - via_r).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rayleigh_below_gap() {
        let (k, b, l, _) = setup("linear", 6);
        let p = InvariantProjector::new(&b);
        let gap = k.spectral_gap().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let x = random_h0_state(&b, &p, &mut rng, 1.0);
            assert!(l.rayleigh_quotient(&x) <= gap + 1e-10);
        }
    }

    #[test]
    fn text_exports_have_one_line_per_nonzero() {
        let (k, b, l, r) = setup("linear", 2);
        let lt = l.to_text(&b);
        let nnz = l.matrix().iter().filter(|v| **v != 0.0).count();
        assert_eq!(lt.lines().count(), nnz + 1);
        assert_eq!(r.to_text(&b).lines().count(), r.nnz() + 1);
        let s = AssemblySummary::new(&k, &b, &l, &r).unwrap();
        assert_eq!(s.dimension, 10);
    }
}
