use nalgebra::{DMatrix, DVector};

use crate::basis::StateVector;
use crate::error::{Error, Result};
use crate::operators::LMatrix;

/// Residual above which a state is not treated as lying in `H₀`.
pub(crate) const H0_TOL: f64 = 1e-10;

/// `e^{tL}` on `H₀` through the eigen-decomposition of `L`.
#[derive(Clone, Debug)]
pub struct Semigroup {
    eigenvalues: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl Semigroup {
    pub fn new(l: &LMatrix) -> Self {
        Self {
            eigenvalues: l.eigenvalues().to_vec(),
            vectors: l.eigenvectors().clone(),
        }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Mode coordinates `(h, e_k)*`.
    pub fn to_modes(&self, h: &[f64]) -> Vec<f64> {
        (self.vectors.transpose() * DVector::from_column_slice(h)).iter().copied().collect()
    }

    /// Full coefficients `Σ y_k e_k`.
    pub fn from_modes(&self, y: &[f64]) -> Vec<f64> {
        (&self.vectors * DVector::from_column_slice(y)).iter().copied().collect()
    }

    pub fn apply(&self, t: f64, g: &StateVector) -> Result<StateVector> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let n = g.len();
        if n != self.vectors.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.vectors.nrows(),
                got: n,
            });
        }
        let residual = invariant_residual_raw(g.coeffs(), n);
        if residual > H0_TOL {
            return Err(Error::NotInH0(residual));
        }
        let y: Vec<f64> = self
            .to_modes(g.coeffs())
            .iter()
            .zip(&self.eigenvalues)
            .map(|(y, l)| y * (l * t).exp())
            .collect();
        let mut out = g.clone();
        out.coeffs_mut().copy_from_slice(&self.from_modes(&y));
        Ok(out)
    }
}

/// Invariant residual straight from the basis layout: positions 0..4 hold
/// `1, v₁, v₂, v₃` and the pure squares sit at 4, 7 and 9.
pub(crate) fn invariant_residual_raw(c: &[f64], _n: usize) -> f64 {
    let e = (c[4] + c[7] + c[9]) / 3f64.sqrt();
    (c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + c[3] * c[3] + e * e).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{random_h0_state, HermiteBasis, InvariantProjector};
    use crate::kernel::CollisionKernel;
    use crate::operators::assemble_l;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn raw_residual_matches_projector() {
        let b = HermiteBasis::new(4).unwrap();
        let p = InvariantProjector::new(&b);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = crate::basis::random_state(&b, &mut rng);
        assert!((invariant_residual_raw(s.coeffs(), b.len()) - p.residual(&s)).abs() < 1e-14);
    }

    #[test]
    fn semigroup_examples_and_contraction() {
        let k = CollisionKernel::builtin("linear").unwrap();
        let b = HermiteBasis::new(6).unwrap();
        let l = assemble_l(&k, &b).unwrap();
        let s = Semigroup::new(&l);
        let p = InvariantProjector::new(&b);
        let gap = k.spectral_gap().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let g = random_h0_state(&b, &p, &mut rng, 0.3);
        assert!(s.apply(0.0, &g).unwrap().distance(&g) < 1e-14);
        assert!(matches!(s.apply(-1.0, &g), Err(Error::NegativeTime(_))));
        let e = l.gap_eigenvector(&b);
        let t = 2.5;
        let et = s.apply(t, &e).unwrap();
        assert!(et.distance(&e.scale((gap * t).exp())) < 1e-12);
        for _ in 0..100 {
            let t: f64 = rng.random::<f64>() * 10.0;
            let g = random_h0_state(&b, &p, &mut rng, 1.0);
            assert!(s.apply(t, &g).unwrap().norm() <= (gap * t).exp() * (1.0 + 1e-12));
        }
        let mut bad = g.clone();
        bad.coeffs_mut()[0] = 1.0;
        assert!(matches!(s.apply(1.0, &bad), Err(Error::NotInH0(_))));
    }
}
