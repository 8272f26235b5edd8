//! Evolution of `ḣ = L h + R[h, h]` on `H₀` and the decay checks near
//! equilibrium.

mod bounds;
mod integrate;
mod picard;
mod semigroup;
mod theorem;

pub use bounds::{c_star, decay_rate_fit, riccati_envelope, RateFit};
pub use integrate::{integrate, union_grid, IntegrateOptions, Trajectory};
pub use picard::{picard_solve, PicardOptions, PicardResult, PicardWindow};
pub use semigroup::Semigroup;
pub use theorem::{theorem_check, trajectory_csv, trajectory_rows, Clause, TheoremOptions, TheoremReport, TheoremRow};

use serde::Serialize;

use crate::basis::{product_gaussian_state, random_h0_state, HermiteBasis, InvariantProjector, StateVector};
use crate::error::{Error, Result};
use crate::operators::LMatrix;

/// Initial perturbation `h₀`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum InitialCondition {
    Zero,
    /// Top `H₀` eigenvector of `L`, scaled to the requested norm.
    GapEigvec,
    /// Gaussian random direction in `H₀`, scaled to the requested norm.
    Random(u64),
    /// `f₀/M − 1` for a product Gaussian with the given variances (unscaled).
    ProductGaussian([f64; 3]),
}

impl InitialCondition {
    /// Parses `zero`, `gap-eigvec`, `random(<seed>)` or
    /// `product-gaussian(<s1>,<s2>,<s3>)`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidArgument(format!("unknown initial condition '{s}'"));
        let inner = |prefix: &str| {
            s.strip_prefix(prefix)
                .and_then(|r| r.trim().strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
        };
        match s {
            "zero" => return Ok(Self::Zero),
            "gap-eigvec" => return Ok(Self::GapEigvec),
            _ => {}
        }
        if let Some(seed) = inner("random") {
            return Ok(Self::Random(seed.trim().parse().map_err(|_| bad())?));
        }
        if let Some(list) = inner("product-gaussian") {
            let v: Vec<f64> = list
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad())?;
            if v.len() != 3 {
                return Err(bad());
            }
            return Ok(Self::ProductGaussian([v[0], v[1], v[2]]));
        }
        Err(bad())
    }

    /// Builds the state; `norm` applies to the scaled kinds.
    pub fn build(&self, basis: &HermiteBasis, l: &LMatrix, norm: f64) -> Result<StateVector> {
        Ok(match self {
            Self::Zero => basis.zero_state(),
            Self::GapEigvec => l.gap_eigenvector(basis).scale(norm),
            Self::Random(seed) => {
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
                random_h0_state(basis, &InvariantProjector::new(basis), &mut rng, norm)
            }
            Self::ProductGaussian(s) => product_gaussian_state(*s, basis)?.state,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_initial_conditions() {
        assert_eq!(InitialCondition::parse("zero").unwrap(), InitialCondition::Zero);
        assert_eq!(InitialCondition::parse(" random(7) ").unwrap(), InitialCondition::Random(7));
        assert_eq!(
            InitialCondition::parse("product-gaussian(1.1, 1, 0.9)").unwrap(),
            InitialCondition::ProductGaussian([1.1, 1.0, 0.9])
        );
        assert!(InitialCondition::parse("random(x)").is_err());
        assert!(InitialCondition::parse("product-gaussian(1,2)").is_err());
    }
}
