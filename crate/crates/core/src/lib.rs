//! Galerkin toolkit for the spatially homogeneous Boltzmann equation with
//! Maxwellian molecules, linearized around the standard Maxwellian.
//!
//! The perturbation `h = f/M - 1` is expanded in orthonormal tensor Hermite
//! polynomials. The linearized operator and the quadratic remainder are
//! assembled exactly, the perturbation equation is evolved with an
//! exponential integrator and with a Picard scheme on the Duhamel formula,
//! and the decay estimates near equilibrium are checked on the results.

pub mod basis;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod io;
pub mod kernel;
pub mod operators;
pub mod polyalg;
pub mod quadrature;

pub use basis::{HermiteBasis, InvariantProjector, StateVector};
pub use error::{Error, Result};
pub use kernel::CollisionKernel;
pub use operators::{LMatrix, RTensor};
