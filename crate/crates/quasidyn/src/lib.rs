//! Numerical toolkit for quasi-Poisson structures on spaces with a Lie group
//! action, their reduction along cross-sections to dynamical r-matrix data,
//! and the Fock-Rosly bracket on moduli of flat connections.
//!
//! Everything is generic over a real [`Scalar`] (`f32` or `f64`); the `F64`
//! aliases below fix the usual choice.

// index loops mirror the tensor formulas they implement
#![allow(clippy::needless_range_loop)]

pub mod drmatrix;
pub mod error;
pub mod fockrosly;
pub mod group;
pub mod gspace;
pub mod liealg;
pub mod manifold;
pub mod multivector;
pub mod quasipoisson;
pub mod sample;
pub mod scalar;
pub mod schouten;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type LieAlgebraF64 = liealg::QuadraticLieAlgebra<f64>;
pub type MultivectorF64 = multivector::Multivector<f64>;
pub type PointF64 = manifold::Point<f64>;
pub type ProductManifoldF64 = manifold::ProductManifold<f64>;
pub type FramedFieldF64 = manifold::FramedField<f64>;
pub type CrossSectionF64 = manifold::CrossSection<f64>;
pub type ConjugacyClassF64 = group::ConjugacyClass<f64>;
pub type QuasiPoissonSpaceF64 = quasipoisson::QuasiPoissonSpace<f64>;
pub type DynamicalTripleF64 = drmatrix::DynamicalTriple<f64>;
pub type TripleValueF64 = drmatrix::TripleValue<f64>;
pub type ModuliDataF64 = drmatrix::ModuliData<f64>;
pub type ClassicalDynamicalRMatrixF64 = gspace::ClassicalDynamicalRMatrix<f64>;
