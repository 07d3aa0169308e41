//! Affine λ-equidistants of parametrized submanifolds and the contact germs
//! that describe their singularities.
//!
//! * [`jet`]: truncated multivariate polynomials and map-germs, generic over [`Scalar`].
//! * [`algebra`]: local algebras, corank, K_e-codimension, miniversal bases, rank-0 reduction.
//! * [`classify`]: catalogue of K-simple germs, recognition, stable singularity lists.
//! * [`contact`]: λ-reflection, contact maps, the local λ-point map and ring comparisons.
//! * [`geometry`]: curves and surfaces, parallel pairs, equidistant tracing, cusp/node detection.
//! * [`io`]: JSON, CSV and SVG formats.

pub mod algebra;
pub mod classify;
pub mod contact;
pub mod error;
pub mod geometry;
pub mod io;
pub mod jet;
pub mod linalg;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Exact coefficient field used by the algebra.
pub type Rational = num_rational::BigRational;

/// Exact truncated polynomial.
pub type Jet = jet::JetPoly<Rational>;
/// Exact map-germ.
pub type Germ = jet::MapGerm<Rational>;
/// Exact graph-pair data in adapted coordinates.
pub type Pair = contact::GraphPair<Rational>;

/// Floating-point truncated polynomial (Taylor jets of parametrizations).
pub type JetF64 = jet::JetPoly<f64>;
/// Floating-point map-germ.
pub type GermF64 = jet::MapGerm<f64>;
/// Floating-point graph-pair data.
pub type PairF64 = contact::GraphPair<f64>;
