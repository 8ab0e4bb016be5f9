//! Ollivier curvature, discrete ADM mass and rigidity diagnostics on weighted
//! graphs, weighted grid graphs and discrete tori.

pub mod acceptance;
pub mod error;
pub mod fit;
pub mod graph;
pub mod instances;
pub mod grid;
pub mod ollivier;
pub mod par;
pub mod salami;
pub mod scalar;
pub mod torus;

pub use error::{Error, Result};
pub use graph::{GraphBuilder, PotentialFunction, VertexId, WeightedGraph};
pub use scalar::{NumericMode, Rational, Scalar};
