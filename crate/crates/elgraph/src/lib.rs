//! Elastic principal graphs for multidimensional data approximation.
//!
//! A dataset in R^m is approximated by an embedded graph carrying a
//! quadratic elastic energy: edges resist stretching, k-stars resist
//! bending. Fitting alternates nearest-vertex partitioning with an exact
//! sparse quadratic solve. Topology grows by a two-rule graph grammar
//! ("add a node to a node", "bisect an edge"): at every step the rule
//! application whose trial optimization yields the lowest total energy is
//! applied, producing principal curves and principal trees. Cartesian
//! products of factor graphs extend the same machinery to principal cubic
//! complexes whose dimension adapts to the data.

pub mod datasets;
pub mod energy;
pub mod error;
pub mod factorized;
pub mod grammar;
pub mod graph;
pub mod io;
pub mod optimizer;
pub mod pca;
pub mod run;
pub mod svg;

pub use error::{Error, Result};
