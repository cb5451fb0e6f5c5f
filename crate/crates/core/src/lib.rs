//! Balanced minimal evolution (BME) polytope toolkit.
//!
//! - [`trees`]: unrooted phylogenetic trees, Newick I/O, enumeration.
//! - [`coords`]: tree vectors `x(t)`, Kraft equalities, topological distances.
//! - [`facets`]: facet families, the splitohedron catalog, tightness and rank checks.
//! - [`kp`]: permutoassociahedron faces and the map onto tree-faces.
//! - [`lp`]: exact rational simplex.
//! - [`solver`]: exhaustive, neighbor-joining and branch-and-bound BME reconstruction.
//!
//! All polytope arithmetic is exact.

pub mod coords;
pub mod error;
pub mod exact;
pub mod facets;
pub mod kp;
pub mod lp;
pub mod solver;
pub mod trees;

pub use coords::{CoordVector, KraftReport};
pub use error::{BmeError, Result};
pub use facets::{Family, LinearInequality, Sense};
pub use kp::{KPFace, PlaneTree};
pub use trees::{Leaf, PhyloTree, Split};
pub use lp::{LpProblem, LpResult, LpStatus};
pub use solver::{BnbCertificate, BnbConfig, DistanceMatrix};
