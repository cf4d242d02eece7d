//! Sublinear property testing of tree metrics through a counted distance
//! oracle.
//!
//! A hidden edge-weighted tree is reachable only through
//! [`DistanceOracle`], which answers exact path distances and counts the
//! distinct pairs asked. On top of it sit the recovery of the subtree spanned
//! by a sample ([`subtree`]), randomised tests for diameter, maximum degree,
//! leaf count and typical distance ([`testing`]), interval estimators built
//! from those tests ([`estimation`]) and a Monte-Carlo harness ([`harness`]).
//!
//! Weights are exact fixed-point integers (quantum `2^-32`); the core types
//! are generic over the integer width and [`Quanta`] is the default.

pub mod error;
pub mod estimation;
pub mod generate;
pub mod harness;
pub mod oracle;
pub mod rng;
pub mod scalar;
pub mod subtree;
pub mod testing;
pub mod tree;
pub mod verify;

pub use error::{Error, Result};
pub use estimation::{estimate, predicted_query_budget, EstimateResult, Property};
pub use generate::{generate_tree, Family, WeightScheme};
pub use oracle::{correlation_to_distance, DistanceOracle, QueryReceipt};
pub use scalar::{Weight, QUANTUM_BITS};
pub use subtree::{recover, SpannedSubtree};
pub use testing::{Decision, Sampling, TestKind, TestSpec, TestVerdict};
pub use tree::{VertexId, WeightedTree};

/// Default weight scalar.
pub type Quanta = u128;
pub type Tree = WeightedTree<Quanta>;
pub type Oracle<'t> = DistanceOracle<'t, Quanta>;
pub type Subtree = SpannedSubtree<Quanta>;
