//! Exact computation of total Milnor invariants of pure braids, tree
//! Jacobi diagrams, and the Koszul homology of free nilpotent Lie algebras.

pub mod error;
pub mod expansion;
pub mod freegroup;
pub mod koszul;
pub mod lie;
pub mod linalg;
pub mod milnor;
pub mod morita;
pub mod rational;
pub mod tensor;
pub mod trees;

pub use error::{Error, Result};
pub use rational::Q;

/// Process-wide memo table keyed by shape parameters.
pub(crate) type Memo<K, V> = std::sync::OnceLock<std::sync::RwLock<std::collections::HashMap<K, std::sync::Arc<V>>>>;
