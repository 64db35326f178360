//! Graph-based fair division of indivisible items: envy predicates, EFX
//! solvers, constructive G-EFX algorithms, hidden-envy allocation and the
//! sweeping heuristic for paths.

pub mod construct;
pub mod envy;
pub mod error;
pub mod gen;
pub mod graph;
pub mod hef;
pub mod io;
pub mod model;
pub mod rational;
pub mod search;
pub mod shape;
pub mod solvers;
pub mod sweep;

pub use error::{Error, Result};
pub use graph::{Graph, VertexSet};
pub use model::{Allocation, AgentId, Bundle, HiddenSet, Instance, Item, ItemId, ItemKind, Valuation};
pub use rational::Rational;
