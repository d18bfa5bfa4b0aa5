//! A differentiable query engine over weighted knowledge bases.
//!
//! Queries denote weighted multisets of typed entities. Relations are sparse
//! matrices, so every query operator is a sparse-dense product or an
//! elementwise op, and whole queries can be differentiated with respect to
//! their parameters.

pub mod error;
pub mod graph;
pub mod io;
pub mod kb;
pub mod learning;
pub mod query;
pub mod sparse;

pub use error::{NqlError, Result, ShapeError};
pub use graph::{Constraint, Graph, MultisetExpr, ParamId, ParamStore, Tensor};
pub use kb::{build_kb, format_multiset, try_build_kb, KnowledgeBase};
pub use query::{parse, parse_program, Query};
pub use sparse::{DenseBatch, SparseMatrix};
