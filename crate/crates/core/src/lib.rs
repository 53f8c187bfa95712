//! Distribution geometry for nonlinear control systems: derived flags,
//! Goursat bundle recognition, symmetry reduction and linearizability tests.

pub mod catalog;
pub mod expr;
pub mod flags;
pub mod geometry;
pub mod goursat;
pub mod numeric;
pub mod sgs;
pub mod symmetry;

pub use expr::{parse, Evaluator, Expr, SampleConfig};
