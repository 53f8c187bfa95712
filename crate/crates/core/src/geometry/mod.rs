//! Charts, vector fields, forms and distributions, with symbolic linear
//! algebra whose pivot and rank decisions are made numerically.

mod chart;
mod distribution;
mod field;
mod form;
mod matrix;
pub mod pointwise;

pub use chart::{Chart, ChartError, Coordinate, Role};
pub use distribution::{tidy, Distribution, Frame, Integrability};
pub use field::{FieldError, OneForm, VectorField};
pub use form::{AltForm, NumForm};
pub use matrix::{clear_denominators, SymMatrix};

use crate::expr::{EvalError, Evaluator};

/// Runs `f` at `rank_samples` sample points, skipping points where it hits a
/// pole. Returns (point index, result) pairs.
pub fn at_points<T>(ev: &Evaluator, f: impl Fn(usize) -> Result<T, EvalError>) -> Vec<(usize, T)> {
    let want = ev.config.rank_samples.max(1);
    let mut out = Vec::with_capacity(want);
    let mut k = 0;
    while out.len() < want && k < 16 * want + 16 {
        if let Ok(v) = f(k) {
            out.push((k, v));
        }
        k += 1;
    }
    if out.len() < want {
        ev.warn("too many sample points fell on poles; results use fewer points");
    }
    out
}
