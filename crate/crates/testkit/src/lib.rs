//! Test oracles shared by the engine's integration tests and the CLI
//! acceptance suite. Nothing here calls engine evaluation code.

pub mod dense;
pub mod gen;
pub mod gradcheck;
pub mod malformed;
pub mod models;

pub use dense::{random_kb, DenseKb, RandomKb, RandomKbParams};
pub use gen::{syntax_query, typed_query, OpCounts, OpKind};
pub use gradcheck::{check_gradients, rel_error, GradReport};
pub use malformed::MALFORMED_QUERIES;

/// `|a - b| / max(|a|, |b|)`, zero when both are zero.
pub fn relative_difference(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
