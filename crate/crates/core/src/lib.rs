//! One-sided matching under Impartial Culture preferences.
//!
//! Simulates Serial Dictatorship, Naive Boston and Adaptive Boston on lazily
//! generated random preferences, evaluates their large-`n` limits, and
//! measures welfare and order bias both empirically and in the limit.

pub mod bias;
pub mod error;
pub mod limits;
pub mod mechanisms;
pub mod preferences;
pub mod trials;
pub mod welfare;

pub use error::{Error, Result};
pub use mechanisms::{run, Assignment, Mechanism};
pub use preferences::RngSpec;
pub use welfare::ScoringRule;
