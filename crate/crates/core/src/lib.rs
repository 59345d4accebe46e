//! Reverse mapping of user insights onto attribution explanations.
//!
//! A free-form observation about a feature-attribution chart is turned into a
//! [`StructuredInsight`], checked against the explanation table by the
//! [`evaluate`] module, and projected back onto the chart as annotation layers
//! plus, when the current chart is a poor fit, a recommended coordinated view.

pub mod attribution;
pub mod evaluate;
pub mod grammar;
pub mod insight;
pub mod json;
pub mod mapper;
pub mod scalar;
pub mod vis;
pub mod synthetic;

pub use attribution::{ExplanationTable, FeatureMeta, TableError, TableFormat};
pub use insight::{BoundInsight, SlotStatus, StructuredInsight};
pub use scalar::Scalar;

/// Double-precision explanation table, the default everywhere.
pub type Table = ExplanationTable<f64>;
/// Single-precision explanation table.
pub type Table32 = ExplanationTable<f32>;
