//! Vague convergence of locally finite measures on metric spaces with a chosen
//! boundedness: regions and levels, measures, distances, test functions,
//! convergence checks and random measure generators.

pub mod boundedness;
pub mod convergence;
pub mod error;
pub mod measures;
pub mod metrics;
pub mod random_measures;
pub mod rng;
pub mod selftest;
pub mod test_functions;
mod serde_ext;

pub use boundedness::{CompiledRegion, GroundSpace, MetricChoice, Point, Region, SpaceKind};
pub use error::{Error, Result};
pub use measures::{Atom, DiscreteMeasure, LocallyFiniteMeasure};
pub use test_functions::{FnExpr, FunctionFamily, TestFunction};
