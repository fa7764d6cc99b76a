//! Ground spaces, their localizing sequences, and the region catalogue.
//!
//! A set is bounded when it sits inside some K_m. [`GroundSpace::is_bounded`]
//! returns the smallest such m as a witness.

mod region;
mod space;

pub use region::{CompiledRegion, Region};
pub use space::{GroundSpace, MetricChoice, Point, SpaceKind};

pub(crate) use space::smallest_level;
