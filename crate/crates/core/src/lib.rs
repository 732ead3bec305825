//! A frame-based knowledge engine: clouds of knowledge sources with slot
//! trees, dynamic relations that share attributes between them, lines of
//! thought that walk the knowledge in a fixed order, forward chaining, and
//! traces that explain each step.

pub mod drel;
pub mod elaboration;
pub mod engine;
pub mod error;
pub mod expr;
pub mod inference;
pub mod ksynth;
pub mod lot;
pub mod model;
pub mod packs;
pub mod risk;
pub mod trace;
pub mod xai;

pub use engine::{Engine, Limits, Registry};
pub use error::{Error, Result};
