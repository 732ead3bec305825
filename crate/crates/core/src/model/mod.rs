//! In-memory knowledge representation: clouds, knowledge sources, slot
//! trees, dimensions, junctures and the version log.

mod digest;
mod kb;
mod path;
mod value;

pub use digest::Digest;
pub(crate) use kb::{insert_at, lookup, remove_at};
pub use kb::{
    AttractorBinding, Cloud, Dimension, FunctionLogEntry, Juncture, KnowledgeBase, KnowledgeSource, Logged, Pulse,
    ResponderBinding, Tick, VersionEntry,
};
pub use path::{check_appellation, is_appellation, is_slot_name, KLinePath, SlotPath};
pub use value::{render_plain, SlotMap, SlotValue};
