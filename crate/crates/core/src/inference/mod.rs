//! Working memory, forward chaining, pattern templates, anomaly detection
//! and the responder / attractor event loop.

mod anomaly;
mod chain;
mod dispatch;
mod matcher;
mod ops;
mod rule;
mod template;
mod wm;

pub use anomaly::{detect_anomalies, AnomalyEvent, AnomalySpec, Bound};
pub use chain::{forward_chain, ChainOptions, ChainResult, Command, Effects, Firing, Impulse};
pub use dispatch::{dispatch, DispatchOutcome, Event};
pub use matcher::{bindings_key, match_patterns, MatchCtx};
pub use ops::{run_responder, OpCtx, OpFn, OperationRegistry, ParadigmFn, ParadigmRegistry};
pub use rule::{Action, Aggregate, Pattern, Rule, RuleBase, Term};
pub use template::{apply_template, match_template, BindingSet, GppbTemplate, OutputSpec};
pub use wm::{Fact, WorkingMemory};
