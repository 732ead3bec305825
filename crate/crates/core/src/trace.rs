//! Append-only reasoning traces and their structured export.
//!
//! The structured form is line-delimited JSON: one header record
//! (`{"trace": {...}}`) followed by one record per event
//! (`{"event": {...}}`). Event records carry `index`, `tick`, `subject`
//! and a `kind` object tagged by `type`. Wall-clock time appears only in
//! the header's `wall_started_ms`, which normalization zeroes.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{Digest, KLinePath, Logged, SlotPath, SlotValue, Tick};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub tick: Tick,
    pub subject: String,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    LotStarted {
        lot: String,
        depth: usize,
    },
    JunctureTouched {
        juncture: String,
    },
    StepActivated {
        lot: String,
        step: usize,
        action: String,
        input_digest: Digest,
        explains: String,
    },
    RuleFired {
        rule: String,
        rule_set: String,
        bindings: Vec<(String, SlotValue)>,
        /// Klines consulted to justify the firing.
        reads: Vec<KLinePath>,
    },
    PulseEmitted {
        path: SlotPath,
        old: Logged,
        new: Logged,
    },
    ImpulseEmitted {
        target: String,
        reason: String,
    },
    CommandEmitted {
        name: String,
        args: Vec<SlotValue>,
    },
    FunctionLogged {
        function: String,
        seq: u64,
    },
    StepCompleted {
        lot: String,
        step: usize,
        output_digest: Digest,
        skipped: bool,
    },
    ForkTaken {
        fork: String,
        value: SlotValue,
        taken: String,
        untaken: Vec<String>,
    },
    LotFinished {
        lot: String,
    },
    Errored {
        lot: String,
        step: Option<usize>,
        error_kind: String,
        message: String,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::LotStarted { .. } => "lot_started",
            EventKind::JunctureTouched { .. } => "juncture_touched",
            EventKind::StepActivated { .. } => "step_activated",
            EventKind::RuleFired { .. } => "rule_fired",
            EventKind::PulseEmitted { .. } => "pulse_emitted",
            EventKind::ImpulseEmitted { .. } => "impulse_emitted",
            EventKind::CommandEmitted { .. } => "command_emitted",
            EventKind::FunctionLogged { .. } => "function_logged",
            EventKind::StepCompleted { .. } => "step_completed",
            EventKind::ForkTaken { .. } => "fork_taken",
            EventKind::LotFinished { .. } => "lot_finished",
            EventKind::Errored { .. } => "errored",
        }
    }
}

/// Error summary stored with an errored trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceError {
    pub kind: String,
    pub message: String,
    pub lot: String,
    pub step: Option<usize>,
    /// Position in a chained sequence, when the trace came from one.
    pub position: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningTrace {
    pub id: String,
    pub entry: String,
    pub start_tick: Tick,
    pub end_tick: Tick,
    pub wall_started_ms: u64,
    pub events: Vec<TraceEvent>,
    pub error: Option<TraceError>,
}

impl ReasoningTrace {
    pub fn new(id: impl Into<String>, entry: impl Into<String>, start_tick: Tick) -> Self {
        ReasoningTrace {
            id: id.into(),
            entry: entry.into(),
            start_tick,
            end_tick: start_tick,
            wall_started_ms: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0),
            events: Vec::new(),
            error: None,
        }
    }

    pub fn push(&mut self, tick: Tick, subject: impl Into<String>, kind: EventKind) {
        debug_assert!(self.events.last().is_none_or(|e| e.tick <= tick));
        self.end_tick = self.end_tick.max(tick);
        self.events.push(TraceEvent {
            tick,
            subject: subject.into(),
            kind,
        });
    }

    pub fn is_errored(&self) -> bool {
        self.error.is_some()
    }

    /// Knowledge sources activated, in order.
    pub fn activations(&self) -> Vec<&str> {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::StepActivated { .. }))
            .map(|e| e.subject.as_str())
            .collect()
    }

    pub fn forks(&self) -> impl Iterator<Item = &TraceEvent> {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::ForkTaken { .. }))
    }

    pub fn fired_rules(&self) -> Vec<&str> {
        self.events
            .iter()
            .filter_map(|e| match &e.kind {
                EventKind::RuleFired { rule, .. } => Some(rule.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Copy with wall-clock fields zeroed, for byte comparison.
    pub fn normalized(&self) -> ReasoningTrace {
        ReasoningTrace {
            wall_started_ms: 0,
            ..self.clone()
        }
    }

    pub(crate) fn record_error(&mut self, tick: Tick, lot: &str, step: Option<usize>, err: &Error) {
        self.push(
            tick,
            lot,
            EventKind::Errored {
                lot: lot.to_string(),
                step,
                error_kind: err.kind().to_string(),
                message: err.to_string(),
            },
        );
        self.error = Some(TraceError {
            kind: err.kind().to_string(),
            message: err.to_string(),
            lot: lot.to_string(),
            step,
            position: None,
        });
    }

    /// Line-delimited JSON export.
    pub fn to_structured(&self) -> String {
        #[derive(Serialize)]
        struct Header<'a> {
            id: &'a str,
            entry: &'a str,
            start_tick: Tick,
            end_tick: Tick,
            wall_started_ms: u64,
            events: usize,
            error: &'a Option<TraceError>,
        }
        #[derive(Serialize)]
        struct Line<'a> {
            index: usize,
            #[serde(flatten)]
            event: &'a TraceEvent,
        }
        let mut out = serde_json::json!({
            "trace": Header {
                id: &self.id,
                entry: &self.entry,
                start_tick: self.start_tick,
                end_tick: self.end_tick,
                wall_started_ms: self.wall_started_ms,
                events: self.events.len(),
                error: &self.error,
            }
        })
        .to_string();
        out.push('\n');
        for (index, event) in self.events.iter().enumerate() {
            out.push_str(&serde_json::json!({ "event": Line { index, event } }).to_string());
            out.push('\n');
        }
        out
    }

    /// Parses the structured export back into a trace.
    pub fn from_structured(text: &str) -> Result<ReasoningTrace, Error> {
        #[derive(Deserialize)]
        struct Header {
            id: String,
            entry: String,
            start_tick: Tick,
            end_tick: Tick,
            wall_started_ms: u64,
            error: Option<TraceError>,
        }
        #[derive(Deserialize)]
        struct HeaderLine {
            trace: Header,
        }
        #[derive(Deserialize)]
        struct EventLine {
            event: TraceEvent,
        }
        let bad = |line: usize, e: serde_json::Error| Error::Invalid(format!("trace line {line}: {e}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: HeaderLine = serde_json::from_str(lines.next().unwrap_or("")).map_err(|e| bad(1, e))?;
        let mut events = Vec::new();
        for (i, l) in lines.enumerate() {
            let ev: EventLine = serde_json::from_str(l).map_err(|e| bad(i + 2, e))?;
            events.push(ev.event);
        }
        let h = header.trace;
        Ok(ReasoningTrace {
            id: h.id,
            entry: h.entry,
            start_tick: h.start_tick,
            end_tick: h.end_tick,
            wall_started_ms: h.wall_started_ms,
            events,
            error: h.error,
        })
    }
}
