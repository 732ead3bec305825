use serde::{Deserialize, Serialize};

use super::chain::Impulse;
use crate::error::{Error, Result};
use crate::ksynth::kline::resolve_kline_at;
use crate::model::{KLinePath, KnowledgeBase, Tick};

/// Normal operating range for one value. Bounds are inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalySpec {
    pub name: String,
    pub path: KLinePath,
    pub min: f64,
    pub max: f64,
    /// Line of thought to start when the range is violated.
    pub impulse: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyEvent {
    pub spec: String,
    pub path: KLinePath,
    pub value: f64,
    pub bound: Bound,
    pub limit: f64,
    pub tick: Tick,
}

impl AnomalyEvent {
    /// The activation this event raises, if its spec names a target.
    pub fn impulse(&self, spec: &AnomalySpec) -> Option<Impulse> {
        spec.impulse.as_ref().map(|target| Impulse {
            target: target.clone(),
            responder: None,
            reason: format!(
                "anomaly {} ({} bound)",
                self.spec,
                match self.bound {
                    Bound::Lower => "lower",
                    Bound::Upper => "upper",
                }
            ),
            tick: self.tick,
        })
    }
}

/// One event per value outside its range. Read-only.
pub fn detect_anomalies(kb: &KnowledgeBase, specs: &[AnomalySpec], tick: Tick) -> Result<Vec<AnomalyEvent>> {
    let mut out = Vec::new();
    for s in specs {
        let v = resolve_kline_at(kb, &s.path, None, tick).map_err(|e| match e {
            Error::UnknownSegment { .. } | Error::AmbiguousSegment { .. } | Error::Unresolvable { .. } => {
                Error::UnknownPath(s.path.to_string())
            }
            other => other,
        })?;
        let n = v
            .as_number()
            .ok_or_else(|| Error::NonNumericValue(s.path.to_string()))?;
        let violated = if n < s.min {
            Some((Bound::Lower, s.min))
        } else if n > s.max {
            Some((Bound::Upper, s.max))
        } else {
            None
        };
        if let Some((bound, limit)) = violated {
            out.push(AnomalyEvent {
                spec: s.name.clone(),
                path: s.path.clone(),
                value: n,
                bound,
                limit,
                tick,
            });
        }
    }
    Ok(out)
}
