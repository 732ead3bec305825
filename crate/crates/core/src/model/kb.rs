use std::collections::{BTreeMap, BTreeSet};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::digest::Digest;
use super::path::{check_appellation, KLinePath, SlotPath};
use super::value::{SlotMap, SlotValue};
use crate::drel::DRel;
use crate::error::{Error, Result};
use crate::expr::Condition;
use crate::lot::LineOfThought;

/// Logical time. Injected by callers, never read from the wall clock.
pub type Tick = u64;

/// A named procedural operation attached to a knowledge source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponderBinding {
    pub name: String,
    /// Name of the registered operation that implements the responder.
    pub op: String,
    #[serde(default)]
    pub params: SlotMap,
    /// When present the responder only runs if the condition holds.
    #[serde(default)]
    pub trigger: Option<Condition>,
}

impl ResponderBinding {
    pub fn new(name: impl Into<String>, op: impl Into<String>) -> Self {
        ResponderBinding {
            name: name.into(),
            op: op.into(),
            params: SlotMap::new(),
            trigger: None,
        }
    }

    pub fn param(mut self, key: impl Into<String>, value: impl Into<SlotValue>) -> Self {
        self.params.insert(key.into(), value.into());
        self
    }

    pub fn param_str(&self, key: &str) -> Option<&str> {
        self.params.get(key).and_then(|v| v.as_str())
    }
}

/// Subscribes a knowledge source to state changes at `watch_ks`/`watch_path`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorBinding {
    pub watch_ks: String,
    pub watch_path: SlotPath,
    pub condition: Condition,
    pub responder: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeSource {
    pub appellation: String,
    pub slots: SlotMap,
    pub responders: Vec<ResponderBinding>,
    pub attractors: Vec<AttractorBinding>,
    pub explains: Option<String>,
    pub version: u64,
    pub owner_cloud: String,
}

impl KnowledgeSource {
    pub fn new(appellation: impl Into<String>) -> Self {
        KnowledgeSource {
            appellation: appellation.into(),
            slots: SlotMap::new(),
            responders: Vec::new(),
            attractors: Vec::new(),
            explains: None,
            version: 0,
            owner_cloud: String::new(),
        }
    }

    pub fn with_slot(mut self, name: impl Into<String>, value: impl Into<SlotValue>) -> Self {
        self.slots.insert(name.into(), value.into());
        self
    }

    pub fn with_responder(mut self, r: ResponderBinding) -> Self {
        self.responders.push(r);
        self
    }

    pub fn with_explains(mut self, text: impl Into<String>) -> Self {
        self.explains = Some(text.into());
        self
    }

    pub fn responder(&self, name: &str) -> Option<&ResponderBinding> {
        self.responders.iter().find(|r| r.name == name)
    }

    pub fn get(&self, path: &SlotPath) -> Option<&SlotValue> {
        lookup(&self.slots, path.segments())
    }

    fn validate(&self) -> Result<()> {
        check_appellation(&self.appellation)?;
        for a in &self.attractors {
            if self.responder(&a.responder).is_none() {
                return Err(Error::UnknownResponder {
                    ks: self.appellation.clone(),
                    responder: a.responder.clone(),
                });
            }
        }
        Ok(())
    }
}

pub(crate) fn lookup<'a>(slots: &'a SlotMap, segs: &[String]) -> Option<&'a SlotValue> {
    let (first, rest) = segs.split_first()?;
    let v = slots.get(first)?;
    if rest.is_empty() {
        Some(v)
    } else {
        lookup(v.as_map()?, rest)
    }
}

/// Writes `value` at `segs`, creating intermediate maps. Returns the
/// replaced value, or `Err(depth)` when a non-terminal segment holds a scalar.
pub(crate) fn insert_at(
    slots: &mut SlotMap,
    segs: &[String],
    value: SlotValue,
) -> std::result::Result<Option<SlotValue>, usize> {
    fn go(
        slots: &mut SlotMap,
        segs: &[String],
        value: SlotValue,
        depth: usize,
    ) -> std::result::Result<Option<SlotValue>, usize> {
        let (first, rest) = segs.split_first().expect("non-empty path");
        if rest.is_empty() {
            return Ok(slots.insert(first.clone(), value));
        }
        let entry = slots
            .entry(first.clone())
            .or_insert_with(|| SlotValue::Map(SlotMap::new()));
        match entry {
            SlotValue::Map(m) => go(m, rest, value, depth + 1),
            _ => Err(depth),
        }
    }
    go(slots, segs, value, 0)
}

/// Removes the value at `segs`. A missing intermediate map is not an
/// error; a scalar in the way is `Err(depth)`.
pub(crate) fn remove_at(slots: &mut SlotMap, segs: &[String]) -> std::result::Result<Option<SlotValue>, usize> {
    fn go(slots: &mut SlotMap, segs: &[String], depth: usize) -> std::result::Result<Option<SlotValue>, usize> {
        let (first, rest) = segs.split_first().expect("non-empty path");
        if rest.is_empty() {
            return Ok(slots.shift_remove(first));
        }
        match slots.get_mut(first) {
            Some(SlotValue::Map(m)) => go(m, rest, depth + 1),
            Some(_) => Err(depth),
            None => Ok(None),
        }
    }
    go(slots, segs, 0)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Cloud {
    pub appellation: String,
    pub member_ks: BTreeSet<String>,
    pub sub_clouds: BTreeSet<String>,
    pub dimension_tags: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub description: String,
    pub parent_juncture: Option<String>,
    /// Asserted values, keyed by knowledge-source rooted path.
    pub assumptions: Vec<(KLinePath, SlotValue)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Juncture {
    pub name: String,
    pub member_dimensions: BTreeSet<String>,
    pub linked_lots: BTreeSet<String>,
}

/// Explicit marker for "no value" in audit records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Logged {
    Unset,
    Value(SlotValue),
}

impl Logged {
    pub fn from_option(v: Option<SlotValue>) -> Self {
        v.map_or(Logged::Unset, Logged::Value)
    }

    pub fn value(&self) -> Option<&SlotValue> {
        match self {
            Logged::Unset => None,
            Logged::Value(v) => Some(v),
        }
    }
}

impl std::fmt::Display for Logged {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Logged::Unset => f.write_str("<unset>"),
            Logged::Value(v) => write!(f, "{v}"),
        }
    }
}

/// One committed slot mutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionEntry {
    pub appellation: String,
    /// Version produced by this mutation.
    pub version: u64,
    pub path: SlotPath,
    pub old: Logged,
    pub new: Logged,
    pub tick: Tick,
    /// Responder, rule or operation that performed the mutation.
    pub cause: Option<String>,
    /// Wall-clock milliseconds; stripped by normalization.
    pub timestamp: u64,
}

/// State-change notification produced by a committed mutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub source: String,
    pub path: SlotPath,
    pub old: Logged,
    pub new: Logged,
    pub tick: Tick,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionLogEntry {
    pub seq: u64,
    pub function: String,
    /// Transformation kind, `template` or `responder`.
    pub kind: String,
    pub subject: String,
    pub inputs: Vec<(String, SlotValue)>,
    pub outputs: Vec<(String, SlotValue)>,
    pub output_ks: Vec<String>,
    pub tick: Tick,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct MutationContext {
    tick: Tick,
    cause: Option<String>,
}

#[derive(Serialize)]
struct Content<'a> {
    clouds: &'a BTreeMap<String, Cloud>,
    knowledge_sources: &'a BTreeMap<String, KnowledgeSource>,
    drels: &'a BTreeMap<String, DRel>,
    lots: &'a BTreeMap<String, LineOfThought>,
    dimensions: &'a BTreeMap<String, Dimension>,
    junctures: &'a BTreeMap<String, Juncture>,
}

/// Aggregate root for all knowledge in one session.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeBase {
    clouds: BTreeMap<String, Cloud>,
    knowledge_sources: BTreeMap<String, KnowledgeSource>,
    drels: BTreeMap<String, DRel>,
    lots: BTreeMap<String, LineOfThought>,
    dimensions: BTreeMap<String, Dimension>,
    junctures: BTreeMap<String, Juncture>,
    version_log: Vec<VersionEntry>,
    function_log: Vec<FunctionLogEntry>,
    template_counters: BTreeMap<String, u64>,
    outbox: Vec<Pulse>,
    ctx: MutationContext,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    // ---- clouds ----

    pub fn add_cloud(&mut self, name: &str) -> Result<()> {
        check_appellation(name)?;
        if self.clouds.contains_key(name) {
            return Err(Error::DuplicateAppellation(name.to_string()));
        }
        self.clouds.insert(
            name.to_string(),
            Cloud {
                appellation: name.to_string(),
                ..Cloud::default()
            },
        );
        Ok(())
    }

    /// Links `child` under `parent`, rejecting links that would close a cycle.
    pub fn link_sub_cloud(&mut self, parent: &str, child: &str) -> Result<()> {
        for c in [parent, child] {
            if !self.clouds.contains_key(c) {
                return Err(Error::UnknownCloud(c.to_string()));
            }
        }
        if parent == child || self.cloud_reaches(child, parent) {
            return Err(Error::CloudCycle {
                parent: parent.to_string(),
                child: child.to_string(),
            });
        }
        self.clouds
            .get_mut(parent)
            .expect("checked")
            .sub_clouds
            .insert(child.to_string());
        Ok(())
    }

    fn cloud_reaches(&self, from: &str, to: &str) -> bool {
        let mut stack = vec![from.to_string()];
        let mut seen = BTreeSet::new();
        while let Some(c) = stack.pop() {
            if c == to {
                return true;
            }
            if !seen.insert(c.clone()) {
                continue;
            }
            if let Some(cl) = self.clouds.get(&c) {
                stack.extend(cl.sub_clouds.iter().cloned());
            }
        }
        false
    }

    pub fn tag_cloud(&mut self, cloud: &str, dimension: &str) -> Result<()> {
        if !self.dimensions.contains_key(dimension) {
            return Err(Error::UnknownDimension(dimension.to_string()));
        }
        self.clouds
            .get_mut(cloud)
            .ok_or_else(|| Error::UnknownCloud(cloud.to_string()))?
            .dimension_tags
            .insert(dimension.to_string());
        Ok(())
    }

    pub fn cloud(&self, name: &str) -> Option<&Cloud> {
        self.clouds.get(name)
    }

    pub fn clouds(&self) -> impl Iterator<Item = &Cloud> {
        self.clouds.values()
    }

    /// All knowledge sources in `cloud` and its sub-clouds.
    pub fn members_recursive(&self, cloud: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut stack = vec![cloud.to_string()];
        let mut seen = BTreeSet::new();
        while let Some(c) = stack.pop() {
            if !seen.insert(c.clone()) {
                continue;
            }
            if let Some(cl) = self.clouds.get(&c) {
                out.extend(cl.member_ks.iter().cloned());
                stack.extend(cl.sub_clouds.iter().cloned());
            }
        }
        out
    }

    // ---- knowledge sources ----

    /// Inserts `ks` into `cloud`, or replaces it in place when the
    /// appellation already lives there (bumping the version).
    pub fn put_ks(&mut self, mut ks: KnowledgeSource, cloud: &str) -> Result<u64> {
        ks.validate()?;
        if !self.clouds.contains_key(cloud) {
            return Err(Error::UnknownCloud(cloud.to_string()));
        }
        ks.owner_cloud = cloud.to_string();
        match self.knowledge_sources.get(&ks.appellation) {
            Some(existing) if existing.owner_cloud != cloud => Err(Error::AppellationConflict {
                appellation: ks.appellation.clone(),
                existing: existing.owner_cloud.clone(),
                requested: cloud.to_string(),
            }),
            Some(existing) => {
                let old = SlotValue::Map(existing.slots.clone());
                ks.version = existing.version + 1;
                let new = SlotValue::Map(ks.slots.clone());
                let (name, version) = (ks.appellation.clone(), ks.version);
                self.knowledge_sources.insert(name.clone(), ks);
                self.record(&name, version, SlotPath::root(), Some(old), Some(new));
                Ok(version)
            }
            None => {
                ks.version = 1;
                let name = ks.appellation.clone();
                self.knowledge_sources.insert(name.clone(), ks);
                self.clouds.get_mut(cloud).expect("checked").member_ks.insert(name);
                Ok(1)
            }
        }
    }

    pub fn ks(&self, name: &str) -> Option<&KnowledgeSource> {
        self.knowledge_sources.get(name)
    }

    pub fn require_ks(&self, name: &str) -> Result<&KnowledgeSource> {
        self.ks(name).ok_or_else(|| Error::UnknownKs(name.to_string()))
    }

    pub fn knowledge_sources(&self) -> impl Iterator<Item = &KnowledgeSource> {
        self.knowledge_sources.values()
    }

    pub fn ks_names(&self) -> impl Iterator<Item = &str> {
        self.knowledge_sources.keys().map(String::as_str)
    }

    /// Local (non-inherited) slot value.
    pub fn get_slot(&self, ks: &str, path: &SlotPath) -> Option<&SlotValue> {
        self.ks(ks)?.get(path)
    }

    pub fn set_slot(&mut self, ks: &str, path: &SlotPath, value: SlotValue) -> Result<()> {
        if path.is_root() {
            return Err(Error::InvalidPath(String::new()));
        }
        let k = self
            .knowledge_sources
            .get_mut(ks)
            .ok_or_else(|| Error::UnknownKs(ks.to_string()))?;
        let old =
            insert_at(&mut k.slots, path.segments(), value.clone()).map_err(|depth| Error::PathThroughScalar {
                ks: ks.to_string(),
                path: path.segments()[..=depth].join("/"),
            })?;
        k.version += 1;
        let version = k.version;
        self.record(ks, version, path.clone(), old, Some(value));
        Ok(())
    }

    /// Removes the value at `path`; absent values are still logged as a
    /// mutation (unset to unset).
    pub fn unset_slot(&mut self, ks: &str, path: &SlotPath) -> Result<()> {
        if path.is_root() {
            return Err(Error::InvalidPath(String::new()));
        }
        let k = self
            .knowledge_sources
            .get_mut(ks)
            .ok_or_else(|| Error::UnknownKs(ks.to_string()))?;
        let old = remove_at(&mut k.slots, path.segments()).map_err(|depth| Error::PathThroughScalar {
            ks: ks.to_string(),
            path: path.segments()[..=depth].join("/"),
        })?;
        k.version += 1;
        let version = k.version;
        self.record(ks, version, path.clone(), old, None);
        Ok(())
    }

    fn record(&mut self, ks: &str, version: u64, path: SlotPath, old: Option<SlotValue>, new: Option<SlotValue>) {
        let tick = self.ctx.tick;
        let old = Logged::from_option(old);
        let new = Logged::from_option(new);
        self.outbox.push(Pulse {
            source: ks.to_string(),
            path: path.clone(),
            old: old.clone(),
            new: new.clone(),
            tick,
        });
        self.version_log.push(VersionEntry {
            appellation: ks.to_string(),
            version,
            path,
            old,
            new,
            tick,
            cause: self.ctx.cause.clone(),
            timestamp: now_ms(),
        });
    }

    // ---- mutation context and outbox ----

    pub fn tick(&self) -> Tick {
        self.ctx.tick
    }

    pub fn set_tick(&mut self, tick: Tick) {
        self.ctx.tick = tick;
    }

    /// Runs `f` with mutations attributed to `cause` at `tick`.
    pub fn attributed<R>(&mut self, tick: Tick, cause: impl Into<String>, f: impl FnOnce(&mut Self) -> R) -> R {
        let saved = std::mem::replace(
            &mut self.ctx,
            MutationContext {
                tick,
                cause: Some(cause.into()),
            },
        );
        let r = f(self);
        self.ctx = saved;
        r
    }

    /// Drains pulses emitted by committed mutations since the last call.
    pub fn take_pulses(&mut self) -> Vec<Pulse> {
        std::mem::take(&mut self.outbox)
    }

    /// Puts pulses back at the front of the outbox.
    pub(crate) fn requeue_pulses(&mut self, mut pulses: Vec<Pulse>) {
        pulses.append(&mut self.outbox);
        self.outbox = pulses;
    }

    pub fn pending_pulses(&self) -> &[Pulse] {
        &self.outbox
    }

    // ---- logs ----

    pub fn version_log(&self) -> &[VersionEntry] {
        &self.version_log
    }

    pub fn function_log(&self) -> &[FunctionLogEntry] {
        &self.function_log
    }

    pub fn log_function(&mut self, mut entry: FunctionLogEntry) -> u64 {
        entry.seq = self.function_log.len() as u64 + 1;
        let seq = entry.seq;
        self.function_log.push(entry);
        seq
    }

    /// Next value of the per-template output counter (1, 2, ...).
    pub fn next_template_counter(&mut self, template: &str) -> u64 {
        let c = self.template_counters.entry(template.to_string()).or_insert(0);
        *c += 1;
        *c
    }

    // ---- relations, lines of thought, dimensions ----

    pub fn add_drel(&mut self, drel: DRel) -> Result<()> {
        check_appellation(&drel.appellation)?;
        if self.drels.contains_key(&drel.appellation) {
            return Err(Error::DuplicateAppellation(drel.appellation));
        }
        for ks in [&drel.source_ks, &drel.target_ks] {
            self.require_ks(ks)?;
        }
        if drel.source_ks == drel.target_ks {
            return Err(Error::Invalid(format!(
                "relation `{}` links `{}` to itself",
                drel.appellation, drel.source_ks
            )));
        }
        if drel.shared_attributes.is_empty() {
            return Err(Error::Invalid(format!(
                "relation `{}` shares no attributes",
                drel.appellation
            )));
        }
        self.drels.insert(drel.appellation.clone(), drel);
        Ok(())
    }

    pub fn drels(&self) -> impl Iterator<Item = &DRel> {
        self.drels.values()
    }

    pub fn add_lot(&mut self, lot: LineOfThought) -> Result<()> {
        check_appellation(&lot.name)?;
        if self.lots.contains_key(&lot.name) {
            return Err(Error::DuplicateAppellation(lot.name));
        }
        lot.validate()?;
        self.lots.insert(lot.name.clone(), lot);
        Ok(())
    }

    pub fn lot(&self, name: &str) -> Option<&LineOfThought> {
        self.lots.get(name)
    }

    pub fn lots(&self) -> impl Iterator<Item = &LineOfThought> {
        self.lots.values()
    }

    pub fn add_dimension(&mut self, dim: Dimension) -> Result<()> {
        check_appellation(&dim.name)?;
        if self.dimensions.contains_key(&dim.name) {
            return Err(Error::DuplicateAppellation(dim.name));
        }
        self.dimensions.insert(dim.name.clone(), dim);
        Ok(())
    }

    pub fn dimension(&self, name: &str) -> Option<&Dimension> {
        self.dimensions.get(name)
    }

    pub fn dimensions(&self) -> impl Iterator<Item = &Dimension> {
        self.dimensions.values()
    }

    pub fn add_juncture(&mut self, j: Juncture) -> Result<()> {
        check_appellation(&j.name)?;
        if self.junctures.contains_key(&j.name) {
            return Err(Error::DuplicateAppellation(j.name));
        }
        if j.member_dimensions.is_empty() {
            return Err(Error::Invalid(format!("juncture `{}` references no dimension", j.name)));
        }
        for d in &j.member_dimensions {
            if !self.dimensions.contains_key(d) {
                return Err(Error::UnknownDimension(d.clone()));
            }
        }
        self.junctures.insert(j.name.clone(), j);
        Ok(())
    }

    pub fn juncture(&self, name: &str) -> Option<&Juncture> {
        self.junctures.get(name)
    }

    pub fn junctures(&self) -> impl Iterator<Item = &Juncture> {
        self.junctures.values()
    }

    // ---- snapshots and digests ----

    /// Independent deep copy.
    pub fn snapshot(&self) -> KnowledgeBase {
        self.clone()
    }

    /// Content hash over clouds, knowledge sources (slots and versions),
    /// relations, lines of thought, dimensions and junctures. Logs and the
    /// pulse outbox are not content.
    pub fn digest(&self) -> Digest {
        let content = Content {
            clouds: &self.clouds,
            knowledge_sources: &self.knowledge_sources,
            drels: &self.drels,
            lots: &self.lots,
            dimensions: &self.dimensions,
            junctures: &self.junctures,
        };
        Digest::of_json(&content)
    }

    /// Hash over a cloud's membership, member versions, sub-cloud digests
    /// and dimension tags.
    pub fn cloud_digest(&self, name: &str) -> Result<Digest> {
        let cloud = self
            .clouds
            .get(name)
            .ok_or_else(|| Error::UnknownCloud(name.to_string()))?;
        let members: Vec<(&str, u64)> = cloud
            .member_ks
            .iter()
            .map(|m| (m.as_str(), self.knowledge_sources[m].version))
            .collect();
        let subs = cloud
            .sub_clouds
            .iter()
            .map(|s| Ok((s.as_str(), self.cloud_digest(s)?.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Digest::of_json(&(
            &cloud.appellation,
            members,
            subs,
            &cloud.dimension_tags,
        )))
    }

    /// Resolves a knowledge-source rooted or cloud rooted path to the
    /// owning KS and the remaining slot path, without reading a value.
    pub fn split_kline(&self, path: &KLinePath) -> Result<(String, SlotPath)> {
        crate::ksynth::kline::locate(self, path).map(|(ks, sp)| (ks.to_string(), sp))
    }

    /// Line-delimited JSON export of the version log.
    pub fn export_version_log(&self) -> String {
        let mut out = String::new();
        for e in &self.version_log {
            out.push_str(&serde_json::to_string(e).expect("serializable"));
            out.push('\n');
        }
        out
    }
}
