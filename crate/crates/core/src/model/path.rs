use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Appellations are slash-free identifier segments: `[A-Za-z0-9_.-]+`.
pub fn is_appellation(s: &str) -> bool {
    !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'-'))
}

/// Slot names are appellations without dots, so `ks.slot.sub` stays
/// unambiguous inside condition expressions.
pub fn is_slot_name(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-'))
}

pub fn check_appellation(s: &str) -> Result<(), Error> {
    if is_appellation(s) {
        Ok(())
    } else {
        Err(Error::InvalidAppellation(s.to_string()))
    }
}

/// Path into a knowledge source's slot tree. The empty path addresses the
/// whole tree (used when a KS is re-put).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct SlotPath(Vec<String>);

impl SlotPath {
    pub fn root() -> Self {
        SlotPath(Vec::new())
    }

    pub fn new<I, S>(segments: I) -> Result<Self, Error>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let segs: Vec<String> = segments.into_iter().map(Into::into).collect();
        if segs.is_empty() {
            return Err(Error::InvalidPath(String::new()));
        }
        for s in &segs {
            if !is_slot_name(s) {
                return Err(Error::InvalidPath(segs.join("/")));
            }
        }
        Ok(SlotPath(segs))
    }

    /// Parses `a/b/c`. Dots are accepted as separators too, matching the
    /// `{slot.path}` form used in explains templates.
    pub fn parse(s: &str) -> Result<Self, Error> {
        Self::new(s.split(['/', '.']))
    }

    pub fn segments(&self) -> &[String] {
        &self.0
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn starts_with(&self, prefix: &SlotPath) -> bool {
        self.0.starts_with(&prefix.0)
    }

    pub fn join(&self, seg: &str) -> SlotPath {
        let mut v = self.0.clone();
        v.push(seg.to_string());
        SlotPath(v)
    }

    pub fn leaf(&self) -> Option<&str> {
        self.0.last().map(String::as_str)
    }
}

impl fmt::Display for SlotPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("/"))
    }
}

impl From<SlotPath> for String {
    fn from(p: SlotPath) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for SlotPath {
    type Error = Error;
    fn try_from(s: String) -> Result<Self, Error> {
        if s.is_empty() {
            Ok(SlotPath::root())
        } else {
            SlotPath::parse(&s)
        }
    }
}

impl FromStr for SlotPath {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        SlotPath::parse(s)
    }
}

/// Slash-delimited address through clouds, knowledge sources and slots,
/// e.g. `WaterTreatmentSystem/WaterQuality/pH/CurrentValue`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct KLinePath(Vec<String>);

impl KLinePath {
    pub fn new<I, S>(segments: I) -> Result<Self, Error>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let segs: Vec<String> = segments.into_iter().map(Into::into).collect();
        if segs.is_empty() || segs.iter().any(|s| !is_appellation(s)) {
            return Err(Error::InvalidPath(segs.join("/")));
        }
        Ok(KLinePath(segs))
    }

    pub fn parse(s: &str) -> Result<Self, Error> {
        Self::new(s.split('/'))
    }

    /// `ks/slot/path` for a knowledge source rooted address.
    pub fn of_slot(ks: &str, path: &SlotPath) -> KLinePath {
        let mut segs = vec![ks.to_string()];
        segs.extend(path.segments().iter().cloned());
        KLinePath(segs)
    }

    pub fn segments(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for KLinePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("/"))
    }
}

impl From<KLinePath> for String {
    fn from(p: KLinePath) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for KLinePath {
    type Error = Error;
    fn try_from(s: String) -> Result<Self, Error> {
        KLinePath::parse(&s)
    }
}

impl FromStr for KLinePath {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        KLinePath::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kline_renders_with_slashes() {
        let p = KLinePath::parse("WaterTreatmentSystem/WaterQuality/pH/CurrentValue").unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.to_string(), "WaterTreatmentSystem/WaterQuality/pH/CurrentValue");
    }

    #[test]
    fn empty_segments_rejected() {
        assert!(KLinePath::parse("A//B").is_err());
        assert!(SlotPath::parse("").is_err());
        assert!(SlotPath::parse("a/").is_err());
    }

    #[test]
    fn slot_path_accepts_dots() {
        assert_eq!(
            SlotPath::parse("MotorState.Status").unwrap(),
            SlotPath::parse("MotorState/Status").unwrap()
        );
    }

    proptest! {
        #[test]
        fn kline_parse_render_roundtrip(segs in prop::collection::vec("[A-Za-z0-9_.-]{1,8}", 1..6)) {
            let p = KLinePath::new(segs.clone()).unwrap();
            let back = KLinePath::parse(&p.to_string()).unwrap();
            prop_assert_eq!(back.segments(), &segs[..]);
        }
    }
}
