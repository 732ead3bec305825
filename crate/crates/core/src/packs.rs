//! The shipped scenario packs, embedded at build time.

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::ksynth::{load_str, Pack};

pub const NAVAL: &str = include_str!("../packs/naval.ksynth");
pub const WATER: &str = include_str!("../packs/water.ksynth");
pub const RISK: &str = include_str!("../packs/risk.ksynth");

pub const NAMES: [&str; 3] = ["naval", "water", "risk"];

pub fn source(name: &str) -> Option<&'static str> {
    match name {
        "naval" => Some(NAVAL),
        "water" => Some(WATER),
        "risk" => Some(RISK),
        _ => None,
    }
}

pub fn load(name: &str) -> Result<Pack> {
    let text = source(name).ok_or_else(|| Error::Invalid(format!("unknown pack `{name}`")))?;
    load_str(text)
}

/// A session over a shipped pack.
pub fn engine(name: &str) -> Result<Engine> {
    Ok(Engine::from_pack(load(name)?))
}
