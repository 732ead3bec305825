//! Per-territory tactical summary for one player.

use serde::{Deserialize, Serialize};

use super::map::board;
use super::state::GameState;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neighbor {
    pub territory: String,
    pub owner: usize,
    pub armies: u32,
    pub friendly: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreatRow {
    pub territory: String,
    pub armies: u32,
    pub neighbors: Vec<Neighbor>,
    /// Borders a territory of another continent.
    pub is_continent_border: bool,
}

impl ThreatRow {
    pub fn foes(&self) -> impl Iterator<Item = &Neighbor> {
        self.neighbors.iter().filter(|n| !n.friendly)
    }

    /// Has at least one hostile neighbor.
    pub fn is_frontline(&self) -> bool {
        self.foes().next().is_some()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreatTable {
    pub player: usize,
    /// One row per territory the player holds, by name.
    pub rows: Vec<ThreatRow>,
}

impl ThreatTable {
    pub fn row(&self, territory: &str) -> Option<&ThreatRow> {
        self.rows.iter().find(|r| r.territory == territory)
    }
}

pub fn build_threat_table(state: &GameState, player: usize) -> Result<ThreatTable> {
    if player >= state.players {
        return Err(Error::UnknownPlayer(format!("P{player}")));
    }
    let b = board();
    let mut rows: Vec<ThreatRow> = state
        .territories_of(player)
        .map(|t| {
            let mut neighbors: Vec<Neighbor> = b.adjacent[t]
                .iter()
                .map(|&n| Neighbor {
                    territory: b.names[n].to_string(),
                    owner: state.owner[n],
                    armies: state.armies[n],
                    friendly: state.owner[n] == player,
                })
                .collect();
            neighbors.sort_by(|x, y| x.territory.cmp(&y.territory));
            ThreatRow {
                territory: b.names[t].to_string(),
                armies: state.armies[t],
                is_continent_border: b.adjacent[t].iter().any(|&n| b.continent[n] != b.continent[t]),
                neighbors,
            }
        })
        .collect();
    rows.sort_by(|x, y| x.territory.cmp(&y.territory));
    Ok(ThreatTable { player, rows })
}
