use serde::{Deserialize, Serialize};

use super::map::{board, CONTINENTS, TERRITORY_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Reinforce,
    Attack,
    Fortify,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Reinforce => "Reinforce",
            Phase::Attack => "Attack",
            Phase::Fortify => "Fortify",
        }
    }
}

/// A move a player sends to the simulator. Territories are board indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameCommand {
    Reinforce { territory: usize, armies: u32 },
    Attack { from: usize, to: usize, dice: u32 },
    Fortify { from: usize, to: usize, armies: u32 },
}

impl GameCommand {
    pub fn is_attack(&self) -> bool {
        matches!(self, GameCommand::Attack { .. })
    }
}

impl std::fmt::Display for GameCommand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let n = &board().names;
        match *self {
            GameCommand::Reinforce { territory, armies } => write!(f, "reinforce({}, {armies})", n[territory]),
            GameCommand::Attack { from, to, dice } => write!(f, "attack({}, {}, {dice})", n[from], n[to]),
            GameCommand::Fortify { from, to, armies } => write!(f, "fortify({}, {}, {armies})", n[from], n[to]),
        }
    }
}

/// Ownership and garrisons of the whole board.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameState {
    pub owner: Vec<usize>,
    pub armies: Vec<u32>,
    pub players: usize,
    pub alive: Vec<bool>,
    pub phase: Phase,
    pub turn: u32,
}

impl GameState {
    /// A board with explicit owners and garrisons, for analysis and tests.
    pub fn from_parts(players: usize, owner: Vec<usize>, armies: Vec<u32>) -> Self {
        assert_eq!(owner.len(), TERRITORY_COUNT);
        assert_eq!(armies.len(), TERRITORY_COUNT);
        let alive = (0..players).map(|p| owner.contains(&p)).collect();
        GameState {
            owner,
            armies,
            players,
            alive,
            phase: Phase::Reinforce,
            turn: 0,
        }
    }

    pub fn territories_of(&self, p: usize) -> impl Iterator<Item = usize> + '_ {
        (0..TERRITORY_COUNT).filter(move |&t| self.owner[t] == p)
    }

    pub fn count(&self, p: usize) -> usize {
        self.owner.iter().filter(|&&o| o == p).count()
    }

    pub fn continent_owner(&self, c: usize) -> Option<usize> {
        let mut members = board().members(c);
        let first = self.owner[members.next()?];
        members.all(|t| self.owner[t] == first).then_some(first)
    }

    pub fn continent_owners(&self) -> [Option<usize>; 6] {
        std::array::from_fn(|c| self.continent_owner(c))
    }

    /// Armies granted at the start of `p`'s turn: a third of the territories
    /// held (at least 3) plus continent bonuses.
    pub fn reinforcements(&self, p: usize) -> u32 {
        let base = (self.count(p) as u32 / 3).max(3);
        let bonus: u32 = (0..CONTINENTS.len())
            .filter(|&c| self.continent_owner(c) == Some(p))
            .map(|c| CONTINENTS[c].1)
            .sum();
        base + bonus
    }

    /// True when `to` is reachable from `from` through `p`'s territories.
    pub fn connected(&self, p: usize, from: usize, to: usize) -> bool {
        if self.owner[from] != p || self.owner[to] != p {
            return false;
        }
        let b = board();
        let mut seen = [false; TERRITORY_COUNT];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(t) = stack.pop() {
            if t == to {
                return true;
            }
            for &n in &b.adjacent[t] {
                if !seen[n] && self.owner[n] == p {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
        false
    }

    /// Connected-region label per territory of `p` (`usize::MAX` for
    /// territories `p` does not hold).
    pub fn components(&self, p: usize) -> Vec<usize> {
        let b = board();
        let mut label = vec![usize::MAX; TERRITORY_COUNT];
        for start in self.territories_of(p) {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = start;
            let mut stack = vec![start];
            while let Some(t) = stack.pop() {
                for &n in &b.adjacent[t] {
                    if self.owner[n] == p && label[n] == usize::MAX {
                        label[n] = start;
                        stack.push(n);
                    }
                }
            }
        }
        label
    }

    /// Board invariants: every territory owned by a real player and
    /// garrisoned by at least one army.
    pub fn check(&self) -> Result<(), String> {
        if self.owner.len() != TERRITORY_COUNT || self.armies.len() != TERRITORY_COUNT {
            return Err(format!("board has {} territories", self.owner.len()));
        }
        for t in 0..TERRITORY_COUNT {
            if self.owner[t] >= self.players {
                return Err(format!("{} has no owner", board().names[t]));
            }
            if self.armies[t] < 1 {
                return Err(format!("{} has no armies", board().names[t]));
            }
        }
        Ok(())
    }
}
