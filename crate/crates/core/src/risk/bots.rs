use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::map::{board, TERRITORY_COUNT};
use super::sim::GameEvent;
use super::state::{GameCommand, GameState, Phase};
use crate::error::{Error, Result};
use crate::xai::AuditReport;

/// A player as seen by the simulator: it hears state events and answers
/// move requests.
pub trait Bot {
    fn observe(&mut self, event: &GameEvent);
    /// The next command for the current phase; `None` ends the phase.
    fn decide(&mut self) -> Option<GameCommand>;

    /// Version-log audit of the bot's own knowledge, for bots that keep one.
    fn audit(&self) -> Option<AuditReport> {
        None
    }

    /// Internal failures the bot swallowed to keep playing.
    fn errors(&self) -> Vec<String> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    AttackWeakest,
    AttackStrongest,
}

impl Strategy {
    /// Rule set the agent chains over during its attack phase.
    pub fn attack_set(self) -> &'static str {
        match self {
            Strategy::AttackWeakest => "Attack",
            Strategy::AttackStrongest => "AttackStrongest",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BotSpec {
    AiAsset(Strategy),
    Random,
    Benevolent,
    /// Plays like `Random` and receives one extra army per turn.
    Cheater,
}

impl BotSpec {
    pub fn label(self) -> &'static str {
        match self {
            BotSpec::AiAsset(Strategy::AttackWeakest) => "aiasset",
            BotSpec::AiAsset(Strategy::AttackStrongest) => "aiasset-strongest",
            BotSpec::Random => "random",
            BotSpec::Benevolent => "benevolent",
            BotSpec::Cheater => "cheater",
        }
    }

    pub fn cheats(self) -> bool {
        self == BotSpec::Cheater
    }
}

impl fmt::Display for BotSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BotSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "aiasset" | "aiasset-weakest" => BotSpec::AiAsset(Strategy::AttackWeakest),
            "aiasset-strongest" => BotSpec::AiAsset(Strategy::AttackStrongest),
            "random" => BotSpec::Random,
            "benevolent" => BotSpec::Benevolent,
            "cheater" => BotSpec::Cheater,
            other => return Err(Error::Invalid(format!("unknown bot `{other}`"))),
        })
    }
}

/// A player's mirror of the board, rebuilt purely from bus events.
#[derive(Debug, Clone)]
pub struct View {
    pub me: usize,
    pub state: GameState,
    pub reserve: u32,
    pub current: usize,
}

impl View {
    pub fn new(me: usize, players: usize) -> Self {
        View {
            me,
            state: GameState::from_parts(players, vec![players; TERRITORY_COUNT], vec![0; TERRITORY_COUNT]),
            reserve: 0,
            current: 0,
        }
    }

    pub fn apply(&mut self, event: &GameEvent) {
        match *event {
            GameEvent::Territory {
                territory,
                owner,
                armies,
            } => {
                self.state.owner[territory] = owner;
                self.state.armies[territory] = armies;
            }
            GameEvent::Phase {
                turn,
                player,
                phase,
                reserve,
            } => {
                self.state.turn = turn;
                self.state.phase = phase;
                self.current = player;
                if player == self.me {
                    self.reserve = reserve;
                }
            }
            GameEvent::Reserve { player, reserve } if player == self.me => self.reserve = reserve,
            GameEvent::Eliminated { player } => {
                if let Some(a) = self.state.alive.get_mut(player) {
                    *a = false;
                }
            }
            _ => {}
        }
    }

    pub fn mine(&self) -> Vec<usize> {
        self.state.territories_of(self.me).collect()
    }
}

pub(crate) fn bot_rng(seed: u64, seat: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ ((seat as u64 + 1) << 40))
}

/// Picks uniformly among the legal actions of the phase, with ending the
/// phase counted as one of them.
pub struct RandomBot {
    pub view: View,
    rng: ChaCha8Rng,
    attacks: bool,
}

impl RandomBot {
    pub fn new(me: usize, players: usize, seed: u64) -> Self {
        RandomBot {
            view: View::new(me, players),
            rng: bot_rng(seed, me),
            attacks: true,
        }
    }

    /// Never attacks; reinforces and fortifies at random.
    pub fn benevolent(me: usize, players: usize, seed: u64) -> Self {
        RandomBot {
            attacks: false,
            ..RandomBot::new(me, players, seed)
        }
    }

    fn reinforce(&mut self) -> Option<GameCommand> {
        let mine = self.view.mine();
        let territory = *mine.choose(&mut self.rng)?;
        if self.view.reserve == 0 {
            return None;
        }
        let armies = self.rng.gen_range(1..=self.view.reserve);
        Some(GameCommand::Reinforce { territory, armies })
    }

    fn attack(&mut self) -> Option<GameCommand> {
        if !self.attacks {
            return None;
        }
        let s = &self.view.state;
        let b = board();
        let options: Vec<(usize, usize)> = self
            .view
            .mine()
            .into_iter()
            .filter(|&t| s.armies[t] > 1)
            .flat_map(|t| {
                b.adjacent[t]
                    .iter()
                    .filter(|&&n| s.owner[n] != self.view.me)
                    .map(move |&n| (t, n))
            })
            .collect();
        let pick = self.rng.gen_range(0..=options.len());
        let &(from, to) = options.get(pick)?;
        let dice = self.rng.gen_range(1..=(s.armies[from] - 1).min(3));
        Some(GameCommand::Attack { from, to, dice })
    }

    fn fortify(&mut self) -> Option<GameCommand> {
        let s = &self.view.state;
        let b = board();
        let options: Vec<(usize, usize)> = self
            .view
            .mine()
            .into_iter()
            .filter(|&t| s.armies[t] > 1)
            .flat_map(|t| {
                b.adjacent[t]
                    .iter()
                    .filter(|&&n| s.owner[n] == self.view.me)
                    .map(move |&n| (t, n))
            })
            .collect();
        let pick = self.rng.gen_range(0..=options.len());
        let &(from, to) = options.get(pick)?;
        let armies = self.rng.gen_range(1..=s.armies[from] - 1);
        Some(GameCommand::Fortify { from, to, armies })
    }
}

impl Bot for RandomBot {
    fn observe(&mut self, event: &GameEvent) {
        self.view.apply(event);
    }

    fn decide(&mut self) -> Option<GameCommand> {
        match self.view.state.phase {
            Phase::Reinforce => self.reinforce(),
            Phase::Attack => self.attack(),
            Phase::Fortify => self.fortify(),
        }
    }
}
