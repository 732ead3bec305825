//! The game loop. The simulator and the players only talk through the
//! bus: state goes out on `datafusion-post`, commands come back on `risk`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::agent::AiAsset;
use super::bots::{Bot, BotSpec, RandomBot};
use super::bus::{SubscriberId, TopicBus, DATAFUSION_POST, RISK};
use super::map::{board, TERRITORY_COUNT};
use super::state::{GameCommand, GameState, Phase};
use crate::error::{Error, Result};
use crate::xai::AuditReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameEvent {
    Territory {
        territory: usize,
        owner: usize,
        armies: u32,
    },
    Phase {
        turn: u32,
        player: usize,
        phase: Phase,
        reserve: u32,
    },
    Reserve {
        player: usize,
        reserve: u32,
    },
    Eliminated {
        player: usize,
    },
    /// The named player is to send its next command.
    Request {
        player: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Message {
    Event(GameEvent),
    Command {
        player: usize,
        command: Option<GameCommand>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Battle {
    pub attacker_rolls: Vec<u8>,
    pub defender_rolls: Vec<u8>,
    pub attacker_losses: u32,
    pub defender_losses: u32,
    pub conquered: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Applied {
        command: GameCommand,
        battle: Option<Battle>,
    },
    /// Refused; the player forfeits the action.
    Illegal { command: GameCommand, reason: String },
    /// Armies granted outside the rules by the cheat hook.
    Cheat { armies: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub turn: u32,
    pub player: usize,
    pub kind: EntryKind,
}

impl LogEntry {
    pub fn command(&self) -> Option<&GameCommand> {
        match &self.kind {
            EntryKind::Applied { command, .. } | EntryKind::Illegal { command, .. } => Some(command),
            EntryKind::Cheat { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameResult {
    pub seed: u64,
    pub players: Vec<BotSpec>,
    /// `None` when the turn limit ran out first.
    pub winner: Option<usize>,
    pub turns: u32,
    /// Owner of each continent after every full turn.
    pub continent_series: Vec<[Option<usize>; 6]>,
    pub log: Vec<LogEntry>,
    /// Board invariant checks run, one after every command.
    pub checks: usize,
    pub violations: Vec<String>,
    pub final_owner: Vec<usize>,
    pub final_armies: Vec<u32>,
    /// Per seat, for bots that keep a knowledge base.
    pub audits: Vec<Option<AuditReport>>,
    /// Failures the bots recovered from, prefixed with the seat.
    pub bot_errors: Vec<String>,
}

impl GameResult {
    pub fn attacks_by(&self, player: usize) -> usize {
        self.log
            .iter()
            .filter(|e| e.player == player && e.command().is_some_and(GameCommand::is_attack))
            .count()
    }
}

/// Compares the highest dice pairwise; ties go to the defender.
/// Returns (attacker losses, defender losses).
pub fn resolve_battle(attacker: &mut [u8], defender: &mut [u8]) -> (u32, u32) {
    attacker.sort_unstable_by(|a, b| b.cmp(a));
    defender.sort_unstable_by(|a, b| b.cmp(a));
    let mut losses = (0, 0);
    for (a, d) in attacker.iter().zip(defender.iter()) {
        if a > d {
            losses.1 += 1;
        } else {
            losses.0 += 1;
        }
    }
    losses
}

fn starting_armies(players: usize) -> u32 {
    match players {
        2 => 40,
        3 => 35,
        4 => 30,
        5 => 25,
        _ => 20,
    }
}

const MAX_REINFORCE_REQUESTS: usize = 64;
const MAX_ATTACK_REQUESTS: usize = 2_000;

struct Sim {
    state: GameState,
    specs: Vec<BotSpec>,
    bots: Vec<Box<dyn Bot>>,
    bus: TopicBus<Message>,
    bot_subs: Vec<SubscriberId>,
    commands: SubscriberId,
    rng: ChaCha8Rng,
    result: GameResult,
}

impl Sim {
    fn post(&mut self, e: GameEvent) {
        self.bus.publish(DATAFUSION_POST, Message::Event(e));
    }

    fn post_territory(&mut self, t: usize) {
        let (owner, armies) = (self.state.owner[t], self.state.armies[t]);
        self.post(GameEvent::Territory {
            territory: t,
            owner,
            armies,
        });
    }

    /// One strictly alternating exchange: deliver pending events, let the
    /// player answer on `risk`, and read the answer back.
    fn ask(&mut self, player: usize) -> Option<GameCommand> {
        self.post(GameEvent::Request { player });
        for (i, bot) in self.bots.iter_mut().enumerate() {
            for m in self.bus.drain(self.bot_subs[i]) {
                if let Message::Event(e) = m {
                    bot.observe(&e);
                }
            }
        }
        let command = self.bots[player].decide();
        self.bus.publish(RISK, Message::Command { player, command });
        let mut answer = None;
        for m in self.bus.drain(self.commands) {
            if let Message::Command { player: p, command } = m {
                if p == player {
                    answer = command;
                }
            }
        }
        answer
    }

    fn log(&mut self, player: usize, kind: EntryKind) {
        self.result.log.push(LogEntry {
            turn: self.state.turn,
            player,
            kind,
        });
        self.result.checks += 1;
        if let Err(v) = self.state.check() {
            let turn = self.state.turn;
            self.result.violations.push(format!("turn {turn}: {v}"));
        }
    }

    fn illegal(&mut self, player: usize, command: GameCommand, reason: impl Into<String>) {
        self.log(
            player,
            EntryKind::Illegal {
                command,
                reason: reason.into(),
            },
        );
    }

    fn setup(&mut self) {
        let n = self.specs.len();
        let mut order: Vec<usize> = (0..TERRITORY_COUNT).collect();
        order.shuffle(&mut self.rng);
        for (i, &t) in order.iter().enumerate() {
            self.state.owner[t] = i % n;
            self.state.armies[t] = 1;
        }
        for p in 0..n {
            let mine: Vec<usize> = self.state.territories_of(p).collect();
            let extra = starting_armies(n).saturating_sub(mine.len() as u32);
            for _ in 0..extra {
                let t = mine[self.rng.gen_range(0..mine.len())];
                self.state.armies[t] += 1;
            }
        }
        self.state.alive = vec![true; n];
        for t in 0..TERRITORY_COUNT {
            self.post_territory(t);
        }
    }

    fn phase(&mut self, player: usize, phase: Phase, reserve: u32) {
        self.state.phase = phase;
        let turn = self.state.turn;
        self.post(GameEvent::Phase {
            turn,
            player,
            phase,
            reserve,
        });
    }

    fn reinforce(&mut self, p: usize) {
        let mut reserve = self.state.reinforcements(p);
        if self.specs[p].cheats() {
            reserve += 1;
            self.log(p, EntryKind::Cheat { armies: 1 });
        }
        self.phase(p, Phase::Reinforce, reserve);
        for _ in 0..MAX_REINFORCE_REQUESTS {
            if reserve == 0 {
                break;
            }
            let Some(cmd) = self.ask(p) else { break };
            match cmd {
                GameCommand::Reinforce { territory, armies }
                    if territory < TERRITORY_COUNT
                        && self.state.owner[territory] == p
                        && armies >= 1
                        && armies <= reserve =>
                {
                    self.state.armies[territory] += armies;
                    reserve -= armies;
                    self.log(
                        p,
                        EntryKind::Applied {
                            command: cmd,
                            battle: None,
                        },
                    );
                    self.post_territory(territory);
                    self.post(GameEvent::Reserve { player: p, reserve });
                }
                other => self.illegal(p, other, "not a legal reinforcement"),
            }
        }
    }

    fn attack(&mut self, p: usize) -> bool {
        self.phase(p, Phase::Attack, 0);
        let b = board();
        for _ in 0..MAX_ATTACK_REQUESTS {
            let Some(cmd) = self.ask(p) else { break };
            let GameCommand::Attack { from, to, dice } = cmd else {
                self.illegal(p, cmd, "not an attack");
                continue;
            };
            let legal = from < TERRITORY_COUNT
                && to < TERRITORY_COUNT
                && self.state.owner[from] == p
                && self.state.owner[to] != p
                && b.are_adjacent(from, to)
                && (1..=3).contains(&dice)
                && dice < self.state.armies[from];
            if !legal {
                self.illegal(p, cmd, "not a legal attack");
                continue;
            }
            let defender = self.state.owner[to];
            let mut att: Vec<u8> = (0..dice).map(|_| self.rng.gen_range(1..=6)).collect();
            let mut def: Vec<u8> = (0..self.state.armies[to].min(2))
                .map(|_| self.rng.gen_range(1..=6))
                .collect();
            let (al, dl) = resolve_battle(&mut att, &mut def);
            self.state.armies[from] -= al;
            self.state.armies[to] -= dl;
            let conquered = self.state.armies[to] == 0;
            if conquered {
                // the whole attacking force except the garrison moves in
                let moving = self.state.armies[from] - 1;
                self.state.owner[to] = p;
                self.state.armies[to] = moving;
                self.state.armies[from] = 1;
            }
            let battle = Battle {
                attacker_rolls: att,
                defender_rolls: def,
                attacker_losses: al,
                defender_losses: dl,
                conquered,
            };
            self.log(
                p,
                EntryKind::Applied {
                    command: cmd,
                    battle: Some(battle),
                },
            );
            self.post_territory(from);
            self.post_territory(to);
            if conquered && self.state.count(defender) == 0 {
                self.state.alive[defender] = false;
                self.post(GameEvent::Eliminated { player: defender });
                if self.state.count(p) == TERRITORY_COUNT {
                    return true;
                }
            }
        }
        false
    }

    fn fortify(&mut self, p: usize) {
        self.phase(p, Phase::Fortify, 0);
        let Some(cmd) = self.ask(p) else { return };
        match cmd {
            GameCommand::Fortify { from, to, armies }
                if from < TERRITORY_COUNT
                    && to < TERRITORY_COUNT
                    && from != to
                    && self.state.connected(p, from, to)
                    && armies >= 1
                    && armies < self.state.armies[from] =>
            {
                self.state.armies[from] -= armies;
                self.state.armies[to] += armies;
                self.log(
                    p,
                    EntryKind::Applied {
                        command: cmd,
                        battle: None,
                    },
                );
                self.post_territory(from);
                self.post_territory(to);
            }
            other => self.illegal(p, other, "not a legal fortification"),
        }
    }

    fn run(mut self, max_turns: u32) -> GameResult {
        self.setup();
        let n = self.specs.len();
        'game: for turn in 1..=max_turns {
            self.state.turn = turn;
            self.result.turns = turn;
            for p in 0..n {
                if !self.state.alive[p] {
                    continue;
                }
                self.reinforce(p);
                if self.attack(p) {
                    self.result.winner = Some(p);
                    self.result.continent_series.push(self.state.continent_owners());
                    break 'game;
                }
                self.fortify(p);
            }
            self.result.continent_series.push(self.state.continent_owners());
        }
        self.result.final_owner = self.state.owner.clone();
        self.result.final_armies = self.state.armies.clone();
        for (seat, bot) in self.bots.iter().enumerate() {
            self.result.audits.push(bot.audit());
            self.result
                .bot_errors
                .extend(bot.errors().into_iter().map(|e| format!("seat {seat}: {e}")));
        }
        self.result
    }
}

/// Plays one game. Seats follow the order of `specs`; the seed fixes the
/// deal, every die and every bot's choices.
pub fn simulate_game(specs: &[BotSpec], seed: u64, max_turns: u32) -> Result<GameResult> {
    let n = specs.len();
    if !(2..=6).contains(&n) {
        return Err(Error::Invalid(format!("a game needs 2 to 6 players, got {n}")));
    }
    let mut bus = TopicBus::new();
    let commands = bus.subscribe(RISK);
    let mut bots: Vec<Box<dyn Bot>> = Vec::with_capacity(n);
    let mut bot_subs = Vec::with_capacity(n);
    for (seat, spec) in specs.iter().enumerate() {
        bot_subs.push(bus.subscribe(DATAFUSION_POST));
        bots.push(match spec {
            BotSpec::AiAsset(strategy) => Box::new(AiAsset::new(seat, n, *strategy)?),
            BotSpec::Random | BotSpec::Cheater => Box::new(RandomBot::new(seat, n, seed)),
            BotSpec::Benevolent => Box::new(RandomBot::benevolent(seat, n, seed)),
        });
    }
    let sim = Sim {
        state: GameState::from_parts(n, vec![0; TERRITORY_COUNT], vec![1; TERRITORY_COUNT]),
        specs: specs.to_vec(),
        bots,
        bus,
        bot_subs,
        commands,
        rng: ChaCha8Rng::seed_from_u64(seed),
        result: GameResult {
            seed,
            players: specs.to_vec(),
            winner: None,
            turns: 0,
            continent_series: Vec::new(),
            log: Vec::new(),
            checks: 0,
            violations: Vec::new(),
            final_owner: Vec::new(),
            final_armies: Vec::new(),
            audits: Vec::new(),
            bot_errors: Vec::new(),
        },
    };
    Ok(sim.run(max_turns))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battle_ties_go_to_defender() {
        assert_eq!(resolve_battle(&mut [3, 6, 5], &mut [4, 6]), (1, 1));
        assert_eq!(resolve_battle(&mut [2], &mut [1, 1]), (0, 1));
        assert_eq!(resolve_battle(&mut [4, 4], &mut [4]), (1, 0));
    }
}
