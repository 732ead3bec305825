//! RISK as a testbed: the board, an in-process message bus, a seeded
//! simulator, baseline bots and the knowledge-based agent.

pub mod agent;
pub mod bots;
pub mod bus;
pub mod map;
pub mod sim;
pub mod state;
pub mod threat;

pub use agent::AiAsset;
pub use bots::{Bot, BotSpec, RandomBot, Strategy, View};
pub use bus::TopicBus;
pub use map::{board, CONTINENTS};
pub use sim::{resolve_battle, simulate_game, EntryKind, GameEvent, GameResult, LogEntry};
pub use state::{GameCommand, GameState, Phase};
pub use threat::{build_threat_table, ThreatRow, ThreatTable};

/// The agent's phase rule sets: reinforcement, both attack strategies and
/// fortification.
pub fn rule_sets() -> [&'static str; 4] {
    ["Reinforce", "Attack", "AttackStrongest", "Fortify"]
}
