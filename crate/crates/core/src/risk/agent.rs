//! The knowledge-based player. Three layers: data fusion copies bus events
//! into game-state frames, the inference layer chains over the rule set of
//! the current phase, and the first command produced goes back to the
//! simulator.

use std::sync::OnceLock;

use super::bots::{Bot, Strategy, View};
use super::map::{board, CONTINENTS};
use super::sim::GameEvent;
use super::state::{GameCommand, Phase};
use super::threat::build_threat_table;
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::inference::{Command, WorkingMemory};
use crate::ksynth::Pack;
use crate::model::{KnowledgeBase, SlotPath, SlotValue};
use crate::xai::{audit, AuditReport};

fn pack() -> Result<&'static Pack> {
    static PACK: OnceLock<std::result::Result<Pack, Error>> = OnceLock::new();
    PACK.get_or_init(|| crate::packs::load("risk"))
        .as_ref()
        .map_err(Clone::clone)
}

pub fn player_id(p: usize) -> String {
    format!("P{p}")
}

struct Paths {
    owner: SlotPath,
    armies: SlotPath,
    reserve: SlotPath,
    phase: SlotPath,
    player: SlotPath,
}

pub struct AiAsset {
    pub engine: Engine,
    initial: KnowledgeBase,
    view: View,
    strategy: Strategy,
    paths: Paths,
    adjacency: WorkingMemory,
    /// Inference failures; each one ends the phase early.
    pub errors: Vec<Error>,
}

fn name_of(v: &SlotValue) -> Option<usize> {
    board().index(v.as_str()?)
}

fn count_of(v: &SlotValue) -> Option<u32> {
    let n = v.as_number()?;
    (n >= 0.0 && n.fract() == 0.0).then_some(n as u32)
}

/// Maps a rule's command onto a game move.
pub fn to_game_command(c: &Command) -> Option<GameCommand> {
    match (c.name.as_str(), c.args.as_slice()) {
        ("reinforce", [t, n]) => Some(GameCommand::Reinforce {
            territory: name_of(t)?,
            armies: count_of(n)?,
        }),
        ("attack", [f, t, d]) => Some(GameCommand::Attack {
            from: name_of(f)?,
            to: name_of(t)?,
            dice: count_of(d)?,
        }),
        ("fortify", [f, t, n]) => Some(GameCommand::Fortify {
            from: name_of(f)?,
            to: name_of(t)?,
            armies: count_of(n)?,
        }),
        _ => None,
    }
}

impl AiAsset {
    pub fn new(me: usize, players: usize, strategy: Strategy) -> Result<Self> {
        let mut engine = Engine::from_pack(pack()?.clone());
        engine.registry.limits.max_cycles = 1;
        let initial = engine.kb.snapshot();
        let p = |s: &str| SlotPath::parse(s).expect("static path");
        let mut adjacency = WorkingMemory::new();
        let b = board();
        for (t, ns) in b.adjacent.iter().enumerate() {
            for &n in ns {
                adjacency.assert_fact(
                    "IsAdjacent",
                    vec![SlotValue::reference(b.names[t]), SlotValue::reference(b.names[n])],
                );
            }
        }
        let mut agent = AiAsset {
            engine,
            initial,
            view: View::new(me, players),
            strategy,
            paths: Paths {
                owner: p("owner"),
                armies: p("armies"),
                reserve: p("reserve"),
                phase: p("phase"),
                player: p("player"),
            },
            adjacency,
            errors: Vec::new(),
        };
        agent.put("Self", &p("id"), SlotValue::text(player_id(me)))?;
        Ok(agent)
    }

    /// Writes a slot only when its value changes, so the version log holds
    /// real transitions.
    fn put(&mut self, ks: &str, path: &SlotPath, value: SlotValue) -> Result<()> {
        if self
            .engine
            .kb
            .get_slot(ks, path)
            .is_some_and(|v| v.loosely_equals(&value))
        {
            return Ok(());
        }
        let clock = self.engine.clock;
        self.engine
            .kb
            .attributed(clock, "datafusion", |kb| kb.set_slot(ks, path, value))
    }

    fn fuse(&mut self, event: &GameEvent) -> Result<()> {
        let b = board();
        match *event {
            GameEvent::Territory {
                territory,
                owner,
                armies,
            } => {
                let name = b.names[territory];
                let owner_path = self.paths.owner.clone();
                let armies_path = self.paths.armies.clone();
                self.put(name, &owner_path, SlotValue::text(player_id(owner)))?;
                self.put(name, &armies_path, SlotValue::num(armies as f64))?;
                let c = b.continent[territory];
                let holder = self
                    .view
                    .state
                    .continent_owner(c)
                    .filter(|&o| o < self.view.state.players)
                    .map_or("none".to_string(), player_id);
                self.put(CONTINENTS[c].0, &owner_path, SlotValue::text(holder))?;
            }
            GameEvent::Phase {
                player, phase, reserve, ..
            } => {
                let (pp, pl) = (self.paths.phase.clone(), self.paths.player.clone());
                self.put("GamePhase", &pp, SlotValue::text(phase.name()))?;
                self.put("GamePhase", &pl, SlotValue::text(player_id(player)))?;
                if player == self.view.me {
                    let r = self.paths.reserve.clone();
                    self.put("Self", &r, SlotValue::num(reserve as f64))?;
                }
            }
            GameEvent::Reserve { player, reserve } if player == self.view.me => {
                let r = self.paths.reserve.clone();
                self.put("Self", &r, SlotValue::num(reserve as f64))?;
            }
            _ => {}
        }
        Ok(())
    }

    /// Border and connectivity facts for the fortify phase, derived from
    /// the board as it stands.
    fn fortify_facts(&self) -> Result<WorkingMemory> {
        let mut wm = WorkingMemory::new();
        let table = build_threat_table(&self.view.state, self.view.me)?;
        let b = board();
        let component = self.view.state.components(self.view.me);
        let mine = self.view.mine();
        // connectivity is only ever asked about from a border territory
        for row in table.rows.iter().filter(|r| r.is_frontline()) {
            let border = b.index(&row.territory).expect("board territory");
            wm.assert_fact("IsBorderTerritory", vec![SlotValue::reference(b.names[border])]);
            for &t in mine
                .iter()
                .filter(|&&t| t != border && component[t] == component[border])
            {
                wm.assert_fact(
                    "IsConnected",
                    vec![SlotValue::reference(b.names[border]), SlotValue::reference(b.names[t])],
                );
            }
        }
        Ok(wm)
    }

    fn infer(&mut self) -> Result<Option<GameCommand>> {
        let phase = self.view.state.phase;
        let set = match phase {
            Phase::Reinforce => "Reinforce",
            Phase::Attack => self.strategy.attack_set(),
            Phase::Fortify => "Fortify",
        };
        // adjacency never changes and the phase rules assert nothing, so
        // one working memory serves every reinforce and attack decision
        let result = if phase == Phase::Fortify {
            let mut wm = self.fortify_facts()?;
            self.engine.forward_chain(set, &mut wm)?
        } else {
            self.engine.forward_chain(set, &mut self.adjacency)?
        };
        self.engine.kb.take_pulses();
        Ok(result.commands.first().and_then(to_game_command))
    }

    /// Checks that every change the agent made to its game-state frames is
    /// in the version log.
    pub fn audit(&self) -> AuditReport {
        audit(&self.initial, &self.engine.kb)
    }
}

impl Bot for AiAsset {
    fn observe(&mut self, event: &GameEvent) {
        self.view.apply(event);
        if let Err(e) = self.fuse(event) {
            self.errors.push(e);
        }
    }

    fn decide(&mut self) -> Option<GameCommand> {
        match self.infer() {
            Ok(c) => c,
            Err(e) => {
                self.errors.push(e);
                None
            }
        }
    }

    fn audit(&self) -> Option<AuditReport> {
        Some(AiAsset::audit(self))
    }

    fn errors(&self) -> Vec<String> {
        self.errors.iter().map(ToString::to_string).collect()
    }
}
