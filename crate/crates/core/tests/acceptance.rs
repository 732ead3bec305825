//! End-to-end acceptance checks. Each check prints one PASS/FAIL line with
//! its runtime against a fixed budget; the test fails if any line fails.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use keraia::drel::resolve_attribute;
use keraia::inference::WorkingMemory;
use keraia::ksynth::{parse_document, serialize};
use keraia::lot::{select_kline, KLineWeights, LotOptions};
use keraia::model::{KLinePath, SlotPath, SlotValue};
use keraia::risk::{simulate_game, BotSpec, GameResult, Strategy};
use keraia::trace::EventKind;
use keraia::xai::{self, audit, record_chain, replay, AuditReport, Recording};
use keraia::{Engine, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::DocGen;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: Error) -> String {
    e.to_string()
}

// ---- DRel toggle ----

fn helo_speed(e: &Engine) -> keraia::Result<(SlotValue, keraia::drel::Provenance)> {
    resolve_attribute(&e.kb, "Helo", &SlotPath::parse("speed").unwrap(), e.clock)
}

fn set_location(e: &mut Engine, place: &str) {
    let p = SlotPath::parse("location").unwrap();
    e.kb.set_slot("Helo", &p, SlotValue::text(place)).unwrap();
}

fn drel_toggle() -> Check {
    let ship_speed = {
        let e = keraia::packs::engine("naval").map_err(err)?;
        e.kb.get_slot("Ship", &SlotPath::parse("speed").unwrap())
            .cloned()
            .unwrap()
    };
    // both orders: start aboard and leave, or start airborne and land
    for order in [["ship", "airborne", "ship"], ["airborne", "ship", "airborne"]] {
        let mut e = keraia::packs::engine("naval").map_err(err)?;
        for place in order {
            set_location(&mut e, place);
            match (place, helo_speed(&e)) {
                ("ship", Ok((v, _))) => ensure(v == ship_speed, || format!("aboard: got {v}"))?,
                ("ship", Err(x)) => return Err(format!("aboard but unresolved: {x}")),
                (_, Err(Error::Unresolvable { .. })) => {}
                (_, other) => return Err(format!("airborne but resolved: {other:?}")),
            }
        }
    }
    Ok("inherits aboard, unresolvable airborne, both toggle orders".into())
}

// ---- forward chaining against a fixpoint oracle ----

struct HornSet {
    rules: Vec<(Vec<usize>, usize)>,
    initial: Vec<usize>,
}

fn random_horn(rng: &mut ChaCha8Rng) -> HornSet {
    let atoms = rng.gen_range(1..=8);
    let rules = (0..rng.gen_range(1..=20))
        .map(|_| {
            let body = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..atoms)).collect();
            (body, rng.gen_range(0..atoms))
        })
        .collect();
    let initial = (0..atoms).filter(|_| rng.gen_bool(0.3)).collect();
    HornSet { rules, initial }
}

/// Naive iteration: apply every rule until nothing changes.
fn oracle_fixpoint(h: &HornSet) -> BTreeSet<usize> {
    let mut known: BTreeSet<usize> = h.initial.iter().copied().collect();
    loop {
        let before = known.len();
        for (body, head) in &h.rules {
            if body.iter().all(|a| known.contains(a)) {
                known.insert(*head);
            }
        }
        if known.len() == before {
            return known;
        }
    }
}

fn engine_fixpoint(h: &HornSet) -> keraia::Result<BTreeSet<usize>> {
    let mut text = String::new();
    for (i, (body, head)) in h.rules.iter().enumerate() {
        let pats: Vec<String> = body.iter().map(|a| format!("fact Atom(a{a})")).collect();
        text.push_str(&format!(
            "rule H{i} {{ {} then assert Atom(a{head}) }}\n",
            pats.join(" ")
        ));
    }
    let mut e = Engine::from_ksynth(&text)?;
    let mut wm = WorkingMemory::new();
    for a in &h.initial {
        wm.assert_fact("Atom", vec![SlotValue::reference(format!("a{a}"))]);
    }
    e.forward_chain("default", &mut wm)?;
    Ok(wm
        .named("Atom")
        .map(|f| f.args[0].as_str().unwrap()[1..].parse().unwrap())
        .collect())
}

fn chaining_oracle() -> Check {
    let (mut agree, mut derived) = (0, 0);
    for seed in 0..50u64 {
        let h = random_horn(&mut ChaCha8Rng::seed_from_u64(seed));
        let got = engine_fixpoint(&h).map_err(err)?;
        let want = oracle_fixpoint(&h);
        ensure(got == want, || format!("seed {seed}: engine {got:?}, oracle {want:?}"))?;
        agree += 1;
        if want.len() > h.initial.len() {
            derived += 1;
        }
    }
    Ok(format!(
        "{agree}/50 rule sets reach the oracle fixpoint ({derived} derive new facts)"
    ))
}

// ---- cavitation truth table ----

struct WaterRun {
    initial: keraia::model::KnowledgeBase,
    engine: Engine,
    recording: Recording,
}

fn pump_row(e: &mut Engine, low_pressure: bool, high_current: bool) {
    let set = |e: &mut Engine, path: &str, v: SlotValue| {
        e.kb.set_slot("Pump", &SlotPath::parse(path).unwrap(), v).unwrap();
    };
    set(
        e,
        "pressure",
        SlotValue::with_unit(if low_pressure { 2.0 } else { 3.4 }, "bar"),
    );
    set(
        e,
        "MotorState/Current",
        SlotValue::with_unit(if high_current { 16.0 } else { 11.5 }, "A"),
    );
}

fn cavitation(water: &mut Option<WaterRun>) -> Check {
    let mut e = keraia::packs::engine("water").map_err(err)?;
    let initial = e.kb.snapshot();
    let mut rows = Vec::new();
    for (low, high) in [(false, false), (false, true), (true, false), (true, true)] {
        pump_row(&mut e, low, high);
        let mut wm = WorkingMemory::new();
        e.forward_chain("Diagnostics", &mut wm).map_err(err)?;
        let diagnosed = wm.contains("Diagnose", &[SlotValue::reference("PumpCavitation")]);
        ensure(diagnosed == (low && high), || {
            format!("row low={low} high={high} diagnosed={diagnosed}")
        })?;
        rows.push(diagnosed);
    }
    let hits = rows.iter().filter(|&&d| d).count();
    ensure(hits == 1, || format!("{hits} rows diagnosed"))?;
    // keep a recorded run of the alarm procedure in the cavitating state
    let opts = LotOptions::at(e.clock);
    let recording = record_chain(&e.registry, &mut e.kb, &["LoT-HighTurbidityAlarm"], &opts).map_err(err)?;
    *water = Some(WaterRun {
        initial,
        engine: e,
        recording,
    });
    Ok("diagnosis only when pressure is low and current is high (1 of 4 rows)".into())
}

// ---- naval golden chain ----

const NAVAL_CHAIN: [&str; 6] = ["LoT-1", "LoT-2", "LoT-3", "LoT-4", "LoT-5", "LoT-6"];

const GOLDEN: [&str; 17] = [
    "KS-TR1", "KS-SF1", "KS-SF3", // radar to fusion input
    "KS-TR2", "KS-SF1", "KS-SF3", // sonobuoy to fusion input
    "KS-SF3", "KS-EC2", "KS-EC3", // fusion to classification input
    "KS-EC3", "KS-EC1", "KS-FC2", // classification to threat assessment
    "KS-FC2", "KS-FC1", "KS-FC3", // threat assessment to recommendation
    "KS-FC3", "KS-TR5", // recommendation to command
];

struct NavalRun {
    initial: keraia::model::KnowledgeBase,
    engine: Engine,
    recording: Recording,
}

fn naval_golden(naval: &mut Option<NavalRun>) -> Check {
    let mut texts = Vec::new();
    let mut last = None;
    for _ in 0..2 {
        let mut e = keraia::packs::engine("naval").map_err(err)?;
        let initial = e.kb.snapshot();
        let opts = LotOptions::at(e.clock);
        let rec = record_chain(&e.registry, &mut e.kb, &NAVAL_CHAIN, &opts).map_err(err)?;
        ensure(rec.trace.error.is_none(), || {
            format!("chain errored: {:?}", rec.trace.error)
        })?;
        let got = rec.trace.activations();
        ensure(got == GOLDEN, || format!("activations {got:?}"))?;
        texts.push(rec.trace.normalized().to_structured());
        last = Some(NavalRun {
            initial,
            engine: e,
            recording: rec,
        });
    }
    ensure(texts[0] == texts[1], || "structured traces differ between runs".into())?;
    *naval = last;
    Ok(format!(
        "{} activations in golden order, byte-stable ({} bytes)",
        GOLDEN.len(),
        texts[0].len()
    ))
}

// ---- elaboration ----

fn num(e: &Engine, ks: &str, path: &str) -> f64 {
    e.kb.get_slot(ks, &SlotPath::parse(path).unwrap())
        .and_then(SlotValue::as_number)
        .unwrap_or_else(|| panic!("{ks}/{path} is not a number"))
}

fn pair(e: &Engine, ks: &str, path: &str) -> [f64; 2] {
    let v = e.kb.get_slot(ks, &SlotPath::parse(path).unwrap()).unwrap();
    let l = v.as_list().unwrap();
    [l[0].as_number().unwrap(), l[1].as_number().unwrap()]
}

fn elaboration() -> Check {
    const SOURCE: &str = "Situation_Element_Perception_Refinement";
    let mut e = keraia::packs::engine("naval").map_err(err)?;
    let before = e.kb.cloud_digest(SOURCE).map_err(err)?;
    let out = e.elaborate("Naval-Elaboration").map_err(err)?;
    let want: BTreeSet<&str> = [
        "Dimensional_Profiles",
        "Mass_Profiles",
        "Capability_Profiles",
        "Operational_Roles",
        "Predictive_Trajectories",
        "Behavioral_Insights",
    ]
    .into();
    let got: BTreeSet<&str> = out.outputs.iter().map(String::as_str).collect();
    ensure(got == want, || format!("outputs {got:?}"))?;

    // hand computation from the source slots
    let size = num(&e, "Existence_Size_Analysis", "overall_size");
    let volume = size
        * (size * num(&e, "Existence_Size_Analysis", "width_ratio"))
        * (size * num(&e, "Existence_Size_Analysis", "height_ratio"));
    let expected_mass = volume * num(&e, "Existence_Size_Analysis", "density");
    let mass = num(&e, "Mass_Profiles", "mass");
    let rel = ((mass - expected_mass) / expected_mass).abs();
    ensure(rel <= 1e-9, || format!("mass {mass} vs {expected_mass}"))?;

    let [x, y] = pair(&e, "Kinematics_Analysis", "position");
    let [vx, vy] = pair(&e, "Kinematics_Analysis", "velocity");
    let [dx, dy] = pair(&e, "Kinematics_Analysis", "drift");
    let h = num(&e, "Kinematics_Analysis", "horizon");
    let expected = [x + vx * h + dx, y + vy * h + dy];
    let predicted = pair(&e, "Predictive_Trajectories", "predicted_position");
    ensure(predicted == expected, || {
        format!("trajectory {predicted:?} vs {expected:?}")
    })?;

    let after = e.kb.cloud_digest(SOURCE).map_err(err)?;
    ensure(before == after, || "source cloud changed".into())?;
    Ok(format!(
        "6 outputs, mass {mass:e} (rel err {rel:.1e}), trajectory {predicted:?}, source digest unchanged"
    ))
}

// ---- kline reinforcement ----

fn kline_reinforcement() -> Check {
    let mut e = keraia::packs::engine("water").map_err(err)?;
    pump_row(&mut e, true, true);
    for _ in 0..10 {
        let t = e.run_lot("LoT-HighTurbidityAlarm").map_err(err)?;
        ensure(t.error.is_none() && !t.fired_rules().is_empty(), || {
            "diagnostic run did not fire".into()
        })?;
        e.reinforce(&t);
    }
    let exercised: Vec<(&KLinePath, u64)> = e.weights.iter().collect();
    ensure(!exercised.is_empty(), || "no klines reinforced".into())?;
    ensure(exercised.iter().all(|(_, w)| *w == 10), || {
        format!("weights {exercised:?}")
    })?;
    let path = KLinePath::parse("Pump/pressure").unwrap();
    ensure(e.weights.get(&path) == 10, || {
        format!("Pump/pressure weight {}", e.weights.get(&path))
    })?;

    // alternatives sort before the exercised path, so a tie would lose
    let mut candidates: Vec<KLinePath> = (0..5)
        .map(|i| KLinePath::parse(&format!("Alt{i}/x")).unwrap())
        .collect();
    candidates.push(path.clone());
    ensure(select_kline(&e.weights, &candidates).map_err(err)? == &path, || {
        "exercised path not selected".into()
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..1000 {
        let n = rng.gen_range(1..10);
        let paths: Vec<KLinePath> = (0..n).map(|i| KLinePath::parse(&format!("K{i}/v")).unwrap()).collect();
        let shift = rng.gen_range(0..10_000u64);
        let mut a = KLineWeights::new();
        let mut b = KLineWeights::new();
        for p in &paths {
            let w = rng.gen_range(0..20);
            a.set(p.clone(), w);
            b.set(p.clone(), w + shift);
        }
        let (x, y) = (
            select_kline(&a, &paths).map_err(err)?,
            select_kline(&b, &paths).map_err(err)?,
        );
        ensure(x == y, || format!("argmax moved under shift {shift}"))?;
    }
    Ok(format!(
        "{} klines at weight 10, preferred over 5 alternatives, 1000 shifted maps agree",
        exercised.len()
    ))
}

// ---- what-if ----

fn what_if() -> Check {
    let mut e = keraia::packs::engine("naval").map_err(err)?;
    e.chain_lots(&NAVAL_CHAIN[..4]).map_err(err)?;
    let opts = LotOptions::at(e.clock);

    let null = xai::what_if(&e.registry, &e.kb, "LoT-5", &opts, &[]).map_err(err)?;
    ensure(null.divergence.is_none(), || {
        format!("null diverged at {:?}", null.divergence)
    })?;
    ensure(null.baseline.events == null.variant.events, || {
        "null traces differ".into()
    })?;
    ensure(null.outcome_diff.is_empty(), || "null outcome differs".into())?;

    let path = KLinePath::parse("KS-EC3/classification").unwrap();
    let current =
        e.kb.get_slot("KS-EC3", &SlotPath::parse("classification").unwrap())
            .cloned();
    ensure(current == Some(SlotValue::text("hostile")), || {
        format!("classification is {current:?}")
    })?;
    let r = xai::what_if(
        &e.registry,
        &e.kb,
        "LoT-5",
        &opts,
        &[(path, SlotValue::text("neutral"))],
    )
    .map_err(err)?;
    let at = r.divergence.ok_or("no divergence")?;
    let event = &r.baseline.events[at];
    let is_fork =
        matches!(&event.kind, EventKind::ForkTaken { fork, .. } if fork == "threat") && event.subject == "KS-FC2";
    ensure(is_fork, || format!("diverged at {:?}", event.kind))?;
    Ok(format!(
        "null report identical; hostile->neutral diverges at event {at}, the threat fork"
    ))
}

// ---- round trip ----

fn round_trip_one(text: &str) -> Result<(), String> {
    let d1 = parse_document(text).map_err(err)?;
    let s1 = serialize(&d1);
    let d2 = parse_document(&s1).map_err(|e| format!("reparse: {e}\n{s1}"))?;
    ensure(d1 == d2, || format!("documents differ after round trip:\n{s1}"))?;
    ensure(serialize(&d2) == s1, || "serialization not stable".into())
}

fn round_trip() -> Check {
    for name in keraia::packs::NAMES {
        round_trip_one(keraia::packs::source(name).unwrap()).map_err(|e| format!("{name}: {e}"))?;
    }
    let mut g = DocGen::new(8);
    for i in 0..200 {
        let doc = g.document();
        round_trip_one(&doc).map_err(|e| format!("fuzz #{i}: {e}\n{doc}"))?;
    }
    Ok("3 packs and 200 generated documents".into())
}

// ---- RISK ----

const GAMES: u64 = 200;
const MAX_TURNS: u32 = 200;

fn table(ai: BotSpec, seat: usize) -> Vec<BotSpec> {
    let mut specs = vec![BotSpec::Random; 4];
    specs[seat] = ai;
    specs
}

fn risk_outcome(games: &mut Vec<GameResult>) -> Check {
    let ai = BotSpec::AiAsset(Strategy::AttackWeakest);
    let mut wins = 0;
    for g in 0..GAMES {
        // rotate the agent through the seats so turn order is not a factor
        let seat = (g % 4) as usize;
        let r = simulate_game(&table(ai, seat), 1000 + g, MAX_TURNS).map_err(err)?;
        ensure(r.violations.is_empty(), || format!("game {g}: {:?}", r.violations))?;
        ensure(r.checks == r.log.len(), || {
            format!("game {g}: {} checks for {} commands", r.checks, r.log.len())
        })?;
        ensure(r.bot_errors.is_empty(), || format!("game {g}: {:?}", r.bot_errors))?;
        if r.winner == Some(seat) {
            wins += 1;
        }
        games.push(r);
    }
    let rate = wins as f64 / GAMES as f64;
    ensure(rate >= 0.40, || format!("win rate {rate:.3}"))?;

    let mut benevolent_attacks = 0;
    for g in 0..20 {
        let r = simulate_game(&table(BotSpec::Benevolent, (g % 4) as usize), 5000 + g, MAX_TURNS).map_err(err)?;
        benevolent_attacks += r.attacks_by((g % 4) as usize);
    }
    ensure(benevolent_attacks == 0, || {
        format!("benevolent attacked {benevolent_attacks} times")
    })?;

    for g in (0..GAMES).step_by(8) {
        let again = simulate_game(&table(ai, (g % 4) as usize), 1000 + g, MAX_TURNS).map_err(err)?;
        ensure(again.log == games[g as usize].log, || {
            format!("game {g} not reproducible")
        })?;
    }
    let commands: usize = games.iter().map(|r| r.log.len()).sum();
    Ok(format!(
        "win rate {rate:.3} over {GAMES} games, benevolent attacks 0, 25 replays identical, invariants held over {commands} commands"
    ))
}

fn separability() -> Check {
    let mut differ = 0;
    for seed in 0..20 {
        let weak = simulate_game(
            &table(BotSpec::AiAsset(Strategy::AttackWeakest), 0),
            7000 + seed,
            MAX_TURNS,
        )
        .map_err(err)?;
        let strong = simulate_game(
            &table(BotSpec::AiAsset(Strategy::AttackStrongest), 0),
            7000 + seed,
            MAX_TURNS,
        )
        .map_err(err)?;
        if weak.log != strong.log {
            differ += 1;
        }
    }
    ensure(differ >= 1, || "strategies never differ".into())?;
    Ok(format!("command logs differ on {differ}/20 seeds"))
}

// ---- audit closure ----

fn report(label: &str, r: &AuditReport) -> Result<(), String> {
    ensure(r.ok, || format!("{label}: {:?}", r.problems))
}

fn audit_closure(water: Option<&WaterRun>, naval: Option<&NavalRun>, games: &[GameResult]) -> Check {
    let water = water.ok_or("truth-table run missing")?;
    report("water", &audit(&water.initial, &water.engine.kb))?;
    ensure(replay(&water.engine.registry, &water.recording).map_err(err)?, || {
        "water replay differs".into()
    })?;

    let naval = naval.ok_or("naval run missing")?;
    report("naval", &audit(&naval.initial, &naval.engine.kb))?;
    ensure(replay(&naval.engine.registry, &naval.recording).map_err(err)?, || {
        "naval replay differs".into()
    })?;

    ensure(!games.is_empty(), || "no games recorded".into())?;
    let mut agents = 0;
    let mut entries = 0;
    for (g, r) in games.iter().enumerate() {
        for a in r.audits.iter().flatten() {
            report(&format!("game {g}"), a)?;
            agents += 1;
            entries += a.entries_checked;
        }
    }
    ensure(agents == games.len(), || {
        format!("{agents} agent audits for {} games", games.len())
    })?;
    Ok(format!("water, naval and {agents} agent knowledge bases account for every change ({entries} agent entries); both replays identical"))
}

// ---- driver ----

struct Line {
    id: usize,
    name: &'static str,
    budget: Duration,
    elapsed: Duration,
    outcome: Check,
}

impl Line {
    fn passed(&self) -> bool {
        self.outcome.is_ok() && self.elapsed < self.budget
    }
}

fn run(lines: &mut Vec<Line>, name: &'static str, budget_s: u64, f: impl FnOnce() -> Check) {
    let start = Instant::now();
    let outcome = f();
    lines.push(Line {
        id: lines.len() + 1,
        name,
        budget: Duration::from_secs(budget_s),
        elapsed: start.elapsed(),
        outcome,
    });
    let l = lines.last().unwrap();
    let detail = match &l.outcome {
        Ok(d) => d.clone(),
        Err(e) => e.lines().next().unwrap_or_default().to_string(),
    };
    println!(
        "[{:>2}] {:<28} {}  {:>8.3}s / {:>2}s  {}",
        l.id,
        l.name,
        if l.passed() { "PASS" } else { "FAIL" },
        l.elapsed.as_secs_f64(),
        budget_s,
        detail
    );
}

// plain main instead of libtest so the criterion lines are never captured
fn main() {
    let mut lines = Vec::new();
    let mut water = None;
    let mut naval = None;
    let mut games = Vec::new();
    run(&mut lines, "drel toggle", 1, drel_toggle);
    run(&mut lines, "chaining oracle", 10, chaining_oracle);
    run(&mut lines, "cavitation truth table", 1, || cavitation(&mut water));
    run(&mut lines, "naval golden chain", 2, || naval_golden(&mut naval));
    run(&mut lines, "elaboration", 1, elaboration);
    run(&mut lines, "kline reinforcement", 5, kline_reinforcement);
    run(&mut lines, "what-if", 2, what_if);
    run(&mut lines, "round trip", 10, round_trip);
    run(&mut lines, "risk outcome", 60, || risk_outcome(&mut games));
    run(&mut lines, "strategy separability", 10, separability);
    run(&mut lines, "audit closure", 10, || {
        audit_closure(water.as_ref(), naval.as_ref(), &games)
    });

    let failed: Vec<String> = lines
        .iter()
        .filter(|l| !l.passed())
        .map(|l| match &l.outcome {
            Err(e) => format!("{} {}: {e}", l.id, l.name),
            Ok(_) => format!("{} {}: over budget ({:?})", l.id, l.name, l.elapsed),
        })
        .collect();
    if !failed.is_empty() {
        eprintln!("failed:\n{}", failed.join("\n"));
        std::process::exit(1);
    }
    println!("acceptance: {} of {} criteria pass", lines.len(), lines.len());
}
