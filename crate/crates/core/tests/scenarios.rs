use keraia::inference::WorkingMemory;
use keraia::lot::LotOptions;
use keraia::model::{KLinePath, SlotPath, SlotValue};
use keraia::trace::{EventKind, ReasoningTrace};
use keraia::{xai, Error};

fn kl(s: &str) -> KLinePath {
    s.parse().unwrap()
}

fn slot(e: &keraia::Engine, ks: &str, path: &str) -> Option<SlotValue> {
    e.kb.get_slot(ks, &SlotPath::parse(path).unwrap()).cloned()
}

#[test]
fn dimensions_shadow_without_writing() {
    let e = keraia::packs::engine("water").unwrap();
    let p = kl("TurbiditySensor/reading");
    assert_eq!(
        e.query(&p, Some("StormRunoffDim")).unwrap(),
        SlotValue::with_unit(6.5, "NTU")
    );
    assert_eq!(e.query(&p, None).unwrap(), SlotValue::with_unit(0.4, "NTU"));
    assert!(matches!(e.query(&p, Some("Drought")), Err(Error::UnknownDimension(_))));
}

#[test]
fn full_path_and_drel_queries() {
    let e = keraia::packs::engine("water").unwrap();
    let ph = e
        .query(&kl("WaterTreatmentSystem/WaterQuality/pH/CurrentValue"), None)
        .unwrap();
    assert_eq!(ph, SlotValue::num(7.2));
    // the valve has no pressure of its own; the running pump shares it
    assert_eq!(
        e.query(&kl("Valve/pressure"), None).unwrap(),
        SlotValue::with_unit(3.4, "bar")
    );
}

#[test]
fn turbidity_spike_starts_the_alarm_procedure() {
    let mut e = keraia::packs::engine("water").unwrap();
    let out = e
        .set_and_dispatch(
            &kl("TurbiditySensor/reading"),
            SlotValue::with_unit(6.5, "NTU"),
            "sensor",
        )
        .unwrap();
    assert_eq!(out.effects.anomalies.len(), 1);
    assert_eq!(out.traces.len(), 1);
    let t = &out.traces[0];
    assert_eq!(t.entry, "LoT-HighTurbidityAlarm");
    assert_eq!(
        t.activations(),
        ["Filter", "Filter", "TurbiditySensor", "Chlorinator", "WaterQuality"]
    );
    assert!(t.error.is_none());
    assert_eq!(slot(&e, "Filter", "backwash_overdue"), Some(SlotValue::Bool(true)));
    assert_eq!(slot(&e, "TurbiditySensor", "intake_ok"), Some(SlotValue::Bool(false)));
    assert_eq!(
        slot(&e, "Chlorinator", "dosing_effective"),
        Some(SlotValue::Bool(false))
    );
}

#[test]
fn in_range_reading_is_quiet() {
    let mut e = keraia::packs::engine("water").unwrap();
    let out = e
        .set_and_dispatch(
            &kl("TurbiditySensor/reading"),
            SlotValue::with_unit(0.8, "NTU"),
            "sensor",
        )
        .unwrap();
    assert!(out.effects.anomalies.is_empty());
    assert!(out.traces.is_empty());
}

#[test]
fn cavitation_sets_the_diagnosis_slot() {
    let mut e = keraia::packs::engine("water").unwrap();
    e.kb.set_slot(
        "Pump",
        &SlotPath::parse("pressure").unwrap(),
        SlotValue::with_unit(2.0, "bar"),
    )
    .unwrap();
    e.kb.set_slot(
        "Pump",
        &SlotPath::parse("MotorState/Current").unwrap(),
        SlotValue::with_unit(16.0, "A"),
    )
    .unwrap();
    let mut wm = WorkingMemory::new();
    let r = e.forward_chain("Diagnostics", &mut wm).unwrap();
    let fired: Vec<&str> = r.fired.iter().map(|f| f.rule.as_str()).collect();
    assert_eq!(fired, ["PressureLow", "MotorCurrentHigh", "Cavitation"]);
    assert_eq!(slot(&e, "Pump", "diagnosis"), Some(SlotValue::text("PumpCavitation")));
    // the slot tests carry their evidence; the fact join has none
    assert!(r.fired[0].reads.iter().any(|p| p.to_string() == "Pump/pressure"));
    assert!(r.fired[2].reads.is_empty());
}

#[test]
fn unknown_rule_set_is_an_error() {
    let mut e = keraia::packs::engine("water").unwrap();
    assert!(matches!(
        e.forward_chain("Nope", &mut WorkingMemory::new()),
        Err(Error::UnknownRuleSet(_))
    ));
}

fn naval_after(lots: &[&str]) -> keraia::Engine {
    let mut e = keraia::packs::engine("naval").unwrap();
    let t = e.chain_lots(lots).unwrap();
    assert!(t.error.is_none(), "{:?}", t.error);
    e
}

fn fork(t: &ReasoningTrace) -> (String, String) {
    let ev = t.forks().next().expect("a fork");
    match &ev.kind {
        EventKind::ForkTaken { value, taken, .. } => (value.to_string(), taken.clone()),
        _ => unreachable!(),
    }
}

#[test]
fn naval_fusion_and_classification() {
    let e = naval_after(&["LoT-1", "LoT-2", "LoT-3", "LoT-4"]);
    assert_eq!(slot(&e, "KS-SF3", "fused_range"), Some(SlotValue::num(17.5)));
    assert_eq!(slot(&e, "KS-EC2", "agreement"), Some(SlotValue::Bool(true)));
    assert_eq!(slot(&e, "KS-EC3", "classification"), Some(SlotValue::text("hostile")));
    // the threat module sees the classification only through its relation
    assert_eq!(slot(&e, "KS-FC2", "classification"), None);
    assert_eq!(
        e.query(&kl("KS-FC2/classification"), None).unwrap(),
        SlotValue::text("hostile")
    );
}

#[test]
fn naval_fork_branches() {
    let mut e = naval_after(&["LoT-1", "LoT-2", "LoT-3", "LoT-4"]);
    let base = e.clone();
    let t = e.run_lot("LoT-5").unwrap();
    assert_eq!(fork(&t).1, "high-threat");
    assert!(slot(&e, "KS-FC3", "recommendation").is_some());

    for (class, branch, visited) in [
        ("unknown", "investigate", "KS-EC1"),
        ("neutral", "opportunistic", "KS-EC1"),
    ] {
        let mut v = base.clone();
        v.kb.set_slot(
            "KS-EC3",
            &SlotPath::parse("classification").unwrap(),
            SlotValue::text(class),
        )
        .unwrap();
        let t = v.run_lot("LoT-5").unwrap();
        assert_eq!(fork(&t).1, branch);
        assert!(t.activations().contains(&visited));
        assert!(!t.activations().contains(&"KS-FC1"));
    }
}

#[test]
fn what_if_reports_outcome_changes() {
    let e = naval_after(&["LoT-1", "LoT-2", "LoT-3", "LoT-4"]);
    let before = e.kb.digest();
    let r = xai::what_if(
        &e.registry,
        &e.kb,
        "LoT-5",
        &LotOptions::at(e.clock),
        &[(kl("KS-EC3/classification"), SlotValue::text("neutral"))],
    )
    .unwrap();
    assert_eq!(e.kb.digest(), before);
    assert_eq!(r.modifications.len(), 1);
    let changed: Vec<String> = r.outcome_diff.iter().map(|d| d.path.to_string()).collect();
    assert!(changed.contains(&"KS-EC3/classification".to_string()));
    assert!(changed.contains(&"KS-FC3/recommendation".to_string()));
    assert!(r.to_structured().lines().count() > 1);
}

#[test]
fn what_if_failures_name_the_arm() {
    let e = keraia::packs::engine("naval").unwrap();
    let r = xai::what_if(
        &e.registry,
        &e.kb,
        "LoT-5",
        &LotOptions::at(e.clock),
        &[(kl("Nowhere/x"), SlotValue::num(1.0))],
    );
    assert!(matches!(r, Err(Error::WhatIfArm { arm: "variant", .. })));
}

#[test]
fn traces_round_trip_through_structured_text() {
    let mut e = keraia::packs::engine("naval").unwrap();
    let t = e.chain_lots(&["LoT-1", "LoT-2", "LoT-3"]).unwrap();
    let text = t.to_structured();
    let back = ReasoningTrace::from_structured(&text).unwrap();
    assert_eq!(back, t);
    let story = xai::narrative(&t);
    assert!(story.contains("KS-TR1"));
}

#[test]
fn chain_failure_records_position() {
    let mut e = keraia::packs::engine("naval").unwrap();
    assert!(matches!(
        e.chain_lots(&["LoT-1", "LoT-Missing"]),
        Err(Error::InSequence { position: 1, .. })
    ));
}

#[test]
fn history_lists_logged_versions() {
    let e = naval_after(&["LoT-1"]);
    let h = xai::history(&e.kb, "KS-SF1", None).unwrap();
    assert!(!h.is_empty());
    assert!(h.iter().all(|v| v.appellation == "KS-SF1"));
}

#[test]
fn elaboration_is_logged_and_replayable() {
    let mut e = keraia::packs::engine("naval").unwrap();
    let initial = e.kb.snapshot();
    let out = e.elaborate("Naval-Elaboration").unwrap();
    assert_eq!(out.log_entries.len(), 6);
    for entry in e.kb.function_log() {
        assert!(keraia::elaboration::replay_entry(&e.registry.transformations, entry).unwrap());
    }
    let report = xai::audit(&initial, &e.kb);
    assert!(report.ok, "{:?}", report.problems);
    assert_eq!(slot(&e, "Operational_Roles", "role"), Some(SlotValue::text("assault")));
    assert_eq!(
        slot(&e, "Behavioral_Insights", "pattern"),
        Some(SlotValue::text("zigzag"))
    );
    assert!(matches!(
        e.elaborate("Naval-Elaboration"),
        Err(Error::OutputCollision(_))
    ));
}
