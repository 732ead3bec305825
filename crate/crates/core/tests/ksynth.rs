mod common;

use keraia::ksynth::{load_files, load_str, parse_document, serialize, DiagnosticKind};
use keraia::Error;
use proptest::prelude::*;

fn diagnostics(text: &str) -> Vec<keraia::ksynth::Diagnostic> {
    match load_str(text) {
        Err(Error::Parse(d)) => d,
        other => panic!("expected diagnostics, got {other:?}"),
    }
}

#[test]
fn shipped_packs_load() {
    for name in keraia::packs::NAMES {
        let pack = keraia::packs::load(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(pack.kb.knowledge_sources().count() > 0, "{name}");
    }
}

#[test]
fn syntax_errors_point_at_the_token() {
    let d = diagnostics("cloud C {\n  ks K { slot = 3 }\n}");
    assert_eq!(d[0].kind, DiagnosticKind::SyntaxError);
    assert_eq!((d[0].line, d[0].col), (2, 15));
}

#[test]
fn unterminated_string() {
    let d = diagnostics("cloud C { ks K { slot a = \"open } }");
    assert_eq!(d[0].line, 1);
}

#[test]
fn unresolved_names_are_reported() {
    let d = diagnostics("cloud C { ks K { slot a = 1 } }\nlot L { step Ghost }");
    assert!(d.iter().any(|x| x.message.contains("Ghost")), "{d:?}");
}

#[test]
fn use_directives_merge_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("base.ksynth"),
        "cloud Plant { ks Pump { slot pressure = 3 } }",
    )
    .unwrap();
    std::fs::write(
        dir.path().join("main.ksynth"),
        "use \"base.ksynth\"\nlot Check { step Pump }",
    )
    .unwrap();
    let pack = load_files(&[dir.path().join("main.ksynth")]).unwrap();
    assert!(pack.kb.ks("Pump").is_some());
    assert!(pack.kb.lot("Check").is_some());
}

#[test]
fn include_cycles_and_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.ksynth"), "use \"b.ksynth\"").unwrap();
    std::fs::write(dir.path().join("b.ksynth"), "use \"a.ksynth\"").unwrap();
    assert!(matches!(
        load_files(&[dir.path().join("a.ksynth")]),
        Err(Error::IncludeCycle(_))
    ));
    assert!(matches!(
        load_files(&[dir.path().join("none.ksynth")]),
        Err(Error::Io { .. })
    ));
}

#[test]
fn file_errors_carry_the_file_name() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ksynth");
    std::fs::write(&bad, "cloud {").unwrap();
    match load_files(&[&bad]) {
        Err(Error::Parse(d)) => assert!(d[0].file.as_deref().unwrap().ends_with("bad.ksynth")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn serialized_packs_load_to_the_same_knowledge() {
    for name in keraia::packs::NAMES {
        let text = keraia::packs::source(name).unwrap();
        let again = serialize(&parse_document(text).unwrap());
        let a = load_str(text).unwrap();
        let b = load_str(&again).unwrap();
        assert_eq!(a.kb.digest(), b.kb.digest(), "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_documents_round_trip(seed in any::<u64>()) {
        let text = common::DocGen::new(seed).document();
        let d1 = parse_document(&text).unwrap();
        let s = serialize(&d1);
        let d2 = parse_document(&s).unwrap();
        prop_assert_eq!(&d1, &d2);
        prop_assert_eq!(serialize(&d2), s);
    }

    #[test]
    fn garbage_never_panics(text in "[a-z{}=\" \\n0-9?@/.-]{0,80}") {
        let _ = load_str(&text);
    }
}
