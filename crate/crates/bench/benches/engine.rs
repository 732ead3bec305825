use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use keraia::inference::WorkingMemory;
use keraia::risk::{simulate_game, BotSpec, Strategy};
use keraia_bench::cavitating_water;

fn parse(c: &mut Criterion) {
    let mut g = c.benchmark_group("load");
    for name in keraia::packs::NAMES {
        g.bench_function(name, |b| b.iter(|| keraia::packs::load(name).unwrap()));
    }
    g.finish();
}

fn lots(c: &mut Criterion) {
    c.bench_function("naval LoT-1..5", |b| {
        b.iter_batched(
            || keraia::packs::engine("naval").unwrap(),
            |mut e| e.chain_lots(&["LoT-1", "LoT-2", "LoT-3", "LoT-4", "LoT-5"]).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn rules(c: &mut Criterion) {
    c.bench_function("water diagnostics", |b| {
        b.iter_batched(
            cavitating_water,
            |mut e| {
                let mut wm = WorkingMemory::new();
                e.forward_chain("Diagnostics", &mut wm).unwrap()
            },
            BatchSize::SmallInput,
        )
    });
}

fn risk(c: &mut Criterion) {
    let specs = [
        BotSpec::AiAsset(Strategy::AttackWeakest),
        BotSpec::Random,
        BotSpec::Random,
        BotSpec::Random,
    ];
    let mut g = c.benchmark_group("risk");
    g.sample_size(10);
    g.bench_function("one game", |b| b.iter(|| simulate_game(&specs, 1000, 200).unwrap()));
    g.finish();
}

criterion_group!(benches, parse, lots, rules, risk);
criterion_main!(benches);
