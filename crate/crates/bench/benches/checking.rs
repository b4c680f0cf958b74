use std::collections::BTreeSet;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use kop_core::logic::{extension, nested_everyone};
use kop_core::properties::check_kop;
use kop_core::protocols::scenarios::{atm, ctm, AtmConfig, CtmConfig, CtmMode};
use kop_core::{Action, AgentId, Formula, Point};

fn ctm_config() -> CtmConfig {
    CtmConfig::path(vec![0, 50, 75, 100, 150], vec![75, 100, 50, 0], CtmMode::ClockedFlood).unwrap()
}

fn generation(c: &mut Criterion) {
    let cfg = ctm_config();
    c.bench_function("ctm_generate_625_runs", |b| b.iter(|| ctm(black_box(&cfg)).unwrap()));
}

fn evaluation(c: &mut Criterion) {
    let (sys, _) = ctm(&ctm_config()).unwrap();
    let one = AgentId::new(1);
    let k = Formula::know(one, Formula::prop("max_100"));
    c.bench_function("ctm_knowledge_extension", |b| b.iter(|| extension(&sys, black_box(&k)).unwrap()));

    let group: BTreeSet<AgentId> = sys.agents().collect();
    let common = Formula::Common(group.clone(), Box::new(Formula::prop("max_150")));
    c.bench_function("ctm_common_knowledge_extension", |b| {
        b.iter(|| extension(&sys, black_box(&common)).unwrap())
    });
    c.bench_function("ctm_nested_everyone_depth_8", |b| {
        b.iter(|| nested_everyone(&sys, Point::new(0, 0), &group, &Formula::prop("max_150"), 8).unwrap())
    });
}

fn theorem(c: &mut Criterion) {
    let sys = atm(&AtmConfig::default()).unwrap();
    let dispense = Action::new("dispense");
    let psi = Formula::prop("good_credit");
    c.bench_function("atm_check_kop", |b| {
        b.iter(|| check_kop(&sys, AgentId::new(1), black_box(&dispense), &psi).unwrap())
    });
}

criterion_group!(benches, generation, evaluation, theorem);
criterion_main!(benches);
