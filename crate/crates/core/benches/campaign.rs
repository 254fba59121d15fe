use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use deltafi::campaign::{random::run_campaign, CampaignConfig};
use deltafi::exec::Execution;
use deltafi::scenario::library::by_id;
use std::hint::black_box;
use std::sync::Arc;

fn campaign(c: &mut Criterion) {
    let cfg = CampaignConfig { scenario: "A1".into(), experiments: 16, ..CampaignConfig::default() };
    let sc = Arc::new(by_id("A1").unwrap());
    let mut g = c.benchmark_group("random_campaign_A1_x16");
    g.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| black_box(run_campaign(&cfg, &sc, exec).unwrap().hazards))
        });
    }
    g.finish();
}

criterion_group!(benches, campaign);
criterion_main!(benches);
