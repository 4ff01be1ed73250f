use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use sbmtest::sampler::chain_rng;
use sbmtest::{
    exact_log_evidence, run_chain, standard_scenario, vi_distance, vi_point_estimate, GibbsSampler, ModelConfig,
    Network, Partition, SamplerSettings,
};

fn gibbs_sweep(c: &mut Criterion) {
    let s = standard_scenario(1).unwrap();
    let cfg = ModelConfig::default();
    c.bench_function("gibbs_sweep_n60", |bench| {
        let mut sampler = GibbsSampler::new(&s.network, &cfg, &Partition::singletons(60).unwrap()).unwrap();
        let mut rng = chain_rng(1, 0);
        bench.iter(|| sampler.sweep(&mut rng).unwrap());
    });
}

fn vi(c: &mut Criterion) {
    let s = standard_scenario(1).unwrap();
    c.bench_function("vi_n60", |bench| {
        bench.iter(|| vi_distance(black_box(&s.z0), black_box(&s.z1)).unwrap())
    });
}

fn point_estimate(c: &mut Criterion) {
    let s = standard_scenario(2).unwrap();
    let settings = SamplerSettings {
        total_samples: 2_500,
        burn_in: 500,
        ..Default::default()
    };
    let trace = run_chain(&s.network, &ModelConfig::default(), &settings).unwrap();
    let mut group = c.benchmark_group("point_estimate");
    group.sample_size(10);
    group.bench_function("2000_samples_n60", |bench| {
        bench.iter_batched(
            || trace.clone(),
            |t| vi_point_estimate(&t).unwrap(),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

fn exact_evidence(c: &mut Criterion) {
    let mut net = Network::empty(9).unwrap();
    for v in 1..9 {
        net.set_edge(v, v - 1, true);
        net.set_edge(v, (v + 3) % v, true);
    }
    let cfg = ModelConfig::default();
    let mut group = c.benchmark_group("exact_evidence");
    group.sample_size(10);
    group.bench_function("n9", |bench| bench.iter(|| exact_log_evidence(&net, &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, gibbs_sweep, vi, point_estimate, exact_evidence);
criterion_main!(benches);
