use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use viewdisc::fixtures::chasing_views;
use viewdisc::{classify, no_chasing_oracle};

fn chasing(c: &mut Criterion) {
    let mut g = c.benchmark_group("classify");
    g.sample_size(10);
    for views in [10usize, 30, 60] {
        let set = chasing_views(views, 1000, 1);
        g.bench_with_input(BenchmarkId::new("chasing", views), &set, |b, s| b.iter(|| classify(s)));
        g.bench_with_input(BenchmarkId::new("oracle", views), &set, |b, s| b.iter(|| no_chasing_oracle(s)));
    }
    g.finish();
}

criterion_group!(benches, chasing);
criterion_main!(benches);
