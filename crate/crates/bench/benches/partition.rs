use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use copolymer_core::partition::{constrained_logz_profile, DisorderSample};
use copolymer_core::{CouplingPoint, DisorderLaw, LawSpec, ModelSpec, ReturnLaw};

fn dp(c: &mut Criterion) {
    let law = Arc::new(ReturnLaw::build(LawSpec::Srw, 4096).unwrap());
    let model = ModelSpec::new(law, DisorderLaw::Gaussian, CouplingPoint::new(1.0, 0.5).unwrap());
    let mut group = c.benchmark_group("constrained_logz_profile");
    for n in [256, 1024, 4096] {
        let sample = DisorderSample::generate(DisorderLaw::Gaussian, n, 1, 0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| constrained_logz_profile(&model, black_box(&sample), n).unwrap().last())
        });
    }
    group.finish();
}

criterion_group!(benches, dp);
criterion_main!(benches);
