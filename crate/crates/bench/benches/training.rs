use criterion::{criterion_group, criterion_main, Criterion};

use cfn_cli::pipeline::{fit, RunSpec};
use cfn_cli::presets::Preset;
use cfn_core::data::{gen_shm, gen_spiral, ShmParams};

fn presets(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);

    let shm = gen_shm(&ShmParams::default()).unwrap();
    group.bench_function("symreg_sin 500 rows", |b| {
        b.iter(|| fit(&shm, &RunSpec::new(Preset::SymregSin, 0)).unwrap())
    });

    let spiral = gen_spiral(100, 3, 0.2, 0).unwrap();
    let mut spec = RunSpec::new(Preset::Spiral, 0);
    spec.overrides.epochs = Some(100);
    group.bench_function("spiral 300 rows x 100 epochs", |b| b.iter(|| fit(&spiral, &spec).unwrap()));
    group.finish();
}

criterion_group!(benches, presets);
criterion_main!(benches);
