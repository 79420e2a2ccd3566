use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use polab::channels::{apply_with, diattenuation_channel};
use polab::fock::constructors::coherent_polarized;
use polab::fock::{FockBasis, FockState};
use polab::gadget::estimate_stokes_with;
use polab::geometry::{e3, PolarAngles};
use polab::linalg::C64;
use polab::parallel::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn probe(n_max: usize) -> FockState {
    coherent_polarized(C64::new(1.5, 0.0), PolarAngles::new(1.0, 0.4), FockBasis::new(n_max), 1e-4)
        .expect("probe state")
        .to_density()
}

fn channel_application(c: &mut Criterion) {
    let mut group = c.benchmark_group("diattenuation_apply");
    group.sample_size(10);
    for n_max in [8, 12] {
        let state = probe(n_max);
        let channel = diattenuation_channel(0.8, 0.3, &e3(), state.basis).expect("channel");
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n_max), &n_max, |b, _| {
                b.iter(|| apply_with(&channel, &state, exec).expect("apply"))
            });
        }
    }
    group.finish();
}

fn gadget_sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("gadget_estimate");
    group.sample_size(10);
    let state = probe(10);
    for shots in [100_000usize, 400_000] {
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, shots), &shots, |b, &shots| {
                b.iter(|| estimate_stokes_with(&state, shots, 1, exec).expect("estimate"))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, channel_application, gadget_sampling);
criterion_main!(benches);
