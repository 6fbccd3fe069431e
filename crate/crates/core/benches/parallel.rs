//! Link spectra and UL detection on one worker versus the default pool.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::ThreadPoolBuilder;

use poset_hdx::constructors::{grassmannian, standard};
use poset_hdx::properties::check_ul;
use poset_hdx::spectral::link_spectra;

fn pools(c: &mut Criterion) {
    let wp = standard(grassmannian(2, 5, 2).unwrap().poset).unwrap();
    let single = ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let default = ThreadPoolBuilder::new().build().unwrap();
    let mut group = c.benchmark_group("grassmannian(2,5,2)");
    group.sample_size(10);
    for (name, pool) in [("1-thread", &single), ("default", &default)] {
        group.bench_with_input(BenchmarkId::new("link_spectra", name), &wp, |b, wp| {
            b.iter(|| pool.install(|| link_spectra(wp).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("check_ul", name), &wp, |b, wp| b.iter(|| pool.install(|| check_ul(wp))));
    }
    group.finish();
}

criterion_group!(benches, pools);
criterion_main!(benches);
