use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gridmass::grid::fields::random_rational_window;
use gridmass::grid::shell_sums;
use gridmass::ollivier::{all_edge_curvatures, CurvatureConfig};
use gridmass::torus::{build_torus, total_scalar_curvature, TorusSpec};
use gridmass::Rational;

/// Runs `f` on a pool of `threads` workers. Without the `parallel` feature
/// everything is sequential and the thread count is ignored.
fn on_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

fn thread_counts() -> Vec<usize> {
    let all = std::thread::available_parallelism().map_or(1, |n| n.get());
    if all > 1 {
        vec![1, all]
    } else {
        vec![1]
    }
}

fn bench(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let window = random_rational_window(2, 6, &mut rng).unwrap();
    let graph = window.to_graph().unwrap();
    let cube = random_rational_window(3, 8, &mut rng).unwrap();
    let mut torus = build_torus::<Rational>(TorusSpec::identity(2, 12).unwrap(), None).unwrap();
    torus.randomize_weights(&mut rng);
    let config = CurvatureConfig::default();

    let mut group = c.benchmark_group("curvature");
    group.sample_size(10);
    for threads in thread_counts() {
        group.bench_with_input(BenchmarkId::new("brute_force_window", threads), &threads, |b, &t| {
            b.iter(|| on_pool(t, || all_edge_curvatures(&graph, &config).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("shell_sums_n3_r6", threads), &threads, |b, &t| {
            b.iter(|| on_pool(t, || shell_sums(&cube, 6).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("torus_total", threads), &threads, |b, &t| {
            b.iter(|| on_pool(t, || total_scalar_curvature(&torus, 0.0).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
