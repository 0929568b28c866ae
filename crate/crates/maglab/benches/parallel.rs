use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use maglab::circlebundle::{random_trig_field, CircleBundle, Grid};
use maglab::fmquad::{FmQuadrature, TrigFrameFunction};
use maglab::framebundle::MagneticStandard;
use maglab::haar::{poincare_check, random_quadratic, HaarRule};
use maglab::liealg::unit;
use maglab::manifold::builtin;
use maglab::par::Execution;
use maglab::tomoconst;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn pestov(c: &mut Criterion) {
    let s = builtin("conformal-t2").unwrap();
    let mut g = c.benchmark_group("pestov_residual");
    g.sample_size(10);
    for n in [16, 32] {
        let u = random_trig_field(Grid::cube(n), 4, &[0, 1, 2, 3, 4], &mut ChaCha8Rng::seed_from_u64(1));
        for (name, exec) in MODES {
            let cb = CircleBundle::with_execution(&s, Grid::cube(n), exec).unwrap();
            g.bench_with_input(BenchmarkId::new(name, n), &u, |b, u| b.iter(|| cb.pestov_residual(u).unwrap()));
        }
    }
    g.finish();
}

fn tomo(c: &mut Criterion) {
    let mut g = c.benchmark_group("tomo_sweep");
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| tomoconst::sweep(40, 40, exec)));
    }
    g.finish();
}

fn haar(c: &mut Criterion) {
    let rule = HaarRule::new(3, 32).unwrap();
    let f = random_quadratic(3, &mut ChaCha8Rng::seed_from_u64(2));
    let mut g = c.benchmark_group("poincare_check");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| poincare_check(&rule, exec, &f)));
    }
    g.finish();
}

fn fmquad(c: &mut Criterion) {
    let s = builtin("nonclosed-t3").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let freqs = vec![vec![0, 0, 0], vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1], vec![1, 1, 0]];
    let f = TrigFrameFunction::random_with(3, &freqs, &mut rng);
    let h = TrigFrameFunction::random_with(3, &freqs, &mut rng);
    let z = MagneticStandard { system: &s, x: unit(3, 0) };
    let mut g = c.benchmark_group("fm_skew_defect");
    g.sample_size(10);
    for (name, exec) in MODES {
        let q = FmQuadrature::new(&s, 4, 6, exec).unwrap();
        g.bench_function(name, |b| b.iter(|| q.skew_defect(&z, &f, &h).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, pestov, tomo, haar, fmquad);
criterion_main!(benches);
