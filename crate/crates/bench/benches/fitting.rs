use contest_bench::contest_dataset;
use contest_core::glm::{fit_grouped, make_folds, CvData, FitOptions, GroupedData};
use contest_core::selectors::{select_team_c, select_team_d};
use contest_core::{Method, PenaltySpec, SelectorSpec};
use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn bench_simulate(c: &mut Criterion) {
    c.bench_function("simulate default dataset", |b| {
        b.iter(|| black_box(contest_dataset(7)))
    });
}

fn bench_full_fit(c: &mut Criterion) {
    let (_, data) = contest_dataset(1);
    let grouped = GroupedData::from_xy(&data.x, &data.y).unwrap();
    c.bench_function("full 20-variable fit", |b| {
        b.iter(|| {
            fit_grouped(
                black_box(&grouped),
                &PenaltySpec::NONE,
                &FitOptions::default(),
            )
            .unwrap()
        })
    });
}

fn bench_cv_subset(c: &mut Criterion) {
    let (_, data) = contest_dataset(2);
    let plan = make_folds(&data.y, 4, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let cv = CvData::new(&data.x, &data.y, &plan).unwrap();
    c.bench_function("4-fold cv deviance, 7 variables", |b| {
        b.iter(|| {
            cv.deviance(black_box(&[0, 3, 5, 9, 11, 15, 19]), &PenaltySpec::NONE)
                .unwrap()
        })
    });
}

fn bench_selectors(c: &mut Criterion) {
    let (_, data) = contest_dataset(4);
    let mut group = c.benchmark_group("selectors");
    group.sample_size(10);
    let mut spec = SelectorSpec::new(Method::TeamC, 5);
    spec.params.max_size = 4;
    group.bench_function("team_c sizes 3..=4", |b| {
        b.iter(|| select_team_c(&data, &spec).unwrap())
    });
    let spec = SelectorSpec::new(Method::TeamD, 5);
    group.bench_function("team_d 100 resamples", |b| {
        b.iter(|| select_team_d(&data, &spec).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_simulate,
    bench_full_fit,
    bench_cv_subset,
    bench_selectors
);
criterion_main!(benches);
