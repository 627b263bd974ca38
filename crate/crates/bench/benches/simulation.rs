use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use skillgauge_core::empirical::fixtures::{generate, FixtureConfig};
use skillgauge_core::empirical::{run_empirical, EmpiricalConfig};
use skillgauge_core::impact::{estimate_combo_win_probs, ImpactModel};
use skillgauge_core::presets::{ImpactPreset, TeamPreset};
use skillgauge_core::regression::ols_fit;
use skillgauge_core::{
    allocate_selections, estimate_win_probs, moment_match, run_iterations, sample_scores, ContestConfig, Design, Matrix,
    PopulationConfig,
};

fn score_model(c: &mut Criterion) {
    let model = moment_match(&TeamPreset::UnequalMean.point_spec(0.4)).unwrap();
    c.bench_function("sample_scores_10k", |b| b.iter(|| sample_scores(&model, black_box(10_000), 1)));
    c.bench_function("win_probs_10k", |b| b.iter(|| estimate_win_probs(&model, black_box(10_000), 1).unwrap()));
    let impact = ImpactModel::new(ImpactPreset::DifferentMean.spec()).unwrap();
    c.bench_function("combo_win_probs_10k", |b| {
        b.iter(|| estimate_combo_win_probs(&model, &impact, black_box(10_000), 1).unwrap())
    });
}

fn contest(c: &mut Criterion) {
    let model = moment_match(&TeamPreset::UnequalMean.point_spec(0.4)).unwrap();
    let pi = estimate_win_probs(&model, 20_000, 1).unwrap().probs;
    let pop = PopulationConfig::default().resolve(4).unwrap();
    c.bench_function("allocate_1000_users", |b| b.iter(|| allocate_selections(&pop, &pi, black_box(3)).unwrap()));
    let cfg = ContestConfig::default();
    c.bench_function("contest_100_iterations", |b| {
        b.iter(|| run_iterations("bench", &model, &pi, &pop, &cfg, black_box(100), 5).unwrap())
    });
}

fn regression(c: &mut Criterion) {
    let n = 500;
    let p = 5;
    let x = Matrix::from_vec(n, p, (0..n * p).map(|i| ((i * 7919) % 1013) as f64 / 101.0).collect());
    let y: Vec<f64> = (0..n).map(|i| x.row(i).iter().sum::<f64>() + (i % 7) as f64).collect();
    let design = Design::new("y", &["a", "b", "c", "d", "e"], y, x).unwrap();
    c.bench_function("ols_500x5", |b| b.iter(|| ols_fit(black_box(&design)).unwrap()));
}

fn empirical(c: &mut Criterion) {
    let data = generate(&FixtureConfig { n_matches: 12, ..Default::default() }).unwrap();
    let cfg = EmpiricalConfig {
        n_iterations: 200,
        eval_matches: 2,
        ..Default::default()
    };
    c.bench_function("empirical_2_matches", |b| b.iter(|| run_empirical(&data, black_box(&cfg)).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = score_model, contest, regression, empirical
}
criterion_main!(benches);
