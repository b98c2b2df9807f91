use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use interact_core::corpus::Domain;
use interact_core::dialogue::Scenario;
use interact_core::scoring::{bootstrap_ci, curves, delta_table, EvaluationRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 3 scenarios x 5 domains x 40 concepts x 3 seeds x 6 rounds.
fn records() -> Vec<EvaluationRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let domains = [Domain::SongLyrics, Domain::NewsArticles, Domain::MoviePlots, Domain::AcademicPapers, Domain::Images];
    let mut out = Vec::new();
    for scenario in [Scenario::DynamicNoLesson, Scenario::DynamicWithLesson, Scenario::StaticWithLesson] {
        for domain in domains {
            for c in 0..40 {
                for seed in 0..3 {
                    for round in 0..6 {
                        out.push(EvaluationRecord {
                            run_id: format!("{domain}-{c}-{scenario}-{seed}"),
                            concept_id: format!("{domain}-{c}"),
                            domain,
                            scenario,
                            seed,
                            round,
                            accuracy: rng.random_range(0..=9) as f64 / 9.0,
                            n_questions: 9,
                            eval_model: "student".into(),
                            teacher_model: "teacher".into(),
                        });
                    }
                }
            }
        }
    }
    out
}

fn bench(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let values: Vec<f64> = (0..200).map(|_| rng.random::<f64>()).collect();
    c.bench_function("bootstrap_ci/200x1000", |b| b.iter(|| bootstrap_ci(black_box(&values), 0.95, 1000, 7).unwrap()));

    let recs = records();
    c.bench_function("delta_table/10800", |b| b.iter(|| delta_table(black_box(&recs))));
    let mut g = c.benchmark_group("curves");
    g.sample_size(10);
    g.bench_function("curves/10800", |b| b.iter(|| curves(black_box(&recs), 1000, 0)));
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
