use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use interact_core::corpus::ContextDocument;
use interact_core::dialogue::Transcript;
use interact_core::features::{build_feature_matrix, extract_round_features, hash_embed, HeuristicAnnotator};
use interact_core::simulate::demo_corpus;
use interact_core::text::sentences;

/// Five rounds built from the document's own sentences.
fn transcript(doc: &ContextDocument) -> Transcript {
    let ss = sentences(&doc.body);
    let questions: Vec<String> = (0..5).map(|i| format!("What happens with {}?", ss[i].to_lowercase())).collect();
    let answers: Vec<String> = (0..5).map(|i| format!("{}. {}.", ss[2 * i], ss[2 * i + 1])).collect();
    let pairs: Vec<(&str, &str)> = questions.iter().map(String::as_str).zip(answers.iter().map(String::as_str)).collect();
    Transcript::from_dialogue(&doc.id, doc.domain, &pairs, &[3, 4, 5, 6, 7, 8], 9)
}

fn bench(c: &mut Criterion) {
    let corpus = demo_corpus();
    let doc = &corpus.contexts[1];
    let t = transcript(doc);
    let ann = HeuristicAnnotator::default();
    c.bench_function("extract_round_features/round5", |b| {
        b.iter(|| extract_round_features(black_box(&t), 5, doc, &ann).unwrap())
    });

    let transcripts: Vec<Transcript> = corpus.contexts.iter().map(transcript).collect();
    let docs: BTreeMap<String, ContextDocument> = corpus.contexts.iter().map(|d| (d.id.clone(), d.clone())).collect();
    c.bench_function("build_feature_matrix/3x5", |b| {
        b.iter(|| build_feature_matrix(black_box(&transcripts), &docs, &ann).unwrap())
    });

    c.bench_function("hash_embed/body", |b| b.iter(|| hash_embed(black_box(&doc.body), 256)));
}

criterion_group!(benches, bench);
criterion_main!(benches);
