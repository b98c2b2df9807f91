#![allow(dead_code)]

pub mod oracle;

use chrono::NaiveDate;
use interact_core::corpus::{ContextDocument, Domain};
use interact_core::dialogue::Transcript;

pub const N_QUESTIONS: usize = 9;

pub const BODY: &str = "The Harbour Festival began in 1998 when Mara Quinn, a ferry captain, tied forty boats together. \
Every August the boats are decorated with lanterns and paper flags. Visitors walk across the floating deck \
because the old bridge was closed after a storm. The city council later voted to fund the event. \
Critics said the crowds damaged the wetlands, so organisers moved the deck north. \
Today the festival draws thousands of people, and its lantern parade is broadcast nationally. \
Quinn still steers the lead boat, although she retired from the ferry service in 2015.";

pub fn doc() -> ContextDocument {
    ContextDocument::text(
        "news-harbour-festival",
        Domain::NewsArticles,
        "Harbour Festival",
        NaiveDate::from_ymd_opt(2024, 7, 1).unwrap(),
        BODY,
    )
}

/// Twenty student/teacher turns covering entities, passives, hedges,
/// markers, repeats, quotes, numbers and an empty-ish question.
pub const PAIRS: [(&str, &str); 20] = [
    (
        "What is the Harbour Festival?",
        "It is a yearly event in the city. The Harbour Festival began in 1998 when Mara Quinn tied forty boats together.",
    ),
    (
        "Who is Mara Quinn, and why did she tie the boats?",
        "Mara Quinn was a ferry captain. She tied the boats because the old bridge had been closed after a storm, so people needed a way across.",
    ),
    (
        "Could you perhaps explain how the boats are decorated?",
        "Sure! The boats are decorated with lanterns and paper flags, for example red lanterns on the lead boat.",
    ),
    (
        "when does it happen",
        "Every August. As I mentioned, the festival happens once a year.",
    ),
    (
        "Is the deck still in the same place?",
        "No. Critics said the crowds damaged the wetlands, so organisers moved the deck north. It was moved in 2003, and it may move again.",
    ),
    (
        "Thanks! Which group paid for the event?",
        "You're welcome. The city council later voted to fund the event, and local officials also paid a share.",
    ),
    (
        "Hmm.",
        "Let me add something: the lantern parade is broadcast nationally, and thousands of people watch it.",
    ),
    (
        "How many people visit the festival today?",
        "Today the festival draws thousands of people. Many of them travel from other cities, such as Porto and Lyon.",
    ),
    (
        "Does Quinn still take part?",
        "Yes. Quinn still steers the lead boat, although she retired from the ferry service in 2015. Her crew says she never misses a year.",
    ),
    (
        "Why were the wetlands a problem?",
        "The wetlands were being damaged by the crowds. Birds nest there in spring, and the deck was built over their nesting ground.",
    ),
    (
        "What does 'floating deck' mean here?",
        "The floating deck is the path made by the tied boats. Visitors walk across it instead of the old bridge.",
    ),
    (
        "Could the festival move again in the future, maybe?",
        "It might. The council could decide to move it if the wetlands need more protection; nothing is decided yet.",
    ),
    (
        "I wonder whether the \"lantern parade\" is televised.",
        "It is broadcast nationally. As noted before, the lantern parade is the most watched part.",
    ),
    (
        "Who organises it now?",
        "A volunteer committee, the Harbour Trust, organises it. They work with council officials and with Quinn. A police report praised them.",
    ),
    (
        "What happened to the old bridge?",
        "The old bridge was closed after a storm. It was never rebuilt, which is why the deck became permanent.",
    ),
    (
        "Please summarise the history in order.",
        "First, in 1998 Quinn tied the boats. Then the council funded the event. Later the deck was moved north. Finally it became a national broadcast.",
    ),
    (
        "Are the paper flags written on?",
        "Yes, visitors write wishes on them. The flags are collected afterwards and kept in the city museum.",
    ),
    (
        "What is the Harbour Festival?",
        "It is a yearly event in the city. The Harbour Festival began in 1998 when Mara Quinn tied forty boats together.",
    ),
    (
        "so what did the critics say",
        "Critics said the crowds damaged the wetlands. I'd say their point was fair, and the organisers agreed.",
    ),
    (
        "Thank you, that is everything I needed.",
        "My pleasure, glad it helped. To illustrate the scale once more: forty boats, one deck, and thousands of visitors each August.",
    ),
];

/// Correct answers out of [`N_QUESTIONS`] after each round, round 0 first.
pub const CORRECT: [usize; 21] = [2, 3, 3, 4, 4, 5, 5, 5, 6, 6, 6, 7, 6, 7, 7, 8, 8, 8, 8, 9, 9];

pub fn transcript() -> Transcript {
    Transcript::from_dialogue("news-harbour-festival", Domain::NewsArticles, &PAIRS, &CORRECT, N_QUESTIONS)
}

pub fn accuracies() -> Vec<f64> {
    CORRECT.iter().map(|&c| c as f64 / N_QUESTIONS as f64).collect()
}

pub fn news_keywords() -> std::collections::BTreeSet<String> {
    oracle::parse_keywords(include_str!("../../data/keywords/news_articles.txt"))
}

/// Largest absolute difference between the library and the oracle, with
/// the feature name and round where it occurs.
pub fn oracle_max_diff() -> (f64, String, usize) {
    use interact_core::features::{extract_round_features, HeuristicAnnotator, FEATURE_NAMES};
    let t = transcript();
    let d = doc();
    let ann = HeuristicAnnotator::default();
    let acc = accuracies();
    let kw = news_keywords();
    let mut worst = (0.0, String::new(), 0);
    for round in 1..=PAIRS.len() {
        let lib = extract_round_features(&t, round as u32, &d, &ann).unwrap();
        let want = oracle::features(&PAIRS, &acc, round, BODY, &kw);
        assert_eq!(want.len(), FEATURE_NAMES.len());
        for (k, (x, y)) in lib.values.iter().zip(&want).enumerate() {
            let diff = (x - y).abs();
            if !(diff <= worst.0) {
                worst = (diff, FEATURE_NAMES[k].to_string(), round);
            }
        }
    }
    worst
}
