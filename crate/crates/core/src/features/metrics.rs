//! Deterministic text measurements used by the heuristic annotator.

use crate::text::{raw_words, sentences, words};

pub const SUBORDINATORS: &[&str] = &[
    "after", "although", "as", "because", "before", "if", "since", "that", "though", "unless", "when",
    "where", "which", "while", "who", "whom", "whose",
];

const BE_FORMS: &[&str] = &["am", "are", "be", "been", "being", "is", "was", "were"];

pub const IRREGULAR_PARTICIPLES: &[&str] = &[
    "begun", "born", "bought", "brought", "built", "caught", "cut", "done", "drawn", "dug", "fed",
    "felt", "fought", "found", "given", "held", "hit", "hung", "hurt", "kept", "known", "laid", "led",
    "left", "lit", "lost", "made", "meant", "met", "paid", "put", "read", "said", "seen", "sent",
    "set", "shot", "shown", "shut", "sold", "sought", "spent", "spun", "stood", "struck", "sung",
    "taught", "thought", "told", "understood", "won", "wound", "written",
];

/// -ed/-en words that are not participles.
const NOT_PARTICIPLES: &[&str] = &[
    "bed", "been", "children", "even", "feed", "garden", "golden", "heaven", "hundred", "indeed",
    "kitten", "listen", "men", "need", "often", "open", "red", "seed", "seven", "shed", "speed",
    "sudden", "ten", "then", "token", "when", "women", "wooden",
];

pub const THIRD_PERSON_PRONOUNS: &[&str] = &[
    "he", "her", "hers", "herself", "him", "himself", "his", "it", "its", "itself", "she", "their",
    "theirs", "them", "themselves", "they",
];

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Vowel-group count, dropping a trailing silent `e` unless the word ends
/// in `le`; at least 1.
pub fn syllables(word: &str) -> usize {
    let w: String = word.to_lowercase().chars().filter(|c| c.is_alphabetic()).collect();
    let mut groups = 0;
    let mut prev = false;
    for c in w.chars() {
        let v = is_vowel(c);
        if v && !prev {
            groups += 1;
        }
        prev = v;
    }
    if w.ends_with('e') && !w.ends_with("le") && groups > 0 {
        groups -= 1;
    }
    groups.max(1)
}

/// Flesch reading ease; empty text scores 0.
pub fn readability_with(text: &str, syl: impl Fn(&str) -> usize) -> f64 {
    let ws: Vec<&str> = raw_words(text).collect();
    if ws.is_empty() {
        return 0.0;
    }
    let n_sent = sentences(text).len().max(1) as f64;
    let n_words = ws.len() as f64;
    let n_syl: usize = ws.iter().map(|w| syl(w)).sum();
    206.835 - 1.015 * (n_words / n_sent) - 84.6 * (n_syl as f64 / n_words)
}

pub fn readability(text: &str) -> f64 {
    readability_with(text, syllables)
}

pub fn type_token_ratio(text: &str) -> f64 {
    let ws = words(text);
    if ws.is_empty() {
        return 0.0;
    }
    let distinct: std::collections::BTreeSet<&String> = ws.iter().collect();
    distinct.len() as f64 / ws.len() as f64
}

/// Mean over sentences of `1 + subordinator count`; empty text is 0.
pub fn depth_proxy(text: &str) -> f64 {
    let ss = sentences(text);
    if ss.is_empty() {
        return 0.0;
    }
    let total: usize = ss
        .iter()
        .map(|s| 1 + words(s).iter().filter(|w| SUBORDINATORS.contains(&w.as_str())).count())
        .sum();
    total as f64 / ss.len() as f64
}

fn is_participle(w: &str) -> bool {
    if IRREGULAR_PARTICIPLES.contains(&w) {
        return true;
    }
    w.len() > 3 && (w.ends_with("ed") || w.ends_with("en")) && !NOT_PARTICIPLES.contains(&w)
}

/// Be-forms followed within two tokens by a participle.
pub fn passive_count(text: &str) -> usize {
    let ws = words(text);
    ws.iter()
        .enumerate()
        .filter(|(i, w)| {
            BE_FORMS.contains(&w.as_str()) && ws[i + 1..].iter().take(2).any(|n| is_participle(n))
        })
        .count()
}

/// A whitespace token with surrounding punctuation split off.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token<'a> {
    pub core: &'a str,
    pub lead_punct: bool,
    pub trail_punct: bool,
    pub sentence_initial: bool,
}

pub fn tokens(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut initial = true;
    for raw in text.split_whitespace() {
        let core = raw.trim_matches(|c: char| !c.is_alphanumeric());
        if core.is_empty() {
            if raw.contains(['.', '!', '?']) {
                initial = true;
            }
            continue;
        }
        let start = raw.find(core).unwrap_or(0);
        let tail = &raw[start + core.len()..];
        out.push(Token {
            core,
            lead_punct: start > 0,
            trail_punct: !tail.is_empty(),
            sentence_initial: initial,
        });
        initial = tail.contains(['.', '!', '?']);
    }
    out
}

fn capitalized(core: &str) -> bool {
    core.chars().next().is_some_and(char::is_uppercase)
}

fn is_first_person(core: &str) -> bool {
    matches!(core, "I" | "I'm" | "I've" | "I'll" | "I'd" | "I’m" | "I’ve" | "I’ll" | "I’d")
}

/// Maximal runs of capitalized, non-sentence-initial tokens, as
/// `(first token index, span text)`. Punctuation between tokens ends a span.
pub fn entity_spans(text: &str) -> Vec<(usize, String)> {
    let toks = tokens(text);
    let mut spans = Vec::new();
    let mut cur: Option<(usize, Vec<&str>)> = None;
    for (i, t) in toks.iter().enumerate() {
        let is_ent = capitalized(t.core) && !t.sentence_initial && !is_first_person(t.core);
        if !is_ent || t.lead_punct {
            if let Some((s, parts)) = cur.take() {
                spans.push((s, parts.join(" ")));
            }
        }
        if is_ent {
            cur.get_or_insert_with(|| (i, Vec::new())).1.push(t.core);
            if t.trail_punct {
                let (s, parts) = cur.take().unwrap();
                spans.push((s, parts.join(" ")));
            }
        }
    }
    if let Some((s, parts)) = cur {
        spans.push((s, parts.join(" ")));
    }
    spans
}

/// Third-person pronouns appearing after the first entity span.
pub fn coreference_count(text: &str) -> usize {
    let Some(&(first, _)) = entity_spans(text).first() else {
        return 0;
    };
    tokens(text)
        .iter()
        .skip(first + 1)
        .filter(|t| THIRD_PERSON_PRONOUNS.contains(&t.core.to_lowercase().as_str()))
        .count()
}
