//! Brute-force restatement of the 45 per-round transcript features.
//!
//! Written against the feature definitions only: its own tokenizer, hash,
//! embedding, and vocabularies. Nothing here calls into the library.

use std::collections::{BTreeMap, BTreeSet, HashMap};

const STARTERS: [&str; 7] = ["who", "what", "where", "when", "why", "how", "which"];
const YES_NO: [&str; 15] = [
    "are", "can", "could", "did", "do", "does", "had", "has", "have", "is", "should", "was", "were", "will", "would",
];
const HEDGE: [&str; 13] = [
    "could", "guess", "kindly", "maybe", "might", "perhaps", "please", "possibly", "probably", "seems", "somewhat",
    "wonder", "would",
];
const MODAL: [&str; 14] = [
    "can", "could", "likely", "may", "maybe", "might", "must", "perhaps", "possibly", "probably", "shall", "should",
    "will", "would",
];
const TEMPORAL: [&str; 35] = [
    "after", "afterward", "afterwards", "before", "century", "currently", "day", "days", "decade", "during",
    "earlier", "eventually", "finally", "first", "later", "meanwhile", "month", "months", "next", "now",
    "previously", "recently", "since", "soon", "then", "today", "tomorrow", "until", "week", "weeks", "when",
    "while", "year", "years", "yesterday",
];
const SOCIAL: [&str; 9] = ["appreciate", "glad", "kindly", "please", "pleasure", "sorry", "thank", "thanks", "welcome"];
const EXAMPLES: [&str; 5] = ["e.g.", "for example", "for instance", "such as", "to illustrate"];
const META: [&str; 8] = [
    "as i mentioned", "as i said", "as mentioned", "as discussed", "as noted", "as we saw", "like i said", "you asked",
];
const SUBORD: [&str; 17] = [
    "after", "although", "as", "because", "before", "if", "since", "that", "though", "unless", "when", "where",
    "which", "while", "who", "whom", "whose",
];
const BE: [&str; 8] = ["am", "are", "be", "been", "being", "is", "was", "were"];
const IRREGULAR: [&str; 53] = [
    "begun", "born", "bought", "brought", "built", "caught", "cut", "done", "drawn", "dug", "fed", "felt", "fought",
    "found", "given", "held", "hit", "hung", "hurt", "kept", "known", "laid", "led", "left", "lit", "lost", "made",
    "meant", "met", "paid", "put", "read", "said", "seen", "sent", "set", "shot", "shown", "shut", "sold", "sought",
    "spent", "spun", "stood", "struck", "sung", "taught", "thought", "told", "understood", "won", "wound", "written",
];
const NOT_PARTICIPLE: [&str; 28] = [
    "bed", "been", "children", "even", "feed", "garden", "golden", "heaven", "hundred", "indeed", "kitten", "listen",
    "men", "need", "often", "open", "red", "seed", "seven", "shed", "speed", "sudden", "ten", "then", "token", "when",
    "women", "wooden",
];
const PRONOUNS: [&str; 16] = [
    "he", "her", "hers", "herself", "him", "himself", "his", "it", "its", "itself", "she", "their", "theirs", "them",
    "themselves", "they",
];
const STOP: [&str; 127] = [
    "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any", "are", "as", "at",
    "be", "because", "been", "before", "being", "below", "between", "both", "but", "by", "can", "could", "did", "do",
    "does", "doing", "down", "during", "each", "few", "for", "from", "further", "had", "has", "have", "having", "he",
    "her", "here", "hers", "herself", "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its",
    "itself", "just", "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once",
    "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own", "same", "she", "should", "so", "some",
    "such", "than", "that", "the", "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this",
    "those", "through", "to", "too", "under", "until", "up", "very", "was", "we", "were", "what", "when", "where",
    "which", "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself", "yourselves",
];

fn is_apos(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Runs of letters, digits and apostrophes, outer apostrophes stripped, original case.
pub fn raw_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let flush = |cur: &mut String, out: &mut Vec<String>| {
        let chars: Vec<char> = cur.chars().collect();
        let mut lo = 0;
        let mut hi = chars.len();
        while lo < hi && is_apos(chars[lo]) {
            lo += 1;
        }
        while hi > lo && is_apos(chars[hi - 1]) {
            hi -= 1;
        }
        if lo < hi {
            out.push(chars[lo..hi].iter().collect());
        }
        cur.clear();
    };
    for c in text.chars() {
        if c.is_alphanumeric() || is_apos(c) {
            cur.push(c);
        } else {
            flush(&mut cur, &mut out);
        }
    }
    flush(&mut cur, &mut out);
    out
}

pub fn toks(text: &str) -> Vec<String> {
    raw_tokens(text).into_iter().map(|t| t.to_lowercase()).collect()
}

pub fn sents(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars().chain(std::iter::once('.')) {
        if matches!(c, '.' | '!' | '?') {
            if !raw_tokens(&cur).is_empty() {
                out.push(cur.trim().to_string());
            }
            cur.clear();
        } else {
            cur.push(c);
        }
    }
    out
}

fn has(list: &[&str], w: &str) -> bool {
    list.iter().any(|x| *x == w)
}

fn tally(ws: &[String], list: &[&str]) -> f64 {
    ws.iter().filter(|w| has(list, w)).count() as f64
}

fn flag(b: bool) -> f64 {
    if b { 1.0 } else { 0.0 }
}

// ---- hashing and embedding ----

fn fnv(bytes: &[u8], basis: u64) -> u64 {
    bytes.iter().fold(basis, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

fn fmix(mut k: u64) -> u64 {
    k ^= k >> 33;
    k = k.wrapping_mul(0xff51afd7ed558ccd);
    k ^= k >> 33;
    k = k.wrapping_mul(0xc4ceb9fe1a85ec53);
    k ^= k >> 33;
    k
}

/// Sparse signed-hash embedding (unnormalized; cosine normalizes).
pub fn embed(text: &str) -> HashMap<u64, f64> {
    let w = toks(text);
    let mut grams: Vec<String> = w.clone();
    for i in 1..w.len() {
        grams.push(format!("{} {}", w[i - 1], w[i]));
    }
    let mut v: HashMap<u64, f64> = HashMap::new();
    for g in grams {
        let bucket = fmix(fnv(g.as_bytes(), 0xcbf29ce484222325)) % 256;
        let odd = fmix(fnv(g.as_bytes(), 0x9e3779b97f4a7c15)) % 2 == 1;
        *v.entry(bucket).or_insert(0.0) += if odd { -1.0 } else { 1.0 };
    }
    v
}

pub fn cos(a: &HashMap<u64, f64>, b: &HashMap<u64, f64>) -> f64 {
    let na: f64 = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.iter().map(|(k, x)| x * b.get(k).copied().unwrap_or(0.0)).sum();
    (dot / na / nb).clamp(-1.0, 1.0)
}

// ---- linguistic measures ----

pub fn syllables(word: &str) -> usize {
    let letters: Vec<char> = word.to_lowercase().chars().filter(|c| c.is_alphabetic()).collect();
    let vowel = |c: char| "aeiouy".contains(c);
    let mut n = 0;
    for i in 0..letters.len() {
        if vowel(letters[i]) && (i == 0 || !vowel(letters[i - 1])) {
            n += 1;
        }
    }
    let k = letters.len();
    let silent_e = k >= 1 && letters[k - 1] == 'e' && !(k >= 2 && letters[k - 2] == 'l');
    if silent_e && n > 0 {
        n -= 1;
    }
    if n == 0 { 1 } else { n }
}

pub fn flesch(text: &str) -> f64 {
    let ws = raw_tokens(text);
    if ws.is_empty() {
        return 0.0;
    }
    let s = sents(text).len().max(1) as f64;
    let syl: usize = ws.iter().map(|w| syllables(w)).sum();
    let n = ws.len() as f64;
    206.835 - 1.015 * n / s - 84.6 * syl as f64 / n
}

pub fn ttr(text: &str) -> f64 {
    let ws = toks(text);
    if ws.is_empty() {
        return 0.0;
    }
    ws.iter().collect::<BTreeSet<_>>().len() as f64 / ws.len() as f64
}

pub fn depth(text: &str) -> f64 {
    let ss = sents(text);
    if ss.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for s in &ss {
        total += 1.0 + tally(&toks(s), &SUBORD);
    }
    total / ss.len() as f64
}

fn participle(w: &str) -> bool {
    has(&IRREGULAR, w)
        || (w.len() >= 4 && (w.ends_with("ed") || w.ends_with("en")) && !has(&NOT_PARTICIPLE, w))
}

pub fn passives(text: &str) -> usize {
    let ws = toks(text);
    let mut n = 0;
    for i in 0..ws.len() {
        if has(&BE, &ws[i]) && ((i + 1 < ws.len() && participle(&ws[i + 1])) || (i + 2 < ws.len() && participle(&ws[i + 2]))) {
            n += 1;
        }
    }
    n
}

struct Tok {
    core: String,
    lead: bool,
    trail: bool,
    initial: bool,
}

fn whitespace_tokens(text: &str) -> Vec<Tok> {
    let mut out = Vec::new();
    let mut at_start = true;
    for piece in text.split_whitespace() {
        let chars: Vec<char> = piece.chars().collect();
        let first = chars.iter().position(|c| c.is_alphanumeric());
        let Some(first) = first else {
            if chars.iter().any(|c| matches!(c, '.' | '!' | '?')) {
                at_start = true;
            }
            continue;
        };
        let last = chars.iter().rposition(|c| c.is_alphanumeric()).unwrap();
        let tail = &chars[last + 1..];
        out.push(Tok {
            core: chars[first..=last].iter().collect(),
            lead: first > 0,
            trail: !tail.is_empty(),
            initial: at_start,
        });
        at_start = tail.iter().any(|c| matches!(c, '.' | '!' | '?'));
    }
    out
}

/// Entity spans as (index of the first token, joined text).
pub fn entities(text: &str) -> Vec<(usize, String)> {
    let ts = whitespace_tokens(text);
    let first_person = ["I", "I'm", "I've", "I'll", "I'd", "I\u{2019}m", "I\u{2019}ve", "I\u{2019}ll", "I\u{2019}d"];
    let mut spans: Vec<(usize, Vec<String>)> = Vec::new();
    let mut open = false;
    for (i, t) in ts.iter().enumerate() {
        let upper = t.core.chars().next().map(|c| c.is_uppercase()).unwrap_or(false);
        let ent = upper && !t.initial && !has(&first_person, &t.core);
        if !ent {
            open = false;
            continue;
        }
        if open && !t.lead {
            spans.last_mut().unwrap().1.push(t.core.clone());
        } else {
            spans.push((i, vec![t.core.clone()]));
        }
        open = !t.trail;
    }
    spans.into_iter().map(|(i, p)| (i, p.join(" "))).collect()
}

pub fn coreference(text: &str) -> usize {
    let es = entities(text);
    if es.is_empty() {
        return 0;
    }
    let start = es[0].0;
    whitespace_tokens(text)
        .iter()
        .enumerate()
        .filter(|(i, t)| *i > start && has(&PRONOUNS, &t.core.to_lowercase()))
        .count()
}

pub fn f1(a: &str, b: &str) -> f64 {
    let (x, y) = (toks(a), toks(b));
    if x.is_empty() || y.is_empty() {
        return 0.0;
    }
    let mut cx: BTreeMap<&str, usize> = BTreeMap::new();
    let mut cy: BTreeMap<&str, usize> = BTreeMap::new();
    for w in &x {
        *cx.entry(w).or_insert(0) += 1;
    }
    for w in &y {
        *cy.entry(w).or_insert(0) += 1;
    }
    let common: usize = cx.iter().map(|(w, n)| (*n).min(cy.get(w).copied().unwrap_or(0))).sum();
    if common == 0 {
        return 0.0;
    }
    let p = common as f64 / x.len() as f64;
    let r = common as f64 / y.len() as f64;
    2.0 * p * r / (p + r)
}

fn is_content(w: &str) -> bool {
    !has(&STOP, w) && w.chars().any(|c| c.is_alphabetic())
}

pub fn key_terms(text: &str, n: usize) -> Vec<String> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for w in toks(text).into_iter().filter(|w| is_content(w)) {
        *counts.entry(w).or_insert(0) += 1;
    }
    let mut all: Vec<(String, usize)> = counts.into_iter().collect();
    // Selection by repeated maximum: highest count, then alphabetically first.
    let mut out = Vec::new();
    while out.len() < n && !all.is_empty() {
        let mut best = 0;
        for i in 1..all.len() {
            if all[i].1 > all[best].1 || (all[i].1 == all[best].1 && all[i].0 < all[best].0) {
                best = i;
            }
        }
        out.push(all.swap_remove(best).0);
    }
    out
}

fn pop_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

pub fn parse_keywords(raw: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for line in raw.lines() {
        let w = line.trim().to_lowercase();
        if !w.is_empty() && !w.starts_with('#') {
            out.insert(w);
        }
    }
    out
}

/// All 45 values for 1-based `round`. `pairs` are (question, answer) per
/// round; `acc[k]` is the quiz accuracy after round k, with `acc[0]` the
/// pre-dialogue quiz.
pub fn features(pairs: &[(&str, &str)], acc: &[f64], round: usize, reference: &str, keywords: &BTreeSet<String>) -> Vec<f64> {
    let i = round - 1;
    let (q, a) = pairs[i];
    let qs: Vec<&str> = pairs[..round].iter().map(|p| p.0).collect();
    let ans: Vec<&str> = pairs[..round].iter().map(|p| p.1).collect();
    let qw = toks(q);
    let aw = toks(a);
    let qe: Vec<_> = qs.iter().map(|t| embed(t)).collect();
    let ae: Vec<_> = ans.iter().map(|t| embed(t)).collect();

    let novelty = |es: &Vec<HashMap<u64, f64>>| {
        if i == 0 {
            return 1.0;
        }
        let mut m = f64::NEG_INFINITY;
        for e in &es[..i] {
            m = m.max(cos(&es[i], e));
        }
        1.0 - m.max(0.0)
    };

    let mut v = Vec::with_capacity(45);
    // question
    v.push(qw.len() as f64);
    v.push(depth(q));
    v.push(if qw.is_empty() { 0.0 } else { qw.iter().map(|w| w.chars().count()).sum::<usize>() as f64 / qw.len() as f64 });
    let q_ents = entities(q);
    v.push(q_ents.len() as f64);
    v.push(qw.iter().collect::<BTreeSet<_>>().into_iter().filter(|w| keywords.contains(*w)).count() as f64);
    v.push(flag(q.contains('?')));
    v.push(tally(&qw, &HEDGE));
    let qtype = match qw.first() {
        None => 0,
        Some(w) => match STARTERS.iter().position(|s| s == w) {
            Some(k) => k + 1,
            None if has(&YES_NO, w) => 8,
            None => 0,
        },
    };
    v.push(qtype as f64);
    v.push(novelty(&qe));
    v.push(flag(!q_ents.is_empty()));
    // response
    v.push(aw.len() as f64);
    v.push(if aw.is_empty() { 0.0 } else { aw.iter().filter(|w| is_content(w)).count() as f64 / aw.len() as f64 });
    v.push(novelty(&ae));
    let ref_s = sents(reference);
    let mut best: Option<usize> = None;
    for k in 0..ref_s.len() {
        if best.is_none() || f1(q, &ref_s[k]) > f1(q, &ref_s[best.unwrap()]) {
            best = Some(k);
        }
    }
    let correct = best.map(|k| f1(a, &ref_s[k])).unwrap_or(0.0);
    v.push(correct);
    v.push(flag(correct > 0.5));
    v.push(depth(a));
    v.push(entities(a).into_iter().map(|e| e.1).collect::<BTreeSet<_>>().len() as f64);
    v.push(tally(&aw, &TEMPORAL));
    let al = a.to_lowercase();
    v.push(flag(EXAMPLES.iter().any(|m| al.contains(m))));
    // dynamics
    v.push(round as f64);
    let exposure: BTreeSet<String> = ans.iter().flat_map(|t| toks(t)).collect();
    v.push(exposure.len() as f64);
    v.push(if i == 0 { 0.0 } else { depth(qs[i]) - depth(qs[i - 1]) });
    v.push(if i == 0 { 0.0 } else { depth(ans[i]) - depth(ans[i - 1]) });
    v.push(if i == 0 { 1.0 } else { 1.0 - cos(&ae[i], &ae[i - 1]).max(0.0) });
    v.push((1..=i).filter(|&j| cos(&qe[j], &qe[j - 1]) < 0.3).count() as f64);
    v.push((0..i).filter(|&j| f1(qs[j], ans[j]) < 0.1).count() as f64);
    let len_of = |t: &str| toks(t).len() as f64;
    v.push(if i == 0 { 0.0 } else { len_of(ans[i]) - ans[..i].iter().map(|t| len_of(t)).sum::<f64>() / i as f64 });
    // style
    v.push(ttr(q));
    v.push(ttr(a));
    v.push(aw.iter().filter(|w| keywords.contains(*w)).count() as f64);
    let lens: Vec<f64> = sents(a).iter().map(|s| raw_tokens(s).len() as f64).collect();
    v.push(pop_std(&lens));
    v.push(flesch(a));
    v.push(passives(a) as f64);
    v.push(tally(&aw, &MODAL));
    // semantic
    v.push(cos(&ae[i], &embed(reference)));
    v.push(coreference(a) as f64);
    v.push(if i == 0 { 0.0 } else { (0..i).map(|j| cos(&ae[i], &ae[j])).sum::<f64>() / i as f64 });
    let terms = key_terms(reference, 20);
    v.push(if terms.is_empty() { 0.0 } else { terms.iter().filter(|t| exposure.contains(*t)).count() as f64 / terms.len() as f64 });
    // performance
    v.push(acc[0]);
    v.push(100.0 * acc[round - 1]);
    v.push(depth(qs[i]) - depth(qs[0]));
    let uniq: BTreeSet<&String> = aw.iter().collect();
    let earlier: BTreeSet<String> = ans[..i].iter().flat_map(|t| toks(t)).collect();
    v.push(if i == 0 || uniq.is_empty() { 0.0 } else { uniq.iter().filter(|w| earlier.contains(**w)).count() as f64 / uniq.len() as f64 });
    v.push(tally(&qw, &SOCIAL) + tally(&aw, &SOCIAL));
    v.push(flag(META.iter().any(|m| al.contains(m))));
    v.push(acc[round] - acc[round - 1]);
    v
}
