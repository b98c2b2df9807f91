//! Rule-based scripted fixtures: a JSON file of request matchers and reply
//! generators that turns [`ScriptedProvider`] into a plausible offline
//! student, teacher and quiz author.
//!
//! Every reply is a pure function of the request (including its wire seed),
//! so runs are reproducible at any parallelism.
//!
//! ```json
//! {
//!   "rules": [
//!     {"purpose": "teacher_answer", "reply": {"kind": "best_sentence", "count": 2}},
//!     {"purpose": "student_quiz", "reply": {"kind": "mcq_from_context"}},
//!     {"model": "weak", "contains": "Question:", "reply": {"kind": "text", "text": "A"}}
//!   ]
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::authoring::format::render_block;
use crate::corpus::{ContextDocument, CorpusManifest, Domain};
use crate::prompts::CONTEXT_HEADER;
use crate::provider::{CallPurpose, ChatRequest, DefaultReply, Matcher, Reply, ScriptEntry, ScriptedProvider};
use crate::scoring::Letter;
use crate::text::{content_words, raw_words, sentences, words};
use crate::util::fnv1a_parts;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReplySpec {
    Text { text: String },
    /// One of `options`, chosen by a hash of the request.
    Pick { options: Vec<String> },
    /// The first `count` sentences of the context document.
    LeadSentences { count: usize },
    /// The `count` context sentences not yet revealed in the conversation
    /// that share the most words with the question.
    BestSentence { count: usize },
    /// Multiple-choice answer: the option whose completed statement appears
    /// in the request's context, else a hash-chosen guess.
    McqFromContext,
    /// Fill-in-the-blank questions built from context sentences. `count`
    /// defaults to the number after "exactly" in the prompt, else 1.
    ClozeQuiz {
        #[serde(default)]
        count: Option<usize>,
    },
    /// The last user message, verbatim.
    EchoUser,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purpose: Option<CallPurpose>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contains: Option<String>,
    pub reply: ReplySpec,
}

impl Rule {
    pub fn for_purpose(purpose: CallPurpose, reply: ReplySpec) -> Self {
        Rule {
            purpose: Some(purpose),
            model: None,
            contains: None,
            reply,
        }
    }

    fn matcher(&self) -> Matcher {
        let mut all = Vec::new();
        if let Some(p) = self.purpose {
            all.push(Matcher::Purpose(p));
        }
        if let Some(m) = &self.model {
            all.push(Matcher::Model(m.clone()));
        }
        if let Some(c) = &self.contains {
            all.push(Matcher::Contains(c.clone()));
        }
        match all.len() {
            0 => Matcher::Any,
            1 => all.pop().unwrap(),
            _ => Matcher::All(all),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub rules: Vec<Rule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<ReplySpec>,
    /// If set, only these models accept image parts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vision_models: Option<Vec<String>>,
}

impl Fixture {
    pub fn load(path: &Path) -> Result<Self, std::io::Error> {
        let raw = std::fs::read_to_string(path)?;
        serde_json::from_str(&raw).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fixture serializes") + "\n"
    }

    /// A complete offline cast: the lesson is the document's opening,
    /// the teacher reveals two sentences per answer, the student answers
    /// cloze questions it has seen the source sentence for, and the weak
    /// probe guesses.
    pub fn standard() -> Self {
        use CallPurpose::*;
        Fixture {
            rules: vec![
                Rule::for_purpose(Lesson, ReplySpec::LeadSentences { count: 3 }),
                Rule::for_purpose(QuizGenerate, ReplySpec::ClozeQuiz { count: None }),
                Rule::for_purpose(QuizRegenerate, ReplySpec::ClozeQuiz { count: Some(1) }),
                Rule::for_purpose(
                    WeakProbe,
                    ReplySpec::Pick {
                        options: vec!["A".into(), "B".into(), "C".into(), "D".into()],
                    },
                ),
                Rule::for_purpose(
                    StudentQuestion,
                    ReplySpec::Pick {
                        options: vec![
                            "What is the main thing I should know about this?".into(),
                            "Who are the people involved and what do they do?".into(),
                            "What happens after that?".into(),
                            "Can you tell me more details about the events?".into(),
                            "Where and when does this take place?".into(),
                            "Why does it matter, and what is the outcome?".into(),
                        ],
                    },
                ),
                Rule::for_purpose(TeacherAnswer, ReplySpec::BestSentence { count: 2 }),
                Rule::for_purpose(StudentSummary, ReplySpec::EchoUser),
                Rule::for_purpose(StudentQuiz, ReplySpec::McqFromContext),
                Rule::for_purpose(TeacherQuiz, ReplySpec::McqFromContext),
            ],
            default: Some(ReplySpec::Text { text: "I am not sure.".into() }),
            vision_models: None,
        }
    }

    pub fn provider(&self) -> ScriptedProvider {
        let entries = self
            .rules
            .iter()
            .map(|r| {
                let spec = r.reply.clone();
                ScriptEntry::always(r.matcher(), Reply::dynamic(move |req| respond(&spec, req)))
            })
            .collect();
        let default = match &self.default {
            Some(spec) => {
                let spec = spec.clone();
                DefaultReply::Fixed(Reply::dynamic(move |req| respond(&spec, req)))
            }
            None => DefaultReply::None,
        };
        let p = ScriptedProvider::new(entries, default);
        match &self.vision_models {
            Some(v) => p.with_vision_models(v.iter().cloned()),
            None => p,
        }
    }
}

fn request_hash(req: &ChatRequest, salt: &str) -> u64 {
    let seed = req.seed.map(|s| s.to_string()).unwrap_or_default();
    let purpose = req.purpose.to_string();
    fnv1a_parts([req.model_id.as_str(), purpose.as_str(), &req.full_text(), &seed, salt])
}

pub fn respond(spec: &ReplySpec, req: &ChatRequest) -> String {
    match spec {
        ReplySpec::Text { text } => text.clone(),
        ReplySpec::Pick { options } => {
            if options.is_empty() {
                return String::new();
            }
            options[(request_hash(req, "pick") % options.len() as u64) as usize].clone()
        }
        ReplySpec::LeadSentences { count } => {
            let (body, _) = split_context(req);
            join_sentences(sentences(&body).into_iter().take(*count))
        }
        ReplySpec::BestSentence { count } => best_sentences(req, *count),
        ReplySpec::McqFromContext => answer_mcq(req),
        ReplySpec::ClozeQuiz { count } => cloze_quiz(req, *count),
        ReplySpec::EchoUser => req.last_user_text(),
    }
}

fn join_sentences<'s>(it: impl Iterator<Item = &'s str>) -> String {
    it.map(|s| format!("{s}.")).collect::<Vec<_>>().join(" ")
}

/// Document text from the message holding the context header (title and
/// caption lines skipped, cut at a "Conversation so far:" marker), and all
/// remaining request text.
fn split_context(req: &ChatRequest) -> (String, String) {
    let texts: Vec<String> = req.messages.iter().map(|m| m.text_content()).collect();
    let Some(idx) = texts.iter().position(|t| t.contains(CONTEXT_HEADER)) else {
        return (String::new(), texts.join("\n"));
    };
    let msg = &texts[idx];
    let at = msg.find(CONTEXT_HEADER).unwrap();
    let after = &msg[at + CONTEXT_HEADER.len()..];
    let (doc, tail) = match after.find("\nConversation so far:") {
        Some(i) => (&after[..i], &after[i..]),
        None => (after, ""),
    };
    let mut lines = doc.lines().peekable();
    let mut header = Vec::new();
    while let Some(l) = lines.peek() {
        if l.trim().is_empty() || l.starts_with("Title:") || l.starts_with("Caption:") {
            header.push(*l);
            lines.next();
        } else {
            break;
        }
    }
    let mut body = lines.collect::<Vec<_>>().join("\n");
    if body.trim().is_empty() {
        // Image documents: fall back to title and caption.
        body = header
            .iter()
            .filter_map(|l| l.strip_prefix("Title:").or_else(|| l.strip_prefix("Caption:")))
            .map(|s| s.trim().trim_end_matches('.').to_string() + ".")
            .collect::<Vec<_>>()
            .join(" ");
    }
    let mut rest: Vec<&str> = texts.iter().enumerate().filter(|(i, _)| *i != idx).map(|(_, t)| t.as_str()).collect();
    rest.push(&msg[..at]);
    rest.push(tail);
    (body, rest.join("\n"))
}

fn word_key(s: &str) -> String {
    format!(" {} ", words(s).join(" "))
}

fn best_sentences(req: &ChatRequest, count: usize) -> String {
    let (body, rest) = split_context(req);
    let candidates = sentences(&body);
    if candidates.is_empty() {
        return "I cannot find that in the material.".into();
    }
    let revealed = word_key(&rest);
    let question: std::collections::BTreeSet<String> = content_words(&req.last_user_text()).into_iter().collect();
    let mut scored: Vec<(usize, usize, &str)> = candidates
        .iter()
        .enumerate()
        .filter(|(_, s)| !revealed.contains(&word_key(s)))
        .map(|(i, s)| {
            let overlap = content_words(s).iter().filter(|w| question.contains(*w)).count();
            (overlap, i, *s)
        })
        .collect();
    if scored.is_empty() {
        return join_sentences(candidates.into_iter().take(count));
    }
    // Highest overlap first, then document order.
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut picked: Vec<(usize, &str)> = scored.into_iter().take(count.max(1)).map(|(_, i, s)| (i, s)).collect();
    picked.sort();
    join_sentences(picked.into_iter().map(|(_, s)| s))
}

/// `(stem, options)` from the "Question: ...\nA) ..." block of the last user message.
fn parse_mcq(text: &str) -> Option<(String, Vec<String>)> {
    let mut stem = None;
    let mut options = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if let Some(s) = line.strip_prefix("Question:") {
            stem = Some(s.trim().to_string());
        } else if line.len() > 2 && Letter::from_char(line.chars().next()?).is_some() && line[1..].starts_with(')') {
            options.push(line[2..].trim().to_string());
        }
    }
    Some((stem?, options)).filter(|(_, o)| o.len() == 4)
}

fn answer_mcq(req: &ChatRequest) -> String {
    let user = req.last_user_text();
    let guess = Letter::ALL[(request_hash(req, "guess") % 4) as usize];
    let Some((stem, options)) = parse_mcq(&user) else {
        return guess.to_string();
    };
    let knowledge: String = req
        .messages
        .iter()
        .take(req.messages.len().saturating_sub(1))
        .map(|m| m.text_content())
        .collect::<Vec<_>>()
        .join("\n");
    let known = word_key(&knowledge);
    let statement = stem
        .split_once('"')
        .and_then(|(_, r)| r.rsplit_once('"'))
        .map(|(s, _)| s.to_string())
        .unwrap_or(stem.clone());
    let hits: Vec<usize> = options
        .iter()
        .enumerate()
        .filter(|(_, opt)| {
            let filled = if statement.contains("____") {
                statement.replace("____", opt)
            } else {
                opt.to_string()
            };
            known.contains(&word_key(&filled))
        })
        .map(|(i, _)| i)
        .collect();
    match hits.as_slice() {
        [i] => Letter::ALL[*i].to_string(),
        _ => guess.to_string(),
    }
}

fn requested_count(system: &str) -> Option<usize> {
    let at = system.find("exactly ")?;
    system[at + 8..]
        .split_whitespace()
        .next()?
        .trim_matches(|c: char| !c.is_ascii_digit())
        .parse()
        .ok()
}

fn cloze_quiz(req: &ChatRequest, count: Option<usize>) -> String {
    let full = req.full_text();
    let (body, _) = split_context(req);
    let count = count.or_else(|| requested_count(&req.system_text())).unwrap_or(1).max(1);
    // Each usable sentence with its blankable words; the longest (earliest
    // on ties) is the default answer.
    let usable: Vec<(&str, Vec<&str>, usize)> = sentences(&body)
        .into_iter()
        .filter(|s| raw_words(s).count() >= 4)
        .filter_map(|s| {
            let cands: Vec<&str> = raw_words(s).filter(|w| w.chars().count() >= 4 && !content_words(w).is_empty()).collect();
            let best = (0..cands.len()).fold(None::<usize>, |best, i| match best {
                Some(b) if cands[b].chars().count() >= cands[i].chars().count() => Some(b),
                _ => Some(i),
            })?;
            Some((s, cands, best))
        })
        .collect();
    let mut vocab: Vec<String> = raw_words(&body)
        .filter(|w| w.chars().count() >= 4 && !content_words(w).is_empty())
        .map(str::to_string)
        .collect();
    vocab.sort();
    vocab.dedup();
    if usable.is_empty() || vocab.len() < 4 {
        return "I could not write questions for this material.".into();
    }
    let stem_for = |sentence: &str, answer: &str| format!("Fill in the blank: \"{}\"", sentence.replacen(answer, "____", 1));
    // A single regenerated question rewrites the sentence behind the first
    // rejected stem with another blank, which keeps regenerations of
    // different questions apart. Otherwise it takes a request-dependent
    // sentence behind no stem already in the prompt, then any stem not in
    // the prompt.
    let single = count == 1;
    let h = request_hash(req, "cloze");
    let in_prompt = |i: usize, w: &str| full.contains(&stem_for(usable[i].0, w));
    let rotated = |i: usize| {
        let cands = &usable[i].1;
        let r = (h >> 32) as usize % cands.len();
        cands[r..].iter().chain(&cands[..r]).copied().collect::<Vec<&str>>()
    };
    let picks: Vec<(usize, String)> = if single {
        let system = req.system_text();
        let first_rejected = system.lines().find_map(|l| l.strip_prefix("- "));
        let own = first_rejected.and_then(|stem| {
            let i = (0..usable.len()).find(|&i| usable[i].1.iter().any(|w| stem_for(usable[i].0, w) == stem))?;
            let w = rotated(i).into_iter().find(|w| !in_prompt(i, w))?;
            Some((i, w.to_string()))
        });
        let fresh: Vec<usize> = (0..usable.len()).filter(|&i| !usable[i].1.iter().any(|w| in_prompt(i, w))).collect();
        let fresh_pick = (!fresh.is_empty()).then(|| {
            let i = fresh[(h % fresh.len() as u64) as usize];
            (i, rotated(i)[0].to_string())
        });
        let unused = || {
            (0..usable.len())
                .flat_map(|i| rotated(i).into_iter().map(move |w| (i, w)))
                .find(|&(i, w)| !in_prompt(i, w))
                .map(|(i, w)| (i, w.to_string()))
        };
        let start = (h % usable.len() as u64) as usize;
        let fallback = (start, usable[start].1[usable[start].2].to_string());
        vec![own.or(fresh_pick).or_else(unused).unwrap_or(fallback)]
    } else {
        (0..count).map(|k| k % usable.len()).map(|i| (i, usable[i].1[usable[i].2].to_string())).collect()
    };
    let mut out = String::new();
    for (i, answer) in picks {
        let sentence = usable[i].0;
        let stem = stem_for(sentence, &answer);
        let mut distractors: Vec<&String> = vocab.iter().filter(|w| !w.eq_ignore_ascii_case(&answer)).collect();
        distractors.sort_by_key(|w| fnv1a_parts([w.as_str(), sentence, "distractor"]));
        let key = Letter::ALL[(fnv1a_parts([sentence, "key"]) % 4) as usize];
        let mut opts: Vec<String> = distractors.into_iter().take(3).cloned().collect();
        opts.insert(key.index(), answer.clone());
        let opts: [String; 4] = opts.try_into().expect("four options");
        out.push_str(&render_block(&stem, &opts, key));
    }
    out
}

const DEMO_SONG: &str = "Ivy Lark released the single Paper Harbour in March. The song was recorded in a church in Galway. \
    Its chorus compares an old friendship to a boat left on the shore. The drummer used brushes on every take. \
    A cello enters during the second verse. The bridge repeats the line about the tide turning. \
    Lark wrote the lyrics on a night ferry to Holyhead. The video was filmed on a frozen lake. \
    Critics praised the quiet final minute. The single reached number four in Ireland. \
    Proceeds went to a coastal rescue charity. Lark performed it live on a lighthouse balcony. \
    The sleeve shows a paper boat drawn in charcoal. A remix by a Belfast producer followed in May. \
    The second verse mentions a postcard from Cork. Fans sang the chorus at a harbour festival. \
    The song closes with a recording of seagulls.";

const DEMO_NEWS: &str = "The city council approved a floating library for the river district. Construction begins in June. \
    The barge will hold twelve thousand books. Volunteers will staff the reading deck on weekends. \
    Solar panels will power the lights and the heating. The project costs four million euro. \
    A local shipyard donated the hull. Schools will visit on Tuesday mornings. \
    The mayor called the library a bridge between neighbourhoods. Critics worried about winter storms. \
    Engineers added a second anchor after the review. The first chapter reading is planned for September. \
    Children under twelve will borrow books without a card. The barge will dock at a different quay each month. \
    A café on the upper deck will sell soup and tea. The architect based the roof on a heron wing. \
    Residents voted on the name in an online poll.";

const DEMO_MOVIE: &str = "A retired cartographer discovers that her maps are changing overnight. She lives alone above a bakery in Lisbon. \
    Each morning a new street appears on the paper. Her grandson Tomas helps her follow the streets. \
    The streets lead to places from her childhood. A rival collector tries to steal the maps. \
    The baker hides the maps inside a bread oven. Tomas learns that the ink was a gift from his grandfather. \
    The final street leads to the harbour where her husband vanished. She burns the last map at sunrise. \
    The city returns to its normal shape. Tomas keeps a single blank sheet as a memento. \
    The maps are drawn with a violet ink that glows at night. A street musician warns her about the collector. \
    Her childhood school appears on the fourth map. The collector is revealed to be her former apprentice. \
    The film ends with Tomas drawing a new street himself.";

fn demo_doc(id: &str, domain: Domain, title: &str, body: &str) -> ContextDocument {
    ContextDocument::text(id, domain, title, chrono::NaiveDate::from_ymd_opt(2024, 6, 1).unwrap(), body)
}

/// Three short text concepts (a song, a news story and a film plot) that
/// pair with [`Fixture::standard`] for offline runs.
pub fn demo_corpus() -> CorpusManifest {
    CorpusManifest::new(vec![
        demo_doc("song-paper-harbour", Domain::SongLyrics, "Paper Harbour", DEMO_SONG),
        demo_doc("news-floating-library", Domain::NewsArticles, "Floating library", DEMO_NEWS),
        demo_doc("movie-moving-maps", Domain::MoviePlots, "The Moving Maps", DEMO_MOVIE),
    ])
}
