//! The plain-text question block format that quiz-generation prompts ask for.
//!
//! ```text
//! ### QUESTION
//! Q: What colour is the car?
//! A) Red
//! B) Blue
//! C) Green
//! D) Black
//! ANSWER: B
//! ```

use crate::scoring::{parse_answer, Letter};

pub const SENTINEL: &str = "### QUESTION";

/// Format description pasted into generation prompts.
pub const FORMAT_SPEC: &str = "### QUESTION\n\
Q: <question text>\n\
A) <option>\n\
B) <option>\n\
C) <option>\n\
D) <option>\n\
ANSWER: <single letter A, B, C or D>";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionBlock {
    pub stem: String,
    pub options: [String; 4],
    pub answer_key: Letter,
}

pub fn render_block(stem: &str, options: &[String; 4], answer_key: Letter) -> String {
    let mut s = format!("{SENTINEL}\nQ: {stem}\n");
    for (letter, opt) in Letter::ALL.iter().zip(options) {
        s.push_str(&format!("{letter}) {opt}\n"));
    }
    s.push_str(&format!("ANSWER: {answer_key}\n"));
    s
}

/// Split a completion into blocks and parse each one independently.
/// Text before the first sentinel is ignored.
pub fn parse_blocks(completion: &str) -> Vec<Result<QuestionBlock, String>> {
    let mut blocks: Vec<Vec<&str>> = Vec::new();
    for line in completion.lines() {
        if line.trim() == SENTINEL {
            blocks.push(Vec::new());
        } else if let Some(current) = blocks.last_mut() {
            current.push(line);
        }
    }
    blocks.iter().map(|lines| parse_block(lines)).collect()
}

fn option_line(line: &str) -> Option<(Letter, &str)> {
    let mut chars = line.chars();
    let letter = Letter::from_char(chars.next()?)?;
    if !line.starts_with(|c: char| c.is_ascii_uppercase()) {
        return None;
    }
    let rest = chars.as_str();
    let rest = rest.strip_prefix([')', '.', ':'])?;
    Some((letter, rest.trim()))
}

fn parse_block(lines: &[&str]) -> Result<QuestionBlock, String> {
    let mut stem_lines = Vec::new();
    let mut options: Vec<(Letter, String)> = Vec::new();
    let mut answer = None;
    for raw in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let upper = line.to_ascii_uppercase();
        if upper.starts_with("ANSWER") {
            let after = line.split_once(':').map(|(_, r)| r).unwrap_or(&line[6..]);
            answer = Some(parse_answer(after).ok_or_else(|| format!("unreadable answer line `{line}`"))?);
        } else if upper.starts_with("DIFFICULTY:") {
            continue;
        } else if let Some((letter, text)) = option_line(line) {
            options.push((letter, text.to_string()));
        } else if options.is_empty() {
            let text = line
                .strip_prefix("Q:")
                .or_else(|| line.strip_prefix("Question:"))
                .unwrap_or(line)
                .trim();
            stem_lines.push(text);
        } else {
            return Err(format!("unexpected line after options: `{line}`"));
        }
    }
    let stem = stem_lines.join(" ");
    if stem.is_empty() {
        return Err("missing question text".into());
    }
    if options.len() != 4 || options.iter().zip(Letter::ALL).any(|((l, _), want)| *l != want) {
        return Err(format!("expected options A-D in order, found {}", options.len()));
    }
    if options.iter().any(|(_, t)| t.is_empty()) {
        return Err("empty option".into());
    }
    for i in 0..4 {
        for j in (i + 1)..4 {
            if options[i].1.eq_ignore_ascii_case(&options[j].1) {
                return Err(format!("duplicate options {} and {}", options[i].0, options[j].0));
            }
        }
    }
    let answer_key = answer.ok_or("missing ANSWER line")?;
    let options: [String; 4] = options
        .into_iter()
        .map(|(_, t)| t)
        .collect::<Vec<_>>()
        .try_into()
        .expect("four options");
    Ok(QuestionBlock { stem, options, answer_key })
}
