//! Prompt templates with `{{slot}}` placeholders.
//!
//! Defaults are compiled in; any template can be replaced by dropping a
//! `<name>.txt` file into a prompt directory and loading it with
//! [`PromptSet::load_overrides`].

use std::collections::BTreeMap;
use std::path::Path;

use crate::corpus::{ContextDocument, Domain};
use crate::provider::{ChatMessage, ContentPart};

pub const LESSON: &str = "lesson";
pub const QUIZ_GENERATE: &str = "quiz_generate";
pub const QUIZ_GENERATE_IMAGE: &str = "quiz_generate_image";
pub const QUIZ_REGENERATE: &str = "quiz_regenerate";
pub const WEAK_PROBE: &str = "weak_probe";
pub const EVAL_STUDENT_WO_LESSON: &str = "eval_student_wo_lesson";
pub const EVAL_STUDENT_W_CONTEXT: &str = "eval_student_w_lesson";
pub const EVAL_TEACHER: &str = "eval_teacher";
pub const STUDENT_QUESTION: &str = "student_question";
pub const TEACHER_ANSWER: &str = "teacher_answer";
pub const STUDENT_SUMMARIZE: &str = "student_summarize";

/// Header line that introduces the ground-truth document in teacher-side prompts.
pub const CONTEXT_HEADER: &str = "=== CONTEXT DOCUMENT ===";
/// Header line for the student's accumulated knowledge in student-side prompts.
pub const KNOWLEDGE_HEADER: &str = "=== WHAT YOU KNOW SO FAR ===";

const DEFAULTS: &[(&str, &str)] = &[
    (
        LESSON,
        "You are an expert teacher preparing a self-contained lesson about a new concept.\n\
         The concept is {{domain_focus}}.\n\
         Read the context document carefully and write a lesson that covers its key facts, \
         people, events, terminology and ideas, so that a student who never sees the document \
         can answer detailed questions about it. Write in clear prose and do not invent details.",
    ),
    (
        QUIZ_GENERATE,
        "You write multiple-choice quizzes that test understanding of a context document.\n\
         Write exactly {{count}} questions about the document below: three Middle-School level \
         questions (basic recall of facts and direct observations), then three College level \
         questions (relationships, causes, effects, motivations), then three Graduate level \
         questions (themes, synthesis, critical interpretation).\n\
         Every question must be answerable from the document alone and must not be answerable \
         from general knowledge.\n\
         Use exactly this format for every question, with no other text:\n\
         {{format}}",
    ),
    (
        QUIZ_GENERATE_IMAGE,
        "You write multiple-choice quizzes about an image.\n\
         Write exactly {{count}} questions about what is visible in the image. Each question \
         must be answerable by looking at the image.\n\
         Use exactly this format for every question, with no other text:\n\
         {{format}}",
    ),
    (
        QUIZ_REGENERATE,
        "You write multiple-choice questions that test understanding of a context document.\n\
         Write ONE new {{tier}} question about the document. It must require information \
         found only in the document. Do not reuse or paraphrase any of these rejected questions:\n\
         {{rejected}}\n\
         The quiz already contains these questions; do not duplicate them:\n\
         {{existing}}\n\
         Use exactly this format, with no other text:\n\
         {{format}}",
    ),
    (
        WEAK_PROBE,
        "Answer the multiple-choice question. Reply with the letter of the correct option only.",
    ),
    (
        EVAL_STUDENT_WO_LESSON,
        "You are taking a quiz about a concept you have not been taught.\n\
         Answer the multiple-choice question with the letter of the best option only.",
    ),
    (
        EVAL_STUDENT_W_CONTEXT,
        "You are a student taking a quiz about a concept. Use what you have learned, shown \
         below, to answer.\n\
         {{knowledge}}\n\
         Answer the multiple-choice question with the letter of the best option only.",
    ),
    (
        EVAL_TEACHER,
        "You are taking a quiz about the document below.\n\
         {{context}}\n\
         Answer the multiple-choice question with the letter of the best option only.",
    ),
    (
        STUDENT_QUESTION,
        "You are a curious student learning about a new concept ({{domain_focus}}) by talking \
         to a teacher who has the source material. You cannot see that material.\n\
         {{knowledge}}\n\
         Questions you have already asked:\n{{asked}}\n\
         Ask ONE new question that will teach you the most about the concept. Do not repeat \
         earlier questions. Reply with the question only.",
    ),
    (
        TEACHER_ANSWER,
        "You are a teacher. A student is learning about a concept and asks you questions. \
         Answer using the context document below, accurately and helpfully, without simply \
         pasting the whole document.\n\
         {{context}}\n\
         Conversation so far:\n{{history}}",
    ),
    (
        STUDENT_SUMMARIZE,
        "You are a student keeping notes about a concept you are learning. Merge the previous \
         notes and the latest exchange into updated notes that keep every concrete fact. \
         Reply with the notes only.",
    ),
];

#[derive(Debug, Clone)]
pub struct PromptSet {
    templates: BTreeMap<String, String>,
}

impl Default for PromptSet {
    fn default() -> Self {
        PromptSet {
            templates: DEFAULTS
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }
}

impl PromptSet {
    /// Replace templates with any `<name>.txt` present in `dir`.
    pub fn load_overrides(mut self, dir: &Path) -> std::io::Result<Self> {
        for name in self.templates.keys().cloned().collect::<Vec<_>>() {
            let path = dir.join(format!("{name}.txt"));
            if path.exists() {
                self.templates.insert(name, std::fs::read_to_string(path)?);
            }
        }
        Ok(self)
    }

    pub fn set(&mut self, name: &str, template: impl Into<String>) {
        self.templates.insert(name.to_string(), template.into());
    }

    pub fn get(&self, name: &str) -> &str {
        self.templates
            .get(name)
            .map(String::as_str)
            .unwrap_or_else(|| panic!("unknown prompt template `{name}`"))
    }

    pub fn render(&self, name: &str, slots: &[(&str, &str)]) -> String {
        render(self.get(name), slots)
    }
}

/// Fill `{{slot}}` placeholders. Unknown placeholders are left as-is.
pub fn render(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        match after.find("}}") {
            Some(end) => {
                let key = after[..end].trim();
                match slots.iter().find(|(k, _)| *k == key) {
                    Some((_, v)) => out.push_str(v),
                    None => out.push_str(&rest[start..start + 2 + end + 2]),
                }
                rest = &after[end + 2..];
            }
            None => {
                out.push_str(&rest[start..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

/// Short description of what a concept in each domain is.
pub fn domain_focus(domain: Domain) -> &'static str {
    match domain {
        Domain::SongLyrics => "a recently released song, including its lyrics, imagery and figurative language",
        Domain::NewsArticles => "a recent news story and the facts it reports",
        Domain::MoviePlots => "the plot of a recent movie: its characters, events and themes",
        Domain::AcademicPapers => "a recent research paper: its problem, methods, findings and terminology",
        Domain::Images => "an image and everything visible in it",
    }
}

/// Text block carrying a document's ground truth to a teacher-side model.
pub fn context_block(doc: &ContextDocument) -> String {
    let mut s = format!("{CONTEXT_HEADER}\nTitle: {}\n", doc.title);
    if let Some(c) = &doc.caption {
        s.push_str(&format!("Caption: {c}\n"));
    }
    if !doc.body.is_empty() {
        s.push('\n');
        s.push_str(&doc.body);
    }
    s
}

pub fn image_media_type(path: &Path) -> &'static str {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("png") => "image/png",
        Some("gif") => "image/gif",
        Some("webp") => "image/webp",
        _ => "image/jpeg",
    }
}

/// User message with the context block, plus the image for image documents.
pub fn context_message(doc: &ContextDocument) -> std::io::Result<ChatMessage> {
    let mut msg = ChatMessage::user(context_block(doc));
    if let Some(path) = &doc.image_path {
        let bytes = std::fs::read(path)?;
        msg = msg.with_part(ContentPart::image_from_bytes(image_media_type(path), &bytes));
    }
    Ok(msg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_fills_known_slots() {
        assert_eq!(render("a {{x}} b {{ y }}", &[("x", "1"), ("y", "2")]), "a 1 b 2");
        assert_eq!(render("keep {{z}}", &[]), "keep {{z}}");
        assert_eq!(render("open {{ only", &[]), "open {{ only");
    }

    #[test]
    fn defaults_cover_every_name() {
        let p = PromptSet::default();
        for name in [
            LESSON,
            QUIZ_GENERATE,
            QUIZ_GENERATE_IMAGE,
            QUIZ_REGENERATE,
            WEAK_PROBE,
            EVAL_STUDENT_WO_LESSON,
            EVAL_STUDENT_W_CONTEXT,
            EVAL_TEACHER,
            STUDENT_QUESTION,
            TEACHER_ANSWER,
            STUDENT_SUMMARIZE,
        ] {
            assert!(!p.get(name).is_empty());
        }
    }

    #[test]
    fn image_context_carries_payload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.png");
        std::fs::write(&path, b"\x89PNG").unwrap();
        let date = chrono::NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
        let doc = ContextDocument::image("img", "A dog", date, &path);
        let msg = context_message(&doc).unwrap();
        assert!(msg.has_image());
        assert!(msg.text_content().contains("A dog"));
        let missing = ContextDocument::image("img", "A dog", date, dir.path().join("nope.png"));
        assert!(context_message(&missing).is_err());
    }

    #[test]
    fn overrides_from_directory() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("lesson.txt"), "custom {{domain_focus}}").unwrap();
        let p = PromptSet::default().load_overrides(dir.path()).unwrap();
        assert_eq!(p.render(LESSON, &[("domain_focus", "x")]), "custom x");
    }
}
