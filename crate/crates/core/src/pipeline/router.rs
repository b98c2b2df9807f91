use std::sync::Arc;

use async_trait::async_trait;

use crate::provider::{CallPurpose, ChatProvider, ChatRequest, ChatResponse, ProviderError};

/// Sends each request to the provider configured for its role: authoring
/// calls, student calls and teacher calls. Missing roles use the default.
pub struct RoleRouter {
    default: Arc<dyn ChatProvider>,
    author: Option<Arc<dyn ChatProvider>>,
    student: Option<Arc<dyn ChatProvider>>,
    teacher: Option<Arc<dyn ChatProvider>>,
}

impl RoleRouter {
    pub fn new(default: Arc<dyn ChatProvider>) -> Self {
        RoleRouter {
            default,
            author: None,
            student: None,
            teacher: None,
        }
    }

    /// Panics on a role other than `author`, `student` or `teacher`.
    pub fn with_role(mut self, role: &str, p: Arc<dyn ChatProvider>) -> Self {
        match role {
            "author" => self.author = Some(p),
            "student" => self.student = Some(p),
            "teacher" => self.teacher = Some(p),
            _ => panic!("unknown role {role}"),
        }
        self
    }

    pub fn role(purpose: CallPurpose) -> &'static str {
        use CallPurpose::*;
        match purpose {
            Lesson | QuizGenerate | QuizRegenerate | WeakProbe => "author",
            StudentQuestion | StudentSummary | StudentQuiz => "student",
            TeacherAnswer | TeacherQuiz => "teacher",
            Other => "default",
        }
    }

    fn pick(&self, purpose: CallPurpose) -> &Arc<dyn ChatProvider> {
        let chosen = match Self::role(purpose) {
            "author" => &self.author,
            "student" => &self.student,
            "teacher" => &self.teacher,
            _ => &None,
        };
        chosen.as_ref().unwrap_or(&self.default)
    }
}

#[async_trait]
impl ChatProvider for RoleRouter {
    async fn chat(&self, req: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        self.pick(req.purpose).chat(req).await
    }
}
