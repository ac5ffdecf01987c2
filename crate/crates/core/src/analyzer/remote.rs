use std::sync::Arc;

use super::{AnalyzerBackend, BackendCapability, RawScore, ScorePrompt};
use crate::llm::{ChatMessage, ChatRequest, ChatTransport};

/// Prompts a chat model for a score.
///
/// The request carries the axis prompt as system message, the message under
/// analysis as user message, and the prompt's answer prefix as a trailing
/// assistant message when the model supports prefilled answers.
#[derive(Clone)]
pub struct RemoteAnalyzer {
    transport: Arc<dyn ChatTransport>,
    model: String,
    supports_prefix: bool,
}

impl RemoteAnalyzer {
    pub fn new(transport: Arc<dyn ChatTransport>, model: impl Into<String>) -> Self {
        Self {
            transport,
            model: model.into(),
            supports_prefix: false,
        }
    }

    pub fn with_prefix_support(mut self, supported: bool) -> Self {
        self.supports_prefix = supported;
        self
    }

    pub fn request_for(&self, prompt: &ScorePrompt, message: &str) -> ChatRequest {
        let mut messages = vec![
            ChatMessage::system(prompt.prompt_text.clone()),
            ChatMessage::user(message),
        ];
        if self.supports_prefix {
            if let Some(prefix) = &prompt.answer_prefix {
                messages.push(ChatMessage::assistant(prefix.clone()));
            }
        }
        ChatRequest {
            model: self.model.clone(),
            messages,
            temperature: None,
            max_tokens: None,
        }
    }
}

impl std::fmt::Debug for RemoteAnalyzer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteAnalyzer")
            .field("model", &self.model)
            .field("supports_prefix", &self.supports_prefix)
            .finish()
    }
}

impl AnalyzerBackend for RemoteAnalyzer {
    fn capability(&self) -> BackendCapability {
        BackendCapability {
            name: format!("remote:{}", self.model),
            supports_prefix: self.supports_prefix,
        }
    }

    fn evaluate(&self, prompt: &ScorePrompt, message: &str) -> Result<RawScore, String> {
        self.transport
            .complete(&self.request_for(prompt, message))
            .map(RawScore::Text)
            .map_err(|e| e.to_string())
    }
}
