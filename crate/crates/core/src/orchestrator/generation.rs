use std::sync::Arc;

use crate::llm::{ChatMessage, ChatRequest, ChatTransport, Role};

/// Everything a reply generator gets for one turn.
#[derive(Debug, Clone, Copy)]
pub struct GenerationRequest<'a> {
    pub system_prompt: &'a str,
    /// Alternating user/assistant messages ending with the current user
    /// message.
    pub history: &'a [ChatMessage],
    /// Current assistant axis states as `(axis, state)` in declared order.
    pub axis_states: &'a [(String, usize)],
}

pub trait ReplyGenerator: Send + Sync {
    fn name(&self) -> String;
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String, String>;
}

impl<T: ReplyGenerator + ?Sized> ReplyGenerator for Arc<T> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String, String> {
        (**self).generate(request)
    }
}

/// Checks that `history` alternates user/assistant, starts and ends with a
/// user message.
pub fn validate_history(history: &[ChatMessage]) -> Result<(), String> {
    if history.is_empty() {
        return Err("history must end with the current user message".into());
    }
    for (i, m) in history.iter().enumerate() {
        let expected = if i % 2 == 0 { Role::User } else { Role::Assistant };
        if m.role != expected {
            return Err(format!("message {i} has role {:?}, expected {expected:?}", m.role));
        }
    }
    if history.len() % 2 == 0 {
        return Err("history must end with the current user message".into());
    }
    Ok(())
}

/// The chat messages sent for a reply: the system prompt, then the history.
pub fn build_messages(system_prompt: &str, history: &[ChatMessage]) -> Vec<ChatMessage> {
    std::iter::once(ChatMessage::system(system_prompt))
        .chain(history.iter().cloned())
        .collect()
}

pub fn generate_reply(
    backend: &dyn ReplyGenerator,
    system_prompt: &str,
    history: &[ChatMessage],
    axis_states: &[(String, usize)],
) -> Result<String, String> {
    validate_history(history)?;
    backend.generate(&GenerationRequest {
        system_prompt,
        history,
        axis_states,
    })
}

/// Test backend whose reply is a function of the axis states only, e.g.
/// `[echo] agency:4 communion:0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoGenerator;

impl ReplyGenerator for EchoGenerator {
    fn name(&self) -> String {
        "echo".into()
    }

    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String, String> {
        let states: Vec<String> = request
            .axis_states
            .iter()
            .map(|(axis, state)| format!("{axis}:{state}"))
            .collect();
        Ok(format!("[echo] {}", states.join(" ")))
    }
}

#[derive(Clone)]
pub struct RemoteGenerator {
    transport: Arc<dyn ChatTransport>,
    model: String,
    temperature: Option<f64>,
}

impl RemoteGenerator {
    pub fn new(transport: Arc<dyn ChatTransport>, model: impl Into<String>) -> Self {
        Self {
            transport,
            model: model.into(),
            temperature: None,
        }
    }

    pub fn with_temperature(mut self, temperature: Option<f64>) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn request_for(&self, request: &GenerationRequest<'_>) -> ChatRequest {
        ChatRequest {
            model: self.model.clone(),
            messages: build_messages(request.system_prompt, request.history),
            temperature: self.temperature,
            max_tokens: None,
        }
    }
}

impl std::fmt::Debug for RemoteGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteGenerator")
            .field("model", &self.model)
            .field("temperature", &self.temperature)
            .finish()
    }
}

impl ReplyGenerator for RemoteGenerator {
    fn name(&self) -> String {
        format!("remote:{}", self.model)
    }

    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String, String> {
        self.transport
            .complete(&self.request_for(request))
            .map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn states() -> Vec<(String, usize)> {
        vec![("agency".into(), 4), ("communion".into(), 0)]
    }

    #[test]
    fn echo_embeds_states() {
        let history = [ChatMessage::user("hi")];
        let reply = generate_reply(&EchoGenerator, "S", &history, &states()).unwrap();
        assert!(reply.contains("agency:4 communion:0"), "{reply}");
    }

    #[test]
    fn rejects_broken_history() {
        let two_users = [ChatMessage::user("a"), ChatMessage::user("b")];
        assert!(generate_reply(&EchoGenerator, "S", &two_users, &states()).is_err());
        let ends_with_reply = [ChatMessage::user("a"), ChatMessage::assistant("b")];
        assert!(generate_reply(&EchoGenerator, "S", &ends_with_reply, &states()).is_err());
        assert!(generate_reply(&EchoGenerator, "S", &[], &states()).is_err());
    }

    #[test]
    fn message_count() {
        for n in 0..6 {
            let mut history = Vec::new();
            for i in 0..n {
                history.push(ChatMessage::user(format!("u{i}")));
                history.push(ChatMessage::assistant(format!("a{i}")));
            }
            history.push(ChatMessage::user("now"));
            let messages = build_messages("S", &history);
            assert_eq!(messages.len(), 2 * n + 2);
            assert_eq!(messages[0], ChatMessage::system("S"));
            assert_eq!(messages.last().unwrap(), &ChatMessage::user("now"));
        }
    }
}
