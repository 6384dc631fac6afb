use std::collections::VecDeque;
use std::sync::Mutex;

use super::transport::{ChatRequest, ChatResponse, Transport, TransportFailure};

#[derive(Debug, Clone, PartialEq)]
pub enum MockReply {
    Content(String),
    Failure(TransportFailure),
}

impl MockReply {
    pub fn json(value: &serde_json::Value) -> Self {
        MockReply::Content(value.to_string())
    }
}

/// Scripted provider. Replies are consumed in order; once the script runs out the
/// fallback reply (if any) repeats forever, otherwise a network failure is returned.
#[derive(Debug, Default)]
pub struct MockTransport {
    script: Mutex<VecDeque<MockReply>>,
    fallback: Option<MockReply>,
    seen: Mutex<Vec<ChatRequest>>,
}

impl MockTransport {
    pub fn scripted(replies: impl IntoIterator<Item = MockReply>) -> Self {
        Self { script: Mutex::new(replies.into_iter().collect()), ..Default::default() }
    }

    pub fn always(reply: MockReply) -> Self {
        Self { fallback: Some(reply), ..Default::default() }
    }

    pub fn with_fallback(mut self, reply: MockReply) -> Self {
        self.fallback = Some(reply);
        self
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.seen.lock().unwrap().clone()
    }
}

impl Transport for MockTransport {
    fn send(&self, req: &ChatRequest) -> Result<ChatResponse, TransportFailure> {
        self.seen.lock().unwrap().push(req.clone());
        let next = self.script.lock().unwrap().pop_front().or_else(|| self.fallback.clone());
        match next {
            Some(MockReply::Content(content)) => Ok(ChatResponse { content, ..Default::default() }),
            Some(MockReply::Failure(f)) => Err(f),
            None => Err(TransportFailure::Network("mock script exhausted".into())),
        }
    }
}

/// Always fails with a connection error; stands in for an unreachable provider.
#[derive(Debug, Default, Clone, Copy)]
pub struct Unreachable;

impl Transport for Unreachable {
    fn send(&self, _req: &ChatRequest) -> Result<ChatResponse, TransportFailure> {
        Err(TransportFailure::Network("provider unreachable".into()))
    }
}
