#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde_json::{json, Value};
use suif_core::provider_gateway::{Transport, TransportError};
use suif_core::SemanticState;

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn fixtures() -> PathBuf {
    repo_root().join("fixtures")
}

pub fn scenario(name: &str) -> SemanticState {
    let path = fixtures().join("scenarios").join(format!("{name}.json"));
    SemanticState::deserialize(&std::fs::read(&path).unwrap()).unwrap()
}

pub fn source(name: &str) -> String {
    std::fs::read_to_string(fixtures().join("sources").join(name)).unwrap()
}

/// Transport that counts calls and answers from a queue of message contents.
#[derive(Default)]
pub struct Canned {
    pub replies: Mutex<Vec<String>>,
    pub calls: AtomicUsize,
}

impl Canned {
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn push(&self, content: impl Into<String>) {
        self.replies.lock().unwrap().push(content.into());
    }
}

impl Transport for Canned {
    fn post_json(&self, _: &str, _: Option<&str>, _: &Value, _: Duration) -> Result<Value, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let mut replies = self.replies.lock().unwrap();
        if replies.is_empty() {
            return Err(TransportError::Fatal("no canned reply".into()));
        }
        let content = replies.remove(0);
        Ok(json!({ "choices": [{ "message": { "role": "assistant", "content": content } }] }))
    }
}
