//! The one place model calls go through.
//!
//! Three modes share one surface: `Live` talks to an OpenAI-compatible chat
//! completions endpoint (optionally recording what it sees), `Recorded`
//! replays fixtures from disk, and `Mock` answers deterministically. Every
//! structured payload is validated against its registered schema before it
//! is returned, whatever the mode.

mod http;
pub mod mock;
pub mod schemas;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use self::http::HttpTransport;
pub use self::schemas::{SchemaRegistry, ANALYZE_SCHEMA, PARSE_SCHEMA, RELATIONS_SCHEMA};
use crate::error::{Error, Result, SchemaIssue};
use crate::semantic_model::to_canonical_json;

pub const ENV_PROVIDER_KEY: &str = "SUIF_PROVIDER_KEY";
pub const ENV_PROVIDER_URL: &str = "SUIF_PROVIDER_URL";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);
/// Retries after the first attempt, transient transport errors only.
pub const MAX_RETRIES: usize = 2;
/// Fixture group for code generation requests.
pub const GENERATION_GROUP: &str = "gen";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Parse,
    AnalyzeArtifact,
    AnalyzeRelations,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attachment {
    pub media_type: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuredRequest {
    pub task: Task,
    pub system_instructions: String,
    pub user_payload: String,
    pub schema_id: String,
    pub attachments: Vec<Attachment>,
}

impl StructuredRequest {
    pub fn new(
        task: Task,
        schema_id: impl Into<String>,
        system_instructions: impl Into<String>,
        user_payload: impl Into<String>,
    ) -> Self {
        Self {
            task,
            system_instructions: system_instructions.into(),
            user_payload: user_payload.into(),
            schema_id: schema_id.into(),
            attachments: Vec::new(),
        }
    }

    pub fn with_attachment(mut self, attachment: Attachment) -> Self {
        self.attachments.push(attachment);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationRequest {
    prompt_document: String,
    previous_code: Option<String>,
    diff_summary: Option<String>,
}

impl GenerationRequest {
    pub fn initial(prompt_document: impl Into<String>) -> Result<Self> {
        Self::build(prompt_document.into(), None, None)
    }

    /// A regeneration anchored on `previous_code`, focused by `diff_summary`.
    pub fn scoped(
        prompt_document: impl Into<String>,
        previous_code: impl Into<String>,
        diff_summary: impl Into<String>,
    ) -> Result<Self> {
        Self::build(
            prompt_document.into(),
            Some(previous_code.into()),
            Some(diff_summary.into()),
        )
    }

    fn build(
        prompt_document: String,
        previous_code: Option<String>,
        diff_summary: Option<String>,
    ) -> Result<Self> {
        if prompt_document.is_empty() {
            return Err(Error::InvalidRequest("prompt document is empty".into()));
        }
        if previous_code.as_deref() == Some("") {
            return Err(Error::InvalidRequest("previous code is empty".into()));
        }
        Ok(Self {
            prompt_document,
            previous_code,
            diff_summary,
        })
    }

    pub fn prompt_document(&self) -> &str {
        &self.prompt_document
    }

    pub fn previous_code(&self) -> Option<&str> {
        self.previous_code.as_deref()
    }

    pub fn diff_summary(&self) -> Option<&str> {
        self.diff_summary.as_deref()
    }
}

/// Anything the gateway can key a fixture on.
pub trait ProviderRequest {
    /// Canonical JSON form. Field order is fixed; attachments appear as
    /// content digests.
    fn canonical(&self) -> Value;
    /// Subdirectory of the fixture store this request lives in.
    fn fixture_group(&self) -> &str;
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ProviderRequest for StructuredRequest {
    fn canonical(&self) -> Value {
        json!({
            "kind": "structured",
            "task": self.task,
            "schema_id": self.schema_id,
            "system_instructions": self.system_instructions,
            "user_payload": self.user_payload,
            "attachments": self.attachments.iter().map(|a| json!({
                "media_type": a.media_type,
                "sha256": sha256_hex(&a.bytes),
            })).collect::<Vec<_>>(),
        })
    }

    fn fixture_group(&self) -> &str {
        &self.schema_id
    }
}

impl ProviderRequest for GenerationRequest {
    fn canonical(&self) -> Value {
        json!({
            "kind": "generation",
            "prompt_document": self.prompt_document,
            "previous_code": self.previous_code,
            "diff_summary": self.diff_summary,
        })
    }

    fn fixture_group(&self) -> &str {
        GENERATION_GROUP
    }
}

/// Hex SHA-256 of the request's canonical serialization.
pub fn canonical_request_hash(req: &impl ProviderRequest) -> String {
    let bytes = serde_json::to_vec(&req.canonical()).expect("canonical form serializes");
    sha256_hex(&bytes)
}

#[derive(Debug)]
pub enum TransportError {
    /// Worth retrying: timeouts, connection failures, 5xx, 429.
    Transient(String),
    Fatal(String),
}

/// Network seam for live mode; tests inject their own.
pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        bearer: Option<&str>,
        body: &Value,
        timeout: Duration,
    ) -> Result<Value, TransportError>;
}

#[derive(Clone)]
pub struct LiveConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    pub structured_model: String,
    pub generation_model: String,
    pub timeout: Duration,
    /// When set, every successful live response is written as a fixture.
    pub record_dir: Option<PathBuf>,
}

impl std::fmt::Debug for LiveConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiveConfig")
            .field("base_url", &self.base_url)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("structured_model", &self.structured_model)
            .field("generation_model", &self.generation_model)
            .field("timeout", &self.timeout)
            .field("record_dir", &self.record_dir)
            .finish()
    }
}

impl LiveConfig {
    /// Endpoint and key from `SUIF_PROVIDER_URL` / `SUIF_PROVIDER_KEY`.
    pub fn from_env() -> Result<Self> {
        let base_url = std::env::var(ENV_PROVIDER_URL)
            .map_err(|_| Error::ConfigInvalid(format!("{ENV_PROVIDER_URL} is not set")))?;
        Ok(Self {
            base_url,
            api_key: std::env::var(ENV_PROVIDER_KEY).ok(),
            structured_model: "gpt-5".into(),
            generation_model: "v0-1.5-md".into(),
            timeout: DEFAULT_TIMEOUT,
            record_dir: None,
        })
    }
}

#[derive(Debug, Clone)]
pub enum ProviderMode {
    Mock,
    Recorded { fixture_dir: PathBuf },
    Live(LiveConfig),
}

impl ProviderMode {
    pub fn name(&self) -> &'static str {
        match self {
            ProviderMode::Mock => "mock",
            ProviderMode::Recorded { .. } => "recorded",
            ProviderMode::Live(_) => "live",
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Fixture {
    request_canonical: Value,
    response: Value,
    recorded_at: chrono::DateTime<chrono::Utc>,
}

/// Fixture file path for `req` under `dir`.
pub fn fixture_path(dir: &Path, req: &impl ProviderRequest) -> PathBuf {
    dir.join(req.fixture_group())
        .join(format!("{}.json", canonical_request_hash(req)))
}

/// Writes a fixture atomically (temp file, then rename). Re-recording the
/// same request replaces the previous file.
pub fn write_fixture(dir: &Path, req: &impl ProviderRequest, response: &Value) -> Result<PathBuf> {
    let path = fixture_path(dir, req);
    let parent = path.parent().expect("fixture path has a parent");
    fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    let fixture = Fixture {
        request_canonical: req.canonical(),
        response: response.clone(),
        recorded_at: chrono::Utc::now(),
    };
    crate::fsutil::write_atomic(&path, &to_canonical_json(&fixture))?;
    Ok(path)
}

fn read_fixture(dir: &Path, req: &impl ProviderRequest) -> Result<Value> {
    let path = fixture_path(dir, req);
    let bytes = match fs::read(&path) {
        Ok(bytes) => bytes,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::FixtureMissing {
                hash: canonical_request_hash(req),
                path,
            })
        }
        Err(e) => return Err(Error::io(path, e)),
    };
    let fixture: Fixture = crate::semantic_model::from_canonical_json(&bytes)?;
    Ok(fixture.response)
}

const GENERATION_SYSTEM: &str = "You write one self-contained React component from a UI \
specification given as markdown. Reply with the component source only.";

const SCOPED_INSTRUCTIONS: &str = "Regenerate the whole component. Apply only the semantic \
changes listed above, in the parts of the code that implement them. Keep all other markup, \
structure, copy, and styling identical to the previous code.";

fn generation_user_message(req: &GenerationRequest) -> String {
    let mut out = req.prompt_document.clone();
    if let Some(previous) = &req.previous_code {
        out.push_str("\n## Previous Code\n\n```tsx\n");
        out.push_str(previous);
        if !previous.ends_with('\n') {
            out.push('\n');
        }
        out.push_str("```\n");
        if let Some(diff) = &req.diff_summary {
            out.push_str("\n## Semantic Changes\n\n");
            out.push_str(diff);
            out.push('\n');
        }
        out.push('\n');
        out.push_str(SCOPED_INSTRUCTIONS);
        out.push('\n');
    }
    out
}

/// The first fenced block of a reply, or the whole reply when unfenced.
fn extract_code(content: &str) -> String {
    let Some(start) = content.find("```") else {
        return content.trim().to_string();
    };
    let after = &content[start + 3..];
    let body = after.split_once('\n').map_or("", |(_, rest)| rest);
    match body.find("```") {
        Some(end) => body[..end].to_string(),
        None => body.to_string(),
    }
}

fn message_content(response: &Value) -> Option<&str> {
    response
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
}

/// Shareable across threads; requests may run concurrently.
#[derive(Clone)]
pub struct Gateway {
    mode: ProviderMode,
    transport: Arc<dyn Transport>,
    schemas: SchemaRegistry,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("mode", &self.mode)
            .field("schemas", &self.schemas)
            .finish()
    }
}

impl Gateway {
    pub fn new(mode: ProviderMode) -> Self {
        Self {
            mode,
            transport: Arc::new(HttpTransport::new()),
            schemas: SchemaRegistry::with_builtin(),
        }
    }

    pub fn mock() -> Self {
        Self::new(ProviderMode::Mock)
    }

    pub fn recorded(fixture_dir: impl Into<PathBuf>) -> Self {
        Self::new(ProviderMode::Recorded {
            fixture_dir: fixture_dir.into(),
        })
    }

    pub fn with_transport(mut self, transport: Arc<dyn Transport>) -> Self {
        self.transport = transport;
        self
    }

    pub fn mode(&self) -> &ProviderMode {
        &self.mode
    }

    pub fn schemas(&self) -> &SchemaRegistry {
        &self.schemas
    }

    pub fn schemas_mut(&mut self) -> &mut SchemaRegistry {
        &mut self.schemas
    }

    /// Runs a structured task and returns its schema-valid payload.
    pub fn complete_structured(&self, req: &StructuredRequest) -> Result<Value> {
        self.schemas.schema(&req.schema_id)?;
        if !req.attachments.is_empty() && req.task != Task::AnalyzeArtifact {
            return Err(Error::InvalidRequest(
                "attachments are only accepted for artifact analysis".into(),
            ));
        }
        let payload = match &self.mode {
            ProviderMode::Mock => mock_structured(req),
            ProviderMode::Recorded { fixture_dir } => read_fixture(fixture_dir, req)?,
            ProviderMode::Live(config) => self.live_structured(config, req)?,
        };
        self.schemas.validate(&req.schema_id, &payload)?;
        if let ProviderMode::Live(LiveConfig {
            record_dir: Some(dir),
            ..
        }) = &self.mode
        {
            write_fixture(dir, req, &payload)?;
        }
        Ok(payload)
    }

    /// Produces component source for a generation request.
    pub fn generate_code(&self, req: &GenerationRequest) -> Result<String> {
        let code = match &self.mode {
            ProviderMode::Mock => mock::generate(&req.prompt_document),
            ProviderMode::Recorded { fixture_dir } => match read_fixture(fixture_dir, req)? {
                Value::String(code) => code,
                other => {
                    return Err(Error::SchemaViolation {
                        schema_id: GENERATION_GROUP.into(),
                        issues: vec![SchemaIssue {
                            instance_path: "/response".into(),
                            message: format!("expected a string, found {other}"),
                        }],
                    })
                }
            },
            ProviderMode::Live(config) => self.live_generate(config, req)?,
        };
        if code.trim().is_empty() {
            return Err(Error::EmptyGeneration);
        }
        if let ProviderMode::Live(LiveConfig {
            record_dir: Some(dir),
            ..
        }) = &self.mode
        {
            write_fixture(dir, req, &Value::String(code.clone()))?;
        }
        Ok(code)
    }

    /// Records `response` for `req`. Only meaningful for a live gateway with
    /// a record directory; later recorded-mode calls replay it.
    pub fn record(&self, req: &impl ProviderRequest, response: &Value) -> Result<PathBuf> {
        match &self.mode {
            ProviderMode::Live(LiveConfig {
                record_dir: Some(dir),
                ..
            }) => write_fixture(dir, req, response),
            _ => Err(Error::ConfigInvalid(
                "recording requires live mode with a record directory".into(),
            )),
        }
    }

    fn send_with_retries(&self, config: &LiveConfig, body: &Value) -> Result<Value> {
        let url = format!("{}/chat/completions", config.base_url.trim_end_matches('/'));
        let mut last = String::new();
        for _ in 0..=MAX_RETRIES {
            match self
                .transport
                .post_json(&url, config.api_key.as_deref(), body, config.timeout)
            {
                Ok(v) => return Ok(v),
                Err(TransportError::Transient(e)) => last = e,
                Err(TransportError::Fatal(e)) => return Err(Error::ProviderUnavailable(e)),
            }
        }
        Err(Error::ProviderUnavailable(format!(
            "gave up after {} attempts: {last}",
            MAX_RETRIES + 1
        )))
    }

    fn live_structured(&self, config: &LiveConfig, req: &StructuredRequest) -> Result<Value> {
        let mut content = vec![json!({ "type": "text", "text": req.user_payload })];
        for a in &req.attachments {
            let data = base64::engine::general_purpose::STANDARD.encode(&a.bytes);
            content.push(json!({
                "type": "image_url",
                "image_url": { "url": format!("data:{};base64,{data}", a.media_type) },
            }));
        }
        let body = json!({
            "model": config.structured_model,
            "messages": [
                { "role": "system", "content": req.system_instructions },
                { "role": "user", "content": content },
            ],
            "response_format": {
                "type": "json_schema",
                "json_schema": {
                    "name": req.schema_id,
                    "schema": self.schemas.schema(&req.schema_id)?,
                },
            },
        });
        let response = self.send_with_retries(config, &body)?;
        let text = message_content(&response).ok_or_else(|| {
            Error::ProviderUnavailable("response has no message content".into())
        })?;
        serde_json::from_str(text).map_err(|e| Error::SchemaViolation {
            schema_id: req.schema_id.clone(),
            issues: vec![SchemaIssue {
                instance_path: String::new(),
                message: format!("payload is not JSON: {e}"),
            }],
        })
    }

    fn live_generate(&self, config: &LiveConfig, req: &GenerationRequest) -> Result<String> {
        let body = json!({
            "model": config.generation_model,
            "messages": [
                { "role": "system", "content": GENERATION_SYSTEM },
                { "role": "user", "content": generation_user_message(req) },
            ],
        });
        let response = self.send_with_retries(config, &body)?;
        let content = message_content(&response).unwrap_or_default();
        Ok(extract_code(content))
    }
}

fn mock_structured(req: &StructuredRequest) -> Value {
    match req.task {
        Task::Parse => json!({ "product": { "description": req.user_payload } }),
        Task::AnalyzeArtifact => mock::analyze(&req.user_payload),
        Task::AnalyzeRelations => json!({ "edges": [] }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;

    /// Answers from a script and counts calls.
    struct Scripted {
        replies: Mutex<Vec<Result<Value, TransportError>>>,
        calls: AtomicUsize,
    }

    impl Scripted {
        fn new(replies: Vec<Result<Value, TransportError>>) -> Arc<Self> {
            Arc::new(Self {
                replies: Mutex::new(replies),
                calls: AtomicUsize::new(0),
            })
        }
    }

    impl Transport for Scripted {
        fn post_json(&self, _: &str, _: Option<&str>, _: &Value, _: Duration) -> Result<Value, TransportError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.replies.lock().unwrap().remove(0)
        }
    }

    fn chat(content: &str) -> Value {
        json!({ "choices": [{ "message": { "role": "assistant", "content": content } }] })
    }

    fn live(record_dir: Option<PathBuf>) -> ProviderMode {
        ProviderMode::Live(LiveConfig {
            base_url: "http://provider.invalid/v1".into(),
            api_key: Some("k".into()),
            structured_model: "m".into(),
            generation_model: "g".into(),
            timeout: Duration::from_secs(1),
            record_dir,
        })
    }

    fn parse_req(text: &str) -> StructuredRequest {
        StructuredRequest::new(Task::Parse, PARSE_SCHEMA, "sys", text)
    }

    #[test]
    fn hash_is_stable_and_whitespace_sensitive() {
        assert_eq!(
            canonical_request_hash(&parse_req("a b")),
            canonical_request_hash(&parse_req("a b"))
        );
        assert_ne!(
            canonical_request_hash(&parse_req("a b")),
            canonical_request_hash(&parse_req("a  b"))
        );
        let mut other_schema = parse_req("a b");
        other_schema.schema_id = ANALYZE_SCHEMA.into();
        assert_ne!(
            canonical_request_hash(&parse_req("a b")),
            canonical_request_hash(&other_schema)
        );
    }

    #[test]
    fn attachments_hash_by_content() {
        let with = |bytes: &[u8]| {
            StructuredRequest::new(Task::AnalyzeArtifact, ANALYZE_SCHEMA, "s", "code").with_attachment(
                Attachment {
                    media_type: "image/png".into(),
                    bytes: bytes.to_vec(),
                },
            )
        };
        assert_eq!(canonical_request_hash(&with(b"png")), canonical_request_hash(&with(b"png")));
        assert_ne!(canonical_request_hash(&with(b"png")), canonical_request_hash(&with(b"pnh")));
    }

    #[test]
    fn mock_parse_places_text_in_description() {
        let payload = Gateway::mock().complete_structured(&parse_req("a habit app")).unwrap();
        assert_eq!(payload, json!({ "product": { "description": "a habit app" } }));
    }

    #[test]
    fn attachments_rejected_outside_artifact_analysis() {
        let req = parse_req("x").with_attachment(Attachment {
            media_type: "image/png".into(),
            bytes: vec![1],
        });
        assert!(matches!(
            Gateway::mock().complete_structured(&req),
            Err(Error::InvalidRequest(_))
        ));
    }

    #[test]
    fn unregistered_schema_is_refused() {
        let req = StructuredRequest::new(Task::Parse, "parse-v0", "s", "x");
        assert!(matches!(
            Gateway::mock().complete_structured(&req),
            Err(Error::UnknownSchema(_))
        ));
    }

    #[test]
    fn missing_fixture_names_the_hash() {
        let dir = tempfile::tempdir().unwrap();
        let req = parse_req("nothing recorded");
        match Gateway::recorded(dir.path()).complete_structured(&req).unwrap_err() {
            Error::FixtureMissing { hash, .. } => assert_eq!(hash, canonical_request_hash(&req)),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn record_then_replay_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let payload = json!({ "product": { "description": "x", "goal": "y" }, "residue": "" });
        let transport = Scripted::new(vec![Ok(chat(&payload.to_string()))]);
        let live = Gateway::new(live(Some(dir.path().to_path_buf()))).with_transport(transport.clone());
        let req = parse_req("brief");
        let got = live.complete_structured(&req).unwrap();
        assert_eq!(got, payload);

        let never = Scripted::new(vec![]);
        let replay = Gateway::recorded(dir.path()).with_transport(never.clone());
        let again = replay.complete_structured(&req).unwrap();
        assert_eq!(serde_json::to_vec(&again).unwrap(), serde_json::to_vec(&payload).unwrap());
        assert_eq!(never.calls.load(Ordering::SeqCst), 0);

        // Re-recording overwrites the single fixture file.
        live.record(&req, &json!({ "product": { "goal": "z" } })).unwrap();
        let files: Vec<_> = fs::read_dir(dir.path().join(PARSE_SCHEMA)).unwrap().collect();
        assert_eq!(files.len(), 1);
        assert_eq!(
            replay.complete_structured(&req).unwrap(),
            json!({ "product": { "goal": "z" } })
        );
    }

    #[test]
    fn replay_survives_moving_the_fixture_dir() {
        let dir = tempfile::tempdir().unwrap();
        let req = GenerationRequest::initial("## Product\n- Description: x\n").unwrap();
        write_fixture(dir.path(), &req, &json!("export default () => null;\n")).unwrap();
        let moved = tempfile::tempdir().unwrap();
        let target = moved.path().join("elsewhere");
        fs::rename(dir.path(), &target).unwrap();
        let code = Gateway::recorded(&target).generate_code(&req).unwrap();
        assert_eq!(code, "export default () => null;\n");
    }

    #[test]
    fn transient_errors_retry_twice_then_fail() {
        let t = Scripted::new(vec![
            Err(TransportError::Transient("t1".into())),
            Err(TransportError::Transient("t2".into())),
            Err(TransportError::Transient("t3".into())),
        ]);
        let g = Gateway::new(live(None)).with_transport(t.clone());
        assert!(matches!(
            g.complete_structured(&parse_req("x")),
            Err(Error::ProviderUnavailable(_))
        ));
        assert_eq!(t.calls.load(Ordering::SeqCst), 3);

        let t = Scripted::new(vec![
            Err(TransportError::Transient("t1".into())),
            Ok(chat(r#"{"product":{"goal":"g"}}"#)),
        ]);
        let g = Gateway::new(live(None)).with_transport(t.clone());
        g.complete_structured(&parse_req("x")).unwrap();
        assert_eq!(t.calls.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn schema_violations_are_not_retried() {
        let t = Scripted::new(vec![Ok(chat(r#"{"product":{"mood":"g"}}"#))]);
        let g = Gateway::new(live(None)).with_transport(t.clone());
        assert!(matches!(
            g.complete_structured(&parse_req("x")),
            Err(Error::SchemaViolation { .. })
        ));
        assert_eq!(t.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn live_generation_unwraps_fenced_code() {
        let t = Scripted::new(vec![Ok(chat("Here you go:\n```tsx\nexport default function A() {}\n```\n"))]);
        let g = Gateway::new(live(None)).with_transport(t);
        let code = g
            .generate_code(&GenerationRequest::initial("## Product\n- Goal: g\n").unwrap())
            .unwrap();
        assert_eq!(code, "export default function A() {}\n");

        let t = Scripted::new(vec![Ok(chat("   "))]);
        let g = Gateway::new(live(None)).with_transport(t);
        assert!(matches!(
            g.generate_code(&GenerationRequest::initial("x").unwrap()),
            Err(Error::EmptyGeneration)
        ));
    }

    #[test]
    fn scoped_message_carries_previous_code_and_changes() {
        let req = GenerationRequest::scoped("## Product\n- Goal: g\n", "old code", "Design System · Color: \"a\" → \"b\"").unwrap();
        let msg = generation_user_message(&req);
        assert!(msg.contains("```tsx\nold code\n```"));
        assert!(msg.contains("## Semantic Changes\n\nDesign System · Color"));
        assert!(msg.ends_with(&format!("{SCOPED_INSTRUCTIONS}\n")));
    }
}
