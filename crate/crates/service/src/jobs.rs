//! Background jobs for provider-bound work. A job runs on the blocking pool
//! and commits through the same per-session queue as direct edits.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::Serialize;
use serde_json::Value;
use suif_core::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Pending,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

impl From<&Error> for ErrorBody {
    fn from(e: &Error) -> Self {
        let message = match e {
            // Schema messages can quote the rejected payload; report paths only.
            Error::SchemaViolation { schema_id, issues } => format!(
                "provider payload did not match schema `{schema_id}` at {}",
                issues
                    .iter()
                    .map(|i| if i.instance_path.is_empty() { "/" } else { i.instance_path.as_str() })
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
            other => other.to_string(),
        };
        Self {
            code: e.code().to_string(),
            message,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Job {
    pub id: String,
    pub kind: String,
    pub session: String,
    pub status: JobStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

#[derive(Debug, Default, Clone)]
pub struct Jobs {
    inner: Arc<Mutex<HashMap<String, Job>>>,
}

impl Jobs {
    /// Registers a pending job and runs `work` on the blocking pool.
    pub fn spawn<F, T>(&self, kind: &str, session: &str, work: F) -> Job
    where
        F: FnOnce() -> suif_core::Result<T> + Send + 'static,
        T: Serialize,
    {
        let job = Job {
            id: uuid::Uuid::new_v4().to_string(),
            kind: kind.to_string(),
            session: session.to_string(),
            status: JobStatus::Pending,
            result: None,
            error: None,
        };
        self.inner.lock().unwrap().insert(job.id.clone(), job.clone());
        let inner = self.inner.clone();
        let id = job.id.clone();
        tokio::task::spawn_blocking(move || {
            let outcome = work();
            let mut jobs = inner.lock().unwrap();
            let Some(entry) = jobs.get_mut(&id) else { return };
            match outcome {
                Ok(value) => match serde_json::to_value(value) {
                    Ok(v) => {
                        entry.status = JobStatus::Done;
                        entry.result = Some(v);
                    }
                    Err(e) => {
                        entry.status = JobStatus::Failed;
                        entry.error = Some(ErrorBody {
                            code: "INTERNAL".into(),
                            message: e.to_string(),
                        });
                    }
                },
                Err(e) => {
                    entry.status = JobStatus::Failed;
                    entry.error = Some(ErrorBody::from(&e));
                }
            }
        });
        job
    }

    pub fn get(&self, id: &str) -> Option<Job> {
        self.inner.lock().unwrap().get(id).cloned()
    }
}
