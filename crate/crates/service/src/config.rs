use std::fs;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use suif_core::generation_engine::GenerationOptions;
use suif_core::provider_gateway::{Gateway, ProviderMode};
use suif_core::{Error, Result};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind_address: SocketAddr,
    pub data_dir: PathBuf,
    pub mode: ProviderMode,
    pub generation: GenerationOptions,
    /// Upper bound on a single provider call in live mode.
    pub request_timeout: Duration,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>, mode: ProviderMode) -> Self {
        Self {
            bind_address: ([127, 0, 0, 1], 8787).into(),
            data_dir: data_dir.into(),
            mode,
            generation: GenerationOptions::default(),
            request_timeout: suif_core::provider_gateway::DEFAULT_TIMEOUT,
        }
    }

    /// Checks the data directory is writable and recorded mode has fixtures.
    pub fn validate(&self) -> Result<()> {
        if let ProviderMode::Recorded { fixture_dir } = &self.mode {
            if !fixture_dir.is_dir() {
                return Err(Error::ConfigInvalid(format!(
                    "recorded mode needs an existing fixture directory, {} is missing",
                    fixture_dir.display()
                )));
            }
        }
        fs::create_dir_all(&self.data_dir).map_err(|e| {
            Error::ConfigInvalid(format!("data dir {} is not creatable: {e}", self.data_dir.display()))
        })?;
        let probe = self.data_dir.join(format!(".probe-{}", uuid::Uuid::new_v4()));
        fs::write(&probe, b"")
            .and_then(|_| fs::remove_file(&probe))
            .map_err(|e| {
                Error::ConfigInvalid(format!("data dir {} is not writable: {e}", self.data_dir.display()))
            })?;
        if self.request_timeout.is_zero() {
            return Err(Error::ConfigInvalid("request timeout must be positive".into()));
        }
        Ok(())
    }

    pub fn gateway(&self) -> Gateway {
        let mode = match &self.mode {
            ProviderMode::Live(live) => {
                let mut live = live.clone();
                live.timeout = self.request_timeout;
                ProviderMode::Live(live)
            }
            other => other.clone(),
        };
        Gateway::new(mode)
    }
}
