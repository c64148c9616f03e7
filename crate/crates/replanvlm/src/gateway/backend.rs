//! Backend abstraction, configuration, and the per-episode session that owns
//! the fault stream and transcript.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::GoalPredicate;

use super::fault_profile::{FaultStream, FiredVlmFault, VlmFaultProfile};
use super::oracle::OracleBackend;
use super::prompt::PromptBundle;
use super::remote::RemoteBackend;
use super::response::{parse_bot_response, BotResponse, ResponseParseError};
use super::scripted::ScriptedBackend;

pub const DEFAULT_CREDENTIAL_ENV: &str = "REPLANVLM_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Scripted,
    Oracle,
    Remote,
}

impl std::fmt::Display for BackendKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BackendKind::Scripted => write!(f, "scripted"),
            BackendKind::Oracle => write!(f, "oracle"),
            BackendKind::Remote => write!(f, "remote"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    Scripted {
        replay_table: String,
        #[serde(default)]
        seed: u64,
    },
    Oracle {
        #[serde(default)]
        fault_profile: VlmFaultProfile,
        #[serde(default)]
        seed: u64,
    },
    Remote {
        endpoint: String,
        model: String,
        #[serde(default = "default_credential_env")]
        credential_env: String,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
        #[serde(default = "default_retries")]
        retries: u32,
        #[serde(default = "default_backoff")]
        backoff_ms: u64,
        #[serde(default)]
        seed: u64,
    },
}

fn default_credential_env() -> String {
    DEFAULT_CREDENTIAL_ENV.to_string()
}
fn default_timeout() -> u64 {
    60
}
fn default_retries() -> u32 {
    3
}
fn default_backoff() -> u64 {
    500
}

impl BackendConfig {
    pub fn oracle_zero_fault() -> Self {
        BackendConfig::Oracle {
            fault_profile: VlmFaultProfile::default(),
            seed: 0,
        }
    }

    pub fn kind(&self) -> BackendKind {
        match self {
            BackendConfig::Scripted { .. } => BackendKind::Scripted,
            BackendConfig::Oracle { .. } => BackendKind::Oracle,
            BackendConfig::Remote { .. } => BackendKind::Remote,
        }
    }

    pub fn fault_profile(&self) -> VlmFaultProfile {
        match self {
            BackendConfig::Oracle { fault_profile, .. } => *fault_profile,
            _ => VlmFaultProfile::default(),
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            BackendConfig::Scripted { seed, .. }
            | BackendConfig::Oracle { seed, .. }
            | BackendConfig::Remote { seed, .. } => *seed,
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if let BackendConfig::Oracle { fault_profile, .. } = self {
            fault_profile
                .validate()
                .map_err(|m| GatewayError::Config { message: m })?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("no replay entry for digest {digest}")]
    ReplayMiss { digest: String },
    #[error("remote request timed out after {seconds}s")]
    RemoteTimeout { seconds: u64 },
    #[error("remote returned HTTP {status}")]
    RemoteHttp { status: u16 },
    #[error("remote response malformed: {message}")]
    RemoteMalformed { message: String },
    #[error("credential env var {var} is not set")]
    CredentialMissing { var: String },
    #[error("backend configuration error: {message}")]
    Config { message: String },
    #[error("transport error: {message}")]
    Transport { message: String },
    #[error(transparent)]
    Response(#[from] ResponseParseError),
}

impl GatewayError {
    /// Parse failures are the caller's business (a failed format check);
    /// everything else means the backend itself is unusable.
    pub fn is_parse_failure(&self) -> bool {
        matches!(self, GatewayError::Response(_))
    }
}

/// Per-request context handed to backends. Only the oracle uses it.
pub struct RequestCtx<'a> {
    pub faults: &'a mut FaultStream,
    pub goal: Option<&'a GoalPredicate>,
}

pub trait VlmBackend: Send + Sync {
    fn complete(&self, bundle: &PromptBundle, ctx: &mut RequestCtx<'_>)
        -> Result<String, GatewayError>;
    fn kind(&self) -> BackendKind;
}

/// A constructed backend shared by all episodes of a run.
pub struct Gateway {
    backend: Box<dyn VlmBackend>,
    profile: VlmFaultProfile,
}

impl Gateway {
    pub fn new(config: &BackendConfig) -> Result<Gateway, GatewayError> {
        config.validate()?;
        let backend: Box<dyn VlmBackend> = match config {
            BackendConfig::Oracle { .. } => Box::new(OracleBackend),
            BackendConfig::Scripted { replay_table, .. } => {
                Box::new(ScriptedBackend::load(replay_table)?)
            }
            BackendConfig::Remote {
                endpoint,
                model,
                credential_env,
                timeout_secs,
                retries,
                backoff_ms,
                ..
            } => Box::new(RemoteBackend::new(
                endpoint.clone(),
                model.clone(),
                credential_env.clone(),
                *timeout_secs,
                *retries,
                *backoff_ms,
            )),
        };
        Ok(Gateway {
            backend,
            profile: config.fault_profile(),
        })
    }

    pub fn with_backend(backend: Box<dyn VlmBackend>) -> Gateway {
        Gateway {
            backend,
            profile: VlmFaultProfile::default(),
        }
    }

    pub fn kind(&self) -> BackendKind {
        self.backend.kind()
    }

    /// Opens an episode-scoped session. The goal is the ground truth the
    /// oracle backend plans against; other backends ignore it.
    pub fn open_session(&self, session_seed: u64, goal: Option<GoalPredicate>) -> GatewaySession<'_> {
        GatewaySession {
            backend: self.backend.as_ref(),
            faults: FaultStream::new(self.profile, session_seed),
            goal,
            transcript: Transcript::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub bundle_digest: String,
    pub raw: String,
    pub parsed: Option<BotResponse>,
    pub parse_error: Option<String>,
    /// Zero for deterministic backends; wall-clock for remote.
    pub latency_micros: u64,
    pub backend: BackendKind,
}

pub struct GatewaySession<'g> {
    backend: &'g dyn VlmBackend,
    faults: FaultStream,
    goal: Option<GoalPredicate>,
    transcript: Transcript,
}

impl<'g> GatewaySession<'g> {
    /// Sends a bundle and parses the completion. Parse failures are returned
    /// (and transcribed) rather than hiding the raw completion.
    pub fn request(&mut self, bundle: &PromptBundle) -> Result<BotResponse, GatewayError> {
        self.faults.begin_request();
        let started = std::time::Instant::now();
        let raw = self.backend.complete(
            bundle,
            &mut RequestCtx {
                faults: &mut self.faults,
                goal: self.goal.as_ref(),
            },
        )?;
        let latency_micros = match self.backend.kind() {
            BackendKind::Remote => started.elapsed().as_micros() as u64,
            _ => 0,
        };
        let parsed = parse_bot_response(&raw, bundle.bot);
        self.transcript.entries.push(TranscriptEntry {
            bundle_digest: bundle.digest(),
            raw,
            parsed: parsed.as_ref().ok().cloned(),
            parse_error: parsed.as_ref().err().map(|e| e.to_string()),
            latency_micros,
            backend: self.backend.kind(),
        });
        parsed.map_err(GatewayError::from)
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }

    pub fn fired_faults(&self) -> &[FiredVlmFault] {
        self.faults.fired_log()
    }

    pub fn goal(&self) -> Option<&GoalPredicate> {
        self.goal.as_ref()
    }
}
