//! Engine configuration and the feedback/check records that flow through an
//! episode.

use serde::{Deserialize, Serialize};

use crate::gateway::BackendConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    #[serde(default = "default_true")]
    pub inner_enabled: bool,
    #[serde(default = "default_true")]
    pub extra_enabled: bool,
    /// Consecutive failed review cycles before the episode is deemed a
    /// failure.
    #[serde(default = "default_cap")]
    pub inner_cycle_cap: u32,
    /// Replanning rounds before giving up. The inner cap is scoped to one
    /// round; this cap keeps persistent faults from looping forever.
    #[serde(default = "default_cap")]
    pub outer_round_cap: u32,
    #[serde(default)]
    pub seed: u64,
    pub backend: BackendConfig,
}

fn default_true() -> bool {
    true
}

fn default_cap() -> u32 {
    5
}

impl EngineConfig {
    pub fn oracle_default() -> EngineConfig {
        EngineConfig {
            inner_enabled: true,
            extra_enabled: true,
            inner_cycle_cap: 5,
            outer_round_cap: 5,
            seed: 0,
            backend: BackendConfig::oracle_zero_fault(),
        }
    }

    pub fn with_mechanisms(mut self, inner: bool, extra: bool) -> EngineConfig {
        self.inner_enabled = inner;
        self.extra_enabled = extra;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.inner_cycle_cap < 1 {
            return Err("inner_cycle_cap must be at least 1".to_string());
        }
        if self.outer_round_cap < 1 {
            return Err("outer_round_cap must be at least 1".to_string());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackSource {
    Inner,
    Extra,
}

impl std::fmt::Display for FeedbackSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FeedbackSource::Inner => write!(f, "inner"),
            FeedbackSource::Extra => write!(f, "extra"),
        }
    }
}

/// Feedback never forces a plan; it is only input to the next decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feedback {
    pub source: FeedbackSource,
    pub round: u32,
    pub reason: String,
    pub advisory: bool,
}

impl Feedback {
    pub fn new(source: FeedbackSource, round: u32, reason: impl Into<String>) -> Feedback {
        Feedback {
            source,
            round,
            reason: reason.into(),
            advisory: true,
        }
    }

    pub fn as_message(&self) -> String {
        format!("[{} round {}] {}", self.source, self.round, self.reason)
    }
}

/// One review cycle's outcome: pass iff all three checks hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub format_ok: bool,
    pub matching_ok: bool,
    pub verification_ok: bool,
    pub reason: String,
}

impl CheckOutcome {
    pub fn pass(&self) -> bool {
        self.format_ok && self.matching_ok && self.verification_ok
    }

    pub fn passed() -> CheckOutcome {
        CheckOutcome {
            format_ok: true,
            matching_ok: true,
            verification_ok: true,
            reason: String::new(),
        }
    }

    pub fn failed_format(reason: impl Into<String>) -> CheckOutcome {
        CheckOutcome {
            format_ok: false,
            matching_ok: false,
            verification_ok: false,
            reason: reason.into(),
        }
    }

    pub fn failed_matching(reason: impl Into<String>) -> CheckOutcome {
        CheckOutcome {
            format_ok: true,
            matching_ok: false,
            verification_ok: false,
            reason: reason.into(),
        }
    }

    pub fn failed_verification(reason: impl Into<String>) -> CheckOutcome {
        CheckOutcome {
            format_ok: true,
            matching_ok: true,
            verification_ok: false,
            reason: reason.into(),
        }
    }
}
