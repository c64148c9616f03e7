//! What one episode leaves behind: per-round records, the transcript, and
//! the outcome flags the metrics are computed from.

use serde::{Deserialize, Serialize};

use crate::dsl::EffectTrace;
use crate::gateway::Transcript;
use crate::world::{PerceptionSnapshot, WorldEvent};

use super::config::{CheckOutcome, Feedback};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum EpisodeOutcome {
    Success,
    InnerDeadlock,
    OuterExhausted,
    /// The backend itself failed; reported separately from task failure.
    BackendFailure { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub snapshot_before: PerceptionSnapshot,
    /// The decision that survived review (or the last one attempted).
    pub plan: Vec<String>,
    pub code: String,
    pub checks: Vec<CheckOutcome>,
    pub trace: Option<EffectTrace>,
    pub events: Vec<WorldEvent>,
    pub executed_steps: u64,
    pub exec_error: Option<String>,
    pub snapshot_after: Option<PerceptionSnapshot>,
    pub extra_verdict: Option<bool>,
    pub feedback: Vec<Feedback>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub task_id: u32,
    pub seed: u64,
    pub outcome: EpisodeOutcome,
    /// Ground truth: the goal held on the final world. Success from the
    /// engine's point of view and actual goal satisfaction can differ when
    /// the external mechanism is disabled or deceived.
    pub goal_met: bool,
    pub total_steps: u64,
    pub rounds: Vec<RoundRecord>,
    pub transcript: Transcript,
    pub failure_injected: bool,
    pub failure_detected: bool,
    pub failure_corrected: bool,
}

impl EpisodeRecord {
    pub fn is_backend_failure(&self) -> bool {
        matches!(self.outcome, EpisodeOutcome::BackendFailure { .. })
    }

    pub fn to_jsonl(&self) -> String {
        serde_json::to_string(self).expect("episode record serializes")
    }

    pub fn from_jsonl(line: &str) -> Result<EpisodeRecord, serde_json::Error> {
        serde_json::from_str(line)
    }
}
