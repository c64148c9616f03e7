//! Uniform interface to the three bots' brains: prompt assembly, response
//! parsing, and three interchangeable backends — a rule-based oracle with
//! fault injection, scripted replay, and a remote chat-completion API.

mod backend;
mod fault_profile;
mod oracle;
mod prompt;
mod remote;
mod response;
mod scripted;

pub use backend::{
    BackendConfig, BackendKind, Gateway, GatewayError, GatewaySession, RequestCtx, Transcript,
    TranscriptEntry, VlmBackend,
};
pub use fault_profile::{FaultStream, FiredVlmFault, VlmFaultKind, VlmFaultProfile};
pub use oracle::{assess_oracle, plan_oracle, review_oracle, OracleBackend, OracleError, OraclePlan, PlanItem};
pub use prompt::{
    build_decision_prompt, build_extra_prompt, build_inner_prompt, BotKind, DecisionInfo,
    Exemplar, ExemplarSet, PromptBundle,
};
pub use remote::RemoteBackend;
pub use response::{format_decision, format_review, parse_bot_response, BotResponse, ResponseParseError};
pub use scripted::{ReplayEntry, ScriptedBackend};
