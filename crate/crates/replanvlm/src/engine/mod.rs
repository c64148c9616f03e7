//! The closed planning loop as an explicit state machine: decide, review
//! (format, matching, verification, capped cycles), execute, assess, replan
//! or terminate.

mod checks;
mod config;
mod episode;
mod record;

pub use checks::{format_check, matching_check};
pub use config::{CheckOutcome, EngineConfig, Feedback, FeedbackSource};
pub use episode::{extra_assess, inner_check, run_episode, EpisodeInput};
pub use record::{EpisodeOutcome, EpisodeRecord, RoundRecord};
