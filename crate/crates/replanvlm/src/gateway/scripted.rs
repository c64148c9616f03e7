//! Scripted replay backend: completions looked up by bundle digest. Purely
//! read-only; a missing digest is an error, not a fallback.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::backend::{BackendKind, GatewayError, RequestCtx, VlmBackend};
use super::prompt::PromptBundle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub digest: String,
    pub response: String,
}

pub struct ScriptedBackend {
    table: BTreeMap<String, String>,
}

impl ScriptedBackend {
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<ScriptedBackend, GatewayError> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| GatewayError::Config {
            message: format!(
                "cannot read replay table {}: {e}",
                path.as_ref().display()
            ),
        })?;
        let entries: Vec<ReplayEntry> =
            serde_json::from_str(&text).map_err(|e| GatewayError::Config {
                message: format!("replay table does not parse: {e}"),
            })?;
        Ok(Self::from_entries(entries))
    }

    pub fn from_entries(entries: Vec<ReplayEntry>) -> ScriptedBackend {
        ScriptedBackend {
            table: entries
                .into_iter()
                .map(|e| (e.digest, e.response))
                .collect(),
        }
    }
}

impl VlmBackend for ScriptedBackend {
    fn complete(
        &self,
        bundle: &PromptBundle,
        _ctx: &mut RequestCtx<'_>,
    ) -> Result<String, GatewayError> {
        let digest = bundle.digest();
        self.table
            .get(&digest)
            .cloned()
            .ok_or(GatewayError::ReplayMiss { digest })
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Scripted
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::fault_profile::{FaultStream, VlmFaultProfile};
    use crate::gateway::prompt::{build_decision_prompt, ExemplarSet};
    use crate::testutil;
    use crate::world::snapshot;

    #[test]
    fn registered_digest_replays_and_misses_error() {
        let snap = snapshot(&testutil::task(1).world);
        let bundle = build_decision_prompt("I'm hungry", &snap, &[], ExemplarSet::builtin());
        let backend = ScriptedBackend::from_entries(vec![ReplayEntry {
            digest: bundle.digest(),
            response: "canned".to_string(),
        }]);
        let mut faults = FaultStream::new(VlmFaultProfile::default(), 0);
        let mut ctx = RequestCtx {
            faults: &mut faults,
            goal: None,
        };
        assert_eq!(backend.complete(&bundle, &mut ctx).unwrap(), "canned");

        let other = build_decision_prompt("something else", &snap, &[], ExemplarSet::builtin());
        assert!(matches!(
            backend.complete(&other, &mut ctx),
            Err(GatewayError::ReplayMiss { .. })
        ));
    }
}
