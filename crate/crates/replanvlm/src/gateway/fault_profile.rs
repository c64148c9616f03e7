//! Seeded hallucination model for the oracle backend. Faults are drawn
//! independently per request; a fault kind with probability below 1 stops
//! firing once it has fired and been fed back (the bot does not repeat a
//! mistake it was told about), while probability 1.0 means the fault is
//! persistent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VlmFaultKind {
    OmitBlockerStep,
    WrongObject,
    MalformedCode,
    PlanCodeMismatch,
    EmptyOutput,
    InnerWrongVerdict,
    ExtraWrongVerdict,
}

impl std::fmt::Display for VlmFaultKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            VlmFaultKind::OmitBlockerStep => "omit_blocker_step",
            VlmFaultKind::WrongObject => "wrong_object",
            VlmFaultKind::MalformedCode => "malformed_code",
            VlmFaultKind::PlanCodeMismatch => "plan_code_mismatch",
            VlmFaultKind::EmptyOutput => "empty_output",
            VlmFaultKind::InnerWrongVerdict => "inner_wrong_verdict",
            VlmFaultKind::ExtraWrongVerdict => "extra_wrong_verdict",
        };
        write!(f, "{name}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VlmFaultProfile {
    pub omit_blocker_step: f64,
    pub wrong_object: f64,
    pub malformed_code: f64,
    pub plan_code_mismatch: f64,
    pub empty_output: f64,
    pub inner_wrong_verdict: f64,
    pub extra_wrong_verdict: f64,
    pub seed: u64,
}

impl Default for VlmFaultProfile {
    fn default() -> Self {
        Self {
            omit_blocker_step: 0.0,
            wrong_object: 0.0,
            malformed_code: 0.0,
            plan_code_mismatch: 0.0,
            empty_output: 0.0,
            inner_wrong_verdict: 0.0,
            extra_wrong_verdict: 0.0,
            seed: 0,
        }
    }
}

impl VlmFaultProfile {
    pub fn probability(&self, kind: VlmFaultKind) -> f64 {
        match kind {
            VlmFaultKind::OmitBlockerStep => self.omit_blocker_step,
            VlmFaultKind::WrongObject => self.wrong_object,
            VlmFaultKind::MalformedCode => self.malformed_code,
            VlmFaultKind::PlanCodeMismatch => self.plan_code_mismatch,
            VlmFaultKind::EmptyOutput => self.empty_output,
            VlmFaultKind::InnerWrongVerdict => self.inner_wrong_verdict,
            VlmFaultKind::ExtraWrongVerdict => self.extra_wrong_verdict,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for kind in ALL_KINDS {
            let p = self.probability(kind);
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{kind} probability {p} outside [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        ALL_KINDS.iter().all(|&k| self.probability(k) == 0.0)
    }
}

const ALL_KINDS: [VlmFaultKind; 7] = [
    VlmFaultKind::OmitBlockerStep,
    VlmFaultKind::WrongObject,
    VlmFaultKind::MalformedCode,
    VlmFaultKind::PlanCodeMismatch,
    VlmFaultKind::EmptyOutput,
    VlmFaultKind::InnerWrongVerdict,
    VlmFaultKind::ExtraWrongVerdict,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiredVlmFault {
    pub kind: VlmFaultKind,
    pub request_index: u64,
}

/// Episode-local fault stream: one per gateway session.
#[derive(Debug, Clone)]
pub struct FaultStream {
    profile: VlmFaultProfile,
    rng: ChaCha8Rng,
    fired: BTreeSet<VlmFaultKind>,
    log: Vec<FiredVlmFault>,
    request_index: u64,
}

impl FaultStream {
    pub fn new(profile: VlmFaultProfile, session_seed: u64) -> Self {
        let seed = profile
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(session_seed);
        Self {
            profile,
            rng: ChaCha8Rng::seed_from_u64(seed),
            fired: BTreeSet::new(),
            log: Vec::new(),
            request_index: 0,
        }
    }

    pub fn begin_request(&mut self) {
        self.request_index += 1;
    }

    /// Draws the fault for this request. The draw always consumes one stream
    /// value so sequences stay aligned across configurations with the same
    /// profile.
    pub fn draw(&mut self, kind: VlmFaultKind) -> bool {
        self.draw_if(kind, true)
    }

    /// Like `draw`, but the fault only fires (and only counts as fired) when
    /// it can actually corrupt this request.
    pub fn draw_if(&mut self, kind: VlmFaultKind, applicable: bool) -> bool {
        let p = self.profile.probability(kind);
        let sample: f64 = self.rng.gen();
        if p <= 0.0 || !applicable {
            return false;
        }
        let suppressed = p < 1.0 && self.fired.contains(&kind);
        let fires = !suppressed && sample < p;
        if fires {
            self.fired.insert(kind);
            self.log.push(FiredVlmFault {
                kind,
                request_index: self.request_index,
            });
        }
        fires
    }

    pub fn fired_log(&self) -> &[FiredVlmFault] {
        &self.log
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(p: f64) -> VlmFaultProfile {
        VlmFaultProfile {
            omit_blocker_step: p,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn same_seed_same_sequence() {
        let mut a = FaultStream::new(profile(0.4), 5);
        let mut b = FaultStream::new(profile(0.4), 5);
        for _ in 0..30 {
            a.begin_request();
            b.begin_request();
            assert_eq!(
                a.draw(VlmFaultKind::OmitBlockerStep),
                b.draw(VlmFaultKind::OmitBlockerStep)
            );
        }
    }

    #[test]
    fn sub_unit_faults_stop_after_first_fire() {
        let mut s = FaultStream::new(profile(0.9), 1);
        let mut fires = 0;
        for _ in 0..50 {
            s.begin_request();
            if s.draw(VlmFaultKind::OmitBlockerStep) {
                fires += 1;
            }
        }
        assert_eq!(fires, 1);
    }

    #[test]
    fn certain_faults_persist() {
        let mut s = FaultStream::new(profile(1.0), 1);
        for _ in 0..10 {
            s.begin_request();
            assert!(s.draw(VlmFaultKind::OmitBlockerStep));
        }
        assert_eq!(s.fired_log().len(), 10);
    }
}
