//! World-level fault injection: deliberate interference with grasping and
//! transfer, reproducible from a seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorldFaultKind {
    /// The grasp engages but the payload is dropped at the next arm movement.
    GripSlip,
    /// The relevant object (or the release point) is shoved sideways.
    Displace,
    /// The payload is dropped midway through a transfer.
    DropDuringTransfer,
}

impl std::fmt::Display for WorldFaultKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WorldFaultKind::GripSlip => write!(f, "grip_slip"),
            WorldFaultKind::Displace => write!(f, "displace"),
            WorldFaultKind::DropDuringTransfer => write!(f, "drop_during_transfer"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FaultTrigger {
    /// Fire exactly once, at this primitive-step index within the episode.
    AtStep { index: u64 },
    /// Draw independently at every step with this probability.
    PerStep { probability: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldFaultSpec {
    pub kind: WorldFaultKind,
    pub trigger: FaultTrigger,
    /// Shove magnitude in meters; only meaningful for `Displace`.
    #[serde(default = "default_displacement")]
    pub displacement: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_displacement() -> f64 {
    0.08
}

impl WorldFaultSpec {
    pub fn validate(&self) -> Result<(), String> {
        if let FaultTrigger::PerStep { probability } = self.trigger {
            if !(0.0..=1.0).contains(&probability) {
                return Err(format!("fault probability {probability} outside [0, 1]"));
            }
        }
        if self.displacement < 0.0 {
            return Err(format!("negative displacement {}", self.displacement));
        }
        Ok(())
    }
}

/// Per-episode state for one fault spec: a step counter, the seeded draw
/// stream, and the fired-once latch. At most one fault fires per trigger
/// point.
#[derive(Debug, Clone)]
pub struct FaultInjector {
    spec: WorldFaultSpec,
    rng: ChaCha8Rng,
    step_index: u64,
    fired_at_step: bool,
}

impl FaultInjector {
    pub fn new(spec: WorldFaultSpec, episode_seed: u64) -> Self {
        let seed = spec
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(episode_seed);
        Self {
            spec,
            rng: ChaCha8Rng::seed_from_u64(seed),
            step_index: 0,
            fired_at_step: false,
        }
    }

    pub fn spec(&self) -> &WorldFaultSpec {
        &self.spec
    }

    pub fn displacement(&self) -> f64 {
        self.spec.displacement
    }

    /// Called once per applied primitive step, before execution. Returns the
    /// fault kind scheduled to interfere with this step, if any.
    pub fn poll(&mut self) -> Option<WorldFaultKind> {
        let index = self.step_index;
        self.step_index += 1;
        match self.spec.trigger {
            FaultTrigger::AtStep { index: at } => {
                if index == at && !self.fired_at_step {
                    self.fired_at_step = true;
                    Some(self.spec.kind)
                } else {
                    None
                }
            }
            FaultTrigger::PerStep { probability } => {
                let draw: f64 = self.rng.gen();
                if draw < probability {
                    Some(self.spec.kind)
                } else {
                    None
                }
            }
        }
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn at_step_fires_exactly_once() {
        let spec = WorldFaultSpec {
            kind: WorldFaultKind::GripSlip,
            trigger: FaultTrigger::AtStep { index: 2 },
            displacement: 0.08,
            seed: 1,
        };
        let mut inj = FaultInjector::new(spec, 7);
        assert_eq!(inj.poll(), None);
        assert_eq!(inj.poll(), None);
        assert_eq!(inj.poll(), Some(WorldFaultKind::GripSlip));
        for _ in 0..10 {
            assert_eq!(inj.poll(), None);
        }
    }

    #[test]
    fn per_step_draws_are_reproducible() {
        let spec = WorldFaultSpec {
            kind: WorldFaultKind::Displace,
            trigger: FaultTrigger::PerStep { probability: 0.3 },
            displacement: 0.08,
            seed: 9,
        };
        let mut a = FaultInjector::new(spec.clone(), 42);
        let mut b = FaultInjector::new(spec, 42);
        let seq_a: Vec<_> = (0..50).map(|_| a.poll()).collect();
        let seq_b: Vec<_> = (0..50).map(|_| b.poll()).collect();
        assert_eq!(seq_a, seq_b);
        assert!(seq_a.iter().any(|f| f.is_some()));
    }
}
