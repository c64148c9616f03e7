//! The seven shipped tasks: scenario data, evaluation-criteria flags, and
//! expected minimum operation steps.
//!
//! Reference minimum steps per task: 6, 21, 14, 22, 13, 13, 7. The shipped
//! canonical plans reproduce tasks 1, 2, 3, 6, 7 exactly; task 4 runs in 21
//! (one under the reference) and task 5 in 14 (one over) — no decomposition
//! of the shipped skills lands on those two reference values, so the deltas
//! are fixed and documented rather than forced.

use serde::{Deserialize, Serialize};

use crate::engine::EpisodeInput;
use crate::world::{parse_scenario, GoalPredicate, Scenario, ScenarioError, WorldState};

/// Which abilities a task exercises: semantic understanding, spatial
/// relationships, external spatial constraints, understanding of special
/// attributes, adaptability to dynamic scenes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriteriaFlags {
    pub su: bool,
    pub sr: bool,
    pub ec: bool,
    pub ua: bool,
    #[serde(rename = "as")]
    pub adaptive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: u32,
    pub instruction: String,
    pub scenario_path: String,
    pub goal: GoalPredicate,
    pub criteria: CriteriaFlags,
    pub ms_expected: u32,
}

impl TaskSpec {
    /// Steps the shipped canonical plan actually takes (documented deltas
    /// for tasks 4 and 5).
    pub fn canonical_steps(&self) -> u32 {
        match self.id {
            4 => 21,
            5 => 14,
            _ => self.ms_expected,
        }
    }

    pub fn load_world(&self, rng_seed: u64) -> Result<WorldState, ScenarioError> {
        let mut scenario = load_scenario_by_path(&self.scenario_path)?;
        scenario.world.rng_seed = rng_seed;
        Ok(scenario.world)
    }

    pub fn episode_input(&self) -> EpisodeInput {
        EpisodeInput {
            task_id: self.id,
            instruction: self.instruction.clone(),
            goal: self.goal.clone(),
        }
    }
}

const EMBEDDED: [(&str, &str); 7] = [
    ("scenarios/task1.json", include_str!("../../scenarios/task1.json")),
    ("scenarios/task2.json", include_str!("../../scenarios/task2.json")),
    ("scenarios/task3.json", include_str!("../../scenarios/task3.json")),
    ("scenarios/task4.json", include_str!("../../scenarios/task4.json")),
    ("scenarios/task5.json", include_str!("../../scenarios/task5.json")),
    ("scenarios/task6.json", include_str!("../../scenarios/task6.json")),
    ("scenarios/task7.json", include_str!("../../scenarios/task7.json")),
];

// Per-task criteria flags and reference step counts.
const TABLE: [(u32, CriteriaFlags, u32); 7] = [
    (1, flags(true, false, false, true, false), 6),
    (2, flags(false, true, true, false, false), 21),
    (3, flags(true, true, true, false, false), 14),
    (4, flags(false, true, false, false, true), 22),
    (5, flags(false, true, false, false, true), 13),
    (6, flags(false, true, true, false, false), 13),
    (7, flags(false, false, false, true, false), 7),
];

const fn flags(su: bool, sr: bool, ec: bool, ua: bool, adaptive: bool) -> CriteriaFlags {
    CriteriaFlags {
        su,
        sr,
        ec,
        ua,
        adaptive,
    }
}

/// Scenarios resolve against the embedded copies first, then the filesystem,
/// so the binary works from any directory and custom scenarios still load.
pub fn load_scenario_by_path(path: &str) -> Result<Scenario, ScenarioError> {
    for (name, text) in EMBEDDED {
        if path == name {
            return parse_scenario(text);
        }
    }
    crate::world::load_scenario(path)
}

/// The seven shipped tasks, cross-checked against their scenario metadata.
pub fn catalog() -> Vec<TaskSpec> {
    EMBEDDED
        .iter()
        .zip(TABLE.iter())
        .map(|((path, text), (id, criteria, ms))| {
            let scenario = parse_scenario(text).expect("shipped scenario is valid");
            assert_eq!(
                scenario.metadata.task_id, *id,
                "scenario {path} metadata disagrees with the catalog"
            );
            assert_eq!(
                scenario.metadata.ms_expected, *ms,
                "scenario {path} ms_expected disagrees with the catalog"
            );
            TaskSpec {
                id: *id,
                instruction: scenario.metadata.instruction,
                scenario_path: path.to_string(),
                goal: scenario.goal,
                criteria: *criteria,
                ms_expected: *ms,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_covers_all_seven_tasks() {
        let tasks = catalog();
        assert_eq!(tasks.len(), 7);
        for (i, t) in tasks.iter().enumerate() {
            assert_eq!(t.id, i as u32 + 1);
            assert!(!t.instruction.is_empty());
            t.load_world(0).unwrap();
        }
    }

    #[test]
    fn reference_steps_match_the_table() {
        let ms: Vec<u32> = catalog().iter().map(|t| t.ms_expected).collect();
        assert_eq!(ms, vec![6, 21, 14, 22, 13, 13, 7]);
    }

    #[test]
    fn canonical_deltas_are_limited_to_tasks_4_and_5() {
        for t in catalog() {
            match t.id {
                4 => assert_eq!(t.canonical_steps(), 21),
                5 => assert_eq!(t.canonical_steps(), 14),
                _ => assert_eq!(t.canonical_steps(), t.ms_expected),
            }
        }
    }

    #[test]
    fn criteria_flags_follow_the_table() {
        let tasks = catalog();
        assert!(tasks[0].criteria.su && tasks[0].criteria.ua);
        assert!(tasks[1].criteria.sr && tasks[1].criteria.ec && !tasks[1].criteria.su);
        assert!(tasks[3].criteria.adaptive && tasks[4].criteria.adaptive);
        assert!(tasks[6].criteria.ua && !tasks[6].criteria.sr);
    }
}
