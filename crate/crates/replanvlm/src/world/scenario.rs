//! Scenario files: the JSON format that describes a scene, its goal, and the
//! task metadata, plus validation of every structural invariant at load time.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::goal::{GoalCondition, GoalPredicate, Zone};
use super::types::*;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("scenario invariant violated by {subject}: {detail}")]
    Invariant { subject: String, detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetadata {
    pub task_id: u32,
    pub instruction: String,
    pub ms_expected: u32,
}

/// A validated scenario: the initial world, its goal, and metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub world: WorldState,
    pub goal: GoalPredicate,
    pub metadata: ScenarioMetadata,
}

#[derive(Debug, Deserialize)]
struct ScenarioFile {
    objects: Vec<ObjectEntry>,
    #[serde(default)]
    containers: Vec<ContainerState>,
    #[serde(default)]
    belt: Option<ConveyorBelt>,
    goal: GoalSection,
    metadata: ScenarioMetadata,
}

#[derive(Debug, Deserialize)]
struct ObjectEntry {
    id: String,
    kind: String,
    color: String,
    #[serde(default)]
    attributes: Vec<String>,
    pose: Pose,
    relation: Relation,
}

#[derive(Debug, Deserialize)]
struct GoalSection {
    conditions: Vec<GoalCondition>,
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile =
        serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;

    let mut world = WorldState::empty();
    for c in file.containers {
        if world.containers.contains_key(&c.id) {
            return Err(invariant(&c.id, "duplicate container id"));
        }
        check_id(&c.id)?;
        world.containers.insert(c.id.clone(), c);
    }
    for entry in file.objects {
        check_id(&entry.id)?;
        if world.objects.contains_key(&entry.id) || world.containers.contains_key(&entry.id) {
            return Err(invariant(&entry.id, "duplicate id"));
        }
        world.objects.insert(
            entry.id.clone(),
            SceneObject {
                id: entry.id,
                kind: entry.kind,
                color: entry.color,
                attributes: entry.attributes.into_iter().collect(),
                pose: entry.pose,
                relation: entry.relation,
                fallen: false,
            },
        );
    }
    if let Some(belt) = file.belt {
        let n = belt.axis.norm();
        if (n - 1.0).abs() > 1e-6 {
            return Err(invariant("belt", &format!("axis norm {n} is not 1")));
        }
        if belt.speed < 0.0 {
            return Err(invariant("belt", "negative speed"));
        }
        // Belt riders sit exactly at their offset point; the file's pose for
        // them is advisory.
        for obj in world.objects.values_mut() {
            if let Relation::OnBelt { offset } = obj.relation {
                obj.pose = belt.point_at(offset);
            }
        }
        world.belt = Some(belt);
    }

    // Gripper state follows from relations: at most one held object.
    let held: Vec<String> = world
        .objects
        .values()
        .filter(|o| o.relation == Relation::HeldByGripper)
        .map(|o| o.id.clone())
        .collect();
    if held.len() > 1 {
        return Err(invariant(&held[1], "more than one object held by gripper"));
    }
    world.gripper.holding = held.first().cloned();

    world
        .check_invariants()
        .map_err(|detail| ScenarioError::Invariant {
            subject: detail
                .split(':')
                .next()
                .unwrap_or("world")
                .trim()
                .to_string(),
            detail,
        })?;

    let goal = GoalPredicate {
        conditions: file.goal.conditions,
    };
    validate_goal(&goal, &world)?;

    Ok(Scenario {
        world,
        goal,
        metadata: file.metadata,
    })
}

fn check_id(id: &str) -> Result<(), ScenarioError> {
    let ok = !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
    if ok {
        Ok(())
    } else {
        Err(invariant(id, "ids are [A-Za-z0-9_-]+"))
    }
}

fn invariant(subject: &str, detail: &str) -> ScenarioError {
    ScenarioError::Invariant {
        subject: subject.to_string(),
        detail: detail.to_string(),
    }
}

/// Every goal selector must resolve against the scenario's object vocabulary
/// (independent of visibility) and every referenced container must exist.
fn validate_goal(goal: &GoalPredicate, world: &WorldState) -> Result<(), ScenarioError> {
    let resolves = |raw: &str| -> bool {
        let sel = super::select::ObjectSelector::parse(raw);
        world.objects.values().any(|o| sel.matches_object(o))
    };
    for (i, cond) in goal.conditions.iter().enumerate() {
        let subject = format!("goal condition {i}");
        match cond {
            GoalCondition::ObjectIn { object, container } => {
                if !resolves(object) {
                    return Err(invariant(&subject, &format!("selector '{object}' matches nothing")));
                }
                if !world.containers.contains_key(container) {
                    return Err(invariant(&subject, &format!("unknown container '{container}'")));
                }
            }
            GoalCondition::StackOrder { order } | GoalCondition::BeltOrder { order } => {
                if order.len() < 2 {
                    return Err(invariant(&subject, "order needs at least two selectors"));
                }
                for sel in order {
                    if !resolves(sel) {
                        return Err(invariant(&subject, &format!("selector '{sel}' matches nothing")));
                    }
                }
            }
            GoalCondition::Delivered { object } => {
                if !resolves(object) {
                    return Err(invariant(&subject, &format!("selector '{object}' matches nothing")));
                }
            }
            GoalCondition::AttributeAt { attribute, zone } => {
                if !world
                    .objects
                    .values()
                    .any(|o| o.attributes.contains(attribute))
                {
                    return Err(invariant(
                        &subject,
                        &format!("no object carries attribute '{attribute}'"),
                    ));
                }
                if let Zone::Container(id) = zone {
                    if !world.containers.contains_key(id) {
                        return Err(invariant(&subject, &format!("unknown container '{id}'")));
                    }
                }
            }
        }
    }
    Ok(())
}
