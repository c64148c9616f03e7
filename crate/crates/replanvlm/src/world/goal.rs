//! Goal predicates: conjunctions of atomic conditions evaluable on any world
//! state without side effects. This is the ground-truth assessor used by the
//! oracle backend and the harness.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::select::{resolve_unique, ObjectSelector, SelectorError};
use super::types::{Relation, SceneObject, WorldState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalPredicate {
    pub conditions: Vec<GoalCondition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GoalCondition {
    /// Every object matching the selector is inside the named container.
    ObjectIn { object: String, container: String },
    /// Base-first tower: order[0] sits on the table and each later entry sits
    /// directly on its predecessor. Selectors must resolve uniquely.
    StackOrder { order: Vec<String> },
    /// At least one matching object has been handed to the user.
    Delivered { object: String },
    /// All listed objects ride the belt with strictly increasing offsets in
    /// list order. Selectors must resolve uniquely.
    BeltOrder { order: Vec<String> },
    /// Every object carrying the attribute is in the zone.
    AttributeAt { attribute: String, zone: Zone },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    Delivered,
    Table,
    Container(String),
}

impl std::fmt::Display for Zone {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Zone::Delivered => write!(f, "the user"),
            Zone::Table => write!(f, "the table"),
            Zone::Container(id) => write!(f, "{id}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalReport {
    pub met: bool,
    pub unmet: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GoalError {
    #[error(transparent)]
    Selector(#[from] SelectorError),
    #[error("unknown container '{0}' in goal")]
    UnknownContainer(String),
    #[error("no object carries attribute '{0}'")]
    UnknownAttribute(String),
}

/// Pure evaluation: true iff all atomic conditions hold; unmet conditions are
/// described in plain text for feedback.
pub fn eval_goal(goal: &GoalPredicate, world: &WorldState) -> Result<GoalReport, GoalError> {
    let mut unmet = Vec::new();
    for cond in &goal.conditions {
        eval_condition(cond, world, &mut unmet)?;
    }
    Ok(GoalReport {
        met: unmet.is_empty(),
        unmet,
    })
}

fn matching<'a>(world: &'a WorldState, raw: &str) -> Vec<&'a SceneObject> {
    let sel = ObjectSelector::parse(raw);
    world
        .objects
        .values()
        .filter(|o| sel.matches_object(o))
        .collect()
}

fn eval_condition(
    cond: &GoalCondition,
    world: &WorldState,
    unmet: &mut Vec<String>,
) -> Result<(), GoalError> {
    match cond {
        GoalCondition::ObjectIn { object, container } => {
            if !world.containers.contains_key(container) {
                return Err(GoalError::UnknownContainer(container.clone()));
            }
            let hits = matching(world, object);
            if hits.is_empty() {
                return Err(SelectorError::Unresolvable {
                    selector: object.clone(),
                }
                .into());
            }
            for obj in hits {
                let want = Relation::Inside {
                    target: container.clone(),
                };
                if obj.relation != want {
                    unmet.push(format!(
                        "{object}: expected Inside({container}), found {}",
                        obj.relation
                    ));
                }
            }
        }
        GoalCondition::StackOrder { order } => {
            let mut resolved = Vec::new();
            for raw in order {
                let sel = ObjectSelector::parse(raw);
                resolved.push(resolve_unique(world.objects.values(), &sel)?);
            }
            if let Some(base) = resolved.first() {
                if base.relation != Relation::OnTable {
                    unmet.push(format!(
                        "{}: expected OnTable as stack base, found {}",
                        order[0], base.relation
                    ));
                }
            }
            for i in 1..resolved.len() {
                let want = Relation::OnTopOf {
                    target: resolved[i - 1].id.clone(),
                };
                if resolved[i].relation != want {
                    unmet.push(format!(
                        "{}: expected OnTopOf({}), found {}",
                        order[i],
                        resolved[i - 1].id,
                        resolved[i].relation
                    ));
                }
            }
        }
        GoalCondition::Delivered { object } => {
            let hits = matching(world, object);
            if hits.is_empty() {
                return Err(SelectorError::Unresolvable {
                    selector: object.clone(),
                }
                .into());
            }
            if !hits.iter().any(|o| o.relation == Relation::Delivered) {
                let found = &hits[0].relation;
                unmet.push(format!("{object}: expected Delivered, found {found}"));
            }
        }
        GoalCondition::BeltOrder { order } => {
            let mut offsets = Vec::new();
            for raw in order {
                let sel = ObjectSelector::parse(raw);
                let obj = resolve_unique(world.objects.values(), &sel)?;
                match obj.relation {
                    Relation::OnBelt { offset } => offsets.push((raw.clone(), offset)),
                    ref other => {
                        unmet.push(format!("{raw}: expected OnBelt, found {other}"));
                    }
                }
            }
            if offsets.len() == order.len() {
                for w in offsets.windows(2) {
                    if w[0].1 >= w[1].1 {
                        unmet.push(format!(
                            "belt order violated: {} (offset {:.3}) should precede {} (offset {:.3})",
                            w[0].0, w[0].1, w[1].0, w[1].1
                        ));
                    }
                }
            }
        }
        GoalCondition::AttributeAt { attribute, zone } => {
            let hits: Vec<&SceneObject> = world
                .objects
                .values()
                .filter(|o| o.attributes.contains(attribute))
                .collect();
            if hits.is_empty() {
                return Err(GoalError::UnknownAttribute(attribute.clone()));
            }
            for obj in hits {
                let ok = match zone {
                    Zone::Delivered => obj.relation == Relation::Delivered,
                    Zone::Table => obj.relation == Relation::OnTable,
                    Zone::Container(id) => {
                        if !world.containers.contains_key(id) {
                            return Err(GoalError::UnknownContainer(id.clone()));
                        }
                        obj.relation == Relation::Inside { target: id.clone() }
                    }
                };
                if !ok {
                    unmet.push(format!(
                        "{} ({attribute}): expected at {zone}, found {}",
                        obj.id, obj.relation
                    ));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::types::Pose;
    use std::collections::BTreeSet;

    fn obj(id: &str, kind: &str, color: &str, relation: Relation) -> SceneObject {
        SceneObject {
            id: id.to_string(),
            kind: kind.to_string(),
            color: color.to_string(),
            attributes: BTreeSet::new(),
            pose: Pose::new(0.0, 0.0, 0.0),
            relation,
            fallen: false,
        }
    }

    fn stack_world() -> WorldState {
        let mut w = WorldState::empty();
        for o in [
            obj("red_cube", "cube", "red", Relation::OnTable),
            obj(
                "yellow_cube",
                "cube",
                "yellow",
                Relation::OnTopOf {
                    target: "red_cube".to_string(),
                },
            ),
            obj(
                "blue_cube",
                "cube",
                "blue",
                Relation::OnTopOf {
                    target: "yellow_cube".to_string(),
                },
            ),
        ] {
            w.objects.insert(o.id.clone(), o);
        }
        w.containers.insert(
            "box".to_string(),
            crate::world::types::ContainerState {
                id: "box".to_string(),
                kind: crate::world::types::ContainerKind::Box,
                open: true,
                capacity: 3,
                pose: Pose::new(0.35, -0.2, 0.0),
            },
        );
        w
    }

    #[test]
    fn initial_stack_order_holds_base_first() {
        let w = stack_world();
        let goal = GoalPredicate {
            conditions: vec![GoalCondition::StackOrder {
                order: vec!["red".into(), "yellow".into(), "blue".into()],
            }],
        };
        assert!(eval_goal(&goal, &w).unwrap().met);
    }

    #[test]
    fn object_in_unmet_on_initial_world() {
        let w = stack_world();
        let goal = GoalPredicate {
            conditions: vec![GoalCondition::ObjectIn {
                object: "red cube".into(),
                container: "box".into(),
            }],
        };
        let report = eval_goal(&goal, &w).unwrap();
        assert!(!report.met);
        assert_eq!(report.unmet.len(), 1);
        assert!(report.unmet[0].contains("expected Inside(box)"));
        assert!(report.unmet[0].contains("found OnTable"));
    }

    #[test]
    fn unresolvable_selector_errors() {
        let w = stack_world();
        let goal = GoalPredicate {
            conditions: vec![GoalCondition::Delivered {
                object: "banana".into(),
            }],
        };
        assert!(matches!(
            eval_goal(&goal, &w),
            Err(GoalError::Selector(SelectorError::Unresolvable { .. }))
        ));
    }
}
