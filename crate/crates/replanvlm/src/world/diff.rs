//! Before/after state comparison: the substrate the external error-correction
//! mechanism reasons over.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::types::{Pose, Relation, WorldState};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StateDiff {
    pub moved: Vec<MovedEntry>,
    pub relation_changes: Vec<RelationChange>,
    pub container_changes: Vec<ContainerChange>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovedEntry {
    pub id: String,
    pub from: Pose,
    pub to: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationChange {
    pub id: String,
    pub from: Relation,
    pub to: Relation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainerChange {
    pub id: String,
    pub open_before: bool,
    pub open_after: bool,
}

impl StateDiff {
    /// Empty iff the two states are equal up to pose tolerance.
    pub fn is_empty(&self) -> bool {
        self.moved.is_empty() && self.relation_changes.is_empty() && self.container_changes.is_empty()
    }

    pub fn summary_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        for m in &self.moved {
            lines.push(format!(
                "{} moved from ({:.2}, {:.2}, {:.2}) to ({:.2}, {:.2}, {:.2})",
                m.id, m.from.x, m.from.y, m.from.z, m.to.x, m.to.y, m.to.z
            ));
        }
        for r in &self.relation_changes {
            lines.push(format!("{}: {} -> {}", r.id, r.from, r.to));
        }
        for c in &self.container_changes {
            let what = if c.open_after { "opened" } else { "closed" };
            lines.push(format!("{} was {}", c.id, what));
        }
        lines
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiffError {
    #[error("states come from different vocabularies: {detail}")]
    VocabularyMismatch { detail: String },
}

/// Symmetric-difference semantics over two states of the same scenario; pose
/// changes below tolerance are suppressed.
pub fn diff(before: &WorldState, after: &WorldState) -> Result<StateDiff, DiffError> {
    let b_ids: Vec<&String> = before.objects.keys().collect();
    let a_ids: Vec<&String> = after.objects.keys().collect();
    if b_ids != a_ids {
        let only_before: Vec<&&String> = b_ids.iter().filter(|i| !a_ids.contains(i)).collect();
        let only_after: Vec<&&String> = a_ids.iter().filter(|i| !b_ids.contains(i)).collect();
        return Err(DiffError::VocabularyMismatch {
            detail: format!("only before: {only_before:?}; only after: {only_after:?}"),
        });
    }
    let cb: Vec<&String> = before.containers.keys().collect();
    let ca: Vec<&String> = after.containers.keys().collect();
    if cb != ca {
        return Err(DiffError::VocabularyMismatch {
            detail: "container sets differ".to_string(),
        });
    }

    let mut out = StateDiff::default();
    for (id, b) in &before.objects {
        let a = &after.objects[id];
        if !b.pose.approx_eq(&a.pose) {
            out.moved.push(MovedEntry {
                id: id.clone(),
                from: b.pose,
                to: a.pose,
            });
        }
        if !b.relation.approx_eq(&a.relation) {
            out.relation_changes.push(RelationChange {
                id: id.clone(),
                from: b.relation.clone(),
                to: a.relation.clone(),
            });
        }
    }
    for (id, b) in &before.containers {
        let a = &after.containers[id];
        if b.open != a.open {
            out.container_changes.push(ContainerChange {
                id: id.clone(),
                open_before: b.open,
                open_after: a.open,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::types::{Relation, SceneObject};
    use std::collections::BTreeSet;

    fn world_with(objects: Vec<SceneObject>) -> WorldState {
        let mut w = WorldState::empty();
        for o in objects {
            w.objects.insert(o.id.clone(), o);
        }
        w
    }

    fn cube(id: &str, x: f64) -> SceneObject {
        SceneObject {
            id: id.to_string(),
            kind: "cube".to_string(),
            color: "red".to_string(),
            attributes: BTreeSet::new(),
            pose: Pose::new(x, 0.0, 0.0),
            relation: Relation::OnTable,
            fallen: false,
        }
    }

    #[test]
    fn identical_states_diff_empty() {
        let w = world_with(vec![cube("a", 0.1)]);
        assert!(diff(&w, &w).unwrap().is_empty());
    }

    #[test]
    fn sub_tolerance_motion_is_suppressed() {
        let before = world_with(vec![cube("a", 0.1)]);
        let mut after = before.clone();
        after.objects.get_mut("a").unwrap().pose.x += 0.004;
        assert!(diff(&before, &after).unwrap().is_empty());
        after.objects.get_mut("a").unwrap().pose.x += 0.02;
        let d = diff(&before, &after).unwrap();
        assert_eq!(d.moved.len(), 1);
        assert_eq!(d.moved[0].id, "a");
    }

    #[test]
    fn relation_change_is_reported() {
        let before = world_with(vec![cube("a", 0.1)]);
        let mut after = before.clone();
        after.objects.get_mut("a").unwrap().relation = Relation::Delivered;
        let d = diff(&before, &after).unwrap();
        assert_eq!(d.relation_changes.len(), 1);
        assert_eq!(d.relation_changes[0].to, Relation::Delivered);
    }

    #[test]
    fn vocabulary_mismatch_is_an_error() {
        let a = world_with(vec![cube("a", 0.1)]);
        let b = world_with(vec![cube("a", 0.1), cube("b", 0.3)]);
        assert!(matches!(
            diff(&a, &b),
            Err(DiffError::VocabularyMismatch { .. })
        ));
    }
}
