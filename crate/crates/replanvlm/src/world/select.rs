//! Object and container selectors: plans refer to things by id or by a few
//! descriptive words ("red cube", "evil toy"); resolution maps those onto
//! concrete scene entities.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::types::{ContainerState, Pose, SceneObject};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectSelector {
    raw: String,
    tokens: Vec<String>,
}

impl ObjectSelector {
    pub fn parse(raw: &str) -> Self {
        let tokens = raw
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(|t| t.to_lowercase())
            .collect();
        Self {
            raw: raw.to_string(),
            tokens,
        }
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// A selector matches an object when it is the exact id, or when every
    /// token names the object's color, kind, an attribute, or an id part.
    pub fn matches_object(&self, obj: &SceneObject) -> bool {
        if self.raw == obj.id {
            return true;
        }
        if self.tokens.is_empty() {
            return false;
        }
        let id_parts: Vec<String> = split_parts(&obj.id);
        self.tokens.iter().all(|t| {
            *t == obj.color.to_lowercase()
                || *t == obj.kind.to_lowercase()
                || obj.attributes.iter().any(|a| a.to_lowercase() == *t)
                || id_parts.contains(t)
        })
    }

    /// Containers match by exact id, kind name, or id parts.
    pub fn matches_container(&self, c: &ContainerState) -> bool {
        if self.raw == c.id {
            return true;
        }
        if self.tokens.is_empty() {
            return false;
        }
        let id_parts = split_parts(&c.id);
        let kind = c.kind.to_string();
        self.tokens
            .iter()
            .all(|t| *t == kind || id_parts.contains(t))
    }
}

impl std::fmt::Display for ObjectSelector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.raw)
    }
}

fn split_parts(id: &str) -> Vec<String> {
    id.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectorError {
    #[error("no object matches selector '{selector}'")]
    Unresolvable { selector: String },
    #[error("selector '{selector}' is ambiguous: matches {candidates:?}")]
    Ambiguous {
        selector: String,
        candidates: Vec<String>,
    },
}

/// All matching objects, ordered by (distance to the arm, id).
pub fn resolve_all<'a>(
    objects: impl IntoIterator<Item = &'a SceneObject>,
    selector: &ObjectSelector,
    arm: &Pose,
) -> Vec<&'a SceneObject> {
    let mut hits: Vec<&SceneObject> = objects
        .into_iter()
        .filter(|o| selector.matches_object(o))
        .collect();
    hits.sort_by(|a, b| {
        let da = a.pose.distance(arm);
        let db = b.pose.distance(arm);
        da.partial_cmp(&db)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.id.cmp(&b.id))
    });
    hits
}

/// Ambiguity is allowed; ties break by nearest-to-gripper, then id.
pub fn resolve_nearest<'a>(
    objects: impl IntoIterator<Item = &'a SceneObject>,
    selector: &ObjectSelector,
    arm: &Pose,
) -> Result<&'a SceneObject, SelectorError> {
    resolve_all(objects, selector, arm)
        .into_iter()
        .next()
        .ok_or_else(|| SelectorError::Unresolvable {
            selector: selector.raw().to_string(),
        })
}

/// Requires exactly one match; used where a goal names a particular object.
pub fn resolve_unique<'a>(
    objects: impl IntoIterator<Item = &'a SceneObject>,
    selector: &ObjectSelector,
) -> Result<&'a SceneObject, SelectorError> {
    let hits: Vec<&SceneObject> = objects
        .into_iter()
        .filter(|o| selector.matches_object(o))
        .collect();
    match hits.len() {
        0 => Err(SelectorError::Unresolvable {
            selector: selector.raw().to_string(),
        }),
        1 => Ok(hits[0]),
        _ => Err(SelectorError::Ambiguous {
            selector: selector.raw().to_string(),
            candidates: hits.iter().map(|o| o.id.clone()).collect(),
        }),
    }
}
