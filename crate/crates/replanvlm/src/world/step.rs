//! The simulator's instruction set: six arm/gripper primitives. Every applied
//! step counts as exactly one operation step.

use serde::{Deserialize, Serialize};

use super::select::ObjectSelector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum PrimitiveStep {
    MoveAbove { target: StepTarget },
    Lower,
    CloseGripper,
    Lift,
    Transfer { target: StepTarget },
    OpenGripper,
}

impl PrimitiveStep {
    pub fn is_movement(&self) -> bool {
        matches!(
            self,
            PrimitiveStep::MoveAbove { .. } | PrimitiveStep::Lift | PrimitiveStep::Transfer { .. }
        )
    }
}

impl std::fmt::Display for PrimitiveStep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PrimitiveStep::MoveAbove { target } => write!(f, "MoveAbove({target})"),
            PrimitiveStep::Lower => write!(f, "Lower"),
            PrimitiveStep::CloseGripper => write!(f, "CloseGripper"),
            PrimitiveStep::Lift => write!(f, "Lift"),
            PrimitiveStep::Transfer { target } => write!(f, "Transfer({target})"),
            PrimitiveStep::OpenGripper => write!(f, "OpenGripper"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepTarget {
    /// A concrete object resolved at expansion time.
    Object { id: String },
    /// A selector resolved at execution time; used when the object was not
    /// visible in the planning snapshot (e.g. inside a drawer the program
    /// opens first).
    Selector { selector: ObjectSelector },
    Container { id: String },
    TablePose { x: f64, y: f64 },
    BeltSlot { offset: f64 },
    User,
    DrawerPull { id: String },
    /// No movement; lets a plan idle while the belt advances.
    Stay,
}

impl std::fmt::Display for StepTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StepTarget::Object { id } => write!(f, "{id}"),
            StepTarget::Selector { selector } => write!(f, "?{}", selector.raw()),
            StepTarget::Container { id } => write!(f, "{id}"),
            StepTarget::TablePose { x, y } => write!(f, "table({x:.2},{y:.2})"),
            StepTarget::BeltSlot { offset } => write!(f, "belt({offset:.2})"),
            StepTarget::User => write!(f, "user"),
            StepTarget::DrawerPull { id } => write!(f, "pull({id})"),
            StepTarget::Stay => write!(f, "stay"),
        }
    }
}
