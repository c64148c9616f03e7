//! Deterministic tabletop world: scene state, physics-lite action semantics,
//! conveyor dynamics, occlusion-aware perception, fault injection, and state
//! diffing.

mod diff;
mod fault;
mod goal;
mod scenario;
mod select;
mod sim;
mod step;
mod types;

pub use diff::{diff, DiffError, StateDiff};
pub use fault::{FaultInjector, FaultTrigger, WorldFaultKind, WorldFaultSpec};
pub use goal::{eval_goal, GoalCondition, GoalError, GoalPredicate, GoalReport, Zone};
pub use scenario::{load_scenario, parse_scenario, Scenario, ScenarioError, ScenarioMetadata};
pub use select::{resolve_all, resolve_nearest, resolve_unique, ObjectSelector, SelectorError};
pub use sim::snapshot;
pub use step::{PrimitiveStep, StepTarget};
pub use types::{
    BeltObservation, BeltSpan, ContainerKind, ContainerObservation, ContainerState, ConveyorBelt,
    GripperObservation, GripperState, ObjectObservation, PerceptionSnapshot, Pose, Relation,
    SceneObject, StepError, Vec3, WorldEvent, WorldState, BELT_TOLERANCE_M, CONTAINER_TOLERANCE_M,
    DROP_SKEW_M, GRASP_TOLERANCE_M, HOVER_CLEARANCE_M, OBJECT_HEIGHT_M, POSE_TOLERANCE_M,
    STACK_TOLERANCE_M, USER_POSE, USER_ZONE_TOLERANCE_M, YAW_TOLERANCE_RAD,
};
