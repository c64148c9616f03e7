//! Scene data model shared by the simulator, perception, and goal evaluation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Pose deltas below these thresholds are treated as numeric noise.
pub const POSE_TOLERANCE_M: f64 = 0.01;
pub const YAW_TOLERANCE_RAD: f64 = 0.05;

/// Arm hover clearance above a target before lowering.
pub const HOVER_CLEARANCE_M: f64 = 0.15;
/// Maximum 3D distance between gripper and object for a grasp to engage.
pub const GRASP_TOLERANCE_M: f64 = 0.03;
/// Maximum XY distance for a released object to settle on top of another.
pub const STACK_TOLERANCE_M: f64 = 0.05;
/// Maximum XY distance for a released object to land inside a container.
pub const CONTAINER_TOLERANCE_M: f64 = 0.10;
/// Maximum lateral distance from the belt line for a release to land on it.
pub const BELT_TOLERANCE_M: f64 = 0.06;
/// Radius of the delivery zone around the user pose.
pub const USER_ZONE_TOLERANCE_M: f64 = 0.10;
/// Uniform object height used for stacking (scenarios do not carry sizes).
pub const OBJECT_HEIGHT_M: f64 = 0.05;
/// Lateral offset applied to involuntarily dropped objects so they never land
/// exactly on their source column.
pub const DROP_SKEW_M: f64 = 0.06;

/// Fixed delivery endpoint for `give`.
pub const USER_POSE: Pose = Pose {
    x: 0.0,
    y: -0.55,
    z: 0.0,
    yaw: 0.0,
};

const HOME_POSE: Pose = Pose {
    x: 0.0,
    y: 0.0,
    z: 0.3,
    yaw: 0.0,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z, yaw: 0.0 }
    }

    pub fn xy_distance(&self, other: &Pose) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    pub fn distance(&self, other: &Pose) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2))
            .sqrt()
    }

    /// Equality up to the position and yaw tolerances, with yaw wrap-around.
    pub fn approx_eq(&self, other: &Pose) -> bool {
        let mut dyaw = (self.yaw - other.yaw) % (2.0 * std::f64::consts::PI);
        if dyaw > std::f64::consts::PI {
            dyaw -= 2.0 * std::f64::consts::PI;
        }
        if dyaw < -std::f64::consts::PI {
            dyaw += 2.0 * std::f64::consts::PI;
        }
        self.distance(other) <= POSE_TOLERANCE_M && dyaw.abs() <= YAW_TOLERANCE_RAD
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Where an object currently is, relative to the rest of the scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Relation {
    OnTable,
    OnTopOf { target: String },
    Inside { target: String },
    OnBelt { offset: f64 },
    HeldByGripper,
    Delivered,
}

impl Relation {
    /// Structural equality with belt offsets compared up to pose tolerance.
    pub fn approx_eq(&self, other: &Relation) -> bool {
        match (self, other) {
            (Relation::OnBelt { offset: a }, Relation::OnBelt { offset: b }) => {
                (a - b).abs() <= POSE_TOLERANCE_M
            }
            _ => self == other,
        }
    }
}

impl std::fmt::Display for Relation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Relation::OnTable => write!(f, "OnTable"),
            Relation::OnTopOf { target } => write!(f, "OnTopOf({target})"),
            Relation::Inside { target } => write!(f, "Inside({target})"),
            Relation::OnBelt { offset } => write!(f, "OnBelt({offset:.3})"),
            Relation::HeldByGripper => write!(f, "HeldByGripper"),
            Relation::Delivered => write!(f, "Delivered"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    pub kind: String,
    pub color: String,
    #[serde(default)]
    pub attributes: BTreeSet<String>,
    pub pose: Pose,
    pub relation: Relation,
    /// Set when the object ran off the belt span; it stays in the world.
    #[serde(default)]
    pub fallen: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContainerKind {
    Drawer,
    Box,
    Plate,
}

impl std::fmt::Display for ContainerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ContainerKind::Drawer => write!(f, "drawer"),
            ContainerKind::Box => write!(f, "box"),
            ContainerKind::Plate => write!(f, "plate"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainerState {
    pub id: String,
    pub kind: ContainerKind,
    pub open: bool,
    pub capacity: u32,
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeltSpan {
    pub start: Vec3,
    pub end: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConveyorBelt {
    pub axis: Vec3,
    /// Meters advanced per primitive step while active.
    pub speed: f64,
    pub span: BeltSpan,
    pub active: bool,
}

impl ConveyorBelt {
    pub fn length(&self) -> f64 {
        let d = Vec3 {
            x: self.span.end.x - self.span.start.x,
            y: self.span.end.y - self.span.start.y,
            z: self.span.end.z - self.span.start.z,
        };
        d.norm()
    }

    /// World pose of a point `offset` meters along the belt from its start.
    pub fn point_at(&self, offset: f64) -> Pose {
        Pose::new(
            self.span.start.x + self.axis.x * offset,
            self.span.start.y + self.axis.y * offset,
            self.span.start.z + self.axis.z * offset,
        )
    }

    /// Projects an XY point onto the belt line: (offset along axis, lateral distance).
    pub fn project(&self, x: f64, y: f64) -> (f64, f64) {
        let dx = x - self.span.start.x;
        let dy = y - self.span.start.y;
        let offset = dx * self.axis.x + dy * self.axis.y;
        let px = self.span.start.x + self.axis.x * offset;
        let py = self.span.start.y + self.axis.y * offset;
        let lateral = ((x - px).powi(2) + (y - py).powi(2)).sqrt();
        (offset, lateral)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GripperState {
    pub holding: Option<String>,
    pub arm: Pose,
    /// Armed by a grip-slip fault: the next arm movement drops the payload.
    #[serde(default)]
    pub slip_pending: bool,
    /// Drawer whose handle the gripper currently holds.
    #[serde(default)]
    pub handle: Option<String>,
    /// Belt object the arm is visually tracking for a grasp.
    #[serde(default)]
    pub tracked: Option<String>,
}

impl Default for GripperState {
    fn default() -> Self {
        Self {
            holding: None,
            arm: HOME_POSE,
            slip_pending: false,
            handle: None,
            tracked: None,
        }
    }
}

/// Full simulated scene; the ground truth the harness owns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub tick: u64,
    pub objects: BTreeMap<String, SceneObject>,
    pub containers: BTreeMap<String, ContainerState>,
    pub belt: Option<ConveyorBelt>,
    pub gripper: GripperState,
    pub rng_seed: u64,
}

impl WorldState {
    pub fn empty() -> Self {
        Self {
            tick: 0,
            objects: BTreeMap::new(),
            containers: BTreeMap::new(),
            belt: None,
            gripper: GripperState::default(),
            rng_seed: 0,
        }
    }

    /// True when the object is observable: everything except the contents of
    /// a closed drawer.
    pub fn is_visible(&self, object: &SceneObject) -> bool {
        match &object.relation {
            Relation::Inside { target } => match self.containers.get(target) {
                Some(c) => c.open || c.kind != ContainerKind::Drawer,
                None => true,
            },
            _ => true,
        }
    }

    pub fn occupants(&self, container_id: &str) -> usize {
        self.objects
            .values()
            .filter(|o| matches!(&o.relation, Relation::Inside { target } if target == container_id))
            .count()
    }

    pub fn object_on_top_of(&self, object_id: &str) -> Option<&SceneObject> {
        self.objects
            .values()
            .find(|o| matches!(&o.relation, Relation::OnTopOf { target } if target == object_id))
    }

    /// Checks every structural invariant; returns the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut held = Vec::new();
        for obj in self.objects.values() {
            match &obj.relation {
                Relation::OnTopOf { target } => {
                    if !self.objects.contains_key(target) {
                        return Err(format!("{}: OnTopOf target {target} does not exist", obj.id));
                    }
                    if target == &obj.id {
                        return Err(format!("{}: object stacked on itself", obj.id));
                    }
                }
                Relation::Inside { target } => {
                    if !self.containers.contains_key(target) {
                        return Err(format!("{}: Inside target {target} does not exist", obj.id));
                    }
                }
                Relation::OnBelt { offset } => {
                    let belt = self
                        .belt
                        .as_ref()
                        .ok_or_else(|| format!("{}: OnBelt but world has no belt", obj.id))?;
                    if *offset < -POSE_TOLERANCE_M || *offset > belt.length() + POSE_TOLERANCE_M {
                        return Err(format!(
                            "{}: belt offset {offset:.3} outside span [0, {:.3}]",
                            obj.id,
                            belt.length()
                        ));
                    }
                }
                Relation::HeldByGripper => held.push(obj.id.clone()),
                _ => {}
            }
        }
        if held.len() > 1 {
            return Err(format!("more than one object held: {held:?}"));
        }
        match (&self.gripper.holding, held.first()) {
            (Some(h), Some(r)) if h == r => {}
            (None, None) => {}
            _ => {
                return Err(format!(
                    "gripper holding {:?} inconsistent with relations {held:?}",
                    self.gripper.holding
                ))
            }
        }
        // Acyclic stacks with at most one object directly on top of another.
        let mut tops: BTreeMap<&str, &str> = BTreeMap::new();
        for obj in self.objects.values() {
            if let Relation::OnTopOf { target } = &obj.relation {
                if tops.insert(target.as_str(), obj.id.as_str()).is_some() {
                    return Err(format!("two objects directly on top of {target}"));
                }
                if let Some(below) = self.objects.get(target) {
                    if matches!(below.relation, Relation::Inside { .. }) {
                        return Err(format!(
                            "{}: stacked on {target}, which is inside a container",
                            obj.id
                        ));
                    }
                }
            }
        }
        for start in self.objects.values() {
            let mut seen = BTreeSet::new();
            let mut cur = start;
            while let Relation::OnTopOf { target } = &cur.relation {
                if !seen.insert(cur.id.as_str()) {
                    return Err(format!("OnTopOf cycle involving {}", start.id));
                }
                match self.objects.get(target) {
                    Some(next) => cur = next,
                    None => break,
                }
            }
        }
        for c in self.containers.values() {
            if c.kind != ContainerKind::Drawer && !c.open {
                return Err(format!("{}: a {} is always open", c.id, c.kind));
            }
            let occ = self.occupants(&c.id);
            if occ > c.capacity as usize {
                return Err(format!(
                    "{}: {occ} occupants exceed capacity {}",
                    c.id, c.capacity
                ));
            }
        }
        Ok(())
    }
}

/// What the "camera" reports: everything visible, with belt-tracked poses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionSnapshot {
    pub taken_at_tick: u64,
    pub observations: Vec<ObjectObservation>,
    pub containers: Vec<ContainerObservation>,
    pub belt: Option<BeltObservation>,
    pub gripper: GripperObservation,
}

impl PerceptionSnapshot {
    pub fn observation(&self, id: &str) -> Option<&ObjectObservation> {
        self.observations.iter().find(|o| o.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectObservation {
    pub id: String,
    pub kind: String,
    pub color: String,
    pub attributes: BTreeSet<String>,
    pub pose: Pose,
    pub relation: Relation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainerObservation {
    pub id: String,
    pub kind: ContainerKind,
    pub open: bool,
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeltObservation {
    pub axis: Vec3,
    pub speed: f64,
    pub span: BeltSpan,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GripperObservation {
    pub arm: Pose,
    pub holding: Option<String>,
}

/// Recoverable occurrences during a primitive step. These are recorded, not
/// raised; the external mechanism is what reacts to them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum WorldEvent {
    Collision {
        intended: String,
        blocker: String,
    },
    EmptyGrasp,
    PickedUp {
        object: String,
    },
    Placed {
        object: String,
        relation: Relation,
    },
    Delivered {
        object: String,
    },
    Drop {
        object: String,
        cause: DropCause,
    },
    Fallen {
        object: String,
    },
    ContainerFull {
        object: String,
        container: String,
    },
    HandleGripped {
        container: String,
    },
    HandleSlipped {
        container: String,
    },
    DrawerOpened {
        container: String,
    },
    FaultApplied {
        kind: String,
        step_index: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropCause {
    Slip,
    TransferFault,
}

/// Hard failures of a primitive step; execution stops on these.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("unreachable target {target}: {reason}")]
    UnreachableTarget { target: String, reason: String },
    #[error("gripper busy: already holding {holding}")]
    GripperBusy { holding: String },
}
