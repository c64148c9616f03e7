//! Physics-lite action semantics for the six primitives, belt kinematics,
//! and the perception snapshot.
//!
//! Resolution of grasps and releases is position-based: the gripper acts on
//! whatever is actually under the arm, so injected displacement or slips
//! produce the honest downstream consequences instead of teleporting the
//! intended object.

use super::fault::{FaultInjector, WorldFaultKind};
use super::select::resolve_nearest;
use super::step::{PrimitiveStep, StepTarget};
use super::types::*;

impl WorldState {
    /// Applies one primitive step. The tick always advances by one; the belt
    /// advances when active; recoverable trouble is reported as events.
    pub fn apply_step(
        &mut self,
        step: &PrimitiveStep,
        mut injector: Option<&mut FaultInjector>,
    ) -> Result<Vec<WorldEvent>, StepError> {
        let mut events = Vec::new();
        let fault_now = injector.as_deref_mut().and_then(|i| i.poll());
        let fault_step_index = injector
            .as_deref()
            .map(|i| i.step_index().saturating_sub(1))
            .unwrap_or(0);
        let displacement = injector.as_deref().map(|i| i.displacement()).unwrap_or(0.0);

        // Visual tracking: keep the arm over a belt object it locked onto.
        if self.gripper.holding.is_none() {
            if let Some(tracked) = self.gripper.tracked.clone() {
                match self.objects.get(&tracked) {
                    Some(obj) if matches!(obj.relation, Relation::OnBelt { .. }) => {
                        self.gripper.arm.x = obj.pose.x;
                        self.gripper.arm.y = obj.pose.y;
                    }
                    _ => self.gripper.tracked = None,
                }
            }
        }

        // A slipping grip lets go at the start of the next arm movement.
        if step.is_movement() && self.gripper.slip_pending {
            if let Some(held) = self.gripper.holding.clone() {
                self.drop_held(&held, DropCause::Slip, &mut events);
            } else if let Some(handle) = self.gripper.handle.take() {
                events.push(WorldEvent::HandleSlipped { container: handle });
            }
            self.gripper.slip_pending = false;
        }

        // Pre-step interference: a displace fault shoves the object under the
        // arm before the step runs (release-point displacement is handled in
        // OpenGripper below).
        if fault_now == Some(WorldFaultKind::Displace)
            && !matches!(step, PrimitiveStep::OpenGripper)
        {
            if let Some(id) = self.topmost_stackable_under(
                self.gripper.arm.x,
                self.gripper.arm.y,
                CONTAINER_TOLERANCE_M,
            ) {
                let skew = displacement / std::f64::consts::SQRT_2;
                let obj = self.objects.get_mut(&id).expect("object exists");
                obj.pose.x += skew;
                obj.pose.y += skew;
                if let Relation::OnBelt { .. } = obj.relation {
                    obj.relation = Relation::OnTable;
                }
                events.push(WorldEvent::FaultApplied {
                    kind: WorldFaultKind::Displace.to_string(),
                    step_index: fault_step_index,
                });
            }
        }

        match step {
            PrimitiveStep::MoveAbove { target } => {
                let pose = self.resolve_target_pose(target)?;
                if !matches!(target, StepTarget::Stay) {
                    self.gripper.arm = Pose::new(pose.x, pose.y, pose.z + HOVER_CLEARANCE_M);
                    self.gripper.tracked = self.tracked_candidate(target);
                }
            }
            PrimitiveStep::Lower => {
                self.gripper.arm.z -= HOVER_CLEARANCE_M;
            }
            PrimitiveStep::Lift => {
                self.gripper.arm.z += HOVER_CLEARANCE_M;
            }
            PrimitiveStep::CloseGripper => {
                if let Some(holding) = &self.gripper.holding {
                    return Err(StepError::GripperBusy {
                        holding: holding.clone(),
                    });
                }
                self.close_gripper(fault_now, fault_step_index, &mut events);
            }
            PrimitiveStep::Transfer { target } => {
                let pose = self.resolve_target_pose(target)?;
                if let (Some(handle), StepTarget::DrawerPull { id }) =
                    (self.gripper.handle.clone(), target)
                {
                    if &handle == id {
                        let drawer = self.containers.get_mut(id).expect("validated container");
                        if !drawer.open {
                            drawer.open = true;
                            events.push(WorldEvent::DrawerOpened {
                                container: id.clone(),
                            });
                        }
                    }
                }
                if fault_now == Some(WorldFaultKind::DropDuringTransfer) {
                    if let Some(held) = self.gripper.holding.clone() {
                        let mid_x = (self.gripper.arm.x + pose.x) / 2.0;
                        let mid_y = (self.gripper.arm.y + pose.y) / 2.0;
                        self.gripper.arm.x = mid_x;
                        self.gripper.arm.y = mid_y;
                        self.drop_held(&held, DropCause::TransferFault, &mut events);
                        events.push(WorldEvent::FaultApplied {
                            kind: WorldFaultKind::DropDuringTransfer.to_string(),
                            step_index: fault_step_index,
                        });
                    }
                }
                self.gripper.arm = Pose::new(pose.x, pose.y, pose.z + HOVER_CLEARANCE_M);
                self.gripper.tracked = self.tracked_candidate(target);
            }
            PrimitiveStep::OpenGripper => {
                if let Some(held) = self.gripper.holding.clone() {
                    let mut x = self.gripper.arm.x;
                    let mut y = self.gripper.arm.y;
                    if fault_now == Some(WorldFaultKind::Displace) {
                        let skew = displacement / std::f64::consts::SQRT_2;
                        x += skew;
                        y += skew;
                        events.push(WorldEvent::FaultApplied {
                            kind: WorldFaultKind::Displace.to_string(),
                            step_index: fault_step_index,
                        });
                    }
                    self.release_held(&held, x, y, &mut events);
                } else if self.gripper.handle.is_some() {
                    self.gripper.handle = None;
                }
            }
        }

        // Held payload rides with the arm.
        if let Some(held) = self.gripper.holding.clone() {
            let arm = self.gripper.arm;
            let obj = self.objects.get_mut(&held).expect("held object exists");
            obj.pose = arm;
        }

        self.advance_belt(&mut events);
        self.tick += 1;
        Ok(events)
    }

    fn tracked_candidate(&self, target: &StepTarget) -> Option<String> {
        let id = match target {
            StepTarget::Object { id } => Some(id.clone()),
            StepTarget::Selector { selector } => {
                let visible = self.objects.values().filter(|o| self.is_visible(o));
                resolve_nearest(visible, selector, &self.gripper.arm)
                    .ok()
                    .map(|o| o.id.clone())
            }
            _ => None,
        }?;
        match self.objects.get(&id) {
            Some(obj) if matches!(obj.relation, Relation::OnBelt { .. }) => Some(id),
            _ => None,
        }
    }

    fn resolve_target_pose(&self, target: &StepTarget) -> Result<Pose, StepError> {
        match target {
            StepTarget::Object { id } => {
                let obj = self
                    .objects
                    .get(id)
                    .ok_or_else(|| StepError::UnreachableTarget {
                        target: id.clone(),
                        reason: "object does not exist".to_string(),
                    })?;
                if !self.is_visible(obj) {
                    return Err(StepError::UnreachableTarget {
                        target: id.clone(),
                        reason: "object is inside a closed container".to_string(),
                    });
                }
                Ok(obj.pose)
            }
            StepTarget::Selector { selector } => {
                let visible = self.objects.values().filter(|o| self.is_visible(o));
                let obj = resolve_nearest(visible, selector, &self.gripper.arm).map_err(|_| {
                    StepError::UnreachableTarget {
                        target: selector.raw().to_string(),
                        reason: "no visible object matches the selector".to_string(),
                    }
                })?;
                Ok(obj.pose)
            }
            StepTarget::Container { id } => {
                self.containers
                    .get(id)
                    .map(|c| c.pose)
                    .ok_or_else(|| StepError::UnreachableTarget {
                        target: id.clone(),
                        reason: "container does not exist".to_string(),
                    })
            }
            StepTarget::TablePose { x, y } => Ok(Pose::new(*x, *y, 0.0)),
            StepTarget::BeltSlot { offset } => {
                let belt = self.belt.as_ref().ok_or_else(|| StepError::UnreachableTarget {
                    target: format!("belt({offset:.2})"),
                    reason: "world has no belt".to_string(),
                })?;
                Ok(belt.point_at(*offset))
            }
            StepTarget::User => Ok(USER_POSE),
            StepTarget::DrawerPull { id } => {
                let c = self
                    .containers
                    .get(id)
                    .ok_or_else(|| StepError::UnreachableTarget {
                        target: id.clone(),
                        reason: "container does not exist".to_string(),
                    })?;
                Ok(Pose::new(c.pose.x, c.pose.y - 0.18, c.pose.z))
            }
            StepTarget::Stay => Ok(self.gripper.arm),
        }
    }

    fn close_gripper(
        &mut self,
        fault_now: Option<WorldFaultKind>,
        fault_step_index: u64,
        events: &mut Vec<WorldEvent>,
    ) {
        let arm = self.gripper.arm;
        let candidate = self
            .objects
            .values()
            .filter(|o| self.is_visible(o) && o.relation != Relation::HeldByGripper)
            .filter(|o| o.pose.distance(&arm) <= GRASP_TOLERANCE_M)
            .min_by(|a, b| {
                let da = a.pose.distance(&arm);
                let db = b.pose.distance(&arm);
                da.partial_cmp(&db)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| a.id.cmp(&b.id))
            })
            .map(|o| o.id.clone());

        match candidate {
            Some(id) => {
                if let Some(top) = self.object_on_top_of(&id) {
                    events.push(WorldEvent::Collision {
                        intended: id.clone(),
                        blocker: top.id.clone(),
                    });
                    return;
                }
                let obj = self.objects.get_mut(&id).expect("candidate exists");
                obj.relation = Relation::HeldByGripper;
                obj.fallen = false;
                self.gripper.holding = Some(id.clone());
                self.gripper.tracked = None;
                events.push(WorldEvent::PickedUp { object: id });
                if fault_now == Some(WorldFaultKind::GripSlip) {
                    self.gripper.slip_pending = true;
                    events.push(WorldEvent::FaultApplied {
                        kind: WorldFaultKind::GripSlip.to_string(),
                        step_index: fault_step_index,
                    });
                }
            }
            None => {
                // A drawer under the arm offers its handle instead.
                let handle = self
                    .containers
                    .values()
                    .filter(|c| c.kind == ContainerKind::Drawer)
                    .filter(|c| c.pose.xy_distance(&arm) <= CONTAINER_TOLERANCE_M)
                    .min_by(|a, b| a.id.cmp(&b.id))
                    .map(|c| c.id.clone());
                match handle {
                    Some(id) => {
                        self.gripper.handle = Some(id.clone());
                        events.push(WorldEvent::HandleGripped { container: id });
                        if fault_now == Some(WorldFaultKind::GripSlip) {
                            self.gripper.slip_pending = true;
                            events.push(WorldEvent::FaultApplied {
                                kind: WorldFaultKind::GripSlip.to_string(),
                                step_index: fault_step_index,
                            });
                        }
                    }
                    None => events.push(WorldEvent::EmptyGrasp),
                }
            }
        }
    }

    /// Topmost object whose XY is within `tol` of the given point and that
    /// could carry another object (not held, not inside a container).
    fn topmost_stackable_under(&self, x: f64, y: f64, tol: f64) -> Option<String> {
        let at = Pose::new(x, y, 0.0);
        self.objects
            .values()
            .filter(|o| {
                !matches!(
                    o.relation,
                    Relation::HeldByGripper | Relation::Inside { .. } | Relation::Delivered
                )
            })
            .filter(|o| o.pose.xy_distance(&at) <= tol)
            .max_by(|a, b| {
                a.pose
                    .z
                    .partial_cmp(&b.pose.z)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| b.id.cmp(&a.id))
            })
            .map(|o| o.id.clone())
    }

    /// Deliberate release: the payload settles on whatever is at the release
    /// point — user zone, an existing stack, an open container, the belt, or
    /// the table, in that priority order.
    fn release_held(&mut self, held: &str, x: f64, y: f64, events: &mut Vec<WorldEvent>) {
        self.gripper.holding = None;
        self.gripper.slip_pending = false;
        let release = Pose::new(x, y, 0.0);

        if release.xy_distance(&USER_POSE) <= USER_ZONE_TOLERANCE_M {
            let obj = self.objects.get_mut(held).expect("held object exists");
            obj.relation = Relation::Delivered;
            obj.pose = USER_POSE;
            events.push(WorldEvent::Delivered {
                object: held.to_string(),
            });
            return;
        }

        if let Some(base_id) = self.topmost_stackable_under(x, y, STACK_TOLERANCE_M) {
            if base_id != held {
                let base_pose = self.objects[&base_id].pose;
                let on_belt = matches!(self.objects[&base_id].relation, Relation::OnBelt { .. });
                if !on_belt {
                    let obj = self.objects.get_mut(held).expect("held object exists");
                    obj.relation = Relation::OnTopOf {
                        target: base_id.clone(),
                    };
                    obj.pose =
                        Pose::new(base_pose.x, base_pose.y, base_pose.z + OBJECT_HEIGHT_M);
                    events.push(WorldEvent::Placed {
                        object: held.to_string(),
                        relation: obj.relation.clone(),
                    });
                    return;
                }
            }
        }

        let container = self
            .containers
            .values()
            .filter(|c| c.open)
            .filter(|c| c.pose.xy_distance(&release) <= CONTAINER_TOLERANCE_M)
            .min_by(|a, b| {
                let da = a.pose.xy_distance(&release);
                let db = b.pose.xy_distance(&release);
                da.partial_cmp(&db)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| a.id.cmp(&b.id))
            })
            .map(|c| (c.id.clone(), c.pose, c.capacity));
        if let Some((cid, cpose, capacity)) = container {
            if self.occupants(&cid) < capacity as usize {
                let obj = self.objects.get_mut(held).expect("held object exists");
                obj.relation = Relation::Inside { target: cid };
                obj.pose = cpose;
                events.push(WorldEvent::Placed {
                    object: held.to_string(),
                    relation: obj.relation.clone(),
                });
                return;
            }
            events.push(WorldEvent::ContainerFull {
                object: held.to_string(),
                container: cid,
            });
            let obj = self.objects.get_mut(held).expect("held object exists");
            obj.relation = Relation::OnTable;
            obj.pose = Pose::new(x + DROP_SKEW_M, y + DROP_SKEW_M, 0.0);
            events.push(WorldEvent::Placed {
                object: held.to_string(),
                relation: Relation::OnTable,
            });
            return;
        }

        if let Some(belt) = &self.belt {
            let (offset, lateral) = belt.project(x, y);
            if lateral <= BELT_TOLERANCE_M && offset >= 0.0 && offset <= belt.length() {
                let pose = belt.point_at(offset);
                let obj = self.objects.get_mut(held).expect("held object exists");
                obj.relation = Relation::OnBelt { offset };
                obj.pose = pose;
                events.push(WorldEvent::Placed {
                    object: held.to_string(),
                    relation: obj.relation.clone(),
                });
                return;
            }
        }

        let obj = self.objects.get_mut(held).expect("held object exists");
        obj.relation = Relation::OnTable;
        obj.pose = Pose::new(x, y, 0.0);
        events.push(WorldEvent::Placed {
            object: held.to_string(),
            relation: Relation::OnTable,
        });
    }

    /// Involuntary drop: the payload tumbles to the table beside the arm.
    fn drop_held(&mut self, held: &str, cause: DropCause, events: &mut Vec<WorldEvent>) {
        self.gripper.holding = None;
        let obj = self.objects.get_mut(held).expect("held object exists");
        obj.relation = Relation::OnTable;
        obj.pose = Pose::new(
            self.gripper.arm.x + DROP_SKEW_M,
            self.gripper.arm.y + DROP_SKEW_M,
            0.0,
        );
        events.push(WorldEvent::Drop {
            object: held.to_string(),
            cause,
        });
    }

    fn advance_belt(&mut self, events: &mut Vec<WorldEvent>) {
        let Some(belt) = self.belt.clone() else {
            return;
        };
        if !belt.active {
            return;
        }
        let length = belt.length();
        let ids: Vec<String> = self.objects.keys().cloned().collect();
        for id in ids {
            let obj = self.objects.get_mut(&id).expect("iterating known ids");
            if let Relation::OnBelt { offset } = obj.relation {
                let new_offset = offset + belt.speed;
                if new_offset > length {
                    obj.relation = Relation::OnTable;
                    obj.fallen = true;
                    obj.pose = Pose::new(belt.span.end.x, belt.span.end.y, 0.0);
                    events.push(WorldEvent::Fallen { object: id });
                } else {
                    obj.relation = Relation::OnBelt { offset: new_offset };
                    obj.pose = belt.point_at(new_offset);
                }
            }
        }
    }
}

/// Deterministic perception: every object is reported except the contents of
/// closed drawers; belt objects carry their motion-tracked poses.
pub fn snapshot(world: &WorldState) -> PerceptionSnapshot {
    let observations = world
        .objects
        .values()
        .filter(|o| world.is_visible(o))
        .map(|o| ObjectObservation {
            id: o.id.clone(),
            kind: o.kind.clone(),
            color: o.color.clone(),
            attributes: o.attributes.clone(),
            pose: o.pose,
            relation: o.relation.clone(),
        })
        .collect();
    let containers = world
        .containers
        .values()
        .map(|c| ContainerObservation {
            id: c.id.clone(),
            kind: c.kind,
            open: c.open,
            pose: c.pose,
        })
        .collect();
    PerceptionSnapshot {
        taken_at_tick: world.tick,
        observations,
        containers,
        belt: world.belt.as_ref().map(|b| BeltObservation {
            axis: b.axis,
            speed: b.speed,
            span: b.span.clone(),
            active: b.active,
        }),
        gripper: GripperObservation {
            arm: world.gripper.arm,
            holding: world.gripper.holding.clone(),
        },
    }
}

impl WorldState {
    /// Rebuilds a world from what a snapshot shows. Hidden objects are absent
    /// and container capacities are unknown (treated as unbounded); this is
    /// the substrate for symbolic plan comparison and outcome assessment.
    pub fn from_snapshot(snap: &PerceptionSnapshot) -> WorldState {
        let mut world = WorldState::empty();
        world.tick = snap.taken_at_tick;
        for obs in &snap.observations {
            world.objects.insert(
                obs.id.clone(),
                SceneObject {
                    id: obs.id.clone(),
                    kind: obs.kind.clone(),
                    color: obs.color.clone(),
                    attributes: obs.attributes.clone(),
                    pose: obs.pose,
                    relation: obs.relation.clone(),
                    fallen: false,
                },
            );
        }
        for c in &snap.containers {
            world.containers.insert(
                c.id.clone(),
                ContainerState {
                    id: c.id.clone(),
                    kind: c.kind,
                    open: c.open,
                    capacity: u32::MAX,
                    pose: c.pose,
                },
            );
        }
        world.belt = snap.belt.as_ref().map(|b| ConveyorBelt {
            axis: b.axis,
            speed: b.speed,
            span: b.span.clone(),
            active: b.active,
        });
        world.gripper.arm = snap.gripper.arm;
        world.gripper.holding = snap.gripper.holding.clone();
        world
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil;
    use crate::world::fault::{FaultInjector, FaultTrigger, WorldFaultSpec};

    fn move_above_object(id: &str) -> PrimitiveStep {
        PrimitiveStep::MoveAbove {
            target: StepTarget::Object { id: id.to_string() },
        }
    }

    fn apply_all(world: &mut WorldState, steps: &[PrimitiveStep]) -> Vec<WorldEvent> {
        let mut events = Vec::new();
        for step in steps {
            events.extend(world.apply_step(step, None).expect("step applies"));
        }
        events
    }

    #[test]
    fn task6_snapshot_omits_drawer_contents_until_opened() {
        let mut world = testutil::task(6).world;
        let snap = snapshot(&world);
        assert!(snap.observation("green_block").is_none());
        assert!(snap.containers.iter().any(|c| c.id == "drawer" && !c.open));

        world.containers.get_mut("drawer").unwrap().open = true;
        let snap = snapshot(&world);
        assert!(snap.observation("green_block").is_some());
    }

    #[test]
    fn belt_object_pose_tracks_motion() {
        let mut world = testutil::task(4).world;
        let start = world.objects["banana"].pose;
        for _ in 0..5 {
            world
                .apply_step(
                    &PrimitiveStep::MoveAbove {
                        target: StepTarget::Stay,
                    },
                    None,
                )
                .unwrap();
        }
        let banana = &world.objects["banana"];
        assert_eq!(world.tick, 5);
        assert!(matches!(banana.relation, Relation::OnBelt { offset } if (offset - 0.15).abs() < 1e-9));
        assert!((banana.pose.x - (start.x + 5.0 * 0.01)).abs() < 1e-9);
        assert!((banana.pose.y - start.y).abs() < 1e-9);
    }

    #[test]
    fn blocked_grasp_collides_and_keeps_gripper_empty() {
        let mut world = testutil::task(2).world;
        let events = apply_all(
            &mut world,
            &[
                move_above_object("red_cube"),
                PrimitiveStep::Lower,
                PrimitiveStep::CloseGripper,
            ],
        );
        assert!(events.iter().any(|e| matches!(
            e,
            WorldEvent::Collision { intended, blocker }
                if intended == "red_cube" && blocker == "yellow_cube"
        )));
        assert_eq!(world.gripper.holding, None);
        assert_eq!(world.objects["red_cube"].relation, Relation::OnTable);
    }

    #[test]
    fn open_gripper_while_empty_is_a_noop() {
        let mut world = testutil::task(1).world;
        let before_objects = world.objects.clone();
        let events = world.apply_step(&PrimitiveStep::OpenGripper, None).unwrap();
        assert!(events.is_empty());
        assert_eq!(world.tick, 1);
        assert_eq!(world.objects, before_objects);
    }

    #[test]
    fn seven_step_pick_place_lands_in_container() {
        let mut world = testutil::task(2).world;
        apply_all(
            &mut world,
            &[
                move_above_object("blue_cube"),
                PrimitiveStep::Lower,
                PrimitiveStep::CloseGripper,
                PrimitiveStep::Lift,
                PrimitiveStep::Transfer {
                    target: StepTarget::Container {
                        id: "box".to_string(),
                    },
                },
                PrimitiveStep::Lower,
                PrimitiveStep::OpenGripper,
            ],
        );
        assert_eq!(world.tick, 7);
        assert_eq!(
            world.objects["blue_cube"].relation,
            Relation::Inside {
                target: "box".to_string()
            }
        );
        world.check_invariants().unwrap();
    }

    #[test]
    fn give_sequence_delivers_to_user() {
        let mut world = testutil::task(1).world;
        apply_all(
            &mut world,
            &[
                move_above_object("apple"),
                PrimitiveStep::Lower,
                PrimitiveStep::CloseGripper,
                PrimitiveStep::Lift,
                PrimitiveStep::Transfer {
                    target: StepTarget::User,
                },
                PrimitiveStep::OpenGripper,
            ],
        );
        assert_eq!(world.tick, 6);
        assert_eq!(world.objects["apple"].relation, Relation::Delivered);
    }

    #[test]
    fn grip_slip_drops_payload_at_next_movement() {
        let mut world = testutil::task(2).world;
        let spec = WorldFaultSpec {
            kind: WorldFaultKind::GripSlip,
            trigger: FaultTrigger::AtStep { index: 2 },
            displacement: 0.08,
            seed: 0,
        };
        let mut injector = FaultInjector::new(spec, 11);
        let steps = [
            move_above_object("blue_cube"),
            PrimitiveStep::Lower,
            PrimitiveStep::CloseGripper,
            PrimitiveStep::Lift,
        ];
        let mut events = Vec::new();
        for step in &steps {
            events.extend(world.apply_step(step, Some(&mut injector)).unwrap());
        }
        assert!(events
            .iter()
            .any(|e| matches!(e, WorldEvent::FaultApplied { kind, .. } if kind == "grip_slip")));
        assert!(events.iter().any(|e| matches!(
            e,
            WorldEvent::Drop { object, cause: DropCause::Slip } if object == "blue_cube"
        )));
        assert_eq!(world.gripper.holding, None);
        let blue = &world.objects["blue_cube"];
        assert_eq!(blue.relation, Relation::OnTable);
        assert!((blue.pose.x - (0.1 + DROP_SKEW_M)).abs() < 1e-9);
        world.check_invariants().unwrap();
    }

    #[test]
    fn drawer_opens_via_handle_pull() {
        let mut world = testutil::task(6).world;
        let events = apply_all(
            &mut world,
            &[
                PrimitiveStep::MoveAbove {
                    target: StepTarget::Container {
                        id: "drawer".to_string(),
                    },
                },
                PrimitiveStep::Lower,
                PrimitiveStep::CloseGripper,
                PrimitiveStep::Transfer {
                    target: StepTarget::DrawerPull {
                        id: "drawer".to_string(),
                    },
                },
                PrimitiveStep::OpenGripper,
                PrimitiveStep::Lift,
            ],
        );
        assert!(events
            .iter()
            .any(|e| matches!(e, WorldEvent::HandleGripped { container } if container == "drawer")));
        assert!(events
            .iter()
            .any(|e| matches!(e, WorldEvent::DrawerOpened { container } if container == "drawer")));
        assert!(world.containers["drawer"].open);
        assert_eq!(world.tick, 6);
    }

    #[test]
    fn hidden_object_is_unreachable() {
        let mut world = testutil::task(6).world;
        let err = world
            .apply_step(&move_above_object("green_block"), None)
            .unwrap_err();
        assert!(matches!(err, StepError::UnreachableTarget { .. }));
    }

    #[test]
    fn close_gripper_twice_is_busy() {
        let mut world = testutil::task(1).world;
        apply_all(
            &mut world,
            &[
                move_above_object("apple"),
                PrimitiveStep::Lower,
                PrimitiveStep::CloseGripper,
            ],
        );
        assert_eq!(world.gripper.holding.as_deref(), Some("apple"));
        let err = world
            .apply_step(&PrimitiveStep::CloseGripper, None)
            .unwrap_err();
        assert!(matches!(err, StepError::GripperBusy { .. }));
    }

    #[test]
    fn identical_step_sequences_yield_identical_worlds() {
        let scenario = testutil::task(4);
        let steps = [
            move_above_object("apple"),
            PrimitiveStep::Lower,
            PrimitiveStep::CloseGripper,
            PrimitiveStep::Lift,
            PrimitiveStep::Transfer {
                target: StepTarget::BeltSlot { offset: 0.8 },
            },
            PrimitiveStep::Lower,
            PrimitiveStep::OpenGripper,
        ];
        let run = |mut world: WorldState| {
            let mut events = Vec::new();
            for step in &steps {
                events.extend(world.apply_step(step, None).unwrap());
            }
            (world, events)
        };
        let (w1, e1) = run(scenario.world.clone());
        let (w2, e2) = run(scenario.world);
        assert_eq!(e1, e2);
        assert_eq!(
            serde_json::to_string(&w1).unwrap(),
            serde_json::to_string(&w2).unwrap()
        );
    }

    #[test]
    fn grasping_from_moving_belt_tracks_the_target() {
        let mut world = testutil::task(4).world;
        apply_all(
            &mut world,
            &[
                move_above_object("apple"),
                PrimitiveStep::Lower,
                PrimitiveStep::CloseGripper,
            ],
        );
        assert_eq!(world.gripper.holding.as_deref(), Some("apple"));
    }
}
