//! Trace interpretation against a live world. Recoverable trouble becomes
//! events for the external mechanism; only hard step errors halt execution.

use crate::world::{FaultInjector, StepError, WorldEvent, WorldState};

use super::expand::EffectTrace;

#[derive(Debug, Clone, PartialEq)]
pub struct InterpretOutcome {
    pub world: WorldState,
    pub events: Vec<WorldEvent>,
    pub executed_steps: u64,
    pub halted: Option<StepError>,
}

/// Applies the trace step by step. The returned world reflects everything up
/// to the halt point (if any); `halted` carries the propagated step error.
pub fn interpret(
    trace: &EffectTrace,
    mut world: WorldState,
    mut injector: Option<&mut FaultInjector>,
) -> InterpretOutcome {
    let mut events = Vec::new();
    let mut executed_steps = 0;
    let mut halted = None;
    for ts in &trace.steps {
        match world.apply_step(&ts.step, injector.as_deref_mut()) {
            Ok(evts) => {
                events.extend(evts);
                executed_steps += 1;
            }
            Err(e) => {
                halted = Some(e);
                break;
            }
        }
    }
    InterpretOutcome {
        world,
        events,
        executed_steps,
        halted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::expand::expand;
    use crate::dsl::parser::parse;
    use crate::testutil;
    use crate::world::{snapshot, Relation, WorldEvent};

    #[test]
    fn canonical_task1_trace_delivers_the_apple() {
        let scenario = testutil::task(1);
        let program = parse("pick('apple'); give()").unwrap();
        let trace = expand(&program, &snapshot(&scenario.world)).unwrap();
        let outcome = interpret(&trace, scenario.world, None);
        assert!(outcome.halted.is_none());
        assert_eq!(outcome.executed_steps, 6);
        assert_eq!(outcome.world.tick, 6);
        assert_eq!(outcome.world.objects["apple"].relation, Relation::Delivered);
    }

    #[test]
    fn empty_trace_only_time_passes() {
        let scenario = testutil::task(1);
        let program = parse("wait(0)").unwrap();
        let trace = expand(&program, &snapshot(&scenario.world)).unwrap();
        let before = scenario.world.clone();
        let outcome = interpret(&trace, scenario.world, None);
        assert_eq!(outcome.executed_steps, 0);
        assert_eq!(outcome.world, before);
    }

    #[test]
    fn skipping_the_unstack_collides_and_leaves_red_unmoved() {
        let scenario = testutil::task(2);
        let program = parse("pick('red cube'); place('box')").unwrap();
        let trace = expand(&program, &snapshot(&scenario.world)).unwrap();
        let outcome = interpret(&trace, scenario.world, None);
        assert!(outcome.halted.is_none());
        assert!(outcome
            .events
            .iter()
            .any(|e| matches!(e, WorldEvent::Collision { intended, .. } if intended == "red_cube")));
        assert_eq!(outcome.world.objects["red_cube"].relation, Relation::OnTable);
    }

    #[test]
    fn full_task6_program_interprets_through_the_drawer() {
        let scenario = testutil::task(6);
        let program =
            parse("open_drawer('drawer'); pick('green block'); place('box')").unwrap();
        let trace = expand(&program, &snapshot(&scenario.world)).unwrap();
        let outcome = interpret(&trace, scenario.world, None);
        assert!(outcome.halted.is_none());
        assert_eq!(outcome.executed_steps, 13);
        assert_eq!(
            outcome.world.objects["green_block"].relation,
            Relation::Inside {
                target: "box".to_string()
            }
        );
    }
}
