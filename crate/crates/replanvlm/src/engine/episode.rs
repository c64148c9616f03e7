//! One full episode: snapshot, decide, review (capped cycles), execute,
//! assess, replan or terminate.

use crate::dsl::{expand, interpret, ActionProgram};
use crate::gateway::{
    build_decision_prompt, build_extra_prompt, build_inner_prompt, BotResponse, ExemplarSet,
    Gateway, GatewayError, GatewaySession,
};
use crate::world::{
    eval_goal, snapshot, FaultInjector, GoalPredicate, PerceptionSnapshot, WorldEvent,
    WorldFaultSpec, WorldState,
};

use super::checks::{format_check, matching_check};
use super::config::{CheckOutcome, EngineConfig, Feedback, FeedbackSource};
use super::record::{EpisodeOutcome, EpisodeRecord, RoundRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeInput {
    pub task_id: u32,
    pub instruction: String,
    pub goal: GoalPredicate,
}

/// Internal review. Format and matching are deterministic and local; the
/// verification step asks the gateway's reviewer, which independently
/// regenerates and compares functionality.
pub fn inner_check(
    instruction: &str,
    plan: &[String],
    code: &str,
    scene: &PerceptionSnapshot,
    session: &mut GatewaySession<'_>,
) -> Result<CheckOutcome, GatewayError> {
    let program = match format_check(plan, code) {
        Ok(p) => p,
        Err(reason) => return Ok(CheckOutcome::failed_format(reason)),
    };
    if let Err(reason) = matching_check(plan, &program) {
        return Ok(CheckOutcome::failed_matching(reason));
    }
    let bundle = build_inner_prompt(instruction, scene, plan, code);
    match session.request(&bundle) {
        Ok(BotResponse::Review { verdict: true, .. }) => Ok(CheckOutcome::passed()),
        Ok(BotResponse::Review {
            verdict: false,
            reason,
        }) => Ok(CheckOutcome::failed_verification(if reason.is_empty() {
            "the reviewer rejected the plan".to_string()
        } else {
            reason
        })),
        Ok(BotResponse::Decision { .. }) => Ok(CheckOutcome::failed_verification(
            "reviewer returned a decision-shaped response".to_string(),
        )),
        Err(e) if e.is_parse_failure() => Ok(CheckOutcome::failed_verification(format!(
            "reviewer response did not parse: {e}"
        ))),
        Err(e) => Err(e),
    }
}

/// External assessment over the round's before/after snapshots. A failed
/// verdict comes back as advisory feedback for the next decision.
pub fn extra_assess(
    instruction: &str,
    before: &PerceptionSnapshot,
    after: &PerceptionSnapshot,
    plan: &[String],
    code: &str,
    round: u32,
    session: &mut GatewaySession<'_>,
) -> Result<(bool, Option<Feedback>), GatewayError> {
    let bundle = build_extra_prompt(instruction, before, after, plan, code);
    match session.request(&bundle) {
        Ok(BotResponse::Review { verdict: true, .. }) => Ok((true, None)),
        Ok(BotResponse::Review {
            verdict: false,
            reason,
        }) => {
            let reason = if reason.is_empty() {
                "the task does not appear complete".to_string()
            } else {
                reason
            };
            Ok((
                false,
                Some(Feedback::new(FeedbackSource::Extra, round, reason)),
            ))
        }
        Ok(BotResponse::Decision { .. }) => Ok((
            false,
            Some(Feedback::new(
                FeedbackSource::Extra,
                round,
                "assessor returned a decision-shaped response",
            )),
        )),
        Err(e) if e.is_parse_failure() => Ok((
            false,
            Some(Feedback::new(
                FeedbackSource::Extra,
                round,
                format!("assessor response did not parse: {e}"),
            )),
        )),
        Err(e) => Err(e),
    }
}

struct Runner<'a> {
    input: &'a EpisodeInput,
    config: &'a EngineConfig,
    world: WorldState,
    feedback_history: Vec<Feedback>,
    rounds: Vec<RoundRecord>,
    total_steps: u64,
    world_fault_fired: bool,
    detected: bool,
    seed: u64,
}

impl<'a> Runner<'a> {
    fn feedback_messages(&self) -> Vec<String> {
        self.feedback_history
            .iter()
            .map(Feedback::as_message)
            .collect()
    }

    fn finish(
        self,
        outcome: EpisodeOutcome,
        session: GatewaySession<'_>,
    ) -> EpisodeRecord {
        let goal_met = eval_goal(&self.input.goal, &self.world)
            .map(|r| r.met)
            .unwrap_or(false);
        let injected = self.world_fault_fired || !session.fired_faults().is_empty();
        let detected = injected && self.detected;
        let corrected =
            detected && matches!(outcome, EpisodeOutcome::Success) && goal_met;
        EpisodeRecord {
            task_id: self.input.task_id,
            seed: self.seed,
            outcome,
            goal_met,
            total_steps: self.total_steps,
            rounds: self.rounds,
            transcript: session.into_transcript(),
            failure_injected: injected,
            failure_detected: detected,
            failure_corrected: corrected,
        }
    }
}

/// Runs the full loop for one task on one world. Backend failures abort with
/// a distinguished outcome; everything else terminates within the caps.
pub fn run_episode(
    input: &EpisodeInput,
    world: WorldState,
    gateway: &Gateway,
    config: &EngineConfig,
    world_fault: Option<&WorldFaultSpec>,
    episode_seed: u64,
) -> EpisodeRecord {
    let session_seed = config
        .seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(episode_seed);
    let mut session = gateway.open_session(session_seed, Some(input.goal.clone()));
    let mut injector = world_fault.map(|spec| FaultInjector::new(spec.clone(), episode_seed));
    let exemplars = ExemplarSet::builtin();

    let mut runner = Runner {
        input,
        config,
        world,
        feedback_history: Vec::new(),
        rounds: Vec::new(),
        total_steps: 0,
        world_fault_fired: false,
        detected: false,
        seed: episode_seed,
    };

    for round in 0..config.outer_round_cap {
        let scene = snapshot(&runner.world);
        let mut checks: Vec<CheckOutcome> = Vec::new();
        let mut round_feedback: Vec<Feedback> = Vec::new();
        let mut accepted: Option<(Vec<String>, String, ActionProgram)> = None;
        let mut cycles = 0u32;

        // Decide and review, up to the cycle cap.
        while accepted.is_none() {
            let bundle = build_decision_prompt(
                &runner.input.instruction,
                &scene,
                &runner.feedback_messages(),
                exemplars,
            );
            let outcome = match session.request(&bundle) {
                Ok(BotResponse::Decision { plan, code }) => {
                    if config.inner_enabled {
                        match inner_check(&runner.input.instruction, &plan, &code, &scene, &mut session)
                        {
                            Ok(outcome) => {
                                if outcome.pass() {
                                    let program =
                                        format_check(&plan, &code).expect("format check passed");
                                    accepted = Some((plan, code, program));
                                }
                                outcome
                            }
                            Err(e) => {
                                runner.rounds.push(partial_round(round, scene, checks, round_feedback));
                                return runner.finish(backend_failure(e), session);
                            }
                        }
                    } else {
                        // Ablation disables the checks, not parseability: an
                        // unexecutable program still costs a cycle.
                        match format_check(&plan, &code) {
                            Ok(program) => {
                                accepted = Some((plan, code, program));
                                CheckOutcome::passed()
                            }
                            Err(reason) => CheckOutcome::failed_format(reason),
                        }
                    }
                }
                Ok(BotResponse::Review { .. }) => {
                    CheckOutcome::failed_format("planner returned a review-shaped response")
                }
                Err(e) if e.is_parse_failure() => {
                    CheckOutcome::failed_format(format!("response did not parse: {e}"))
                }
                Err(e) => {
                    runner.rounds.push(partial_round(round, scene, checks, round_feedback));
                    return runner.finish(backend_failure(e), session);
                }
            };
            let passed = outcome.pass();
            checks.push(outcome.clone());
            if !passed {
                let fb = Feedback::new(FeedbackSource::Inner, round, outcome.reason.clone());
                round_feedback.push(fb.clone());
                runner.feedback_history.push(fb);
                cycles += 1;
                if cycles >= config.inner_cycle_cap {
                    runner.rounds.push(partial_round(round, scene, checks, round_feedback));
                    return runner.finish(EpisodeOutcome::InnerDeadlock, session);
                }
            }
        }

        let (plan, code, program) = accepted.expect("loop exits with a decision");

        // Execute against the live world.
        let (trace, events, executed_steps, exec_error) = match expand(&program, &scene) {
            Ok(trace) => {
                let outcome = interpret(&trace, runner.world, injector.as_mut());
                runner.world = outcome.world;
                (
                    Some(trace),
                    outcome.events,
                    outcome.executed_steps,
                    outcome.halted.map(|e| e.to_string()),
                )
            }
            Err(e) => (None, Vec::new(), 0, Some(e.to_string())),
        };
        runner.total_steps += executed_steps;
        if events
            .iter()
            .any(|e| matches!(e, WorldEvent::FaultApplied { .. }))
        {
            runner.world_fault_fired = true;
        }
        let after = snapshot(&runner.world);
        let fired_so_far = runner.world_fault_fired || !session.fired_faults().is_empty();

        // Assess.
        let (verdict, feedback) = if config.extra_enabled {
            match extra_assess(
                &runner.input.instruction,
                &scene,
                &after,
                &plan,
                &code,
                round,
                &mut session,
            ) {
                Ok(v) => v,
                Err(e) => {
                    runner.rounds.push(RoundRecord {
                        round,
                        snapshot_before: scene,
                        plan,
                        code,
                        checks,
                        trace,
                        events,
                        executed_steps,
                        exec_error,
                        snapshot_after: Some(after),
                        extra_verdict: None,
                        feedback: round_feedback,
                    });
                    return runner.finish(backend_failure(e), session);
                }
            }
        } else {
            // Execution errors surface in every variant; they are interpreter
            // errors, not assessments.
            match &exec_error {
                None => (true, None),
                Some(e) => (
                    false,
                    Some(Feedback::new(
                        FeedbackSource::Extra,
                        round,
                        format!("execution failed: {e}"),
                    )),
                ),
            }
        };

        if !verdict && fired_so_far {
            runner.detected = true;
        }
        if let Some(fb) = &feedback {
            round_feedback.push(fb.clone());
            runner.feedback_history.push(fb.clone());
        }
        runner.rounds.push(RoundRecord {
            round,
            snapshot_before: scene,
            plan,
            code,
            checks,
            trace,
            events,
            executed_steps,
            exec_error,
            snapshot_after: Some(after),
            extra_verdict: if config.extra_enabled {
                Some(verdict)
            } else {
                None
            },
            feedback: round_feedback,
        });

        if verdict {
            return runner.finish(EpisodeOutcome::Success, session);
        }
    }
    runner.finish(EpisodeOutcome::OuterExhausted, session)
}

fn partial_round(
    round: u32,
    scene: PerceptionSnapshot,
    checks: Vec<CheckOutcome>,
    feedback: Vec<Feedback>,
) -> RoundRecord {
    RoundRecord {
        round,
        snapshot_before: scene,
        plan: Vec::new(),
        code: String::new(),
        checks,
        trace: None,
        events: Vec::new(),
        executed_steps: 0,
        exec_error: None,
        snapshot_after: None,
        extra_verdict: None,
        feedback,
    }
}

fn backend_failure(e: GatewayError) -> EpisodeOutcome {
    EpisodeOutcome::BackendFailure {
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{
        BackendConfig, BackendKind, PromptBundle, RequestCtx, VlmBackend, VlmFaultProfile,
    };
    use crate::testutil;

    fn input(task: u32) -> (EpisodeInput, WorldState) {
        let scenario = testutil::task(task);
        (
            EpisodeInput {
                task_id: scenario.metadata.task_id,
                instruction: scenario.metadata.instruction.clone(),
                goal: scenario.goal,
            },
            scenario.world,
        )
    }

    fn oracle_config(profile: VlmFaultProfile) -> EngineConfig {
        EngineConfig {
            backend: BackendConfig::Oracle {
                fault_profile: profile,
                seed: 0,
            },
            ..EngineConfig::oracle_default()
        }
    }

    #[test]
    fn zero_fault_task2_succeeds_in_one_round_with_21_steps() {
        let (inp, world) = input(2);
        let config = oracle_config(VlmFaultProfile::default());
        let gateway = Gateway::new(&config.backend).unwrap();
        let record = run_episode(&inp, world, &gateway, &config, None, 7);
        assert_eq!(record.outcome, EpisodeOutcome::Success);
        assert!(record.goal_met);
        assert_eq!(record.rounds.len(), 1);
        assert_eq!(record.total_steps, 21);
        assert!(!record.failure_injected);
        assert_eq!(record.rounds[0].extra_verdict, Some(true));
    }

    #[test]
    fn all_seven_tasks_succeed_zero_fault() {
        let config = oracle_config(VlmFaultProfile::default());
        let gateway = Gateway::new(&config.backend).unwrap();
        for task in 1..=7 {
            let (inp, world) = input(task);
            let record = run_episode(&inp, world, &gateway, &config, None, 42);
            assert_eq!(
                record.outcome,
                EpisodeOutcome::Success,
                "task {task}: {:?}",
                record.rounds.last().map(|r| &r.feedback)
            );
            assert!(record.goal_met, "task {task}");
        }
    }

    #[test]
    fn omitted_blocker_is_detected_and_corrected_next_round() {
        // Extra-only configuration: the faulty code executes, the assessor
        // flags it, and the next round replans. Sub-unit probability means
        // the first omission is fed back and stops recurring, so any episode
        // where it fires must recover by round 1.
        let profile = VlmFaultProfile {
            omit_blocker_step: 0.95,
            seed: 1,
            ..Default::default()
        };
        let config = oracle_config(profile).with_mechanisms(false, true);
        let gateway = Gateway::new(&config.backend).unwrap();
        let mut fired_any = false;
        for seed in 0..10 {
            let (inp, world) = input(2);
            let record = run_episode(&inp, world, &gateway, &config, None, seed);
            if record.failure_injected {
                fired_any = true;
                assert_eq!(record.outcome, EpisodeOutcome::Success, "seed {seed}");
                assert!(record.failure_detected, "seed {seed}");
                assert!(record.failure_corrected, "seed {seed}");
                assert_eq!(record.rounds.len(), 2, "seed {seed}");
                assert_eq!(record.rounds[0].extra_verdict, Some(false));
                let reason = &record.rounds[0].feedback.last().unwrap().reason;
                assert!(reason.contains("red cube"), "seed {seed}: {reason}");
            } else {
                assert_eq!(record.outcome, EpisodeOutcome::Success);
            }
        }
        assert!(fired_any, "expected the fault to fire at least once");
    }

    #[test]
    fn persistent_malformed_code_deadlocks_after_exactly_five_cycles() {
        let profile = VlmFaultProfile {
            malformed_code: 1.0,
            seed: 2,
            ..Default::default()
        };
        let config = oracle_config(profile);
        let gateway = Gateway::new(&config.backend).unwrap();
        let (inp, world) = input(2);
        let record = run_episode(&inp, world, &gateway, &config, None, 3);
        assert_eq!(record.outcome, EpisodeOutcome::InnerDeadlock);
        assert_eq!(record.rounds.len(), 1);
        assert_eq!(record.rounds[0].checks.len(), 5);
        assert!(record.rounds[0].checks.iter().all(|c| !c.format_ok));
        assert_eq!(record.total_steps, 0, "execution must have been blocked");
        assert!(!record.goal_met);
    }

    #[test]
    fn feedback_history_grows_every_cycle_and_round() {
        let profile = VlmFaultProfile {
            malformed_code: 1.0,
            seed: 5,
            ..Default::default()
        };
        let config = oracle_config(profile);
        let gateway = Gateway::new(&config.backend).unwrap();
        let (inp, world) = input(1);
        let record = run_episode(&inp, world, &gateway, &config, None, 9);
        let fb = &record.rounds[0].feedback;
        assert_eq!(fb.len(), 5);
        assert!(fb.iter().all(|f| f.advisory));
        assert!(fb.iter().all(|f| f.source == FeedbackSource::Inner));
    }

    #[test]
    fn disabled_inner_still_blocks_unparseable_code() {
        let profile = VlmFaultProfile {
            malformed_code: 1.0,
            seed: 2,
            ..Default::default()
        };
        let config = oracle_config(profile).with_mechanisms(false, false);
        let gateway = Gateway::new(&config.backend).unwrap();
        let (inp, world) = input(2);
        let record = run_episode(&inp, world, &gateway, &config, None, 3);
        assert_eq!(record.outcome, EpisodeOutcome::InnerDeadlock);
        assert_eq!(record.total_steps, 0);
    }

    #[test]
    fn disabled_extra_believes_success_while_goal_unmet() {
        let profile = VlmFaultProfile {
            omit_blocker_step: 1.0,
            seed: 4,
            ..Default::default()
        };
        let config = oracle_config(profile).with_mechanisms(false, false);
        let gateway = Gateway::new(&config.backend).unwrap();
        let (inp, world) = input(2);
        let record = run_episode(&inp, world, &gateway, &config, None, 3);
        assert_eq!(record.outcome, EpisodeOutcome::Success);
        assert!(!record.goal_met);
        assert_eq!(record.rounds.len(), 1);
        assert_eq!(record.rounds[0].extra_verdict, None);
    }

    struct FailingBackend;
    impl VlmBackend for FailingBackend {
        fn complete(
            &self,
            _bundle: &PromptBundle,
            _ctx: &mut RequestCtx<'_>,
        ) -> Result<String, GatewayError> {
            Err(GatewayError::ReplayMiss {
                digest: "deadbeef".to_string(),
            })
        }
        fn kind(&self) -> BackendKind {
            BackendKind::Scripted
        }
    }

    #[test]
    fn backend_errors_abort_with_a_distinguished_outcome() {
        let (inp, world) = input(1);
        let config = EngineConfig::oracle_default();
        let gateway = Gateway::with_backend(Box::new(FailingBackend));
        let record = run_episode(&inp, world, &gateway, &config, None, 0);
        assert!(record.is_backend_failure());
        assert!(!record.goal_met);
    }

    #[test]
    fn wrong_object_is_caught_by_verification_before_execution() {
        let profile = VlmFaultProfile {
            wrong_object: 0.95,
            seed: 8,
            ..Default::default()
        };
        let config = oracle_config(profile);
        let gateway = Gateway::new(&config.backend).unwrap();
        let mut caught_any = false;
        for seed in 0..10 {
            let (inp, world) = input(1);
            let record = run_episode(&inp, world, &gateway, &config, None, seed);
            assert_eq!(record.outcome, EpisodeOutcome::Success, "seed {seed}");
            assert!(record.goal_met);
            if record.failure_injected {
                caught_any = true;
                // Pre-execution catch: still one round, verification flagged it.
                assert_eq!(record.rounds.len(), 1, "seed {seed}");
                let checks = &record.rounds[0].checks;
                assert!(checks.iter().any(|c| !c.verification_ok), "seed {seed}");
            }
        }
        assert!(caught_any);
    }
}
