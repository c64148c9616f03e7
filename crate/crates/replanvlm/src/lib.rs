//! Closed-loop tabletop task planning.
//!
//! A Decision/Inner/Extra bot pipeline plans manipulation tasks, reviews its
//! own plans before execution, executes them against a deterministic simulated
//! world, verifies outcomes from before/after scene snapshots, and replans on
//! failure. Bot "brains" are pluggable backends (rule-based oracle, scripted
//! replay, remote chat-completion API) so every correction mechanism is
//! testable without a live model.

pub mod bench;
pub mod dsl;
pub mod engine;
pub mod gateway;
pub mod world;

#[cfg(test)]
pub(crate) mod testutil {
    use crate::world::{parse_scenario, Scenario};

    /// Loads one of the shipped task scenarios for unit tests.
    pub fn task(n: u32) -> Scenario {
        let text = match n {
            1 => include_str!("../scenarios/task1.json"),
            2 => include_str!("../scenarios/task2.json"),
            3 => include_str!("../scenarios/task3.json"),
            4 => include_str!("../scenarios/task4.json"),
            5 => include_str!("../scenarios/task5.json"),
            6 => include_str!("../scenarios/task6.json"),
            7 => include_str!("../scenarios/task7.json"),
            other => panic!("no task {other}"),
        };
        parse_scenario(text).expect("shipped scenario is valid")
    }
}
