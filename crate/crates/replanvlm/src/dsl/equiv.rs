//! Functional equivalence of two programs: symbolic execution from the same
//! snapshot must end with identical object relations. Step counts and
//! trajectories may differ.

use thiserror::Error;

use crate::world::PerceptionSnapshot;

use super::ast::ActionProgram;
use super::expand::{expand, ExpandError};

#[derive(Debug, Clone, PartialEq)]
pub struct Equivalence {
    pub equal: bool,
    pub divergences: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquivError {
    #[error("left program does not expand: {0}")]
    Left(ExpandError),
    #[error("right program does not expand: {0}")]
    Right(ExpandError),
    #[error("neither program expands: left: {left}; right: {right}")]
    Both { left: ExpandError, right: ExpandError },
}

pub fn effect_equivalent(
    a: &ActionProgram,
    b: &ActionProgram,
    snapshot: &PerceptionSnapshot,
) -> Result<Equivalence, EquivError> {
    let ta = expand(a, snapshot);
    let tb = expand(b, snapshot);
    let (ta, tb) = match (ta, tb) {
        (Ok(ta), Ok(tb)) => (ta, tb),
        (Err(left), Err(right)) => return Err(EquivError::Both { left, right }),
        (Err(left), Ok(_)) => return Err(EquivError::Left(left)),
        (Ok(_), Err(right)) => return Err(EquivError::Right(right)),
    };

    let mut divergences = Vec::new();
    let keys: std::collections::BTreeSet<&String> = ta
        .terminal_relations
        .keys()
        .chain(tb.terminal_relations.keys())
        .collect();
    for key in keys {
        match (ta.terminal_relations.get(key), tb.terminal_relations.get(key)) {
            (Some(ra), Some(rb)) => {
                if !ra.approx_eq(rb) {
                    divergences.push(format!("{key}: left {ra}, right {rb}"));
                }
            }
            (Some(ra), None) => divergences.push(format!("{key}: left {ra}, right absent")),
            (None, Some(rb)) => divergences.push(format!("{key}: left absent, right {rb}")),
            (None, None) => unreachable!("key came from one of the maps"),
        }
    }
    if ta.symbolic_halt != tb.symbolic_halt {
        divergences.push(format!(
            "halt: left {:?}, right {:?}",
            ta.symbolic_halt, tb.symbolic_halt
        ));
    }
    Ok(Equivalence {
        equal: divergences.is_empty(),
        divergences,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parser::parse;
    use crate::testutil;
    use crate::world::snapshot;

    #[test]
    fn a_program_is_equivalent_to_itself() {
        let snap = snapshot(&testutil::task(2).world);
        let p = parse("pick('blue cube'); place('table')").unwrap();
        let eq = effect_equivalent(&p, &p, &snap).unwrap();
        assert!(eq.equal, "{:?}", eq.divergences);
    }

    #[test]
    fn selector_wording_does_not_matter_when_bindings_agree() {
        let snap = snapshot(&testutil::task(2).world);
        let a = parse("pick('red cube'); place('box')").unwrap();
        let b = parse("pick('red'); place('box')").unwrap();
        let eq = effect_equivalent(&a, &b, &snap).unwrap();
        assert!(eq.equal, "{:?}", eq.divergences);
    }

    #[test]
    fn missing_unstack_prefix_diverges_on_the_red_cube() {
        let snap = snapshot(&testutil::task(2).world);
        let with_prefix = parse(
            "pick('blue cube'); place('table'); pick('yellow cube'); place('table'); \
             pick('red cube'); place('box')",
        )
        .unwrap();
        let without_prefix = parse("pick('red cube'); place('box')").unwrap();
        let eq = effect_equivalent(&with_prefix, &without_prefix, &snap).unwrap();
        assert!(!eq.equal);
        assert!(
            eq.divergences.iter().any(|d| d.contains("red_cube")),
            "{:?}",
            eq.divergences
        );
    }

    #[test]
    fn equivalence_is_symmetric() {
        let snap = snapshot(&testutil::task(2).world);
        let a = parse(
            "pick('blue cube'); place('table'); pick('yellow cube'); place('table'); \
             pick('red cube'); place('box')",
        )
        .unwrap();
        let b = parse("pick('red cube'); place('box')").unwrap();
        let ab = effect_equivalent(&a, &b, &snap).unwrap();
        let ba = effect_equivalent(&b, &a, &snap).unwrap();
        assert_eq!(ab.equal, ba.equal);
    }

    #[test]
    fn expansion_failures_are_reported_per_side() {
        let snap = snapshot(&testutil::task(6).world);
        let good = parse("open_drawer('drawer'); pick('green block'); place('box')").unwrap();
        let bad = parse("pick('green block'); place('box')").unwrap();
        assert!(matches!(
            effect_equivalent(&bad, &good, &snap),
            Err(EquivError::Left(_))
        ));
        assert!(matches!(
            effect_equivalent(&good, &bad, &snap),
            Err(EquivError::Right(_))
        ));
    }
}
