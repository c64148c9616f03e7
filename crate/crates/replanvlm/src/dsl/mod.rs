//! The skill-level language plans are written in: its grammar, expansion into
//! arm/gripper primitives, interpretation against a world, and the
//! effect-equivalence check used by pre-execution verification.

mod ast;
mod equiv;
mod expand;
mod interpret;
mod parser;

pub use ast::{ActionProgram, Arg, Skill, SkillCall};
pub use equiv::{effect_equivalent, EquivError, Equivalence};
pub use expand::{count_steps, expand, Binding, EffectTrace, ExpandError, TraceStep};
pub use interpret::{interpret, InterpretOutcome};
pub use parser::{parse, ParseError};
