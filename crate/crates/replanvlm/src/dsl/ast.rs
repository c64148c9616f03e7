//! Program representation: an ordered list of skill calls.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Skill {
    Pick,
    Place,
    Give,
    OpenDrawer,
    Wait,
}

impl Skill {
    pub fn name(&self) -> &'static str {
        match self {
            Skill::Pick => "pick",
            Skill::Place => "place",
            Skill::Give => "give",
            Skill::OpenDrawer => "open_drawer",
            Skill::Wait => "wait",
        }
    }

    pub fn from_name(name: &str) -> Option<Skill> {
        match name {
            "pick" => Some(Skill::Pick),
            "place" => Some(Skill::Place),
            "give" => Some(Skill::Give),
            "open_drawer" => Some(Skill::OpenDrawer),
            "wait" => Some(Skill::Wait),
            _ => None,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Skill::Pick | Skill::Place | Skill::OpenDrawer | Skill::Wait => 1,
            Skill::Give => 0,
        }
    }

    /// Verbs a plan line may use to refer to this skill.
    pub fn verbs(&self) -> &'static [&'static str] {
        match self {
            Skill::Pick => &["pick", "grab", "grasp", "take"],
            Skill::Place => &["place", "put", "set", "stack", "move"],
            Skill::Give => &["give", "hand", "deliver"],
            Skill::OpenDrawer => &["open"],
            Skill::Wait => &["wait", "pause", "hold"],
        }
    }
}

impl std::fmt::Display for Skill {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Arg {
    Text(String),
    Number(i64),
}

impl std::fmt::Display for Arg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Arg::Text(s) => write!(f, "'{}'", s.replace('\\', "\\\\").replace('\'', "\\'")),
            Arg::Number(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkillCall {
    pub skill: Skill,
    pub args: Vec<Arg>,
}

impl SkillCall {
    pub fn text_arg(&self) -> Option<&str> {
        self.args.iter().find_map(|a| match a {
            Arg::Text(s) => Some(s.as_str()),
            Arg::Number(_) => None,
        })
    }

    pub fn number_arg(&self) -> Option<i64> {
        self.args.iter().find_map(|a| match a {
            Arg::Number(n) => Some(*n),
            Arg::Text(_) => None,
        })
    }
}

impl std::fmt::Display for SkillCall {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}(", self.skill)?;
        for (i, arg) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{arg}")?;
        }
        write!(f, ")")
    }
}

/// A parsed program plus the raw text it came from. Equality compares the
/// calls only, so printing and reparsing round-trips.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionProgram {
    pub calls: Vec<SkillCall>,
    pub source_text: String,
}

impl PartialEq for ActionProgram {
    fn eq(&self, other: &Self) -> bool {
        self.calls == other.calls
    }
}

impl ActionProgram {
    /// Canonical form: one call per line.
    pub fn print(&self) -> String {
        self.calls
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join("\n")
    }
}
