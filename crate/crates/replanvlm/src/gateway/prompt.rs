//! Prompt assembly. A Decision bundle carries five parts: role-playing,
//! error messages, the code repository, a reasoning directive, and worked
//! examples. Inner and Extra bundles carry role-playing, scene snapshot(s),
//! and the decision under review. Rendering is deterministic so bundles can
//! be addressed by digest.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::world::PerceptionSnapshot;

pub const CODE_REPOSITORY: &str = "\
pick(selector)        # grasp the object named by the selector, e.g. pick('red cube')
place(selector)       # put the held object into/onto the target: a container,
                      # an object to stack on, 'table', or 'belt'
give()                # hand the held object to the user (fixed endpoint)
open_drawer(selector) # pull the named drawer open
wait(n)               # hold position for n steps while the scene moves";

pub const COT_DIRECTIVE: &str = "Think step by step: inspect the scene, list obstacles \
(objects stacked on your target, closed drawers), clear them first, then achieve the task. \
Answer with a numbered PLAN and a fenced CODE block using only repository calls.";

const DECISION_ROLE: &str = "You are the decision module of a tabletop manipulation robot. \
You plan tasks and write skill code for the arm.";
const INNER_ROLE: &str = "You are the reviewer of a tabletop manipulation robot. You check \
whether a task plan and its code are well-formed, aligned, and correct for the scene before \
the robot moves. Answer VERDICT: yes|no with a REASON.";
const EXTRA_ROLE: &str = "You are the outcome assessor of a tabletop manipulation robot. \
Compare the scene before and after execution against the task requirements and decide whether \
the task is complete. Answer VERDICT: yes|no with a REASON.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BotKind {
    Decision,
    Inner,
    Extra,
}

impl std::fmt::Display for BotKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BotKind::Decision => write!(f, "decision"),
            BotKind::Inner => write!(f, "inner"),
            BotKind::Extra => write!(f, "extra"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exemplar {
    pub input: String,
    pub plan: Vec<String>,
    pub code: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExemplarSet {
    pub exemplars: Vec<Exemplar>,
}

impl ExemplarSet {
    /// The exemplars shipped with the crate.
    pub fn builtin() -> &'static ExemplarSet {
        static BUILTIN: std::sync::OnceLock<ExemplarSet> = std::sync::OnceLock::new();
        BUILTIN.get_or_init(|| {
            let exemplars: Vec<Exemplar> =
                serde_json::from_str(include_str!("../../data/exemplars.json"))
                    .expect("shipped exemplars parse");
            ExemplarSet { exemplars }
        })
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> std::io::Result<ExemplarSet> {
        let text = std::fs::read_to_string(path)?;
        let exemplars: Vec<Exemplar> = serde_json::from_str(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        Ok(ExemplarSet { exemplars })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionInfo {
    pub plan: Vec<String>,
    pub code: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub bot: BotKind,
    pub role_playing: String,
    pub error_messages: Vec<String>,
    pub code_repository: Option<String>,
    pub cot: Option<String>,
    pub examples: Vec<Exemplar>,
    /// Serialized snapshots: one for Decision/Inner, before+after for Extra.
    pub scenes: Vec<String>,
    pub decision_info: Option<DecisionInfo>,
    pub instruction: String,
    /// Optional caller-supplied images forwarded to remote backends.
    pub attachments: Vec<(String, String)>,
}

impl PromptBundle {
    /// Structural invariants per bot kind.
    pub fn validate(&self) -> Result<(), String> {
        match self.bot {
            BotKind::Decision => {
                if self.code_repository.is_none() || self.cot.is_none() || self.examples.is_empty()
                {
                    return Err("decision bundle needs all five parts".to_string());
                }
                if self.scenes.len() != 1 || self.decision_info.is_some() {
                    return Err("decision bundle carries one scene and no review info".to_string());
                }
            }
            BotKind::Inner => {
                if self.scenes.len() != 1 || self.decision_info.is_none() {
                    return Err("inner bundle carries one scene and the decision".to_string());
                }
            }
            BotKind::Extra => {
                if self.scenes.len() != 2 || self.decision_info.is_none() {
                    return Err(
                        "extra bundle carries before+after scenes and the decision".to_string()
                    );
                }
            }
        }
        Ok(())
    }

    /// Canonical text form; identical inputs render byte-identically.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("# ROLE\n");
        out.push_str(&self.role_playing);
        out.push('\n');
        if self.bot == BotKind::Decision {
            out.push_str("\n# ERROR MESSAGES\n");
            if self.error_messages.is_empty() {
                out.push_str("(none)\n");
            } else {
                for msg in &self.error_messages {
                    out.push_str("- ");
                    out.push_str(msg);
                    out.push('\n');
                }
            }
            if let Some(repo) = &self.code_repository {
                out.push_str("\n# CODE REPOSITORY\n");
                out.push_str(repo);
                out.push('\n');
            }
            if let Some(cot) = &self.cot {
                out.push_str("\n# REASONING\n");
                out.push_str(cot);
                out.push('\n');
            }
            if !self.examples.is_empty() {
                out.push_str("\n# EXAMPLES\n");
                for ex in &self.examples {
                    out.push_str(&ex.input);
                    out.push_str("\nPLAN:\n");
                    for (i, line) in ex.plan.iter().enumerate() {
                        out.push_str(&format!("{}. {line}\n", i + 1));
                    }
                    out.push_str("CODE:\n```\n");
                    out.push_str(&ex.code);
                    out.push_str("\n```\n\n");
                }
            }
        }
        let scene_names: &[&str] = match self.bot {
            BotKind::Extra => &["# SCENE BEFORE", "# SCENE AFTER"],
            _ => &["# SCENE"],
        };
        for (name, scene) in scene_names.iter().zip(&self.scenes) {
            out.push('\n');
            out.push_str(name);
            out.push('\n');
            out.push_str(scene);
            out.push('\n');
        }
        if let Some(info) = &self.decision_info {
            out.push_str("\n# DECISION UNDER REVIEW\nPLAN:\n");
            for (i, line) in info.plan.iter().enumerate() {
                out.push_str(&format!("{}. {line}\n", i + 1));
            }
            out.push_str("CODE:\n```\n");
            out.push_str(&info.code);
            out.push_str("\n```\n");
        }
        out.push_str("\n# TASK\n");
        out.push_str(&self.instruction);
        out.push('\n');
        out.push_str("\n# OUTPUT FORMAT\n");
        match self.bot {
            BotKind::Decision => out.push_str(
                "Reply with 'PLAN:' followed by numbered steps, then 'CODE:' followed by a \
                 fenced code block.\n",
            ),
            _ => out.push_str("Reply with 'VERDICT: yes' or 'VERDICT: no', then 'REASON: ...'.\n"),
        }
        out
    }

    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.render().as_bytes());
        format!("{:x}", hasher.finalize())
    }
}

fn serialize_snapshot(snapshot: &PerceptionSnapshot) -> String {
    serde_json::to_string(snapshot).expect("snapshot serializes")
}

/// Decision prompt: all five parts, with every prior piece of feedback this
/// episode, oldest first.
pub fn build_decision_prompt(
    instruction: &str,
    snapshot: &PerceptionSnapshot,
    feedback_history: &[String],
    exemplars: &ExemplarSet,
) -> PromptBundle {
    PromptBundle {
        bot: BotKind::Decision,
        role_playing: DECISION_ROLE.to_string(),
        error_messages: feedback_history.to_vec(),
        code_repository: Some(CODE_REPOSITORY.to_string()),
        cot: Some(COT_DIRECTIVE.to_string()),
        examples: exemplars.exemplars.clone(),
        scenes: vec![serialize_snapshot(snapshot)],
        decision_info: None,
        instruction: instruction.to_string(),
        attachments: Vec::new(),
    }
}

pub fn build_inner_prompt(
    instruction: &str,
    snapshot: &PerceptionSnapshot,
    plan: &[String],
    code: &str,
) -> PromptBundle {
    PromptBundle {
        bot: BotKind::Inner,
        role_playing: INNER_ROLE.to_string(),
        error_messages: Vec::new(),
        code_repository: None,
        cot: None,
        examples: Vec::new(),
        scenes: vec![serialize_snapshot(snapshot)],
        decision_info: Some(DecisionInfo {
            plan: plan.to_vec(),
            code: code.to_string(),
        }),
        instruction: instruction.to_string(),
        attachments: Vec::new(),
    }
}

pub fn build_extra_prompt(
    instruction: &str,
    before: &PerceptionSnapshot,
    after: &PerceptionSnapshot,
    plan: &[String],
    code: &str,
) -> PromptBundle {
    PromptBundle {
        bot: BotKind::Extra,
        role_playing: EXTRA_ROLE.to_string(),
        error_messages: Vec::new(),
        code_repository: None,
        cot: None,
        examples: Vec::new(),
        scenes: vec![serialize_snapshot(before), serialize_snapshot(after)],
        decision_info: Some(DecisionInfo {
            plan: plan.to_vec(),
            code: code.to_string(),
        }),
        instruction: instruction.to_string(),
        attachments: Vec::new(),
    }
}

pub(crate) fn parse_scene(scene: &str) -> Result<PerceptionSnapshot, serde_json::Error> {
    serde_json::from_str(scene)
}
