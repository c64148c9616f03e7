//! Completion parsing: Decision replies must carry PLAN/CODE sections,
//! review replies a binary VERDICT and a REASON. The formatting functions are
//! the exact inverses the oracle uses, so format-then-parse is the identity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::prompt::BotKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BotResponse {
    Decision { plan: Vec<String>, code: String },
    Review { verdict: bool, reason: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResponseParseError {
    #[error("missing section {0}")]
    MissingSection(String),
    #[error("section {0} is empty")]
    EmptySection(String),
    #[error("garbled verdict: {0}")]
    GarbledVerdict(String),
}

/// Extracts the structured response for the given bot. Any failure here is a
/// format failure from the engine's point of view.
pub fn parse_bot_response(raw: &str, bot: BotKind) -> Result<BotResponse, ResponseParseError> {
    match bot {
        BotKind::Decision => parse_decision(raw),
        BotKind::Inner | BotKind::Extra => parse_review(raw),
    }
}

fn parse_decision(raw: &str) -> Result<BotResponse, ResponseParseError> {
    let lines: Vec<&str> = raw.lines().collect();
    let plan_at = lines
        .iter()
        .position(|l| l.trim_start().starts_with("PLAN:"))
        .ok_or_else(|| ResponseParseError::MissingSection("PLAN".to_string()))?;
    let code_at = lines
        .iter()
        .position(|l| l.trim_start().starts_with("CODE:"))
        .ok_or_else(|| ResponseParseError::MissingSection("CODE".to_string()))?;

    let mut plan = Vec::new();
    for line in &lines[plan_at + 1..] {
        let trimmed = line.trim();
        if trimmed.starts_with("CODE:") {
            break;
        }
        if let Some(step) = strip_number(trimmed) {
            plan.push(step.to_string());
        } else if !trimmed.is_empty() {
            break;
        }
    }
    if plan.is_empty() {
        return Err(ResponseParseError::EmptySection("PLAN".to_string()));
    }

    let mut code_lines = Vec::new();
    let mut in_fence = false;
    let mut closed = false;
    for line in &lines[code_at + 1..] {
        let trimmed = line.trim();
        if trimmed.starts_with("```") {
            if in_fence {
                closed = true;
                break;
            }
            in_fence = true;
            continue;
        }
        if in_fence {
            code_lines.push(*line);
        }
    }
    if !in_fence || !closed {
        return Err(ResponseParseError::MissingSection("CODE".to_string()));
    }
    let code = code_lines.join("\n");
    if code.trim().is_empty() {
        return Err(ResponseParseError::EmptySection("CODE".to_string()));
    }
    Ok(BotResponse::Decision { plan, code })
}

fn strip_number(line: &str) -> Option<&str> {
    let rest = line.trim_start_matches(|c: char| c.is_ascii_digit());
    if rest.len() == line.len() {
        return None;
    }
    let rest = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')'))?;
    Some(rest.trim())
}

fn parse_review(raw: &str) -> Result<BotResponse, ResponseParseError> {
    let mut verdict: Option<bool> = None;
    for line in raw.lines() {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix("VERDICT:") {
            let value = match rest.trim().to_lowercase().as_str() {
                "yes" => true,
                "no" => false,
                other => return Err(ResponseParseError::GarbledVerdict(other.to_string())),
            };
            match verdict {
                Some(prev) if prev != value => {
                    return Err(ResponseParseError::GarbledVerdict(
                        "conflicting verdicts".to_string(),
                    ))
                }
                _ => verdict = Some(value),
            }
        }
    }
    let verdict =
        verdict.ok_or_else(|| ResponseParseError::MissingSection("VERDICT".to_string()))?;

    let reason_at = raw
        .find("REASON:")
        .ok_or_else(|| ResponseParseError::MissingSection("REASON".to_string()))?;
    let reason = raw[reason_at + "REASON:".len()..].trim().to_string();
    Ok(BotResponse::Review { verdict, reason })
}

/// Renders a decision the way the bots are instructed to answer.
pub fn format_decision(plan: &[String], code: &str) -> String {
    let mut out = String::from("PLAN:\n");
    for (i, line) in plan.iter().enumerate() {
        out.push_str(&format!("{}. {line}\n", i + 1));
    }
    out.push_str("CODE:\n```\n");
    out.push_str(code);
    out.push_str("\n```\n");
    out
}

pub fn format_review(verdict: bool, reason: &str) -> String {
    format!(
        "VERDICT: {}\nREASON: {reason}\n",
        if verdict { "yes" } else { "no" }
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn review_parses_verdict_and_reason() {
        let r = parse_bot_response("VERDICT: yes\nREASON: consistent", BotKind::Inner).unwrap();
        assert_eq!(
            r,
            BotResponse::Review {
                verdict: true,
                reason: "consistent".to_string()
            }
        );
    }

    #[test]
    fn prose_without_code_block_is_missing_section() {
        let err = parse_bot_response(
            "PLAN:\n1. Grab the food.\nI will now grab the food.",
            BotKind::Decision,
        )
        .unwrap_err();
        assert_eq!(err, ResponseParseError::MissingSection("CODE".to_string()));
    }

    #[test]
    fn maybe_is_a_garbled_verdict() {
        let err = parse_bot_response("VERDICT: maybe\nREASON: unsure", BotKind::Extra).unwrap_err();
        assert!(matches!(err, ResponseParseError::GarbledVerdict(_)));
    }

    #[test]
    fn conflicting_verdicts_are_garbled() {
        let err = parse_bot_response(
            "VERDICT: yes\nVERDICT: no\nREASON: both",
            BotKind::Inner,
        )
        .unwrap_err();
        assert!(matches!(err, ResponseParseError::GarbledVerdict(_)));
    }

    #[test]
    fn empty_output_is_missing_plan() {
        let err = parse_bot_response("", BotKind::Decision).unwrap_err();
        assert_eq!(err, ResponseParseError::MissingSection("PLAN".to_string()));
    }

    #[test]
    fn format_then_parse_is_identity() {
        let plan = vec![
            "Pick up the blue cube.".to_string(),
            "Place the held object on the table.".to_string(),
        ];
        let code = "pick('blue cube')\nplace('table')";
        let parsed = parse_bot_response(&format_decision(&plan, code), BotKind::Decision).unwrap();
        assert_eq!(
            parsed,
            BotResponse::Decision {
                plan,
                code: code.to_string()
            }
        );

        let parsed = parse_bot_response(&format_review(false, "red cube unmoved"), BotKind::Extra)
            .unwrap();
        assert_eq!(
            parsed,
            BotResponse::Review {
                verdict: false,
                reason: "red cube unmoved".to_string()
            }
        );
    }

    #[test]
    fn empty_reason_round_trips() {
        let parsed = parse_bot_response(&format_review(true, ""), BotKind::Inner).unwrap();
        assert_eq!(
            parsed,
            BotResponse::Review {
                verdict: true,
                reason: String::new()
            }
        );
    }
}
