//! The deterministic halves of the internal review: format and plan/code
//! alignment. Verification (independent regeneration) goes through the
//! gateway and lives in the episode module.

use crate::dsl::{parse, ActionProgram, Arg, SkillCall};

/// Format check: the code must parse as a program and the plan must be
/// non-empty.
pub fn format_check(plan: &[String], code: &str) -> Result<ActionProgram, String> {
    if plan.is_empty() {
        return Err("plan is empty".to_string());
    }
    parse(code).map_err(|e| format!("code failed the format check: {e}"))
}

fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Matching check: plan lines and code calls must align one to one, each
/// line naming its call's skill and arguments. Purely lexical.
pub fn matching_check(plan: &[String], program: &ActionProgram) -> Result<(), String> {
    if plan.len() != program.calls.len() {
        let detail = if plan.len() > program.calls.len() {
            let first_extra = &plan[program.calls.len()];
            format!("plan step {} ('{}') has no code call", program.calls.len() + 1, first_extra)
        } else {
            let first_extra = &program.calls[plan.len()];
            format!("code call {} ({}) has no plan step", plan.len() + 1, first_extra)
        };
        return Err(format!(
            "plan has {} steps but code has {} calls; {detail}",
            plan.len(),
            program.calls.len()
        ));
    }
    for (i, (line, call)) in plan.iter().zip(&program.calls).enumerate() {
        if let Err(reason) = line_matches_call(line, call) {
            return Err(format!("plan step {} ('{line}') {reason}", i + 1));
        }
    }
    Ok(())
}

fn line_matches_call(line: &str, call: &SkillCall) -> Result<(), String> {
    let line_tokens = tokens(line);
    let verb_ok = call
        .skill
        .verbs()
        .iter()
        .any(|v| line_tokens.iter().any(|t| t == v));
    if !verb_ok {
        return Err(format!("does not mention the {} action", call.skill));
    }
    for arg in &call.args {
        match arg {
            Arg::Text(s) => {
                for tok in tokens(s) {
                    if !line_tokens.contains(&tok) {
                        return Err(format!(
                            "does not mention '{tok}' from code call {call}"
                        ));
                    }
                }
            }
            Arg::Number(n) => {
                if !line_tokens.contains(&n.to_string()) {
                    return Err(format!("does not mention the count {n} from {call}"));
                }
            }
        }
    }
    Ok(())
}
