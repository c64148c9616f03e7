//! Parser for the skill language.
//!
//! Grammar:
//!   program   := statement+
//!   statement := call (";" | newline)*
//!   call      := ident "(" arglist? ")"
//!   arglist   := arg ("," arg)*
//!   arg       := string | integer
//!
//! Strings may be single- or double-quoted with backslash escapes. Anything
//! else — prose, blank input, pseudocode — is rejected.

use thiserror::Error;

use super::ast::{ActionProgram, Arg, Skill, SkillCall};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty program")]
    EmptyProgram,
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown skill '{name}' at line {line}, column {column}")]
    UnknownSkill {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("{skill} takes {expected} argument(s), got {got} (line {line})")]
    Arity {
        skill: String,
        expected: usize,
        got: usize,
        line: usize,
    },
    #[error("bad argument for {skill} at line {line}: {message}")]
    BadArgument {
        skill: String,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Str(String),
    Int(i64),
    LParen,
    RParen,
    Comma,
    Separator,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            chars: src.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }

    fn tokens(mut self) -> Result<Vec<(Token, usize, usize)>, ParseError> {
        let mut out = Vec::new();
        while let Some(&c) = self.chars.peek() {
            let (line, column) = (self.line, self.column);
            match c {
                ' ' | '\t' | '\r' => {
                    self.bump();
                }
                '\n' | ';' => {
                    self.bump();
                    out.push((Token::Separator, line, column));
                }
                '(' => {
                    self.bump();
                    out.push((Token::LParen, line, column));
                }
                ')' => {
                    self.bump();
                    out.push((Token::RParen, line, column));
                }
                ',' => {
                    self.bump();
                    out.push((Token::Comma, line, column));
                }
                '\'' | '"' => {
                    let quote = c;
                    self.bump();
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            Some('\\') => match self.bump() {
                                Some(esc) => s.push(esc),
                                None => return Err(self.error("unterminated escape")),
                            },
                            Some(c) if c == quote => break,
                            Some('\n') | None => {
                                return Err(self.error("unterminated string literal"))
                            }
                            Some(c) => s.push(c),
                        }
                    }
                    out.push((Token::Str(s), line, column));
                }
                c if c.is_ascii_digit() => {
                    let mut n = String::new();
                    while let Some(&d) = self.chars.peek() {
                        if d.is_ascii_digit() {
                            n.push(d);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    let value = n
                        .parse::<i64>()
                        .map_err(|_| self.error(format!("integer out of range: {n}")))?;
                    out.push((Token::Int(value), line, column));
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let mut ident = String::new();
                    while let Some(&d) = self.chars.peek() {
                        if d.is_ascii_alphanumeric() || d == '_' {
                            ident.push(d);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    out.push((Token::Ident(ident), line, column));
                }
                other => return Err(self.error(format!("unexpected character '{other}'"))),
            }
        }
        Ok(out)
    }
}

/// Parses program text into an `ActionProgram`. Blank input is an empty
/// program; prose and pseudocode fail the grammar.
pub fn parse(source: &str) -> Result<ActionProgram, ParseError> {
    let tokens = Lexer::new(source).tokens()?;
    let mut calls = Vec::new();
    let mut i = 0;

    while i < tokens.len() {
        match &tokens[i] {
            (Token::Separator, _, _) => {
                i += 1;
            }
            (Token::Ident(name), line, column) => {
                let skill = Skill::from_name(name).ok_or_else(|| ParseError::UnknownSkill {
                    name: name.clone(),
                    line: *line,
                    column: *column,
                })?;
                i += 1;
                match tokens.get(i) {
                    Some((Token::LParen, _, _)) => i += 1,
                    _ => {
                        return Err(ParseError::Syntax {
                            line: *line,
                            column: *column,
                            message: format!("expected '(' after {name}"),
                        })
                    }
                }
                let mut args = Vec::new();
                loop {
                    match tokens.get(i) {
                        Some((Token::RParen, _, _)) => {
                            i += 1;
                            break;
                        }
                        Some((Token::Str(s), _, _)) => {
                            args.push(Arg::Text(s.clone()));
                            i += 1;
                        }
                        Some((Token::Int(n), _, _)) => {
                            args.push(Arg::Number(*n));
                            i += 1;
                        }
                        Some((tok, l, c)) => {
                            return Err(ParseError::Syntax {
                                line: *l,
                                column: *c,
                                message: format!("expected argument or ')', got {tok:?}"),
                            })
                        }
                        None => {
                            return Err(ParseError::Syntax {
                                line: *line,
                                column: *column,
                                message: "unterminated call".to_string(),
                            })
                        }
                    }
                    match tokens.get(i) {
                        Some((Token::Comma, _, _)) => i += 1,
                        Some((Token::RParen, _, _)) => {
                            i += 1;
                            break;
                        }
                        Some((tok, l, c)) => {
                            return Err(ParseError::Syntax {
                                line: *l,
                                column: *c,
                                message: format!("expected ',' or ')', got {tok:?}"),
                            })
                        }
                        None => {
                            return Err(ParseError::Syntax {
                                line: *line,
                                column: *column,
                                message: "unterminated call".to_string(),
                            })
                        }
                    }
                }
                validate_call(&skill, &args, *line)?;
                calls.push(SkillCall { skill, args });
            }
            (tok, line, column) => {
                return Err(ParseError::Syntax {
                    line: *line,
                    column: *column,
                    message: format!("expected a skill call, got {tok:?}"),
                })
            }
        }
    }

    if calls.is_empty() {
        return Err(ParseError::EmptyProgram);
    }
    Ok(ActionProgram {
        calls,
        source_text: source.to_string(),
    })
}

fn validate_call(skill: &Skill, args: &[Arg], line: usize) -> Result<(), ParseError> {
    if args.len() != skill.arity() {
        return Err(ParseError::Arity {
            skill: skill.name().to_string(),
            expected: skill.arity(),
            got: args.len(),
            line,
        });
    }
    match skill {
        Skill::Wait => match args.first() {
            Some(Arg::Number(n)) if *n >= 0 => Ok(()),
            Some(Arg::Number(n)) => Err(ParseError::BadArgument {
                skill: skill.name().to_string(),
                line,
                message: format!("tick count must be non-negative, got {n}"),
            }),
            _ => Err(ParseError::BadArgument {
                skill: skill.name().to_string(),
                line,
                message: "expected a tick count".to_string(),
            }),
        },
        Skill::Pick | Skill::Place | Skill::OpenDrawer => match args.first() {
            Some(Arg::Text(s)) if !s.trim().is_empty() => Ok(()),
            Some(Arg::Text(_)) => Err(ParseError::BadArgument {
                skill: skill.name().to_string(),
                line,
                message: "selector must not be blank".to_string(),
            }),
            _ => Err(ParseError::BadArgument {
                skill: skill.name().to_string(),
                line,
                message: "expected a quoted selector".to_string(),
            }),
        },
        Skill::Give => Ok(()),
    }
}
