//! Line-oriented text formats for task streams and annotated streams.
//!
//! One event per line. Blank lines and lines starting with `#` are skipped.
//!
//! ```text
//! task <name> <region>:<privilege>:<field>[,<field>...][:<partition>] ...
//! untraceable <name> ...
//! tbegin <id> <record|replay>
//! tend <id>
//! ```
//!
//! `tbegin`/`tend` only appear in annotated streams. Parsing is strict and
//! reports 1-based line numbers; serialization of validated descriptors
//! round-trips exactly.

use std::fmt::Write as _;

use thiserror::Error;

use crate::replayer::AnnotatedEvent;
use crate::task::{Privilege, RegionArg, TaskDescriptor};

/// A rejected input line.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line,
            message: message.into(),
        }
    }
}

/// Parses a plain task stream: `task` and `untraceable` lines only.
pub fn parse_task_stream(text: &str) -> Result<Vec<TaskDescriptor>, ParseError> {
    let mut tasks = Vec::new();
    for (event, lineno) in significant_lines(text) {
        match parse_event(event, lineno)? {
            AnnotatedEvent::Task(t) => tasks.push(t),
            _ => {
                return Err(ParseError::new(
                    lineno,
                    "trace annotations are not allowed in a plain task stream",
                ))
            }
        }
    }
    Ok(tasks)
}

/// Parses an annotated stream: task lines interleaved with `tbegin`/`tend`.
pub fn parse_annotated_stream(text: &str) -> Result<Vec<AnnotatedEvent>, ParseError> {
    significant_lines(text)
        .map(|(event, lineno)| parse_event(event, lineno))
        .collect()
}

pub fn serialize_task_stream(tasks: &[TaskDescriptor]) -> String {
    let mut out = String::new();
    for t in tasks {
        task_line(&mut out, t);
    }
    out
}

pub fn serialize_annotated_stream(events: &[AnnotatedEvent]) -> String {
    let mut out = String::new();
    for e in events {
        match e {
            AnnotatedEvent::Task(t) => task_line(&mut out, t),
            AnnotatedEvent::TraceBegin { id, record } => {
                let mode = if *record { "record" } else { "replay" };
                writeln!(out, "tbegin {id} {mode}").unwrap();
            }
            AnnotatedEvent::TraceEnd { id } => writeln!(out, "tend {id}").unwrap(),
        }
    }
    out
}

fn significant_lines(text: &str) -> impl Iterator<Item = (&str, usize)> {
    text.lines()
        .enumerate()
        .map(|(i, line)| (line.trim(), i + 1))
        .filter(|(line, _)| !line.is_empty() && !line.starts_with('#'))
}

fn parse_event(line: &str, lineno: usize) -> Result<AnnotatedEvent, ParseError> {
    let mut words = line.split_whitespace();
    let directive = words.next().expect("significant lines are non-empty");
    match directive {
        "task" => parse_task_words(words, lineno, false).map(AnnotatedEvent::Task),
        "untraceable" => parse_task_words(words, lineno, true).map(AnnotatedEvent::Task),
        "tbegin" => {
            let id = parse_id(words.next(), lineno)?;
            let mode = words
                .next()
                .ok_or_else(|| ParseError::new(lineno, "tbegin needs <id> <record|replay>"))?;
            let record = match mode {
                "record" => true,
                "replay" => false,
                other => {
                    return Err(ParseError::new(
                        lineno,
                        format!("unknown trace mode {other:?}, expected record or replay"),
                    ))
                }
            };
            expect_end(words, lineno)?;
            Ok(AnnotatedEvent::TraceBegin { id, record })
        }
        "tend" => {
            let id = parse_id(words.next(), lineno)?;
            expect_end(words, lineno)?;
            Ok(AnnotatedEvent::TraceEnd { id })
        }
        other => Err(ParseError::new(
            lineno,
            format!("unknown directive {other:?}"),
        )),
    }
}

fn parse_id(word: Option<&str>, lineno: usize) -> Result<u32, ParseError> {
    let word = word.ok_or_else(|| ParseError::new(lineno, "missing trace id"))?;
    word.parse()
        .map_err(|_| ParseError::new(lineno, format!("bad trace id {word:?}")))
}

fn expect_end<'a>(mut words: impl Iterator<Item = &'a str>, lineno: usize) -> Result<(), ParseError> {
    match words.next() {
        None => Ok(()),
        Some(extra) => Err(ParseError::new(
            lineno,
            format!("unexpected trailing {extra:?}"),
        )),
    }
}

fn parse_task_words<'a>(
    words: impl Iterator<Item = &'a str>,
    lineno: usize,
    untraceable: bool,
) -> Result<TaskDescriptor, ParseError> {
    let mut words = words;
    let name = words
        .next()
        .ok_or_else(|| ParseError::new(lineno, "missing task name"))?;
    let mut args = Vec::new();
    for word in words {
        args.push(parse_arg(word, lineno)?);
    }
    let task = TaskDescriptor {
        task_name: name.to_string(),
        args,
        untraceable,
    };
    task.validate()
        .map_err(|e| ParseError::new(lineno, e.to_string()))?;
    Ok(task)
}

fn parse_arg(word: &str, lineno: usize) -> Result<RegionArg, ParseError> {
    let parts: Vec<&str> = word.split(':').collect();
    if parts.len() < 3 || parts.len() > 4 {
        return Err(ParseError::new(
            lineno,
            format!("argument {word:?} is not <region>:<privilege>:<fields>[:<partition>]"),
        ));
    }
    let privilege = Privilege::parse(parts[1]).ok_or_else(|| {
        ParseError::new(lineno, format!("unknown privilege {:?}", parts[1]))
    })?;
    let fields: Vec<String> = parts[2].split(',').map(str::to_string).collect();
    Ok(RegionArg {
        region_id: parts[0].to_string(),
        privilege,
        fields,
        partition_id: parts.get(3).map(|p| p.to_string()),
    })
}

fn task_line(out: &mut String, t: &TaskDescriptor) {
    debug_assert_eq!(t.validate(), Ok(()));
    out.push_str(if t.untraceable { "untraceable" } else { "task" });
    out.push(' ');
    out.push_str(&t.task_name);
    for arg in &t.args {
        out.push(' ');
        out.push_str(&arg.region_id);
        out.push(':');
        out.push_str(arg.privilege.as_str());
        out.push(':');
        out.push_str(&arg.fields.join(","));
        if let Some(p) = &arg.partition_id {
            out.push(':');
            out.push_str(p);
        }
    }
    out.push('\n');
}
