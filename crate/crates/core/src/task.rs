//! Task descriptors: what the runtime can observe about a submitted task.
//!
//! A descriptor is the task name plus, for each region argument, the region,
//! the privilege requested, the fields touched, and an optional partition.
//! Two tasks with equal descriptors are indistinguishable to the engine.

use std::fmt;

use thiserror::Error;

/// Access privilege a task requests on a region argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Privilege {
    Read,
    Write,
    ReadWrite,
    Reduce,
}

impl Privilege {
    pub fn as_str(self) -> &'static str {
        match self {
            Privilege::Read => "read",
            Privilege::Write => "write",
            Privilege::ReadWrite => "read_write",
            Privilege::Reduce => "reduce",
        }
    }

    pub fn parse(s: &str) -> Option<Privilege> {
        match s {
            "read" => Some(Privilege::Read),
            "write" => Some(Privilege::Write),
            "read_write" => Some(Privilege::ReadWrite),
            "reduce" => Some(Privilege::Reduce),
            _ => None,
        }
    }
}

impl fmt::Display for Privilege {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One region argument of a task: region, privilege, fields, optional partition.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RegionArg {
    pub region_id: String,
    pub privilege: Privilege,
    pub fields: Vec<String>,
    pub partition_id: Option<String>,
}

impl RegionArg {
    pub fn new(
        region_id: impl Into<String>,
        privilege: Privilege,
        fields: &[&str],
    ) -> RegionArg {
        RegionArg {
            region_id: region_id.into(),
            privilege,
            fields: fields.iter().map(|f| f.to_string()).collect(),
            partition_id: None,
        }
    }

    pub fn with_partition(mut self, partition_id: impl Into<String>) -> RegionArg {
        self.partition_id = Some(partition_id.into());
        self
    }
}

/// Full observable identity of a submitted task.
///
/// `untraceable` marks tasks whose effects the engine may not capture
/// (external side effects, introspection); they never join a trace.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TaskDescriptor {
    pub task_name: String,
    pub args: Vec<RegionArg>,
    pub untraceable: bool,
}

impl TaskDescriptor {
    pub fn new(task_name: impl Into<String>, args: Vec<RegionArg>) -> TaskDescriptor {
        TaskDescriptor {
            task_name: task_name.into(),
            args,
            untraceable: false,
        }
    }

    pub fn untraceable(task_name: impl Into<String>, args: Vec<RegionArg>) -> TaskDescriptor {
        TaskDescriptor {
            task_name: task_name.into(),
            args,
            untraceable: true,
        }
    }

    /// Checks that the descriptor survives a serialize/parse round trip:
    /// identifiers non-empty and free of separators, every argument non-empty.
    pub fn validate(&self) -> Result<(), DescriptorError> {
        check_ident(&self.task_name, "task name")?;
        for (i, arg) in self.args.iter().enumerate() {
            check_ident(&arg.region_id, "region id").map_err(|e| e.at_arg(i))?;
            if arg.fields.is_empty() {
                return Err(DescriptorError::NoFields { arg: i });
            }
            for f in &arg.fields {
                check_ident(f, "field").map_err(|e| e.at_arg(i))?;
            }
            if let Some(p) = &arg.partition_id {
                check_ident(p, "partition id").map_err(|e| e.at_arg(i))?;
            }
        }
        Ok(())
    }
}

fn check_ident(s: &str, what: &'static str) -> Result<(), DescriptorError> {
    if s.is_empty() {
        return Err(DescriptorError::EmptyIdent { what, arg: None });
    }
    if let Some(c) = s
        .chars()
        .find(|&c| !c.is_ascii_graphic() || c == ':' || c == ',')
    {
        return Err(DescriptorError::BadChar {
            what,
            arg: None,
            ch: c,
        });
    }
    Ok(())
}

/// Why a descriptor cannot be represented in the text formats.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DescriptorError {
    #[error("empty {what}{}", fmt_arg(.arg))]
    EmptyIdent { what: &'static str, arg: Option<usize> },
    #[error("{what}{} contains {ch:?}; identifiers are printable ASCII without ':' or ','", fmt_arg(.arg))]
    BadChar {
        what: &'static str,
        arg: Option<usize>,
        ch: char,
    },
    #[error("region argument {arg} has no fields")]
    NoFields { arg: usize },
}

impl DescriptorError {
    fn at_arg(self, i: usize) -> DescriptorError {
        match self {
            DescriptorError::EmptyIdent { what, .. } => DescriptorError::EmptyIdent {
                what,
                arg: Some(i),
            },
            DescriptorError::BadChar { what, ch, .. } => DescriptorError::BadChar {
                what,
                arg: Some(i),
                ch,
            },
            other => other,
        }
    }
}

fn fmt_arg(arg: &Option<usize>) -> String {
    match arg {
        Some(i) => format!(" in region argument {i}"),
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_accepts_ordinary_descriptor() {
        let t = TaskDescriptor::new(
            "daxpy",
            vec![
                RegionArg::new("r0", Privilege::Read, &["x", "y"]).with_partition("p0"),
                RegionArg::new("r1", Privilege::Write, &["z"]),
            ],
        );
        assert_eq!(t.validate(), Ok(()));
    }

    #[test]
    fn validate_rejects_separator_in_field() {
        let t = TaskDescriptor::new("f", vec![RegionArg::new("r", Privilege::Read, &["a:b"])]);
        assert!(matches!(
            t.validate(),
            Err(DescriptorError::BadChar { ch: ':', .. })
        ));
    }

    #[test]
    fn validate_rejects_empty_fields() {
        let t = TaskDescriptor::new(
            "f",
            vec![RegionArg {
                region_id: "r".into(),
                privilege: Privilege::Read,
                fields: vec![],
                partition_id: None,
            }],
        );
        assert_eq!(t.validate(), Err(DescriptorError::NoFields { arg: 0 }));
    }
}
