//! Hashing task descriptors into stream tokens.
//!
//! A token is a 64-bit FNV-1a hash of a canonical byte encoding of the
//! descriptor. Every variable-length component is length-prefixed and the
//! components are folded in a fixed order, so the encoding is prefix-free
//! per component: a field flip, reorder, or boundary shift always changes
//! the bytes, never just their grouping.
//!
//! The top bit is a namespace flag. Ordinary descriptors hash into the
//! lower half-space; untraceable ones have the bit forced on, so the two
//! populations can never collide with each other.

use std::fmt;

use crate::task::TaskDescriptor;

/// A 64-bit stream token. Equal descriptors produce equal tokens.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(pub u64);

impl Token {
    /// Namespace flag for tokens of untraceable tasks.
    pub const UNTRACEABLE_BIT: u64 = 1 << 63;

    pub fn is_untraceable(self) -> bool {
        self.0 & Token::UNTRACEABLE_BIT != 0
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Token({:#018x})", self.0)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x100_0000_01b3;

struct Fnv(u64);

impl Fnv {
    fn new() -> Fnv {
        Fnv(FNV_OFFSET)
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
    }

    fn write_str(&mut self, s: &str) {
        self.write_len(s.len());
        self.write(s.as_bytes());
    }

    fn write_len(&mut self, n: usize) {
        self.write(&(n as u64).to_le_bytes());
    }
}

/// Hashes a descriptor to its stream token.
pub fn hash_task(task: &TaskDescriptor) -> Token {
    let mut h = Fnv::new();
    h.write_str(&task.task_name);
    h.write_len(task.args.len());
    for arg in &task.args {
        h.write_str(&arg.region_id);
        h.write(&[arg.privilege as u8]);
        h.write_len(arg.fields.len());
        for f in &arg.fields {
            h.write_str(f);
        }
        match &arg.partition_id {
            Some(p) => {
                h.write(&[1]);
                h.write_str(p);
            }
            None => h.write(&[0]),
        }
    }
    let value = h.0 & !Token::UNTRACEABLE_BIT;
    if task.untraceable {
        Token(value | Token::UNTRACEABLE_BIT)
    } else {
        Token(value)
    }
}

/// Hashes a whole stream in order.
pub fn tokenize_stream(tasks: &[TaskDescriptor]) -> Vec<Token> {
    tasks.iter().map(hash_task).collect()
}
