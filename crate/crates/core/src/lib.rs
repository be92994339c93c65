//! Online identification and replay of repeated task sequences.
//!
//! A task stream (dynamic dependency analysis, one task at a time) is hashed
//! into a stream of 64-bit tokens. The engine buffers recent history, mines
//! it on a multi-scale schedule for repeated sub-sequences (suffix array +
//! greedy selection), registers the survivors as traces in a trie, and walks
//! the live stream through that trie to decide, per task, whether it is
//! emitted plain, recorded as part of a first trace occurrence, or replayed.
//! A simulated cost model quantifies how much analysis the replayed portion
//! avoids.
//!
//! Layering, bottom to top:
//!
//! * [`task`], [`token`], [`text`]: descriptors, hashing, wire formats
//! * [`suffix`], [`repeats`]: suffix/LCP arrays and the repeat miner
//! * [`finder`]: history buffer, mining schedule, simulated job latency
//! * [`replayer`]: trace trie, pointers, record/replay decisions
//! * [`engine`]: pushes one task at a time through all of the above
//! * [`matching`], [`cost`]: offline evaluation of mined output
//! * [`generate`], [`replication`], [`pipeline`]: stream synthesis, lockstep
//!   multi-node runs, whole-run orchestration

pub mod cost;
pub mod engine;
pub mod finder;
pub mod generate;
pub mod matching;
pub mod pipeline;
pub mod repeats;
pub mod replayer;
pub mod replication;
pub mod suffix;
pub mod task;
pub mod text;
pub mod token;

pub use engine::{Decision, Engine, EngineConfig, StepOutput};
pub use repeats::{find_repeats, Repeat, RepeatResult};
pub use replayer::AnnotatedEvent;
pub use task::{Privilege, RegionArg, TaskDescriptor};
pub use token::{hash_task, tokenize_stream, Token};
