//! Matchings: sets of traces with disjoint occurrence intervals.
//!
//! A matching over a token stream assigns each chosen trace a set of
//! half-open intervals; intervals are pairwise disjoint across the whole
//! matching, every interval carries exactly the trace's content, and every
//! trace is at least the minimum length. Coverage is the number of stream
//! positions inside intervals.
//!
//! `brute_force_best` finds a coverage-optimal matching by exhaustive
//! branch-and-bound and is deliberately restricted to tiny streams; it
//! exists to gauge the online miner.

use std::collections::HashMap;

use thiserror::Error;

use crate::cost::StructureError;
use crate::repeats::RepeatResult;
use crate::replayer::AnnotatedEvent;
use crate::token::{hash_task, Token};

/// One trace of a matching: its content and where it is claimed to occur.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchedTrace {
    pub tokens: Vec<Token>,
    /// Half-open `[start, end)` intervals into the stream.
    pub intervals: Vec<(usize, usize)>,
}

/// A set of traces with their claimed occurrence intervals.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Matching {
    pub traces: Vec<MatchedTrace>,
}

impl Matching {
    pub fn coverage(&self) -> usize {
        self.traces
            .iter()
            .map(|t| t.intervals.iter().map(|(s, e)| e - s).sum::<usize>())
            .sum()
    }
}

/// Why a claimed matching is not valid for a stream.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchingViolation {
    #[error("trace {trace} has length {len}, below the minimum {min}")]
    TooShort {
        trace: usize,
        len: usize,
        min: usize,
    },
    #[error("trace {trace} claims interval [{start}, {end}) with the wrong width")]
    WrongWidth {
        trace: usize,
        start: usize,
        end: usize,
    },
    #[error("trace {trace} claims [{start}, {end}) outside the stream of {n} tokens")]
    OutOfBounds {
        trace: usize,
        start: usize,
        end: usize,
        n: usize,
    },
    #[error("position {pos} is claimed by two intervals")]
    Overlap { pos: usize },
    #[error("trace {trace} differs from the stream at offset {offset} of [{start}, ..)")]
    ContentMismatch {
        trace: usize,
        start: usize,
        offset: usize,
    },
}

/// Checks structural validity of a matching against a stream.
pub fn validate_matching(
    m: &Matching,
    stream: &[Token],
    min_len: usize,
) -> Result<(), MatchingViolation> {
    let n = stream.len();
    let mut claimed = vec![false; n];
    for (ti, t) in m.traces.iter().enumerate() {
        if t.tokens.len() < min_len {
            return Err(MatchingViolation::TooShort {
                trace: ti,
                len: t.tokens.len(),
                min: min_len,
            });
        }
        for &(start, end) in &t.intervals {
            if end > n || start > end {
                return Err(MatchingViolation::OutOfBounds {
                    trace: ti,
                    start,
                    end,
                    n,
                });
            }
            if end - start != t.tokens.len() {
                return Err(MatchingViolation::WrongWidth {
                    trace: ti,
                    start,
                    end,
                });
            }
            for (off, (&want, &got)) in t.tokens.iter().zip(&stream[start..end]).enumerate() {
                if want != got {
                    return Err(MatchingViolation::ContentMismatch {
                        trace: ti,
                        start,
                        offset: off,
                    });
                }
            }
            for (pos, c) in claimed[start..end].iter_mut().enumerate() {
                if *c {
                    return Err(MatchingViolation::Overlap { pos: start + pos });
                }
                *c = true;
            }
        }
    }
    Ok(())
}

/// Reconstructs the token stream and the claimed matching from an annotated
/// event stream. Traces with the same id accumulate intervals.
pub fn matching_from_events(
    events: &[AnnotatedEvent],
) -> Result<(Vec<Token>, Matching), StructureError> {
    let mut stream = Vec::new();
    let mut open: Option<(u32, usize, usize)> = None;
    let mut by_id: HashMap<u32, MatchedTrace> = HashMap::new();
    let mut id_order: Vec<u32> = Vec::new();

    for (index, event) in events.iter().enumerate() {
        match event {
            AnnotatedEvent::Task(t) => {
                stream.push(hash_task(t));
            }
            AnnotatedEvent::TraceBegin { id, .. } => {
                if let Some((outer, _, _)) = open {
                    return Err(StructureError::NestedTrace {
                        index,
                        outer,
                        inner: *id,
                    });
                }
                open = Some((*id, index, stream.len()));
            }
            AnnotatedEvent::TraceEnd { id } => match open.take() {
                None => return Err(StructureError::UnmatchedEnd { index, found: *id }),
                Some((begun, begin_index, start)) => {
                    if begun != *id {
                        return Err(StructureError::MismatchedEnd {
                            index,
                            expected: begun,
                            found: *id,
                        });
                    }
                    let end = stream.len();
                    if end == start {
                        return Err(StructureError::EmptyTrace {
                            index: begin_index,
                            id: *id,
                        });
                    }
                    let entry = by_id.entry(begun).or_insert_with(|| {
                        id_order.push(begun);
                        MatchedTrace {
                            tokens: stream[start..end].to_vec(),
                            intervals: Vec::new(),
                        }
                    });
                    entry.intervals.push((start, end));
                }
            },
        }
    }
    if let Some((id, _, _)) = open {
        return Err(StructureError::UnclosedTrace { id });
    }
    let traces = id_order
        .into_iter()
        .map(|id| by_id.remove(&id).expect("recorded in order"))
        .collect();
    Ok((stream, Matching { traces }))
}

/// Converts a mined result into a matching over the mined slice.
pub fn matching_from_repeats(result: &RepeatResult) -> Matching {
    Matching {
        traces: result
            .repeats
            .iter()
            .map(|r| MatchedTrace {
                tokens: r.tokens.clone(),
                intervals: r
                    .occurrences
                    .iter()
                    .map(|&o| (o, o + r.tokens.len()))
                    .collect(),
            })
            .collect(),
    }
}

/// Streams longer than this are rejected by [`brute_force_best`].
pub const BRUTE_FORCE_MAX: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("brute force search handles at most {max} tokens, got {n}")]
pub struct TooLarge {
    pub n: usize,
    pub max: usize,
}

/// Exhaustively finds a matching with maximum coverage (ties: more
/// intervals, then fewer distinct traces). A trace is admissible only if
/// its content occurs at least twice without overlap somewhere in the
/// stream; without this rule the whole stream would trivially cover
/// itself. An admissible trace may still be placed just once.
pub fn brute_force_best(stream: &[Token], min_len: usize) -> Result<Matching, TooLarge> {
    let n = stream.len();
    if n > BRUTE_FORCE_MAX {
        return Err(TooLarge {
            n,
            max: BRUTE_FORCE_MAX,
        });
    }
    let min_len = min_len.max(1);
    let mut search = Search::new(stream, min_len);
    search.run();
    Ok(search.into_matching(stream))
}

struct Search {
    n: usize,
    min_len: usize,
    /// content id for (start, len), or NONE
    content: Vec<Vec<u32>>,
    /// whether the content has two disjoint occurrences at all
    eligible: Vec<bool>,
    content_len: Vec<usize>,
    // search state
    placed: Vec<(usize, u32)>,
    counts: Vec<u32>,
    cov: usize,
    best: (usize, usize, isize),
    best_placed: Vec<(usize, u32)>,
}

const NONE: u32 = u32::MAX;

impl Search {
    fn new(stream: &[Token], min_len: usize) -> Search {
        let n = stream.len();
        let mut ids: HashMap<&[Token], u32> = HashMap::new();
        let mut occurrences: Vec<Vec<usize>> = Vec::new();
        let mut content_len: Vec<usize> = Vec::new();
        let mut content = vec![vec![NONE; n + 1]; n.max(1)];
        for start in 0..n {
            for len in min_len..=(n - start) {
                let slice = &stream[start..start + len];
                let id = *ids.entry(slice).or_insert_with(|| {
                    occurrences.push(Vec::new());
                    content_len.push(len);
                    (occurrences.len() - 1) as u32
                });
                occurrences[id as usize].push(start);
                content[start][len] = id;
            }
        }
        let eligible = occurrences
            .iter()
            .zip(&content_len)
            .map(|(occ, &len)| occ.last().unwrap() - occ[0] >= len)
            .collect();
        let counts = vec![0; occurrences.len()];
        Search {
            n,
            min_len,
            content,
            eligible,
            content_len,
            placed: Vec::new(),
            counts,
            cov: 0,
            best: (0, 0, 0),
            best_placed: Vec::new(),
        }
    }

    fn run(&mut self) {
        self.dfs(0);
    }

    fn distinct(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    fn dfs(&mut self, pos: usize) {
        if pos >= self.n {
            let tuple = (self.cov, self.placed.len(), -(self.distinct() as isize));
            if tuple > self.best {
                self.best = tuple;
                self.best_placed = self.placed.clone();
            }
            return;
        }
        let remaining = self.n - pos;
        let upper = (
            self.cov + remaining,
            self.placed.len() + remaining / self.min_len,
            -(self.distinct().max(1) as isize),
        );
        // the third component only decreases as contents are added, so this
        // bound is sound for the lexicographic objective
        if upper <= self.best {
            return;
        }

        for len in self.min_len..=remaining {
            let id = self.content[pos][len];
            if id == NONE || !self.eligible[id as usize] {
                continue;
            }
            self.counts[id as usize] += 1;
            self.placed.push((pos, id));
            self.cov += len;

            self.dfs(pos + len);

            self.cov -= len;
            self.placed.pop();
            self.counts[id as usize] -= 1;
        }
        self.dfs(pos + 1);
    }

    fn into_matching(self, stream: &[Token]) -> Matching {
        let mut by_id: HashMap<u32, usize> = HashMap::new();
        let mut traces: Vec<MatchedTrace> = Vec::new();
        for &(start, id) in &self.best_placed {
            let len = self.content_len[id as usize];
            let idx = *by_id.entry(id).or_insert_with(|| {
                traces.push(MatchedTrace {
                    tokens: stream[start..start + len].to_vec(),
                    intervals: Vec::new(),
                });
                traces.len() - 1
            });
            traces[idx].intervals.push((start, start + len));
        }
        Matching { traces }
    }
}
