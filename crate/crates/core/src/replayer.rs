//! Trace registry and the per-token record/replay decision.
//!
//! Mined repeats are registered as traces in a trie over tokens; nested
//! traces share prefixes. The live stream is matched by a set of pointers,
//! one per active partial match (at most one pointer per trie depth, so the
//! per-token cost is bounded by the longest trace). Tasks under a live
//! pointer are held back; they are released plain as soon as no pointer can
//! still claim them, or emitted inside a `tbegin`/`tend` bracket when a
//! match completes.
//!
//! A pointer passing an end node remembers the completed trace and keeps
//! going if the node has extensions (longest-match preference). Completions
//! become eligible when the pointer dies (the recorded ends surface) or hits
//! a leaf. Eligible completions drain eagerly, best score first; emitting a
//! trace invalidates every completion and pointer whose span would overlap
//! tokens that already left.

use std::collections::{HashMap, VecDeque};

use crate::repeats::RepeatResult;
use crate::task::TaskDescriptor;
use crate::token::Token;

pub const DEFAULT_COUNT_CAP: u64 = 100;
pub const DEFAULT_DECAY: f64 = 0.99;
pub const DEFAULT_DECAY_WINDOW: u64 = 100;
pub const DEFAULT_REPLAY_BONUS: f64 = 1.1;

/// Parameters of the trace-scoring function
/// `len * min(count, cap) * decay^(age / window) * (replay_bonus if replayed)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoringParams {
    pub count_cap: u64,
    pub decay: f64,
    pub decay_window: u64,
    pub replay_bonus: f64,
}

impl Default for ScoringParams {
    fn default() -> ScoringParams {
        ScoringParams {
            count_cap: DEFAULT_COUNT_CAP,
            decay: DEFAULT_DECAY,
            decay_window: DEFAULT_DECAY_WINDOW,
            replay_bonus: DEFAULT_REPLAY_BONUS,
        }
    }
}

/// One event of the annotated output stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnnotatedEvent {
    Task(TaskDescriptor),
    TraceBegin { id: u32, record: bool },
    TraceEnd { id: u32 },
}

/// Statistics of a registered trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceInfo {
    pub len: usize,
    /// Occurrences seen: mined occurrences plus live end-node passes.
    pub count: u64,
    /// Stream position just past the most recent occurrence.
    pub last_seen: u64,
    /// Whether this trace has been emitted at least once.
    pub replayed: bool,
}

/// A trace registered or refreshed during ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceIngest {
    pub id: u32,
    pub len: usize,
    pub count: u64,
    pub new: bool,
}

/// A trace emitted into the annotated stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmittedTrace {
    pub id: u32,
    pub start: u64,
    pub len: usize,
    pub record: bool,
}

/// Everything one `advance` step produced.
#[derive(Debug, Default)]
pub struct AdvanceOutput {
    pub events: Vec<AnnotatedEvent>,
    pub emitted: Vec<EmittedTrace>,
}

struct Node {
    children: HashMap<u64, u32>,
    end: Option<u32>,
}

impl Node {
    fn new() -> Node {
        Node {
            children: HashMap::new(),
            end: None,
        }
    }
}

struct Pointer {
    node: u32,
    start: u64,
    /// (trace, end position) for every end node passed on the way here.
    passed: Vec<(u32, u64)>,
}

#[derive(Debug, Clone, Copy)]
struct CompletedMatch {
    trace: u32,
    start: u64,
    end: u64,
}

pub struct TraceReplayer {
    nodes: Vec<Node>,
    traces: Vec<TraceInfo>,
    pointers: Vec<Pointer>,
    pending: VecDeque<TaskDescriptor>,
    /// Global index of pending[0].
    pending_base: u64,
    scoring: ScoringParams,
    chunk_min: usize,
    chunk_max: Option<usize>,
}

impl TraceReplayer {
    pub fn new(scoring: ScoringParams, chunk_min: usize, chunk_max: Option<usize>) -> TraceReplayer {
        assert!(chunk_min >= 1);
        if let Some(max) = chunk_max {
            assert!(max >= chunk_min);
        }
        TraceReplayer {
            nodes: vec![Node::new()],
            traces: Vec::new(),
            pointers: Vec::new(),
            pending: VecDeque::new(),
            pending_base: 0,
            scoring,
            chunk_min,
            chunk_max,
        }
    }

    pub fn trace_count(&self) -> usize {
        self.traces.len()
    }

    pub fn trace(&self, id: u32) -> Option<&TraceInfo> {
        self.traces.get(id as usize)
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Current score of a trace at stream position `now`.
    pub fn score(&self, id: u32, now: u64) -> f64 {
        let t = &self.traces[id as usize];
        let age = now.saturating_sub(t.last_seen);
        let decay = self
            .scoring
            .decay
            .powf(age as f64 / self.scoring.decay_window as f64);
        let base = t.len as f64 * t.count.min(self.scoring.count_cap) as f64 * decay;
        if t.replayed {
            base * self.scoring.replay_bonus
        } else {
            base
        }
    }

    /// Registers the repeats mined from a history slice starting at global
    /// index `slice_start`. Repeats are split at untraceable tokens, cut
    /// into consecutive chunks of at most the maximum trace length, and
    /// chunks shorter than the minimum are dropped. Registering a known
    /// path refreshes its statistics instead of adding a trace.
    pub fn ingest(&mut self, result: &RepeatResult, slice_start: u64) -> Vec<TraceIngest> {
        let mut out = Vec::new();
        for rep in &result.repeats {
            let occurrences = rep.occurrences.len() as u64;
            let last = *rep.occurrences.last().expect("repeats have occurrences");
            let last_end = slice_start + (last + rep.tokens.len()) as u64;
            for chunk in chunk_tokens(&rep.tokens, self.chunk_min, self.chunk_max) {
                out.push(self.register(chunk, occurrences, last_end));
            }
        }
        out
    }

    fn register(&mut self, tokens: &[Token], count: u64, last_seen: u64) -> TraceIngest {
        debug_assert!(!tokens.is_empty());
        debug_assert!(tokens.iter().all(|t| !t.is_untraceable()));
        let mut node = 0u32;
        for t in tokens {
            let next = self.nodes[node as usize].children.get(&t.0).copied();
            node = match next {
                Some(c) => c,
                None => {
                    let c = self.nodes.len() as u32;
                    self.nodes.push(Node::new());
                    self.nodes[node as usize].children.insert(t.0, c);
                    c
                }
            };
        }
        match self.nodes[node as usize].end {
            Some(id) => {
                let info = &mut self.traces[id as usize];
                info.count = info.count.max(count);
                info.last_seen = info.last_seen.max(last_seen);
                TraceIngest {
                    id,
                    len: info.len,
                    count: info.count,
                    new: false,
                }
            }
            None => {
                let id = self.traces.len() as u32;
                self.traces.push(TraceInfo {
                    len: tokens.len(),
                    count,
                    last_seen,
                    replayed: false,
                });
                self.nodes[node as usize].end = Some(id);
                TraceIngest {
                    id,
                    len: tokens.len(),
                    count,
                    new: true,
                }
            }
        }
    }

    /// Feeds the task at global index `index` through the matcher.
    pub fn advance(&mut self, task: TaskDescriptor, token: Token, index: u64) -> AdvanceOutput {
        debug_assert_eq!(self.pending_base + self.pending.len() as u64, index);
        self.pending.push_back(task);
        let now = index + 1;
        let mut done: Vec<CompletedMatch> = Vec::new();
        let mut survivors: Vec<Pointer> = Vec::with_capacity(self.pointers.len() + 1);

        let stepped: Vec<Pointer> = self.pointers.drain(..).collect();
        for p in stepped {
            match self.nodes[p.node as usize].children.get(&token.0).copied() {
                Some(child) => self.enter(child, p.start, p.passed, now, &mut done, &mut survivors),
                None => {
                    // a dying pointer surfaces every end it passed
                    for &(t, e) in &p.passed {
                        done.push(CompletedMatch {
                            trace: t,
                            start: p.start,
                            end: e,
                        });
                    }
                }
            }
        }
        if let Some(child) = self.nodes[0].children.get(&token.0).copied() {
            self.enter(child, index, Vec::new(), now, &mut done, &mut survivors);
        }
        self.pointers = survivors;

        let mut out = AdvanceOutput::default();
        self.drain_completed(done, now, &mut out);
        self.release_prefix(now, &mut out.events);
        out
    }

    /// Drops all live pointers and releases everything still held, plain.
    pub fn flush(&mut self) -> Vec<AnnotatedEvent> {
        self.pointers.clear();
        let mut events = Vec::new();
        let until = self.pending_base + self.pending.len() as u64;
        self.emit_plain_until(until, &mut events);
        events
    }

    fn enter(
        &mut self,
        node: u32,
        start: u64,
        mut passed: Vec<(u32, u64)>,
        now: u64,
        done: &mut Vec<CompletedMatch>,
        survivors: &mut Vec<Pointer>,
    ) {
        if let Some(t) = self.nodes[node as usize].end {
            let info = &mut self.traces[t as usize];
            info.count += 1;
            info.last_seen = now;
            if self.nodes[node as usize].children.is_empty() {
                // leaf: the match cannot grow, everything passed competes now
                for &(pt, pe) in &passed {
                    done.push(CompletedMatch {
                        trace: pt,
                        start,
                        end: pe,
                    });
                }
                done.push(CompletedMatch {
                    trace: t,
                    start,
                    end: now,
                });
                return;
            }
            passed.push((t, now));
        }
        survivors.push(Pointer { node, start, passed });
    }

    fn drain_completed(&mut self, mut done: Vec<CompletedMatch>, now: u64, out: &mut AdvanceOutput) {
        while let Some(pos) = self.best_match(&done, now) {
            let m = done.swap_remove(pos);
            debug_assert!(m.start >= self.pending_base);
            self.emit_plain_until(m.start, &mut out.events);
            let record = !self.traces[m.trace as usize].replayed;
            out.events.push(AnnotatedEvent::TraceBegin {
                id: m.trace,
                record,
            });
            let len = (m.end - m.start) as usize;
            for _ in 0..len {
                let t = self.pending.pop_front().expect("matched tasks are pending");
                self.pending_base += 1;
                out.events.push(AnnotatedEvent::Task(t));
            }
            out.events.push(AnnotatedEvent::TraceEnd { id: m.trace });
            self.traces[m.trace as usize].replayed = true;
            out.emitted.push(EmittedTrace {
                id: m.trace,
                start: m.start,
                len,
                record,
            });
            // tokens up to m.end are gone: completions reaching back into
            // them and pointers spanning them cannot be honored anymore
            done.retain(|o| o.start >= m.end);
            self.pointers.retain(|p| p.start >= m.end);
        }
    }

    fn best_match(&self, done: &[CompletedMatch], now: u64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, m) in done.iter().enumerate() {
            let s = self.score(m.trace, now);
            let better = match best {
                None => true,
                Some((j, bs)) => {
                    let b = &done[j];
                    s > bs
                        || (s == bs
                            && (m.trace < b.trace
                                || (m.trace == b.trace && m.start < b.start)))
                }
            };
            if better {
                best = Some((i, s));
            }
        }
        best.map(|(i, _)| i)
    }

    fn emit_plain_until(&mut self, until: u64, events: &mut Vec<AnnotatedEvent>) {
        while self.pending_base < until {
            let t = self.pending.pop_front().expect("pending covers the gap");
            self.pending_base += 1;
            events.push(AnnotatedEvent::Task(t));
        }
    }

    fn release_prefix(&mut self, now: u64, events: &mut Vec<AnnotatedEvent>) {
        let hold_from = self.pointers.iter().map(|p| p.start).min().unwrap_or(now);
        self.emit_plain_until(hold_from, events);
    }
}

fn chunk_tokens(tokens: &[Token], min: usize, max: Option<usize>) -> Vec<&[Token]> {
    let mut out = Vec::new();
    for segment in tokens.split(|t| t.is_untraceable()) {
        if segment.is_empty() {
            continue;
        }
        let width = max.unwrap_or(segment.len());
        for chunk in segment.chunks(width) {
            if chunk.len() >= min {
                out.push(chunk);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repeats::Repeat;

    fn task(name: &str) -> TaskDescriptor {
        TaskDescriptor::new(name, vec![])
    }

    fn tok(v: u64) -> Token {
        Token(v)
    }

    fn result_of(contents: &[(&[u64], &[usize])]) -> RepeatResult {
        RepeatResult {
            repeats: contents
                .iter()
                .map(|(tokens, occ)| Repeat {
                    tokens: tokens.iter().map(|&v| Token(v)).collect(),
                    occurrences: occ.to_vec(),
                })
                .collect(),
        }
    }

    fn replayer_with(contents: &[(&[u64], &[usize])], min: usize, max: Option<usize>) -> TraceReplayer {
        let mut r = TraceReplayer::new(ScoringParams::default(), min, max);
        r.ingest(&result_of(contents), 0);
        r
    }

    fn drive(r: &mut TraceReplayer, tokens: &[u64], base: u64) -> Vec<AnnotatedEvent> {
        let mut events = Vec::new();
        for (i, &v) in tokens.iter().enumerate() {
            let name = format!("t{v}");
            let out = r.advance(task(&name), tok(v), base + i as u64);
            events.extend(out.events);
        }
        events
    }

    fn shape(events: &[AnnotatedEvent]) -> String {
        events
            .iter()
            .map(|e| match e {
                AnnotatedEvent::Task(t) => t.task_name.clone(),
                AnnotatedEvent::TraceBegin { id, record } => {
                    format!("[{}{id}", if *record { "R" } else { "r" })
                }
                AnnotatedEvent::TraceEnd { .. } => "]".to_string(),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    #[test]
    fn records_then_replays() {
        let mut r = replayer_with(&[(&[1, 2, 3], &[0, 3])], 1, None);
        let events = drive(&mut r, &[1, 2, 3, 1, 2, 3], 0);
        assert_eq!(shape(&events), "[R0 t1 t2 t3 ] [r0 t1 t2 t3 ]");
    }

    #[test]
    fn held_tasks_release_plain_when_the_match_dies() {
        let mut r = replayer_with(&[(&[1, 2, 3], &[0, 3])], 1, None);
        let e1 = r.advance(task("a"), tok(1), 0);
        let e2 = r.advance(task("b"), tok(2), 1);
        assert!(e1.events.is_empty() && e2.events.is_empty());
        let e3 = r.advance(task("x"), tok(9), 2);
        assert_eq!(shape(&e3.events), "a b x");
    }

    #[test]
    fn longer_extension_wins_over_passed_prefix() {
        let mut r = replayer_with(&[(&[1, 2], &[0, 2]), (&[1, 2, 3, 4], &[0, 4])], 1, None);
        let events = drive(&mut r, &[1, 2, 3, 4], 0);
        assert_eq!(shape(&events), "[R1 t1 t2 t3 t4 ]");
    }

    #[test]
    fn passed_prefix_surfaces_when_extension_fails() {
        let mut r = replayer_with(&[(&[1, 2], &[0, 2]), (&[1, 2, 3, 4], &[0, 4])], 1, None);
        let events = drive(&mut r, &[1, 2, 9], 0);
        assert_eq!(shape(&events), "[R0 t1 t2 ] t9");
    }

    #[test]
    fn eager_leaf_completion_has_no_lookahead_latency() {
        let mut r = replayer_with(&[(&[5, 6], &[0, 2])], 1, None);
        let out = r.advance(task("a"), tok(5), 0);
        assert!(out.events.is_empty());
        let out = r.advance(task("b"), tok(6), 1);
        assert_eq!(shape(&out.events), "[R0 a b ]");
    }

    #[test]
    fn competing_completions_prefer_higher_score() {
        // [1,2,3] (len 3) and [2,3] (len 2) complete on the same token
        let mut r = replayer_with(&[(&[1, 2, 3], &[0, 3]), (&[2, 3], &[10, 12])], 1, None);
        let events = drive(&mut r, &[1, 2, 3], 0);
        assert_eq!(shape(&events), "[R0 t1 t2 t3 ]");
        let t1 = r.trace(1).unwrap();
        assert_eq!(t1.count, 3, "mined twice, passed once live");
        assert!(!t1.replayed);
    }

    #[test]
    fn untraceable_tokens_split_ingested_repeats() {
        let u = Token::UNTRACEABLE_BIT | 7;
        let mut r = TraceReplayer::new(ScoringParams::default(), 2, None);
        let ingests = r.ingest(&result_of(&[(&[1, 2, u, 3, 4, 5], &[0, 6])]), 0);
        assert_eq!(ingests.len(), 2);
        assert_eq!(r.trace(0).unwrap().len, 2);
        assert_eq!(r.trace(1).unwrap().len, 3);
    }

    #[test]
    fn chunking_respects_max_and_min() {
        let tokens: Vec<Token> = (0..9).map(|i| Token(100 + i)).collect();
        let chunks = chunk_tokens(&tokens, 2, Some(4));
        let lens: Vec<usize> = chunks.iter().map(|c| c.len()).collect();
        assert_eq!(lens, vec![4, 4]);
    }

    #[test]
    fn reingestion_refreshes_instead_of_duplicating() {
        let mut r = TraceReplayer::new(ScoringParams::default(), 1, None);
        let first = r.ingest(&result_of(&[(&[1, 2], &[0, 2])]), 0);
        assert!(first[0].new);
        let again = r.ingest(&result_of(&[(&[1, 2], &[5, 9])]), 100);
        assert!(!again[0].new);
        assert_eq!(r.trace_count(), 1);
        let info = r.trace(0).unwrap();
        assert_eq!(info.last_seen, 111);
        assert_eq!(info.count, 2);
    }

    #[test]
    fn flush_releases_held_tasks_plain() {
        let mut r = replayer_with(&[(&[1, 2, 3], &[0, 3])], 1, None);
        let e1 = r.advance(task("a"), tok(1), 0);
        let e2 = r.advance(task("b"), tok(2), 1);
        assert!(e1.events.is_empty() && e2.events.is_empty());
        let events = r.flush();
        assert_eq!(shape(&events), "a b");
        assert_eq!(r.pending_len(), 0);
    }

    #[test]
    fn scores_decay_with_age_and_reward_replay() {
        let mut r = TraceReplayer::new(ScoringParams::default(), 1, None);
        r.ingest(&result_of(&[(&[1, 2, 3, 4], &[0, 4])]), 0);
        let fresh = r.score(0, 8);
        let stale = r.score(0, 8 + 200);
        assert!(fresh > stale);
        let expected = 4.0 * 2.0 * 0.99f64.powf(2.0);
        assert!((stale - expected).abs() < 1e-12);
    }
}
