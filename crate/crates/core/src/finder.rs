//! History buffering and scheduled mining of the token stream.
//!
//! Tokens accumulate in a bounded buffer of capacity B. Every C tokens
//! (C divides B) a mining job is issued over a history slice whose extent
//! follows a ruler schedule: at the k-th token of the buffer, the slice is
//! the last `2^ruler(k/C) * C` tokens, so short slices are mined often and
//! long slices rarely, and every token is eventually part of a large slice.
//! At k = B the slice is the whole buffer and the buffer is then cleared.
//!
//! Jobs run on worker threads, but wall-clock completion never influences
//! results: each job also has a simulated latency in tokens, and a job is
//! ingested exactly when `processed >= issued_at + wait_count`, in issue
//! order. If the simulated latency exceeds the current wait count the job
//! reports a wait event; the engine reacts by raising the wait count, which
//! delays future ingestions enough to hide that latency.

use std::collections::VecDeque;
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::thread;

use crate::repeats::{find_repeats, RepeatResult};
use crate::token::Token;

/// Number of trailing zeros of k (the ruler sequence), defined for k >= 1.
pub fn ruler(k: u64) -> u32 {
    assert!(k >= 1, "ruler is defined for k >= 1");
    k.trailing_zeros()
}

/// Slice of history mined at stream position k under cadence c: the
/// half-open interval `[k - 2^ruler(k/c) * c, k)`. `None` when k is not a
/// multiple of c (no job is issued there).
pub fn analysis_slice(k: u64, c: u64) -> Option<(u64, u64)> {
    assert!(c >= 1, "cadence must be positive");
    if k == 0 || !k.is_multiple_of(c) {
        return None;
    }
    let len = (1u64 << ruler(k / c)) * c;
    Some((k - len, k))
}

/// Simulated time, in tokens, between issuing a mining job and its result
/// being available for ingestion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LatencyModel {
    /// Results are available immediately.
    Immediate,
    /// Every job takes the same number of tokens.
    FixedTokens(u64),
    /// Per-job pseudorandom latency in `0..=max_tokens`, a pure function of
    /// (seed, job id).
    SeededTokens { seed: u64, max_tokens: u64 },
}

impl LatencyModel {
    pub fn tokens_for(&self, job_id: u64) -> u64 {
        match *self {
            LatencyModel::Immediate => 0,
            LatencyModel::FixedTokens(n) => n,
            LatencyModel::SeededTokens { seed, max_tokens } => {
                if max_tokens == 0 {
                    0
                } else {
                    splitmix64(seed ^ job_id.wrapping_mul(0x9e37_79b9_7f4a_7c15))
                        % (max_tokens + 1)
                }
            }
        }
    }
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// A mining job waited on its simulated result: latency exceeded the wait
/// count in force when the job came due.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WaitEvent {
    pub job_id: u64,
    /// The simulated latency that was observed while waiting.
    pub lag: u64,
}

/// A mining job issued over a history slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubmittedJob {
    pub job_id: u64,
    /// Global token indices of the mined slice.
    pub slice: (u64, u64),
}

/// A completed job handed to the caller for ingestion.
#[derive(Debug)]
pub struct IngestedJob {
    pub job_id: u64,
    /// Global index of the first token of the mined slice; occurrence
    /// offsets in `result` are relative to it.
    pub slice_start: u64,
    pub result: RepeatResult,
    /// Present iff the simulated latency exceeded the wait count.
    pub wait: Option<WaitEvent>,
}

struct PendingJob {
    id: u64,
    issued_at: u64,
    latency: u64,
    slice_start: u64,
}

/// Buffers history and runs the mining schedule.
pub struct TraceFinder {
    batch_size: usize,
    cadence: usize,
    min_len: usize,
    latency: LatencyModel,
    buffer: Vec<Token>,
    /// Global index of buffer[0].
    base: u64,
    appended: u64,
    wait_count: u64,
    next_job: u64,
    queue: VecDeque<PendingJob>,
    pool: WorkerPool,
}

impl TraceFinder {
    /// `batch_size` is B, `cadence` is C; B must be a positive multiple of C.
    pub fn new(
        batch_size: usize,
        cadence: usize,
        min_len: usize,
        latency: LatencyModel,
        workers: usize,
    ) -> TraceFinder {
        assert!(cadence >= 1 && batch_size >= cadence && batch_size.is_multiple_of(cadence));
        TraceFinder {
            batch_size,
            cadence,
            min_len,
            latency,
            buffer: Vec::with_capacity(batch_size),
            base: 0,
            appended: 0,
            wait_count: 0,
            next_job: 0,
            queue: VecDeque::new(),
            pool: WorkerPool::new(workers.max(1)),
        }
    }

    pub fn wait_count(&self) -> u64 {
        self.wait_count
    }

    /// Appends one token; issues a mining job when the schedule says so.
    pub fn on_token(&mut self, t: Token) -> Option<SubmittedJob> {
        self.buffer.push(t);
        self.appended += 1;
        let k = self.buffer.len();
        if !k.is_multiple_of(self.cadence) {
            return None;
        }
        let (lo, hi) = if k == self.batch_size {
            // at capacity the whole buffer is mined regardless of the ruler
            (0, k)
        } else {
            let (lo, hi) = analysis_slice(k as u64, self.cadence as u64)
                .expect("k is a positive multiple of the cadence");
            (lo as usize, hi as usize)
        };
        let id = self.next_job;
        self.next_job += 1;
        self.pool
            .submit(id, self.buffer[lo..hi].to_vec(), self.min_len);
        self.queue.push_back(PendingJob {
            id,
            issued_at: self.appended,
            latency: self.latency.tokens_for(id),
            slice_start: self.base + lo as u64,
        });
        let job = SubmittedJob {
            job_id: id,
            slice: (self.base + lo as u64, self.base + hi as u64),
        };
        if k == self.batch_size {
            self.buffer.clear();
            self.base = self.appended;
        }
        Some(job)
    }

    /// Returns every job due at `processed` tokens, in issue order. A job is
    /// due `wait_count` tokens after issue; the simulated latency never moves
    /// the ingestion point, it only flags a wait when it was not hidden.
    pub fn poll_ingestible(&mut self, processed: u64) -> Vec<IngestedJob> {
        let mut out = Vec::new();
        while let Some(front) = self.queue.front() {
            if processed < front.issued_at + self.wait_count {
                break;
            }
            let job = self.queue.pop_front().expect("front exists");
            let wait = (job.latency > self.wait_count).then_some(WaitEvent {
                job_id: job.id,
                lag: job.latency,
            });
            let result = self.pool.collect(job.id);
            out.push(IngestedJob {
                job_id: job.id,
                slice_start: job.slice_start,
                result,
                wait,
            });
        }
        out
    }

    /// Raises the wait count after an observed lag:
    /// `wait_count = max(wait_count, lag) + cadence`.
    pub fn raise_wait_count(&mut self, lag: u64) -> u64 {
        self.wait_count = self.wait_count.max(lag) + self.cadence as u64;
        self.wait_count
    }
}

struct WorkerPool {
    job_tx: Option<mpsc::Sender<(u64, Vec<Token>, usize)>>,
    result_rx: mpsc::Receiver<(u64, RepeatResult)>,
    ready: std::collections::HashMap<u64, RepeatResult>,
    handles: Vec<thread::JoinHandle<()>>,
}

impl WorkerPool {
    fn new(workers: usize) -> WorkerPool {
        let (job_tx, job_rx) = mpsc::channel::<(u64, Vec<Token>, usize)>();
        let (result_tx, result_rx) = mpsc::channel();
        let job_rx = Arc::new(Mutex::new(job_rx));
        let mut handles = Vec::with_capacity(workers);
        for _ in 0..workers {
            let job_rx = Arc::clone(&job_rx);
            let result_tx = result_tx.clone();
            handles.push(thread::spawn(move || loop {
                let job = job_rx.lock().expect("pool lock").recv();
                match job {
                    Ok((id, tokens, min_len)) => {
                        let result = find_repeats(&tokens, min_len);
                        if result_tx.send((id, result)).is_err() {
                            return;
                        }
                    }
                    Err(_) => return,
                }
            }));
        }
        WorkerPool {
            job_tx: Some(job_tx),
            result_rx,
            ready: std::collections::HashMap::new(),
            handles,
        }
    }

    fn submit(&self, id: u64, tokens: Vec<Token>, min_len: usize) {
        self.job_tx
            .as_ref()
            .expect("pool is live")
            .send((id, tokens, min_len))
            .expect("workers outlive submissions");
    }

    /// Blocks until job `id` has a result. Results may arrive out of order.
    fn collect(&mut self, id: u64) -> RepeatResult {
        if let Some(r) = self.ready.remove(&id) {
            return r;
        }
        loop {
            let (got, result) = self
                .result_rx
                .recv()
                .expect("a submitted job always produces a result");
            if got == id {
                return result;
            }
            self.ready.insert(got, result);
        }
    }
}

impl Drop for WorkerPool {
    fn drop(&mut self) {
        self.job_tx.take();
        for h in self.handles.drain(..) {
            let _ = h.join();
        }
    }
}
