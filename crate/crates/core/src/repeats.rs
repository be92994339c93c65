//! Mining a token sequence for repeated sub-sequences.
//!
//! Candidate repeats come from adjacent suffix-array entries: each pair
//! (s1, s2) with LCP p > 0 contributes exactly two candidate intervals in
//! O(1). With a = min(s1, s2) and d = |s2 - s1|:
//!
//! * d >= p: the occurrences cannot overlap; candidates are (p, a) and
//!   (p, a + d).
//! * d < p: the full match self-overlaps with period d. Truncate to
//!   l = (p + d) / 2 rounded down to a multiple of d; the candidates are the
//!   two abutting occurrences (l, a) and (l, a + l).
//!
//! Adjacent pairs alone can miss the longest repeat with disjoint
//! occurrences when its occurrences sit in different periodic runs (in
//! "aabaabaaabaa" the length-5 repeat at {0, 7} spans a period-3 and a
//! period-4 run, while every adjacent pair stays inside one run). A second
//! pass therefore computes that longest length exactly: binary search over
//! the LCP threshold, where a threshold l is feasible iff some maximal run
//! of adjacent entries with LCP >= l spans positions at least l apart. The
//! witness pair is injected as one more candidate pair, so the longest
//! mined length always equals the longest sub-sequence with two disjoint
//! occurrences.
//!
//! Candidates are deduplicated by content (double polynomial hash keyed
//! with the length), ordered by (length desc, earliest occurrence asc,
//! start asc), and selected greedily into pairwise disjoint intervals.
//! Because lengths are non-increasing at selection time, an interval is
//! free iff both its endpoints are unmarked. A content that keeps only one
//! interval stays in the result: its content provably recurs, so it is
//! still a useful trace candidate downstream, and keeping it lets perfectly
//! periodic sequences of odd period count tile completely.

use std::collections::HashMap;

use crate::suffix::{build_suffix_structures, SuffixStructures};
use crate::token::Token;

/// One mined repeat: its content and the disjoint occurrence starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Repeat {
    pub tokens: Vec<Token>,
    pub occurrences: Vec<usize>,
}

impl Repeat {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// All repeats mined from one sequence, in selection order
/// (longest first, then earliest occurrence).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RepeatResult {
    pub repeats: Vec<Repeat>,
}

impl RepeatResult {
    /// Total number of positions covered by occurrence intervals.
    pub fn coverage(&self) -> usize {
        self.repeats
            .iter()
            .map(|r| r.len() * r.occurrences.len())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.repeats.is_empty()
    }
}

/// Finds pairwise-disjoint repeated sub-sequences of length >= `min_len`.
///
/// Cost is O(n log n) in the sequence length. Every repeat's content occurs
/// at least twice without overlap somewhere in `s`, and the longest repeat
/// in the result is as long as any sub-sequence with two disjoint
/// occurrences. Sequences shorter than `2 * min_len` cannot contain a
/// repeat and yield an empty result.
pub fn find_repeats(s: &[Token], min_len: usize) -> RepeatResult {
    let min_len = min_len.max(1);
    let n = s.len();
    if n < 2 * min_len {
        return RepeatResult::default();
    }
    let ss = build_suffix_structures(s);
    let cands = generate_candidates(s, &ss, min_len as u32);
    let chosen = select_disjoint(&cands, n);
    assemble(s, &chosen)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Candidate {
    len: u32,
    id: u32,
    start: u32,
}

struct CandidateSet {
    candidates: Vec<Candidate>,
    // per content id: smallest occurrence start seen; totally orders groups
    // of one length because equal (len, start) forces equal content
    min_start: Vec<u32>,
}

impl CandidateSet {
    fn push_pair(
        &mut self,
        hasher: &SubstringHasher,
        s: &[Token],
        ids: &mut HashMap<(u32, u64, u64), u32>,
        len: u32,
        first: u32,
        second: u32,
    ) {
        let key = hasher.key(first, len);
        let id = *ids.entry((len, key.0, key.1)).or_insert_with(|| {
            self.min_start.push(first);
            (self.min_start.len() - 1) as u32
        });
        let entry = &mut self.min_start[id as usize];
        *entry = (*entry).min(first);
        #[cfg(debug_assertions)]
        {
            // cheap canary against hash or index bugs; a real collision of
            // the double 61-bit hash is not a realistic event
            let rep = *entry as usize;
            let (a, l) = (first as usize, len as usize);
            let probe = l.min(16);
            debug_assert_eq!(&s[rep..rep + probe], &s[a..a + probe]);
            debug_assert_eq!(s[rep + l - 1], s[a + l - 1], "content hash collision");
        }
        let _ = s;
        self.candidates.push(Candidate { len, id, start: first });
        self.candidates.push(Candidate { len, id, start: second });
    }
}

fn generate_candidates(s: &[Token], ss: &SuffixStructures, min_len: u32) -> CandidateSet {
    let hasher = SubstringHasher::new(s);
    let mut ids: HashMap<(u32, u64, u64), u32> = HashMap::new();
    let mut set = CandidateSet {
        candidates: Vec::with_capacity(2 * ss.sa.len()),
        min_start: Vec::new(),
    };

    for w in 0..ss.lcp.len() {
        let p = ss.lcp[w];
        if p == 0 {
            continue;
        }
        let (s1, s2) = (ss.sa[w], ss.sa[w + 1]);
        let a = s1.min(s2);
        let d = s1.abs_diff(s2);
        let (len, second) = if d >= p {
            (p, a + d)
        } else {
            let l = ((p + d) / 2) / d * d;
            (l, a + l)
        };
        if len >= min_len {
            set.push_pair(&hasher, s, &mut ids, len, a, second);
        }
    }
    if let Some((len, x, y)) = longest_disjoint(ss) {
        if len >= min_len {
            set.push_pair(&hasher, s, &mut ids, len, x, y);
        }
    }
    set
}

/// Length and one witness pair of the longest sub-sequence with two
/// disjoint occurrences, found by binary search on the LCP threshold.
///
/// Any two occurrences of a length-l sub-sequence are suffixes whose whole
/// suffix-array interval has adjacent LCPs >= l, so l is feasible iff some
/// maximal run of entries joined by LCPs >= l spans positions >= l apart.
/// Feasibility is monotone in l (truncate a longer witness).
fn longest_disjoint(ss: &SuffixStructures) -> Option<(u32, u32, u32)> {
    let max_lcp = ss.lcp.iter().copied().max().unwrap_or(0);
    if max_lcp == 0 {
        return None;
    }
    // spread >= 1 is automatic for distinct suffixes, so max_lcp >= 1 is
    // always feasible and the search space [1, max_lcp] is never empty
    let (mut lo, mut hi) = (1u32, max_lcp);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if witness_at(ss, mid).is_some() {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let (x, y) = witness_at(ss, lo).expect("feasible threshold lost a witness");
    Some((lo, x, y))
}

fn witness_at(ss: &SuffixStructures, l: u32) -> Option<(u32, u32)> {
    let mut lo_pos = ss.sa[0];
    let mut hi_pos = ss.sa[0];
    for (i, &p) in ss.lcp.iter().enumerate() {
        let pos = ss.sa[i + 1];
        if p >= l {
            lo_pos = lo_pos.min(pos);
            hi_pos = hi_pos.max(pos);
            if hi_pos - lo_pos >= l {
                return Some((lo_pos, hi_pos));
            }
        } else {
            lo_pos = pos;
            hi_pos = pos;
        }
    }
    None
}

fn select_disjoint(cands: &CandidateSet, n: usize) -> Vec<Candidate> {
    let mut order = cands.candidates.clone();
    order.sort_unstable_by(|x, y| {
        y.len
            .cmp(&x.len)
            .then_with(|| cands.min_start[x.id as usize].cmp(&cands.min_start[y.id as usize]))
            .then_with(|| x.start.cmp(&y.start))
    });
    let mut covered = vec![false; n];
    let mut chosen = Vec::new();
    for c in order {
        let (lo, hi) = (c.start as usize, (c.start + c.len) as usize);
        // lengths are non-increasing, so any earlier interval crossing
        // (lo, hi) must contain one of its endpoints; this also drops
        // duplicate candidates of one (id, start)
        if covered[lo] || covered[hi - 1] {
            continue;
        }
        covered[lo..hi].fill(true);
        chosen.push(c);
    }
    chosen
}

fn assemble(s: &[Token], chosen: &[Candidate]) -> RepeatResult {
    let mut index_of: HashMap<u32, usize> = HashMap::new();
    let mut repeats: Vec<Repeat> = Vec::new();
    for c in chosen {
        let idx = *index_of.entry(c.id).or_insert_with(|| {
            repeats.push(Repeat {
                tokens: s[c.start as usize..(c.start + c.len) as usize].to_vec(),
                occurrences: Vec::new(),
            });
            repeats.len() - 1
        });
        repeats[idx].occurrences.push(c.start as usize);
    }
    RepeatResult { repeats }
}

const M61: u64 = (1 << 61) - 1;
const BASE1: u64 = 0x1a2b_3c4d_5e6f_7081;
const BASE2: u64 = 0x0f1e_2d3c_4b5a_6978;

fn fold61(x: u64) -> u64 {
    let s = (x & M61) + (x >> 61);
    if s >= M61 {
        s - M61
    } else {
        s
    }
}

fn mul61(a: u64, b: u64) -> u64 {
    let t = a as u128 * b as u128;
    fold61((t & M61 as u128) as u64 + (t >> 61) as u64)
}

fn sub61(a: u64, b: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + M61 - b
    }
}

struct PolyLine {
    pow: Vec<u64>,
    pre: Vec<u64>,
}

impl PolyLine {
    fn new(s: &[Token], base: u64, map: impl Fn(u64) -> u64) -> PolyLine {
        let mut pow = Vec::with_capacity(s.len() + 1);
        let mut pre = Vec::with_capacity(s.len() + 1);
        pow.push(1);
        pre.push(0);
        for (i, t) in s.iter().enumerate() {
            pow.push(mul61(pow[i], base));
            pre.push(fold61(mul61(pre[i], base) + map(t.0)));
        }
        PolyLine { pow, pre }
    }

    fn sub(&self, start: u32, len: u32) -> u64 {
        let (a, b) = (start as usize, (start + len) as usize);
        sub61(self.pre[b], mul61(self.pre[a], self.pow[b - a]))
    }
}

struct SubstringHasher {
    line1: PolyLine,
    line2: PolyLine,
}

impl SubstringHasher {
    fn new(s: &[Token]) -> SubstringHasher {
        SubstringHasher {
            line1: PolyLine::new(s, BASE1, fold61),
            line2: PolyLine::new(s, BASE2, |x| {
                fold61(x.wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(31))
            }),
        }
    }

    fn key(&self, start: u32, len: u32) -> (u64, u64) {
        (self.line1.sub(start, len), self.line2.sub(start, len))
    }
}
