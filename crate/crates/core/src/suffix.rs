//! Suffix array and LCP array over token sequences.
//!
//! Prefix doubling with a counting-sort pass per round, O(n log n) overall,
//! directly over the 64-bit token alphabet (tokens are rank-compressed by an
//! initial sort, so alphabet size never matters again). LCP via the
//! rank-scan construction, O(n).

use crate::token::Token;

/// Suffix array and its adjacent-pair LCP array.
///
/// `sa` holds suffix start positions in lexicographic order of suffixes;
/// `lcp[i]` is the longest common prefix of the suffixes at `sa[i]` and
/// `sa[i + 1]`, so `lcp` is one shorter than `sa` (empty when n <= 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixStructures {
    pub sa: Vec<u32>,
    pub lcp: Vec<u32>,
}

pub fn build_suffix_structures(s: &[Token]) -> SuffixStructures {
    let sa = suffix_array(s);
    let lcp = lcp_array(s, &sa);
    SuffixStructures { sa, lcp }
}

pub fn suffix_array(s: &[Token]) -> Vec<u32> {
    let n = s.len();
    assert!(n < u32::MAX as usize, "sequence too long for u32 indices");
    if n == 0 {
        return Vec::new();
    }

    let mut sa: Vec<u32> = (0..n as u32).collect();
    sa.sort_unstable_by_key(|&i| s[i as usize]);
    let mut rank = vec![0u32; n];
    let mut max_rank = 0u32;
    for w in 1..n {
        if s[sa[w] as usize] != s[sa[w - 1] as usize] {
            max_rank += 1;
        }
        rank[sa[w] as usize] = max_rank;
    }

    let mut tmp: Vec<u32> = vec![0; n];
    let mut next_rank = vec![0u32; n];
    let mut counts: Vec<u32> = Vec::new();
    let mut k = 1usize;
    while (max_rank as usize) < n - 1 && k < n {
        // order by second key: suffixes whose second half is empty sort first,
        // the rest inherit the previous round's order shifted left by k
        let mut p = 0;
        for i in (n - k)..n {
            tmp[p] = i as u32;
            p += 1;
        }
        for &i in sa.iter() {
            if i as usize >= k {
                tmp[p] = i - k as u32;
                p += 1;
            }
        }
        // stable counting sort by first key finishes the radix pass
        counts.clear();
        counts.resize(max_rank as usize + 2, 0);
        for &i in tmp.iter() {
            counts[rank[i as usize] as usize + 1] += 1;
        }
        for j in 1..counts.len() {
            counts[j] += counts[j - 1];
        }
        for &i in tmp.iter() {
            let r = rank[i as usize] as usize;
            sa[counts[r] as usize] = i;
            counts[r] += 1;
        }

        let pair = |i: usize| {
            (
                rank[i],
                if i + k < n { rank[i + k] as i64 } else { -1 },
            )
        };
        next_rank[sa[0] as usize] = 0;
        max_rank = 0;
        for w in 1..n {
            if pair(sa[w] as usize) != pair(sa[w - 1] as usize) {
                max_rank += 1;
            }
            next_rank[sa[w] as usize] = max_rank;
        }
        std::mem::swap(&mut rank, &mut next_rank);
        k <<= 1;
    }
    sa
}

pub fn lcp_array(s: &[Token], sa: &[u32]) -> Vec<u32> {
    let n = s.len();
    if n <= 1 {
        return Vec::new();
    }
    let mut rank = vec![0u32; n];
    for (r, &i) in sa.iter().enumerate() {
        rank[i as usize] = r as u32;
    }
    let mut lcp = vec![0u32; n - 1];
    let mut h = 0usize;
    // h decreases by at most one per text position, so the scan is linear
    for i in 0..n {
        let r = rank[i] as usize;
        if r > 0 {
            let j = sa[r - 1] as usize;
            while i + h < n && j + h < n && s[i + h] == s[j + h] {
                h += 1;
            }
            lcp[r - 1] = h as u32;
            h = h.saturating_sub(1);
        } else {
            h = 0;
        }
    }
    lcp
}
