//! Small, obviously-correct reference implementations used to check the
//! real ones. Everything here favors clarity over speed.
// not every test target uses every helper
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use retrace_core::token::Token;

/// Longest common extension of the suffixes at i and j, by direct scan.
pub fn lce(s: &[Token], i: usize, j: usize) -> usize {
    s[i..].iter().zip(&s[j..]).take_while(|(a, b)| a == b).count()
}

/// Length of the longest sub-sequence occurring at least twice without
/// overlap: max over i < j of min(lce(i, j), j - i).
pub fn longest_disjoint_repeat(s: &[Token]) -> usize {
    let n = s.len();
    let mut best = 0;
    for i in 0..n {
        for j in i + 1..n {
            best = best.max(lce(s, i, j).min(j - i));
        }
    }
    best
}

/// Longest repeat actually reported by a mined result (0 when none).
pub fn mined_longest(result: &retrace_core::repeats::RepeatResult) -> usize {
    result.repeats.iter().map(|r| r.tokens.len()).max().unwrap_or(0)
}

/// All strings of the given length over alphabet {1..=sigma}.
pub fn all_strings(sigma: u64, len: usize) -> Vec<Vec<Token>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len() * sigma as usize);
        for prefix in &out {
            for c in 1..=sigma {
                let mut s = prefix.clone();
                s.push(Token(c));
                next.push(s);
            }
        }
        out = next;
    }
    out
}

/// A seeded random token string with values in 1..=sigma.
pub fn random_string(rng: &mut StdRng, len: usize, sigma: u64) -> Vec<Token> {
    (0..len).map(|_| Token(rng.random_range(1..=sigma))).collect()
}

pub fn seeded(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// A random unit that is not itself a power of a shorter string, so the
/// period of `unit^k` is exactly `unit`.
pub fn primitive_unit(rng: &mut StdRng, len: usize, sigma: u64) -> Vec<Token> {
    loop {
        let u = random_string(rng, len, sigma);
        let primitive = (1..len)
            .filter(|&d| len.is_multiple_of(d))
            .all(|d| (d..len).any(|i| u[i] != u[i - d]));
        if primitive {
            return u;
        }
    }
}
