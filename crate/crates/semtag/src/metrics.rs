//! Content Preservation Ratio (CPR) over character bigram multisets.
//!
//! CPR compares the multiset of consecutive character pairs of an input
//! text to that of a candidate output. Bigram counts are order-insensitive
//! beyond adjacency, which keeps the metric robust to the line reflowing
//! a cleaning model legitimately performs on two-column OCR text, where an
//! alignment-based distance would punish every moved line.

use std::collections::HashMap;

/// Multiset of character bigrams with occurrence counts.
///
/// `total` is the sum of all counts: for a text of `L` characters it is
/// `max(L - 1, 0)`. Absent bigrams mean count zero; the map never stores
/// zero counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BigramProfile {
    counts: HashMap<(char, char), u64>,
    total: u64,
}

impl BigramProfile {
    /// Occurrence count for one bigram.
    pub fn count(&self, bigram: (char, char)) -> u64 {
        self.counts.get(&bigram).copied().unwrap_or(0)
    }

    /// Sum of all bigram counts.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct bigrams.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    /// Iterate over (bigram, count) pairs in unspecified order.
    pub fn iter(&self) -> impl Iterator<Item = (&(char, char), &u64)> {
        self.counts.iter()
    }
}

/// Result of comparing an output profile against an input profile.
///
/// `omissions` is the bigram mass present in the input but missing from
/// the output; `additions` is the mass present in the output but not in
/// the input. Their sum is the total absolute count difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreservationScore {
    pub cpr: f64,
    pub omissions: u64,
    pub additions: u64,
}

/// Collapse every run of whitespace to a single space and trim the ends.
///
/// Cleaning rewraps two-column layouts into one column, so line-break
/// placement must not be penalized. Case and punctuation pass through
/// unchanged: OCR correction is part of what the preservation score
/// should measure.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_space = true; // swallow leading whitespace
    for ch in text.chars() {
        if ch.is_whitespace() {
            if !in_space {
                out.push(' ');
                in_space = true;
            }
        } else {
            out.push(ch);
            in_space = false;
        }
    }
    if out.ends_with(' ') {
        out.pop();
    }
    out
}

/// Count consecutive character pairs of `text`.
///
/// Bigrams are over Unicode scalar values, not bytes, so accented
/// characters count as single units. The caller is expected to have
/// normalized the text first when scoring pipeline outputs.
pub fn bigram_profile(text: &str) -> BigramProfile {
    let mut counts = HashMap::new();
    let mut total = 0u64;
    let mut chars = text.chars();
    if let Some(mut prev) = chars.next() {
        for ch in chars {
            *counts.entry((prev, ch)).or_insert(0) += 1;
            total += 1;
            prev = ch;
        }
    }
    BigramProfile { counts, total }
}

/// Content Preservation Ratio between an input and an output profile.
///
/// With `S = Σ_b c_in(b)` and `D = Σ_b |c_in(b) − c_out(b)|` the score is
/// `(S − D) / S`, clamped to `[0, 1]`. The transposed ratio `S / (S − D)`
/// is not a usable score: it exceeds 1 as soon as any bigram count
/// differs, so the subtracted-difference orientation is used instead.
///
/// ```
/// use semtag::metrics::{bigram_profile, cpr};
///
/// let input = bigram_profile("abcd");
/// let output = bigram_profile("abce");
/// let score = cpr(&input, &output);
/// assert!((score.cpr - 1.0 / 3.0).abs() < 1e-12);
///
/// // The transposed ratio is unbounded: here S = 3, D = 2 gives 3.0.
/// let s = input.total() as f64;
/// let d = (score.omissions + score.additions) as f64;
/// assert_eq!(s / (s - d), 3.0);
/// assert!(s / (s - d) > 1.0);
/// ```
///
/// When the input has no bigrams at all (`S = 0`), an equally empty
/// output scores 1 (nothing to preserve) and a non-empty one scores 0.
pub fn cpr(input: &BigramProfile, output: &BigramProfile) -> PreservationScore {
    let mut omissions = 0u64;
    let mut additions = 0u64;
    for (bigram, &c_in) in input.counts.iter() {
        let c_out = output.count(*bigram);
        if c_in > c_out {
            omissions += c_in - c_out;
        } else {
            additions += c_out - c_in;
        }
    }
    for (bigram, &c_out) in output.counts.iter() {
        if !input.counts.contains_key(bigram) {
            additions += c_out;
        }
    }

    let s = input.total;
    let ratio = if s == 0 {
        if output.total == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        let d = omissions + additions;
        ((s as f64 - d as f64) / s as f64).clamp(0.0, 1.0)
    };

    PreservationScore {
        cpr: ratio,
        omissions,
        additions,
    }
}
