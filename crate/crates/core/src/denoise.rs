//! Choosing between two source-separated channels and the original audio by
//! comparing their transcripts against the transcript of the noisy original.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.1;

/// Differences within this distance of the threshold count as equal to it,
/// so decimal inputs like `0.45 - 0.35` do not cross the boundary through
/// binary rounding.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;

/// Levenshtein distance over Unicode scalar values.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = alloc::vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - distance / max(len)`, with two empty strings fully similar.
pub fn similarity(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - edit_distance(a, b) as f64 / longest as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Choice {
    Separated0,
    Separated1,
    Original,
}

impl Choice {
    pub fn as_str(self) -> &'static str {
        match self {
            Choice::Separated0 => "separated0",
            Choice::Separated1 => "separated1",
            Choice::Original => "original",
        }
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionDecision {
    pub choice: Choice,
    pub sim0: f64,
    pub sim1: f64,
}

/// Picks the more similar channel when the similarities differ by strictly
/// more than `threshold` (see [`BOUNDARY_TOLERANCE`]); otherwise keeps the
/// original.
pub fn select_audio(sim0: f64, sim1: f64, threshold: f64) -> Result<SelectionDecision> {
    for s in [sim0, sim1] {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Domain(s));
        }
    }
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::Config(alloc::format!("threshold {threshold} must be non-negative")));
    }
    let choice = if (sim0 - sim1).abs() - threshold > BOUNDARY_TOLERANCE {
        if sim0 > sim1 {
            Choice::Separated0
        } else {
            Choice::Separated1
        }
    } else {
        Choice::Original
    };
    Ok(SelectionDecision { choice, sim0, sim1 })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptTriple {
    /// Transcript of the noisy original.
    pub text_temp: String,
    pub text_id0: String,
    pub text_id1: String,
}

pub fn denoise_decide(triple: &TranscriptTriple, threshold: f64) -> Result<SelectionDecision> {
    let sim0 = similarity(&triple.text_id0, &triple.text_temp);
    let sim1 = similarity(&triple.text_id1, &triple.text_temp);
    select_audio(sim0, sim1, threshold)
}
