//! Sequential pattern mining over per-student event sequences.
//!
//! A pattern is an ordered list of event-type tokens; a sequence contains
//! it when the tokens occur in that order, not necessarily adjacent. Mining
//! is level-wise: frequent length-1 patterns, then length-`k` candidates
//! from pairs of frequent length-`(k-1)` patterns where dropping the first
//! token of one equals dropping the last token of the other, pruned by the
//! frequency of every `(k-1)`-subsequence and counted by a scan.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::engagement::EventRecord;
use crate::error::Result;
use crate::metrics::{check_fraction, min_support_count, Support};
use crate::par;

/// Default cap on pattern length.
pub const DEFAULT_MAX_LEN: usize = 4;

/// One student's events in chronological order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSequence {
    pub student_id: String,
    pub events: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequencePattern {
    pub elements: Vec<String>,
    pub support: Support,
}

/// Groups records by student (ascending id) and orders each student's
/// events by timestamp, keeping input order on ties.
pub fn build_sequences(events: &[EventRecord]) -> Vec<EventSequence> {
    let mut by_student: BTreeMap<&str, Vec<&EventRecord>> = BTreeMap::new();
    for e in events {
        by_student.entry(e.student_id.as_str()).or_default().push(e);
    }
    by_student
        .into_iter()
        .map(|(id, mut recs)| {
            recs.sort_by_key(|r| r.event_date);
            EventSequence {
                student_id: id.into(),
                events: recs.iter().map(|r| r.event_type.clone()).collect(),
            }
        })
        .collect()
}

/// Per-sequence "next occurrence" table: `next[pos * width + token]` is the
/// first index `>= pos` holding `token`, or `len` if none.
struct NextIndex {
    width: usize,
    len: usize,
    next: Vec<u32>,
}

impl NextIndex {
    fn new(seq: &[u32], width: usize) -> Self {
        let len = seq.len();
        let mut next = vec![len as u32; (len + 1) * width];
        for pos in (0..len).rev() {
            let (head, tail) = next.split_at_mut((pos + 1) * width);
            head[pos * width..].copy_from_slice(&tail[..width]);
            head[pos * width + seq[pos] as usize] = pos as u32;
        }
        NextIndex { width, len, next }
    }

    fn contains(&self, pattern: &[u32]) -> bool {
        let mut pos = 0usize;
        for &tok in pattern {
            if pos >= self.len {
                return false;
            }
            let at = self.next[pos * self.width + tok as usize] as usize;
            if at >= self.len {
                return false;
            }
            pos = at + 1;
        }
        true
    }
}

/// Mines every pattern of length at most `max_len` contained in at least
/// `min_support` of the sequences. Output is ordered by length, then
/// lexicographically by token.
pub fn gsp_mine(
    sequences: &[EventSequence],
    min_support: f64,
    max_len: usize,
) -> Result<Vec<SequencePattern>> {
    check_fraction("min_support", min_support, false)?;
    if max_len == 0 {
        return Err(crate::Error::InvalidThreshold {
            name: "max_len",
            value: 0.0,
        });
    }
    if sequences.is_empty() {
        return Ok(Vec::new());
    }
    let total = sequences.len();
    let min_count = min_support_count(min_support, total)?;

    // token ids follow lexicographic token order
    let alphabet: Vec<&str> = sequences
        .iter()
        .flat_map(|s| s.events.iter().map(String::as_str))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let id_of: BTreeMap<&str, u32> = alphabet
        .iter()
        .enumerate()
        .map(|(i, t)| (*t, i as u32))
        .collect();
    let width = alphabet.len().max(1);
    let indexes: Vec<NextIndex> = sequences
        .iter()
        .map(|s| {
            let encoded: Vec<u32> = s.events.iter().map(|t| id_of[t.as_str()]).collect();
            NextIndex::new(&encoded, width)
        })
        .collect();

    let singles: Vec<Vec<u32>> = (0..alphabet.len() as u32).map(|t| vec![t]).collect();
    let mut level = count_and_filter(&indexes, singles, min_count);
    let mut found: Vec<(Vec<u32>, usize)> = Vec::new();
    let mut k = 1;
    while !level.is_empty() {
        found.extend(level.iter().cloned());
        if k >= max_len {
            break;
        }
        let prev: Vec<Vec<u32>> = level.into_iter().map(|(p, _)| p).collect();
        let candidates = join_sequences(&prev);
        level = count_and_filter(&indexes, candidates, min_count);
        k += 1;
    }

    Ok(found
        .into_iter()
        .map(|(p, c)| SequencePattern {
            elements: p.iter().map(|&t| alphabet[t as usize].into()).collect(),
            support: Support::new(c, total),
        })
        .collect())
}

fn count_and_filter(
    indexes: &[NextIndex],
    candidates: Vec<Vec<u32>>,
    min_count: usize,
) -> Vec<(Vec<u32>, usize)> {
    let counts = par::count_over(indexes, candidates.len(), |idx, acc| {
        for (slot, cand) in acc.iter_mut().zip(&candidates) {
            if idx.contains(cand) {
                *slot += 1;
            }
        }
    });
    candidates
        .into_iter()
        .zip(counts)
        .filter(|(_, c)| *c >= min_count)
        .collect()
}

/// Candidate generation from the sorted frequent `(k-1)`-patterns.
fn join_sequences(prev: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let frequent: BTreeSet<&[u32]> = prev.iter().map(Vec::as_slice).collect();
    let mut by_prefix: BTreeMap<&[u32], Vec<&Vec<u32>>> = BTreeMap::new();
    for p in prev {
        by_prefix.entry(&p[..p.len() - 1]).or_default().push(p);
    }
    let mut out = Vec::new();
    for s1 in prev {
        // s2 must start with s1 minus its first token
        let Some(partners) = by_prefix.get(&s1[1..]) else {
            continue;
        };
        for s2 in partners {
            let mut cand = s1.clone();
            cand.push(*s2.last().unwrap());
            let all_frequent = (0..cand.len()).all(|skip| {
                let sub: Vec<u32> = cand
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .map(|(_, t)| *t)
                    .collect();
                frequent.contains(sub.as_slice())
            });
            if all_frequent {
                out.push(cand);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}
