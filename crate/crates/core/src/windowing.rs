//! Segment planning, context windows, and alignment of paraphraser output
//! back onto source utterances.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{Conversation, Utterance};
use crate::error::{Error, Result};
use crate::textnorm::normalize_text;

pub const DEFAULT_MAX_UTTERANCES: usize = 16;
pub const DEFAULT_TOKEN_BUDGET: usize = 300;
pub const DEFAULT_CONTEXT_SIZE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SegmentMode {
    ByCount { max: usize },
    ByTokens { budget: usize },
}

impl Default for SegmentMode {
    fn default() -> Self {
        Self::ByCount { max: DEFAULT_MAX_UTTERANCES }
    }
}

/// Half-open range of utterance indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentPlan {
    pub mode: SegmentMode,
    pub segments: Vec<Segment>,
    pub context_size: usize,
}

pub fn plan_segments(conv: &Conversation, mode: SegmentMode, context_size: usize) -> Result<SegmentPlan> {
    if conv.is_empty() {
        return Err(Error::EmptyConversation(conv.id.0.clone()));
    }
    let segments = segment_token_counts(&conv.token_counts(), mode)?;
    Ok(SegmentPlan { mode, segments, context_size })
}

/// Partitions `0..token_counts.len()`.
///
/// `ByTokens` fills greedily and closes a segment when the next utterance
/// would exceed the budget; an utterance larger than the budget on its own
/// becomes a singleton segment.
pub fn segment_token_counts(token_counts: &[usize], mode: SegmentMode) -> Result<Vec<Segment>> {
    if token_counts.is_empty() {
        return Err(Error::EmptySequence("utterance"));
    }
    let n = token_counts.len();
    match mode {
        SegmentMode::ByCount { max: 0 } => Err(Error::InvalidParameter("segment max must be positive".into())),
        SegmentMode::ByTokens { budget: 0 } => Err(Error::InvalidParameter("token budget must be positive".into())),
        SegmentMode::ByCount { max } => Ok((0..n)
            .step_by(max)
            .map(|start| Segment { start, end: (start + max).min(n) })
            .collect()),
        SegmentMode::ByTokens { budget } => {
            let mut segments = Vec::new();
            let (mut start, mut sum) = (0, 0usize);
            for (i, &t) in token_counts.iter().enumerate() {
                if i > start && sum + t > budget {
                    segments.push(Segment { start, end: i });
                    start = i;
                    sum = 0;
                }
                sum += t;
            }
            segments.push(Segment { start, end: n });
            Ok(segments)
        }
    }
}

/// The up-to-`n` original utterances immediately before `segment_start`.
pub fn build_context(conv: &Conversation, segment_start: usize, n: usize) -> &[Utterance] {
    let start = segment_start.min(conv.len());
    &conv.utterances[start.saturating_sub(n)..start]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParaphraseAlignment {
    pub segment: Segment,
    /// Normalized output utterances.
    pub outputs: Vec<String>,
    /// Absolute source indices covered by each output.
    pub provenance: Vec<Vec<usize>>,
    pub segment_deleted: bool,
}

impl ParaphraseAlignment {
    pub fn identity(segment: Segment, outputs: Vec<String>) -> Self {
        let provenance = (segment.start..segment.end).map(|i| vec![i]).collect();
        Self { segment, outputs, provenance, segment_deleted: false }
    }
}

/// Aligns paraphraser output lines to the segment's sources.
///
/// Lines are normalized and lines that normalize to nothing are dropped.
/// Equal counts align 1:1 by position. Otherwise the alignment is a
/// monotone cover: with fewer outputs each output takes a contiguous run of
/// sources (merge), with more outputs each source is split over a
/// contiguous run of outputs. The cover maximizing the summed
/// `similarity(source_offset, output)` over linked pairs wins; ties prefer
/// the earlier diagonal step.
pub fn align_paraphrase_output<F>(segment: Segment, output_lines: &[String], similarity: F) -> ParaphraseAlignment
where
    F: Fn(usize, usize) -> f64,
{
    let outputs: Vec<String> =
        output_lines.iter().map(|l| normalize_text(l)).filter(|l| !l.is_empty()).collect();
    let m = segment.len();
    let n = outputs.len();
    if n == 0 {
        return ParaphraseAlignment { segment, outputs, provenance: Vec::new(), segment_deleted: m > 0 };
    }
    let links = best_monotone_cover(m, n, &similarity);
    let mut provenance = vec![Vec::new(); n];
    for (src, out) in links {
        let abs = segment.start + src;
        if provenance[out].last() != Some(&abs) {
            provenance[out].push(abs);
        }
    }
    ParaphraseAlignment { segment, outputs, provenance, segment_deleted: false }
}

/// Returns the linked (source, output) pairs of the best monotone cover.
pub(crate) fn best_monotone_cover<F>(m: usize, n: usize, similarity: &F) -> Vec<(usize, usize)>
where
    F: Fn(usize, usize) -> f64,
{
    if m == n {
        return (0..m).map(|i| (i, i)).collect();
    }
    // merge: steps (1,1) and (1,0); split: steps (1,1) and (0,1)
    let merge = n < m;
    let neg = f64::NEG_INFINITY;
    let mut best = vec![vec![neg; n]; m];
    let mut from_diag = vec![vec![true; n]; m];
    best[0][0] = similarity(0, 0);
    for i in 0..m {
        for j in 0..n {
            if i == 0 && j == 0 {
                continue;
            }
            let diag = if i > 0 && j > 0 { best[i - 1][j - 1] } else { neg };
            let straight = if merge {
                if i > 0 { best[i - 1][j] } else { neg }
            } else if j > 0 {
                best[i][j - 1]
            } else {
                neg
            };
            let (prev, is_diag) = if diag >= straight { (diag, true) } else { (straight, false) };
            if prev > neg {
                best[i][j] = prev + similarity(i, j);
                from_diag[i][j] = is_diag;
            }
        }
    }
    let (mut i, mut j) = (m - 1, n - 1);
    let mut links = vec![(i, j)];
    while i > 0 || j > 0 {
        if from_diag[i][j] {
            i -= 1;
            j -= 1;
        } else if merge {
            i -= 1;
        } else {
            j -= 1;
        }
        links.push((i, j));
    }
    links.reverse();
    links
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::UtteranceRecord;
    use alloc::format;
    use alloc::string::ToString;

    fn conv_with_tokens(counts: &[usize]) -> Conversation {
        let records = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| UtteranceRecord { index: i, text: vec!["w"; c].join(" "), audio_ref: None })
            .collect();
        Conversation::new("c".into(), "s".into(), "t".into(), None, records).unwrap()
    }

    #[test]
    fn by_count_sixteen() {
        let conv = conv_with_tokens(&[1; 40]);
        let plan = plan_segments(&conv, SegmentMode::ByCount { max: 16 }, 8).unwrap();
        let ranges: Vec<_> = plan.segments.iter().map(|s| (s.start, s.end)).collect();
        assert_eq!(ranges, [(0, 16), (16, 32), (32, 40)]);
    }

    #[test]
    fn by_tokens_greedy() {
        let segs = segment_token_counts(&[100, 150, 120, 40], SegmentMode::ByTokens { budget: 300 }).unwrap();
        assert_eq!(segs, [Segment { start: 0, end: 2 }, Segment { start: 2, end: 4 }]);
    }

    #[test]
    fn oversized_singleton() {
        let segs = segment_token_counts(&[500], SegmentMode::ByTokens { budget: 300 }).unwrap();
        assert_eq!(segs, [Segment { start: 0, end: 1 }]);
        let segs = segment_token_counts(&[10, 500, 10], SegmentMode::ByTokens { budget: 300 }).unwrap();
        assert_eq!(segs.len(), 3);
    }

    #[test]
    fn empty_conversation_is_an_error() {
        let conv = conv_with_tokens(&[]);
        assert!(matches!(plan_segments(&conv, SegmentMode::default(), 8), Err(Error::EmptyConversation(_))));
    }

    #[test]
    fn context_windows() {
        let conv = conv_with_tokens(&[1; 20]);
        let idx = |s: &[Utterance]| s.iter().map(|u| u.index).collect::<Vec<_>>();
        assert_eq!(idx(build_context(&conv, 12, 8)), (4..12).collect::<Vec<_>>());
        assert_eq!(idx(build_context(&conv, 3, 8)), [0, 1, 2]);
        assert!(build_context(&conv, 0, 8).is_empty());
        assert_eq!(build_context(&conv, 20, 8).len(), 8);
    }

    fn lines(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("line {i}")).collect()
    }

    #[test]
    fn positional_alignment() {
        let a = align_paraphrase_output(Segment { start: 5, end: 8 }, &lines(3), |_, _| 0.0);
        assert_eq!(a.provenance, [vec![5], vec![6], vec![7]]);
    }

    #[test]
    fn merge_into_one() {
        let a = align_paraphrase_output(Segment { start: 0, end: 2 }, &lines(1), |_, _| 0.0);
        assert_eq!(a.provenance, [vec![0, 1]]);
    }

    #[test]
    fn split_follows_similarity() {
        // source 0 looks like outputs 0 and 1; source 1 like output 2
        let sim = [[0.9, 0.8, 0.1], [0.1, 0.2, 0.9]];
        let a = align_paraphrase_output(Segment { start: 0, end: 2 }, &lines(3), |i, j| sim[i][j]);
        assert_eq!(a.provenance, [vec![0], vec![0], vec![1]]);
    }

    #[test]
    fn full_deletion_is_flagged() {
        let a = align_paraphrase_output(Segment { start: 0, end: 2 }, &["  ".to_string(), "...".to_string()], |_, _| 0.0);
        assert!(a.segment_deleted);
        assert!(a.outputs.is_empty());
    }
}
