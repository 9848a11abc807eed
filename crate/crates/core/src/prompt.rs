//! Paraphrase prompt policy and the request sent to a paraphraser backend.
//!
//! The harness does not own prompt wording. A request carries the policy
//! flags, the read-only context, the target lines, and the output contract;
//! adapters turn that into a prompt for their model.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::corpus::Utterance;
use crate::error::{Error, Result};
use crate::hash;

pub const OUTPUT_CONTRACT: &str = "one output utterance per line; output only the rewritten lines";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    PerUtterance,
    PerSegment,
}

impl core::str::FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_utterance" | "per-utterance" => Ok(Self::PerUtterance),
            "per_segment" | "per-segment" => Ok(Self::PerSegment),
            other => Err(Error::InvalidParameter(format!("unknown granularity `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum PiiMode {
    ReplaceWithFictional { gender_preserving: bool },
}

impl Default for PiiMode {
    fn default() -> Self {
        Self::ReplaceWithFictional { gender_preserving: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptPolicy {
    /// Identifier of the paraphrase instruction set.
    pub style: String,
    pub condense: bool,
    pub alter_utterance_length: bool,
    pub pii_mode: PiiMode,
    /// Fraction of each request's lines to keep verbatim.
    pub conserve_fraction: f64,
    pub granularity: Granularity,
}

impl Default for PromptPolicy {
    fn default() -> Self {
        Self {
            style: "paraphrase".to_string(),
            condense: true,
            alter_utterance_length: true,
            pii_mode: PiiMode::default(),
            conserve_fraction: 0.0,
            granularity: Granularity::PerSegment,
        }
    }
}

impl PromptPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.conserve_fraction) {
            return Err(Error::InvalidParameter(format!(
                "conserve_fraction must lie in [0, 1], got {}",
                self.conserve_fraction
            )));
        }
        Ok(())
    }

    /// Lines to keep verbatim out of `n`: `ceil(conserve_fraction * n)`.
    pub fn verbatim_count(&self, n: usize) -> usize {
        let raw = self.conserve_fraction * n as f64;
        (libm::ceil(raw - 1e-9).max(0.0) as usize).min(n)
    }
}

/// Policy block of a paraphrase request, as sent on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestPolicy {
    pub style: String,
    pub condense: bool,
    pub alter_utterance_length: bool,
    pub pii: PiiMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker_gender: Option<String>,
    /// Indices into `lines` that must be returned unchanged.
    pub keep_verbatim: Vec<usize>,
    pub output_contract: String,
    /// Bumped on a retry so the retry is not served from cache.
    #[serde(default)]
    pub attempt: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParaphraseRequest {
    pub context: Vec<String>,
    pub lines: Vec<String>,
    pub policy: RequestPolicy,
}

impl ParaphraseRequest {
    pub fn is_verbatim(&self, line: usize) -> bool {
        self.policy.keep_verbatim.contains(&line)
    }
}

/// Builds a request for one segment. The verbatim lines are a seeded
/// uniform sample without replacement, keyed on the segment's first
/// utterance id.
pub fn build_paraphrase_request(
    segment: &[Utterance],
    context: &[Utterance],
    policy: &PromptPolicy,
    speaker_gender: Option<&str>,
    seed: u64,
) -> Result<ParaphraseRequest> {
    let first = segment.first().ok_or(Error::EmptySequence("segment"))?;
    policy.validate()?;
    let keep = policy.verbatim_count(segment.len());
    let mut keep_verbatim = if keep == 0 {
        Vec::new()
    } else {
        let mut rng = hash::rng_for(seed, "keep-verbatim", &first.id);
        index::sample(&mut rng, segment.len(), keep).into_vec()
    };
    keep_verbatim.sort_unstable();
    Ok(ParaphraseRequest {
        context: context.iter().map(|u| u.text.clone()).collect(),
        lines: segment.iter().map(|u| u.text.clone()).collect(),
        policy: RequestPolicy {
            style: policy.style.clone(),
            condense: policy.condense,
            alter_utterance_length: policy.alter_utterance_length,
            pii: policy.pii_mode,
            speaker_gender: speaker_gender.map(str::to_string),
            keep_verbatim,
            output_contract: OUTPUT_CONTRACT.to_string(),
            attempt: 0,
        },
    })
}

/// Brings paraphraser output back to the line contract.
///
/// Enumeration and bullet markers are stripped, blank lines dropped, and a
/// leading preamble line ("Here are the rewritten lines:") removed. Output
/// with more than `max(2n, n + 4)` lines for `n` inputs, or with a code
/// fence, is irreparable.
pub fn repair_output(raw_lines: &[String], n_inputs: usize) -> Result<Vec<String>> {
    let mut out = Vec::with_capacity(raw_lines.len());
    for (i, line) in raw_lines.iter().flat_map(|l| l.lines()).enumerate() {
        let trimmed = line.trim();
        if trimmed.starts_with("```") {
            return Err(Error::IrreparableOutput("code fence in output".into()));
        }
        if i == 0 && is_preamble(trimmed) {
            continue;
        }
        let stripped = strip_marker(trimmed).trim();
        if !stripped.is_empty() {
            out.push(stripped.to_string());
        }
    }
    let limit = (2 * n_inputs).max(n_inputs + 4);
    if out.len() > limit {
        return Err(Error::IrreparableOutput(format!(
            "{} lines returned for {n_inputs} inputs",
            out.len()
        )));
    }
    Ok(out)
}

fn is_preamble(line: &str) -> bool {
    let lower = line.to_lowercase();
    line.ends_with(':') && (lower.starts_with("here") || lower.starts_with("sure") || lower.contains("rewritten"))
}

fn strip_marker(line: &str) -> &str {
    for bullet in ["- ", "* ", "\u{2022} "] {
        if let Some(rest) = line.strip_prefix(bullet) {
            return rest;
        }
    }
    let digits = line.bytes().take_while(u8::is_ascii_digit).count();
    if digits > 0 && digits <= 3 {
        let rest = &line[digits..];
        for sep in [". ", ") ", ": "] {
            if let Some(r) = rest.strip_prefix(sep) {
                return r;
            }
        }
    }
    if let Some(rest) = line.strip_prefix('(') {
        let digits = rest.bytes().take_while(u8::is_ascii_digit).count();
        if digits > 0 {
            if let Some(r) = rest[digits..].strip_prefix(") ") {
                return r;
            }
        }
    }
    line
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ConversationId, SpeakerId};
    use alloc::vec;

    fn utts(n: usize) -> Vec<Utterance> {
        let (c, s): (ConversationId, SpeakerId) = ("c".into(), "s".into());
        (0..n).map(|i| Utterance::new(&c, &s, i, format!("line {i}"), None)).collect()
    }

    #[test]
    fn structure() {
        let all = utts(5);
        let req = build_paraphrase_request(&all[2..5], &all[..2], &PromptPolicy::default(), Some("f"), 1).unwrap();
        assert_eq!(req.context.len(), 2);
        assert_eq!(req.lines, ["line 2", "line 3", "line 4"]);
        assert_eq!(req.policy.output_contract, OUTPUT_CONTRACT);
        assert_eq!(req.policy.speaker_gender.as_deref(), Some("f"));
        assert!(req.policy.keep_verbatim.is_empty());
    }

    #[test]
    fn conserve_half() {
        let policy = PromptPolicy { conserve_fraction: 0.5, ..PromptPolicy::default() };
        let all = utts(4);
        let req = build_paraphrase_request(&all, &[], &policy, None, 7).unwrap();
        assert_eq!(req.policy.keep_verbatim.len(), 2);
        let again = build_paraphrase_request(&all, &[], &policy, None, 7).unwrap();
        assert_eq!(req, again);
        assert_eq!(policy.verbatim_count(3), 2);
        assert_eq!(policy.verbatim_count(16), 8);
    }

    #[test]
    fn empty_segment_and_bad_fraction() {
        assert!(build_paraphrase_request(&[], &[], &PromptPolicy::default(), None, 1).is_err());
        let bad = PromptPolicy { conserve_fraction: 1.5, ..PromptPolicy::default() };
        assert!(build_paraphrase_request(&utts(1), &[], &bad, None, 1).is_err());
    }

    #[test]
    fn repair_strips_markers() {
        let raw: Vec<String> =
            ["Here are the rewritten lines:", "1. first one", "2) second", "- third", "", "(4) fourth"]
                .iter()
                .map(|s| s.to_string())
                .collect();
        assert_eq!(repair_output(&raw, 4).unwrap(), ["first one", "second", "third", "fourth"]);
    }

    #[test]
    fn repair_keeps_numbers_that_are_words() {
        let raw = vec!["2020 was a long year".to_string()];
        assert_eq!(repair_output(&raw, 1).unwrap(), ["2020 was a long year"]);
    }

    #[test]
    fn runaway_output_is_irreparable() {
        let raw: Vec<String> = (0..9).map(|i| format!("l{i}")).collect();
        assert!(matches!(repair_output(&raw, 2), Err(Error::IrreparableOutput(_))));
        assert!(matches!(repair_output(&["```".to_string()], 2), Err(Error::IrreparableOutput(_))));
    }
}
