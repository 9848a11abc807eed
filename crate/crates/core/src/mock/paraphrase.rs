use alloc::string::String;
use alloc::vec::Vec;

use super::vocab::{self, DISCOURSE_SLOT, SLOTS};
use crate::prompt::ParaphraseRequest;
use crate::textnorm::normalize_text;

/// Adjacent rewritten lines shorter than this many tokens are merged.
pub const MERGE_BELOW: usize = 4;
/// With `alter_utterance_length`, rewritten lines longer than this are split.
pub const SPLIT_ABOVE: usize = 12;

enum Line {
    Verbatim(String),
    Rewritten(Vec<String>),
}

/// Rule-based paraphraser.
///
/// Verbatim-marked lines come back unchanged. Other lines are normalized,
/// fillers are dropped, every function-word variant is replaced with its
/// slot's global default, and under `condense` discourse markers are
/// dropped. Lines left empty disappear, adjacent short rewritten lines are
/// merged, and under `alter_utterance_length` long lines are split in two.
/// A pure function of the request.
pub fn mock_paraphrase(request: &ParaphraseRequest) -> Vec<String> {
    let mut lines: Vec<Line> = Vec::with_capacity(request.lines.len());
    for (i, raw) in request.lines.iter().enumerate() {
        if request.is_verbatim(i) {
            lines.push(Line::Verbatim(raw.clone()));
            continue;
        }
        let tokens = rewrite_tokens(raw, request.policy.condense);
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() < MERGE_BELOW {
            if let Some(Line::Rewritten(prev)) = lines.last_mut() {
                if prev.len() < MERGE_BELOW {
                    prev.extend(tokens);
                    continue;
                }
            }
        }
        if request.policy.alter_utterance_length && tokens.len() > SPLIT_ABOVE {
            let mid = tokens.len() / 2;
            lines.push(Line::Rewritten(tokens[..mid].to_vec()));
            lines.push(Line::Rewritten(tokens[mid..].to_vec()));
        } else {
            lines.push(Line::Rewritten(tokens));
        }
    }
    lines
        .into_iter()
        .map(|l| match l {
            Line::Verbatim(s) => s,
            Line::Rewritten(tokens) => tokens.join(" "),
        })
        .collect()
}

fn rewrite_tokens(raw: &str, condense: bool) -> Vec<String> {
    normalize_text(raw)
        .split(' ')
        .filter(|t| !t.is_empty() && !vocab::is_filler(t))
        .filter_map(|t| match vocab::slot_of(t) {
            Some((DISCOURSE_SLOT, _)) if condense => None,
            Some((slot, _)) => Some(String::from(SLOTS[slot][0])),
            None => Some(String::from(t)),
        })
        .collect()
}
