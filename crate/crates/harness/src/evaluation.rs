//! Utility and detectability evaluation of anonymized conversations.

use std::fmt;
use std::str::FromStr;

use lfa_core::corpus::{Conversation, Corpus};
use lfa_core::metrics::{detectability_curve, mean, utility_report, EerCurve};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backends::wire::{EmbedKind, EmbedRequest, ScoreItem, ScoreKind, ScoreRequest};
use crate::backends::{BackendSet, Role};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityRecord {
    pub conv_id: String,
    pub gas: f64,
    pub dtw_sim: f64,
    pub mean_utt_len: f64,
    pub naturalness: Option<f64>,
}

fn sentence_embeddings(conv: &Conversation, backends: &BackendSet) -> Result<Vec<Vec<f64>>> {
    conv.utterances
        .iter()
        .map(|u| backends.embed(&EmbedRequest::texts(EmbedKind::Sentence, vec![u.normalized_text()])))
        .collect()
}

/// Per-utterance naturalness of a conversation's audio, when a scorer is
/// configured and every utterance has audio.
pub fn naturalness_scores(conv: &Conversation, backends: &BackendSet) -> Result<Option<Vec<f64>>> {
    if !backends.has(Role::NaturalnessScorer) || conv.utterances.iter().any(|u| u.audio_ref.is_none()) {
        return Ok(None);
    }
    conv.utterances
        .iter()
        .map(|u| {
            let item = ScoreItem { text: None, audio_ref: u.audio_ref.clone() };
            backends.score(&ScoreRequest { kind: ScoreKind::Naturalness, item })
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

pub fn conversation_utility(orig: &Conversation, anon: &Conversation, backends: &BackendSet) -> Result<UtilityRecord> {
    backends.require(&[Role::SentenceEmbedder])?;
    let orig_embs = sentence_embeddings(orig, backends)?;
    let anon_embs = sentence_embeddings(anon, backends)?;
    let naturalness = naturalness_scores(anon, backends)?;
    let report = utility_report(&orig_embs, &anon_embs, &anon.token_counts(), naturalness.as_deref())?;
    Ok(UtilityRecord {
        conv_id: anon.id.to_string(),
        gas: report.gas,
        dtw_sim: report.dtw_sim,
        mean_utt_len: report.mean_utt_len,
        naturalness: report.naturalness_mean,
    })
}

/// Utility of every conversation in `anonymized` against its original,
/// ordered by conversation id.
pub fn corpus_utility(original: &Corpus, anonymized: &Corpus, backends: &BackendSet) -> Result<Vec<UtilityRecord>> {
    let convs: Vec<&Conversation> = anonymized.conversations().collect();
    convs
        .par_iter()
        .map(|anon| conversation_utility(original.require(&anon.id)?, anon, backends))
        .collect()
}

/// System-level utility: means of the per-conversation values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemUtility {
    pub system: String,
    pub gas: f64,
    pub dtw_sim: f64,
    pub mean_utt_len: f64,
}

pub fn summarize_utility(system: &str, records: &[UtilityRecord]) -> Result<SystemUtility> {
    let col = |f: fn(&UtilityRecord) -> f64| {
        mean(&records.iter().map(f).collect::<Vec<_>>()).ok_or(lfa_core::Error::EmptySequence("utility records"))
    };
    Ok(SystemUtility {
        system: system.to_string(),
        gas: col(|r| r.gas)?,
        dtw_sim: col(|r| r.dtw_sim)?,
        mean_utt_len: col(|r| r.mean_utt_len)?,
    })
}

/// Mean naturalness over all utterances of the given conversations.
pub fn pooled_naturalness<'a>(
    convs: impl IntoIterator<Item = &'a Conversation>,
    backends: &BackendSet,
) -> Result<Option<f64>> {
    let mut all = Vec::new();
    for c in convs {
        match naturalness_scores(c, backends)? {
            Some(s) => all.extend(s),
            None => return Ok(None),
        }
    }
    Ok(mean(&all))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Speech,
    Text,
}

impl DetectorKind {
    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Speech => "speech",
            DetectorKind::Text => "text",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "speech" => Ok(DetectorKind::Speech),
            "text" => Ok(DetectorKind::Text),
            _ => Err(Error::Config(format!("unknown detector `{s}`"))),
        }
    }
}

/// Detector score of every utterance, in order.
pub fn utterance_scores(conv: &Conversation, kind: DetectorKind, backends: &BackendSet) -> Result<Vec<f64>> {
    conv.utterances
        .iter()
        .map(|u| {
            let request = match kind {
                DetectorKind::Speech => ScoreRequest {
                    kind: ScoreKind::SpeechSynth,
                    item: ScoreItem {
                        text: None,
                        audio_ref: Some(u.audio_ref.clone().ok_or_else(|| Error::MissingAudio(u.id.clone()))?),
                    },
                },
                DetectorKind::Text => ScoreRequest {
                    kind: ScoreKind::TextSynth,
                    item: ScoreItem { text: Some(u.normalized_text()), audio_ref: None },
                },
            };
            backends.score(&request)
        })
        .collect()
}

/// Detectability of the anonymized conversations against their originals.
pub fn detect_curve(
    original: &Corpus,
    anonymized: &Corpus,
    kind: DetectorKind,
    ks: &[usize],
    backends: &BackendSet,
) -> Result<EerCurve> {
    let pairs: Vec<(&Conversation, &Conversation)> = anonymized
        .conversations()
        .map(|a| Ok((original.require(&a.id)?, a)))
        .collect::<Result<_>>()?;
    let scored = pairs
        .par_iter()
        .map(|(o, a)| Ok((utterance_scores(o, kind, backends)?, utterance_scores(a, kind, backends)?)))
        .collect::<Result<Vec<_>>>()?;
    let (real, synthetic): (Vec<_>, Vec<_>) = scored.into_iter().unzip();
    Ok(detectability_curve(&real, &synthetic, ks)?)
}
