//! Voice and content attacks over trial sets.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use lfa_core::corpus::{Conversation, ConversationId, Corpus, Trial, TrialLabel, TrialSet};
use lfa_core::metrics::{compute_eer, normalize_ks, CurvePoint, EerCurve, ScoreSet};
use lfa_core::vector::cosine;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backends::wire::{EmbedKind, EmbedRequest};
use crate::backends::{BackendSet, Role};
use crate::error::{Error, Result};

pub const AGGREGATION: &str = "first_k_utterances";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Voice,
    Content,
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Voice => "voice",
            Channel::Content => "content",
        }
    }

    pub fn embedder(self) -> Role {
        match self {
            Channel::Voice => Role::SpeakerEmbedder,
            Channel::Content => Role::StyleEmbedder,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "voice" => Ok(Channel::Voice),
            "content" => Ok(Channel::Content),
            _ => Err(Error::Config(format!("unknown channel `{s}`"))),
        }
    }
}

/// Embedding of one trial side from its first `min(k, n)` utterances.
///
/// The voice channel reads only audio refs and the content channel only
/// normalized transcripts.
pub fn side_embedding(conv: &Conversation, channel: Channel, k: usize, backends: &BackendSet) -> Result<Vec<f64>> {
    let first = &conv.utterances[..k.min(conv.len())];
    if first.is_empty() {
        return Err(lfa_core::Error::EmptySequence("trial side").into());
    }
    let request = match channel {
        Channel::Voice => {
            let refs = first
                .iter()
                .map(|u| u.audio_ref.clone().ok_or_else(|| Error::MissingAudio(u.id.clone())))
                .collect::<Result<Vec<_>>>()?;
            EmbedRequest::audio(refs)
        }
        Channel::Content => EmbedRequest::texts(EmbedKind::Style, first.iter().map(|u| u.normalized_text()).collect()),
    };
    backends.embed(&request)
}

fn tag(trial: &Trial, e: Error) -> Error {
    Error::Trial { trial: trial.id.clone(), source: Box::new(e) }
}

/// Cosine similarity between the enrollment side (from `enrollment`) and
/// the test side (from `test`) of one trial.
pub fn score_trial(
    trial: &Trial,
    enrollment: &Corpus,
    test: &Corpus,
    channel: Channel,
    k: usize,
    backends: &BackendSet,
) -> Result<f64> {
    let run = || -> Result<f64> {
        let e = side_embedding(enrollment.require(&trial.enrollment)?, channel, k, backends)?;
        let t = side_embedding(test.require(&trial.test)?, channel, k, backends)?;
        Ok(cosine(&e, &t))
    };
    run().map_err(|e| tag(trial, e))
}

/// Per-trial scores at one `k`, with each side embedded once.
pub fn score_trials(
    trials: &TrialSet,
    enrollment: &Corpus,
    test: &Corpus,
    channel: Channel,
    k: usize,
    backends: &BackendSet,
) -> Result<Vec<f64>> {
    let mut sides: BTreeMap<(bool, &ConversationId), &Trial> = BTreeMap::new();
    for t in &trials.trials {
        sides.entry((false, &t.enrollment)).or_insert(t);
        sides.entry((true, &t.test)).or_insert(t);
    }
    let embedded: BTreeMap<(bool, &ConversationId), Vec<f64>> = sides
        .into_par_iter()
        .map(|((is_test, id), trial)| {
            let corpus = if is_test { test } else { enrollment };
            corpus
                .require(id)
                .map_err(Error::from)
                .and_then(|c| side_embedding(c, channel, k, backends))
                .map(|v| ((is_test, id), v))
                .map_err(|e| tag(trial, e))
        })
        .collect::<Result<_>>()?;
    Ok(trials
        .trials
        .iter()
        .map(|t| cosine(&embedded[&(false, &t.enrollment)], &embedded[&(true, &t.test)]))
        .collect())
}

/// EER at each `k` in ascending order.
pub fn attack_curve(
    trials: &TrialSet,
    enrollment: &Corpus,
    test: &Corpus,
    channel: Channel,
    ks: &[usize],
    backends: &BackendSet,
) -> Result<EerCurve> {
    backends.require(&[channel.embedder()])?;
    let mut points = Vec::new();
    for k in normalize_ks(ks)? {
        let scores = score_trials(trials, enrollment, test, channel, k, backends)?;
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        for (t, s) in trials.trials.iter().zip(scores) {
            match t.label {
                TrialLabel::SameSpeaker => pos.push(s),
                TrialLabel::DifferentSpeaker => neg.push(s),
            }
        }
        let (n_pos, n_neg) = (pos.len(), neg.len());
        let eer = compute_eer(&ScoreSet::new(pos, neg))?;
        points.push(CurvePoint { k, eer, n_pos, n_neg });
    }
    Ok(EerCurve { points })
}
