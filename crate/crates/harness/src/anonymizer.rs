//! The three anonymization strategies over conversations and trial sets.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use lfa_core::corpus::{Conversation, ConversationId, Corpus, TrialSet, UtteranceRecord};
use lfa_core::prompt::{build_paraphrase_request, repair_output, Granularity, PromptPolicy};
use lfa_core::pseudo::{PoolEntry, PseudoSpeaker, PseudoSpeakerRegistry};
use lfa_core::vector::cosine;
use lfa_core::windowing::{
    align_paraphrase_output, build_context, plan_segments, ParaphraseAlignment, Segment, SegmentMode,
};
use lfa_core::{normalize_text, SpeakerId};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backends::wire::{EmbedKind, EmbedRequest, SynthesizeRequest};
use crate::backends::{BackendSet, Role};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    AudioOnly,
    ContentOnly,
    VoiceAndContent,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::AudioOnly => "audio_only",
            Strategy::ContentOnly => "content_only",
            Strategy::VoiceAndContent => "voice_and_content",
        }
    }

    pub fn uses_pseudo_speaker(self) -> bool {
        self != Strategy::ContentOnly
    }

    pub fn paraphrases(self) -> bool {
        self != Strategy::AudioOnly
    }

    pub fn required_roles(self) -> &'static [Role] {
        match self {
            Strategy::AudioOnly => &[Role::Asr, Role::Tts],
            _ => &[Role::Asr, Role::Tts, Role::Paraphraser],
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Strategy::AudioOnly, Strategy::ContentOnly, Strategy::VoiceAndContent]
            .into_iter()
            .find(|x| x.name() == s || x.name().replace('_', "-") == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnonymizerConfig {
    pub strategy: Strategy,
    pub policy: PromptPolicy,
    pub segment_mode: SegmentMode,
    pub context_size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnonymizedUtterance {
    pub audio_ref: Option<String>,
    /// Normalized transcript.
    pub transcript: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnonymizedConversation {
    pub source: ConversationId,
    pub speaker: SpeakerId,
    pub topic: lfa_core::TopicId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<String>,
    pub strategy: Strategy,
    pub utterances: Vec<AnonymizedUtterance>,
    pub alignments: Vec<ParaphraseAlignment>,
}

impl AnonymizedConversation {
    /// The anonymized conversation under its source id, for use as a trial
    /// test side.
    pub fn to_conversation(&self) -> Result<Conversation> {
        let records = self
            .utterances
            .iter()
            .enumerate()
            .map(|(index, u)| UtteranceRecord { index, text: u.transcript.clone(), audio_ref: u.audio_ref.clone() })
            .collect();
        Ok(Conversation::new(self.source.clone(), self.speaker.clone(), self.topic.clone(), self.gender.clone(), records)?)
    }
}

/// Sidecar record linking anonymized utterances back to their sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentRecord {
    pub conversation: ConversationId,
    pub strategy: Strategy,
    pub alignments: Vec<ParaphraseAlignment>,
}

impl From<&AnonymizedConversation> for AlignmentRecord {
    fn from(a: &AnonymizedConversation) -> Self {
        Self { conversation: a.source.clone(), strategy: a.strategy, alignments: a.alignments.clone() }
    }
}

/// Runs ASR over every utterance and returns the conversation with ASR
/// text in place of the reference text.
fn transcribe(conv: &Conversation, backends: &BackendSet) -> Result<Conversation> {
    let records = conv
        .utterances
        .iter()
        .map(|u| {
            let audio_ref = u.audio_ref.as_deref().ok_or_else(|| Error::MissingAudio(u.id.clone()))?;
            let text = backends.transcribe(audio_ref)?.join(" ");
            Ok(UtteranceRecord { index: u.index, text, audio_ref: u.audio_ref.clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Conversation::new(conv.id.clone(), conv.speaker.clone(), conv.topic.clone(), conv.gender.clone(), records)?)
}

fn synthesize(
    text: &str,
    conv: &Conversation,
    strategy: Strategy,
    pseudo: Option<&PseudoSpeaker>,
    backends: &BackendSet,
) -> Result<String> {
    let request = if strategy.uses_pseudo_speaker() {
        let pseudo = pseudo.ok_or_else(|| Error::Config(format!("no pseudo speaker for {}", conv.speaker)))?;
        SynthesizeRequest { text: text.to_string(), speaker_embedding: Some(pseudo.embedding.values().to_vec()), speaker_ref: None }
    } else {
        SynthesizeRequest { text: text.to_string(), speaker_embedding: None, speaker_ref: Some(conv.speaker.to_string()) }
    };
    backends.synthesize(&request)
}

fn segments(conv: &Conversation, cfg: &AnonymizerConfig) -> Result<Vec<Segment>> {
    Ok(match cfg.policy.granularity {
        Granularity::PerUtterance => (0..conv.len()).map(|i| Segment { start: i, end: i + 1 }).collect(),
        Granularity::PerSegment => plan_segments(conv, cfg.segment_mode, cfg.context_size)?.segments,
    })
}

/// Paraphrases one segment: request, repair, and one retry on output that
/// cannot be repaired. Returns the non-empty output lines.
fn paraphrase_segment(
    asr: &Conversation,
    segment: Segment,
    cfg: &AnonymizerConfig,
    backends: &BackendSet,
) -> Result<Vec<String>> {
    let lines = &asr.utterances[segment.start..segment.end];
    let context = build_context(asr, segment.start, cfg.context_size);
    let mut request = build_paraphrase_request(lines, context, &cfg.policy, asr.gender.as_deref(), cfg.seed)?;
    let repaired = match repair_output(&backends.paraphrase(&request)?, lines.len()) {
        Ok(out) => out,
        Err(_) => {
            request.policy.attempt = 1;
            repair_output(&backends.paraphrase(&request)?, lines.len())?
        }
    };
    Ok(repaired.into_iter().filter(|l| !normalize_text(l).is_empty()).collect())
}

fn jaccard(a: &str, b: &str) -> f64 {
    let a: std::collections::BTreeSet<&str> = a.split(' ').filter(|t| !t.is_empty()).collect();
    let b: std::collections::BTreeSet<&str> = b.split(' ').filter(|t| !t.is_empty()).collect();
    let union = a.union(&b).count();
    if union == 0 {
        0.0
    } else {
        a.intersection(&b).count() as f64 / union as f64
    }
}

/// Aligns outputs to sources by sentence-embedding cosine, or by token
/// overlap when no sentence embedder is configured.
fn align(asr: &Conversation, segment: Segment, outputs: &[String], backends: &BackendSet) -> Result<ParaphraseAlignment> {
    let sources: Vec<String> = asr.utterances[segment.start..segment.end].iter().map(|u| u.normalized_text()).collect();
    let normalized: Vec<String> = outputs.iter().map(|l| normalize_text(l)).collect();
    if sources.len() == normalized.len() || normalized.is_empty() {
        return Ok(align_paraphrase_output(segment, outputs, |_, _| 0.0));
    }
    if backends.has(Role::SentenceEmbedder) {
        let embed = |t: &String| backends.embed(&EmbedRequest::texts(EmbedKind::Sentence, vec![t.clone()]));
        let src: Vec<Vec<f64>> = sources.iter().map(embed).collect::<Result<_>>()?;
        let out: Vec<Vec<f64>> = normalized.iter().map(embed).collect::<Result<_>>()?;
        Ok(align_paraphrase_output(segment, outputs, |i, j| cosine(&src[i], &out[j])))
    } else {
        Ok(align_paraphrase_output(segment, outputs, |i, j| jaccard(&sources[i], &normalized[j])))
    }
}

/// Anonymizes one conversation.
///
/// `pseudo` is required for the strategies that change the voice.
pub fn anonymize_conversation(
    conv: &Conversation,
    cfg: &AnonymizerConfig,
    backends: &BackendSet,
    pseudo: Option<&PseudoSpeaker>,
) -> Result<AnonymizedConversation> {
    if conv.is_empty() {
        return Err(lfa_core::Error::EmptyConversation(conv.id.to_string()).into());
    }
    backends.require(cfg.strategy.required_roles())?;
    let asr = transcribe(conv, backends)?;

    let mut utterances = Vec::new();
    let mut alignments = Vec::new();
    if !cfg.strategy.paraphrases() {
        for u in &asr.utterances {
            let audio_ref = synthesize(&u.text, conv, cfg.strategy, pseudo, backends)?;
            utterances.push(AnonymizedUtterance { audio_ref: Some(audio_ref), transcript: u.normalized_text() });
        }
        let all = Segment { start: 0, end: asr.len() };
        alignments.push(ParaphraseAlignment::identity(all, utterances.iter().map(|u| u.transcript.clone()).collect()));
    } else {
        for segment in segments(&asr, cfg)? {
            let outputs = paraphrase_segment(&asr, segment, cfg, backends)?;
            alignments.push(align(&asr, segment, &outputs, backends)?);
            for line in &outputs {
                let audio_ref = synthesize(line, conv, cfg.strategy, pseudo, backends)?;
                let transcript = if cfg.strategy == Strategy::VoiceAndContent {
                    normalize_text(&backends.transcribe(&audio_ref)?.join(" "))
                } else {
                    normalize_text(line)
                };
                utterances.push(AnonymizedUtterance { audio_ref: Some(audio_ref), transcript });
            }
        }
    }
    Ok(AnonymizedConversation {
        source: conv.id.clone(),
        speaker: conv.speaker.clone(),
        topic: conv.topic.clone(),
        gender: conv.gender.clone(),
        strategy: cfg.strategy,
        utterances,
        alignments,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnonymizationRun {
    pub conversations: Vec<AnonymizedConversation>,
    pub pseudo_speakers: BTreeMap<SpeakerId, PseudoSpeaker>,
}

impl AnonymizationRun {
    /// Anonymized test sides as a corpus keyed by source conversation id.
    pub fn corpus(&self) -> Result<Corpus> {
        let convs = self.conversations.iter().map(|c| c.to_conversation()).collect::<Result<Vec<_>>>()?;
        Ok(Corpus::from_conversations(convs)?)
    }
}

/// Anonymizes the test side of every trial. Enrollment sides are never
/// touched. Pseudo speakers are drawn up front, one per source speaker.
pub fn anonymize_trials(
    corpus: &Corpus,
    trials: &TrialSet,
    cfg: &AnonymizerConfig,
    backends: &BackendSet,
    pool: Option<&[PoolEntry]>,
) -> Result<AnonymizationRun> {
    cfg.policy.validate()?;
    backends.require(cfg.strategy.required_roles())?;
    let convs: Vec<&Conversation> =
        trials.test_sides().iter().map(|id| corpus.require(id)).collect::<Result<_, _>>()?;

    let mut registry = PseudoSpeakerRegistry::new(cfg.seed);
    if cfg.strategy.uses_pseudo_speaker() {
        let pool = pool.ok_or_else(|| Error::Config(format!("strategy {} needs a speaker pool", cfg.strategy)))?;
        for c in &convs {
            registry.get_or_mix(pool, &c.speaker)?;
        }
    }

    let conversations = convs
        .par_iter()
        .map(|c| anonymize_conversation(c, cfg, backends, registry.get(&c.speaker)))
        .collect::<Result<Vec<_>>>()?;
    Ok(AnonymizationRun { conversations, pseudo_speakers: registry.speakers })
}
