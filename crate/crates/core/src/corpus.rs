//! Speakers, conversations, utterances, and topic-controlled trial sets.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash;
use crate::textnorm::{normalize_text, token_count};

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

id_newtype!(
    /// Opaque speaker identifier. No identity semantics across corpora.
    SpeakerId
);
id_newtype!(ConversationId);
id_newtype!(TopicId);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub id: String,
    pub speaker: SpeakerId,
    pub conversation: ConversationId,
    pub index: usize,
    pub text: String,
    pub audio_ref: Option<String>,
    /// Whitespace tokens of the normalized text.
    pub token_count: usize,
}

impl Utterance {
    pub fn new(
        conversation: &ConversationId,
        speaker: &SpeakerId,
        index: usize,
        text: String,
        audio_ref: Option<String>,
    ) -> Self {
        let token_count = token_count(&normalize_text(&text));
        Self {
            id: format!("{conversation}:{index}"),
            speaker: speaker.clone(),
            conversation: conversation.clone(),
            index,
            text,
            audio_ref,
            token_count,
        }
    }

    pub fn normalized_text(&self) -> String {
        normalize_text(&self.text)
    }
}

/// Raw utterance fields as they appear in a manifest line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub index: usize,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conversation {
    pub id: ConversationId,
    pub speaker: SpeakerId,
    pub topic: TopicId,
    /// Optional speaker gender tag, forwarded to the paraphraser for
    /// gender-consistent PII replacement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<String>,
    pub utterances: Vec<Utterance>,
}

impl Conversation {
    /// Builds a conversation, sorting utterances by index and checking
    /// that indices are exactly `0..n`.
    pub fn new(
        id: ConversationId,
        speaker: SpeakerId,
        topic: TopicId,
        gender: Option<String>,
        mut records: Vec<UtteranceRecord>,
    ) -> Result<Self> {
        records.sort_by_key(|r| r.index);
        for (expected, r) in records.iter().enumerate() {
            if r.index != expected {
                return Err(Error::InvalidConversation {
                    conversation: id.0.clone(),
                    reason: format!(
                        "utterance indices must be contiguous from 0; expected {expected}, found {}",
                        r.index
                    ),
                });
            }
        }
        let utterances = records
            .into_iter()
            .map(|r| Utterance::new(&id, &speaker, r.index, r.text, r.audio_ref))
            .collect();
        Ok(Self { id, speaker, topic, gender, utterances })
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn token_counts(&self) -> Vec<usize> {
        self.utterances.iter().map(|u| u.token_count).collect()
    }

    pub fn records(&self) -> Vec<UtteranceRecord> {
        self.utterances
            .iter()
            .map(|u| UtteranceRecord { index: u.index, text: u.text.clone(), audio_ref: u.audio_ref.clone() })
            .collect()
    }

    /// Checks the structural invariants (contiguous indices, shared speaker).
    pub fn check(&self) -> Result<()> {
        for (i, u) in self.utterances.iter().enumerate() {
            if u.index != i || u.conversation != self.id {
                return Err(Error::InvalidConversation {
                    conversation: self.id.0.clone(),
                    reason: format!("utterance {i} is out of place"),
                });
            }
            if u.speaker != self.speaker {
                return Err(Error::InvalidConversation {
                    conversation: self.id.0.clone(),
                    reason: format!("utterance {i} belongs to speaker `{}`", u.speaker),
                });
            }
        }
        Ok(())
    }
}

/// An immutable-after-construction collection of conversations indexed by
/// speaker and topic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    conversations: BTreeMap<ConversationId, Conversation>,
    by_speaker: BTreeMap<SpeakerId, Vec<ConversationId>>,
    by_topic: BTreeMap<TopicId, Vec<ConversationId>>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_conversations(convs: impl IntoIterator<Item = Conversation>) -> Result<Self> {
        let mut corpus = Self::new();
        for c in convs {
            corpus.insert(c)?;
        }
        Ok(corpus)
    }

    pub fn insert(&mut self, conv: Conversation) -> Result<()> {
        if self.conversations.contains_key(&conv.id) {
            return Err(Error::DuplicateConversation(conv.id.0));
        }
        conv.check()?;
        insert_sorted(self.by_speaker.entry(conv.speaker.clone()).or_default(), conv.id.clone());
        insert_sorted(self.by_topic.entry(conv.topic.clone()).or_default(), conv.id.clone());
        self.conversations.insert(conv.id.clone(), conv);
        Ok(())
    }

    pub fn get(&self, id: &ConversationId) -> Option<&Conversation> {
        self.conversations.get(id)
    }

    pub fn require(&self, id: &ConversationId) -> Result<&Conversation> {
        self.get(id).ok_or_else(|| Error::UnknownConversation(id.0.clone()))
    }

    /// Conversations in id order.
    pub fn conversations(&self) -> impl Iterator<Item = &Conversation> {
        self.conversations.values()
    }

    pub fn len(&self) -> usize {
        self.conversations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conversations.is_empty()
    }

    pub fn speakers(&self) -> impl Iterator<Item = (&SpeakerId, &[ConversationId])> {
        self.by_speaker.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn topics(&self) -> impl Iterator<Item = (&TopicId, &[ConversationId])> {
        self.by_topic.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn speaker_count(&self) -> usize {
        self.by_speaker.len()
    }

    pub fn topic_count(&self) -> usize {
        self.by_topic.len()
    }

    pub fn utterance_count(&self) -> usize {
        self.conversations.values().map(Conversation::len).sum()
    }
}

fn insert_sorted<T: Ord>(v: &mut Vec<T>, item: T) {
    let pos = v.binary_search(&item).unwrap_or_else(|p| p);
    v.insert(pos, item);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialLabel {
    SameSpeaker,
    DifferentSpeaker,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    pub id: String,
    /// Kept as-is.
    pub enrollment: ConversationId,
    /// The side that gets anonymized.
    pub test: ConversationId,
    pub label: TrialLabel,
}

/// Trial construction policy.
///
/// `Hard`: positives pair one speaker's conversations on different topics,
/// negatives pair different speakers on the same topic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialPolicy {
    Hard,
}

/// Trial counts of the published Fisher "hard" setting. Reported for
/// reference only, never enforced on user corpora.
pub const HARD_REFERENCE_COUNTS: TrialCounts = TrialCounts { total: 1944, positives: 959, negatives: 985 };

impl TrialPolicy {
    pub fn name(self) -> &'static str {
        match self {
            Self::Hard => "hard",
        }
    }

    pub fn reference_counts(self) -> TrialCounts {
        match self {
            Self::Hard => HARD_REFERENCE_COUNTS,
        }
    }
}

impl core::str::FromStr for TrialPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard" => Ok(Self::Hard),
            other => Err(Error::InvalidParameter(format!("unknown trial policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialCounts {
    pub total: usize,
    pub positives: usize,
    pub negatives: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialLimits {
    pub max_positives: Option<usize>,
    pub max_negatives: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSet {
    pub policy: TrialPolicy,
    pub seed: u64,
    pub counts: TrialCounts,
    pub trials: Vec<Trial>,
}

impl TrialSet {
    pub fn positives(&self) -> impl Iterator<Item = &Trial> {
        self.trials.iter().filter(|t| t.label == TrialLabel::SameSpeaker)
    }

    pub fn negatives(&self) -> impl Iterator<Item = &Trial> {
        self.trials.iter().filter(|t| t.label == TrialLabel::DifferentSpeaker)
    }

    /// Distinct test-side conversations, in first-appearance order.
    pub fn test_sides(&self) -> Vec<ConversationId> {
        let mut seen = BTreeMap::new();
        let mut out = Vec::new();
        for t in &self.trials {
            if seen.insert(t.test.clone(), ()).is_none() {
                out.push(t.test.clone());
            }
        }
        out
    }
}

/// Builds a trial set. All valid pairs are enumerated, shuffled with the
/// seed, and truncated to `limits`; each pair's orientation (which side is
/// enrollment) is a seeded coin flip.
pub fn build_trial_set(corpus: &Corpus, policy: TrialPolicy, limits: TrialLimits, seed: u64) -> Result<TrialSet> {
    if corpus.speaker_count() < 2 {
        return Err(Error::Unsatisfiable(format!(
            "{} policy needs at least 2 speakers, corpus has {}",
            policy.name(),
            corpus.speaker_count()
        )));
    }
    if corpus.topic_count() < 2 {
        return Err(Error::Unsatisfiable(format!(
            "{} policy needs at least 2 topics, corpus has {}",
            policy.name(),
            corpus.topic_count()
        )));
    }

    let topic_of = |id: &ConversationId| &corpus.conversations[id].topic;
    let speaker_of = |id: &ConversationId| &corpus.conversations[id].speaker;

    let mut positives = Vec::new();
    for (_, convs) in corpus.speakers() {
        for (i, a) in convs.iter().enumerate() {
            for b in &convs[i + 1..] {
                if topic_of(a) != topic_of(b) {
                    positives.push((a.clone(), b.clone()));
                }
            }
        }
    }
    let mut negatives = Vec::new();
    for (_, convs) in corpus.topics() {
        for (i, a) in convs.iter().enumerate() {
            for b in &convs[i + 1..] {
                if speaker_of(a) != speaker_of(b) {
                    negatives.push((a.clone(), b.clone()));
                }
            }
        }
    }
    if positives.is_empty() {
        return Err(Error::Unsatisfiable(
            "no positive trials possible: no speaker has two conversations on different topics".to_string(),
        ));
    }
    if negatives.is_empty() {
        return Err(Error::Unsatisfiable(
            "no negative trials possible: no topic has conversations from two different speakers".to_string(),
        ));
    }

    let mut rng = hash::rng_for(seed, "trials", policy.name());
    positives.shuffle(&mut rng);
    negatives.shuffle(&mut rng);
    if let Some(max) = limits.max_positives {
        positives.truncate(max);
    }
    if let Some(max) = limits.max_negatives {
        negatives.truncate(max);
    }

    let mut trials = Vec::with_capacity(positives.len() + negatives.len());
    let labelled = positives
        .into_iter()
        .map(|p| (p, TrialLabel::SameSpeaker))
        .chain(negatives.into_iter().map(|p| (p, TrialLabel::DifferentSpeaker)));
    for (n, ((a, b), label)) in labelled.enumerate() {
        let (enrollment, test) = if rng.gen::<bool>() { (a, b) } else { (b, a) };
        trials.push(Trial { id: format!("trial-{n:05}"), enrollment, test, label });
    }
    let counts = count_trials(&trials);
    Ok(TrialSet { policy, seed, counts, trials })
}

pub fn count_trials(trials: &[Trial]) -> TrialCounts {
    let positives = trials.iter().filter(|t| t.label == TrialLabel::SameSpeaker).count();
    TrialCounts { total: trials.len(), positives, negatives: trials.len() - positives }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    PositiveSameTopic,
    PositiveDifferentSpeaker,
    NegativeSameSpeaker,
    NegativeDifferentTopic,
    SameConversation,
    CountMismatch,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::PositiveSameTopic => "positive-same-topic",
            Self::PositiveDifferentSpeaker => "positive-different-speaker",
            Self::NegativeSameSpeaker => "negative-same-speaker",
            Self::NegativeDifferentTopic => "negative-different-topic",
            Self::SameConversation => "same-conversation",
            Self::CountMismatch => "count-mismatch",
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// `None` for set-level violations.
    pub trial: Option<String>,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every policy violation. Fails only when a trial references a
/// conversation the corpus does not contain.
pub fn validate_trial_set(ts: &TrialSet, corpus: &Corpus) -> Result<ValidationReport> {
    let mut report = ValidationReport::default();
    let mut flag = |trial: &Trial, kind| report.violations.push(Violation { trial: Some(trial.id.clone()), kind });
    for t in &ts.trials {
        let e = corpus.require(&t.enrollment)?;
        let x = corpus.require(&t.test)?;
        if t.enrollment == t.test {
            flag(t, ViolationKind::SameConversation);
        }
        match (ts.policy, t.label) {
            (TrialPolicy::Hard, TrialLabel::SameSpeaker) => {
                if e.speaker != x.speaker {
                    flag(t, ViolationKind::PositiveDifferentSpeaker);
                }
                if e.topic == x.topic {
                    flag(t, ViolationKind::PositiveSameTopic);
                }
            }
            (TrialPolicy::Hard, TrialLabel::DifferentSpeaker) => {
                if e.speaker == x.speaker {
                    flag(t, ViolationKind::NegativeSameSpeaker);
                }
                if e.topic != x.topic {
                    flag(t, ViolationKind::NegativeDifferentTopic);
                }
            }
        }
    }
    if count_trials(&ts.trials) != ts.counts {
        report.violations.push(Violation { trial: None, kind: ViolationKind::CountMismatch });
    }
    Ok(report)
}
