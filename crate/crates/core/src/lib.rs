//! Pure algorithms for evaluating voice and content anonymization of
//! long-form conversational speech.
//!
//! This crate only needs `alloc`. Everything that touches files, the
//! network, or the clock lives in the `lfa` companion crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod error;
pub mod hash;
pub mod metrics;
pub mod mock;
pub mod prompt;
pub mod pseudo;
pub mod textnorm;
pub mod vector;
pub mod windowing;

pub use corpus::{
    Conversation, ConversationId, Corpus, SpeakerId, TopicId, Trial, TrialCounts, TrialLabel,
    TrialLimits, TrialPolicy, TrialSet, Utterance, ValidationReport, Violation, ViolationKind,
};
pub use error::{Error, Result};
pub use metrics::{CurvePoint, EerCurve, ScoreSet, UtilityReport};
pub use prompt::{Granularity, ParaphraseRequest, PiiMode, PromptPolicy};
pub use pseudo::{PoolEntry, PseudoSpeaker, PseudoSpeakerRegistry};
pub use textnorm::{normalize_text, token_count};
pub use vector::EmbeddingVector;
pub use windowing::{ParaphraseAlignment, Segment, SegmentMode, SegmentPlan};
