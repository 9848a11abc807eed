use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("conversation `{0}` has no utterances")]
    EmptyConversation(String),
    #[error("duplicate conversation id `{0}`")]
    DuplicateConversation(String),
    #[error("conversation `{conversation}`: {reason}")]
    InvalidConversation { conversation: String, reason: String },
    #[error("unknown conversation id `{0}`")]
    UnknownConversation(String),
    #[error("trial policy cannot be satisfied: {0}")]
    Unsatisfiable(String),
    #[error("score set has an empty {0} side")]
    EmptyScores(&'static str),
    #[error("non-finite score in {0} side")]
    NonFiniteScore(&'static str),
    #[error("empty {0} sequence")]
    EmptySequence(&'static str),
    #[error("embedding dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("pseudo-speaker pool has {found} entries, at least {required} required")]
    PoolTooSmall { found: usize, required: usize },
    #[error("mixed embedding has zero norm")]
    DegenerateMix,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("paraphraser output violates the line contract: {0}")]
    IrreparableOutput(String),
}
