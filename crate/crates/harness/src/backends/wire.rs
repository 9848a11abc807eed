//! Request and response bodies of the backend wire protocol.
//!
//! One JSON route per role:
//!
//! | route            | request                                         | response                   |
//! |------------------|-------------------------------------------------|----------------------------|
//! | `/v1/transcribe` | `{audio_ref}`                                   | `{utterances: [{text}]}`   |
//! | `/v1/synthesize` | `{text, speaker_embedding \| speaker_ref}`      | `{audio_ref}`              |
//! | `/v1/paraphrase` | `{context: [..], lines: [..], policy: {..}}`    | `{lines: [..]}`            |
//! | `/v1/embed`      | `{kind, texts? \| audio_ref? \| audio_refs?}`   | `{vector: [..]}`           |
//! | `/v1/score`      | `{kind, item: {text? \| audio_ref?}}`           | `{score}`                  |
//!
//! Every response also carries `model_id` and `backend_version`.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use lfa_core::prompt::ParaphraseRequest;

pub trait WireResponse: DeserializeOwned {
    /// Top-level fields that must be present.
    const REQUIRED: &'static [&'static str];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscribeRequest {
    pub audio_ref: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextItem {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscribeResponse {
    pub utterances: Vec<TextItem>,
    pub model_id: String,
    pub backend_version: String,
}

impl WireResponse for TranscribeResponse {
    const REQUIRED: &'static [&'static str] = &["utterances", "model_id", "backend_version"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesizeRequest {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker_embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesizeResponse {
    pub audio_ref: String,
    pub model_id: String,
    pub backend_version: String,
}

impl WireResponse for SynthesizeResponse {
    const REQUIRED: &'static [&'static str] = &["audio_ref", "model_id", "backend_version"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParaphraseResponse {
    pub lines: Vec<String>,
    pub model_id: String,
    pub backend_version: String,
}

impl WireResponse for ParaphraseResponse {
    const REQUIRED: &'static [&'static str] = &["lines", "model_id", "backend_version"];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedKind {
    Speaker,
    Style,
    Sentence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub kind: EmbedKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub texts: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_ref: Option<String>,
    /// Several clips embedded as one; pooling is up to the backend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_refs: Option<Vec<String>>,
}

impl EmbedRequest {
    pub fn texts(kind: EmbedKind, texts: Vec<String>) -> Self {
        Self { kind, texts: Some(texts), audio_ref: None, audio_refs: None }
    }

    pub fn audio(refs: Vec<String>) -> Self {
        Self { kind: EmbedKind::Speaker, texts: None, audio_ref: None, audio_refs: Some(refs) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vector: Vec<f64>,
    pub model_id: String,
    pub backend_version: String,
}

impl WireResponse for EmbedResponse {
    const REQUIRED: &'static [&'static str] = &["vector", "model_id", "backend_version"];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    SpeechSynth,
    TextSynth,
    Naturalness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreItem {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub kind: ScoreKind,
    pub item: ScoreItem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub score: f64,
    pub model_id: String,
    pub backend_version: String,
}

impl WireResponse for ScoreResponse {
    const REQUIRED: &'static [&'static str] = &["score", "model_id", "backend_version"];
}

/// Error body returned by adapters with a non-success status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub error: String,
    pub message: String,
}

const INLINE_PREFIX: &str = "data:audio/wav;base64,";

/// Inline fallback for small audio payloads passed where a locator is expected.
pub fn inline_audio_ref(bytes: &[u8]) -> String {
    format!("{INLINE_PREFIX}{}", STANDARD.encode(bytes))
}

pub fn decode_inline_audio(audio_ref: &str) -> Option<Vec<u8>> {
    STANDARD.decode(audio_ref.strip_prefix(INLINE_PREFIX)?).ok()
}
