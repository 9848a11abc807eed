//! Model-service layer: one endpoint per role, a shared response cache, and
//! offline mock implementations.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::digest::sha256_parts;
use crate::error::{Error, Result};

pub mod cache;
pub mod client;
pub mod mock;
pub mod transport;
pub mod wire;

pub use cache::{CacheEntry, ResponseCache};
pub use client::{BackendClient, CallStats};
pub use mock::{MockFailure, MockTransport, MockWorld};
pub use transport::{HttpTransport, Transport, TransportError};

use wire::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Asr,
    Tts,
    Paraphraser,
    SpeakerEmbedder,
    StyleEmbedder,
    SentenceEmbedder,
    SpeechDetector,
    TextDetector,
    NaturalnessScorer,
}

impl Role {
    pub const ALL: [Role; 9] = [
        Role::Asr,
        Role::Tts,
        Role::Paraphraser,
        Role::SpeakerEmbedder,
        Role::StyleEmbedder,
        Role::SentenceEmbedder,
        Role::SpeechDetector,
        Role::TextDetector,
        Role::NaturalnessScorer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Role::Asr => "asr",
            Role::Tts => "tts",
            Role::Paraphraser => "paraphraser",
            Role::SpeakerEmbedder => "speaker_embedder",
            Role::StyleEmbedder => "style_embedder",
            Role::SentenceEmbedder => "sentence_embedder",
            Role::SpeechDetector => "speech_detector",
            Role::TextDetector => "text_detector",
            Role::NaturalnessScorer => "naturalness_scorer",
        }
    }

    pub fn route(self) -> &'static str {
        match self {
            Role::Asr => "/v1/transcribe",
            Role::Tts => "/v1/synthesize",
            Role::Paraphraser => "/v1/paraphrase",
            Role::SpeakerEmbedder | Role::StyleEmbedder | Role::SentenceEmbedder => "/v1/embed",
            Role::SpeechDetector | Role::TextDetector | Role::NaturalnessScorer => "/v1/score",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Role::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown backend role `{s}`")))
    }
}

pub const MOCK_BASE: &str = "mock://";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointDescriptor {
    pub role: Role,
    /// `mock://` or an `http(s)://` base URL.
    pub base: String,
    pub model: String,
    pub timeout_ms: u64,
    pub retries: u32,
    pub in_flight: usize,
    pub backoff_ms: u64,
}

impl EndpointDescriptor {
    pub fn mock(role: Role) -> Self {
        Self {
            role,
            base: MOCK_BASE.into(),
            model: format!("mock-{}", role.name()),
            timeout_ms: 30_000,
            retries: 2,
            in_flight: 8,
            backoff_ms: 0,
        }
    }

    /// `sha256(role, base, model)`, first 16 hex digits.
    pub fn backend_id(&self) -> String {
        let full = sha256_parts(&[self.role.name().as_bytes(), b"\0", self.base.as_bytes(), b"\0", self.model.as_bytes()]);
        full[..16].to_string()
    }

    pub fn is_mock(&self) -> bool {
        self.base.starts_with(MOCK_BASE)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendErrorKind {
    #[error("timed out")]
    Timeout,
    #[error("status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("transport: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("response is missing required field `{field}`")]
    Schema { field: String },
}

impl From<TransportError> for BackendErrorKind {
    fn from(e: TransportError) -> Self {
        match e {
            TransportError::Timeout => Self::Timeout,
            TransportError::Status { status, body } => Self::Status { status, body },
            TransportError::Connection(m) => Self::Transport(m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("backend {backend_id} ({role}) failed after {attempts} attempt(s): {kind}")]
pub struct BackendError {
    pub backend_id: String,
    pub role: Role,
    pub attempts: u32,
    pub kind: BackendErrorKind,
}

/// Clients for every configured role, sharing one cache.
#[derive(Clone, Default)]
pub struct BackendSet {
    clients: BTreeMap<Role, Arc<BackendClient>>,
}

impl BackendSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds clients for `endpoints`. Mock endpoints need `world`.
    pub fn from_endpoints(
        endpoints: &[EndpointDescriptor],
        cache: Arc<ResponseCache>,
        world: Option<Arc<MockWorld>>,
    ) -> Result<Self> {
        let mut set = Self::new();
        for ep in endpoints {
            let transport: Box<dyn Transport> = if ep.is_mock() {
                let world = world
                    .clone()
                    .ok_or_else(|| Error::Config(format!("mock backend for {} needs a corpus", ep.role)))?;
                Box::new(MockTransport::new(ep.role, world))
            } else if ep.base.starts_with("http://") || ep.base.starts_with("https://") {
                Box::new(HttpTransport::new(&ep.base).map_err(|e| Error::Config(e.to_string()))?)
            } else {
                return Err(Error::Config(format!("unsupported base `{}` for {}", ep.base, ep.role)));
            };
            set.insert(BackendClient::new(ep.clone(), transport, cache.clone()));
        }
        Ok(set)
    }

    /// All roles served by mocks over `world`.
    pub fn mock(world: Arc<MockWorld>, cache: Arc<ResponseCache>) -> Self {
        let endpoints: Vec<_> = Role::ALL.into_iter().map(EndpointDescriptor::mock).collect();
        Self::from_endpoints(&endpoints, cache, Some(world)).expect("mock endpoints are valid")
    }

    pub fn insert(&mut self, client: BackendClient) {
        self.clients.insert(client.descriptor().role, Arc::new(client));
    }

    pub fn has(&self, role: Role) -> bool {
        self.clients.contains_key(&role)
    }

    pub fn get(&self, role: Role) -> Result<&BackendClient> {
        self.clients
            .get(&role)
            .map(|c| c.as_ref())
            .ok_or_else(|| Error::Config(format!("no {role} backend configured")))
    }

    pub fn require(&self, roles: &[Role]) -> Result<()> {
        roles.iter().try_for_each(|r| self.get(*r).map(|_| ()))
    }

    pub fn backend_ids(&self) -> BTreeMap<Role, String> {
        self.clients.iter().map(|(r, c)| (*r, c.backend_id().to_string())).collect()
    }

    pub fn stats(&self) -> BTreeMap<Role, CallStats> {
        self.clients.iter().map(|(r, c)| (*r, c.stats())).collect()
    }

    /// Transport invocations summed over all clients.
    pub fn network_calls(&self) -> u64 {
        self.clients.values().map(|c| c.stats().network_attempts).sum()
    }

    pub fn transcribe(&self, audio_ref: &str) -> Result<Vec<String>> {
        let resp: TranscribeResponse =
            self.get(Role::Asr)?.call(&TranscribeRequest { audio_ref: audio_ref.to_string() })?;
        Ok(resp.utterances.into_iter().map(|u| u.text).collect())
    }

    pub fn synthesize(&self, request: &SynthesizeRequest) -> Result<String> {
        let resp: SynthesizeResponse = self.get(Role::Tts)?.call(request)?;
        Ok(resp.audio_ref)
    }

    pub fn paraphrase(&self, request: &ParaphraseRequest) -> Result<Vec<String>> {
        let resp: ParaphraseResponse = self.get(Role::Paraphraser)?.call(request)?;
        Ok(resp.lines)
    }

    pub fn embed(&self, request: &EmbedRequest) -> Result<Vec<f64>> {
        let role = match request.kind {
            EmbedKind::Speaker => Role::SpeakerEmbedder,
            EmbedKind::Style => Role::StyleEmbedder,
            EmbedKind::Sentence => Role::SentenceEmbedder,
        };
        let resp: EmbedResponse = self.get(role)?.call(request)?;
        Ok(resp.vector)
    }

    pub fn score(&self, request: &ScoreRequest) -> Result<f64> {
        let role = match request.kind {
            ScoreKind::SpeechSynth => Role::SpeechDetector,
            ScoreKind::TextSynth => Role::TextDetector,
            ScoreKind::Naturalness => Role::NaturalnessScorer,
        };
        let resp: ScoreResponse = self.get(role)?.call(request)?;
        Ok(resp.score)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backend_ids_are_stable_and_distinct() {
        let a = EndpointDescriptor::mock(Role::Asr);
        assert_eq!(a.backend_id(), EndpointDescriptor::mock(Role::Asr).backend_id());
        assert_eq!(a.backend_id().len(), 16);
        let ids: std::collections::BTreeSet<_> =
            Role::ALL.into_iter().map(|r| EndpointDescriptor::mock(r).backend_id()).collect();
        assert_eq!(ids.len(), Role::ALL.len());
    }

    #[test]
    fn role_names_round_trip() {
        for r in Role::ALL {
            assert_eq!(r.name().parse::<Role>().unwrap(), r);
        }
        assert!("tts2".parse::<Role>().is_err());
    }
}
