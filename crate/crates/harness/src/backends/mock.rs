//! Deterministic in-process backends.
//!
//! Audio never exists: original clips are the corpus audio refs, and
//! synthesized clips are refs of the form `mock://synth/<voice>/<text>`
//! (both parts base64url), so ASR over a synthesized clip recovers the text
//! and the speaker embedder recovers the voice.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use lfa_core::corpus::Corpus;
use lfa_core::mock;
use lfa_core::vector::l2_normalize;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use super::transport::{Transport, TransportError};
use super::wire::*;
use super::Role;
use crate::digest::sha256_hex;

pub const SYNTH_PREFIX: &str = "mock://synth/";

/// Clip lookup for original audio refs.
#[derive(Debug, Default)]
pub struct MockWorld {
    clips: HashMap<String, Clip>,
}

#[derive(Debug, Clone)]
struct Clip {
    speaker: String,
    text: String,
}

impl MockWorld {
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let mut world = Self::default();
        world.add_corpus(corpus);
        world
    }

    pub fn add_corpus(&mut self, corpus: &Corpus) {
        for conv in corpus.conversations() {
            for u in &conv.utterances {
                if let Some(r) = &u.audio_ref {
                    self.clips.insert(r.clone(), Clip { speaker: u.speaker.to_string(), text: u.text.clone() });
                }
            }
        }
    }

    fn transcript(&self, audio_ref: &str) -> Option<String> {
        match decode_synth_ref(audio_ref) {
            Some((_, text)) => Some(text),
            None => self.clips.get(audio_ref).map(|c| c.text.clone()),
        }
    }

    fn voice(&self, audio_ref: &str) -> Option<String> {
        match decode_synth_ref(audio_ref) {
            Some((voice, _)) => Some(voice),
            None => self.clips.get(audio_ref).map(|c| speaker_voice(&c.speaker)),
        }
    }
}

fn speaker_voice(speaker: &str) -> String {
    format!("spk.{speaker}")
}

fn mixed_voice(embedding: &[f64]) -> String {
    let bytes = serde_json::to_vec(embedding).expect("finite embedding");
    format!("mix.{}", &sha256_hex(&bytes)[..16])
}

pub fn synth_ref(voice: &str, text: &str) -> String {
    format!("{SYNTH_PREFIX}{}/{}", URL_SAFE_NO_PAD.encode(voice), URL_SAFE_NO_PAD.encode(text))
}

/// `(voice, text)` of a synthesized ref.
pub fn decode_synth_ref(audio_ref: &str) -> Option<(String, String)> {
    let rest = audio_ref.strip_prefix(SYNTH_PREFIX)?;
    let (v, t) = rest.split_once('/')?;
    let voice = String::from_utf8(URL_SAFE_NO_PAD.decode(v).ok()?).ok()?;
    let text = String::from_utf8(URL_SAFE_NO_PAD.decode(t).ok()?).ok()?;
    Some((voice, text))
}

pub fn is_synthetic_ref(audio_ref: &str) -> bool {
    audio_ref.starts_with(SYNTH_PREFIX)
}

/// Injected misbehaviour for tests.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum MockFailure {
    #[default]
    None,
    /// Every call fails to connect.
    Down,
    /// The first `n` calls answer 503.
    FailFirst(u64),
    /// Responses omit this field.
    DropField(String),
}

pub struct MockTransport {
    role: Role,
    world: Arc<MockWorld>,
    failure: MockFailure,
    calls: Arc<AtomicU64>,
    model_id: String,
}

impl MockTransport {
    pub fn new(role: Role, world: Arc<MockWorld>) -> Self {
        Self {
            role,
            world,
            failure: MockFailure::None,
            calls: Arc::new(AtomicU64::new(0)),
            model_id: format!("mock-{}", role.name()),
        }
    }

    pub fn with_failure(mut self, failure: MockFailure) -> Self {
        self.failure = failure;
        self
    }

    /// Shared counter of calls received.
    pub fn counter(&self) -> Arc<AtomicU64> {
        self.calls.clone()
    }

    fn respond(&self, body: &[u8]) -> Result<Value, TransportError> {
        match self.role {
            Role::Asr => {
                let req: TranscribeRequest = decode(body)?;
                let text = self.world.transcript(&req.audio_ref).ok_or_else(|| unknown(&req.audio_ref))?;
                Ok(json!({ "utterances": [{ "text": text }] }))
            }
            Role::Tts => {
                let req: SynthesizeRequest = decode(body)?;
                let voice = match (&req.speaker_embedding, &req.speaker_ref) {
                    (Some(e), _) => mixed_voice(e),
                    (None, Some(s)) => speaker_voice(s),
                    (None, None) => return Err(bad_request("speaker_embedding or speaker_ref required")),
                };
                Ok(json!({ "audio_ref": synth_ref(&voice, &req.text) }))
            }
            Role::Paraphraser => {
                let req: ParaphraseRequest = decode(body)?;
                Ok(json!({ "lines": mock::mock_paraphrase(&req) }))
            }
            Role::SpeakerEmbedder | Role::StyleEmbedder | Role::SentenceEmbedder => {
                let req: EmbedRequest = decode(body)?;
                Ok(json!({ "vector": self.embed(&req)? }))
            }
            Role::SpeechDetector | Role::TextDetector | Role::NaturalnessScorer => {
                let req: ScoreRequest = decode(body)?;
                Ok(json!({ "score": self.score(&req)? }))
            }
        }
    }

    fn embed(&self, req: &EmbedRequest) -> Result<Vec<f64>, TransportError> {
        match req.kind {
            EmbedKind::Speaker => {
                let refs: Vec<&String> = req.audio_ref.iter().chain(req.audio_refs.iter().flatten()).collect();
                if refs.is_empty() {
                    return Err(bad_request("speaker embedding needs audio"));
                }
                let mut acc = vec![0.0; mock::VOICE_DIM];
                for r in refs {
                    let voice = self.world.voice(r).ok_or_else(|| unknown(r))?;
                    for (a, v) in acc.iter_mut().zip(mock::mock_voice_embed(&voice, r)) {
                        *a += v;
                    }
                }
                if !l2_normalize(&mut acc) {
                    acc[0] = 1.0;
                }
                Ok(acc)
            }
            EmbedKind::Style => {
                let texts = req.texts.as_deref().ok_or_else(|| bad_request("style embedding needs texts"))?;
                Ok(mock::mock_style_embed(texts))
            }
            EmbedKind::Sentence => {
                let texts = req.texts.as_deref().ok_or_else(|| bad_request("sentence embedding needs texts"))?;
                Ok(mock::mock_sentence_embed(&texts.join(" ")))
            }
        }
    }

    fn score(&self, req: &ScoreRequest) -> Result<f64, TransportError> {
        match (req.kind, &req.item) {
            (ScoreKind::TextSynth, ScoreItem { text: Some(t), .. }) => Ok(mock::mock_text_synth_score(t)),
            (ScoreKind::SpeechSynth, ScoreItem { audio_ref: Some(r), .. }) => {
                Ok(mock::mock_speech_synth_score(is_synthetic_ref(r), r))
            }
            (ScoreKind::Naturalness, ScoreItem { audio_ref: Some(r), .. }) => {
                Ok(mock::mock_naturalness(is_synthetic_ref(r), r))
            }
            _ => Err(bad_request("score item does not match kind")),
        }
    }
}

fn decode<T: DeserializeOwned>(body: &[u8]) -> Result<T, TransportError> {
    serde_json::from_slice(body).map_err(|e| bad_request(&e.to_string()))
}

fn error_body(status: u16, error: &str, message: &str) -> TransportError {
    let record = ErrorRecord { error: error.into(), message: message.into() };
    TransportError::Status { status, body: serde_json::to_string(&record).expect("serializable") }
}

fn bad_request(message: &str) -> TransportError {
    error_body(400, "bad_request", message)
}

fn unknown(audio_ref: &str) -> TransportError {
    error_body(404, "unknown_audio", audio_ref)
}

impl Transport for MockTransport {
    fn post(&self, route: &str, body: &[u8], _timeout: Duration) -> Result<Vec<u8>, TransportError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        match &self.failure {
            MockFailure::Down => return Err(TransportError::Connection("connection refused".into())),
            MockFailure::FailFirst(k) if n < *k => return Err(error_body(503, "unavailable", "warming up")),
            _ => {}
        }
        if route != self.role.route() {
            return Err(error_body(404, "no_route", route));
        }
        let mut value = self.respond(body)?;
        let obj = value.as_object_mut().expect("responses are objects");
        obj.insert("model_id".into(), json!(self.model_id));
        obj.insert("backend_version".into(), json!(env!("CARGO_PKG_VERSION")));
        if let MockFailure::DropField(f) = &self.failure {
            obj.remove(f);
        }
        Ok(serde_json::to_vec(&value).expect("serializable"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synth_refs_round_trip() {
        let r = synth_ref("mix.00ff", "hello there / again");
        assert!(is_synthetic_ref(&r));
        assert_eq!(decode_synth_ref(&r).unwrap(), ("mix.00ff".into(), "hello there / again".into()));
        assert!(decode_synth_ref("mock://orig/a/b/0").is_none());
    }

    #[test]
    fn tts_then_asr_is_identity() {
        let world = Arc::new(MockWorld::default());
        let tts = MockTransport::new(Role::Tts, world.clone());
        let asr = MockTransport::new(Role::Asr, world);
        let t = Duration::from_secs(1);
        let out = tts.post("/v1/synthesize", br#"{"text":"Hi there.","speaker_ref":"s1"}"#, t).unwrap();
        let audio_ref = serde_json::from_slice::<Value>(&out).unwrap()["audio_ref"].as_str().unwrap().to_string();
        let body = serde_json::to_vec(&json!({ "audio_ref": audio_ref })).unwrap();
        let text: TranscribeResponse = serde_json::from_slice(&asr.post("/v1/transcribe", &body, t).unwrap()).unwrap();
        assert_eq!(text.utterances[0].text, "Hi there.");
        assert_eq!(asr.counter().load(Ordering::SeqCst), 1);
    }
}
