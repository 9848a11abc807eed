//! Deterministic stand-ins for the model backends, plus a synthetic
//! corpus of speakers with persistent lexical style.
//!
//! Every function here is pure in its inputs (and seed, where one is taken),
//! so full pipeline runs can be reproduced offline.

mod paraphrase;
mod style;
mod synth;
pub mod vocab;
mod voice;

pub use paraphrase::{mock_paraphrase, MERGE_BELOW, SPLIT_ABOVE};
pub use style::{feature_index, mock_sentence_embed, mock_style_embed, mock_text_synth_score, SENTENCE_DIM, STYLE_DIM};
pub use synth::{generate_mock_pool, generate_synthetic_corpus, SpeakerStyle, SynthParams};
pub use voice::{mock_naturalness, mock_speech_synth_score, mock_voice_embed, VOICE_DIM};
