use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::vocab::{COMMON, FILLERS, SLOTS};
use crate::corpus::{Conversation, Corpus, UtteranceRecord};
use crate::error::{Error, Result};
use crate::hash;
use crate::pseudo::PoolEntry;
use crate::vector::{l2_normalize, EmbeddingVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthParams {
    pub n_speakers: usize,
    pub convs_per_speaker: usize,
    pub topics: usize,
    pub utts_per_conv: usize,
    pub seed: u64,
}

/// A speaker's persistent lexical habits.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerStyle {
    /// Favorite variant per slot.
    pub favorites: Vec<usize>,
    /// Probability of using the favorite when a slot is drawn.
    pub loyalty: f64,
    /// Share of tokens that are slot words.
    pub slot_rate: f64,
    pub filler_rate: f64,
    pub backchannel_rate: f64,
    pub mean_len: f64,
}

impl SpeakerStyle {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        Self {
            favorites: SLOTS.iter().map(|v| rng.gen_range(0..v.len())).collect(),
            loyalty: rng.gen_range(0.6..0.9),
            slot_rate: rng.gen_range(0.25..0.4),
            filler_rate: rng.gen_range(0.0..0.12),
            backchannel_rate: rng.gen_range(0.05..0.2),
            mean_len: rng.gen_range(5.0..13.0),
        }
    }

    fn slot_word(&self, rng: &mut ChaCha8Rng) -> &'static str {
        let slot = rng.gen_range(0..SLOTS.len());
        let variants = SLOTS[slot];
        if rng.gen_bool(self.loyalty) {
            variants[self.favorites[slot]]
        } else {
            variants[rng.gen_range(0..variants.len())]
        }
    }
}

const SYLLABLE_ONSETS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "sh", "tr"];
const SYLLABLE_VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "ou"];
const TOPIC_VOCAB: usize = 60;

fn topic_vocabulary(seed: u64, topic: usize) -> Vec<String> {
    let mut rng = hash::rng_for(seed, "topic-vocab", &format!("{topic}"));
    let mut words: Vec<String> = Vec::with_capacity(TOPIC_VOCAB);
    while words.len() < TOPIC_VOCAB {
        let syllables = rng.gen_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(SYLLABLE_ONSETS.choose(&mut rng).unwrap());
            w.push_str(SYLLABLE_VOWELS.choose(&mut rng).unwrap());
        }
        if !words.contains(&w) {
            words.push(w);
        }
    }
    words
}

fn render(tokens: &[&str], question: bool) -> String {
    let mut s = tokens.join(" ");
    if let Some(first) = s.get(..1) {
        let upper = first.to_uppercase();
        s.replace_range(..1, &upper);
    }
    s.push(if question { '?' } else { '.' });
    s
}

/// Synthetic conversational corpus with speaker-specific style.
///
/// Each speaker gets persistent habits (favorite function-word variants,
/// filler rate, backchannel rate, utterance length); each conversation a
/// topic whose vocabulary supplies the content words. A speaker's
/// conversations are on distinct topics whenever `topics >=
/// convs_per_speaker`. Audio refs use the `mock://orig/` scheme.
pub fn generate_synthetic_corpus(p: SynthParams) -> Result<Corpus> {
    if p.n_speakers < 2 || p.topics < 2 || p.convs_per_speaker < 1 || p.utts_per_conv < 1 {
        return Err(Error::InvalidParameter(format!(
            "synthetic corpus needs >=2 speakers, >=2 topics, >=1 conversation and utterance; got {p:?}"
        )));
    }
    let vocabularies: Vec<Vec<String>> = (0..p.topics).map(|t| topic_vocabulary(p.seed, t)).collect();
    let mut convs = Vec::with_capacity(p.n_speakers * p.convs_per_speaker);
    for s in 0..p.n_speakers {
        let speaker = format!("spk{s:03}");
        let mut rng = hash::rng_for(p.seed, "speaker", &speaker);
        let style = SpeakerStyle::draw(&mut rng);
        let gender = if rng.gen::<bool>() { "f" } else { "m" };
        let topics: Vec<usize> = if p.topics >= p.convs_per_speaker {
            index::sample(&mut rng, p.topics, p.convs_per_speaker).into_vec()
        } else {
            (0..p.convs_per_speaker).map(|_| rng.gen_range(0..p.topics)).collect()
        };
        for (c, &topic) in topics.iter().enumerate() {
            let conv_id = format!("{speaker}-c{c}");
            let mut crng = hash::rng_for(p.seed, "conversation", &conv_id);
            let vocab = &vocabularies[topic];
            let records = (0..p.utts_per_conv)
                .map(|i| {
                    let tokens = utterance_tokens(&style, vocab, &mut crng);
                    UtteranceRecord {
                        index: i,
                        text: render(&tokens, crng.gen_bool(0.15)),
                        audio_ref: Some(format!("mock://orig/{speaker}/{conv_id}/{i}")),
                    }
                })
                .collect();
            convs.push(Conversation::new(
                conv_id.as_str().into(),
                speaker.as_str().into(),
                format!("topic{topic:02}").into(),
                Some(gender.into()),
                records,
            )?);
        }
    }
    Corpus::from_conversations(convs)
}

fn utterance_tokens<'a>(style: &SpeakerStyle, vocab: &'a [String], rng: &mut ChaCha8Rng) -> Vec<&'a str> {
    if rng.gen_bool(style.backchannel_rate) {
        let mut t = Vec::new();
        if rng.gen_bool((style.filler_rate * 3.0).min(1.0)) {
            t.push(FILLERS[rng.gen_range(0..FILLERS.len())]);
        }
        let variant = if rng.gen_bool(style.loyalty) { style.favorites[0] } else { rng.gen_range(0..SLOTS[0].len()) };
        t.push(SLOTS[0][variant]);
        return t;
    }
    let spread = style.mean_len / 2.0;
    let len = rng.gen_range((style.mean_len - spread).max(1.0)..=(style.mean_len + spread)) as usize;
    (0..len.max(1))
        .map(|_| {
            let r: f64 = rng.gen();
            if r < style.filler_rate {
                FILLERS[rng.gen_range(0..FILLERS.len())]
            } else if r < style.filler_rate + style.slot_rate {
                style.slot_word(rng)
            } else if r < style.filler_rate + style.slot_rate + 0.3 {
                COMMON[rng.gen_range(0..COMMON.len())]
            } else {
                // mildly Zipfian over the topic vocabulary
                let a = rng.gen_range(0..vocab.len());
                let b = rng.gen_range(0..vocab.len());
                vocab[a.min(b)].as_str()
            }
        })
        .collect()
}

/// Pool of unit-norm speaker embeddings for pseudo-speaker mixing.
pub fn generate_mock_pool(n: usize, dim: usize, seed: u64) -> Result<Vec<PoolEntry>> {
    if dim == 0 {
        return Err(Error::InvalidParameter("pool embedding dimension must be positive".into()));
    }
    (0..n)
        .map(|i| {
            let id = format!("pool{i:04}");
            let mut rng = hash::rng_for(seed, "pool", &id);
            let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if !l2_normalize(&mut v) {
                v[0] = 1.0;
            }
            Ok(PoolEntry { id, embedding: EmbeddingVector::new(v)? })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_trial_set, validate_trial_set, TrialLimits, TrialPolicy};

    fn params(seed: u64) -> SynthParams {
        SynthParams { n_speakers: 40, convs_per_speaker: 2, topics: 8, utts_per_conv: 64, seed }
    }

    #[test]
    fn structure_and_trials() {
        let corpus = generate_synthetic_corpus(params(7)).unwrap();
        assert_eq!(corpus.len(), 80);
        assert_eq!(corpus.utterance_count(), 80 * 64);
        let ts = build_trial_set(&corpus, TrialPolicy::Hard, TrialLimits::default(), 7).unwrap();
        assert_eq!(ts.counts.positives, 40);
        assert!(validate_trial_set(&ts, &corpus).unwrap().is_clean());
    }

    #[test]
    fn deterministic() {
        let a = generate_synthetic_corpus(params(3)).unwrap();
        let b = generate_synthetic_corpus(params(3)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_synthetic_corpus(params(4)).unwrap());
    }

    #[test]
    fn invalid_sizes() {
        let bad = SynthParams { topics: 1, ..params(1) };
        assert!(generate_synthetic_corpus(bad).is_err());
    }

    #[test]
    fn pool_is_unit_norm() {
        let pool = generate_mock_pool(10, 16, 1).unwrap();
        assert_eq!(pool.len(), 10);
        for p in &pool {
            assert!((p.embedding.norm() - 1.0).abs() < 1e-12);
        }
    }
}
