//! Pseudo target speakers: random convex mixtures of pool speaker embeddings.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::SpeakerId;
use crate::error::{Error, Result};
use crate::hash;
use crate::vector::{l2_normalize, EmbeddingVector};

pub const MIN_MEMBERS: usize = 5;
pub const MAX_MEMBERS: usize = 6;

/// Weight distribution used for mixing.
pub const WEIGHT_DISTRIBUTION: &str = "dirichlet(1)";

/// One pool speaker, represented by the embedding of its longest utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub id: String,
    pub embedding: EmbeddingVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoSpeaker {
    pub target_for: SpeakerId,
    pub pool_members: Vec<String>,
    pub weights: Vec<f64>,
    /// Weighted sum before renormalization.
    pub mixture: Vec<f64>,
    /// Unit-normalized mixture.
    pub embedding: EmbeddingVector,
}

/// Draws a pseudo speaker for `speaker`.
///
/// The draw is keyed on `(seed, speaker)`: a coin flip picks 5 or 6
/// members, members are sampled without replacement from the pool sorted by
/// id, and weights are Dirichlet(1) (uniform spacings of sorted uniforms).
pub fn mix_pseudo_speaker(pool: &[PoolEntry], seed: u64, speaker: &SpeakerId) -> Result<PseudoSpeaker> {
    if pool.len() < MAX_MEMBERS {
        return Err(Error::PoolTooSmall { found: pool.len(), required: MAX_MEMBERS });
    }
    let dim = pool[0].embedding.dim();
    if let Some(bad) = pool.iter().find(|p| p.embedding.dim() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: bad.embedding.dim() });
    }
    let mut sorted: Vec<&PoolEntry> = pool.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));

    let mut rng = hash::rng_for(seed, "pseudo-speaker", speaker.as_str());
    let k = if rng.gen::<bool>() { MAX_MEMBERS } else { MIN_MEMBERS };
    let mut picks = index::sample(&mut rng, sorted.len(), k).into_vec();
    picks.sort_unstable();
    let members: Vec<&PoolEntry> = picks.iter().map(|&i| sorted[i]).collect();
    let weights = dirichlet_ones(&mut rng, k);

    let embeddings: Vec<&EmbeddingVector> = members.iter().map(|m| &m.embedding).collect();
    let (mixture, embedding) = mix_embeddings(&embeddings, &weights)?;
    Ok(PseudoSpeaker {
        target_for: speaker.clone(),
        pool_members: members.iter().map(|m| m.id.clone()).collect(),
        weights,
        mixture,
        embedding,
    })
}

/// Uniform sample from the (k-1)-simplex.
fn dirichlet_ones<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let mut cuts: Vec<f64> = (0..k - 1).map(|_| rng.gen::<f64>()).collect();
    cuts.sort_by(f64::total_cmp);
    let mut weights = Vec::with_capacity(k);
    let mut prev = 0.0;
    for c in cuts {
        weights.push(c - prev);
        prev = c;
    }
    weights.push(1.0 - prev);
    weights
}

/// Weighted sum of embeddings and its unit-normalized form.
pub fn mix_embeddings(embeddings: &[&EmbeddingVector], weights: &[f64]) -> Result<(Vec<f64>, EmbeddingVector)> {
    let dim = embeddings.first().ok_or(Error::EmptySequence("pool member"))?.dim();
    if embeddings.len() != weights.len() {
        return Err(Error::InvalidParameter("one weight per member required".into()));
    }
    let mut mixture = alloc::vec![0.0; dim];
    for (e, &w) in embeddings.iter().zip(weights) {
        if e.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: e.dim() });
        }
        for (acc, v) in mixture.iter_mut().zip(e.values()) {
            *acc += w * v;
        }
    }
    let mut unit = mixture.clone();
    if !l2_normalize(&mut unit) {
        return Err(Error::DegenerateMix);
    }
    Ok((mixture, EmbeddingVector::new(unit)?))
}

/// Keeps one pseudo speaker per source speaker for the whole run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PseudoSpeakerRegistry {
    pub seed: u64,
    pub speakers: BTreeMap<SpeakerId, PseudoSpeaker>,
}

impl PseudoSpeakerRegistry {
    pub fn new(seed: u64) -> Self {
        Self { seed, speakers: BTreeMap::new() }
    }

    pub fn get_or_mix(&mut self, pool: &[PoolEntry], speaker: &SpeakerId) -> Result<&PseudoSpeaker> {
        if !self.speakers.contains_key(speaker) {
            let ps = mix_pseudo_speaker(pool, self.seed, speaker)?;
            self.speakers.insert(speaker.clone(), ps);
        }
        Ok(&self.speakers[speaker])
    }

    pub fn get(&self, speaker: &SpeakerId) -> Option<&PseudoSpeaker> {
        self.speakers.get(speaker)
    }
}
