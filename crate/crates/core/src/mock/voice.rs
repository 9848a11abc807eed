use alloc::vec::Vec;

use rand::Rng;

use crate::hash::{fnv1a, rng_for, unit_interval};
use crate::vector::l2_normalize;

pub const VOICE_DIM: usize = 32;
const CLIP_JITTER: f64 = 0.5;

/// Speaker embedding of one clip: the voice's base direction plus a
/// clip-specific perturbation, unit-normalized.
pub fn mock_voice_embed(voice_key: &str, clip_key: &str) -> Vec<f64> {
    let mut base_rng = rng_for(0, "voice", voice_key);
    let mut clip_rng = rng_for(0, "clip", clip_key);
    let mut v: Vec<f64> = (0..VOICE_DIM).map(|_| base_rng.gen_range(-1.0..1.0)).collect();
    l2_normalize(&mut v);
    let mut jitter: Vec<f64> = (0..VOICE_DIM).map(|_| clip_rng.gen_range(-1.0..1.0)).collect();
    l2_normalize(&mut jitter);
    for (x, j) in v.iter_mut().zip(jitter) {
        *x += CLIP_JITTER * j;
    }
    if !l2_normalize(&mut v) {
        v[0] = 1.0;
    }
    v
}

/// Synthetic-speech detector score by provenance. Real clips land in
/// `[0.05, 0.55)`, synthetic ones in `[0.45, 0.95)`.
pub fn mock_speech_synth_score(synthetic: bool, clip_key: &str) -> f64 {
    let u = unit_interval(fnv1a(clip_key.as_bytes()));
    if synthetic {
        0.45 + 0.5 * u
    } else {
        0.05 + 0.5 * u
    }
}

/// Naturalness (MOS-like, 1 to 5) by provenance.
pub fn mock_naturalness(synthetic: bool, clip_key: &str) -> f64 {
    let u = unit_interval(fnv1a(clip_key.as_bytes()) ^ 0x5555);
    let center = if synthetic { 3.14 } else { 2.09 };
    (center + 0.6 * (u - 0.5)).clamp(1.0, 5.0)
}
