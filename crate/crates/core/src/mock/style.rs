use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::vocab;
use crate::hash::{fnv1a, unit_interval};
use crate::textnorm::normalize_text;
use crate::vector::l2_normalize;

pub const STYLE_DIM: usize = 256;
pub const SENTENCE_DIM: usize = 128;

const FUNCTION_WEIGHT: f64 = 1.0;
const TRIGRAM_WEIGHT: f64 = 0.25;
const LENGTH_WEIGHT: f64 = 0.3;

/// Signed feature hashing: bucket and sign for a feature name.
pub fn feature_index(feature: &str, dim: usize) -> (usize, f64) {
    let h = fnv1a(feature.as_bytes());
    let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
    ((h % dim as u64) as usize, sign)
}

fn add(block: &mut [f64], feature: &str, amount: f64) {
    let (i, sign) = feature_index(feature, block.len());
    block[i] += sign * amount;
}

fn finish_block(mut block: Vec<f64>, weight: f64, into: &mut [f64]) {
    if l2_normalize(&mut block) {
        for (acc, v) in into.iter_mut().zip(block) {
            *acc += weight * v;
        }
    }
}

/// Stylometric embedding of a set of utterances.
///
/// Three hashed feature blocks, each normalized and then weighted:
/// function-word frequencies (including fillers), within-word character
/// 3-grams, and a bucket of the mean utterance length. Input with no tokens
/// maps to the first basis vector.
pub fn mock_style_embed<S: AsRef<str>>(utterances: &[S]) -> Vec<f64> {
    let mut function = vec![0.0; STYLE_DIM];
    let mut trigrams = vec![0.0; STYLE_DIM];
    let mut length = vec![0.0; STYLE_DIM];
    let (mut tokens, mut non_empty) = (0usize, 0usize);

    for u in utterances {
        let norm = normalize_text(u.as_ref());
        let mut n = 0;
        for tok in norm.split(' ').filter(|t| !t.is_empty()) {
            n += 1;
            if vocab::is_function_word(tok) {
                add(&mut function, &format!("fw:{tok}"), 1.0);
            }
            let padded: Vec<char> = core::iter::once('<').chain(tok.chars()).chain(core::iter::once('>')).collect();
            for w in padded.windows(3) {
                let g: String = w.iter().collect();
                add(&mut trigrams, &format!("c3:{g}"), 1.0);
            }
        }
        tokens += n;
        non_empty += usize::from(n > 0);
    }

    let mut out = vec![0.0; STYLE_DIM];
    if tokens == 0 {
        out[0] = 1.0;
        return out;
    }
    let mean_len = tokens as f64 / non_empty as f64;
    let bucket = ((mean_len / 2.0) as usize).min(15);
    add(&mut length, &format!("len:{bucket}"), 1.0);

    finish_block(function, FUNCTION_WEIGHT, &mut out);
    finish_block(trigrams, TRIGRAM_WEIGHT, &mut out);
    finish_block(length, LENGTH_WEIGHT, &mut out);
    l2_normalize(&mut out);
    out
}

/// Bag-of-words sentence embedding dominated by content words.
pub fn mock_sentence_embed(text: &str) -> Vec<f64> {
    let mut out = vec![0.0; SENTENCE_DIM];
    for tok in normalize_text(text).split(' ').filter(|t| !t.is_empty()) {
        if vocab::is_filler(tok) {
            continue;
        }
        let weight = if vocab::is_function_word(tok) { 0.3 } else { 1.0 };
        // slot variants are near-synonyms: they share a feature
        let feature = match vocab::slot_of(tok) {
            Some((slot, _)) => format!("slot:{slot}"),
            None => format!("w:{tok}"),
        };
        add(&mut out, &feature, weight);
    }
    if !l2_normalize(&mut out) {
        out[0] = 1.0;
    }
    out
}

/// Machine-text detector score in `[0, 1]`: share of slot words that are
/// the global default variant, smoothed toward 0.5 for short input, plus a
/// small deterministic jitter.
pub fn mock_text_synth_score(text: &str) -> f64 {
    let norm = normalize_text(text);
    let (mut defaults, mut slotted, mut fillers) = (0.0, 0.0, 0.0);
    for tok in norm.split(' ').filter(|t| !t.is_empty()) {
        if let Some((_, variant)) = vocab::slot_of(tok) {
            slotted += 1.0;
            if variant == 0 {
                defaults += 1.0;
            }
        } else if vocab::is_filler(tok) {
            fillers += 1.0;
        }
    }
    let prior = 1.0;
    let share = (defaults + 0.5 * prior) / (slotted + fillers + prior);
    let jitter = unit_interval(fnv1a(norm.as_bytes())) - 0.5;
    (0.8 * share + 0.2 * (jitter + 0.5)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::cosine;

    #[test]
    fn deterministic_and_unit() {
        let a = mock_style_embed(&["yeah i think it was really nice", "um okay"]);
        let b = mock_style_embed(&["yeah i think it was really nice", "um okay"]);
        assert_eq!(a, b);
        assert!((crate::vector::norm(&a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_input_is_basis_vector() {
        let v = mock_style_embed(&[""]);
        assert_eq!(v[0], 1.0);
        assert_eq!(v.iter().filter(|x| **x != 0.0).count(), 1);
    }

    #[test]
    fn function_words_dominate() {
        let a = mock_style_embed(&["honestly the zarpo was totally lots of fun"]);
        let same_style = mock_style_embed(&["honestly the quimble was totally lots of fun"]);
        let other_style = mock_style_embed(&["basically the zarpo was pretty tons of fun"]);
        assert!(cosine(&a, &same_style) > cosine(&a, &other_style));
    }

    #[test]
    fn sentence_embed_treats_slot_variants_as_synonyms() {
        let a = mock_sentence_embed("yeah the garden was really lovely");
        let b = mock_sentence_embed("yes the garden was very lovely");
        assert!((cosine(&a, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn text_score_range() {
        for t in ["", "yeah yeah", "uh um right sure", "the cat"] {
            let s = mock_text_synth_score(t);
            assert!((0.0..=1.0).contains(&s));
        }
        assert!(mock_text_synth_score("yeah and very many things") > mock_text_synth_score("yep plus super tons stuff"));
    }
}
