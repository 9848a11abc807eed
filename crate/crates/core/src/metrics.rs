//! Scalar evaluation metrics: EER, greedy alignment score, DTW similarity,
//! detectability curves, and utility summaries.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::cosine;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub positives: Vec<f64>,
    pub negatives: Vec<f64>,
}

impl ScoreSet {
    pub fn new(positives: Vec<f64>, negatives: Vec<f64>) -> Self {
        Self { positives, negatives }
    }
}

/// Equal error rate.
///
/// Thresholds are `-inf`, the midpoints between consecutive distinct
/// scores, and `+inf`. At threshold `t`, `FAR = |{neg >= t}| / |neg|` and
/// `FRR = |{pos < t}| / |pos|`. The threshold minimizing `|FAR - FRR|` is
/// chosen, ties going to the smaller `FAR + FRR`, and the EER is
/// `(FAR + FRR) / 2` there. Comparisons use exact integer arithmetic.
pub fn compute_eer(scores: &ScoreSet) -> Result<f64> {
    check_side(&scores.positives, "positive")?;
    check_side(&scores.negatives, "negative")?;

    let mut pos = scores.positives.clone();
    let mut neg = scores.negatives.clone();
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let mut distinct: Vec<f64> = pos.iter().chain(&neg).copied().collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();

    let (np, nn) = (pos.len() as u128, neg.len() as u128);
    // pos_below: |{pos < t}|, neg_below: |{neg < t}|
    let (mut pos_below, mut neg_below) = (0usize, 0usize);
    let mut best = Candidate::new(0, nn as usize, np, nn); // t = -inf
    for w in distinct.windows(2) {
        let t = (w[0] + w[1]) / 2.0;
        while pos_below < pos.len() && pos[pos_below] < t {
            pos_below += 1;
        }
        while neg_below < neg.len() && neg[neg_below] < t {
            neg_below += 1;
        }
        best = best.better(Candidate::new(pos_below, neg.len() - neg_below, np, nn));
    }
    best = best.better(Candidate::new(pos.len(), 0, np, nn)); // t = +inf
    Ok(best.eer(np, nn))
}

fn check_side(side: &[f64], name: &'static str) -> Result<()> {
    if side.is_empty() {
        return Err(Error::EmptyScores(name));
    }
    if side.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFiniteScore(name));
    }
    Ok(())
}

/// An operating point, with `|FAR - FRR|` and `FAR + FRR` scaled by
/// `|pos| * |neg|` so they compare exactly.
#[derive(Clone, Copy)]
struct Candidate {
    false_rejects: usize,
    false_accepts: usize,
    gap: u128,
    sum: u128,
}

impl Candidate {
    fn new(false_rejects: usize, false_accepts: usize, np: u128, nn: u128) -> Self {
        let fa = false_accepts as u128 * np;
        let fr = false_rejects as u128 * nn;
        Self { false_rejects, false_accepts, gap: fa.abs_diff(fr), sum: fa + fr }
    }

    fn better(self, other: Self) -> Self {
        if (other.gap, other.sum) < (self.gap, self.sum) {
            other
        } else {
            self
        }
    }

    fn eer(&self, np: u128, nn: u128) -> f64 {
        let far = self.false_accepts as f64 / nn as f64;
        let frr = self.false_rejects as f64 / np as f64;
        (far + frr) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: usize,
    pub eer: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

/// EER as a function of the number of aggregated utterances.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EerCurve {
    pub points: Vec<CurvePoint>,
}

impl EerCurve {
    pub fn eer_at(&self, k: usize) -> Option<f64> {
        self.points.iter().find(|p| p.k == k).map(|p| p.eer)
    }
}

/// Sorts and deduplicates a list of utterance counts; rejects empty lists and zero.
pub fn normalize_ks(ks: &[usize]) -> Result<Vec<usize>> {
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    match ks.first() {
        None => Err(Error::InvalidParameter("at least one k is required".into())),
        Some(0) => Err(Error::InvalidParameter("k must be positive".into())),
        Some(_) => Ok(ks),
    }
}

/// Mean of the first `min(k, n)` scores.
pub fn mean_of_first(scores: &[f64], k: usize) -> Option<f64> {
    let take = k.min(scores.len());
    (take > 0).then(|| scores[..take].iter().sum::<f64>() / take as f64)
}

/// Detectability of synthetic content as a function of `k`.
///
/// Each conversation is scored by the mean of its first `min(k, n)`
/// per-utterance detector scores; synthetic conversations are the positive
/// class and real ones the negative class. Lower EER means more detectable.
pub fn detectability_curve(real: &[Vec<f64>], synthetic: &[Vec<f64>], ks: &[usize]) -> Result<EerCurve> {
    if real.iter().chain(synthetic).any(Vec::is_empty) {
        return Err(Error::EmptySequence("per-utterance score"));
    }
    let ks = normalize_ks(ks)?;
    let mut points = Vec::with_capacity(ks.len());
    for k in ks {
        let agg = |convs: &[Vec<f64>]| convs.iter().filter_map(|s| mean_of_first(s, k)).collect::<Vec<_>>();
        let set = ScoreSet::new(agg(synthetic), agg(real));
        let eer = compute_eer(&set)?;
        points.push(CurvePoint { k, eer, n_pos: set.positives.len(), n_neg: set.negatives.len() });
    }
    Ok(EerCurve { points })
}

/// Cosine similarity matrix between two embedding sequences.
pub fn similarity_matrix<A: AsRef<[f64]>, B: AsRef<[f64]>>(left: &[A], right: &[B]) -> Vec<Vec<f64>> {
    left.iter()
        .map(|a| right.iter().map(|b| cosine(a.as_ref(), b.as_ref())).collect())
        .collect()
}

/// Greedy alignment score over embeddings. See [`greedy_alignment_from_matrix`].
pub fn greedy_alignment_score<A: AsRef<[f64]>, B: AsRef<[f64]>>(orig: &[A], para: &[B]) -> Result<f64> {
    if orig.is_empty() {
        return Err(Error::EmptySequence("original"));
    }
    if para.is_empty() {
        return Err(Error::EmptySequence("paraphrased"));
    }
    Ok(greedy_alignment_from_matrix(&similarity_matrix(orig, para)))
}

/// Repeatedly picks the globally most similar unmatched pair until one side
/// runs out, then averages the picked similarities. Ties go to the lower
/// original index, then the lower paraphrase index.
pub fn greedy_alignment_from_matrix(sim: &[Vec<f64>]) -> f64 {
    let rows = sim.len();
    let cols = sim.first().map_or(0, Vec::len);
    let mut pairs: Vec<(usize, usize)> = (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).collect();
    pairs.sort_by(|&(i, j), &(k, l)| {
        sim[k][l].partial_cmp(&sim[i][j]).unwrap_or(Ordering::Equal).then((i, j).cmp(&(k, l)))
    });
    let mut row_used = vec![false; rows];
    let mut col_used = vec![false; cols];
    let (mut total, mut picked) = (0.0, 0usize);
    for (i, j) in pairs {
        if row_used[i] || col_used[j] {
            continue;
        }
        row_used[i] = true;
        col_used[j] = true;
        total += sim[i][j];
        picked += 1;
        if picked == rows.min(cols) {
            break;
        }
    }
    total / picked as f64
}

/// DTW similarity over embeddings. See [`dtw_from_costs`].
pub fn dtw_similarity<A: AsRef<[f64]>, B: AsRef<[f64]>>(orig: &[A], para: &[B]) -> Result<f64> {
    if orig.is_empty() {
        return Err(Error::EmptySequence("original"));
    }
    if para.is_empty() {
        return Err(Error::EmptySequence("paraphrased"));
    }
    let costs: Vec<Vec<f64>> =
        similarity_matrix(orig, para).into_iter().map(|row| row.into_iter().map(|s| 1.0 - s).collect()).collect();
    Ok(dtw_from_costs(&costs))
}

/// Path-length normalization of the optimal DTW cost.
pub const DTW_NORMALIZATION: &str = "optimal-path-length";

/// Classic DTW with steps (1,0), (0,1), (1,1) over a cost matrix; returns
/// `1 - cost / path_length` of the minimum-cost path. Among equal-cost
/// paths the longest is used.
pub fn dtw_from_costs(costs: &[Vec<f64>]) -> f64 {
    let rows = costs.len();
    let cols = costs[0].len();
    // (cumulative cost, path length)
    let mut acc = vec![vec![(f64::INFINITY, 0usize); cols]; rows];
    for i in 0..rows {
        for j in 0..cols {
            let c = costs[i][j];
            acc[i][j] = if i == 0 && j == 0 {
                (c, 1)
            } else {
                let mut best = (f64::INFINITY, 0usize);
                let preds = [
                    (i > 0 && j > 0).then(|| acc[i - 1][j - 1]),
                    (i > 0).then(|| acc[i - 1][j]),
                    (j > 0).then(|| acc[i][j - 1]),
                ];
                for p in preds.into_iter().flatten() {
                    if p.0 < best.0 || (p.0 == best.0 && p.1 > best.1) {
                        best = p;
                    }
                }
                (best.0 + c, best.1 + 1)
            };
        }
    }
    let (cost, len) = acc[rows - 1][cols - 1];
    1.0 - cost / len as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub gas: f64,
    pub dtw_sim: f64,
    pub mean_utt_len: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub naturalness_mean: Option<f64>,
}

/// Combines per-utterance sentence embeddings, anonymized token counts, and
/// optional naturalness scores into a utility record.
pub fn utility_report<A: AsRef<[f64]>, B: AsRef<[f64]>>(
    orig_embs: &[A],
    anon_embs: &[B],
    anon_token_counts: &[usize],
    naturalness: Option<&[f64]>,
) -> Result<UtilityReport> {
    let gas = greedy_alignment_score(orig_embs, anon_embs)?;
    let dtw_sim = dtw_similarity(orig_embs, anon_embs)?;
    let mean_utt_len = mean(&anon_token_counts.iter().map(|&c| c as f64).collect::<Vec<_>>()).unwrap_or(0.0);
    let naturalness_mean = naturalness.and_then(mean);
    Ok(UtilityReport { gas, dtw_sim, mean_utt_len, naturalness_mean })
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eer(pos: &[f64], neg: &[f64]) -> f64 {
        compute_eer(&ScoreSet::new(pos.to_vec(), neg.to_vec())).unwrap()
    }

    #[test]
    fn eer_fixed_examples() {
        assert_eq!(eer(&[0.9, 0.8], &[0.1, 0.2]), 0.0);
        assert_eq!(eer(&[0.1, 0.2], &[0.8, 0.9]), 1.0);
        assert_eq!(eer(&[0.6, 0.4], &[0.5, 0.3]), 0.5);
    }

    #[test]
    fn eer_constant_scores() {
        assert_eq!(eer(&[0.3; 5], &[0.3; 7]), 0.5);
    }

    #[test]
    fn eer_rejects_empty_and_nan() {
        assert_eq!(compute_eer(&ScoreSet::new(vec![], vec![1.0])), Err(Error::EmptyScores("positive")));
        assert_eq!(compute_eer(&ScoreSet::new(vec![1.0], vec![])), Err(Error::EmptyScores("negative")));
        assert_eq!(
            compute_eer(&ScoreSet::new(vec![f64::NAN], vec![1.0])),
            Err(Error::NonFiniteScore("positive"))
        );
    }

    #[test]
    fn gas_examples() {
        assert_eq!(greedy_alignment_from_matrix(&[vec![0.9, 0.5]]), 0.9);
        let g = greedy_alignment_from_matrix(&[vec![0.9, 0.8], vec![0.85, 0.2]]);
        assert!((g - 0.55).abs() < 1e-12);
    }

    #[test]
    fn gas_identical_lists() {
        let v = [vec![1.0, 0.0, 0.0], vec![0.0, 0.6, 0.8]];
        assert!((greedy_alignment_score(&v, &v).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dtw_examples() {
        let v = [vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.8]];
        assert!((dtw_similarity(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(dtw_similarity(&[[1.0, 0.0]], &[[0.0, 1.0]]).unwrap(), 0.0);
        assert!(dtw_similarity::<[f64; 2], [f64; 2]>(&[], &[[0.0, 1.0]]).is_err());
    }

    #[test]
    fn dtw_prefers_longer_path_on_cost_ties() {
        // every cell costs zero: the longest path (3 cells) is reported
        let costs = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        assert_eq!(dtw_from_costs(&costs), 1.0);
        let costs = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        // min cost is the diagonal (1.0 over 2 cells)
        assert!((dtw_from_costs(&costs) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn detectability_examples() {
        let curve = detectability_curve(&[vec![0.1, 0.3]], &[vec![0.9, 0.7]], &[2]).unwrap();
        assert_eq!(curve.points, [CurvePoint { k: 2, eer: 0.0, n_pos: 1, n_neg: 1 }]);
        let flat = detectability_curve(&vec![vec![0.5; 4]; 3], &vec![vec![0.5; 4]; 3], &[1, 2, 4]).unwrap();
        assert!(flat.points.iter().all(|p| p.eer == 0.5));
        assert!(detectability_curve(&[vec![]], &[vec![0.5]], &[1]).is_err());
    }

    #[test]
    fn ks_are_sorted_and_validated() {
        assert_eq!(normalize_ks(&[4, 1, 2, 4]).unwrap(), [1, 2, 4]);
        assert!(normalize_ks(&[0, 1]).is_err());
        assert!(normalize_ks(&[]).is_err());
    }

    #[test]
    fn utility_identity_and_naturalness() {
        let v = [vec![1.0, 0.0], vec![0.0, 1.0]];
        let r = utility_report(&v, &v, &[3, 5], Some(&[3.0, 4.0])).unwrap();
        assert!((r.gas - 1.0).abs() < 1e-12);
        assert!((r.dtw_sim - 1.0).abs() < 1e-12);
        assert_eq!(r.mean_utt_len, 4.0);
        assert_eq!(r.naturalness_mean, Some(3.5));
        let r = utility_report(&v, &v, &[3, 5], None).unwrap();
        assert_eq!(r.naturalness_mean, None);
    }
}
