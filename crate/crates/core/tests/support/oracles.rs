//! Brute-force reference implementations, independent of the library's
//! sweep and dynamic-programming code paths.

#![allow(dead_code)]

/// EER by scanning every candidate threshold and counting from scratch.
pub fn eer_bruteforce(pos: &[f64], neg: &[f64]) -> f64 {
    let mut all: Vec<f64> = pos.iter().chain(neg).copied().collect();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut thresholds = vec![f64::NEG_INFINITY, f64::INFINITY];
    for i in 0..all.len() {
        for j in 0..all.len() {
            // midpoint of each pair of adjacent distinct values
            if all[j] > all[i] && !all.iter().any(|&x| x > all[i] && x < all[j]) {
                thresholds.push((all[i] + all[j]) / 2.0);
            }
        }
    }
    let (np, nn) = (pos.len() as i128, neg.len() as i128);
    let mut best: Option<(i128, i128, f64)> = None;
    for t in thresholds {
        let fa = neg.iter().filter(|&&s| s >= t).count() as i128;
        let fr = pos.iter().filter(|&&s| s < t).count() as i128;
        let gap = (fa * np - fr * nn).abs();
        let sum = fa * np + fr * nn;
        let eer = (fa as f64 / nn as f64 + fr as f64 / np as f64) / 2.0;
        best = match best {
            Some(b) if (b.0, b.1) <= (gap, sum) => Some(b),
            _ => Some((gap, sum, eer)),
        };
    }
    best.unwrap().2
}

/// DTW similarity by enumerating every monotone warping path.
pub fn dtw_bruteforce(costs: &[Vec<f64>]) -> f64 {
    fn walk(costs: &[Vec<f64>], i: usize, j: usize, acc: f64, len: usize, best: &mut (f64, usize)) {
        let acc = acc + costs[i][j];
        let len = len + 1;
        let (m, n) = (costs.len(), costs[0].len());
        if i == m - 1 && j == n - 1 {
            if acc < best.0 || (acc == best.0 && len > best.1) {
                *best = (acc, len);
            }
            return;
        }
        if i + 1 < m && j + 1 < n {
            walk(costs, i + 1, j + 1, acc, len, best);
        }
        if i + 1 < m {
            walk(costs, i + 1, j, acc, len, best);
        }
        if j + 1 < n {
            walk(costs, i, j + 1, acc, len, best);
        }
    }
    let mut best = (f64::INFINITY, 0);
    walk(costs, 0, 0, 0.0, 0, &mut best);
    1.0 - best.0 / best.1 as f64
}

/// Greedy alignment by rescanning the whole matrix for each pick.
pub fn gas_quadratic(sim: &[Vec<f64>]) -> f64 {
    let (m, n) = (sim.len(), sim[0].len());
    let mut row_used = vec![false; m];
    let mut col_used = vec![false; n];
    let mut picked = Vec::new();
    for _ in 0..m.min(n) {
        let mut best: Option<(usize, usize)> = None;
        for i in 0..m {
            for j in 0..n {
                if row_used[i] || col_used[j] {
                    continue;
                }
                if best.map_or(true, |(bi, bj)| sim[i][j] > sim[bi][bj]) {
                    best = Some((i, j));
                }
            }
        }
        let (i, j) = best.unwrap();
        row_used[i] = true;
        col_used[j] = true;
        picked.push(sim[i][j]);
    }
    picked.iter().sum::<f64>() / picked.len() as f64
}

/// All compositions of `total` into `parts` positive integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 1..=total - (parts - 1) {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Best summed similarity over all monotone covers of `m` sources by `n`
/// outputs (merge when `n < m`, split when `n > m`, 1:1 when equal).
pub fn best_cover_bruteforce(sim: &[Vec<f64>]) -> f64 {
    let (m, n) = (sim.len(), sim[0].len());
    if m == n {
        return (0..m).map(|i| sim[i][i]).sum();
    }
    let merge = n < m;
    let (total, parts) = if merge { (m, n) } else { (n, m) };
    compositions(total, parts)
        .into_iter()
        .map(|comp| {
            let mut score = 0.0;
            let mut cursor = 0;
            for (group, size) in comp.into_iter().enumerate() {
                for member in cursor..cursor + size {
                    score += if merge { sim[member][group] } else { sim[group][member] };
                }
                cursor += size;
            }
            score
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

pub fn random_unit_vectors(rng: &mut impl rand::Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect()
}
