//! Reference implementations used as test oracles. They favour obviousness
//! over speed and share no code with the library.

#![allow(dead_code)]

use std::collections::BTreeSet;

/// Fused list by brute force. Inputs are article ids in rank order.
/// Scores are returned doubled so they stay integral.
pub fn fuse_oracle(s: &[String], r: &[String], a: usize) -> Vec<(String, u64)> {
    let position = |list: &[String], id: &String| list.iter().position(|x| x == id).map(|p| p as u64 + 1);
    let n_s = s.len() as u64;
    let mut ids: Vec<String> = s.to_vec();
    for id in r {
        if !ids.contains(id) {
            ids.push(id.clone());
        }
    }
    let mut scored: Vec<(String, u64)> = ids
        .into_iter()
        .map(|id| {
            let twice = match (position(s, &id), position(r, &id)) {
                (Some(sr), Some(rr)) => sr + rr,
                (Some(sr), None) => 2 * sr * n_s,
                (None, Some(rr)) => 2 * rr * n_s,
                (None, None) => unreachable!(),
            };
            (id, twice)
        })
        .collect();
    // plain insertion sort on (score, id)
    for i in 1..scored.len() {
        let mut j = i;
        while j > 0 && (scored[j].1, &scored[j].0) < (scored[j - 1].1, &scored[j - 1].0) {
            scored.swap(j, j - 1);
            j -= 1;
        }
    }
    scored.truncate(a * s.len());
    scored
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub intersection: usize,
    pub common_match: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub jaccard: f64,
    pub hamming_loss: f64,
    pub cardinality_difference: f64,
}

/// Metrics over articles with a non-empty prediction and a non-empty truth,
/// counted label by label over the whole label universe.
pub fn metrics_oracle(
    pred: &[(String, BTreeSet<String>)],
    truth: &[(String, BTreeSet<String>)],
    labels: &[String],
) -> Option<Metrics> {
    let mut rows = Vec::new();
    for (id, p) in pred {
        let p: Vec<bool> = labels.iter().map(|l| p.contains(l)).collect();
        let Some((_, t)) = truth.iter().find(|(tid, _)| tid == id) else {
            continue;
        };
        let t: Vec<bool> = labels.iter().map(|l| t.contains(l)).collect();
        if p.iter().any(|&x| x) && t.iter().any(|&x| x) {
            rows.push((p, t));
        }
    }
    if rows.is_empty() {
        return None;
    }
    let n = rows.len() as f64;
    let mut m = Metrics {
        intersection: rows.len(),
        common_match: 0.0,
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
        jaccard: 0.0,
        hamming_loss: 0.0,
        cardinality_difference: 0.0,
    };
    let mut card_p = 0.0;
    let mut card_t = 0.0;
    for (p, t) in &rows {
        let (mut tp, mut fp, mut fneg) = (0.0, 0.0, 0.0);
        for k in 0..labels.len() {
            match (p[k], t[k]) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, true) => fneg += 1.0,
                _ => {}
            }
        }
        if tp > 0.0 {
            m.common_match += 1.0;
        }
        m.precision += tp / (tp + fp);
        m.recall += tp / (tp + fneg);
        m.f1 += 2.0 * tp / (2.0 * tp + fp + fneg);
        m.jaccard += tp / (tp + fp + fneg);
        m.hamming_loss += (fp + fneg) / labels.len() as f64;
        card_p += tp + fp;
        card_t += tp + fneg;
    }
    m.common_match /= n;
    m.precision /= n;
    m.recall /= n;
    m.f1 /= n;
    m.jaccard /= n;
    m.hamming_loss /= n;
    m.cardinality_difference = card_p / n - card_t / n;
    Some(m)
}

/// Singular values (descending) by one-sided Jacobi rotations on a
/// column-major copy of the matrix.
pub fn jacobi_singular_values(rows: usize, cols: usize, data: &[f64]) -> Vec<f64> {
    // work on the narrower side
    let (m, n, mut a) = if cols <= rows {
        let mut cols_v = vec![vec![0.0; rows]; cols];
        for i in 0..rows {
            for j in 0..cols {
                cols_v[j][i] = data[i * cols + j];
            }
        }
        (rows, cols, cols_v)
    } else {
        let mut cols_v = vec![vec![0.0; cols]; rows];
        for i in 0..rows {
            for j in 0..cols {
                cols_v[i][j] = data[i * cols + j];
            }
        }
        (cols, rows, cols_v)
    };
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                let gamma = dot(&a[p], &a[q]);
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = a.split_at_mut(q);
                let (cp, cq) = (&mut lo[p], &mut hi[0]);
                for i in 0..m {
                    let x = cp[i];
                    let y = cq[i];
                    cp[i] = c * x - s * y;
                    cq[i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = a.iter().map(|col| dot(col, col).sqrt()).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}
