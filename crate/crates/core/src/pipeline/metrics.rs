//! Label-map comparison.

use crate::error::{Error, Result};

/// Largest label count matched by exhaustive search over permutations.
pub const EXHAUSTIVE_LIMIT: usize = 6;

/// Fraction of pixels that agree after the best one-to-one relabeling of
/// predicted objects onto true objects. Background (0) only matches 0.
pub fn permutation_matched_accuracy(pred: &[u32], truth: &[u32]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::invalid(format!("label maps have {} and {} pixels", pred.len(), truth.len())));
    }
    if pred.is_empty() {
        return Err(Error::invalid("empty label maps"));
    }
    let mut p_ids: Vec<u32> = pred.iter().copied().filter(|&l| l > 0).collect();
    p_ids.sort_unstable();
    p_ids.dedup();
    let mut t_ids: Vec<u32> = truth.iter().copied().filter(|&l| l > 0).collect();
    t_ids.sort_unstable();
    t_ids.dedup();
    let k = p_ids.len().max(t_ids.len());
    // square weight matrix, zero-padded
    let mut w = vec![vec![0.0f64; k]; k];
    let mut background = 0usize;
    for (&p, &t) in pred.iter().zip(truth) {
        if p == 0 || t == 0 {
            if p == 0 && t == 0 {
                background += 1;
            }
            continue;
        }
        let i = p_ids.binary_search(&p).expect("collected id");
        let j = t_ids.binary_search(&t).expect("collected id");
        w[i][j] += 1.0;
    }
    let matched = if k <= EXHAUSTIVE_LIMIT {
        best_permutation(&w)
    } else {
        hungarian_max(&w)
    };
    Ok((background as f64 + matched) / pred.len() as f64)
}

/// Maximum of `sum_i w[i][perm[i]]` by enumerating all permutations.
pub fn best_permutation(w: &[Vec<f64>]) -> f64 {
    fn go(w: &[Vec<f64>], row: usize, used: &mut [bool], acc: f64, best: &mut f64) {
        if row == w.len() {
            *best = best.max(acc);
            return;
        }
        for j in 0..w.len() {
            if !used[j] {
                used[j] = true;
                go(w, row + 1, used, acc + w[row][j], best);
                used[j] = false;
            }
        }
    }
    let mut best = 0.0;
    go(w, 0, &mut vec![false; w.len()], 0.0, &mut best);
    best
}

/// Maximum-weight perfect assignment on a square matrix (Hungarian method
/// with potentials, O(k^3)).
pub fn hungarian_max(w: &[Vec<f64>]) -> f64 {
    let n = w.len();
    if n == 0 {
        return 0.0;
    }
    let top = w.iter().flatten().copied().fold(0.0, f64::max);
    // minimize cost = top - w; 1-based arrays with a virtual column 0
    let cost = |i: usize, j: usize| top - w[i - 1][j - 1];
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n).map(|j| w[p[j] - 1][j - 1]).sum()
}

/// Intersection over union of two boolean masks; 1 when both are empty.
pub fn mask_iou(a: &[bool], b: &[bool]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid("mask sizes differ"));
    }
    let inter = a.iter().zip(b).filter(|(x, y)| **x && **y).count();
    let union = a.iter().zip(b).filter(|(x, y)| **x || **y).count();
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_cases() {
        let truth = vec![0, 1, 1, 2, 2, 0];
        assert_eq!(permutation_matched_accuracy(&truth, &truth).unwrap(), 1.0);
        let swapped = vec![0, 2, 2, 1, 1, 0];
        assert_eq!(permutation_matched_accuracy(&swapped, &truth).unwrap(), 1.0);
        // one predicted object covering two equal true objects
        let merged = vec![0, 1, 1, 1, 1, 0];
        assert_eq!(permutation_matched_accuracy(&merged, &truth).unwrap(), 4.0 / 6.0);
        assert!(permutation_matched_accuracy(&truth, &truth[..3]).is_err());
        // background never matches an object label
        assert_eq!(permutation_matched_accuracy(&[1, 1], &[0, 0]).unwrap(), 0.0);
    }

    #[test]
    fn iou() {
        assert_eq!(mask_iou(&[true, true, false], &[true, false, false]).unwrap(), 0.5);
        assert_eq!(mask_iou(&[false], &[false]).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn hungarian_matches_exhaustive(k in 1usize..6, raw in proptest::collection::vec(0u32..50, 36)) {
            let w: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| raw[i * 6 + j] as f64).collect()).collect();
            prop_assert_eq!(hungarian_max(&w), best_permutation(&w));
        }

        #[test]
        fn accuracy_bounds_and_relabel_invariance(
            truth in proptest::collection::vec(0u32..4, 30),
            pred in proptest::collection::vec(0u32..9, 30),
            shift in 1u32..5,
        ) {
            let a = permutation_matched_accuracy(&pred, &truth).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            let relabeled: Vec<u32> = pred.iter().map(|&p| if p == 0 { 0 } else { p + shift * 10 }).collect();
            prop_assert_eq!(permutation_matched_accuracy(&relabeled, &truth).unwrap(), a);
        }
    }
}
