//! Best-permutation segmentation accuracy: how well predicted code
//! sequences match true sub-task labels up to a relabeling of the codes.

use crate::{Error, Result};

/// Maximum over all K! permutations of the per-step agreement fraction
/// between `pred` (codes in 0..k) and `truth` (labels in 0..k). Refuses
/// k > 6 since the search is factorial.
pub fn segmentation_accuracy(pred: &[usize], truth: &[usize], k: usize) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::config("prediction and truth lengths differ"));
    }
    if pred.is_empty() {
        return Err(Error::config("empty label sequences"));
    }
    if k > 6 {
        return Err(Error::config(
            "refusing k > 6: the permutation search is factorial; \
             evaluate per-cluster agreement directly instead",
        ));
    }
    if pred.iter().chain(truth).any(|&x| x >= k) {
        return Err(Error::config("label outside 0..k"));
    }

    // confusion counts: hits[c][l] = steps with code c and true label l
    let mut hits = vec![vec![0usize; k]; k];
    for (&c, &l) in pred.iter().zip(truth) {
        hits[c][l] += 1;
    }

    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = 0usize;
    permute(&mut perm, 0, &mut |p| {
        let score: usize = (0..k).map(|c| hits[c][p[c]]).sum();
        if score > best {
            best = score;
        }
    });
    Ok(best as f64 / pred.len() as f64)
}

fn permute<F: FnMut(&[usize])>(items: &mut Vec<usize>, start: usize, visit: &mut F) {
    if start == items.len() {
        visit(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permute(items, start + 1, visit);
        items.swap(start, i);
    }
}
