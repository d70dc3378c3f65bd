//! Exact k-nearest-neighbor search over a row-major reference set.

/// Indices of the `k` reference rows closest to `query` in Euclidean
/// distance, nearest first. Equal distances resolve to the lower row index.
/// `k` is clamped to the number of reference rows.
pub fn k_nearest(reference: &[f64], n_features: usize, query: &[f64], k: usize) -> Vec<usize> {
    debug_assert_eq!(query.len(), n_features);
    let mut scored: Vec<(f64, usize)> = reference
        .chunks_exact(n_features)
        .enumerate()
        .map(|(i, r)| (squared_distance(r, query), i))
        .collect();
    let k = k.min(scored.len());
    if k == 0 {
        return Vec::new();
    }
    let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, by_distance);
        scored.truncate(k);
    }
    scored.sort_unstable_by(by_distance);
    scored.into_iter().map(|(_, i)| i).collect()
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
