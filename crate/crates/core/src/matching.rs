//! Maximum-weight bipartite matching.
//!
//! Shortest-augmenting-path Hungarian algorithm with dual potentials,
//! `O(n^2 m)` for an `n x m` matrix with `n <= m`.

use alloc::vec;
use alloc::vec::Vec;

/// Returns the `(row, col)` pairs of a maximum-weight matching, considering
/// only entries for which `allowed` holds and whose weight is strictly
/// positive. Pairs are sorted by row.
///
/// `weights` is row-major `rows x cols`.
pub fn max_weight_matching(
    weights: &[f64],
    rows: usize,
    cols: usize,
    allowed: impl Fn(usize, usize) -> bool,
) -> Vec<(usize, usize)> {
    debug_assert_eq!(weights.len(), rows * cols);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let transpose = rows > cols;
    let (n, m) = if transpose { (cols, rows) } else { (rows, cols) };
    let gain = |r: usize, c: usize| -> f64 {
        let (i, j) = if transpose { (c, r) } else { (r, c) };
        let w = weights[i * cols + j];
        if allowed(i, j) && w > 0.0 {
            w
        } else {
            0.0
        }
    };

    // 1-based arrays; index 0 is the virtual root column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = -gain(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut pairs: Vec<(usize, usize)> = (1..=m)
        .filter(|&j| owner[j] != 0)
        .map(|j| (owner[j] - 1, j - 1))
        .filter(|&(r, c)| gain(r, c) > 0.0)
        .map(|(r, c)| if transpose { (c, r) } else { (r, c) })
        .collect();
    pairs.sort_unstable();
    pairs
}
