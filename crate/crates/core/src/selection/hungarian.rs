//! Maximum-weight perfect matching on a square count matrix.

/// Finds `perm` maximizing `Σ_r contingency[r][perm[r]]`.
///
/// Shortest augmenting paths with row/column potentials, `O(n³)`. Works on
/// costs `max − count` so that every cost is non-negative.
pub fn hungarian_match(contingency: &[Vec<u64>]) -> (Vec<usize>, u64) {
    let n = contingency.len();
    assert!(contingency.iter().all(|r| r.len() == n), "contingency must be square");
    if n == 0 {
        return (Vec::new(), 0);
    }
    let max = contingency.iter().flatten().copied().max().unwrap_or(0) as i128;
    let cost = |r: usize, c: usize| max - contingency[r][c] as i128;

    // 1-based bookkeeping; index 0 is the virtual source column.
    let inf = i128::MAX / 4;
    let mut u = vec![0i128; n + 1];
    let mut v = vec![0i128; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r0 = owner[col0];
            let mut delta = inf;
            let mut col1 = 0;
            for col in 1..=n {
                if !used[col] {
                    let cur = cost(r0 - 1, col - 1) - u[r0] - v[col];
                    if cur < minv[col] {
                        minv[col] = cur;
                        way[col] = col0;
                    }
                    if minv[col] < delta {
                        delta = minv[col];
                        col1 = col;
                    }
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; n];
    for col in 1..=n {
        perm[owner[col] - 1] = col - 1;
    }
    let matched = perm.iter().enumerate().map(|(r, &c)| contingency[r][c]).sum();
    (perm, matched)
}
