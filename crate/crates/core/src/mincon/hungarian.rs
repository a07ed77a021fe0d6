//! Shortest-augmenting-path Hungarian method on a dense cost matrix.

/// Optimal assignment for a `rows x cols` matrix with `rows <= cols`.
/// Returns, for each row, the column it is matched to, and the total cost.
pub fn solve(cost: &[f64], rows: usize, cols: usize) -> (Vec<usize>, f64) {
    assert!(rows <= cols, "hungarian: more rows than columns");
    assert_eq!(cost.len(), rows * cols);
    if rows == 0 {
        return (Vec::new(), 0.0);
    }
    // 1-based potentials, column 0 is the virtual root
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=rows {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=cols {
                if !used[j] {
                    let cur = cost[(i0 - 1) * cols + (j - 1)] - u[i0] - v[j];
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
            for j in 0..=cols {
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
    let mut assign = vec![0usize; rows];
    for j in 1..=cols {
        if owner[j] != 0 {
            assign[owner[j] - 1] = j - 1;
        }
    }
    // recompute from the matrix so the reported cost carries no potential drift
    let total = assign.iter().enumerate().map(|(i, &j)| cost[i * cols + j]).sum();
    (assign, total)
}
