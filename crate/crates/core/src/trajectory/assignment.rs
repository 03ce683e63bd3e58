//! Linear assignment on dense real cost matrices.

/// Optimal assignment `row -> column` and its total cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub columns: Vec<usize>,
    pub cost: f64,
}

/// Exact up to this size; larger problems use greedy matching polished by
/// pairwise exchanges.
pub const EXACT_LIMIT: usize = 64;

fn total(cost: &[Vec<f64>], columns: &[usize]) -> f64 {
    columns.iter().enumerate().map(|(i, &j)| cost[i][j]).sum()
}

/// Hungarian method with row/column potentials, O(n³).
pub fn hungarian(cost: &[Vec<f64>]) -> Assignment {
    let n = cost.len();
    if n == 0 {
        return Assignment {
            columns: Vec::new(),
            cost: 0.0,
        };
    }
    let inf = f64::INFINITY;
    // 1-based with a virtual column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if j1 == 0 {
                // only forbidden edges remain reachable
                break;
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
    let mut columns = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            columns[p[j] - 1] = j - 1;
        }
    }
    let cost_total = total(cost, &columns);
    Assignment {
        columns,
        cost: cost_total,
    }
}

/// Greedy matching on sorted edges followed by 2-exchange descent.
pub fn greedy(cost: &[Vec<f64>]) -> Assignment {
    let n = cost.len();
    let mut edges: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    edges.sort_by(|a, b| cost[a.0][a.1].total_cmp(&cost[b.0][b.1]));
    let mut columns = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for (i, j) in edges {
        if columns[i] == usize::MAX && !taken[j] {
            columns[i] = j;
            taken[j] = true;
        }
    }
    loop {
        let mut improved = false;
        for a in 0..n {
            for b in a + 1..n {
                let (ja, jb) = (columns[a], columns[b]);
                let delta = cost[a][jb] + cost[b][ja] - cost[a][ja] - cost[b][jb];
                if delta < -1e-15 {
                    columns.swap(a, b);
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    let c = total(cost, &columns);
    Assignment { columns, cost: c }
}

pub fn solve(cost: &[Vec<f64>]) -> Assignment {
    if cost.len() <= EXACT_LIMIT {
        hungarian(cost)
    } else {
        greedy(cost)
    }
}

/// Cheapest assignment different from `best`: the minimum over problems
/// with one edge of `best` forbidden. Returns `None` for `n < 2`.
pub fn second_best(cost: &[Vec<f64>], best: &Assignment) -> Option<Assignment> {
    let n = cost.len();
    if n < 2 {
        return None;
    }
    let mut out: Option<Assignment> = None;
    let mut work = cost.to_vec();
    for i in 0..n {
        let j = best.columns[i];
        let saved = work[i][j];
        work[i][j] = f64::INFINITY;
        let alt = solve(&work);
        work[i][j] = saved;
        if alt.columns[i] == j {
            continue;
        }
        let alt = Assignment {
            cost: total(cost, &alt.columns),
            columns: alt.columns,
        };
        if out.as_ref().is_none_or(|o| alt.cost < o.cost) {
            out = Some(alt);
        }
    }
    out
}
