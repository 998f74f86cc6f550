//! Max-plus algebra on weight matrices with `-inf` marking absent edges.
//!
//! The max-plus eigenvalue of a log-kernel is the exponential growth rate of
//! its heaviest cycles, and a max-plus eigenvector gives a diagonal
//! similarity under which every entry is at most one and every critical
//! cycle consists of ones.

use crate::scalar::Real;

/// Largest mean weight of a cycle of a strongly connected weighted graph
/// (Karp's algorithm from node 0). `None` when the graph has no cycle
/// through the reachable set.
pub fn max_cycle_mean<T: Real>(w: &[Vec<T>]) -> Option<T> {
    let n = w.len();
    if n == 0 {
        return None;
    }
    let ninf = T::neg_infinity();
    // d[k][v]: heaviest walk of exactly k edges from node 0 to v
    let mut d = vec![vec![ninf; n]; n + 1];
    d[0][0] = T::zero();
    for k in 1..=n {
        for v in 0..n {
            let mut best = ninf;
            for u in 0..n {
                if d[k - 1][u] > ninf && w[u][v] > ninf {
                    best = best.max(d[k - 1][u] + w[u][v]);
                }
            }
            d[k][v] = best;
        }
    }
    let mut result: Option<T> = None;
    for v in 0..n {
        if d[n][v] == ninf {
            continue;
        }
        let mut worst = T::infinity();
        for k in 0..n {
            if d[k][v] > ninf {
                worst = worst.min((d[n][v] - d[k][v]) / T::from_usize_lossy(n - k));
            }
        }
        result = Some(result.map_or(worst, |r| r.max(worst)));
    }
    result
}

/// Max-plus eigenvalue `μ` and an eigenvector `x` of an irreducible weight
/// matrix: `max_j (w_ij + x_j) = μ + x_i` for every `i`, with `max x = 0`.
pub fn eigenpair<T: Real>(w: &[Vec<T>]) -> Option<(T, Vec<T>)> {
    let n = w.len();
    let mu = max_cycle_mean(w)?;
    let ninf = T::neg_infinity();
    // Kleene plus of w - μ by Floyd–Warshall; it has no positive cycles
    let mut c: Vec<Vec<T>> = w
        .iter()
        .map(|row| row.iter().map(|x| if *x > ninf { *x - mu } else { ninf }).collect())
        .collect();
    for k in 0..n {
        for i in 0..n {
            if c[i][k] == ninf {
                continue;
            }
            for j in 0..n {
                if c[k][j] > ninf {
                    let via = c[i][k] + c[k][j];
                    if via > c[i][j] {
                        c[i][j] = via;
                    }
                }
            }
        }
    }
    // a critical node closes a zero-weight cycle; rounding leaves it near 0
    let crit = (0..n).max_by(|a, b| c[*a][*a].partial_cmp(&c[*b][*b]).expect("finite diagonal"))?;
    let mut x: Vec<T> = (0..n).map(|i| if i == crit { T::zero() } else { c[i][crit] }).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let top = x.iter().copied().fold(ninf, T::max);
    x.iter_mut().for_each(|v| *v -= top);
    Some((mu, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    const NINF: f64 = f64::NEG_INFINITY;

    /// Heaviest mean over all simple cycles, by exhaustive search.
    fn brute_force(w: &[Vec<f64>]) -> f64 {
        fn walk(w: &[Vec<f64>], start: usize, at: usize, seen: &mut Vec<bool>, sum: f64, len: usize, best: &mut f64) {
            for next in 0..w.len() {
                if w[at][next] == NINF {
                    continue;
                }
                if next == start {
                    *best = best.max((sum + w[at][next]) / (len + 1) as f64);
                } else if !seen[next] && next > start {
                    seen[next] = true;
                    walk(w, start, next, seen, sum + w[at][next], len + 1, best);
                    seen[next] = false;
                }
            }
        }
        let mut best = NINF;
        for s in 0..w.len() {
            let mut seen = vec![false; w.len()];
            seen[s] = true;
            walk(w, s, s, &mut seen, 0.0, 0, &mut best);
        }
        best
    }

    #[test]
    fn karp_matches_cycle_enumeration() {
        let cases = vec![
            vec![vec![NINF, 0.0], vec![-300.0, NINF]],
            vec![vec![-3.0, 1.0, NINF], vec![NINF, -1.0, 2.0], vec![0.5, -4.0, -2.0]],
            vec![vec![-1.0, -7.0, 2.0, NINF], vec![3.0, NINF, NINF, -2.0], vec![NINF, 1.0, -5.0, 0.0], vec![-1.0, NINF, 4.0, NINF]],
        ];
        for w in cases {
            let got = max_cycle_mean(&w).unwrap();
            assert!((got - brute_force(&w)).abs() < 1e-12, "{got} vs {}", brute_force(&w));
        }
    }

    #[test]
    fn eigenvector_balances_rows() {
        let w = vec![vec![-1.0, -7.0, 2.0, NINF], vec![3.0, NINF, NINF, -2.0], vec![NINF, 1.0, -5.0, 0.0], vec![-1.0, NINF, 4.0, NINF]];
        let (mu, x) = eigenpair(&w).unwrap();
        for i in 0..4 {
            let lhs = (0..4).filter(|j| w[i][*j] > NINF).map(|j| w[i][j] + x[j]).fold(NINF, f64::max);
            assert!((lhs - mu - x[i]).abs() < 1e-12);
        }
        assert_eq!(x.iter().copied().fold(NINF, f64::max), 0.0);
    }
}
