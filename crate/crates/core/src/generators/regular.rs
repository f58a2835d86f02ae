//! Random k-regular graphs from the configuration model.

use std::collections::HashSet;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Retry cap for the rejection loop.
pub const DEFAULT_RETRY_CAP: usize = 10_000;

/// A simple connected k-regular graph on `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularGraph {
    pub n: usize,
    pub k: usize,
    /// Sorted `(u, v)` pairs with `u < v`.
    pub edges: Vec<(usize, usize)>,
    /// Number of pairings drawn, including the accepted one.
    pub attempts: usize,
}

/// Uniform random pairing, restarted until simple and connected.
pub fn gen_random_regular(n: usize, k: usize, seed: u64) -> Result<RegularGraph> {
    random_regular_with(n, k, &mut rng::stream(seed, 0), DEFAULT_RETRY_CAP)
}

pub(crate) fn random_regular_with(
    n: usize,
    k: usize,
    rng: &mut Rng,
    retry_cap: usize,
) -> Result<RegularGraph> {
    if k >= n || (n * k) % 2 == 1 {
        return Err(Error::InfeasibleDegree { n, k });
    }
    if k < 3 {
        return Err(Error::BadParams(format!(
            "layer degree k={k} must be at least 3"
        )));
    }
    let mut points: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, k)).collect();
    let mut seen = HashSet::with_capacity(n * k / 2);
    for attempt in 1..=retry_cap {
        points.shuffle(rng);
        seen.clear();
        let simple = points.chunks_exact(2).all(|pair| {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            a != b && seen.insert((a, b))
        });
        if !simple {
            continue;
        }
        let mut edges: Vec<(usize, usize)> = seen.iter().copied().collect();
        edges.sort_unstable();
        if is_connected(n, &edges) {
            return Ok(RegularGraph {
                n,
                k,
                edges,
                attempts: attempt,
            });
        }
    }
    Err(Error::RetryBudgetExceeded {
        n,
        k,
        attempts: retry_cap,
    })
}

fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count == n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn degrees(g: &RegularGraph) -> Vec<usize> {
        let mut d = vec![0; g.n];
        for &(a, b) in &g.edges {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }

    #[test]
    fn k4_is_unique() {
        let g = gen_random_regular(4, 3, 1).unwrap();
        assert_eq!(
            g.edges,
            vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
        );
    }

    #[test]
    fn six_vertices_cubic() {
        for seed in [3, 4] {
            let g = gen_random_regular(6, 3, seed).unwrap();
            assert!(degrees(&g).iter().all(|&d| d == 3));
            assert!(is_connected(6, &g.edges));
        }
    }

    #[test]
    fn infeasible() {
        assert_eq!(
            gen_random_regular(5, 3, 0),
            Err(Error::InfeasibleDegree { n: 5, k: 3 })
        );
        assert_eq!(
            gen_random_regular(4, 4, 0),
            Err(Error::InfeasibleDegree { n: 4, k: 4 })
        );
    }

    #[test]
    fn deterministic() {
        assert_eq!(
            gen_random_regular(30, 3, 9).unwrap(),
            gen_random_regular(30, 3, 9).unwrap()
        );
    }
}
