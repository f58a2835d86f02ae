//! Graph families: regular trees, hyperbolic tilings and expander-decorated trees.

pub mod hyperbolic;
pub mod regular;

pub use hyperbolic::{build_tiling, gen_hyperbolic, HyperbolicParams, HyperbolicTiling};
pub use regular::{gen_random_regular, RegularGraph, DEFAULT_RETRY_CAP};

use crate::error::{Error, Result};
use crate::graph::{canonicalize, Family, LayeredGraph};
use crate::rng;

/// Regular tree: the root has `delta` children, every other internal vertex `delta - 1`.
pub fn gen_tree(delta: usize, depth: usize) -> Result<LayeredGraph> {
    if delta < 3 {
        return Err(Error::BadParams(format!(
            "tree degree {delta} must be at least 3"
        )));
    }
    if depth == 0 {
        return Err(Error::BadParams("tree depth must be at least 1".into()));
    }
    let adj = tree_adjacency(delta, depth);
    let present = vec![true; adj.len()];
    Ok(canonicalize(&adj, 0, &present)?.with_family(Family::Tree { delta }))
}

/// Adjacency of the tree with ids already in BFS order.
fn tree_adjacency(delta: usize, depth: usize) -> Vec<Vec<usize>> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new()];
    let mut frontier = vec![0usize];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(frontier.len() * (delta - 1));
        for &u in &frontier {
            let children = if u == 0 { delta } else { delta - 1 };
            for _ in 0..children {
                let c = adj.len();
                adj.push(vec![u]);
                adj[u].push(c);
                next.push(c);
            }
        }
        frontier = next;
    }
    adj
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpanderTreeParams {
    pub delta: usize,
    pub d: usize,
    pub seed: u64,
    /// Per-level layer degrees `k_1, k_2, ...`; `None` applies the default policy.
    pub layer_degrees: Option<Vec<usize>>,
}

impl ExpanderTreeParams {
    pub fn new(delta: usize, d: usize, seed: u64) -> Self {
        ExpanderTreeParams {
            delta,
            d,
            seed,
            layer_degrees: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.delta < 6 {
            return Err(Error::BadParams(format!(
                "expander tree needs delta >= 6, got {}",
                self.delta
            )));
        }
        if self.d < 3 || self.d + 2 >= self.delta {
            return Err(Error::BadParams(format!(
                "expander tree needs 3 <= d < delta - 2, got d={} delta={}",
                self.d, self.delta
            )));
        }
        Ok(())
    }
}

/// Size of level `r >= 1` of the `delta`-regular tree.
pub fn tree_level_size(delta: usize, r: usize) -> usize {
    delta * (delta - 1).pow(r as u32 - 1)
}

/// Default layer degree for a level of `n` vertices: `min(d, n - 1)`, lowered
/// by one if `n * k` would be odd.
pub fn default_layer_degree(n: usize, d: usize) -> Result<usize> {
    let mut k = d.min(n.saturating_sub(1));
    if (n * k) % 2 == 1 {
        k -= 1;
    }
    if k < 3 {
        return Err(Error::InfeasibleDegree { n, k });
    }
    Ok(k)
}

/// Tree `T^delta` with each level wired as a random connected `k_r`-regular graph.
///
/// Level `r` uses PRNG stream `r` of `seed`.
pub fn gen_expander_tree(params: &ExpanderTreeParams, depth: usize) -> Result<LayeredGraph> {
    params.validate()?;
    if depth == 0 {
        return Err(Error::BadParams(
            "expander tree depth must be at least 1".into(),
        ));
    }
    let delta = params.delta;
    let mut adj = tree_adjacency(delta, depth);
    let mut ks = Vec::with_capacity(depth);
    let mut start = 1;
    for r in 1..=depth {
        let n = tree_level_size(delta, r);
        let k = match &params.layer_degrees {
            Some(list) => {
                let k = *list.get(r - 1).ok_or_else(|| {
                    Error::BadParams(format!("no layer degree given for level {r}"))
                })?;
                if k < 3 || k > params.d {
                    return Err(Error::BadParams(format!(
                        "layer degree k_{r}={k} outside 3..={}",
                        params.d
                    )));
                }
                k
            }
            None => default_layer_degree(n, params.d)?,
        };
        let mut stream = rng::stream(params.seed, r as u64);
        let layer = regular::random_regular_with(n, k, &mut stream, DEFAULT_RETRY_CAP)?;
        for &(a, b) in &layer.edges {
            adj[start + a].push(start + b);
            adj[start + b].push(start + a);
        }
        ks.push(k);
        start += n;
    }
    let present = vec![true; adj.len()];
    Ok(
        canonicalize(&adj, 0, &present)?.with_family(Family::ExpanderTree {
            delta,
            d: params.d,
            seed: params.seed,
            layer_degrees: ks,
        }),
    )
}
