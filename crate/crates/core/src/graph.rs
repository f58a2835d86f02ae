//! Rooted layered graphs, balls around the root and their boundaries.
//!
//! Every [`LayeredGraph`] is stored in canonical form: vertex ids are dense
//! and assigned in BFS order from the root (root = 0), visiting undiscovered
//! neighbours in ascending order. Level `i` is therefore the contiguous id
//! range `level_range(i)`, and the ball of radius `r` is the id prefix
//! `0..level_range(r).end`.

use std::collections::VecDeque;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Which construction produced a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    Tree {
        delta: usize,
    },
    Hyperbolic {
        v: usize,
        s: usize,
    },
    ExpanderTree {
        delta: usize,
        d: usize,
        seed: u64,
        layer_degrees: Vec<usize>,
    },
    Custom(String),
}

/// Name of the PRNG recorded in expander-tree metadata.
pub const RNG_NAME: &str = "chacha8";

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Tree { delta } => write!(f, "tree:delta={delta}"),
            Family::Hyperbolic { v, s } => write!(f, "hyperbolic:v={v},s={s}"),
            Family::ExpanderTree {
                delta,
                d,
                seed,
                layer_degrees,
            } => {
                let ks: Vec<String> = layer_degrees.iter().map(|k| k.to_string()).collect();
                write!(
                    f,
                    "expander-tree:delta={delta},d={d},seed={seed},k={},rng={RNG_NAME}",
                    ks.join("/")
                )
            }
            Family::Custom(label) => write!(f, "custom:{label}"),
        }
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(tag: &str) -> std::result::Result<Self, String> {
        let (kind, rest) = tag
            .split_once(':')
            .ok_or_else(|| format!("family tag `{tag}` has no `kind:` prefix"))?;
        if kind == "custom" {
            return Ok(Family::Custom(rest.to_string()));
        }
        let mut fields = std::collections::BTreeMap::new();
        for kv in rest.split(',') {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| format!("malformed field `{kv}` in family tag"))?;
            fields.insert(k, v);
        }
        let num = |key: &str| -> std::result::Result<u64, String> {
            fields
                .get(key)
                .ok_or_else(|| format!("family tag `{tag}` lacks `{key}`"))?
                .parse::<u64>()
                .map_err(|e| format!("field `{key}`: {e}"))
        };
        match kind {
            "tree" => Ok(Family::Tree {
                delta: num("delta")? as usize,
            }),
            "hyperbolic" => Ok(Family::Hyperbolic {
                v: num("v")? as usize,
                s: num("s")? as usize,
            }),
            "expander-tree" => {
                let ks = fields
                    .get("k")
                    .ok_or_else(|| format!("family tag `{tag}` lacks `k`"))?;
                let layer_degrees = if ks.is_empty() {
                    Vec::new()
                } else {
                    ks.split('/')
                        .map(|k| k.parse::<usize>().map_err(|e| format!("field `k`: {e}")))
                        .collect::<std::result::Result<_, _>>()?
                };
                Ok(Family::ExpanderTree {
                    delta: num("delta")? as usize,
                    d: num("d")? as usize,
                    seed: num("seed")?,
                    layer_degrees,
                })
            }
            other => Err(format!("unknown family `{other}`")),
        }
    }
}

/// A connected rooted graph with BFS levels, in canonical labelling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayeredGraph {
    adjacency: Vec<Vec<usize>>,
    level: Vec<usize>,
    level_starts: Vec<usize>,
    family: Family,
}

impl LayeredGraph {
    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn root(&self) -> usize {
        0
    }

    /// Sorted neighbour list of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn level(&self, v: usize) -> usize {
        self.level[v]
    }

    pub fn levels(&self) -> &[usize] {
        &self.level
    }

    /// Largest level present.
    pub fn radius(&self) -> usize {
        self.level_starts.len() - 2
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn with_family(mut self, family: Family) -> Self {
        self.family = family;
        self
    }

    /// Id range of level `i` (empty past the radius).
    pub fn level_range(&self, i: usize) -> Range<usize> {
        if i > self.radius() {
            let n = self.vertex_count();
            return n..n;
        }
        self.level_starts[i]..self.level_starts[i + 1]
    }

    /// Vertices `x` with `level(x) == i`.
    pub fn level_set(&self, i: usize) -> Vec<usize> {
        self.level_range(i).collect()
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        (0..=self.radius())
            .map(|i| self.level_range(i).len())
            .collect()
    }

    /// Number of vertices at level `<= r`.
    pub fn ball_size(&self, r: usize) -> usize {
        self.level_range(r.min(self.radius())).end
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// BFS distances from the root, recomputed from the adjacency.
    pub fn bfs_levels(&self) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.vertex_count()];
        let mut queue = VecDeque::new();
        dist[0] = 0;
        queue.push_back(0);
        while let Some(u) = queue.pop_front() {
            for &w in &self.adjacency[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Checks connectivity, symmetry, sortedness and the BFS level structure.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for (u, ns) in self.adjacency.iter().enumerate() {
            if ns.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("neighbour list of {u} not strictly sorted"));
            }
            for &w in ns {
                if w == u {
                    return Err(format!("self-loop at {u}"));
                }
                if !self.has_edge(w, u) {
                    return Err(format!("edge {u}-{w} not symmetric"));
                }
                if self.level[u].abs_diff(self.level[w]) > 1 {
                    return Err(format!("edge {u}-{w} skips a level"));
                }
            }
        }
        if self.bfs_levels() != self.level {
            return Err("stored levels differ from BFS distances".into());
        }
        if self.level.windows(2).any(|w| w[0] > w[1]) {
            return Err("ids are not in level order".into());
        }
        Ok(())
    }

    /// Canonical graph text: a header line then one `u v` line per edge.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# family={} root={} radius={}\n",
            self.family,
            self.root(),
            self.radius()
        );
        for (u, v) in self.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    /// Parses the format written by [`LayeredGraph::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let header = header.strip_prefix("# ").ok_or(Error::Parse {
            line: 1,
            message: "header must start with `# `".into(),
        })?;
        let mut family = None;
        let mut root = None;
        let mut radius = None;
        for field in header.split_whitespace() {
            let (k, v) = field.split_once('=').ok_or(Error::Parse {
                line: 1,
                message: format!("malformed header field `{field}`"),
            })?;
            let bad = |m: String| Error::Parse {
                line: 1,
                message: m,
            };
            match k {
                "family" => family = Some(v.parse::<Family>().map_err(bad)?),
                "root" => root = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "radius" => radius = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                other => return Err(bad(format!("unknown header field `{other}`"))),
            }
        }
        let missing = |f: &str| Error::Parse {
            line: 1,
            message: format!("header lacks `{f}`"),
        };
        let family = family.ok_or_else(|| missing("family"))?;
        let root = root.ok_or_else(|| missing("root"))?;
        let radius = radius.ok_or_else(|| missing("radius"))?;

        let mut edges = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |m: String| Error::Parse {
                line: i + 1,
                message: m,
            };
            let mut it = line.split_whitespace();
            let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
                return Err(parse_err(format!("expected `u v`, got `{line}`")));
            };
            let a = a.parse::<usize>().map_err(|e| parse_err(e.to_string()))?;
            let b = b.parse::<usize>().map_err(|e| parse_err(e.to_string()))?;
            edges.push((a, b));
        }
        let g = if edges.is_empty() {
            if root != 0 {
                return Err(Error::Parse {
                    line: 1,
                    message: "a graph without edges must have root 0".into(),
                });
            }
            single_vertex(family)
        } else {
            build_from_edges(&edges, root)?.with_family(family)
        };
        if g.radius() != radius {
            return Err(Error::Parse {
                line: 1,
                message: format!("header radius {radius} but edges give {}", g.radius()),
            });
        }
        Ok(g)
    }

    /// Hex SHA-256 of the canonical text.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    /// Induced subgraph on the levels `<= r` (an id prefix, so still canonical).
    pub fn truncate(&self, r: usize) -> LayeredGraph {
        let keep = self.ball_size(r);
        let adjacency = self.adjacency[..keep]
            .iter()
            .map(|ns| ns.iter().copied().filter(|&w| w < keep).collect())
            .collect();
        let r = r.min(self.radius());
        LayeredGraph {
            adjacency,
            level: self.level[..keep].to_vec(),
            level_starts: self.level_starts[..r + 2].to_vec(),
            family: self.family.clone(),
        }
    }
}

fn single_vertex(family: Family) -> LayeredGraph {
    LayeredGraph {
        adjacency: vec![Vec::new()],
        level: vec![0],
        level_starts: vec![0, 1],
        family,
    }
}

/// Builds the canonical layered graph of the connected component of `root`.
///
/// Duplicate edges are merged; self-loops are rejected, as is any listed
/// vertex that cannot be reached from `root`.
pub fn build_from_edges(edges: &[(usize, usize)], root: usize) -> Result<LayeredGraph> {
    if edges.is_empty() {
        return Err(Error::EmptyInput);
    }
    let max_id = edges.iter().map(|&(a, b)| a.max(b)).max().unwrap_or(0);
    let mut adj = vec![Vec::new(); max_id + 1];
    let mut present = vec![false; max_id + 1];
    for &(a, b) in edges {
        if a == b {
            return Err(Error::SelfLoop(a));
        }
        adj[a].push(b);
        adj[b].push(a);
        present[a] = true;
        present[b] = true;
    }
    if root > max_id || !present[root] {
        return Err(Error::UnknownRoot(root));
    }
    for ns in &mut adj {
        ns.sort_unstable();
        ns.dedup();
    }
    Ok(canonicalize(&adj, root, &present)?.with_family(Family::Custom("edges".into())))
}

/// Relabels an adjacency list into canonical BFS order.
pub(crate) fn canonicalize(
    adj: &[Vec<usize>],
    root: usize,
    present: &[bool],
) -> Result<LayeredGraph> {
    let n = adj.len();
    let mut new_id = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut level = Vec::with_capacity(n);
    new_id[root] = 0;
    order.push(root);
    level.push(0);
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        let lu = level[head];
        head += 1;
        for &w in &adj[u] {
            if new_id[w] == usize::MAX {
                new_id[w] = order.len();
                order.push(w);
                level.push(lu + 1);
            }
        }
    }
    let unreachable: Vec<usize> = (0..n)
        .filter(|&v| present[v] && new_id[v] == usize::MAX)
        .collect();
    if !unreachable.is_empty() {
        return Err(Error::DisconnectedInput(unreachable));
    }
    let adjacency: Vec<Vec<usize>> = order
        .iter()
        .map(|&old| {
            let mut ns: Vec<usize> = adj[old].iter().map(|&w| new_id[w]).collect();
            ns.sort_unstable();
            ns
        })
        .collect();
    let radius = *level.last().unwrap();
    let mut level_starts = vec![0; radius + 2];
    for &l in &level {
        level_starts[l + 1] += 1;
    }
    for i in 1..level_starts.len() {
        level_starts[i] += level_starts[i - 1];
    }
    Ok(LayeredGraph {
        adjacency,
        level,
        level_starts,
        family: Family::Custom(String::new()),
    })
}

/// The ball `B_m` together with the ghost layer `L_{m+1}` that carries the
/// boundary condition. Ghost–ghost edges are not kept.
#[derive(Debug, Clone, PartialEq)]
pub struct BallSystem {
    interior: LayeredGraph,
    radius: usize,
    ghost_count: usize,
    /// `(interior vertex, ghost index)` pairs.
    ghost_edges: Vec<(usize, usize)>,
}

impl BallSystem {
    /// A ball without any ghost layer (free boundary only).
    pub fn isolated(graph: LayeredGraph) -> Self {
        let radius = graph.radius();
        BallSystem {
            interior: graph,
            radius,
            ghost_count: 0,
            ghost_edges: Vec::new(),
        }
    }

    pub fn interior(&self) -> &LayeredGraph {
        &self.interior
    }

    /// Number of interior vertices `n = |V_m|`.
    pub fn n(&self) -> usize {
        self.interior.vertex_count()
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn ghost_count(&self) -> usize {
        self.ghost_count
    }

    pub fn ghost_edges(&self) -> &[(usize, usize)] {
        &self.ghost_edges
    }

    /// Ghost indices adjacent to interior vertex `x`.
    pub fn ghost_neighbors(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        self.ghost_edges
            .iter()
            .filter(move |&&(u, _)| u == x)
            .map(|&(_, g)| g)
    }
}

/// The ball of radius `r` around the root with its ghost layer.
pub fn ball(g: &LayeredGraph, r: usize) -> Result<BallSystem> {
    if r + 1 > g.radius() {
        return Err(Error::RadiusTooLarge {
            requested: r,
            needed: r + 1,
            available: g.radius(),
        });
    }
    let interior = g.truncate(r);
    let ghosts = g.level_range(r + 1);
    let mut ghost_edges = Vec::new();
    for x in g.level_range(r) {
        for &w in g.neighbors(x) {
            if ghosts.contains(&w) {
                ghost_edges.push((x, w - ghosts.start));
            }
        }
    }
    Ok(BallSystem {
        interior,
        radius: r,
        ghost_count: ghosts.len(),
        ghost_edges,
    })
}

fn membership(g: &LayeredGraph, set: &[usize]) -> Vec<bool> {
    let mut inside = vec![false; g.vertex_count()];
    for &v in set {
        inside[v] = true;
    }
    inside
}

/// `{x ∉ S : x ~ y for some y ∈ S}`, sorted.
pub fn vertex_boundary(g: &LayeredGraph, set: &[usize]) -> Vec<usize> {
    let inside = membership(g, set);
    let mut out = vec![false; g.vertex_count()];
    for &v in set {
        for &w in g.neighbors(v) {
            if !inside[w] {
                out[w] = true;
            }
        }
    }
    (0..g.vertex_count()).filter(|&v| out[v]).collect()
}

/// Edges with exactly one endpoint in `S`, as `(inside, outside)` pairs.
pub fn edge_boundary(g: &LayeredGraph, set: &[usize]) -> Vec<(usize, usize)> {
    let inside = membership(g, set);
    let mut out = Vec::new();
    for v in 0..g.vertex_count() {
        if !inside[v] {
            continue;
        }
        for &w in g.neighbors(v) {
            if !inside[w] {
                out.push((v, w));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_levels() {
        let g = build_from_edges(&[(0, 1), (1, 2)], 0).unwrap();
        assert_eq!(g.levels(), &[0, 1, 2]);
        assert_eq!(g.radius(), 2);
    }

    #[test]
    fn duplicate_edges_merge() {
        let g = build_from_edges(&[(0, 1), (0, 1)], 0).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.vertex_count(), 2);
    }

    #[test]
    fn triangle_levels() {
        let g = build_from_edges(&[(0, 1), (1, 2), (2, 0)], 0).unwrap();
        assert_eq!(g.levels(), &[0, 1, 1]);
        g.check_invariants().unwrap();
    }

    #[test]
    fn rejects_self_loop_and_disconnected() {
        assert_eq!(build_from_edges(&[(0, 0)], 0), Err(Error::SelfLoop(0)));
        assert_eq!(
            build_from_edges(&[(0, 1), (2, 3)], 0),
            Err(Error::DisconnectedInput(vec![2, 3]))
        );
        assert_eq!(build_from_edges(&[], 0), Err(Error::EmptyInput));
        assert_eq!(build_from_edges(&[(1, 2)], 0), Err(Error::UnknownRoot(0)));
    }

    #[test]
    fn relabels_in_bfs_order() {
        let g = build_from_edges(&[(5, 9), (9, 2), (5, 7)], 5).unwrap();
        // 5 -> 0, then neighbours 7, 9 in ascending order -> 1, 2; 2 -> 3
        assert_eq!(g.levels(), &[0, 1, 1, 2]);
        assert!(g.has_edge(2, 3));
        assert!(!g.has_edge(1, 3));
    }

    #[test]
    fn ball_radius_gate() {
        let g = build_from_edges(&[(0, 1), (1, 2)], 0).unwrap();
        assert!(matches!(ball(&g, 2), Err(Error::RadiusTooLarge { .. })));
        let b = ball(&g, 1).unwrap();
        assert_eq!(b.n(), 2);
        assert_eq!(b.ghost_count(), 1);
        assert_eq!(b.ghost_edges(), &[(1, 0)]);
    }

    #[test]
    fn boundaries() {
        let g = build_from_edges(&[(0, 1), (0, 2), (1, 3)], 0).unwrap();
        assert_eq!(edge_boundary(&g, &[0]).len(), 2);
        assert_eq!(vertex_boundary(&g, &[0]), vec![1, 2]);
        let all: Vec<usize> = (0..g.vertex_count()).collect();
        assert!(edge_boundary(&g, &all).is_empty());
        assert!(vertex_boundary(&g, &[]).is_empty());
    }

    #[test]
    fn family_tags_round_trip() {
        for fam in [
            Family::Tree { delta: 3 },
            Family::Hyperbolic { v: 4, s: 5 },
            Family::ExpanderTree {
                delta: 6,
                d: 3,
                seed: 42,
                layer_degrees: vec![3, 3],
            },
            Family::Custom("my-graph".into()),
        ] {
            assert_eq!(fam.to_string().parse::<Family>().unwrap(), fam);
        }
    }

    #[test]
    fn text_round_trip_single_vertex() {
        let g = single_vertex(Family::Custom("dot".into()));
        let back = LayeredGraph::from_text(&g.to_text()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn parse_reports_line() {
        let err =
            LayeredGraph::from_text("# family=custom:x root=0 radius=1\n0 1\n0 x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }
}
