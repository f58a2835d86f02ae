//! Vertex-centred hyperbolic tilings `H(v, s)`, grown corona by corona.
//!
//! The outer boundary is kept as a cycle. At each step every boundary vertex
//! receives the edges it still lacks, and the outer faces are closed: one
//! "vertex face" between two consecutive new edges of the same vertex and one
//! "run face" spanning the boundary path between consecutive vertices that
//! receive new edges. A run face that is one vertex short of closing merges
//! the two new endpoints into a single vertex.

use crate::error::{Error, Result};
use crate::graph::{canonicalize, Family, LayeredGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HyperbolicParams {
    pub v: usize,
    pub s: usize,
}

impl HyperbolicParams {
    pub fn new(v: usize, s: usize) -> Result<Self> {
        let product = (v as i64 - 2) * (s as i64 - 2);
        if v < 3 || s < 3 || product <= 4 {
            return Err(Error::NotHyperbolic { v, s, product });
        }
        Ok(HyperbolicParams { v, s })
    }
}

/// A generated ball of the tiling together with its faces.
#[derive(Debug, Clone)]
pub struct HyperbolicTiling {
    pub graph: LayeredGraph,
    /// Faces lying entirely inside the ball, each a cyclic vertex list.
    pub faces: Vec<Vec<usize>>,
}

/// The ball of radius `depth` of `H(v, s)` around a vertex.
pub fn gen_hyperbolic(params: HyperbolicParams, depth: usize) -> Result<LayeredGraph> {
    Ok(build_tiling(params, depth)?.graph)
}

/// Like [`gen_hyperbolic`] but keeps the face list.
pub fn build_tiling(params: HyperbolicParams, depth: usize) -> Result<HyperbolicTiling> {
    let HyperbolicParams { v, s } = HyperbolicParams::new(params.v, params.s)?;
    if depth == 0 {
        return Err(Error::BadParams(
            "hyperbolic depth must be at least 1".into(),
        ));
    }
    let mut b = Builder {
        adj: vec![Vec::new()],
        faces: Vec::new(),
        v,
        s,
    };
    let mut boundary = b.first_corona()?;
    // Coronas 0..=depth+1 make every vertex of B_depth complete, and BFS
    // distance is never smaller than the corona index.
    for _ in 0..depth {
        boundary = b.next_corona(&boundary)?;
    }

    let present = vec![true; b.adj.len()];
    let full = canonicalize(&b.adj, 0, &present)?;
    let graph = full
        .truncate(depth)
        .with_family(Family::Hyperbolic { v, s });
    if graph.radius() < depth {
        return Err(Error::Construction(format!(
            "tiling reached radius {} < {depth}",
            graph.radius()
        )));
    }

    // Recover the old -> new relabelling from BFS order.
    let keep = graph.vertex_count();
    let mut new_id = vec![usize::MAX; b.adj.len()];
    relabel_like_canonical(&b.adj, &mut new_id);
    let faces = b
        .faces
        .into_iter()
        .map(|f| f.into_iter().map(|x| new_id[x]).collect::<Vec<_>>())
        .filter(|f| f.iter().all(|&x| x < keep))
        .collect();
    Ok(HyperbolicTiling { graph, faces })
}

fn relabel_like_canonical(adj: &[Vec<usize>], new_id: &mut [usize]) {
    let mut order = vec![0];
    new_id[0] = 0;
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        head += 1;
        for &w in &adj[u] {
            if new_id[w] == usize::MAX {
                new_id[w] = order.len();
                order.push(w);
            }
        }
    }
}

struct Builder {
    adj: Vec<Vec<usize>>,
    faces: Vec<Vec<usize>>,
    v: usize,
    s: usize,
}

impl Builder {
    fn fresh(&mut self) -> usize {
        self.adj.push(Vec::new());
        self.adj.len() - 1
    }

    fn add_edge(&mut self, a: usize, b: usize) -> Result<()> {
        if a == b || self.adj[a].contains(&b) {
            return Err(Error::Construction(format!(
                "face closing produced a repeated edge {a}-{b}"
            )));
        }
        self.adj[a].push(b);
        self.adj[b].push(a);
        Ok(())
    }

    /// A path of `count` new vertices joining `from` to `to`.
    fn bridge(&mut self, from: usize, to: usize, count: usize) -> Result<Vec<usize>> {
        let mut prev = from;
        let mut inner = Vec::with_capacity(count);
        for _ in 0..count {
            let x = self.fresh();
            self.add_edge(prev, x)?;
            inner.push(x);
            prev = x;
        }
        self.add_edge(prev, to)?;
        Ok(inner)
    }

    fn first_corona(&mut self) -> Result<Vec<usize>> {
        let spokes: Vec<usize> = (0..self.v).map(|_| self.fresh()).collect();
        for &a in &spokes {
            self.add_edge(0, a)?;
        }
        let mut boundary = Vec::new();
        for i in 0..self.v {
            let (a, c) = (spokes[i], spokes[(i + 1) % self.v]);
            let inner = self.bridge(a, c, self.s - 3)?;
            let mut face = vec![0, a];
            face.extend(&inner);
            face.push(c);
            self.faces.push(face);
            boundary.push(a);
            boundary.extend(inner);
        }
        Ok(boundary)
    }

    fn next_corona(&mut self, boundary: &[usize]) -> Result<Vec<usize>> {
        let len = boundary.len();
        let mut need = Vec::with_capacity(len);
        for &x in boundary {
            let deg = self.adj[x].len();
            if deg > self.v {
                return Err(Error::Construction(format!(
                    "vertex {x} has degree {deg} > {}",
                    self.v
                )));
            }
            need.push(self.v - deg);
        }
        let active: Vec<usize> = (0..len).filter(|&j| need[j] > 0).collect();
        if active.len() < 2 {
            return Err(Error::Construction(
                "boundary has fewer than two growing vertices".into(),
            ));
        }

        // Endpoint slots of the new edges, then merges via union-find.
        let mut slot_base = vec![0; len];
        let mut slots = 0;
        for &j in &active {
            slot_base[j] = slots;
            slots += need[j];
        }
        let mut parent: Vec<usize> = (0..slots).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut runs = Vec::with_capacity(active.len());
        for (t, &p) in active.iter().enumerate() {
            let q = active[(t + 1) % active.len()];
            let path_edges = (q + len - p) % len;
            let extra = self.s as i64 - path_edges as i64 - 3;
            if extra < -1 {
                return Err(Error::Construction(format!(
                    "run face of {path_edges} boundary edges exceeds face size {}",
                    self.s
                )));
            }
            if extra == -1 {
                let a = find(&mut parent, slot_base[p] + need[p] - 1);
                let c = find(&mut parent, slot_base[q]);
                parent[a] = c;
            }
            runs.push((p, q, path_edges, extra));
        }
        let mut slot_vertex = vec![usize::MAX; slots];
        let mut root_vertex = vec![usize::MAX; slots];
        for (sl, slot) in slot_vertex.iter_mut().enumerate() {
            let r = find(&mut parent, sl);
            if root_vertex[r] == usize::MAX {
                root_vertex[r] = self.fresh();
            }
            *slot = root_vertex[r];
        }
        for &j in &active {
            for i in 0..need[j] {
                self.add_edge(boundary[j], slot_vertex[slot_base[j] + i])?;
            }
        }

        let mut next = Vec::new();
        for &(p, q, path_edges, extra) in &runs {
            let ends: Vec<usize> = (0..need[p])
                .map(|i| slot_vertex[slot_base[p] + i])
                .collect();
            for i in 0..ends.len() {
                next.push(ends[i]);
                if i + 1 < ends.len() {
                    let inner = self.bridge(ends[i], ends[i + 1], self.s - 3)?;
                    let mut face = vec![boundary[p], ends[i]];
                    face.extend(&inner);
                    face.push(ends[i + 1]);
                    self.faces.push(face);
                    next.extend(inner);
                }
            }
            let last = *ends.last().unwrap();
            let first_q = slot_vertex[slot_base[q]];
            let mut face = vec![boundary[p], last];
            if extra >= 0 {
                let inner = self.bridge(last, first_q, extra as usize)?;
                face.extend(&inner);
                face.push(first_q);
                next.extend(inner);
            }
            face.extend((1..=path_edges).rev().map(|t| boundary[(p + t) % len]));
            self.faces.push(face);
        }
        next.dedup();
        while next.len() > 1 && next.first() == next.last() {
            next.pop();
        }
        Ok(next)
    }
}
