//! Hyperbolic tilings checked against a geometric construction in the
//! Poincaré disk.

use std::collections::BTreeMap;

use growgap::generators::{build_tiling, HyperbolicParams};
use growgap::LayeredGraph;
use nalgebra::Complex;

type C = Complex<f64>;

/// Möbius map `z ↦ (a z + b) / (conj(b) z + conj(a))` of the unit disk.
#[derive(Clone, Copy)]
struct Mobius {
    a: C,
    b: C,
}

impl Mobius {
    fn rotation(theta: f64) -> Self {
        Mobius {
            a: C::from_polar(1.0, theta / 2.0),
            b: C::new(0.0, 0.0),
        }
    }

    /// Hyperbolic translation taking 0 to the real point `r`.
    fn translation(r: f64) -> Self {
        let s = 1.0 / (1.0 - r * r).sqrt();
        Mobius {
            a: C::new(s, 0.0),
            b: C::new(s * r, 0.0),
        }
    }

    fn then(self, inner: Mobius) -> Mobius {
        // self ∘ inner as 2x2 products
        Mobius {
            a: self.a * inner.a + self.b * inner.b.conj(),
            b: self.a * inner.b + self.b * inner.a.conj(),
        }
    }

    fn apply(self, z: C) -> C {
        (self.a * z + self.b) / (self.b.conj() * z + self.a.conj())
    }
}

/// Vertices within graph distance `depth` of the origin of the `{s, v}`
/// tiling, laid out in the disk. Returns adjacency lists.
fn disk_tiling(v: usize, s: usize, depth: usize) -> Vec<Vec<usize>> {
    let pi = std::f64::consts::PI;
    let half = ((pi / s as f64).cos() / (pi / v as f64).sin()).acosh();
    let r = half.tanh();
    let step = |k: usize| {
        Mobius::rotation(2.0 * pi * k as f64 / v as f64)
            .then(Mobius::translation(r))
            .then(Mobius::rotation(pi))
    };
    let mut frames = vec![Mobius::rotation(0.0)];
    let mut points = vec![C::new(0.0, 0.0)];
    let mut dist = vec![0usize];
    let mut adj: Vec<Vec<usize>> = vec![Vec::new()];
    let mut head = 0;
    while head < frames.len() {
        let u = head;
        head += 1;
        if dist[u] == depth {
            continue;
        }
        for k in 0..v {
            let frame = frames[u].then(step(k));
            let p = frame.apply(C::new(0.0, 0.0));
            let found = points
                .iter()
                .position(|q| hyperbolic_distance(*q, p) < 1e-6);
            let w = match found {
                Some(w) => w,
                None => {
                    frames.push(frame);
                    points.push(p);
                    dist.push(dist[u] + 1);
                    adj.push(Vec::new());
                    points.len() - 1
                }
            };
            if !adj[u].contains(&w) {
                adj[u].push(w);
                adj[w].push(u);
            }
        }
    }
    adj
}

fn hyperbolic_distance(a: C, b: C) -> f64 {
    let num = (a - b).norm_sqr();
    let den = (1.0 - a.norm_sqr()) * (1.0 - b.norm_sqr());
    (1.0 + 2.0 * num / den).acosh()
}

fn bfs(adj: &[Vec<usize>]) -> Vec<usize> {
    let mut d = vec![usize::MAX; adj.len()];
    d[0] = 0;
    let mut q = std::collections::VecDeque::from([0]);
    while let Some(u) = q.pop_front() {
        for &w in &adj[u] {
            if d[w] == usize::MAX {
                d[w] = d[u] + 1;
                q.push_back(w);
            }
        }
    }
    d
}

/// Level sizes and edge counts per `(level, level)` pair up to `depth`.
fn profile(adj: &[Vec<usize>], depth: usize) -> (Vec<usize>, BTreeMap<(usize, usize), usize>) {
    let d = bfs(adj);
    let mut sizes = vec![0; depth + 1];
    let mut edges = BTreeMap::new();
    for u in 0..adj.len() {
        if d[u] > depth {
            continue;
        }
        sizes[d[u]] += 1;
        for &w in &adj[u] {
            if u < w && d[w] <= depth {
                *edges.entry((d[u].min(d[w]), d[u].max(d[w]))).or_insert(0) += 1;
            }
        }
    }
    (sizes, edges)
}

fn graph_adjacency(g: &LayeredGraph) -> Vec<Vec<usize>> {
    (0..g.vertex_count())
        .map(|u| g.neighbors(u).to_vec())
        .collect()
}

fn compare(v: usize, s: usize, depth: usize) {
    // the disk ball of radius depth + 1 contains every edge among levels <= depth
    let disk = disk_tiling(v, s, depth + 1);
    let ours = build_tiling(HyperbolicParams::new(v, s).unwrap(), depth).unwrap();
    let (want_sizes, want_edges) = profile(&disk, depth);
    let (got_sizes, got_edges) = profile(&graph_adjacency(&ours.graph), depth);
    assert_eq!(got_sizes, want_sizes, "level sizes of H({v},{s})");
    assert_eq!(got_edges, want_edges, "edge profile of H({v},{s})");
}

#[test]
fn pentagons_of_squares() {
    compare(5, 4, 4);
}

#[test]
fn degree_four_pentagons() {
    compare(4, 5, 4);
}

#[test]
fn hexagon_degree_four() {
    compare(6, 4, 3);
}

#[test]
fn degree_five_pentagons() {
    compare(5, 5, 3);
}

#[test]
fn heptagonal_triangles() {
    compare(7, 3, 5);
}

#[test]
fn triangle_tiling_degree_three() {
    compare(3, 7, 6);
}

#[test]
fn inner_vertices_lie_on_v_faces() {
    // every interior vertex of H(5,4) lies on exactly 5 faces
    let t = build_tiling(HyperbolicParams::new(5, 4).unwrap(), 4).unwrap();
    let mut on_faces = vec![0usize; t.graph.vertex_count()];
    for f in &t.faces {
        assert_eq!(f.len(), 4);
        for &x in f {
            on_faces[x] += 1;
        }
    }
    for (x, &count) in on_faces.iter().enumerate().take(t.graph.ball_size(2)) {
        assert_eq!(count, 5, "vertex {x}");
    }
}
