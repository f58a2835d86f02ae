//! Growth, isoperimetry, connected-set counts and Peierls boundary audits.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generators::HyperbolicTiling;
use crate::graph::LayeredGraph;

/// Largest vertex count accepted by [`cheeger_exact`].
pub const CHEEGER_EXACT_CAP: usize = 24;
/// Largest vertex count accepted by [`cheeger_spectral_bound`].
pub const CHEEGER_SPECTRAL_CAP: usize = 4096;
/// Largest set size accepted by [`enumerate_connected_sets`].
pub const KESTEN_P_CAP: usize = 12;
/// Largest droplet size accepted by [`peierls_audit`].
pub const PEIERLS_SIZE_CAP: usize = 10;
/// Default limit on the number of sets visited by one enumeration.
pub const DEFAULT_SET_BUDGET: u64 = 2_000_000_000;

/// Neighbours of `x` split by level relative to `x`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NeighborSplit {
    pub descendants: Vec<usize>,
    pub same: Vec<usize>,
    pub parents: Vec<usize>,
}

/// `D_x`, `S_x`, `P_x` for a vertex that is not on the outermost level.
///
/// The root is accepted and has only descendants.
pub fn neighbor_split(g: &LayeredGraph, x: usize) -> Result<NeighborSplit> {
    if g.level(x) == g.radius() {
        return Err(Error::BoundaryVertex(x));
    }
    let lx = g.level(x);
    let mut split = NeighborSplit {
        descendants: Vec::new(),
        same: Vec::new(),
        parents: Vec::new(),
    };
    for &w in g.neighbors(x) {
        match g.level(w) {
            l if l > lx => split.descendants.push(w),
            l if l == lx => split.same.push(w),
            _ => split.parents.push(w),
        }
    }
    Ok(split)
}

/// `min |D_x| - |S_x| - |P_x|` over `x` in levels `1..=r_max`.
///
/// The value may be zero or negative; the graph is growing when it is positive.
pub fn growth_parameter(g: &LayeredGraph, r_max: usize) -> Result<i64> {
    if r_max + 1 > g.radius() || r_max == 0 {
        return Err(Error::RadiusTooLarge {
            requested: r_max,
            needed: r_max + 1,
            available: g.radius(),
        });
    }
    let mut best = i64::MAX;
    for x in g.level_range(1).start..g.level_range(r_max).end {
        let sp = neighbor_split(g, x)?;
        let margin = sp.descendants.len() as i64 - (sp.same.len() + sp.parents.len()) as i64;
        best = best.min(margin);
    }
    Ok(best)
}

/// A nonnegative fraction in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        let g = gcd(num, den).max(1);
        Ratio {
            num: num / g,
            den: den / g,
        }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    fn less_than(self, other: Ratio) -> bool {
        (self.num as u128) * (other.den as u128) < (other.num as u128) * (self.den as u128)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Edge isoperimetric constant `min |∂_E S| / |S|` over `0 < |S| <= |V|/2`.
///
/// Walks all subsets in Gray-code order, updating the cut size incrementally.
pub fn cheeger_exact(g: &LayeredGraph) -> Result<Ratio> {
    let n = g.vertex_count();
    if n > CHEEGER_EXACT_CAP {
        return Err(Error::TooLarge {
            what: "exact Cheeger constant",
            size: n,
            cap: CHEEGER_EXACT_CAP,
        });
    }
    if n < 2 {
        return Err(Error::BadParams(
            "Cheeger constant needs at least two vertices".into(),
        ));
    }
    let nb: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v).iter().fold(0u32, |m, &w| m | (1 << w)))
        .collect();
    let mut set = 0u32;
    let mut cut: i64 = 0;
    let mut best: Option<Ratio> = None;
    for step in 1u64..(1u64 << n) {
        let v = step.trailing_zeros() as usize;
        let bit = 1u32 << v;
        let inside = (nb[v] & set).count_ones() as i64;
        let deg = g.degree(v) as i64;
        if set & bit == 0 {
            cut += deg - 2 * inside;
        } else {
            cut -= deg - 2 * inside;
        }
        set ^= bit;
        let size = set.count_ones() as usize;
        if size == 0 || 2 * size > n {
            continue;
        }
        let r = Ratio::new(cut as u64, size as u64);
        if best.is_none_or(|b| r.less_than(b)) {
            best = Some(r);
        }
    }
    Ok(best.expect("n >= 2 gives a set of size 1"))
}

/// Lower bound `(k - λ₂)/2` on the edge isoperimetric constant of a
/// `k`-regular graph, `λ₂` the second largest adjacency eigenvalue.
pub fn cheeger_spectral_bound(g: &LayeredGraph) -> Result<f64> {
    let n = g.vertex_count();
    if n > CHEEGER_SPECTRAL_CAP {
        return Err(Error::TooLarge {
            what: "spectral Cheeger bound",
            size: n,
            cap: CHEEGER_SPECTRAL_CAP,
        });
    }
    let min = (0..n).map(|v| g.degree(v)).min().unwrap_or(0);
    let max = g.max_degree();
    if min != max {
        return Err(Error::NotRegular { min, max });
    }
    if n < 2 {
        return Err(Error::BadParams(
            "spectral bound needs at least two vertices".into(),
        ));
    }
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (u, v) in g.edges() {
        a[(u, v)] = 1.0;
        a[(v, u)] = 1.0;
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    Ok((max as f64 - ev[1]) / 2.0)
}

/// Visits every connected set that contains `root`, avoids vertices with
/// `allowed[v] == false`, and has at most `p_max` vertices, each exactly once.
///
/// Returns the number of sets visited.
pub fn for_each_connected_set<F>(
    g: &LayeredGraph,
    root: usize,
    allowed: &[bool],
    p_max: usize,
    budget: u64,
    mut visit: F,
) -> Result<u64>
where
    F: FnMut(&[usize]),
{
    if p_max == 0 || !allowed[root] {
        return Ok(0);
    }
    let mut seen: Vec<bool> = allowed.iter().map(|&a| !a).collect();
    seen[root] = true;
    let mut set = vec![root];
    visit(&set);
    let mut count = 1u64;
    let mut untried = Vec::new();
    for &w in g.neighbors(root) {
        if !seen[w] {
            seen[w] = true;
            untried.push(w);
        }
    }
    if p_max > 1 {
        extend(
            g, &mut set, untried, &mut seen, p_max, budget, &mut count, &mut visit,
        )?;
    }
    Ok(count)
}

#[allow(clippy::too_many_arguments)]
fn extend<F: FnMut(&[usize])>(
    g: &LayeredGraph,
    set: &mut Vec<usize>,
    mut untried: Vec<usize>,
    seen: &mut [bool],
    p_max: usize,
    budget: u64,
    count: &mut u64,
    visit: &mut F,
) -> Result<()> {
    while let Some(v) = untried.pop() {
        set.push(v);
        *count += 1;
        if *count > budget {
            return Err(Error::BudgetExceeded(budget));
        }
        visit(set);
        if set.len() < p_max {
            let mut next = untried.clone();
            let mark = next.len();
            for &w in g.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    next.push(w);
                }
            }
            let added: Vec<usize> = next[mark..].to_vec();
            extend(g, set, next, seen, p_max, budget, count, visit)?;
            for w in added {
                seen[w] = false;
            }
        }
        set.pop();
    }
    Ok(())
}

/// Counts `c_p` of connected sets of size `p` containing `x`, with the
/// comparison values `(e(Δ+1))^p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KestenCounts {
    pub max_degree: usize,
    /// `counts[p-1] = c_p`.
    pub counts: Vec<u64>,
    pub bounds: Vec<f64>,
}

impl KestenCounts {
    pub fn violations(&self) -> usize {
        self.counts
            .iter()
            .zip(&self.bounds)
            .filter(|(&c, &b)| c as f64 > b)
            .count()
    }
}

pub fn enumerate_connected_sets(g: &LayeredGraph, x: usize, p_max: usize) -> Result<KestenCounts> {
    if p_max > KESTEN_P_CAP {
        return Err(Error::TooLarge {
            what: "connected-set size",
            size: p_max,
            cap: KESTEN_P_CAP,
        });
    }
    let allowed = vec![true; g.vertex_count()];
    let mut counts = vec![0u64; p_max];
    for_each_connected_set(g, x, &allowed, p_max, DEFAULT_SET_BUDGET, |c| {
        counts[c.len() - 1] += 1
    })?;
    let delta = g.max_degree();
    let base = std::f64::consts::E * (delta as f64 + 1.0);
    let bounds = (1..=p_max).map(|p| base.powi(p as i32)).collect();
    Ok(KestenCounts {
        max_degree: delta,
        counts,
        bounds,
    })
}

/// The region `U = F_{i+1} ∪ S` of the ball `B_m`, with `S ⊆ L_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Region {
    pub m: usize,
    pub i: usize,
    pub s: Vec<usize>,
}

impl Region {
    pub fn new(g: &LayeredGraph, m: usize, i: usize, s: Vec<usize>) -> Result<Self> {
        if m + 1 > g.radius() {
            return Err(Error::RadiusTooLarge {
                requested: m,
                needed: m + 1,
                available: g.radius(),
            });
        }
        if i > m {
            return Err(Error::BadRegion(format!(
                "level {i} lies outside the ball B_{m}"
            )));
        }
        let level = g.level_range(i);
        for &x in &s {
            if !level.contains(&x) {
                return Err(Error::BadRegion(format!("vertex {x} is not on level {i}")));
            }
        }
        let mut s = s;
        s.sort_unstable();
        s.dedup();
        Ok(Region { m, i, s })
    }

    /// Membership mask of `U` over all vertices of `g`.
    pub fn mask(&self, g: &LayeredGraph) -> Vec<bool> {
        let mut inside = vec![false; g.vertex_count()];
        inside[g.level_range(self.i + 1).start..g.ball_size(self.m)].fill(true);
        for &x in &self.s {
            inside[x] = true;
        }
        inside
    }

    pub fn vertices(&self, g: &LayeredGraph) -> Vec<usize> {
        let mask = self.mask(g);
        (0..g.vertex_count()).filter(|&v| mask[v]).collect()
    }
}

/// Boundary counts of a droplet `C ⊆ U`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PeierlsMargin {
    pub down: usize,
    pub not_down: usize,
    pub plus: usize,
    pub minus: usize,
    pub margin: i64,
    pub size: usize,
}

fn edge_counts(g: &LayeredGraph, c: &[usize], in_c: &[bool]) -> (usize, usize) {
    let mut down = 0;
    let mut not_down = 0;
    for &x in c {
        for &w in g.neighbors(x) {
            if in_c[w] {
                continue;
            }
            if g.level(w) > g.level(x) {
                down += 1;
            } else {
                not_down += 1;
            }
        }
    }
    (down, not_down)
}

/// Boundary counts of `C` in `g` relative to the region mask `u`.
///
/// Outside endpoints in `U` or on level `m + 1` (plus ghosts) count toward
/// `plus`; those in `B_m \ U` toward `minus`.
pub fn peierls_margin(
    g: &LayeredGraph,
    m: usize,
    u: &[bool],
    c: &[usize],
    in_c: &[bool],
) -> PeierlsMargin {
    let (down, not_down) = edge_counts(g, c, in_c);
    let mut plus = 0;
    let mut minus = 0;
    for &x in c {
        for &w in g.neighbors(x) {
            if in_c[w] {
                continue;
            }
            if u[w] || g.level(w) > m {
                plus += 1;
            } else {
                minus += 1;
            }
        }
    }
    PeierlsMargin {
        down,
        not_down,
        plus,
        minus,
        margin: down as i64 - not_down as i64,
        size: c.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeierlsReport {
    pub g: i64,
    pub sets_examined: u64,
    /// Minimum of `(down - not_down) - g|C|` and the droplet attaining it.
    pub worst_down: i64,
    pub worst_down_case: Option<PeierlsMargin>,
    /// Minimum of `(plus - minus) - g|C|` and the droplet attaining it.
    pub worst_plus: i64,
    pub worst_plus_case: Option<PeierlsMargin>,
    pub down_violations: u64,
    pub plus_violations: u64,
    pub telescoping_failures: u64,
    pub count_identity_failures: u64,
}

impl PeierlsReport {
    fn empty(g: i64) -> Self {
        PeierlsReport {
            g,
            sets_examined: 0,
            worst_down: i64::MAX,
            worst_down_case: None,
            worst_plus: i64::MAX,
            worst_plus_case: None,
            down_violations: 0,
            plus_violations: 0,
            telescoping_failures: 0,
            count_identity_failures: 0,
        }
    }

    pub fn violation_count(&self) -> u64 {
        self.down_violations
            + self.plus_violations
            + self.telescoping_failures
            + self.count_identity_failures
    }

    fn merge(&mut self, other: PeierlsReport) {
        self.sets_examined += other.sets_examined;
        if other.worst_down < self.worst_down {
            self.worst_down = other.worst_down;
            self.worst_down_case = other.worst_down_case;
        }
        if other.worst_plus < self.worst_plus {
            self.worst_plus = other.worst_plus;
            self.worst_plus_case = other.worst_plus_case;
        }
        self.down_violations += other.down_violations;
        self.plus_violations += other.plus_violations;
        self.telescoping_failures += other.telescoping_failures;
        self.count_identity_failures += other.count_identity_failures;
    }
}

/// Checks both Peierls inequalities and the level telescoping identity on
/// every connected `C ⊆ U` with `|C| <= size_cap`.
///
/// `seeds` restricts the audit to droplets meeting the given vertices
/// (`None` means every droplet in `U`).
pub fn peierls_audit(
    g: &LayeredGraph,
    region: &Region,
    size_cap: usize,
    seeds: Option<&[usize]>,
) -> Result<PeierlsReport> {
    if size_cap > PEIERLS_SIZE_CAP {
        return Err(Error::TooLarge {
            what: "Peierls droplet size",
            size: size_cap,
            cap: PEIERLS_SIZE_CAP,
        });
    }
    let growth = growth_parameter(g, region.m.max(1).min(g.radius() - 1))?;
    if growth <= 0 {
        return Err(Error::NotGrowing(growth));
    }
    let u = region.mask(g);
    let n = g.vertex_count();
    let mut seed_mask = vec![seeds.is_none(); n];
    if let Some(list) = seeds {
        for &x in list {
            seed_mask[x] = true;
        }
    }
    let mut report = PeierlsReport::empty(growth);
    let mut in_c = vec![false; n];
    let mut scratch = vec![false; n];
    let mut allowed = u.clone();
    for anchor in 0..n {
        if !u[anchor] {
            continue;
        }
        // Anchor at the smallest id so each droplet is seen once.
        let mut part = PeierlsReport::empty(growth);
        for_each_connected_set(g, anchor, &allowed, size_cap, DEFAULT_SET_BUDGET, |c| {
            if !c.iter().any(|&x| seed_mask[x]) {
                return;
            }
            for &x in c {
                in_c[x] = true;
            }
            audit_one(g, region.m, &u, c, &in_c, &mut scratch, &mut part);
            for &x in c {
                in_c[x] = false;
            }
        })?;
        report.merge(part);
        allowed[anchor] = false;
    }
    Ok(report)
}

fn audit_one(
    g: &LayeredGraph,
    m: usize,
    u: &[bool],
    c: &[usize],
    in_c: &[bool],
    in_cj: &mut [bool],
    rep: &mut PeierlsReport,
) {
    let pm = peierls_margin(g, m, u, c, in_c);
    rep.sets_examined += 1;
    let gc = rep.g * c.len() as i64;
    let d = pm.margin - gc;
    let p = pm.plus as i64 - pm.minus as i64 - gc;
    if d < 0 {
        rep.down_violations += 1;
    }
    if p < 0 {
        rep.plus_violations += 1;
    }
    if d < rep.worst_down {
        rep.worst_down = d;
        rep.worst_down_case = Some(pm);
    }
    if p < rep.worst_plus {
        rep.worst_plus = p;
        rep.worst_plus_case = Some(pm);
    }
    if pm.down + pm.not_down != pm.plus + pm.minus {
        rep.count_identity_failures += 1;
    }
    // Level-by-level sum over C_j = C ∩ L_j.
    let mut levels: Vec<usize> = c.iter().map(|&x| g.level(x)).collect();
    levels.sort_unstable();
    levels.dedup();
    let mut sum = 0i64;
    for &j in &levels {
        let cj: Vec<usize> = c.iter().copied().filter(|&x| g.level(x) == j).collect();
        for &x in &cj {
            in_cj[x] = true;
        }
        let (dj, nj) = edge_counts(g, &cj, in_cj);
        sum += dj as i64 - nj as i64;
        for &x in &cj {
            in_cj[x] = false;
        }
    }
    if sum != pm.margin {
        rep.telescoping_failures += 1;
    }
}

/// Regions used by the multi-region audit: for every level `i <= m`, the
/// choices `S = L_i`, `S = ∅`, `S = {first}` and `S = L_i \ {first}`.
pub fn standard_regions(g: &LayeredGraph, m: usize) -> Result<Vec<Region>> {
    let mut out = Vec::new();
    for i in 0..=m {
        let level = g.level_set(i);
        let mut choices = vec![level.clone(), Vec::new()];
        if level.len() > 1 {
            choices.push(vec![level[0]]);
            choices.push(level[1..].to_vec());
        }
        choices.dedup();
        for s in choices {
            out.push(Region::new(g, m, i, s)?);
        }
    }
    Ok(out)
}

/// [`peierls_audit`] over each of the given regions, merged.
pub fn peierls_audit_regions(
    g: &LayeredGraph,
    regions: &[Region],
    size_cap: usize,
) -> Result<PeierlsReport> {
    let mut total: Option<PeierlsReport> = None;
    for r in regions {
        let rep = peierls_audit(g, r, size_cap, None)?;
        match &mut total {
            None => total = Some(rep),
            Some(t) => t.merge(rep),
        }
    }
    total.ok_or_else(|| Error::BadRegion("no regions given".into()))
}

/// Per-vertex structural checks for a generated tiling.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct HyperbolicAudit {
    pub vertices_checked: usize,
    /// Violations of `|D_x| >= 1`, `|S_x| <= 2`, `|P_x| <= 2`, `S_x = ∅` (even s),
    /// `|S_x| + |P_x| <= 2` (odd s >= 5, v >= 4), in that order.
    pub property_violations: [usize; 5],
    pub degree_violations: usize,
    pub face_violations: usize,
    pub faces_checked: usize,
}

impl HyperbolicAudit {
    pub fn violation_count(&self) -> usize {
        self.property_violations.iter().sum::<usize>()
            + self.degree_violations
            + self.face_violations
    }
}

pub fn hyperbolic_audit(t: &HyperbolicTiling, v: usize, s: usize) -> HyperbolicAudit {
    let g = &t.graph;
    let mut a = HyperbolicAudit::default();
    let r = g.radius();
    for x in g.level_range(1).start..g.ball_size(r.saturating_sub(1)) {
        let sp = neighbor_split(g, x).expect("x is not on the outer level");
        a.vertices_checked += 1;
        let checks = [
            sp.descendants.is_empty(),
            sp.same.len() > 2,
            sp.parents.len() > 2,
            s.is_multiple_of(2) && !sp.same.is_empty(),
            s % 2 == 1 && s >= 5 && v >= 4 && sp.same.len() + sp.parents.len() > 2,
        ];
        for (k, bad) in checks.iter().enumerate() {
            a.property_violations[k] += *bad as usize;
        }
        if g.degree(x) != v {
            a.degree_violations += 1;
        }
    }
    if g.ball_size(r.saturating_sub(1)) > 0 && g.degree(0) != v {
        a.degree_violations += 1;
    }

    // Faces: each is an s-cycle; vertices deep enough must lie in v faces and
    // their edges in exactly two.
    let n = g.vertex_count();
    let mut faces_at = vec![0usize; n];
    let mut edge_faces = std::collections::HashMap::new();
    for f in &t.faces {
        a.faces_checked += 1;
        let closed = f.len() == s && (0..f.len()).all(|i| g.has_edge(f[i], f[(i + 1) % f.len()]));
        let mut distinct = f.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if !closed || distinct.len() != f.len() {
            a.face_violations += 1;
        }
        for i in 0..f.len() {
            faces_at[f[i]] += 1;
            let (p, q) = (
                f[i].min(f[(i + 1) % f.len()]),
                f[i].max(f[(i + 1) % f.len()]),
            );
            *edge_faces.entry((p, q)).or_insert(0usize) += 1;
        }
    }
    let deep = r.saturating_sub(s / 2 + 1);
    let deep_end = g.ball_size(deep);
    for (x, &count) in faces_at.iter().enumerate().take(deep_end) {
        if count != v {
            a.face_violations += 1;
        }
        for &w in g.neighbors(x) {
            if w < deep_end && x < w && edge_faces.get(&(x, w)).copied().unwrap_or(0) != 2 {
                a.face_violations += 1;
            }
        }
    }
    a
}

/// Graph identification carried by audit records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphMeta {
    pub family: String,
    pub radius: usize,
    pub vertex_count: usize,
    pub edge_count: usize,
    pub hash: String,
}

impl GraphMeta {
    pub fn of(g: &LayeredGraph) -> Self {
        GraphMeta {
            family: g.family().to_string(),
            radius: g.radius(),
            vertex_count: g.vertex_count(),
            edge_count: g.edge_count(),
            hash: g.content_hash(),
        }
    }
}

/// One JSONL audit line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRecord {
    pub graph_meta: GraphMeta,
    pub op: String,
    pub params: serde_json::Value,
    pub worst_case: serde_json::Value,
    pub violation_count: u64,
}

impl AuditRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("audit records serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build_from_edges;
    use crate::generators::gen_tree;

    #[test]
    fn tree_growth() {
        for delta in 3..6 {
            let g = gen_tree(delta, 4).unwrap();
            assert_eq!(growth_parameter(&g, 3).unwrap(), delta as i64 - 2);
        }
    }

    #[test]
    fn split_on_tree() {
        let g = gen_tree(3, 3).unwrap();
        let sp = neighbor_split(&g, 1).unwrap();
        assert_eq!(
            (sp.descendants.len(), sp.same.len(), sp.parents.len()),
            (2, 0, 1)
        );
        let root = neighbor_split(&g, 0).unwrap();
        assert_eq!(root.descendants.len(), 3);
        assert!(matches!(
            neighbor_split(&g, g.vertex_count() - 1),
            Err(Error::BoundaryVertex(_))
        ));
    }

    #[test]
    fn cheeger_small() {
        let c4 = build_from_edges(&[(0, 1), (1, 2), (2, 3), (3, 0)], 0).unwrap();
        assert_eq!(cheeger_exact(&c4).unwrap(), Ratio::new(1, 1));
        let k4 = build_from_edges(&[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)], 0).unwrap();
        assert_eq!(cheeger_exact(&k4).unwrap(), Ratio::new(2, 1));
        let k2 = build_from_edges(&[(0, 1)], 0).unwrap();
        assert_eq!(cheeger_exact(&k2).unwrap(), Ratio::new(1, 1));
        // K_4 adjacency spectrum is {3, -1, -1, -1}.
        assert!((cheeger_spectral_bound(&k4).unwrap() - 2.0).abs() < 1e-12);
        let path = build_from_edges(&[(0, 1), (1, 2)], 0).unwrap();
        assert!(matches!(
            cheeger_spectral_bound(&path),
            Err(Error::NotRegular { .. })
        ));
    }

    #[test]
    fn connected_sets_path_and_tree() {
        let path = build_from_edges(&[(0, 1), (1, 2), (2, 3), (3, 4)], 0).unwrap();
        assert_eq!(
            enumerate_connected_sets(&path, 0, 5).unwrap().counts,
            vec![1; 5]
        );
        let t = gen_tree(3, 3).unwrap();
        let k = enumerate_connected_sets(&t, 0, 3).unwrap();
        assert_eq!(k.counts[..2], [1, 3]);
        // size 3 with root: two children (3) or child + grandchild (3*2)
        assert_eq!(k.counts[2], 9);
    }

    #[test]
    fn single_vertex_peierls_margin() {
        let g = gen_tree(4, 4).unwrap();
        let region = Region::new(&g, 3, 2, g.level_set(2)).unwrap();
        let u = region.mask(&g);
        let x = g.level_range(2).start;
        let mut in_c = vec![false; g.vertex_count()];
        in_c[x] = true;
        let pm = peierls_margin(&g, 3, &u, &[x], &in_c);
        assert_eq!((pm.down, pm.not_down, pm.margin), (3, 1, 2));
    }

    #[test]
    fn region_validation() {
        let g = gen_tree(3, 3).unwrap();
        assert!(matches!(
            Region::new(&g, 2, 1, vec![0]),
            Err(Error::BadRegion(_))
        ));
        assert!(matches!(
            Region::new(&g, 2, 3, vec![]),
            Err(Error::BadRegion(_))
        ));
        assert!(matches!(
            Region::new(&g, 3, 1, vec![]),
            Err(Error::RadiusTooLarge { .. })
        ));
    }

    #[test]
    fn small_tree_peierls_clean() {
        let g = gen_tree(4, 3).unwrap();
        let regions = standard_regions(&g, 2).unwrap();
        let rep = peierls_audit_regions(&g, &regions, 5).unwrap();
        assert_eq!(rep.violation_count(), 0);
        assert!(rep.sets_examined > 0);
    }
}
