//! Exact Ising Gibbs measures on a ball with boundary conditions.
//!
//! Interior vertex `x` of the ball is bit `x` of a `u64` state (bit set
//! means `+1`). A table is always taken over a [`FreeRegion`]: the spins in
//! `free` vary, the remaining interior spins are frozen to `frozen`, and the
//! ghost layer contributes through the boundary condition.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{self, for_each_connected_set, Region, DEFAULT_SET_BUDGET};
use crate::graph::{BallSystem, LayeredGraph};
use crate::spins::SpinConfiguration;

/// Largest number of free spins in a tabulated measure.
pub const TABLE_CAP: usize = 24;
/// Largest interior size of an [`IsingSystem`].
pub const SYSTEM_CAP: usize = 64;
/// Largest `|S|` for marginal tables.
pub const MARGINAL_CAP: usize = 20;
/// Largest droplet size for [`claim32_audit`].
pub const CLAIM32_SIZE_CAP: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum BoundaryCondition {
    Free,
    Plus,
    Minus,
    /// One spin per ghost vertex, in ghost-index order.
    Fixed(Vec<i8>),
}

impl BoundaryCondition {
    pub fn tag(&self) -> &'static str {
        match self {
            BoundaryCondition::Free => "free",
            BoundaryCondition::Plus => "plus",
            BoundaryCondition::Minus => "minus",
            BoundaryCondition::Fixed(_) => "fixed",
        }
    }

    fn ghost_spins(&self, ghosts: usize) -> Result<Option<Vec<i8>>> {
        match self {
            BoundaryCondition::Free => Ok(None),
            BoundaryCondition::Plus => Ok(Some(vec![1; ghosts])),
            BoundaryCondition::Minus => Ok(Some(vec![-1; ghosts])),
            BoundaryCondition::Fixed(spins) => {
                if spins.len() != ghosts {
                    return Err(Error::BadParams(format!(
                        "fixed boundary has {} spins for {ghosts} ghost vertices",
                        spins.len()
                    )));
                }
                if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
                    return Err(Error::BadParams(format!("boundary spin {bad} is not ±1")));
                }
                Ok(Some(spins.clone()))
            }
        }
    }
}

impl FromStr for BoundaryCondition {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "free" => Ok(BoundaryCondition::Free),
            "plus" => Ok(BoundaryCondition::Plus),
            "minus" => Ok(BoundaryCondition::Minus),
            other => Err(format!(
                "unknown boundary condition `{other}` (free, plus, minus)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GibbsParams {
    pub beta: f64,
    pub h: f64,
}

impl GibbsParams {
    pub fn new(beta: f64, h: f64) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 || !h.is_finite() {
            return Err(Error::BadParams(format!(
                "need finite beta >= 0 and finite h, got beta={beta}, h={h}"
            )));
        }
        Ok(GibbsParams { beta, h })
    }

    pub fn zero_field(beta: f64) -> Result<Self> {
        Self::new(beta, 0.0)
    }
}

/// Spins that vary (`free`) and the values of the other interior spins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FreeRegion {
    pub free: u64,
    pub frozen: u64,
}

impl FreeRegion {
    pub fn new(n: usize, free: u64, frozen: u64) -> Result<Self> {
        let all = full_mask(n);
        if free & !all != 0 {
            return Err(Error::BadRegion(format!(
                "free mask {free:#x} has sites outside 0..{n}"
            )));
        }
        Ok(FreeRegion {
            free,
            frozen: frozen & all & !free,
        })
    }

    pub fn full(n: usize) -> Self {
        FreeRegion {
            free: full_mask(n),
            frozen: 0,
        }
    }

    pub fn free_count(&self) -> usize {
        self.free.count_ones() as usize
    }

    pub fn len(&self) -> usize {
        1usize << self.free_count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn free_sites(&self) -> Vec<usize> {
        bits(self.free).collect()
    }

    /// State for table index `k` (bit `j` of `k` is the `j`-th free site).
    pub fn state(&self, k: usize) -> u64 {
        pdep(k as u64, self.free) | self.frozen
    }

    pub fn index(&self, state: u64) -> usize {
        pext(state, self.free) as usize
    }

    pub fn contains(&self, state: u64) -> bool {
        state & !self.free == self.frozen
    }
}

pub fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

pub fn mask_of(sites: &[usize]) -> u64 {
    sites.iter().fold(0u64, |m, &x| m | (1u64 << x))
}

pub(crate) fn bits(mask: u64) -> impl Iterator<Item = usize> {
    let mut m = mask;
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let b = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(b)
        }
    })
}

/// Submasks of `mask` in increasing order.
pub fn submasks(mask: u64) -> impl Iterator<Item = u64> {
    let mut next = Some(0u64);
    std::iter::from_fn(move || {
        let s = next?;
        next = if s == mask {
            None
        } else {
            Some(s.wrapping_sub(mask) & mask)
        };
        Some(s)
    })
}

pub(crate) fn pdep(mut src: u64, mut mask: u64) -> u64 {
    let mut out = 0;
    while mask != 0 && src != 0 {
        let low = mask & mask.wrapping_neg();
        if src & 1 == 1 {
            out |= low;
        }
        src >>= 1;
        mask &= mask - 1;
    }
    out
}

pub(crate) fn pext(src: u64, mut mask: u64) -> u64 {
    let mut out = 0;
    let mut j = 0;
    while mask != 0 {
        let b = mask.trailing_zeros();
        out |= ((src >> b) & 1) << j;
        j += 1;
        mask &= mask - 1;
    }
    out
}

/// The Ising model on a ball: couplings, boundary fields and parameters.
#[derive(Debug)]
pub struct IsingSystem {
    n: usize,
    params: GibbsParams,
    bc: BoundaryCondition,
    edges: Vec<(usize, usize)>,
    nb: Vec<u64>,
    nb_hi: Vec<u64>,
    degree: Vec<i32>,
    boundary: Vec<i32>,
    graph_hash: String,
    energies: OnceLock<Vec<f64>>,
}

impl Clone for IsingSystem {
    fn clone(&self) -> Self {
        IsingSystem {
            n: self.n,
            params: self.params,
            bc: self.bc.clone(),
            edges: self.edges.clone(),
            nb: self.nb.clone(),
            nb_hi: self.nb_hi.clone(),
            degree: self.degree.clone(),
            boundary: self.boundary.clone(),
            graph_hash: self.graph_hash.clone(),
            energies: OnceLock::new(),
        }
    }
}

impl IsingSystem {
    pub fn new(ball: &BallSystem, bc: &BoundaryCondition, params: GibbsParams) -> Result<Self> {
        let n = ball.n();
        if n > SYSTEM_CAP {
            return Err(Error::TooLarge {
                what: "interior spins",
                size: n,
                cap: SYSTEM_CAP,
            });
        }
        let g = ball.interior();
        let edges: Vec<(usize, usize)> = g.edges().collect();
        let mut nb = vec![0u64; n];
        let mut nb_hi = vec![0u64; n];
        for &(u, v) in &edges {
            nb[u] |= 1 << v;
            nb[v] |= 1 << u;
            nb_hi[u] |= 1 << v;
        }
        let degree = (0..n).map(|x| g.degree(x) as i32).collect();
        let mut boundary = vec![0i32; n];
        if let Some(ghosts) = bc.ghost_spins(ball.ghost_count())? {
            for &(x, gi) in ball.ghost_edges() {
                boundary[x] += ghosts[gi] as i32;
            }
        }
        Ok(IsingSystem {
            n,
            params,
            bc: bc.clone(),
            edges,
            nb,
            nb_hi,
            degree,
            boundary,
            graph_hash: g.content_hash(),
            energies: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> GibbsParams {
        self.params
    }

    pub fn bc(&self) -> &BoundaryCondition {
        &self.bc
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn graph_hash(&self) -> &str {
        &self.graph_hash
    }

    /// Interior neighbours of `x` as a bit mask.
    pub fn neighbor_mask(&self, x: usize) -> u64 {
        self.nb[x]
    }

    pub fn interior_degree(&self, x: usize) -> i32 {
        self.degree[x]
    }

    /// Sum of the fixed ghost spins adjacent to `x`.
    pub fn boundary_field(&self, x: usize) -> i32 {
        self.boundary[x]
    }

    /// Same system at other parameters.
    pub fn with_params(&self, params: GibbsParams) -> Self {
        let mut s = self.clone();
        s.params = params;
        s
    }

    pub fn spin(state: u64, x: usize) -> i32 {
        (((state >> x) & 1) as i32) * 2 - 1
    }

    /// `Σ_{y~x} σ_y` including ghost neighbours.
    pub fn local_sum(&self, state: u64, x: usize) -> i32 {
        2 * (self.nb[x] & state).count_ones() as i32 - self.degree[x] + self.boundary[x]
    }

    /// `(Σ_e σ_u σ_v + Σ_x σ_x b_x, Σ_x σ_x)` as integers.
    fn energy_parts(&self, state: u64) -> (i64, i64) {
        let mut bonds = self.edges.len() as i64;
        let mut field = 0i64;
        for x in 0..self.n {
            let up = (state >> x) & 1 == 1;
            let other = if up { !state } else { state };
            bonds -= 2 * (self.nb_hi[x] & other).count_ones() as i64;
            field += if up {
                self.boundary[x] as i64
            } else {
                -(self.boundary[x] as i64)
            };
        }
        let plus = (state & full_mask(self.n)).count_ones() as i64;
        (bonds + field, 2 * plus - self.n as i64)
    }

    /// Log-weight `β Σ σ_u σ_v + β h Σ σ_x` over interior and ghost edges.
    pub fn energy(&self, state: u64) -> f64 {
        let (bonds, mag) = self.energy_parts(state);
        self.params.beta * bonds as f64 + self.params.beta * self.params.h * mag as f64
    }

    /// `μ(σ_x = + | σ off x)`.
    pub fn prob_plus(&self, state: u64, x: usize) -> f64 {
        let s = self.local_sum(state, x) as f64 + self.params.h;
        1.0 / (1.0 + (-2.0 * self.params.beta * s).exp())
    }

    /// Log-weights of every state, computed once (`n <= 24`).
    pub fn energies(&self) -> Result<&[f64]> {
        if self.n > TABLE_CAP {
            return Err(Error::TooLarge {
                what: "full state space",
                size: self.n,
                cap: TABLE_CAP,
            });
        }
        Ok(self.energies.get_or_init(|| {
            let region = FreeRegion::full(self.n);
            self.log_weights(&region)
        }))
    }

    /// Log-weights over the region in index order (Gray-code walk, integer energies).
    fn log_weights(&self, region: &FreeRegion) -> Vec<f64> {
        let sites = region.free_sites();
        let len = region.len();
        let mut out = vec![0.0; len];
        let mut state = region.frozen;
        let (mut bonds, mut mag) = self.energy_parts(state);
        let (beta, h) = (self.params.beta, self.params.h);
        out[0] = beta * bonds as f64 + beta * h * mag as f64;
        for t in 1..len {
            let j = t.trailing_zeros() as usize;
            let x = sites[j];
            let sx = Self::spin(state, x) as i64;
            bonds -= 2 * sx * self.local_sum(state, x) as i64;
            mag -= 2 * sx;
            state ^= 1 << x;
            out[t ^ (t >> 1)] = beta * bonds as f64 + beta * h * mag as f64;
        }
        out
    }

    /// Exact table over a region.
    pub fn table(&self, region: FreeRegion) -> Result<GibbsTable> {
        if region.free_count() > TABLE_CAP {
            return Err(Error::TooLarge {
                what: "free spins",
                size: region.free_count(),
                cap: TABLE_CAP,
            });
        }
        if region.free & !full_mask(self.n) != 0 {
            return Err(Error::BadRegion(
                "free mask has sites outside the ball".into(),
            ));
        }
        let log_weights = if region.free == full_mask(self.n) && self.n <= TABLE_CAP {
            self.energies()?.to_vec()
        } else {
            self.log_weights(&region)
        };
        let log_z = log_sum_exp(&log_weights);
        Ok(GibbsTable {
            n: self.n,
            region,
            log_weights,
            log_z,
            params: self.params,
            bc: self.bc.clone(),
            graph_hash: self.graph_hash.clone(),
        })
    }

    pub fn exact(&self) -> Result<GibbsTable> {
        self.table(FreeRegion::full(self.n))
    }
}

/// `log Σ exp(w)`, summed in index order after a max shift.
pub fn log_sum_exp(w: &[f64]) -> f64 {
    let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + w.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// An exact probability table over the states of a region.
#[derive(Debug, Clone)]
pub struct GibbsTable {
    n: usize,
    region: FreeRegion,
    log_weights: Vec<f64>,
    log_z: f64,
    params: GibbsParams,
    bc: BoundaryCondition,
    graph_hash: String,
}

#[derive(Serialize)]
struct TableSidecar<'a> {
    n: usize,
    free_mask: u64,
    frozen: u64,
    entries: usize,
    log_z: f64,
    params: GibbsParams,
    bc: &'a BoundaryCondition,
    graph_hash: &'a str,
    layout: &'static str,
}

impl GibbsTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn region(&self) -> FreeRegion {
        self.region
    }

    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn params(&self) -> GibbsParams {
        self.params
    }

    pub fn state(&self, k: usize) -> u64 {
        self.region.state(k)
    }

    pub fn prob(&self, k: usize) -> f64 {
        (self.log_weights[k] - self.log_z).exp()
    }

    pub fn log_prob(&self, k: usize) -> f64 {
        self.log_weights[k] - self.log_z
    }

    /// Probability of a state (zero off the region).
    pub fn prob_of_state(&self, state: u64) -> f64 {
        if self.region.contains(state) {
            self.prob(self.region.index(state))
        } else {
            0.0
        }
    }

    pub fn probs(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.prob(k)).collect()
    }

    /// `(state, probability)` in index order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        (0..self.len()).map(|k| (self.state(k), self.prob(k)))
    }

    pub fn normalization_error(&self) -> f64 {
        (self.probs().iter().sum::<f64>() - 1.0).abs()
    }

    pub fn expect(&self, f: impl Fn(u64) -> f64) -> f64 {
        self.iter().map(|(s, p)| p * f(s)).sum()
    }

    pub fn variance(&self, f: impl Fn(u64) -> f64) -> f64 {
        let m = self.expect(&f);
        self.expect(|s| (f(s) - m).powi(2))
    }

    pub fn covariance(&self, f: impl Fn(u64) -> f64, g: impl Fn(u64) -> f64) -> f64 {
        let mf = self.expect(&f);
        let mg = self.expect(&g);
        self.expect(|s| (f(s) - mf) * (g(s) - mg))
    }

    pub fn prob_where(&self, pred: impl Fn(u64) -> bool) -> f64 {
        self.iter().filter(|&(s, _)| pred(s)).map(|(_, p)| p).sum()
    }

    /// `μ(σ_x = +)`.
    pub fn prob_plus(&self, x: usize) -> f64 {
        self.prob_where(|s| (s >> x) & 1 == 1)
    }

    /// Writes `<stem>.bin` (little-endian f64 log-weights in index order) and
    /// `<stem>.json` (metadata).
    pub fn write_dump(&self, stem: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(8 * self.len());
        for w in &self.log_weights {
            bytes.extend_from_slice(&w.to_le_bytes());
        }
        std::fs::write(stem.with_extension("bin"), bytes)?;
        let side = TableSidecar {
            n: self.n,
            free_mask: self.region.free,
            frozen: self.region.frozen,
            entries: self.len(),
            log_z: self.log_z,
            params: self.params,
            bc: &self.bc,
            graph_hash: &self.graph_hash,
            layout: "f64-le log-weights, index bit j = j-th free site",
        };
        let json = serde_json::to_string_pretty(&side).expect("sidecar serializes");
        std::fs::write(stem.with_extension("json"), json)?;
        Ok(())
    }

    /// Reads back the log-weights written by [`GibbsTable::write_dump`].
    pub fn read_dump_weights(stem: &Path) -> Result<Vec<f64>> {
        let bytes = std::fs::read(stem.with_extension("bin"))?;
        if bytes.len() % 8 != 0 {
            return Err(Error::Io("table dump length is not a multiple of 8".into()));
        }
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect())
    }
}

/// Log-weight of `σ` on the ball; ghost–ghost edges are not counted.
pub fn hamiltonian(
    ball: &BallSystem,
    sigma: &SpinConfiguration,
    bc: &BoundaryCondition,
    params: GibbsParams,
) -> Result<f64> {
    if sigma.len() != ball.n() {
        return Err(Error::BadParams(format!(
            "configuration has {} spins for {} interior vertices",
            sigma.len(),
            ball.n()
        )));
    }
    let sys = IsingSystem::new(ball, bc, params)?;
    Ok(sys.energy(sigma.state()))
}

pub fn exact_gibbs(
    ball: &BallSystem,
    bc: &BoundaryCondition,
    params: GibbsParams,
) -> Result<GibbsTable> {
    IsingSystem::new(ball, bc, params)?.exact()
}

/// `μ_A^η`: spins in `free` vary, the rest of the interior is fixed to `eta`.
pub fn conditional_measure(sys: &IsingSystem, free: u64, eta: u64) -> Result<GibbsTable> {
    sys.table(FreeRegion::new(sys.n(), free, eta)?)
}

/// Visits each fibre `{σ in region : σ agrees off D}` with its normalised
/// conditional probabilities.
fn for_each_fiber(
    sys: &IsingSystem,
    region: &FreeRegion,
    d: u64,
    mut visit: impl FnMut(&[u64], &[f64]),
) -> Result<()> {
    if d & !region.free != 0 {
        return Err(Error::BadRegion(
            "inner region is not contained in the outer one".into(),
        ));
    }
    let outer = region.free & !d;
    let fiber_len = 1usize << d.count_ones();
    let mut states = Vec::with_capacity(fiber_len);
    let mut probs = Vec::with_capacity(fiber_len);
    for o in submasks(outer) {
        let base = region.frozen | o;
        states.clear();
        probs.clear();
        for sd in submasks(d) {
            let s = base | sd;
            states.push(s);
            probs.push(sys.energy(s));
        }
        let lz = log_sum_exp(&probs);
        for p in probs.iter_mut() {
            *p = (*p - lz).exp();
        }
        visit(&states, &probs);
    }
    Ok(())
}

/// `σ ↦ μ_D^σ(f)` for every `σ` of the region, indexed like the region's table.
pub fn fiber_means(
    sys: &IsingSystem,
    region: &FreeRegion,
    d: u64,
    f: impl Fn(u64) -> f64,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; region.len()];
    for_each_fiber(sys, region, d, |states, probs| {
        let m: f64 = states.iter().zip(probs).map(|(&s, &p)| p * f(s)).sum();
        for &s in states {
            out[region.index(s)] = m;
        }
    })?;
    Ok(out)
}

/// `σ ↦ Var_D^σ(f)`.
pub fn fiber_variances(
    sys: &IsingSystem,
    region: &FreeRegion,
    d: u64,
    f: impl Fn(u64) -> f64,
) -> Result<Vec<f64>> {
    fiber_covariances(sys, region, d, &f, &f)
}

/// `σ ↦ μ_D^σ(f, g)`.
pub fn fiber_covariances(
    sys: &IsingSystem,
    region: &FreeRegion,
    d: u64,
    f: impl Fn(u64) -> f64,
    g: impl Fn(u64) -> f64,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; region.len()];
    for_each_fiber(sys, region, d, |states, probs| {
        let mf: f64 = states.iter().zip(probs).map(|(&s, &p)| p * f(s)).sum();
        let mg: f64 = states.iter().zip(probs).map(|(&s, &p)| p * g(s)).sum();
        let c: f64 = states
            .iter()
            .zip(probs)
            .map(|(&s, &p)| p * (f(s) - mf) * (g(s) - mg))
            .sum();
        for &s in states {
            out[region.index(s)] = c;
        }
    })?;
    Ok(out)
}

/// Bit mask of a set of interior vertices given as a geometry region.
pub fn region_mask(region: &Region, g: &LayeredGraph) -> u64 {
    mask_of(&region.vertices(g))
}

/// `ν_S^τ` as probabilities over `{±1}^S` (index bit `j` = `j`-th site of `S`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalTable {
    pub sites: Vec<usize>,
    pub probs: Vec<f64>,
}

impl MarginalTable {
    pub fn prob(&self, s_state: u64) -> f64 {
        self.probs[pext(s_state, mask_of(&self.sites)) as usize]
    }
}

pub(crate) fn check_marginal_region(
    sys: &IsingSystem,
    g: &LayeredGraph,
    region: &Region,
) -> Result<(u64, u64)> {
    if g.ball_size(region.m) != sys.n() {
        return Err(Error::BadRegion(format!(
            "region lives on B_{} but the system has {} spins",
            region.m,
            sys.n()
        )));
    }
    if region.s.len() > MARGINAL_CAP {
        return Err(Error::TooLarge {
            what: "marginal sites",
            size: region.s.len(),
            cap: MARGINAL_CAP,
        });
    }
    let u = region_mask(region, g);
    if u & !full_mask(sys.n()) != 0 {
        return Err(Error::BadRegion("region exceeds the ball".into()));
    }
    Ok((u, mask_of(&region.s)))
}

/// `ν_S^τ` by summing the table of `μ_{F_{i+1} ∪ S}^τ` over `F_{i+1}`.
pub fn marginal_measure(
    sys: &IsingSystem,
    g: &LayeredGraph,
    region: &Region,
    tau: u64,
) -> Result<MarginalTable> {
    let (u, s_mask) = check_marginal_region(sys, g, region)?;
    let table = conditional_measure(sys, u, tau)?;
    let mut probs = vec![0.0; 1 << region.s.len()];
    for (state, p) in table.iter() {
        probs[pext(state, s_mask) as usize] += p;
    }
    Ok(MarginalTable {
        sites: region.s.clone(),
        probs,
    })
}

/// `ν_S^τ` by the chain rule: site `s_j` is drawn from its marginal on
/// `F_{i+1} ∪ {s_j, ..., s_k}` with `s_1..s_{j-1}` already fixed.
pub fn marginal_measure_chain(
    sys: &IsingSystem,
    g: &LayeredGraph,
    region: &Region,
    tau: u64,
) -> Result<MarginalTable> {
    let (u, s_mask) = check_marginal_region(sys, g, region)?;
    let f_mask = u & !s_mask;
    let sites = &region.s;
    let mut probs = vec![0.0; 1 << sites.len()];
    for (k, slot) in probs.iter_mut().enumerate() {
        let assign = pdep(k as u64, s_mask);
        let mut eta = (tau & !u) | assign;
        let mut p = 1.0;
        for (j, &x) in sites.iter().enumerate() {
            let rest = mask_of(&sites[j..]);
            let t = conditional_measure(sys, f_mask | rest, eta)?;
            let plus = t.prob_plus(x);
            p *= if (assign >> x) & 1 == 1 {
                plus
            } else {
                1.0 - plus
            };
            eta = (eta & !(1 << x)) | (assign & (1 << x));
        }
        *slot = p;
    }
    Ok(MarginalTable {
        sites: sites.clone(),
        probs,
    })
}

/// Both sides of the correlation bound for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    /// `|μ_U^τ(σ_x=+) − μ_U^{τ^y}(σ_x=+)|`.
    pub direct: f64,
    /// `μ_U^{y,+}(σ_x=+) − μ_U^{y,−}(σ_x=+)`.
    pub monotone: f64,
}

/// Influence of the spin at `y ∈ L_i \ S` on `σ_x`, `x ∈ S`, under `μ_U^τ`.
pub fn correlation_decay_profile(
    sys: &IsingSystem,
    g: &LayeredGraph,
    region: &Region,
    x: usize,
    y: usize,
    tau: u64,
) -> Result<Correlation> {
    if !region.s.contains(&x) {
        return Err(Error::BadRegion(format!("x={x} is not in S")));
    }
    if g.level(y) != region.i || region.s.contains(&y) {
        return Err(Error::BadRegion(format!(
            "y={y} must lie on level {} outside S",
            region.i
        )));
    }
    let u = region_mask(region, g);
    let flipped = tau ^ (1 << y);
    let a = conditional_measure(sys, u, tau)?;
    let b = conditional_measure(sys, u, flipped)?;
    let plus = conditional_measure(sys, u, tau | (1 << y))?;
    let minus = conditional_measure(sys, u, tau & !(1 << y))?;
    Ok(Correlation {
        direct: plus_difference(&a, &b, x).abs(),
        monotone: plus_difference(&plus, &minus, x),
    })
}

/// `μ_a(σ_x=+) − μ_b(σ_x=+)`, summed over the less likely spin so that
/// small differences keep their relative precision.
fn plus_difference(a: &GibbsTable, b: &GibbsTable, x: usize) -> f64 {
    let pa = a.prob_plus(x);
    let pb = b.prob_plus(x);
    if pa + pb <= 1.0 {
        pa - pb
    } else {
        let minus = |s: u64| (s >> x) & 1 == 0;
        b.prob_where(minus) - a.prob_where(minus)
    }
}

/// Maximal negative component grown from `seed` inside `u`.
///
/// Without an anchor this is `K^(σ)`: empty when `σ_seed = +`. With
/// `anchored = true` the seed is always included and growth continues
/// through negative spins of `u` only.
pub fn negative_component(
    g: &LayeredGraph,
    state: u64,
    seed: usize,
    u: u64,
    anchored: bool,
) -> Vec<usize> {
    let minus = |v: usize| v < 64 && (u >> v) & 1 == 1 && (state >> v) & 1 == 0;
    if !anchored && !minus(seed) {
        return Vec::new();
    }
    let mut seen = vec![false; g.vertex_count()];
    seen[seed] = true;
    let mut out = vec![seed];
    let mut head = 0;
    while head < out.len() {
        let v = out[head];
        head += 1;
        for &w in g.neighbors(v) {
            if !seen[w] && minus(w) {
                seen[w] = true;
                out.push(w);
            }
        }
    }
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Claim32Report {
    pub g: i64,
    pub beta: f64,
    pub sets_examined: u64,
    /// Ratio for `C = ∅`, identically one.
    pub empty_ratio: f64,
    /// Largest `μ_U^−(σ∼C) e^{2gβ|C|}` over nonempty `C`.
    pub worst_ratio: f64,
    pub worst_set: Vec<usize>,
    pub violations: u64,
}

/// `μ_U^−(σ ∼ C) · e^{2gβ|C|}` for every connected `C ⊆ U` with
/// `|C| <= size_cap`. `μ_U^−` is minus on `B_m \ U` and uses the system's
/// ghost boundary, which must be plus.
pub fn claim32_audit(
    sys: &IsingSystem,
    g: &LayeredGraph,
    region: &Region,
    size_cap: usize,
) -> Result<Claim32Report> {
    if size_cap > CLAIM32_SIZE_CAP {
        return Err(Error::TooLarge {
            what: "droplet size",
            size: size_cap,
            cap: CLAIM32_SIZE_CAP,
        });
    }
    if *sys.bc() != BoundaryCondition::Plus {
        return Err(Error::BadParams(
            "the droplet bound is stated for the plus boundary".into(),
        ));
    }
    if g.ball_size(region.m) != sys.n() {
        return Err(Error::BadRegion(
            "region and system use different balls".into(),
        ));
    }
    let growth = geometry::growth_parameter(g, region.m.max(1).min(g.radius() - 1))?;
    if growth <= 0 {
        return Err(Error::NotGrowing(growth));
    }
    let beta = sys.params().beta;
    let u_vertices = region.vertices(g);
    let u = mask_of(&u_vertices);
    let table = conditional_measure(sys, u, 0)?;
    let probs = table.probs();
    let full_idx = (table.len() - 1) as u64;

    let mut report = Claim32Report {
        g: growth,
        beta,
        sets_examined: 1,
        empty_ratio: probs.iter().sum(),
        worst_ratio: f64::NEG_INFINITY,
        worst_set: Vec::new(),
        violations: 0,
    };
    if report.empty_ratio > 1.0 + 1e-12 {
        report.violations += 1;
    }
    let mut allowed = vec![false; g.vertex_count()];
    for &x in &u_vertices {
        allowed[x] = true;
    }
    for &anchor in &u_vertices {
        for_each_connected_set(g, anchor, &allowed, size_cap, DEFAULT_SET_BUDGET, |c| {
            let c_mask = mask_of(c);
            let boundary_in_u = c
                .iter()
                .flat_map(|&x| g.neighbors(x).iter().copied())
                .filter(|&w| w < 64 && (u >> w) & 1 == 1)
                .fold(0u64, |m, w| m | (1 << w))
                & !c_mask;
            let fixed_idx = pext(c_mask | boundary_in_u, u);
            let plus_idx = pext(boundary_in_u, u);
            let vary = full_idx & !fixed_idx;
            let p: f64 = submasks(vary)
                .map(|sub| probs[(plus_idx | sub) as usize])
                .sum();
            let ratio = p * (2.0 * growth as f64 * beta * c.len() as f64).exp();
            report.sets_examined += 1;
            if ratio > 1.0 + 1e-12 {
                report.violations += 1;
            }
            if ratio > report.worst_ratio {
                report.worst_ratio = ratio;
                report.worst_set = c.to_vec();
            }
        })?;
        allowed[anchor] = false;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityReport {
    /// `μ_{i+1}^{τ−}(h_x)`.
    pub mean: f64,
    /// `max h_x` over the support.
    pub sup: f64,
}

/// Density `h_x = μ_{i+1}^{τ+}/μ_{i+1}^{τ−}` on `F_{i+1}`, where `τ±` set
/// `x ∈ L_i` to `±`.
pub fn density_ratio_checks(
    sys: &IsingSystem,
    g: &LayeredGraph,
    i: usize,
    x: usize,
    tau: u64,
) -> Result<DensityReport> {
    if g.level(x) != i {
        return Err(Error::BadRegion(format!("vertex {x} is not on level {i}")));
    }
    let f_mask = full_mask(sys.n()) & !full_mask(g.ball_size(i));
    let plus = conditional_measure(sys, f_mask, tau | (1 << x))?;
    let minus = conditional_measure(sys, f_mask, tau & !(1 << x))?;
    let mut mean = 0.0;
    let mut sup = f64::NEG_INFINITY;
    for k in 0..minus.len() {
        let h = (plus.log_prob(k) - minus.log_prob(k)).exp();
        mean += minus.prob(k) * h;
        sup = sup.max(h);
    }
    Ok(DensityReport { mean, sup })
}

/// Law of `m_B = Σ_x σ_x` under a full table.
pub fn magnetization_distribution(table: &GibbsTable) -> BTreeMap<i64, f64> {
    let n = table.n() as i64;
    let mut out = BTreeMap::new();
    for (s, p) in table.iter() {
        *out.entry(2 * s.count_ones() as i64 - n).or_insert(0.0) += p;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gen_tree;
    use crate::graph::{ball, build_from_edges};

    fn edge_ball() -> BallSystem {
        BallSystem::isolated(build_from_edges(&[(0, 1)], 0).unwrap())
    }

    #[test]
    fn bit_helpers() {
        let m = 0b1011_0100u64;
        let subs: Vec<u64> = submasks(m).collect();
        assert_eq!(subs.len(), 16);
        assert!(subs.windows(2).all(|w| w[0] < w[1]));
        for (k, &s) in subs.iter().enumerate() {
            assert_eq!(pdep(k as u64, m), s);
            assert_eq!(pext(s, m), k as u64);
        }
    }

    #[test]
    fn edge_partition_function() {
        let beta = 0.7;
        let t = exact_gibbs(
            &edge_ball(),
            &BoundaryCondition::Free,
            GibbsParams::zero_field(beta).unwrap(),
        )
        .unwrap();
        let z = 2.0 * beta.exp() + 2.0 * (-beta).exp();
        assert!((t.log_z() - z.ln()).abs() < 1e-14);
        assert!(t.normalization_error() < 1e-14);
    }

    #[test]
    fn hamiltonian_examples() {
        let p = GibbsParams::zero_field(1.3).unwrap();
        let single = BallSystem::isolated(
            crate::graph::LayeredGraph::from_text("# family=custom:dot root=0 radius=0\n").unwrap(),
        );
        let e = hamiltonian(
            &single,
            &SpinConfiguration::all_plus(1),
            &BoundaryCondition::Free,
            p,
        )
        .unwrap();
        assert_eq!(e, 0.0);
        let e = hamiltonian(
            &edge_ball(),
            &SpinConfiguration::all_plus(2),
            &BoundaryCondition::Free,
            p,
        )
        .unwrap();
        assert!((e - 1.3).abs() < 1e-15);
        let tree = gen_tree(3, 1).unwrap();
        let b0 = ball(&tree, 0).unwrap();
        let e = hamiltonian(
            &b0,
            &SpinConfiguration::all_minus(1),
            &BoundaryCondition::Plus,
            p,
        )
        .unwrap();
        assert!((e + 3.0 * 1.3).abs() < 1e-15);
    }

    #[test]
    fn gray_walk_matches_direct_energy() {
        let tree = gen_tree(3, 3).unwrap();
        let b = ball(&tree, 2).unwrap();
        let sys = IsingSystem::new(
            &b,
            &BoundaryCondition::Plus,
            GibbsParams::new(0.9, 0.2).unwrap(),
        )
        .unwrap();
        let region = FreeRegion::new(sys.n(), 0b11_0110_0110, 0b100_0000_0001).unwrap();
        let t = sys.table(region).unwrap();
        for k in 0..t.len() {
            assert_eq!(t.log_weights()[k], sys.energy(t.state(k)));
        }
    }

    #[test]
    fn beta_zero_uniform() {
        let tree = gen_tree(3, 2).unwrap();
        let b = ball(&tree, 1).unwrap();
        let t = exact_gibbs(
            &b,
            &BoundaryCondition::Plus,
            GibbsParams::zero_field(0.0).unwrap(),
        )
        .unwrap();
        for k in 0..t.len() {
            assert!((t.prob(k) - 1.0 / 16.0).abs() < 1e-15);
        }
    }

    #[test]
    fn fixed_boundary_validation() {
        let tree = gen_tree(3, 2).unwrap();
        let b = ball(&tree, 0).unwrap();
        let p = GibbsParams::zero_field(1.0).unwrap();
        assert!(IsingSystem::new(&b, &BoundaryCondition::Fixed(vec![1, -1]), p).is_err());
        assert!(IsingSystem::new(&b, &BoundaryCondition::Fixed(vec![1, -1, 2]), p).is_err());
        let s = IsingSystem::new(&b, &BoundaryCondition::Fixed(vec![1, -1, 1]), p).unwrap();
        assert_eq!(s.boundary_field(0), 1);
    }

    #[test]
    fn empty_region_is_point_mass() {
        let tree = gen_tree(3, 2).unwrap();
        let b = ball(&tree, 1).unwrap();
        let sys = IsingSystem::new(
            &b,
            &BoundaryCondition::Plus,
            GibbsParams::zero_field(1.0).unwrap(),
        )
        .unwrap();
        let t = conditional_measure(&sys, 0, 0b1010).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.state(0), 0b1010);
        assert!((t.prob(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn negative_components() {
        let tree = gen_tree(3, 2).unwrap();
        let u = full_mask(tree.vertex_count());
        assert!(negative_component(&tree, u, 0, u, false).is_empty());
        assert_eq!(negative_component(&tree, 0, 0, u, false).len(), 10);
        // anchored at a plus vertex: the seed alone
        assert_eq!(negative_component(&tree, u, 0, u, true), vec![0]);
    }

    #[test]
    fn dump_round_trip() {
        let t = exact_gibbs(
            &edge_ball(),
            &BoundaryCondition::Free,
            GibbsParams::zero_field(0.5).unwrap(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("edge");
        t.write_dump(&stem).unwrap();
        assert_eq!(
            GibbsTable::read_dump_weights(&stem).unwrap(),
            t.log_weights()
        );
        let side: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json")).unwrap())
                .unwrap();
        assert_eq!(side["entries"], 4);
    }
}
