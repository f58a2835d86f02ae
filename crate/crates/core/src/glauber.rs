//! Heat-bath Glauber dynamics: rates, simulation, couplings and the generator.

use std::io::Write;

use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Region;
use crate::gibbs::{
    check_marginal_region, conditional_measure, full_mask, pdep, GibbsParams, GibbsTable,
    IsingSystem, MarginalTable, TABLE_CAP,
};
use crate::graph::LayeredGraph;
use crate::rng;

/// Largest state count for dense generator assembly.
pub const DENSE_CAP: usize = 12;

/// A continuous-time chain on `{±1}^n` that resamples one site at a time
/// from a conditional law, each site at rate one.
pub trait SiteChain: Sync {
    fn sites(&self) -> usize;

    /// Probability that site `x` is set to `+` when it is refreshed in `state`.
    fn prob_plus(&self, state: u64, x: usize) -> f64;

    /// `1 − prob_plus`; implementors may compute it without cancellation.
    fn prob_minus(&self, state: u64, x: usize) -> f64 {
        1.0 - self.prob_plus(state, x)
    }

    /// Flip rate `c_x(σ)`.
    fn rate(&self, state: u64, x: usize) -> f64 {
        if (state >> x) & 1 == 1 {
            self.prob_minus(state, x)
        } else {
            self.prob_plus(state, x)
        }
    }

    /// `sqrt(c_x(σ) c_x(σ^x))`, the symmetrised off-diagonal entry.
    fn sym_weight(&self, state: u64, x: usize) -> f64 {
        (self.prob_plus(state, x) * self.prob_minus(state, x)).sqrt()
    }

    /// `(c_x(σ), sqrt(c_x(σ) c_x(σ^x)))`.
    fn rate_and_weight(&self, state: u64, x: usize) -> (f64, f64) {
        (self.rate(state, x), self.sym_weight(state, x))
    }
}

/// Heat-bath rates of an [`IsingSystem`] with per-site lookup tables.
#[derive(Debug, Clone)]
pub struct Dynamics {
    n: usize,
    nb: Vec<u64>,
    /// `p_plus[x][k]`, `k` = number of plus interior neighbours.
    p_plus: Vec<Vec<f64>>,
    p_minus: Vec<Vec<f64>>,
    sym: Vec<Vec<f64>>,
}

impl Dynamics {
    pub fn new(sys: &IsingSystem) -> Self {
        let n = sys.n();
        let GibbsParams { beta, h } = sys.params();
        let mut p_plus = Vec::with_capacity(n);
        let mut p_minus = Vec::with_capacity(n);
        let mut sym = Vec::with_capacity(n);
        for x in 0..n {
            let deg = sys.interior_degree(x);
            let b = sys.boundary_field(x);
            let len = deg as usize + 1;
            let (mut row, mut mrow, mut srow) = (
                Vec::with_capacity(len),
                Vec::with_capacity(len),
                Vec::with_capacity(len),
            );
            for k in 0..=deg {
                let s = (2 * k - deg + b) as f64 + h;
                row.push(1.0 / (1.0 + (-2.0 * beta * s).exp()));
                mrow.push(1.0 / (1.0 + (2.0 * beta * s).exp()));
                srow.push(1.0 / (2.0 * (beta * s).cosh()));
            }
            p_plus.push(row);
            p_minus.push(mrow);
            sym.push(srow);
        }
        Dynamics {
            n,
            nb: (0..n).map(|x| sys.neighbor_mask(x)).collect(),
            p_plus,
            p_minus,
            sym,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn plus_neighbors(&self, state: u64, x: usize) -> usize {
        (self.nb[x] & state).count_ones() as usize
    }

    /// `Σ_x c_x(σ)`.
    pub fn total_rate(&self, state: u64) -> f64 {
        (0..self.n).map(|x| self.rate(state, x)).sum()
    }
}

impl SiteChain for Dynamics {
    fn sites(&self) -> usize {
        self.n
    }

    fn prob_plus(&self, state: u64, x: usize) -> f64 {
        self.p_plus[x][self.plus_neighbors(state, x)]
    }

    fn prob_minus(&self, state: u64, x: usize) -> f64 {
        self.p_minus[x][self.plus_neighbors(state, x)]
    }

    fn sym_weight(&self, state: u64, x: usize) -> f64 {
        self.sym[x][self.plus_neighbors(state, x)]
    }

    fn rate_and_weight(&self, state: u64, x: usize) -> (f64, f64) {
        let k = self.plus_neighbors(state, x);
        let c = if (state >> x) & 1 == 1 {
            self.p_minus[x][k]
        } else {
            self.p_plus[x][k]
        };
        (c, self.sym[x][k])
    }
}

/// `c_x(σ) = 1/(1 + ω_x)`, `ω_x = exp(2βσ_x(Σ_{y~x} σ_y + h))`.
pub fn heat_bath_rate(sys: &IsingSystem, state: u64, x: usize) -> f64 {
    let p = sys.params();
    let sx = IsingSystem::spin(state, x) as f64;
    let omega = (2.0 * p.beta * sx * (sys.local_sum(state, x) as f64 + p.h)).exp();
    1.0 / (1.0 + omega)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    pub site: usize,
    pub spin: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub initial: u64,
    pub events: Vec<Event>,
    pub final_time: f64,
    pub seed: u64,
}

impl Trajectory {
    pub fn final_state(&self) -> u64 {
        self.events
            .iter()
            .fold(self.initial, |s, e| s ^ (1 << e.site))
    }

    /// Writes one `{t, site, spin}` line per event, then a summary line.
    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        for e in &self.events {
            writeln!(
                out,
                "{}",
                serde_json::to_string(e).expect("event serializes")
            )?;
        }
        let summary = serde_json::json!({
            "summary": true,
            "initial": self.initial,
            "events": self.events.len(),
            "final_time": self.final_time,
            "seed": self.seed,
        });
        writeln!(out, "{summary}")?;
        Ok(())
    }
}

/// One Gillespie step from `state`: `(waiting time, site)`.
pub(crate) fn gillespie_step(
    chain: &impl SiteChain,
    state: u64,
    rates: &mut [f64],
    rng: &mut rng::Rng,
) -> (f64, usize) {
    let mut total = 0.0;
    for (x, r) in rates.iter_mut().enumerate() {
        *r = chain.rate(state, x);
        total += *r;
    }
    let dt = -(1.0 - rng.random::<f64>()).ln() / total;
    let mut target = rng.random::<f64>() * total;
    let mut site = rates.len() - 1;
    for (x, &r) in rates.iter().enumerate() {
        if target < r {
            site = x;
            break;
        }
        target -= r;
    }
    (dt, site)
}

/// Event-driven simulation on `[0, T]` with total flip rate `Σ_x c_x(σ)`.
///
/// Each event draws the waiting time, then the site (proportional to its
/// rate); the chosen spin flips.
pub fn simulate_ct(chain: &impl SiteChain, sigma0: u64, t_end: f64, seed: u64) -> Trajectory {
    let mut rng = rng::stream(seed, 0);
    let mut rates = vec![0.0; chain.sites()];
    let mut state = sigma0;
    let mut t = 0.0;
    let mut events = Vec::new();
    if chain.sites() > 0 && t_end > 0.0 {
        loop {
            let (dt, x) = gillespie_step(chain, state, &mut rates, &mut rng);
            t += dt;
            if t > t_end {
                break;
            }
            state ^= 1 << x;
            events.push(Event {
                t,
                site: x,
                spin: IsingSystem::spin(state, x) as i8,
            });
        }
    }
    Trajectory {
        initial: sigma0,
        events,
        final_time: t_end,
        seed,
    }
}

/// Time-weighted occupation of each state over the first `events` jumps.
///
/// Returns the normalised occupation (indexed by state) and the elapsed time.
pub fn occupation_ct(
    chain: &impl SiteChain,
    sigma0: u64,
    events: u64,
    seed: u64,
) -> Result<(Vec<f64>, f64)> {
    let n = chain.sites();
    if n > TABLE_CAP {
        return Err(Error::TooLarge {
            what: "occupation vector",
            size: n,
            cap: TABLE_CAP,
        });
    }
    let mut rng = rng::stream(seed, 0);
    let mut rates = vec![0.0; n];
    let mut occ = vec![0.0; 1 << n];
    let mut state = sigma0;
    let mut t = 0.0;
    for _ in 0..events {
        let (dt, x) = gillespie_step(chain, state, &mut rates, &mut rng);
        occ[state as usize] += dt;
        t += dt;
        state ^= 1 << x;
    }
    for o in occ.iter_mut() {
        *o /= t;
    }
    Ok((occ, t))
}

/// Sets `x` to `+` in every configuration with `u < P(σ_x = + | rest)`.
pub fn grand_coupling_step(chain: &impl SiteChain, configs: &mut [u64], x: usize, u: f64) {
    for c in configs.iter_mut() {
        if u < chain.prob_plus(*c, x) {
            *c |= 1 << x;
        } else {
            *c &= !(1 << x);
        }
    }
}

/// Updates `x` in both chains with the maximal coupling of their two-point
/// laws (shared threshold `u`).
pub fn coupled_pair_step(chain: &impl SiteChain, eta: &mut u64, xi: &mut u64, x: usize, u: f64) {
    let mut pair = [*eta, *xi];
    grand_coupling_step(chain, &mut pair, x, u);
    *eta = pair[0];
    *xi = pair[1];
}

/// `|P_η(σ_x=+) − P_ξ(σ_x=+)|`, the disagreement probability of one update.
pub fn disagreement_probability(chain: &impl SiteChain, eta: u64, xi: u64, x: usize) -> f64 {
    (chain.prob_plus(eta, x) - chain.prob_plus(xi, x)).abs()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairTrajectory {
    /// Update times (every site refreshes at rate one).
    pub times: Vec<f64>,
    /// Hamming distance after each update.
    pub distances: Vec<u32>,
    pub initial_distance: u32,
    pub seed: u64,
}

impl PairTrajectory {
    /// Hamming distance at time `t`.
    pub fn distance_at(&self, t: f64) -> u32 {
        match self.times.partition_point(|&s| s <= t) {
            0 => self.initial_distance,
            k => self.distances[k - 1],
        }
    }
}

/// Draws `(time, site, threshold)` per update: `Exp(n)` time, uniform site,
/// shared uniform threshold.
pub fn coupled_pair_simulate(
    chain: &impl SiteChain,
    eta: u64,
    xi: u64,
    t_end: f64,
    seed: u64,
) -> PairTrajectory {
    let n = chain.sites();
    let mut rng = rng::stream(seed, 0);
    let (mut a, mut b) = (eta, xi);
    let mut t = 0.0;
    let mut times = Vec::new();
    let mut distances = Vec::new();
    if n > 0 {
        loop {
            t += -(1.0 - rng.random::<f64>()).ln() / n as f64;
            if t > t_end {
                break;
            }
            let x = rng.random_range(0..n);
            let u = rng.random::<f64>();
            coupled_pair_step(chain, &mut a, &mut b, x, u);
            times.push(t);
            distances.push((a ^ b).count_ones());
        }
    }
    PairTrajectory {
        times,
        distances,
        initial_distance: (eta ^ xi).count_ones(),
        seed,
    }
}

/// `−1 + Σ_{x≠y} P_dis^x(η, η^y)`: time-zero drift of the coupled Hamming
/// distance from the pair `(η, η^y)`.
pub fn hamming_one_drift(chain: &impl SiteChain, eta: u64, y: usize) -> f64 {
    let xi = eta ^ (1 << y);
    -1.0 + (0..chain.sites())
        .filter(|&x| x != y)
        .map(|x| disagreement_probability(chain, eta, xi, x))
        .sum::<f64>()
}

fn check_space(n: usize, cap: usize, what: &'static str) -> Result<()> {
    if n > cap {
        return Err(Error::TooLarge { what, size: n, cap });
    }
    Ok(())
}

/// `(ℒf)(σ) = Σ_x c_x(σ)[f(σ^x) − f(σ)]`.
pub fn generator_apply(chain: &impl SiteChain, f: &[f64]) -> Result<Vec<f64>> {
    let n = chain.sites();
    check_space(n, TABLE_CAP, "generator state space")?;
    if f.len() != 1 << n {
        return Err(Error::BadParams(format!(
            "function has {} entries, need {}",
            f.len(),
            1usize << n
        )));
    }
    Ok((0..f.len())
        .map(|s| {
            let st = s as u64;
            (0..n)
                .map(|x| chain.rate(st, x) * (f[s ^ (1 << x)] - f[s]))
                .sum()
        })
        .collect())
}

/// `−ℒ_sym v` with `ℒ_sym = D^{1/2} ℒ D^{-1/2}`, written into `out`.
pub fn sym_apply(chain: &impl SiteChain, v: &[f64], out: &mut [f64]) {
    let n = chain.sites();
    for (s, o) in out.iter_mut().enumerate() {
        let st = s as u64;
        let mut diag = 0.0;
        let mut off = 0.0;
        for x in 0..n {
            let (c, w) = chain.rate_and_weight(st, x);
            diag += c;
            off += w * v[s ^ (1 << x)];
        }
        *o = diag * v[s] - off;
    }
}

/// `−ℒ_sym` with the diagonal cached, applied site by site over state pairs.
pub struct SymOperator<'a, C> {
    chain: &'a C,
    diag: Vec<f64>,
}

impl<'a, C: SiteChain> SymOperator<'a, C> {
    pub fn new(chain: &'a C) -> Result<Self> {
        let n = chain.sites();
        check_space(n, TABLE_CAP, "generator state space")?;
        let diag = (0..1u64 << n)
            .map(|s| (0..n).map(|x| chain.rate(s, x)).sum())
            .collect();
        Ok(SymOperator { chain, diag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        for ((o, d), a) in out.iter_mut().zip(&self.diag).zip(v) {
            *o = d * a;
        }
        let dim = self.diag.len();
        for x in 0..self.chain.sites() {
            let bit = 1usize << x;
            for base in (0..dim).step_by(2 * bit) {
                for s in base..base + bit {
                    let t = s + bit;
                    let w = self.chain.sym_weight(s as u64, x);
                    out[s] -= w * v[t];
                    out[t] -= w * v[s];
                }
            }
        }
    }
}

/// Row-wise sparse generator: `rows[σ]` lists `(σ', ℒ(σ, σ'))`, diagonal first.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGenerator {
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseGenerator {
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(j, a)| a * f[j]).sum())
            .collect()
    }

    pub fn max_row_sum(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(_, a)| a).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }
}

pub fn assemble_generator(chain: &impl SiteChain) -> Result<SparseGenerator> {
    let n = chain.sites();
    check_space(n, TABLE_CAP, "generator state space")?;
    let rows = (0..1usize << n)
        .map(|s| {
            let st = s as u64;
            let mut row = Vec::with_capacity(n + 1);
            let mut diag = 0.0;
            row.push((s, 0.0));
            for x in 0..n {
                let c = chain.rate(st, x);
                diag -= c;
                row.push((s ^ (1 << x), c));
            }
            row[0].1 = diag;
            row
        })
        .collect();
    Ok(SparseGenerator { rows })
}

/// Dense `ℒ` as a `2^n × 2^n` matrix.
pub fn assemble_dense(chain: &impl SiteChain) -> Result<nalgebra::DMatrix<f64>> {
    let n = chain.sites();
    check_space(n, DENSE_CAP, "dense generator")?;
    let dim = 1usize << n;
    let mut m = nalgebra::DMatrix::zeros(dim, dim);
    for s in 0..dim {
        for x in 0..n {
            let c = chain.rate(s as u64, x);
            m[(s, s ^ (1 << x))] += c;
            m[(s, s)] -= c;
        }
    }
    Ok(m)
}

/// Dense `−ℒ_sym`.
pub fn assemble_dense_sym(chain: &impl SiteChain) -> Result<nalgebra::DMatrix<f64>> {
    let n = chain.sites();
    check_space(n, DENSE_CAP, "dense generator")?;
    let dim = 1usize << n;
    let mut m = nalgebra::DMatrix::zeros(dim, dim);
    for s in 0..dim {
        for x in 0..n {
            let st = s as u64;
            m[(s, s)] += chain.rate(st, x);
            m[(s, s ^ (1 << x))] = -chain.sym_weight(st, x);
        }
    }
    Ok(m)
}

/// Both expressions of the Dirichlet form for a full-space `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirichletForm {
    /// `Σ_x μ(Var_x f)`.
    pub heat_bath: f64,
    /// `½ Σ_x μ(c_x (∇_x f)²)`.
    pub gradient: f64,
}

/// Stationary law as a full-space vector.
fn stationary(table: &GibbsTable) -> Result<Vec<f64>> {
    if table.region().free != full_mask(table.n()) {
        return Err(Error::BadRegion("needs a table over the whole ball".into()));
    }
    Ok(table.probs())
}

pub fn dirichlet_form(
    chain: &impl SiteChain,
    table: &GibbsTable,
    f: &[f64],
) -> Result<DirichletForm> {
    let pi = stationary(table)?;
    dirichlet_form_with(chain, &pi, f)
}

/// As [`dirichlet_form`] with the stationary law given explicitly.
pub fn dirichlet_form_with(chain: &impl SiteChain, pi: &[f64], f: &[f64]) -> Result<DirichletForm> {
    let n = chain.sites();
    if f.len() != pi.len() || pi.len() != 1 << n {
        return Err(Error::BadParams(
            "function and law must have 2^n entries".into(),
        ));
    }
    let mut heat_bath = 0.0;
    let mut gradient = 0.0;
    for s in 0..pi.len() {
        let st = s as u64;
        for x in 0..n {
            let d = f[s ^ (1 << x)] - f[s];
            gradient += 0.5 * pi[s] * chain.rate(st, x) * d * d;
            heat_bath += pi[s] * chain.prob_plus(st, x) * chain.prob_minus(st, x) * d * d;
        }
    }
    Ok(DirichletForm {
        heat_bath,
        gradient,
    })
}

/// `Var_π(f)`.
pub fn variance(pi: &[f64], f: &[f64]) -> f64 {
    let m: f64 = pi.iter().zip(f).map(|(p, v)| p * v).sum();
    pi.iter().zip(f).map(|(p, v)| p * (v - m).powi(2)).sum()
}

/// `⟨f, g⟩_π`.
pub fn inner(pi: &[f64], f: &[f64], g: &[f64]) -> f64 {
    pi.iter().zip(f).zip(g).map(|((p, a), b)| p * a * b).sum()
}

/// Heat-bath chain on `{±1}^S` refreshing `x ∈ S` from `μ_{K_x}^η(σ_x = ·)`,
/// `K_x = F_{i+1} ∪ {x}`. Site `j` of the chain is the `j`-th vertex of `S`.
#[derive(Debug, Clone)]
pub struct MarginalChain {
    pub sites: Vec<usize>,
    /// `prob_plus[η][j]`.
    prob_plus: Vec<Vec<f64>>,
}

impl SiteChain for MarginalChain {
    fn sites(&self) -> usize {
        self.sites.len()
    }

    fn prob_plus(&self, state: u64, x: usize) -> f64 {
        self.prob_plus[state as usize][x]
    }
}

impl MarginalChain {
    /// Residual of detailed balance against a marginal law:
    /// `max |ν(η) c_x(η) − ν(η^x) c_x(η^x)|`.
    pub fn detailed_balance_residual(&self, nu: &MarginalTable) -> f64 {
        let k = self.sites.len();
        let mut worst = 0.0f64;
        for s in 0..1usize << k {
            for j in 0..k {
                let t = s ^ (1 << j);
                let lhs = nu.probs[s] * self.rate(s as u64, j);
                let rhs = nu.probs[t] * self.rate(t as u64, j);
                worst = worst.max((lhs - rhs).abs());
            }
        }
        worst
    }
}

pub fn marginal_chain(
    sys: &IsingSystem,
    g: &LayeredGraph,
    region: &Region,
    tau: u64,
) -> Result<MarginalChain> {
    let k = region.s.len();
    let (u, s_mask) = check_marginal_region(sys, g, region)?;
    let f_mask = u & !s_mask;
    let mut prob_plus = Vec::with_capacity(1 << k);
    for e in 0..1u64 << k {
        let eta = (tau & !u) | pdep(e, s_mask);
        let mut row = Vec::with_capacity(k);
        for &x in &region.s {
            let t = conditional_measure(sys, f_mask | (1 << x), eta)?;
            row.push(t.prob_plus(x));
        }
        prob_plus.push(row);
    }
    Ok(MarginalChain {
        sites: region.s.clone(),
        prob_plus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gen_tree;
    use crate::gibbs::BoundaryCondition;
    use crate::graph::{ball, BallSystem, LayeredGraph};

    fn tree_system(r: usize, bc: BoundaryCondition, beta: f64) -> IsingSystem {
        let t = gen_tree(3, r + 1).unwrap();
        IsingSystem::new(
            &ball(&t, r).unwrap(),
            &bc,
            GibbsParams::zero_field(beta).unwrap(),
        )
        .unwrap()
    }

    fn single_spin() -> IsingSystem {
        let g = LayeredGraph::from_text("# family=custom:dot root=0 radius=0\n").unwrap();
        IsingSystem::new(
            &BallSystem::isolated(g),
            &BoundaryCondition::Free,
            GibbsParams::zero_field(1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn rate_examples() {
        let dynamics = Dynamics::new(&single_spin());
        assert_eq!(dynamics.rate(0, 0), 0.5);
        let sys = tree_system(1, BoundaryCondition::Free, 1.0);
        // root aligned with its three plus children
        let c = heat_bath_rate(&sys, 0b1111, 0);
        assert!((c - 1.0 / (1.0 + 6f64.exp())).abs() < 1e-15);
        let dynamics = Dynamics::new(&sys);
        for s in 0..16u64 {
            for x in 0..4 {
                assert!((dynamics.rate(s, x) - heat_bath_rate(&sys, s, x)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn generator_on_single_spin() {
        let dynamics = Dynamics::new(&single_spin());
        let lf = generator_apply(&dynamics, &[-1.0, 1.0]).unwrap();
        assert_eq!(lf, vec![1.0, -1.0]);
        assert_eq!(
            generator_apply(&dynamics, &[3.0, 3.0]).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn sparse_and_dense_agree() {
        let sys = tree_system(1, BoundaryCondition::Plus, 0.8);
        let d = Dynamics::new(&sys);
        let sparse = assemble_generator(&d).unwrap();
        let dense = assemble_dense(&d).unwrap();
        let f: Vec<f64> = (0..16).map(|i| (i as f64).sin()).collect();
        let a = sparse.apply(&f);
        let b = &dense * nalgebra::DVector::from_vec(f.clone());
        for i in 0..16 {
            assert!((a[i] - b[i]).abs() < 1e-14);
        }
        assert!(sparse.max_row_sum() < 1e-15);
    }

    #[test]
    fn simulation_is_reproducible() {
        let sys = tree_system(1, BoundaryCondition::Plus, 0.5);
        let d = Dynamics::new(&sys);
        let a = simulate_ct(&d, 0, 50.0, 11);
        let b = simulate_ct(&d, 0, 50.0, 11);
        assert_eq!(a, b);
        assert!(a.events.windows(2).all(|w| w[0].t < w[1].t));
        assert!(simulate_ct(&d, 0, 0.0, 11).events.is_empty());
        let mut buf = Vec::new();
        a.write_jsonl(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().lines().count(),
            a.events.len() + 1
        );
    }

    #[test]
    fn diagonal_coupling_stays_together() {
        let sys = tree_system(1, BoundaryCondition::Plus, 1.0);
        let d = Dynamics::new(&sys);
        let p = coupled_pair_simulate(&d, 0b0101, 0b0101, 20.0, 3);
        assert!(p.distances.iter().all(|&h| h == 0));
    }

    #[test]
    fn update_at_disagreement_site_coalesces() {
        let sys = tree_system(1, BoundaryCondition::Plus, 1.0);
        let d = Dynamics::new(&sys);
        for y in 0..4 {
            let (mut a, mut b) = (0b0110u64, 0b0110u64 ^ (1 << y));
            assert_eq!(disagreement_probability(&d, a, b, y), 0.0);
            coupled_pair_step(&d, &mut a, &mut b, y, 0.37);
            assert_eq!(a, b);
        }
    }
}
