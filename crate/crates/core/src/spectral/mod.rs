//! Spectral gaps, variational and coupling bounds, and mixing times.

pub mod dense;
pub mod lanczos;

pub use dense::DenseSpectrum;
pub use lanczos::{smallest_deflated, Eigenpair, LanczosOptions};

use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gibbs::{
    fiber_means, fiber_variances, full_mask, BoundaryCondition, FreeRegion, IsingSystem, TABLE_CAP,
};
use crate::glauber::{
    dirichlet_form_with, gillespie_step, hamming_one_drift, sym_apply, variance, Dynamics,
    SiteChain, SymOperator,
};
use crate::graph::LayeredGraph;
use crate::rng;

/// Largest `n` solved by the dense eigensolver.
pub const DENSE_GAP_CAP: usize = 10;
/// Largest `n` for the matrix-free solver.
pub const ITERATIVE_CAP: usize = TABLE_CAP;
pub const MIXING_CAP: usize = 12;
pub const MARTINGALE_CAP: usize = 20;
/// Largest `n` for exhaustive coupling contraction by default.
pub const CONTRACTION_EXACT_CAP: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapSolution {
    pub gap: f64,
    /// Unit eigenvector of `−ℒ_sym`, orthogonal to `√π`.
    pub vector: Vec<f64>,
    pub residual: f64,
    pub solver: Solver,
    pub matvecs: usize,
}

impl GapSolution {
    /// The gap eigenfunction `f = v / √π` of `−ℒ`.
    pub fn eigenfunction(&self, pi: &[f64]) -> Vec<f64> {
        self.vector
            .iter()
            .zip(pi)
            .map(|(v, p)| v / p.sqrt())
            .collect()
    }
}

fn check_law(chain: &impl SiteChain, pi: &[f64]) -> Result<()> {
    let n = chain.sites();
    if n > ITERATIVE_CAP {
        return Err(Error::TooLarge {
            what: "spectral state space",
            size: n,
            cap: ITERATIVE_CAP,
        });
    }
    if pi.len() != 1 << n {
        return Err(Error::BadParams(format!(
            "stationary law has {} entries, need {}",
            pi.len(),
            1usize << n
        )));
    }
    Ok(())
}

/// Smallest nonzero eigenvalue of `−ℒ`: dense up to [`DENSE_GAP_CAP`] sites,
/// thick-restart Lanczos deflated against `√π` beyond.
pub fn solve_gap(chain: &impl SiteChain, pi: &[f64], opts: &LanczosOptions) -> Result<GapSolution> {
    check_law(chain, pi)?;
    let n = chain.sites();
    if n <= DENSE_GAP_CAP {
        let spec = DenseSpectrum::new(chain, pi)?;
        let (gap, k) = spec.gap();
        if k >= spec.dim() {
            return Err(Error::BadParams("chain has a single state".into()));
        }
        let vector: Vec<f64> = spec.vectors.column(k).iter().copied().collect();
        let mut w = vec![0.0; vector.len()];
        sym_apply(chain, &vector, &mut w);
        let residual = w
            .iter()
            .zip(&vector)
            .map(|(a, v)| (a - gap * v).powi(2))
            .sum::<f64>()
            .sqrt();
        return Ok(GapSolution {
            gap,
            vector,
            residual,
            solver: Solver::Dense,
            matvecs: 1,
        });
    }
    let sqrt_pi: Vec<f64> = pi.iter().map(|p| p.sqrt()).collect();
    let op = SymOperator::new(chain)?;
    let e = smallest_deflated(|x, out| op.apply(x, out), &sqrt_pi, opts)?;
    Ok(GapSolution {
        gap: e.value,
        vector: e.vector,
        residual: e.residual,
        solver: Solver::Lanczos,
        matvecs: e.matvecs,
    })
}

/// Stationary law of the heat-bath dynamics of `sys`.
pub fn stationary_law(sys: &IsingSystem) -> Result<Vec<f64>> {
    Ok(sys.exact()?.probs())
}

pub fn exact_gap(sys: &IsingSystem) -> Result<f64> {
    let pi = stationary_law(sys)?;
    Ok(solve_gap(&Dynamics::new(sys), &pi, &LanczosOptions::default())?.gap)
}

/// `𝒟(f)/Var(f)`.
pub fn variational_gap_upper(chain: &impl SiteChain, pi: &[f64], f: &[f64]) -> Result<f64> {
    check_law(chain, pi)?;
    let var = variance(pi, f);
    let scale: f64 = pi.iter().zip(f).map(|(p, v)| p * v * v).sum();
    if var <= 1e-14 * scale || var == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(dirichlet_form_with(chain, pi, f)?.gradient / var)
}

/// Magnetization `m(σ) = Σ_x σ_x` as a full-space vector.
pub fn magnetization(n: usize) -> Vec<f64> {
    (0..1u64 << n)
        .map(|s| 2.0 * s.count_ones() as f64 - n as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MagnetizationBound {
    pub n: usize,
    /// `𝒟(1_{m>0})`, exact.
    pub dirichlet: f64,
    /// `4𝒟(1_{m>0})`, an upper bound on the gap.
    pub bound: f64,
    /// `μ(m = 1)`.
    pub mu_m1: f64,
    /// `(n+2)/2 · μ(m = 1)`, an upper bound on `𝒟(1_{m>0})`.
    pub counting_bound: f64,
    /// `Var(1_{m>0})`.
    pub variance: f64,
}

/// Gap bound from the majority indicator on an odd ball with free boundary.
pub fn magnetization_bound(sys: &IsingSystem) -> Result<MagnetizationBound> {
    let n = sys.n();
    if n.is_multiple_of(2) {
        return Err(Error::EvenN(n));
    }
    if *sys.bc() != BoundaryCondition::Free {
        return Err(Error::BadParams(
            "magnetization bound needs free boundary".into(),
        ));
    }
    let table = sys.exact()?;
    let dynamics = Dynamics::new(sys);
    let half = (n as u32).div_ceil(2);
    let mut dirichlet = 0.0;
    let mut mu_m1 = 0.0;
    let mut mu_pos = 0.0;
    for (s, p) in table.iter() {
        let plus = s.count_ones();
        if plus >= half {
            mu_pos += p;
        }
        if plus == half {
            mu_m1 += p;
            // each plus site flips m from 1 to -1; the reverse flips contribute equally
            let out: f64 = (0..n)
                .filter(|&x| (s >> x) & 1 == 1)
                .map(|x| dynamics.rate(s, x))
                .sum();
            dirichlet += p * out;
        }
    }
    Ok(MagnetizationBound {
        n,
        dirichlet,
        bound: 4.0 * dirichlet,
        mu_m1,
        counting_bound: (n as f64 + 2.0) / 2.0 * mu_m1,
        variance: mu_pos * (1.0 - mu_pos),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractionMode {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contraction {
    /// `−max` of the Hamming-one drift; positive means contraction.
    pub alpha: f64,
    pub worst_state: u64,
    pub worst_site: usize,
    pub pairs: u64,
    pub mode: ContractionMode,
}

/// Coupling contraction rate over Hamming-one pairs `(η, η^y)`.
pub fn coupling_contraction(chain: &impl SiteChain, mode: ContractionMode) -> Result<Contraction> {
    let n = chain.sites();
    if n == 0 || n > 64 {
        return Err(Error::BadParams(format!(
            "contraction needs 1..=64 sites, got {n}"
        )));
    }
    let mut worst = (f64::NEG_INFINITY, 0u64, 0usize);
    let mut pairs = 0u64;
    let mut visit = |eta: u64, y: usize| {
        let d = hamming_one_drift(chain, eta, y);
        pairs += 1;
        if d > worst.0 {
            worst = (d, eta, y);
        }
    };
    match mode {
        ContractionMode::Exact => {
            if n > TABLE_CAP {
                return Err(Error::TooLarge {
                    what: "exhaustive contraction",
                    size: n,
                    cap: TABLE_CAP,
                });
            }
            for eta in 0..1u64 << n {
                for y in 0..n {
                    // each unordered pair once
                    if (eta >> y) & 1 == 0 {
                        visit(eta, y);
                    }
                }
            }
        }
        ContractionMode::MonteCarlo { samples, seed } => {
            let mut r = rng::stream(seed, 0);
            let mask = full_mask(n);
            for _ in 0..samples {
                let eta = r.random::<u64>() & mask;
                let y = r.random_range(0..n);
                visit(eta, y);
            }
        }
    }
    Ok(Contraction {
        alpha: -worst.0,
        worst_state: worst.1,
        worst_site: worst.2,
        pairs,
        mode,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleCheck {
    pub variance: f64,
    /// `μ[Var_i(μ_{i+1}(f))]` for `i = 0..=m`.
    pub terms: Vec<f64>,
    /// `|Var(f) − Σ terms| / max(Var(f), 1)`.
    pub residual: f64,
}

/// Checks `Var(f) = Σ_{i=0}^m μ[Var_i(μ_{i+1}(f))]`, with `F_i` the levels
/// `≥ i` of the ball `g`.
pub fn martingale_check(sys: &IsingSystem, g: &LayeredGraph, f: &[f64]) -> Result<MartingaleCheck> {
    let n = sys.n();
    if n > MARTINGALE_CAP {
        return Err(Error::TooLarge {
            what: "martingale check",
            size: n,
            cap: MARTINGALE_CAP,
        });
    }
    if g.vertex_count() != n || f.len() != 1 << n {
        return Err(Error::BadParams(
            "ball, system and function sizes disagree".into(),
        ));
    }
    let region = FreeRegion::full(n);
    let pi = stationary_law(sys)?;
    let m = g.radius();
    let level_mask = |i: usize| -> u64 {
        if i > m {
            0
        } else {
            full_mask(n) & !full_mask(g.level_range(i).start)
        }
    };
    let mut terms = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let g_next = fiber_means(sys, &region, level_mask(i + 1), |s| f[s as usize])?;
        let var_i = fiber_variances(sys, &region, level_mask(i), |s| g_next[s as usize])?;
        terms.push(pi.iter().zip(&var_i).map(|(p, v)| p * v).sum());
    }
    let var = variance(&pi, f);
    let total: f64 = terms.iter().sum();
    Ok(MartingaleCheck {
        variance: var,
        residual: (var - total).abs() / var.max(1.0),
        terms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingReport {
    pub n: usize,
    pub tau1: f64,
    pub gap_inverse: f64,
    /// `τ1 · gap`; at least one.
    pub tau1_times_gap: f64,
    /// `τ1 / (n · gap^{-1})`.
    pub tau1_over_n_relax: f64,
    pub distance_at_tau1: f64,
}

/// Smallest `t` with `max_σ ‖h_t^σ − 1‖_{L¹(π)} ≤ e^{-1}`, bisected to
/// relative precision `1e-4`.
pub fn tv_mixing_time(chain: &impl SiteChain, pi: &[f64]) -> Result<MixingReport> {
    let n = chain.sites();
    if n > MIXING_CAP {
        return Err(Error::TooLarge {
            what: "mixing time",
            size: n,
            cap: MIXING_CAP,
        });
    }
    check_law(chain, pi)?;
    let spec = DenseSpectrum::new(chain, pi)?;
    let (gap, _) = spec.gap();
    let target = (-1.0f64).exp();
    let relax = 1.0 / gap;
    let mut lo = relax / 10.0;
    let mut hi = 10.0 * n.max(1) as f64 * relax;
    while spec.mixing_distance(lo) <= target && lo > 1e-12 {
        lo /= 2.0;
    }
    while spec.mixing_distance(hi) > target {
        hi *= 2.0;
    }
    while hi - lo > 1e-4 * hi {
        let mid = 0.5 * (lo + hi);
        if spec.mixing_distance(mid) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(MixingReport {
        n,
        tau1: hi,
        gap_inverse: relax,
        tau1_times_gap: hi * gap,
        tau1_over_n_relax: hi / (n.max(1) as f64 * relax),
        distance_at_tau1: spec.mixing_distance(hi),
    })
}

/// `max_t Var(P_t f) / (e^{-2·gap·t} Var(f))` over the sampled times.
pub fn variance_decay_ratio(
    spec: &DenseSpectrum,
    pi: &[f64],
    f: &[f64],
    times: &[f64],
) -> Result<f64> {
    let var = variance(pi, f);
    if var == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let (gap, _) = spec.gap();
    Ok(times
        .iter()
        .map(|&t| variance(pi, &spec.propagate(f, t)) / ((-2.0 * gap * t).exp() * var))
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AutocorrelationOptions {
    pub chains: usize,
    /// Sampling length after burn-in.
    pub horizon: f64,
    pub burn_in: f64,
    /// Sampling interval.
    pub dt: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Relaxation {
    /// Fitted decay rate of the autocovariance.
    pub rate: f64,
    /// Approximate 95% interval for `rate`.
    pub ci: (f64, f64),
    pub r_squared: f64,
    pub poor_fit: bool,
    /// Normalised autocovariance at lags `0, dt, 2dt, ...`.
    pub autocorrelation: Vec<f64>,
    pub fit_lags: (usize, usize),
}

/// Exponential rate of the stationary autocovariance of `observable`
/// estimated from independent chains started at `start`.
///
/// Chain `c` uses PRNG stream `c` of the seed.
pub fn autocorrelation_relaxation(
    chain: &impl SiteChain,
    observable: impl Fn(u64) -> f64,
    start: u64,
    opts: &AutocorrelationOptions,
) -> Result<Relaxation> {
    if opts.chains == 0 || opts.dt <= 0.0 || opts.horizon < 20.0 * opts.dt {
        return Err(Error::BadParams(
            "need chains > 0 and horizon >= 20 dt".into(),
        ));
    }
    let n = chain.sites();
    let samples = (opts.horizon / opts.dt) as usize;
    let mut series: Vec<Vec<f64>> = Vec::with_capacity(opts.chains);
    let mut rates = vec![0.0; n];
    for c in 0..opts.chains {
        let mut r = rng::stream(opts.seed, c as u64);
        let mut state = start;
        let mut t = 0.0;
        let mut next = {
            let (dt, x) = gillespie_step(chain, state, &mut rates, &mut r);
            (t + dt, x)
        };
        let mut values = Vec::with_capacity(samples);
        for k in 0..samples {
            let at = opts.burn_in + k as f64 * opts.dt;
            while next.0 <= at {
                t = next.0;
                state ^= 1 << next.1;
                let (dt, x) = gillespie_step(chain, state, &mut rates, &mut r);
                next = (t + dt, x);
            }
            values.push(observable(state));
        }
        series.push(values);
    }
    let total = (opts.chains * samples) as f64;
    let mean = series.iter().flatten().sum::<f64>() / total;
    let max_lag = samples / 4;
    let mut acov = Vec::with_capacity(max_lag);
    for lag in 0..max_lag {
        let mut acc = 0.0;
        let mut count = 0usize;
        for s in &series {
            for k in 0..samples - lag {
                acc += (s[k] - mean) * (s[k + lag] - mean);
            }
            count += samples - lag;
        }
        acov.push(acc / count as f64);
    }
    let c0 = acov[0];
    if c0 <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let rho: Vec<f64> = acov.iter().map(|c| c / c0).collect();
    let first = rho.iter().position(|&r| r <= 0.8).unwrap_or(1).max(1);
    let last = rho.iter().position(|&r| r < 0.05).unwrap_or(rho.len());
    let (rate, ci, r_squared) = if last >= first + 3 {
        let pts: Vec<(f64, f64)> = (first..last)
            .map(|l| (l as f64 * opts.dt, rho[l].ln()))
            .collect();
        let (slope, se, r2) = linear_fit(&pts);
        (-slope, (-slope - 1.96 * se, -slope + 1.96 * se), r2)
    } else {
        (f64::NAN, (f64::NAN, f64::NAN), 0.0)
    };
    Ok(Relaxation {
        rate,
        ci,
        r_squared,
        poor_fit: r_squared.is_nan() || r_squared < 0.9,
        autocorrelation: rho,
        fit_lags: (first, last),
    })
}

/// Least-squares line through `pts`: `(slope, slope standard error, R²)`.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let sse = (syy - slope * sxy).max(0.0);
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let se = if pts.len() > 2 {
        (sse / (k - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    (slope, se, r2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverMeta {
    pub n: usize,
    pub beta: f64,
    pub h: f64,
    pub bc: String,
    pub graph_hash: String,
    pub solver: Option<Solver>,
    pub tolerance: f64,
    pub seed: u64,
    pub matvecs: usize,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub exact: Option<f64>,
    pub upper_variational: f64,
    pub upper_tag: String,
    pub lower_coupling: Option<f64>,
    pub meta: SolverMeta,
}

impl GapReport {
    /// `lower ≤ exact ≤ upper` within `slack`, for the estimates present.
    pub fn sandwich_holds(&self, slack: f64) -> bool {
        let lower_ok = match (self.lower_coupling, self.exact) {
            (Some(l), Some(e)) => l <= e + slack,
            (Some(l), None) => l <= self.upper_variational + slack,
            _ => true,
        };
        let upper_ok = self
            .exact
            .is_none_or(|e| e <= self.upper_variational + slack);
        lower_ok && upper_ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapReportOptions {
    pub exact: bool,
    pub coupling: Option<ContractionMode>,
    pub lanczos: LanczosOptions,
}

impl Default for GapReportOptions {
    fn default() -> Self {
        GapReportOptions {
            exact: true,
            coupling: Some(ContractionMode::Exact),
            lanczos: LanczosOptions::default(),
        }
    }
}

/// Variational test functions tried for the upper bound.
pub fn test_functions(sys: &IsingSystem) -> Vec<(&'static str, Vec<f64>)> {
    let n = sys.n();
    let mut out = vec![
        ("magnetization", magnetization(n)),
        (
            "root_spin",
            (0..1u64 << n)
                .map(|s| IsingSystem::spin(s, 0) as f64)
                .collect(),
        ),
    ];
    if n % 2 == 1 {
        out.push((
            "majority",
            (0..1u64 << n)
                .map(|s| f64::from(2 * s.count_ones() > n as u32))
                .collect(),
        ));
    }
    out
}

/// Exact gap with its variational and coupling bounds.
pub fn gap_report(sys: &IsingSystem, opts: &GapReportOptions) -> Result<GapReport> {
    let pi = stationary_law(sys)?;
    let dynamics = Dynamics::new(sys);
    let mut upper = f64::INFINITY;
    let mut tag = "none";
    for (name, f) in test_functions(sys) {
        match variational_gap_upper(&dynamics, &pi, &f) {
            Ok(r) if r < upper => {
                upper = r;
                tag = name;
            }
            Ok(_) | Err(Error::ZeroVariance) => {}
            Err(e) => return Err(e),
        }
    }
    let solution = if opts.exact {
        Some(solve_gap(&dynamics, &pi, &opts.lanczos)?)
    } else {
        None
    };
    let lower = match opts.coupling {
        Some(mode) => Some(coupling_contraction(&dynamics, mode)?.alpha),
        None => None,
    };
    let p = sys.params();
    let seed = match opts.coupling {
        Some(ContractionMode::MonteCarlo { seed, .. }) => seed,
        _ => opts.lanczos.seed,
    };
    Ok(GapReport {
        exact: solution.as_ref().map(|s| s.gap),
        upper_variational: upper,
        upper_tag: tag.to_string(),
        lower_coupling: lower,
        meta: SolverMeta {
            n: sys.n(),
            beta: p.beta,
            h: p.h,
            bc: sys.bc().tag().to_string(),
            graph_hash: sys.graph_hash().to_string(),
            solver: solution.as_ref().map(|s| s.solver),
            tolerance: opts.lanczos.tol,
            seed,
            matvecs: solution.as_ref().map_or(0, |s| s.matvecs),
            residual: solution.as_ref().map(|s| s.residual),
        },
    })
}
