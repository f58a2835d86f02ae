//! Monte Carlo checks of the dynamics against exact quantities.

use growgap::generators::gen_tree;
use growgap::gibbs::{BoundaryCondition, GibbsParams, IsingSystem};
use growgap::glauber::{coupled_pair_simulate, hamming_one_drift, occupation_ct, Dynamics};
use growgap::spectral::{
    autocorrelation_relaxation, exact_gap, magnetization, AutocorrelationOptions,
};
use growgap::{ball, BallSystem, LayeredGraph};

fn tree(r: usize, bc: BoundaryCondition, beta: f64) -> IsingSystem {
    let t = gen_tree(3, r + 1).unwrap();
    IsingSystem::new(
        &ball(&t, r).unwrap(),
        &bc,
        GibbsParams::zero_field(beta).unwrap(),
    )
    .unwrap()
}

#[test]
fn short_time_drift_matches_exact() {
    let sys = tree(1, BoundaryCondition::Plus, 0.6);
    let d = Dynamics::new(&sys);
    let (eta, y) = (0b0110u64, 0usize);
    let exact = hamming_one_drift(&d, eta, y);
    let (t, runs) = (0.02, 400_000u64);
    let total: u64 = (0..runs)
        .map(|seed| coupled_pair_simulate(&d, eta, eta ^ (1 << y), t, seed).distance_at(t) as u64)
        .sum();
    let slope = (total as f64 / runs as f64 - 1.0) / t;
    // binomial error of the jump count plus the O(t) curvature
    let sd = (2.0 / (t * runs as f64)).sqrt();
    assert!(
        (slope - exact).abs() < 4.0 * sd + 0.05,
        "{slope} vs {exact}"
    );
}

#[test]
fn empirical_law_near_gibbs() {
    let sys = tree(1, BoundaryCondition::Plus, 0.5);
    let exact = sys.exact().unwrap().probs();
    let (occ, _) = occupation_ct(&Dynamics::new(&sys), 0, 200_000, 5).unwrap();
    let tv: f64 = 0.5
        * occ
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
    assert!(tv < 0.02, "tv={tv}");
}

fn opts(seed: u64) -> AutocorrelationOptions {
    AutocorrelationOptions {
        chains: 40,
        horizon: 400.0,
        burn_in: 20.0,
        dt: 0.1,
        seed,
    }
}

#[test]
fn single_spin_relaxation_rate() {
    let g = LayeredGraph::from_text("# family=custom:dot root=0 radius=0\n").unwrap();
    let sys = IsingSystem::new(
        &BallSystem::isolated(g),
        &BoundaryCondition::Free,
        GibbsParams::zero_field(1.0).unwrap(),
    )
    .unwrap();
    let r = autocorrelation_relaxation(&Dynamics::new(&sys), |s| s as f64, 0, &opts(1)).unwrap();
    assert!(!r.poor_fit);
    assert!((r.rate - 1.0).abs() < 0.1, "{r:?}");
}

#[test]
fn infinite_temperature_relaxation_rate() {
    let sys = tree(1, BoundaryCondition::Free, 0.0);
    let m = magnetization(4);
    let r =
        autocorrelation_relaxation(&Dynamics::new(&sys), |s| m[s as usize], 0, &opts(2)).unwrap();
    assert!((r.rate - 1.0).abs() < 0.1, "{r:?}");
}

#[test]
fn relaxation_rate_on_ten_spins() {
    let sys = tree(2, BoundaryCondition::Plus, 0.5);
    let gap = exact_gap(&sys).unwrap();
    let m = magnetization(10);
    let r = autocorrelation_relaxation(
        &Dynamics::new(&sys),
        |s| m[s as usize],
        (1 << 10) - 1,
        &opts(3),
    )
    .unwrap();
    assert!(
        (r.rate - gap).abs() < 0.2 * gap,
        "rate {} gap {gap} {:?}",
        r.rate,
        r.fit_lags
    );
}
