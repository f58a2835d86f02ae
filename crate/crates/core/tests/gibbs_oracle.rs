//! Gibbs tables against direct enumeration from the edge lists.

use growgap::generators::{build_tiling, gen_tree, HyperbolicParams};
use growgap::gibbs::{BoundaryCondition, GibbsParams, IsingSystem};
use growgap::{ball, BallSystem};

/// Normalised weights `exp(β Σ σσ + β Σ σ τ + β h Σ σ)` by brute force.
fn brute_force(b: &BallSystem, ghosts: Option<&[i8]>, beta: f64, h: f64) -> Vec<f64> {
    let g = b.interior();
    let n = g.vertex_count();
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let mut w = Vec::with_capacity(1 << n);
    for s in 0..1u32 << n {
        let spin: Vec<f64> = (0..n)
            .map(|x| if (s >> x) & 1 == 1 { 1.0 } else { -1.0 })
            .collect();
        let mut e: f64 = edges.iter().map(|&(a, c)| spin[a] * spin[c]).sum();
        if let Some(t) = ghosts {
            e += b
                .ghost_edges()
                .iter()
                .map(|&(x, k)| spin[x] * t[k] as f64)
                .sum::<f64>();
        }
        e += h * spin.iter().sum::<f64>();
        w.push(beta * e);
    }
    let m = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = w.iter().map(|x| (x - m).exp()).sum();
    w.iter().map(|x| (x - m).exp() / z).collect()
}

fn check(b: &BallSystem, beta: f64, h: f64) {
    let k = b.ghost_count();
    let mixed: Vec<i8> = (0..k).map(|i| if i % 3 == 0 { -1 } else { 1 }).collect();
    let cases: Vec<(BoundaryCondition, Option<Vec<i8>>)> = vec![
        (BoundaryCondition::Free, None),
        (BoundaryCondition::Plus, Some(vec![1; k])),
        (BoundaryCondition::Minus, Some(vec![-1; k])),
        (BoundaryCondition::Fixed(mixed.clone()), Some(mixed)),
    ];
    for (bc, ghosts) in cases {
        let sys = IsingSystem::new(b, &bc, GibbsParams::new(beta, h).unwrap()).unwrap();
        let table = sys.exact().unwrap();
        let want = brute_force(b, ghosts.as_deref(), beta, h);
        for (s, &p) in want.iter().enumerate() {
            let got = table.prob_of_state(s as u64);
            assert!(
                (got - p).abs() <= 1e-12 * p.max(1e-300) + 1e-15,
                "{bc:?} state {s}: {got} vs {p}"
            );
        }
    }
}

#[test]
fn tree_balls() {
    let t = gen_tree(3, 3).unwrap();
    for r in 1..=2 {
        check(&ball(&t, r).unwrap(), 0.8, 0.0);
        check(&ball(&t, r).unwrap(), 1.3, -0.4);
    }
}

#[test]
fn hyperbolic_ball() {
    let t = build_tiling(HyperbolicParams::new(5, 4).unwrap(), 3).unwrap();
    check(&ball(&t.graph, 1).unwrap(), 1.1, 0.25);
}

#[test]
fn plus_and_minus_are_mirror_images() {
    let t = gen_tree(4, 3).unwrap();
    let b = ball(&t, 1).unwrap();
    let p = GibbsParams::zero_field(1.7).unwrap();
    let plus = IsingSystem::new(&b, &BoundaryCondition::Plus, p)
        .unwrap()
        .exact()
        .unwrap();
    let minus = IsingSystem::new(&b, &BoundaryCondition::Minus, p)
        .unwrap()
        .exact()
        .unwrap();
    let mask = (1u64 << b.n()) - 1;
    for s in 0..=mask {
        assert!((plus.prob_of_state(s) - minus.prob_of_state(!s & mask)).abs() < 1e-15);
    }
}
