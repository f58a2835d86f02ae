use growgap::generators::{gen_expander_tree, gen_tree, ExpanderTreeParams};
use growgap::gibbs::{submasks, BoundaryCondition, GibbsParams, IsingSystem};
use growgap::glauber::{
    assemble_generator, dirichlet_form, grand_coupling_step, Dynamics, SiteChain,
};
use growgap::spins::SpinConfiguration;
use growgap::{ball, LayeredGraph};
use proptest::prelude::*;

fn bc_strategy() -> impl Strategy<Value = BoundaryCondition> {
    prop_oneof![
        Just(BoundaryCondition::Free),
        Just(BoundaryCondition::Plus),
        Just(BoundaryCondition::Minus),
        proptest::collection::vec(prop_oneof![Just(1i8), Just(-1i8)], 6)
            .prop_map(BoundaryCondition::Fixed),
    ]
}

/// Tree `Δ = 3` ball of radius 1 (6 ghosts).
fn system(bc: &BoundaryCondition, beta: f64, h: f64) -> IsingSystem {
    let t = gen_tree(3, 2).unwrap();
    IsingSystem::new(
        &ball(&t, 1).unwrap(),
        bc,
        GibbsParams::new(beta, h).unwrap(),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn grand_coupling_keeps_order(
        bc in bc_strategy(),
        beta in 0.0f64..3.0,
        h in -1.0f64..1.0,
        low in 0u64..16,
        extra in 0u64..16,
        updates in proptest::collection::vec((0usize..4, 0.0f64..1.0), 1..200),
    ) {
        let d = Dynamics::new(&system(&bc, beta, h));
        let mut configs = [low, low | extra, 0b1111, 0];
        for (x, u) in updates {
            grand_coupling_step(&d, &mut configs, x, u);
            prop_assert_eq!(configs[0] & !configs[1], 0);
            prop_assert_eq!(configs[1] & !configs[2], 0);
            prop_assert_eq!(configs[3] & !configs[0], 0);
        }
    }

    #[test]
    fn detailed_balance(bc in bc_strategy(), beta in 0.0f64..3.0, h in -1.0f64..1.0) {
        let sys = system(&bc, beta, h);
        let d = Dynamics::new(&sys);
        for s in 0..16u64 {
            for x in 0..4 {
                let t = s ^ (1 << x);
                let lhs = sys.energy(s) + d.rate(s, x).ln();
                let rhs = sys.energy(t) + d.rate(t, x).ln();
                prop_assert!((lhs - rhs).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn dirichlet_forms_agree(
        bc in bc_strategy(),
        beta in 0.0f64..6.0,
        h in -1.0f64..1.0,
        f in proptest::collection::vec(-1.0f64..1.0, 16),
    ) {
        let sys = system(&bc, beta, h);
        let df = dirichlet_form(&Dynamics::new(&sys), &sys.exact().unwrap(), &f).unwrap();
        prop_assert!((df.heat_bath - df.gradient).abs() <= 1e-12 * df.heat_bath);
    }

    #[test]
    fn generator_rows(bc in bc_strategy(), beta in 0.0f64..3.0, h in -1.0f64..1.0) {
        let g = assemble_generator(&Dynamics::new(&system(&bc, beta, h))).unwrap();
        for row in &g.rows {
            let sum: f64 = row.iter().map(|&(_, a)| a).sum();
            prop_assert!(sum.abs() < 1e-14);
            prop_assert!(row[1..].iter().all(|&(_, a)| a >= 0.0));
        }
    }

    #[test]
    fn graph_text_round_trip(seed in any::<u64>(), depth in 1usize..3) {
        let g = gen_expander_tree(&ExpanderTreeParams::new(6, 3, seed), depth).unwrap();
        let back = LayeredGraph::from_text(&g.to_text()).unwrap();
        prop_assert_eq!(back.content_hash(), g.content_hash());
        prop_assert_eq!(&back, &g);
        let again = gen_expander_tree(&ExpanderTreeParams::new(6, 3, seed), depth).unwrap();
        prop_assert_eq!(again.content_hash(), g.content_hash());
    }

    #[test]
    fn spin_round_trip(spins in proptest::collection::vec(prop_oneof![Just(1i8), Just(-1i8)], 0..150)) {
        let c = SpinConfiguration::from_spins(&spins);
        prop_assert_eq!(c.to_spins(), spins.clone());
        let m: i64 = spins.iter().map(|&s| s as i64).sum();
        prop_assert_eq!(c.magnetization(), m);
    }

    #[test]
    fn submask_walk_is_complete(mask in 0u64..(1 << 12)) {
        let all: Vec<u64> = submasks(mask).collect();
        prop_assert_eq!(all.len(), 1usize << mask.count_ones());
        prop_assert!(all.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(all.iter().all(|s| s & !mask == 0));
    }
}
