use bmepoly::coords::{kraft_check, pair_count, pairs, tree_from_x, x_vector, CoordVector};
use bmepoly::exact::pow2;
use bmepoly::facets::splitohedron_catalog;
use bmepoly::lp::{lp_min, LpProblem, LpStatus};
use bmepoly::solver::{reduce_on_cherry, tree_value, DistanceMatrix};
use bmepoly::trees::{parse_newick, random_binary_tree, PhyloTree};
use num::BigRational;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn tree(n: usize, seed: u64) -> PhyloTree {
    random_binary_tree(n, &mut StdRng::seed_from_u64(seed)).unwrap()
}

fn matrix(n: usize) -> impl Strategy<Value = DistanceMatrix> {
    prop::collection::vec((0i64..60, 1i64..6), pair_count(n)).prop_map(move |cells| {
        let entries = cells.into_iter().map(|(p, q)| BigRational::new(p.into(), q.into())).collect();
        DistanceMatrix::new(CoordVector::new(n, entries).unwrap()).unwrap()
    })
}

proptest! {
    #[test]
    fn newick_round_trip(n in 3usize..14, seed in any::<u64>()) {
        let t = tree(n, seed);
        prop_assert_eq!(parse_newick(&t.to_newick()).unwrap(), t);
    }

    #[test]
    fn tree_vectors_satisfy_kraft_and_decode(n in 3usize..14, seed in any::<u64>()) {
        let t = tree(n, seed);
        let x = x_vector(&t).unwrap();
        prop_assert!(kraft_check(&x).passes());
        prop_assert_eq!(tree_from_x(&x), Some(t));
    }

    #[test]
    fn cherries_are_exactly_the_maximal_coordinates(n in 5usize..14, seed in any::<u64>()) {
        // the branching dichotomy: x_ab = 2^(n-3) on a cherry, otherwise x_ab <= 2^(n-4)
        let t = tree(n, seed);
        let x = x_vector(&t).unwrap();
        let cherries = t.cherries();
        for (a, b) in pairs(n) {
            let v = x.get(a, b);
            if cherries.contains(&(a, b)) {
                prop_assert_eq!(v, &pow2(n - 3));
            } else {
                prop_assert!(*v <= pow2(n - 4));
            }
        }
    }

    #[test]
    fn tree_vectors_lie_in_the_relaxation(n in 4usize..10, seed in any::<u64>()) {
        let x = x_vector(&tree(n, seed)).unwrap();
        let cat = splitohedron_catalog(n).unwrap();
        for q in cat.inequalities.iter().chain(&cat.equalities) {
            prop_assert!(q.holds(&x).unwrap(), "{} fails", q.render());
        }
    }

    #[test]
    fn cherry_reduction_identity((d, seed) in (5usize..10).prop_flat_map(|n| (matrix(n), any::<u64>()))) {
        let t = tree(d.n(), seed);
        let (a, b) = t.cherries()[0];
        let (dr, offset) = reduce_on_cherry(&d, a, b).unwrap();
        let small = t.contract_clade(&[a, b], a).unwrap();
        prop_assert_eq!(tree_value(&d, &t).unwrap(), offset + tree_value(&dr, &small).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn relaxation_bounds_every_tree((d, seed) in (5usize..8).prop_flat_map(|n| (matrix(n), any::<u64>()))) {
        let n = d.n();
        let cat = splitohedron_catalog(n).unwrap();
        let p = LpProblem {
            n,
            objective: d.as_coords().clone(),
            inequalities: cat.inequalities,
            equalities: cat.equalities,
        };
        let r = lp_min(&p).unwrap();
        prop_assert_eq!(r.status, LpStatus::Optimal);
        let bound = r.optimum.unwrap();
        prop_assert!(bound <= tree_value(&d, &tree(n, seed)).unwrap());
    }
}
