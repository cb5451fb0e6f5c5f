//! Shared fixtures for the benchmarks.

use bmepoly::coords::{pair_count, CoordVector};
use bmepoly::solver::{additive_matrix, DistanceMatrix};
use bmepoly::trees::random_binary_tree;
use num::BigRational;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Random rational distances with small numerators and denominators.
pub fn random_matrix(n: usize, seed: u64) -> DistanceMatrix {
    let mut rng = StdRng::seed_from_u64(seed);
    let entries = (0..pair_count(n))
        .map(|_| BigRational::new(rng.gen_range(1..100).into(), rng.gen_range(1..8).into()))
        .collect();
    DistanceMatrix::new(CoordVector::new(n, entries).unwrap()).unwrap()
}

/// Tree metric of a random binary tree with random positive edge lengths.
pub fn additive(n: usize, seed: u64) -> DistanceMatrix {
    let mut rng = StdRng::seed_from_u64(seed);
    let t = random_binary_tree(n, &mut rng).unwrap();
    let lengths: Vec<BigRational> = (0..t.edge_count())
        .map(|_| BigRational::new(rng.gen_range(1..40).into(), rng.gen_range(1..6).into()))
        .collect();
    additive_matrix(&t, &lengths).unwrap()
}
