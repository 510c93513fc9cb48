//! Seeded instance builders shared by the property tests.

#![allow(dead_code)]

use kato_core::graph::generators::{self, RandomGraphSpec};
use kato_core::WeightedGraph;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    kato_core::random::rng(seed)
}

/// Connected Erdős–Rényi-type graph with `n` vertices, `b ∈ [0.1, 2]` and `ρ ∈ [0.1, 10]`.
pub fn graph(rng: &mut ChaCha8Rng, n: usize) -> WeightedGraph {
    generators::erdos_renyi(
        RandomGraphSpec {
            n,
            p: (3.0 / n as f64).min(1.0),
            b_range: (0.1, 2.0),
            rho_range: (0.1, 10.0),
        },
        rng,
    )
}
