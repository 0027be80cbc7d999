#![allow(dead_code)]

use std::sync::Arc;

use proptest::prelude::*;
use revhyp::measure::ProbabilitySpace;
use revhyp::semigroup::Generator;

/// Reversible generator from a measure and symmetric conductances `c_xy`,
/// with jump rate `c_xy / μ_x`. A path keeps it irreducible.
pub fn reversible(weights: &[f64], conductances: &[f64]) -> Generator {
    let space = Arc::new(ProbabilitySpace::from_weights(weights).unwrap());
    let n = weights.len();
    let mu = space.mu().to_vec();
    let mut rates = Vec::new();
    let mut k = 0;
    for x in 0..n {
        for y in x + 1..n {
            let mut c = conductances[k % conductances.len()];
            k += 1;
            if y == x + 1 {
                c += 0.05;
            }
            rates.push((x, y, c / mu[x]));
            rates.push((y, x, c / mu[y]));
        }
    }
    Generator::from_rates(space, &rates).unwrap()
}

pub fn generator(max_n: usize) -> impl Strategy<Value = Generator> {
    (2..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(0.05f64..1.0, n),
            prop::collection::vec(0.0f64..1.0, n * (n - 1) / 2),
        )
            .prop_map(|(w, c)| reversible(&w, &c))
    })
}

/// A generator with a function on its space.
pub fn generator_and_function(
    max_n: usize,
    lo: f64,
    hi: f64,
) -> impl Strategy<Value = (Generator, Vec<f64>)> {
    generator(max_n).prop_flat_map(move |g| {
        let n = revhyp::semigroup::Semigroup::len(&g);
        (Just(g), prop::collection::vec(lo..hi, n))
    })
}
