//! Shared proptest strategies for unit tests.

use proptest::prelude::*;

use crate::distributions::StepCdf;
use crate::space::{FiniteSpace, Preorder};

/// Random preorders on `1..=max_n` atoms. Forward pairs are common, backward
/// pairs rare, so cycles occur but most instances are partial orders.
pub(crate) fn preorder_strategy(max_n: usize) -> impl Strategy<Value = Preorder> {
    (1..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(0u8..12, n * n).prop_map(move |draws| {
            let pairs: Vec<(usize, usize)> = (0..n * n)
                .map(|k| (k / n, k % n))
                .filter(|&(i, j)| {
                    let d = draws[i * n + j];
                    (i < j && d < 4) || (i > j && d < 1)
                })
                .collect();
            Preorder::from_pairs(n, &pairs).unwrap()
        })
    })
}

/// Step cdfs with up to five jumps on a quarter grid.
pub(crate) fn step_cdf_strategy() -> impl Strategy<Value = StepCdf> {
    proptest::collection::vec((-20i32..20, 1u32..6), 1..6).prop_map(|jumps| {
        let points: Vec<f64> = jumps.iter().map(|(p, _)| *p as f64 / 4.0).collect();
        let masses: Vec<f64> = jumps.iter().map(|(_, m)| *m as f64).collect();
        let total: f64 = masses.iter().sum();
        let masses: Vec<f64> = masses.iter().map(|m| m / total).collect();
        StepCdf::from_masses(&points, &masses).unwrap()
    })
}

/// A space, a preorder and a response on at most `max_n` atoms. Responses take
/// few distinct values so that ties occur.
pub(crate) fn instance_strategy(
    max_n: usize,
) -> impl Strategy<Value = (FiniteSpace, Preorder, Vec<f64>)> {
    preorder_strategy(max_n).prop_flat_map(|order| {
        let n = order.len();
        (
            proptest::collection::vec(1u32..5, n),
            proptest::collection::vec(-3i32..4, n),
        )
            .prop_map(move |(w, y)| {
                let masses: Vec<f64> = w.iter().map(|m| *m as f64).collect();
                let space = FiniteSpace::from_unnormalized(&masses).unwrap();
                let y: Vec<f64> = y.iter().map(|v| *v as f64 / 2.0).collect();
                (space, order.clone(), y)
            })
    })
}
