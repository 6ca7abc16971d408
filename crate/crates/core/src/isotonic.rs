//! Weighted L2 isotonic regression on a preorder, i.e. the conditional
//! expectation of a response given the σ-lattice of upper sets.

use crate::closure::{min_weight_closure, Policy};
use crate::error::{check_finite, check_len, IclError, Result};
use crate::space::{upper_set_masks, FiniteSpace, Preorder, DEFAULT_ENUMERATION_CAP};

/// Absolute tolerance for comparing fitted values.
pub const FIT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct IsotonicFit {
    pub fitted: Vec<f64>,
    /// Level sets of `fitted`, sorted by increasing value.
    pub blocks: Vec<Vec<usize>>,
    /// `Σ w (y - fitted)²`.
    pub objective: f64,
}

impl IsotonicFit {
    fn assemble(space: &FiniteSpace, y: &[f64], fitted: Vec<f64>) -> Self {
        let blocks = level_sets(&fitted, FIT_TOL);
        let objective = (0..y.len())
            .map(|i| space.weight(i) * (y[i] - fitted[i]).powi(2))
            .sum();
        Self {
            fitted,
            blocks,
            objective,
        }
    }

    /// `(value, atoms)` for each block.
    pub fn level_sets(&self) -> Vec<(f64, Vec<usize>)> {
        self.blocks
            .iter()
            .map(|b| (self.fitted[b[0]], b.clone()))
            .collect()
    }
}

/// Groups indices whose values lie within `tol` of the smallest value of the group.
pub(crate) fn level_sets(values: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut anchor = f64::NEG_INFINITY;
    for i in idx {
        match blocks.last_mut() {
            Some(block) if values[i] - anchor <= tol => block.push(i),
            _ => {
                anchor = values[i];
                blocks.push(vec![i]);
            }
        }
    }
    for b in &mut blocks {
        b.sort_unstable();
    }
    blocks
}

fn validate(space: &FiniteSpace, order: &Preorder, y: &[f64]) -> Result<()> {
    check_len("order", space.len(), order.len())?;
    check_len("response", space.len(), y.len())?;
    check_finite("response", y)
}

/// The weighted L2 projection of `y` onto the cone of vectors that are
/// increasing along `order`.
///
/// Equivalence classes of the preorder are contracted first. A total quotient
/// order is solved by pool-adjacent-violators, anything else by recursive
/// splitting with minimum cuts.
pub fn isotonic_mean(space: &FiniteSpace, order: &Preorder, y: &[f64]) -> Result<IsotonicFit> {
    validate(space, order, y)?;
    let (classes, quotient) = order.quotient();
    let cw: Vec<f64> = classes
        .iter()
        .map(|c| space.mass(c.iter().copied()))
        .collect();
    let cy: Vec<f64> = classes.iter().map(|c| space.mean_over(y, c)).collect();
    let class_fit = if quotient.is_total() {
        let seq = quotient.linear_extension();
        let w: Vec<f64> = seq.iter().map(|&c| cw[c]).collect();
        let v: Vec<f64> = seq.iter().map(|&c| cy[c]).collect();
        let pooled = pava(&w, &v);
        let mut out = vec![0.0; classes.len()];
        for (pos, &c) in seq.iter().enumerate() {
            out[c] = pooled[pos];
        }
        out
    } else {
        split_by_cuts(&quotient, &cw, &cy)
    };
    let mut fitted = vec![0.0; y.len()];
    for (c, members) in classes.iter().enumerate() {
        for &i in members {
            fitted[i] = class_fit[c];
        }
    }
    Ok(IsotonicFit::assemble(space, y, fitted))
}

/// Divide and conquer: a block with weighted mean `c` is split into the
/// maximal upper set minimizing `Σ w (c - y)` and its complement, until no
/// split lowers the objective.
pub(crate) fn split_by_cuts(order: &Preorder, w: &[f64], y: &[f64]) -> Vec<f64> {
    let mut fit = vec![0.0; y.len()];
    let mut stack: Vec<Vec<usize>> = vec![(0..y.len()).collect()];
    while let Some(block) = stack.pop() {
        let mass: f64 = block.iter().map(|&i| w[i]).sum();
        let c = block.iter().map(|&i| w[i] * y[i]).sum::<f64>() / mass;
        let v: Vec<f64> = block.iter().map(|&i| w[i] * (c - y[i])).collect();
        let scale: f64 = v.iter().map(|x| x.abs()).sum();
        let cut = min_weight_closure(order, &block, &v, Policy::Maximal);
        let chosen = cut.selected.iter().filter(|s| **s).count();
        if chosen == 0 || chosen == block.len() || cut.objective >= -1e-13 * (1.0 + scale) {
            for &i in &block {
                fit[i] = c;
            }
            continue;
        }
        let upper: Vec<usize> = (0..block.len())
            .filter(|&k| cut.selected[k])
            .map(|k| block[k])
            .collect();
        let lower: Vec<usize> = (0..block.len())
            .filter(|&k| !cut.selected[k])
            .map(|k| block[k])
            .collect();
        stack.push(upper);
        stack.push(lower);
    }
    fit
}

/// Pool-adjacent-violators for a weighted sequence; returns the increasing fit.
pub fn pava(weights: &[f64], y: &[f64]) -> Vec<f64> {
    assert_eq!(weights.len(), y.len());
    // (value, weight, length)
    let mut pools: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&w, &v) in weights.iter().zip(y) {
        pools.push((v, w, 1));
        while pools.len() > 1 && pools[pools.len() - 2].0 >= pools[pools.len() - 1].0 {
            let (v2, w2, l2) = pools.pop().unwrap();
            let (v1, w1, l1) = pools.pop().unwrap();
            let w = w1 + w2;
            pools.push(((w1 * v1 + w2 * v2) / w, w, l1 + l2));
        }
    }
    pools
        .into_iter()
        .flat_map(|(v, _, len)| std::iter::repeat_n(v, len))
        .collect()
}

/// Isotonic regression along a total preorder by pool-adjacent-violators.
pub fn pava_chain(space: &FiniteSpace, order: &Preorder, y: &[f64]) -> Result<IsotonicFit> {
    validate(space, order, y)?;
    if let Some((i, j)) = order.incomparable_pair() {
        return Err(IclError::NotAChain(i, j));
    }
    isotonic_mean(space, order, y)
}

/// `min_{L ∋ i} max_{U ∋ i}` of the weighted mean of `y` over `L ∩ U`, with
/// `L` ranging over lower sets and `U` over upper sets. Enumerates the lattice.
pub fn minmax_value(space: &FiniteSpace, order: &Preorder, y: &[f64], i: usize) -> Result<f64> {
    validate(space, order, y)?;
    if i >= space.len() {
        return Err(IclError::DimensionMismatch {
            what: "atom index",
            expected: space.len(),
            got: i,
        });
    }
    let n = space.len();
    let uppers = upper_set_masks(order, DEFAULT_ENUMERATION_CAP)?;
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let bit = 1u64 << i;
    let mean = |mask: u64| -> f64 {
        let (num, den) = (0..n)
            .filter(|k| (mask >> k) & 1 == 1)
            .fold((0.0, 0.0), |(a, b), k| {
                (a + space.weight(k) * y[k], b + space.weight(k))
            });
        num / den
    };
    let best = uppers
        .iter()
        .map(|u| full & !u)
        .filter(|l| l & bit != 0)
        .map(|l| {
            uppers
                .iter()
                .filter(|u| *u & bit != 0)
                .map(|u| mean(l & u))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{enumerate_upper_sets, is_upper_measurable_tol};
    use crate::test_support::instance_strategy;
    use proptest::prelude::*;

    fn uniform(n: usize) -> FiniteSpace {
        FiniteSpace::uniform(n).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn poset() -> Preorder {
        Preorder::from_pairs(3, &[(0, 1), (0, 2)]).unwrap()
    }

    #[test]
    fn chain_example_pools_the_first_two_atoms() {
        let fit = isotonic_mean(&uniform(3), &Preorder::chain(3), &[1.0, 0.0, 2.0]).unwrap();
        assert!(close(&fit.fitted, &[0.5, 0.5, 2.0], 1e-12));
        assert_eq!(fit.blocks, vec![vec![0, 1], vec![2]]);
        assert!((fit.objective - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn isotonic_input_is_returned() {
        let y = [0.0, 1.0, 1.0, 3.0];
        let fit = isotonic_mean(&uniform(4), &Preorder::chain(4), &y).unwrap();
        assert!(close(&fit.fitted, &y, 1e-12));
        assert_eq!(fit.objective, 0.0);
    }

    #[test]
    fn poset_example_pools_everything() {
        let fit = isotonic_mean(&uniform(3), &poset(), &[2.0, 0.0, 1.0]).unwrap();
        assert!(close(&fit.fitted, &[1.0, 1.0, 1.0], 1e-12));
        for i in 0..3 {
            let v = minmax_value(&uniform(3), &poset(), &[2.0, 0.0, 1.0], i).unwrap();
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn minmax_examples() {
        let s = uniform(3);
        let chain = Preorder::chain(3);
        let v = minmax_value(&s, &chain, &[1.0, 0.0, 2.0], 0).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        let v = minmax_value(&s, &chain, &[0.0, 1.0, 2.0], 2).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pava_chain_rejects_posets() {
        let err = pava_chain(&uniform(3), &poset(), &[0.0, 1.0, 2.0]).unwrap_err();
        assert_eq!(err, IclError::NotAChain(1, 2));
        let fit = pava_chain(&uniform(3), &Preorder::chain(3), &[1.0, 0.0, 2.0]).unwrap();
        assert!(close(&fit.fitted, &[0.5, 0.5, 2.0], 1e-12));
    }

    #[test]
    fn pava_weighted() {
        let fit = pava(&[1.0, 3.0, 1.0], &[4.0, 0.0, 5.0]);
        assert!(close(&fit, &[1.0, 1.0, 5.0], 1e-12));
    }

    #[test]
    fn ties_in_the_order_force_equal_values() {
        let order = Preorder::from_pairs(3, &[(0, 1), (1, 0)]).unwrap();
        let fit = isotonic_mean(&uniform(3), &order, &[0.0, 2.0, 7.0]).unwrap();
        assert!(close(&fit.fitted, &[1.0, 1.0, 7.0], 1e-12));
    }

    #[test]
    fn dimension_errors() {
        assert!(matches!(
            isotonic_mean(&uniform(3), &Preorder::chain(2), &[0.0, 1.0, 2.0]),
            Err(IclError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            isotonic_mean(&uniform(2), &Preorder::chain(2), &[0.0]),
            Err(IclError::DimensionMismatch { .. })
        ));
        assert_eq!(
            isotonic_mean(&uniform(1), &Preorder::chain(1), &[f64::NAN]).unwrap_err(),
            IclError::NonFinite("response")
        );
    }

    #[test]
    fn linearity_fails() {
        let s = uniform(2);
        let chain = Preorder::chain(2);
        let y1 = [1.0, 0.0];
        let y2 = [0.0, 1.0];
        let sum: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a + b).collect();
        let f1 = isotonic_mean(&s, &chain, &y1).unwrap().fitted;
        let f2 = isotonic_mean(&s, &chain, &y2).unwrap().fitted;
        let fs = isotonic_mean(&s, &chain, &sum).unwrap().fitted;
        assert!(close(&fs, &[1.0, 1.0], 1e-12));
        assert!(close(&[f1[0] + f2[0], f1[1] + f2[1]], &[0.5, 1.5], 1e-12));
    }

    #[test]
    fn tower_property_fails() {
        let s = uniform(3);
        let fine = Preorder::chain(3);
        let coarse = Preorder::from_pairs(3, &[(0, 1), (1, 0), (1, 2)]).unwrap();
        assert!(coarse.extends(&fine));
        let y = [0.0, 2.0, 1.0];
        let inner = isotonic_mean(&s, &fine, &y).unwrap().fitted;
        let nested = isotonic_mean(&s, &coarse, &inner).unwrap().fitted;
        let direct = isotonic_mean(&s, &coarse, &y).unwrap().fitted;
        assert!(close(&nested, &[0.75, 0.75, 1.5], 1e-12));
        assert!(close(&direct, &[1.0, 1.0, 1.0], 1e-12));
    }

    proptest! {
        #[test]
        fn agrees_with_minmax((space, order, y) in instance_strategy(7)) {
            let fit = isotonic_mean(&space, &order, &y).unwrap();
            for i in 0..y.len() {
                let v = minmax_value(&space, &order, &y, i).unwrap();
                prop_assert!((fit.fitted[i] - v).abs() < 1e-9, "atom {}: {} vs {}", i, fit.fitted[i], v);
            }
        }

        #[test]
        fn conditional_expectation_certificate((space, order, y) in instance_strategy(7)) {
            let fit = isotonic_mean(&space, &order, &y).unwrap();
            prop_assert!(is_upper_measurable_tol(&order, &fit.fitted, 1e-12));
            for u in enumerate_upper_sets(&order).unwrap() {
                let idx = u.indices();
                prop_assert!(space.integrate(&y, idx.iter().copied())
                    <= space.integrate(&fit.fitted, idx.iter().copied()) + 1e-12);
            }
            for (value, block) in fit.level_sets() {
                let mean = space.mean_over(&y, &block);
                prop_assert!((mean - value).abs() < 1e-10);
            }
        }

        #[test]
        fn cut_solver_matches_pava_on_chains(
            (space, _, y) in instance_strategy(8),
        ) {
            let n = y.len();
            let by_cuts = split_by_cuts(&Preorder::chain(n), space.weights(), &y);
            let by_pava = pava(space.weights(), &y);
            prop_assert!(close(&by_cuts, &by_pava, 1e-12));
        }

        #[test]
        fn idempotent_and_mass_preserving((space, order, y) in instance_strategy(8)) {
            let fit = isotonic_mean(&space, &order, &y).unwrap();
            let again = isotonic_mean(&space, &order, &fit.fitted).unwrap();
            prop_assert!(close(&again.fitted, &fit.fitted, 1e-12));
            let total = space.integrate(&y, 0..y.len());
            prop_assert!((space.integrate(&fit.fitted, 0..y.len()) - total).abs() < 1e-12);
        }

        #[test]
        fn monotone_in_the_data(
            (space, order, y) in instance_strategy(8),
            bump in proptest::collection::vec(0u8..3, 8),
        ) {
            let z: Vec<f64> = y.iter().zip(&bump).map(|(v, b)| v + *b as f64).collect();
            let fy = isotonic_mean(&space, &order, &y).unwrap().fitted;
            let fz = isotonic_mean(&space, &order, &z).unwrap().fitted;
            prop_assert!(fy.iter().zip(&fz).all(|(a, b)| *a <= b + 1e-12));
        }
    }
}
