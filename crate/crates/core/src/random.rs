//! Seeded random instances for the verification batteries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calibration::ForecastProfile;
use crate::distributions::StepCdf;
use crate::error::Result;
use crate::icl::icl_fit;
use crate::space::{FiniteSpace, Preorder};

/// The generator behind every instance seed.
pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomInstance {
    pub space: FiniteSpace,
    pub order: Preorder,
    pub y: Vec<f64>,
}

/// Forward pairs `i < j` with probability 0.35, backward pairs with 0.05,
/// then the transitive closure. Backward pairs create ties.
pub fn random_preorder(rng: &mut ChaCha8Rng, n: usize) -> Preorder {
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let p = if i < j { 0.35 } else { 0.05 };
            if i != j && rng.gen_bool(p) {
                pairs.push((i, j));
            }
        }
    }
    Preorder::from_pairs(n, &pairs).expect("pairs are in range")
}

/// Integer masses in `1..=4`, normalized.
pub fn random_space(rng: &mut ChaCha8Rng, n: usize) -> FiniteSpace {
    let masses: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=4) as f64).collect();
    FiniteSpace::from_unnormalized(&masses).expect("positive masses")
}

/// Half-integers in `[-1, 2]`, so that ties are common.
pub fn random_response(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-2..=4) as f64 / 2.0).collect()
}

/// An instance with between 1 and `max_n` atoms.
pub fn random_instance(rng: &mut ChaCha8Rng, max_n: usize) -> RandomInstance {
    let n = rng.gen_range(1..=max_n.max(1));
    RandomInstance {
        space: random_space(rng, n),
        order: random_preorder(rng, n),
        y: random_response(rng, n),
    }
}

/// A random member of the class of stochastically monotone kernels on the
/// given thresholds, as a column-major cdf matrix: every column is antitone
/// along `order`, rows are increasing, and the last column is one.
pub fn random_kernel(rng: &mut ChaCha8Rng, order: &Preorder, thresholds: usize) -> Vec<Vec<f64>> {
    let n = order.len();
    let mut surv: Vec<Vec<f64>> = Vec::with_capacity(thresholds);
    for k in 0..thresholds {
        if k + 1 == thresholds {
            surv.push(vec![0.0; n]);
            continue;
        }
        let r: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let mut s: Vec<f64> = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| order.leq(j, i))
                    .map(|j| r[j])
                    .fold(0.0, f64::max)
            })
            .collect();
        if let Some(prev) = surv.last() {
            for (v, p) in s.iter_mut().zip(prev) {
                *v = v.min(*p);
            }
        }
        surv.push(s);
    }
    surv.into_iter()
        .map(|s| s.into_iter().map(|v| 1.0 - v).collect())
        .collect()
}

fn group_labels(rng: &mut ChaCha8Rng, n: usize, groups: usize) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..groups)).collect()
}

fn quarter_cdf(rng: &mut ChaCha8Rng) -> StepCdf {
    let mut masses: Vec<f64> = (0..4).map(|_| rng.gen_range(0..=2) as f64).collect();
    if masses.iter().all(|m| *m == 0.0) {
        masses[rng.gen_range(0..4)] = 1.0;
    }
    let total: f64 = masses.iter().sum();
    let points = [-1.0, 0.0, 1.0, 2.0];
    let masses: Vec<f64> = masses.iter().map(|m| m / total).collect();
    StepCdf::from_masses(&points, &masses).expect("valid masses")
}

/// A forecast profile drawn from a mixture of constructions: fitted laws,
/// group-wise empirical laws, perturbed fitted laws, random group forecasts
/// and pooled threshold forecasts.
pub fn random_profile(rng: &mut ChaCha8Rng, max_n: usize) -> Result<ForecastProfile> {
    let inst = random_instance(rng, max_n);
    let n = inst.y.len();
    let forecasts: Vec<StepCdf> = match rng.gen_range(0..5) {
        0 => icl_fit(&inst.space, &inst.order, &inst.y)?.rows().to_vec(),
        1 => {
            let labels = group_labels(rng, n, 3);
            (0..n)
                .map(|i| {
                    let members: Vec<usize> = (0..n).filter(|&j| labels[j] == labels[i]).collect();
                    let values: Vec<f64> = members.iter().map(|&j| inst.y[j]).collect();
                    let weights: Vec<f64> = members.iter().map(|&j| inst.space.weight(j)).collect();
                    StepCdf::empirical(&values, &weights)
                })
                .collect::<Result<_>>()?
        }
        2 => {
            let mut rows = icl_fit(&inst.space, &inst.order, &inst.y)?.rows().to_vec();
            let i = rng.gen_range(0..n);
            let shift = [-0.5, 0.5][rng.gen_range(0..2)];
            let points: Vec<f64> = rows[i].points().iter().map(|p| p + shift).collect();
            rows[i] = StepCdf::from_cum(points, rows[i].cum().to_vec())?;
            rows
        }
        3 => {
            let labels = group_labels(rng, n, 3);
            let cdfs: Vec<StepCdf> = (0..3).map(|_| quarter_cdf(rng)).collect();
            labels.iter().map(|&g| cdfs[g].clone()).collect()
        }
        _ => {
            // pooled frequencies of {y <= z} over random label classes at each threshold
            let grid = [-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0];
            let mut columns = Vec::with_capacity(grid.len());
            for &z in &grid {
                let labels = group_labels(rng, n, 2);
                let col: Vec<f64> = (0..n)
                    .map(|i| {
                        let members: Vec<usize> =
                            (0..n).filter(|&j| labels[j] == labels[i]).collect();
                        let hits = inst
                            .space
                            .mass(members.iter().copied().filter(|&j| inst.y[j] <= z));
                        hits / inst.space.mass(members.iter().copied())
                    })
                    .collect();
                columns.push(col);
            }
            for k in 1..columns.len() {
                let (done, rest) = columns.split_at_mut(k);
                for (v, p) in rest[0].iter_mut().zip(&done[k - 1]) {
                    *v = v.max(*p);
                }
            }
            (0..n)
                .map(|i| {
                    let values: Vec<f64> = columns.iter().map(|c| c[i]).collect();
                    StepCdf::from_grid_values(&grid, &values)
                })
                .collect::<Result<_>>()?
        }
    };
    ForecastProfile::new(inst.space, forecasts, inst.y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_instance() {
        let a = random_instance(&mut rng_for(9), 6);
        let b = random_instance(&mut rng_for(9), 6);
        assert_eq!(a, b);
    }

    #[test]
    fn kernels_are_monotone() {
        let mut rng = rng_for(3);
        for _ in 0..50 {
            let inst = random_instance(&mut rng, 6);
            let cols = random_kernel(&mut rng, &inst.order, 4);
            assert_eq!(cols[3], vec![1.0; inst.y.len()]);
            for pair in cols.windows(2) {
                assert!(pair[0].iter().zip(&pair[1]).all(|(a, b)| a <= b));
            }
            for col in &cols {
                for (i, j) in inst.order.strict_pairs() {
                    assert!(col[i] >= col[j]);
                }
            }
        }
    }

    #[test]
    fn profiles_are_valid() {
        let mut rng = rng_for(11);
        for _ in 0..100 {
            let p = random_profile(&mut rng, 6).unwrap();
            assert_eq!(p.forecasts().len(), p.y().len());
        }
    }
}
