//! Brute-force verifiers for small instances, and a seeded search for the
//! counterexamples that separate the properties of conditional expectations
//! and the calibration notions.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calibration::{
    check_auto, check_isotonic, check_quantile, check_threshold, ForecastProfile,
};
use crate::distributions::{sorted_unique, StepCdf};
use crate::error::{check_finite, check_len, IclError, Result};
use crate::icl::icl_fit;
use crate::isotonic::isotonic_mean;
use crate::space::{is_upper_measurable_tol, upper_set_masks, FiniteSpace, Preorder};

/// Limits on the size of exhaustive searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleBudget {
    pub max_atoms: usize,
    pub max_upper_sets: usize,
    /// Points per unit interval for value grids of continuous searches.
    pub value_grid: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            max_atoms: 8,
            max_upper_sets: 1 << 12,
            value_grid: 64,
        }
    }
}

impl OracleBudget {
    fn check_atoms(&self, n: usize) -> Result<()> {
        if n > self.max_atoms {
            return Err(IclError::CapExceeded {
                n,
                cap: self.max_atoms,
            });
        }
        Ok(())
    }

    fn upper_sets(&self, order: &Preorder) -> Result<Vec<u64>> {
        self.check_atoms(order.len())?;
        let masks = upper_set_masks(order, self.max_atoms)?;
        if masks.len() > self.max_upper_sets {
            return Err(IclError::CapExceeded {
                n: masks.len(),
                cap: self.max_upper_sets,
            });
        }
        Ok(masks)
    }

    /// Equally spaced values covering `[lo, hi]` at [`Self::value_grid`] points per unit.
    pub fn grid(&self, lo: f64, hi: f64) -> Vec<f64> {
        let steps = ((hi - lo) * self.value_grid as f64).ceil().max(1.0) as usize;
        (0..=steps)
            .map(|k| lo + (hi - lo) * k as f64 / steps as f64)
            .collect()
    }
}

fn validate(space: &FiniteSpace, order: &Preorder, y: &[f64]) -> Result<()> {
    check_len("order", space.len(), order.len())?;
    check_len("response", space.len(), y.len())?;
    check_finite("response", y)
}

/// Isotonic regression by enumerating every set partition of the atoms,
/// giving each block its weighted mean and keeping the feasible candidate of
/// least weighted squared error.
pub fn brute_isotonic_mean(
    space: &FiniteSpace,
    order: &Preorder,
    y: &[f64],
    budget: &OracleBudget,
) -> Result<Vec<f64>> {
    validate(space, order, y)?;
    budget.check_atoms(y.len())?;
    let n = y.len();
    let w = space.weights();
    let mut labels = vec![0usize; n];
    let mut best: Option<(f64, Vec<f64>)> = None;
    loop {
        let blocks = labels.iter().max().map_or(0, |m| m + 1);
        let mut num = vec![0.0; blocks];
        let mut den = vec![0.0; blocks];
        for i in 0..n {
            num[labels[i]] += w[i] * y[i];
            den[labels[i]] += w[i];
        }
        let x: Vec<f64> = labels.iter().map(|&b| num[b] / den[b]).collect();
        if is_upper_measurable_tol(order, &x, 1e-12) {
            let sse: f64 = (0..n).map(|i| w[i] * (y[i] - x[i]).powi(2)).sum();
            if best.as_ref().is_none_or(|(b, _)| sse < *b) {
                best = Some((sse, x));
            }
        }
        if !next_restricted_growth(&mut labels) {
            break;
        }
    }
    Ok(best.map(|(_, x)| x).unwrap_or_default())
}

/// Advances a restricted growth string (`a_0 = 0`, `a_i <= 1 + max_{j<i} a_j`);
/// returns `false` after the last one.
fn next_restricted_growth(a: &mut [usize]) -> bool {
    for i in (1..a.len()).rev() {
        let bound = a[..i].iter().max().copied().unwrap_or(0) + 1;
        if a[i] < bound {
            a[i] += 1;
            for v in &mut a[i + 1..] {
                *v = 0;
            }
            return true;
        }
    }
    false
}

/// An exhaustive minimizer and its objective.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteMin {
    pub values: Vec<f64>,
    pub objective: f64,
}

/// Minimizes `Σ w_i score(i, x_i)` over vectors `x` that are increasing along
/// `order` and take values in `domain`.
///
/// Such vectors are decreasing chains of upper sets `U_k = {x >= d_k}`; a
/// dynamic program over the chain is exact. Among minimizers (objective
/// within `1e-12`) the one with the smallest value sum wins, which is the
/// pointwise smallest minimizer because minimizers are closed under
/// pointwise minima.
pub fn brute_expected_score_min(
    space: &FiniteSpace,
    order: &Preorder,
    score: &dyn Fn(usize, f64) -> f64,
    domain: &[f64],
    budget: &OracleBudget,
) -> Result<BruteMin> {
    check_len("order", space.len(), order.len())?;
    check_finite("value domain", domain)?;
    let mut d = domain.to_vec();
    sorted_unique(&mut d);
    if d.is_empty() {
        return Err(IclError::Empty("value domain"));
    }
    let n = order.len();
    let masks = budget.upper_sets(order)?;
    let full = masks.len() - 1;
    let subsets: Vec<Vec<usize>> = masks
        .iter()
        .map(|&u| (0..masks.len()).filter(|&v| masks[v] & !u == 0).collect())
        .collect();
    let w = space.weights();
    const TOL: f64 = 1e-12;
    let better = |a: (f64, f64), b: (f64, f64)| a.0 < b.0 - TOL || (a.0 <= b.0 + TOL && a.1 < b.1);

    // value[u] = best (objective, level sum) for atoms in u, all assigned values >= d_k
    let mut value: Vec<(f64, f64)> = masks
        .iter()
        .map(|&u| {
            if u == 0 {
                (0.0, 0.0)
            } else {
                (f64::INFINITY, f64::INFINITY)
            }
        })
        .collect();
    let mut choice = vec![vec![0usize; masks.len()]; d.len()];
    for k in (0..d.len()).rev() {
        let cost: Vec<f64> = (0..n).map(|i| w[i] * score(i, d[k])).collect();
        let mut next = vec![(f64::INFINITY, f64::INFINITY); masks.len()];
        for (u, &mu) in masks.iter().enumerate() {
            for &v in &subsets[u] {
                let here = mu & !masks[v];
                let (c, count) = (0..n)
                    .filter(|i| (here >> i) & 1 == 1)
                    .fold((0.0, 0.0), |(c, m), i| (c + cost[i], m + 1.0));
                let cand = (c + value[v].0, count * d[k] + value[v].1);
                if better(cand, next[u]) {
                    next[u] = cand;
                    choice[k][u] = v;
                }
            }
        }
        value = next;
    }
    let mut x = vec![0.0; n];
    let mut u = full;
    for (k, &dk) in d.iter().enumerate() {
        let v = choice[k][u];
        let here = masks[u] & !masks[v];
        for (i, xi) in x.iter_mut().enumerate() {
            if (here >> i) & 1 == 1 {
                *xi = dk;
            }
        }
        u = v;
    }
    Ok(BruteMin {
        values: x,
        objective: value[full].0,
    })
}

/// Weighted means of `values` over every nonempty subset of atoms.
pub fn subset_means(space: &FiniteSpace, values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut out: Vec<f64> = (1u64..1 << n)
        .map(|m| {
            let (num, den) = (0..n)
                .filter(|i| (m >> i) & 1 == 1)
                .fold((0.0, 0.0), |(a, b), i| {
                    (a + space.weight(i) * values[i], b + space.weight(i))
                });
            num / den
        })
        .collect();
    sorted_unique(&mut out);
    out
}

/// Column-major cdf matrix on the sorted unique responses minimizing the
/// expected CRPS over stochastically monotone kernels: one exhaustive Brier
/// minimization of the survival indicator per threshold.
pub fn brute_crps_min(
    space: &FiniteSpace,
    order: &Preorder,
    y: &[f64],
    budget: &OracleBudget,
) -> Result<Vec<Vec<f64>>> {
    validate(space, order, y)?;
    let mut thresholds = y.to_vec();
    sorted_unique(&mut thresholds);
    thresholds
        .iter()
        .map(|&z| {
            let target: Vec<f64> = y.iter().map(|&v| if v > z { 1.0 } else { 0.0 }).collect();
            let domain = subset_means(space, &target);
            let score = |i: usize, x: f64| (x - target[i]).powi(2);
            let surv = brute_expected_score_min(space, order, &score, &domain, budget)?;
            Ok(surv.values.iter().map(|s| 1.0 - s).collect())
        })
        .collect()
}

/// Properties with known finite counterexamples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    /// The isotonic mean is not additive in the response.
    Linearity,
    /// Nested lattices do not satisfy the tower property.
    Tower,
    /// Isotonically calibrated but not auto-calibrated.
    IcWithoutAc,
    /// Threshold and quantile calibrated but not isotonically calibrated.
    TcqcWithoutIc,
}

impl Property {
    pub const ALL: [Property; 4] = [
        Property::Linearity,
        Property::Tower,
        Property::IcWithoutAc,
        Property::TcqcWithoutIc,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Linearity => "linearity",
            Self::Tower => "tower",
            Self::IcWithoutAc => "ic-without-ac",
            Self::TcqcWithoutIc => "tcqc-without-ic",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Property {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown property {s:?}"))
    }
}

/// A preorder as its atom count and strict pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSpec {
    pub n: usize,
    pub pairs: Vec<(usize, usize)>,
}

impl OrderSpec {
    pub fn of(order: &Preorder) -> Self {
        Self {
            n: order.len(),
            pairs: order.strict_pairs(),
        }
    }

    pub fn build(&self) -> Result<Preorder> {
        Preorder::from_pairs(self.n, &self.pairs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Instance {
    Linearity {
        weights: Vec<f64>,
        order: OrderSpec,
        y1: Vec<f64>,
        y2: Vec<f64>,
    },
    Tower {
        weights: Vec<f64>,
        /// The larger lattice.
        fine: OrderSpec,
        /// The smaller lattice; its preorder extends `fine`.
        coarse: OrderSpec,
        y: Vec<f64>,
    },
    Profile {
        weights: Vec<f64>,
        forecasts: Vec<StepCdf>,
        y: Vec<f64>,
    },
}

/// A replayable instance exhibiting a [`Property`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub property: Property,
    pub seed: u64,
    /// Zero-based index of the successful draw.
    pub attempt: usize,
    pub instance: Instance,
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

const GAP: f64 = 1e-9;

impl Counterexample {
    /// Re-evaluates the instance; `true` iff it still exhibits the property.
    pub fn replay(&self) -> Result<bool> {
        exhibits(self.property, &self.instance)
    }
}

fn exhibits(property: Property, instance: &Instance) -> Result<bool> {
    match (property, instance) {
        (
            Property::Linearity,
            Instance::Linearity {
                weights,
                order,
                y1,
                y2,
            },
        ) => {
            let space = FiniteSpace::new(weights.clone())?;
            let order = order.build()?;
            let sum: Vec<f64> = y1.iter().zip(y2).map(|(a, b)| a + b).collect();
            let f1 = isotonic_mean(&space, &order, y1)?.fitted;
            let f2 = isotonic_mean(&space, &order, y2)?.fitted;
            let fs = isotonic_mean(&space, &order, &sum)?.fitted;
            let added: Vec<f64> = f1.iter().zip(&f2).map(|(a, b)| a + b).collect();
            Ok(max_gap(&fs, &added) > GAP)
        }
        (
            Property::Tower,
            Instance::Tower {
                weights,
                fine,
                coarse,
                y,
            },
        ) => {
            let space = FiniteSpace::new(weights.clone())?;
            let (fine, coarse) = (fine.build()?, coarse.build()?);
            if !coarse.extends(&fine) {
                return Ok(false);
            }
            let inner = isotonic_mean(&space, &fine, y)?.fitted;
            let nested = isotonic_mean(&space, &coarse, &inner)?.fitted;
            let direct = isotonic_mean(&space, &coarse, y)?.fitted;
            Ok(max_gap(&nested, &direct) > GAP)
        }
        (
            Property::IcWithoutAc,
            Instance::Profile {
                weights,
                forecasts,
                y,
            },
        ) => {
            let profile = ForecastProfile::new(
                FiniteSpace::new(weights.clone())?,
                forecasts.clone(),
                y.clone(),
            )?;
            Ok(check_isotonic(&profile)?.holds && !check_auto(&profile)?.holds)
        }
        (
            Property::TcqcWithoutIc,
            Instance::Profile {
                weights,
                forecasts,
                y,
            },
        ) => {
            let profile = ForecastProfile::new(
                FiniteSpace::new(weights.clone())?,
                forecasts.clone(),
                y.clone(),
            )?;
            Ok(check_threshold(&profile)?.holds
                && check_quantile(&profile)?.holds
                && !check_isotonic(&profile)?.holds)
        }
        _ => Ok(false),
    }
}

fn small_ints(rng: &mut ChaCha8Rng, n: usize, hi: i32) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0..=hi) as f64).collect()
}

fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn draw(property: Property, rng: &mut ChaCha8Rng) -> Result<Option<Instance>> {
    match property {
        Property::Linearity => {
            let n = rng.gen_range(2..=4);
            Ok(Some(Instance::Linearity {
                weights: uniform_weights(n),
                order: OrderSpec::of(&Preorder::chain(n)),
                y1: small_ints(rng, n, 3),
                y2: small_ints(rng, n, 3),
            }))
        }
        Property::Tower => {
            let n = rng.gen_range(3..=5);
            let fine = Preorder::chain(n);
            let k = rng.gen_range(0..n - 1);
            let mut pairs = fine.strict_pairs();
            pairs.push((k + 1, k));
            let coarse = Preorder::from_pairs(n, &pairs)?;
            Ok(Some(Instance::Tower {
                weights: uniform_weights(n),
                fine: OrderSpec::of(&fine),
                coarse: OrderSpec::of(&coarse),
                y: small_ints(rng, n, 3),
            }))
        }
        Property::IcWithoutAc => {
            // two groups, every atom of the first below every atom of the second
            let sizes = [rng.gen_range(2..=3), rng.gen_range(2..=3)];
            let n = sizes[0] + sizes[1];
            let group = |i: usize| usize::from(i >= sizes[0]);
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .filter(|&(i, j)| i != j && group(i) <= group(j))
                .collect();
            let order = Preorder::from_pairs(n, &pairs)?;
            let weights = uniform_weights(n);
            let y = small_ints(rng, n, 3);
            let fit = icl_fit(&FiniteSpace::new(weights.clone())?, &order, &y)?;
            Ok(Some(Instance::Profile {
                weights,
                forecasts: fit.rows().to_vec(),
                y,
            }))
        }
        Property::TcqcWithoutIc => {
            // four groups of atoms with outcomes in {0, 1, 2}; at each of the
            // thresholds 0 and 1, groups sharing a random label get the pooled
            // frequency as forecast probability
            let sizes: Vec<usize> = (0..4).map(|_| rng.gen_range(1..=3)).collect();
            let n: usize = sizes.iter().sum();
            let group: Vec<usize> = sizes
                .iter()
                .enumerate()
                .flat_map(|(g, &s)| std::iter::repeat_n(g, s))
                .collect();
            let y = small_ints(rng, n, 2);
            let mut levels = [[0.0; 4]; 2];
            for (t, level) in levels.iter_mut().enumerate() {
                let labels: Vec<usize> = (0..4).map(|_| rng.gen_range(0..2)).collect();
                for g in 0..4 {
                    let members: Vec<usize> =
                        (0..n).filter(|&i| labels[group[i]] == labels[g]).collect();
                    let hits = members.iter().filter(|&&i| y[i] <= t as f64).count();
                    level[g] = hits as f64 / members.len() as f64;
                }
            }
            if (0..4).any(|g| levels[0][g] > levels[1][g]) {
                return Ok(None);
            }
            let forecasts = (0..4)
                .map(|g| {
                    StepCdf::from_grid_values(&[0.0, 1.0, 2.0], &[levels[0][g], levels[1][g], 1.0])
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Some(Instance::Profile {
                weights: uniform_weights(n),
                forecasts: group.iter().map(|&g| forecasts[g].clone()).collect(),
                y,
            }))
        }
    }
}

/// Searches seeded random instances for one exhibiting `property`, trying at
/// most `max_attempts` draws. The same seed always yields the same result.
pub fn search_counterexample(
    property: Property,
    seed: u64,
    max_attempts: usize,
) -> Result<Option<Counterexample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 0..max_attempts {
        if let Some(instance) = draw(property, &mut rng)? {
            if exhibits(property, &instance)? {
                return Ok(Some(Counterexample {
                    property,
                    seed,
                    attempt,
                    instance,
                }));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::icl::icl_fit;
    use crate::isotonic::minmax_value;
    use crate::scoring::{elementary_mean_score, quantile_score};
    use crate::test_support::instance_strategy;
    use proptest::prelude::*;

    fn uniform(n: usize) -> FiniteSpace {
        FiniteSpace::uniform(n).unwrap()
    }

    #[test]
    fn restricted_growth_strings_count_bell_numbers() {
        for (n, bell) in [(1, 1), (2, 2), (3, 5), (4, 15), (5, 52), (8, 4140)] {
            let mut a = vec![0; n];
            let mut count = 1;
            while next_restricted_growth(&mut a) {
                count += 1;
            }
            assert_eq!(count, bell);
        }
    }

    #[test]
    fn brute_mean_examples() {
        let b = OracleBudget::default();
        let s = uniform(3);
        let x = brute_isotonic_mean(&s, &Preorder::chain(3), &[1.0, 0.0, 2.0], &b).unwrap();
        assert_eq!(x, vec![0.5, 0.5, 2.0]);
        let x = brute_isotonic_mean(&s, &Preorder::chain(3), &[0.0, 1.0, 2.0], &b).unwrap();
        assert_eq!(x, vec![0.0, 1.0, 2.0]);
        let poset = Preorder::from_pairs(3, &[(0, 1), (0, 2)]).unwrap();
        let x = brute_isotonic_mean(&s, &poset, &[2.0, 0.0, 1.0], &b).unwrap();
        assert_eq!(x, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn budget_is_enforced() {
        let b = OracleBudget {
            max_atoms: 3,
            ..OracleBudget::default()
        };
        let err = brute_isotonic_mean(&uniform(4), &Preorder::chain(4), &[0.0; 4], &b).unwrap_err();
        assert_eq!(err, IclError::CapExceeded { n: 4, cap: 3 });
        let tight = OracleBudget {
            max_upper_sets: 8,
            ..OracleBudget::default()
        };
        let score = |_: usize, x: f64| x * x;
        let err =
            brute_expected_score_min(&uniform(4), &Preorder::antichain(4), &score, &[0.0], &tight);
        assert_eq!(err.unwrap_err(), IclError::CapExceeded { n: 16, cap: 8 });
    }

    #[test]
    fn antichain_minimizes_pointwise() {
        let y = [0.0, 2.0, 1.0];
        let score = |i: usize, x: f64| quantile_score(0.5, x, y[i]);
        let m = brute_expected_score_min(
            &uniform(3),
            &Preorder::antichain(3),
            &score,
            &y,
            &OracleBudget::default(),
        )
        .unwrap();
        assert_eq!(m.values, y.to_vec());
        assert_eq!(m.objective, 0.0);
    }

    #[test]
    fn smallest_minimizer_is_returned() {
        // the median of {0, 1} is any point of [0, 1]
        let y = [0.0, 1.0];
        let score = |i: usize, x: f64| quantile_score(0.5, x, y[i]);
        let order = Preorder::from_pairs(2, &[(0, 1), (1, 0)]).unwrap();
        let m = brute_expected_score_min(&uniform(2), &order, &score, &y, &OracleBudget::default())
            .unwrap();
        assert_eq!(m.values, vec![0.0, 0.0]);
    }

    #[test]
    fn crps_oracle_examples() {
        let b = OracleBudget::default();
        let s = uniform(3);
        let m = brute_crps_min(&s, &Preorder::chain(3), &[1.0, 0.0, 2.0], &b).unwrap();
        let fit = icl_fit(&s, &Preorder::chain(3), &[1.0, 0.0, 2.0]).unwrap();
        for (k, col) in m.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                assert!((v - fit.value(i, k)).abs() < 1e-12);
            }
        }
        let m = brute_crps_min(&s, &Preorder::antichain(3), &[2.0, 0.0, 1.0], &b).unwrap();
        assert_eq!(
            m,
            vec![
                vec![0.0, 1.0, 0.0],
                vec![0.0, 1.0, 1.0],
                vec![1.0, 1.0, 1.0]
            ]
        );
        let m = brute_crps_min(&s, &Preorder::chain(3), &[5.0; 3], &b).unwrap();
        assert_eq!(m, vec![vec![1.0; 3]]);
    }

    #[test]
    fn value_grid_spacing() {
        let g = OracleBudget::default().grid(0.0, 1.0);
        assert_eq!(g.len(), 65);
        assert_eq!((g[0], g[64]), (0.0, 1.0));
    }

    #[test]
    fn every_property_is_found_and_replays() {
        for p in Property::ALL {
            let found = search_counterexample(p, 7, 20_000)
                .unwrap()
                .unwrap_or_else(|| panic!("{p} not found"));
            assert!(found.replay().unwrap());
            let again = search_counterexample(p, 7, 20_000).unwrap().unwrap();
            assert_eq!(found, again);
            let json = serde_json::to_string(&found).unwrap();
            let back: Counterexample = serde_json::from_str(&json).unwrap();
            assert_eq!(back, found);
        }
    }

    #[test]
    fn property_names_round_trip() {
        for p in Property::ALL {
            assert_eq!(p.name().parse::<Property>().unwrap(), p);
        }
        assert!("nope".parse::<Property>().is_err());
    }

    proptest! {
        #[test]
        fn three_solvers_agree((space, order, y) in instance_strategy(7)) {
            let fast = isotonic_mean(&space, &order, &y).unwrap().fitted;
            let brute = brute_isotonic_mean(&space, &order, &y, &OracleBudget::default()).unwrap();
            for i in 0..y.len() {
                let mm = minmax_value(&space, &order, &y, i).unwrap();
                prop_assert!((fast[i] - brute[i]).abs() < 1e-9);
                prop_assert!((fast[i] - mm).abs() < 1e-9);
            }
        }

        #[test]
        fn survival_columns_minimize_elementary_scores((space, order, y) in instance_strategy(5)) {
            let fit = icl_fit(&space, &order, &y).unwrap();
            let b = OracleBudget::default();
            for (k, &z) in fit.thresholds().iter().enumerate() {
                let target: Vec<f64> = y.iter().map(|&v| if v > z { 1.0 } else { 0.0 }).collect();
                let surv: Vec<f64> = fit.columns()[k].iter().map(|f| 1.0 - f).collect();
                for eta in [0.0, 0.2, 0.5, 0.8, 1.0] {
                    let score = |i: usize, x: f64| elementary_mean_score(eta, x, target[i]);
                    let mut domain = subset_means(&space, &target);
                    domain.extend([eta, eta - 1.0]);
                    let m = brute_expected_score_min(&space, &order, &score, &domain, &b).unwrap();
                    let ours: f64 = (0..y.len()).map(|i| space.weight(i) * score(i, surv[i])).sum();
                    prop_assert!((ours - m.objective).abs() < 1e-9);
                }
            }
        }
    }
}
