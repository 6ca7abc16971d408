//! Randomized verification batteries: the fast solvers against the
//! exhaustive oracles, calibration of fitted laws, and the calibration
//! hierarchy.
//!
//! Instance `k` of a run with base seed `s` is generated from seed `s + k`,
//! so any failing instance can be replayed on its own.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calibration::{
    calibration_report, check_isotonic, check_pit_bounds, check_quantile, check_threshold,
    ForecastProfile,
};
use crate::distributions::{sorted_unique, QuantileSide, StepCdf};
use crate::error::Result;
use crate::functionals::conditional_quantile;
use crate::icl::{icl_fit, icl_quantile, IclFit};
use crate::isotonic::{isotonic_mean, minmax_value};
use crate::oracle::{
    brute_crps_min, brute_expected_score_min, brute_isotonic_mean, search_counterexample,
    OracleBudget, Property,
};
use crate::random::{random_instance, random_kernel, random_profile, rng_for, RandomInstance};
use crate::scoring::{crps, elementary_mean_score, quantile_score};
use crate::space::{enumerate_upper_sets, is_upper_measurable_tol};

/// Tolerance for comparisons between solvers and oracles.
pub const VERIFY_TOL: f64 = 1e-9;

/// Attempts allowed per counterexample search.
pub const SEARCH_BUDGET: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// Fitted laws against the exhaustive CRPS, elementary-score and quantile oracles.
    Universality,
    /// Implications between the calibration notions on random forecast profiles.
    Hierarchy,
    /// Isotonic projection against enumeration, plus calibration of fitted laws.
    Oracle,
    /// Searches and replays the known counterexamples.
    Counterexamples,
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::Universality => "universality",
            Suite::Hierarchy => "hierarchy",
            Suite::Oracle => "oracle",
            Suite::Counterexamples => "counterexamples",
        }
    }

    pub fn default_count(&self) -> usize {
        match self {
            Suite::Universality => 50,
            Suite::Hierarchy => 200,
            Suite::Oracle => 200,
            Suite::Counterexamples => Property::ALL.len(),
        }
    }
}

/// One failed check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub check: String,
    pub detail: String,
}

impl Failure {
    fn new(check: &str, detail: impl Into<String>) -> Self {
        Self {
            check: check.into(),
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceOutcome {
    pub seed: u64,
    pub label: String,
    pub atoms: usize,
    pub passed: bool,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub seed: u64,
    pub max_atoms: usize,
    pub passed: bool,
    pub checked: usize,
    pub failed: usize,
    pub instances: Vec<InstanceOutcome>,
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Both projection conditions over every upper set and level set, and
/// agreement of the cut solver with enumeration and the min-max formula.
pub fn check_projection(inst: &RandomInstance) -> Result<Vec<Failure>> {
    let RandomInstance { space, order, y } = inst;
    let mut out = Vec::new();
    let fit = isotonic_mean(space, order, y)?;
    if !is_upper_measurable_tol(order, &fit.fitted, VERIFY_TOL) {
        out.push(Failure::new(
            "certificate",
            "fit is not increasing along the order",
        ));
    }
    for u in enumerate_upper_sets(order)? {
        let idx = u.indices();
        let lhs = space.integrate(y, idx.iter().copied());
        let rhs = space.integrate(&fit.fitted, idx.iter().copied());
        if lhs > rhs + VERIFY_TOL {
            out.push(Failure::new(
                "certificate",
                format!("upper set {idx:?}: E[Y 1_U] = {lhs} > E[X 1_U] = {rhs}"),
            ));
            break;
        }
    }
    for (value, block) in fit.level_sets() {
        let mean = space.mean_over(y, &block);
        if (mean - value).abs() > VERIFY_TOL {
            out.push(Failure::new(
                "certificate",
                format!("level set {block:?}: mean {mean} != value {value}"),
            ));
        }
    }
    let brute = brute_isotonic_mean(space, order, y, &OracleBudget::default())?;
    let d = max_diff(&fit.fitted, &brute);
    if d > VERIFY_TOL {
        out.push(Failure::new(
            "three-way",
            format!("enumeration differs by {d}"),
        ));
    }
    for i in 0..y.len() {
        let m = minmax_value(space, order, y, i)?;
        if (m - fit.fitted[i]).abs() > VERIFY_TOL {
            out.push(Failure::new(
                "three-way",
                format!("atom {i}: min-max value {m} != {}", fit.fitted[i]),
            ));
        }
    }
    Ok(out)
}

/// Isotonic, threshold and quantile calibration and the PIT bounds of the fitted law.
pub fn check_icl_calibration(inst: &RandomInstance) -> Result<Vec<Failure>> {
    let fit = icl_fit(&inst.space, &inst.order, &inst.y)?;
    let profile = ForecastProfile::new(inst.space.clone(), fit.rows().to_vec(), inst.y.clone())?;
    let mut out = Vec::new();
    for (name, res) in [
        ("isotonic", check_isotonic(&profile)?),
        ("threshold", check_threshold(&profile)?),
        ("quantile", check_quantile(&profile)?),
        ("pit-bounds", check_pit_bounds(&profile)?),
    ] {
        if !res.holds {
            out.push(Failure::new(
                "icl-calibration",
                format!("{name} calibration fails: {:?}", res.witness),
            ));
        }
    }
    Ok(out)
}

/// Expected CRPS of a column-major cdf matrix on `thresholds`.
pub fn mean_crps_of_columns(
    inst: &RandomInstance,
    thresholds: &[f64],
    columns: &[Vec<f64>],
) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..inst.y.len() {
        let row: Vec<f64> = columns.iter().map(|c| c[i]).collect();
        let f = StepCdf::from_grid_values(thresholds, &row)?;
        total += inst.space.weight(i) * crps(&f, inst.y[i]);
    }
    Ok(total)
}

fn mean_crps_of_fit(inst: &RandomInstance, fit: &IclFit) -> f64 {
    fit.rows()
        .iter()
        .zip(&inst.y)
        .enumerate()
        .map(|(i, (f, &y))| inst.space.weight(i) * crps(f, y))
        .sum()
}

/// The fit against the exhaustive CRPS minimizer, and against `members`
/// random stochastically monotone kernels (half of them mixed with the fit).
pub fn check_crps_optimality(
    inst: &RandomInstance,
    members: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Failure>> {
    let mut out = Vec::new();
    let fit = icl_fit(&inst.space, &inst.order, &inst.y)?;
    let brute = brute_crps_min(&inst.space, &inst.order, &inst.y, &OracleBudget::default())?;
    for (k, (a, b)) in fit.columns().iter().zip(&brute).enumerate() {
        let d = max_diff(a, b);
        if d > VERIFY_TOL {
            out.push(Failure::new(
                "crps-oracle",
                format!("column {k} differs from the exhaustive minimizer by {d}"),
            ));
        }
    }
    let best = mean_crps_of_fit(inst, &fit);
    let thresholds = fit.thresholds();
    for m in 0..members {
        let mut cols = random_kernel(rng, &inst.order, thresholds.len());
        if m % 2 == 1 {
            let lambda: f64 = rng.gen_range(0.0..0.9);
            for (c, f) in cols.iter_mut().zip(fit.columns()) {
                for (v, w) in c.iter_mut().zip(f) {
                    *v = lambda * *w + (1.0 - lambda) * *v;
                }
            }
        }
        let score = mean_crps_of_columns(inst, thresholds, &cols)?;
        let equal = cols
            .iter()
            .zip(fit.columns())
            .all(|(a, b)| max_diff(a, b) <= 1e-12);
        let ok = if equal {
            best <= score + 1e-12
        } else {
            best < score
        };
        if !ok {
            out.push(Failure::new(
                "crps-members",
                format!("random kernel {m} scores {score}, fit scores {best}"),
            ));
            break;
        }
    }
    Ok(out)
}

/// For every threshold, the survival column attains the minimum expected
/// elementary mean score for the exceedance indicator at each `η` of the grid
/// formed by the fitted survival values, their midpoints and one.
pub fn check_elementary_scores(inst: &RandomInstance) -> Result<Vec<Failure>> {
    let RandomInstance { space, order, y } = inst;
    let fit = icl_fit(space, order, y)?;
    let mut levels: Vec<f64> = fit
        .columns()
        .iter()
        .flatten()
        .map(|f| 1.0 - f)
        .chain([0.0, 1.0])
        .collect();
    sorted_unique(&mut levels);
    let mut etas: Vec<f64> = levels
        .windows(2)
        .map(|w| 0.5 * (w[0] + w[1]))
        .chain(levels.iter().copied())
        .filter(|e| *e > 0.0)
        .collect();
    sorted_unique(&mut etas);
    let budget = OracleBudget::default();
    let mut out = Vec::new();
    for (k, (&z, col)) in fit.thresholds().iter().zip(fit.columns()).enumerate() {
        let target: Vec<f64> = y.iter().map(|&v| if v > z { 1.0 } else { 0.0 }).collect();
        let surv: Vec<f64> = col.iter().map(|f| 1.0 - f).collect();
        for &eta in &etas {
            let score = |i: usize, x: f64| elementary_mean_score(eta, x, target[i]);
            let min = brute_expected_score_min(space, order, &score, &[0.0, 1.0], &budget)?;
            let value: f64 = (0..y.len())
                .map(|i| space.weight(i) * score(i, surv[i]))
                .sum();
            if value > min.objective + VERIFY_TOL {
                out.push(Failure::new(
                    "elementary-scores",
                    format!(
                        "threshold {k}, eta {eta}: {value} > oracle {}",
                        min.objective
                    ),
                ));
            }
        }
    }
    Ok(out)
}

/// Levels at which some fitted quantile can jump, plus the midpoints between them.
pub fn natural_levels(fit: &IclFit) -> Vec<f64> {
    let mut levels: Vec<f64> = fit
        .columns()
        .iter()
        .flatten()
        .copied()
        .filter(|a| *a > 0.0 && *a < 1.0)
        .collect();
    sorted_unique(&mut levels);
    let mut with_mid: Vec<f64> = [0.0]
        .iter()
        .chain(&levels)
        .chain(&[1.0])
        .copied()
        .collect::<Vec<_>>()
        .windows(2)
        .map(|w| 0.5 * (w[0] + w[1]))
        .chain(levels.iter().copied())
        .collect();
    sorted_unique(&mut with_mid);
    with_mid
}

/// The path-based conditional quantile equals the fitted lower quantile and
/// attains the exhaustive minimum of the expected quantile score.
pub fn check_quantile_pipeline(inst: &RandomInstance) -> Result<Vec<Failure>> {
    let RandomInstance { space, order, y } = inst;
    let fit = icl_fit(space, order, y)?;
    let mut domain = y.clone();
    sorted_unique(&mut domain);
    let budget = OracleBudget::default();
    let mut out = Vec::new();
    for alpha in natural_levels(&fit) {
        let path = conditional_quantile(space, order, y, alpha, QuantileSide::Lower)?;
        let direct = icl_quantile(&fit, alpha)?;
        if path.values != direct {
            out.push(Failure::new(
                "quantile-path",
                format!("alpha {alpha}: path {:?} != fitted {direct:?}", path.values),
            ));
        }
        let score = |i: usize, x: f64| quantile_score(alpha, x, y[i]);
        let min = brute_expected_score_min(space, order, &score, &domain, &budget)?;
        let value: f64 = (0..y.len())
            .map(|i| space.weight(i) * score(i, path.values[i]))
            .sum();
        if value > min.objective + VERIFY_TOL {
            out.push(Failure::new(
                "quantile-oracle",
                format!("alpha {alpha}: {value} > oracle {}", min.objective),
            ));
        }
    }
    Ok(out)
}

/// Auto implies isotonic calibration, which implies threshold and quantile calibration.
pub fn check_hierarchy(profile: &ForecastProfile) -> Result<Vec<Failure>> {
    let report = calibration_report(profile)?;
    if report.hierarchy_holds() {
        Ok(Vec::new())
    } else {
        Ok(vec![Failure::new(
            "hierarchy",
            format!(
                "auto {}, isotonic {}, threshold {}, quantile {}",
                report.auto.holds,
                report.isotonic.holds,
                report.threshold.holds,
                report.quantile.holds
            ),
        )])
    }
}

fn outcome(seed: u64, label: String, atoms: usize, failures: Vec<Failure>) -> InstanceOutcome {
    InstanceOutcome {
        seed,
        label,
        atoms,
        passed: failures.is_empty(),
        failures,
    }
}

/// Runs `count` instances of `suite` with at most `max_atoms` atoms.
///
/// `members` is the number of random kernels compared per instance in the
/// universality suite. Atom counts are capped at 8 (6 for universality).
pub fn run_suite(
    suite: Suite,
    seed: u64,
    max_atoms: usize,
    count: usize,
    members: usize,
) -> Result<SuiteOutcome> {
    let cap = match suite {
        Suite::Universality => 6,
        _ => 8,
    };
    let max_atoms = max_atoms.clamp(1, cap);
    let mut instances = Vec::new();
    match suite {
        Suite::Counterexamples => {
            for property in Property::ALL {
                let failures = match search_counterexample(property, seed, SEARCH_BUDGET)? {
                    None => vec![Failure::new(
                        "search",
                        format!("none found in {SEARCH_BUDGET} attempts"),
                    )],
                    Some(ce) if !ce.replay()? => {
                        vec![Failure::new("replay", "found instance does not replay")]
                    }
                    Some(_) => Vec::new(),
                };
                instances.push(outcome(seed, property.name().into(), 0, failures));
            }
        }
        _ => {
            for k in 0..count as u64 {
                let s = seed.wrapping_add(k);
                let mut rng = rng_for(s);
                let (atoms, failures) = match suite {
                    Suite::Hierarchy => {
                        let profile = random_profile(&mut rng, max_atoms)?;
                        (profile.y().len(), check_hierarchy(&profile)?)
                    }
                    Suite::Oracle => {
                        let inst = random_instance(&mut rng, max_atoms);
                        let mut f = check_projection(&inst)?;
                        f.extend(check_icl_calibration(&inst)?);
                        (inst.y.len(), f)
                    }
                    _ => {
                        let inst = random_instance(&mut rng, max_atoms);
                        let mut f = check_crps_optimality(&inst, members, &mut rng)?;
                        f.extend(check_elementary_scores(&inst)?);
                        f.extend(check_quantile_pipeline(&inst)?);
                        (inst.y.len(), f)
                    }
                };
                instances.push(outcome(s, format!("instance {k}"), atoms, failures));
            }
        }
    }
    let failed = instances.iter().filter(|i| !i.passed).count();
    Ok(SuiteOutcome {
        suite,
        seed,
        max_atoms,
        passed: failed == 0,
        checked: instances.len(),
        failed,
        instances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_runs_pass() {
        for suite in [Suite::Oracle, Suite::Universality, Suite::Hierarchy] {
            let out = run_suite(suite, 42, 5, 10, 20).unwrap();
            assert!(out.passed, "{:?}", out.instances.iter().find(|i| !i.passed));
            assert_eq!(out.checked, 10);
            assert_eq!(out.instances[3].seed, 45);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let a = run_suite(Suite::Hierarchy, 5, 6, 20, 0).unwrap();
        let b = run_suite(Suite::Hierarchy, 5, 6, 20, 0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn natural_levels_include_midpoints() {
        let space = crate::space::FiniteSpace::uniform(3).unwrap();
        let order = crate::space::Preorder::chain(3);
        let fit = icl_fit(&space, &order, &[1.0, 0.0, 2.0]).unwrap();
        let levels = natural_levels(&fit);
        assert_eq!(levels, vec![0.25, 0.5, 0.75]);
    }
}
