//! Exact calibration diagnostics for per-atom step-cdf forecasts on a finite
//! space: auto, isotonic, threshold, quantile and PIT-bound calibration.

use serde::Serialize;

use crate::distributions::{sorted_unique, StepCdf, MASS_TOL};
use crate::error::{check_finite, check_len, IclError, Result};
use crate::icl::icl_fit;
use crate::isotonic::{isotonic_mean, level_sets};
use crate::space::{preorder_from_stochastic_order, FiniteSpace, Preorder};

/// Tolerance on every calibration identity.
pub const CALIBRATION_TOL: f64 = 1e-10;

/// A forecast `F_i` and an outcome `y_i` on each atom.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastProfile {
    space: FiniteSpace,
    forecasts: Vec<StepCdf>,
    y: Vec<f64>,
}

impl ForecastProfile {
    pub fn new(space: FiniteSpace, forecasts: Vec<StepCdf>, y: Vec<f64>) -> Result<Self> {
        check_len("forecasts", space.len(), forecasts.len())?;
        check_len("response", space.len(), y.len())?;
        check_finite("response", &y)?;
        Ok(Self {
            space,
            forecasts,
            y,
        })
    }

    pub fn space(&self) -> &FiniteSpace {
        &self.space
    }

    pub fn forecasts(&self) -> &[StepCdf] {
        &self.forecasts
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Jump points of all forecasts together with all outcomes.
    fn grid(&self) -> Vec<f64> {
        let mut grid: Vec<f64> = self
            .forecasts
            .iter()
            .flat_map(|f| f.points().iter().copied())
            .chain(self.y.iter().copied())
            .collect();
        sorted_unique(&mut grid);
        grid
    }

    fn empirical(&self, group: &[usize]) -> Result<StepCdf> {
        let values: Vec<f64> = group.iter().map(|&i| self.y[i]).collect();
        let weights: Vec<f64> = group.iter().map(|&i| self.space.weight(i)).collect();
        StepCdf::empirical(&values, &weights)
    }

    /// Atoms grouped by identical forecasts, in order of first appearance.
    fn forecast_groups(&self) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (i, f) in self.forecasts.iter().enumerate() {
            match groups
                .iter_mut()
                .find(|g| self.forecasts[g[0]].approx_eq(f, MASS_TOL))
            {
                Some(g) => g.push(i),
                None => groups.push(vec![i]),
            }
        }
        groups
    }
}

/// Where a calibration identity fails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    /// Threshold `z` or level `α`, depending on the check.
    pub level: Option<f64>,
    pub group: Vec<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub holds: bool,
    pub witness: Option<Witness>,
}

impl CheckResult {
    fn from_witness(witness: Option<Witness>) -> Self {
        Self {
            holds: witness.is_none(),
            witness,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub auto: CheckResult,
    pub isotonic: CheckResult,
    pub threshold: CheckResult,
    pub quantile: CheckResult,
    pub pit_bounds: CheckResult,
    pub tolerance: f64,
}

impl CalibrationReport {
    /// Auto implies isotonic, isotonic implies threshold and quantile calibration.
    pub fn hierarchy_holds(&self) -> bool {
        (!self.auto.holds || self.isotonic.holds)
            && (!self.isotonic.holds || (self.threshold.holds && self.quantile.holds))
    }
}

/// Runs all five checks.
pub fn calibration_report(profile: &ForecastProfile) -> Result<CalibrationReport> {
    Ok(CalibrationReport {
        auto: check_auto(profile)?,
        isotonic: check_isotonic(profile)?,
        threshold: check_threshold(profile)?,
        quantile: check_quantile(profile)?,
        pit_bounds: check_pit_bounds(profile)?,
        tolerance: CALIBRATION_TOL,
    })
}

/// `F(z) = P(Y <= z | F)` for every threshold.
pub fn check_auto(profile: &ForecastProfile) -> Result<CheckResult> {
    let grid = profile.grid();
    for group in profile.forecast_groups() {
        let f = &profile.forecasts[group[0]];
        let g = profile.empirical(&group)?;
        if let Some(&z) = grid
            .iter()
            .find(|&&z| (f.cdf(z) - g.cdf(z)).abs() > CALIBRATION_TOL)
        {
            return Ok(CheckResult::from_witness(Some(Witness {
                level: Some(z),
                lhs: f.cdf(z),
                rhs: g.cdf(z),
                group,
                detail: "forecast cdf vs conditional cdf given the forecast".into(),
            })));
        }
    }
    Ok(CheckResult::from_witness(None))
}

/// The conditional law given the σ-lattice generated by the forecasts under
/// the stochastic order equals the forecasts.
pub fn check_isotonic(profile: &ForecastProfile) -> Result<CheckResult> {
    let order = preorder_from_stochastic_order(&profile.forecasts);
    let fit = icl_fit(&profile.space, &order, &profile.y)?;
    let grid = profile.grid();
    for (i, f) in profile.forecasts.iter().enumerate() {
        let row = fit.row(i);
        if let Some(&z) = grid
            .iter()
            .find(|&&z| (f.cdf(z) - row.cdf(z)).abs() > CALIBRATION_TOL)
        {
            return Ok(CheckResult::from_witness(Some(Witness {
                level: Some(z),
                group: vec![i],
                lhs: f.cdf(z),
                rhs: row.cdf(z),
                detail: "forecast cdf vs isotonic conditional law".into(),
            })));
        }
    }
    Ok(CheckResult::from_witness(None))
}

/// `F(z) = P(Y <= z | F(z))` for every threshold.
pub fn check_threshold(profile: &ForecastProfile) -> Result<CheckResult> {
    for z in profile.grid() {
        let values: Vec<f64> = profile.forecasts.iter().map(|f| f.cdf(z)).collect();
        for group in level_sets(&values, MASS_TOL) {
            let mass = profile.space.mass(group.iter().copied());
            let hits = profile
                .space
                .mass(group.iter().copied().filter(|&i| profile.y[i] <= z));
            let freq = hits / mass;
            let value = values[group[0]];
            if (freq - value).abs() > CALIBRATION_TOL {
                return Ok(CheckResult::from_witness(Some(Witness {
                    level: Some(z),
                    lhs: value,
                    rhs: freq,
                    group,
                    detail: "forecast probability vs conditional frequency of y <= z".into(),
                })));
            }
        }
    }
    Ok(CheckResult::from_witness(None))
}

/// Sorted distinct cumulative levels of all forecasts, with 0 and 1.
fn level_grid(forecasts: &[StepCdf]) -> Vec<f64> {
    let mut levels: Vec<f64> = forecasts
        .iter()
        .flat_map(|f| f.cum().iter().copied())
        .chain([0.0, 1.0])
        .collect();
    sorted_unique(&mut levels);
    let mut merged: Vec<f64> = Vec::with_capacity(levels.len());
    for l in levels {
        match merged.last_mut() {
            Some(m) if l - *m <= MASS_TOL => *m = m.max(l).min(1.0),
            _ => merged.push(l),
        }
    }
    merged
}

/// `F^{-1}(α)` is the lower `α`-quantile of `Y` given `F^{-1}(α)`, for every
/// `α ∈ (0, 1)`.
///
/// Between consecutive cumulative levels `a < b` of the profile every
/// forecast quantile is constant, so the identity holds on `(a, b]` iff each
/// group `{F^{-1} = x}` has `P(Y < x | ·) <= a` and `P(Y <= x | ·) >= b`.
pub fn check_quantile(profile: &ForecastProfile) -> Result<CheckResult> {
    let levels = level_grid(&profile.forecasts);
    for cell in levels.windows(2) {
        let (a, b) = (cell[0], cell[1]);
        let mid = 0.5 * (a + b);
        let x: Vec<f64> = profile
            .forecasts
            .iter()
            .map(|f| f.lower_quantile(mid))
            .collect::<Result<_>>()?;
        for group in level_sets(&x, 0.0) {
            let g = profile.empirical(&group)?;
            let v = x[group[0]];
            let below = g.left_limit(v);
            let upto = g.cdf(v);
            if below > a + CALIBRATION_TOL || upto < b - CALIBRATION_TOL {
                let (level, lhs, rhs, detail) = if below > a + CALIBRATION_TOL {
                    (a, below, a, "P(Y < x | x) exceeds the level")
                } else {
                    (b, upto, b, "P(Y <= x | x) falls short of the level")
                };
                return Ok(CheckResult::from_witness(Some(Witness {
                    level: Some(level),
                    group,
                    lhs,
                    rhs,
                    detail: format!("{detail} at quantile value {v}"),
                })));
            }
        }
    }
    Ok(CheckResult::from_witness(None))
}

/// `P(F(Y) < α) <= α <= P(F(Y-) <= α)` for all `α ∈ (0, 1)`.
///
/// Both sides are step functions of `α`, so the one-sided limits at the
/// attained values of `F(Y)` and `F(Y-)` are exhaustive.
pub fn check_pit_bounds(profile: &ForecastProfile) -> Result<CheckResult> {
    let n = profile.y.len();
    let p: Vec<f64> = (0..n)
        .map(|i| profile.forecasts[i].cdf(profile.y[i]))
        .collect();
    let q: Vec<f64> = (0..n)
        .map(|i| profile.forecasts[i].left_limit(profile.y[i]))
        .collect();
    let mass = |pred: &dyn Fn(usize) -> bool| profile.space.mass((0..n).filter(|&i| pred(i)));
    let witness = |level: f64, lhs: f64, rhs: f64, detail: &str| {
        Some(Witness {
            level: Some(level),
            group: (0..n).collect(),
            lhs,
            rhs,
            detail: detail.into(),
        })
    };
    for &a in &p {
        if a < 1.0 {
            // α ↓ a
            let lhs = mass(&|i| p[i] <= a + MASS_TOL);
            if lhs > a + CALIBRATION_TOL {
                return Ok(CheckResult::from_witness(witness(
                    a,
                    lhs,
                    a,
                    "P(F(Y) < α) > α as α decreases to the level",
                )));
            }
        }
    }
    for &a in &q {
        if a > 0.0 {
            // α ↑ a
            let rhs = mass(&|i| q[i] < a - MASS_TOL);
            if rhs < a - CALIBRATION_TOL {
                return Ok(CheckResult::from_witness(witness(
                    a,
                    a,
                    rhs,
                    "P(F(Y-) <= α) < α as α increases to the level",
                )));
            }
        }
    }
    for &a in p.iter().chain(&q) {
        if a > 0.0 && a < 1.0 {
            let lhs = mass(&|i| p[i] < a - MASS_TOL);
            let rhs = mass(&|i| q[i] <= a + MASS_TOL);
            if lhs > a + CALIBRATION_TOL || rhs < a - CALIBRATION_TOL {
                return Ok(CheckResult::from_witness(witness(
                    a,
                    lhs,
                    rhs,
                    "PIT bounds fail at an attained level",
                )));
            }
        }
    }
    Ok(CheckResult::from_witness(None))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanFixedPoint {
    /// `x` equals the mean of the response given the value of `x`.
    pub classical: bool,
    /// `x` equals the isotonic mean of the response along the order induced by `x`.
    pub lattice: bool,
}

impl MeanFixedPoint {
    pub fn agree(&self) -> bool {
        self.classical == self.lattice
    }
}

/// Both sides of the mean fixed-point equivalence for a candidate `x`.
pub fn check_mean_fixed_point(x: &[f64], y: &[f64], space: &FiniteSpace) -> Result<MeanFixedPoint> {
    check_len("candidate", space.len(), x.len())?;
    check_len("response", space.len(), y.len())?;
    check_finite("candidate", x)?;
    check_finite("response", y)?;
    if x.is_empty() {
        return Err(IclError::Empty("candidate"));
    }
    let classical = level_sets(x, 0.0)
        .iter()
        .all(|g| (space.mean_over(y, g) - x[g[0]]).abs() <= CALIBRATION_TOL);
    let fit = isotonic_mean(space, &Preorder::by_values(x), y)?;
    let lattice = fit
        .fitted
        .iter()
        .zip(x)
        .all(|(f, v)| (f - v).abs() <= CALIBRATION_TOL);
    Ok(MeanFixedPoint { classical, lattice })
}
