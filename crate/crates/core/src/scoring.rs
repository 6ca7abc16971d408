//! Identification functions, elementary scores, consistent scoring functions
//! and the CRPS, evaluated in closed form for step distributions.

use crate::distributions::{check_level, StepCdf};
use crate::error::{IclError, Result};

/// An identification function `V(x, y)`, increasing and left-continuous in `x`.
#[derive(Debug, Clone, Copy)]
pub enum IdentificationFunction {
    /// `V(x, y) = x - y`.
    Mean,
    /// `V(x, y) = 1{x > y} - alpha`.
    Quantile { alpha: f64 },
    /// Any other increasing, left-continuous `V`; `strict` marks strict monotonicity in `x`.
    Custom {
        name: &'static str,
        eval: fn(f64, f64) -> f64,
        strict: bool,
    },
}

impl IdentificationFunction {
    pub fn quantile(alpha: f64) -> Result<Self> {
        check_level(alpha)?;
        Ok(Self::Quantile { alpha })
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            Self::Mean => x - y,
            Self::Quantile { alpha } => {
                if x > y {
                    1.0 - alpha
                } else {
                    -alpha
                }
            }
            Self::Custom { eval, .. } => eval(x, y),
        }
    }

    pub fn is_strict(&self) -> bool {
        match *self {
            Self::Mean => true,
            Self::Quantile { .. } => false,
            Self::Custom { strict, .. } => strict,
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Self::Mean => "mean".into(),
            Self::Quantile { alpha } => format!("quantile({alpha})"),
            Self::Custom { name, .. } => name.into(),
        }
    }

    /// Spot-checks monotonicity and left-continuity of `V(·, y)` on a grid.
    pub fn spot_check(&self, xs: &[f64], ys: &[f64]) -> bool {
        const H: f64 = 1e-9;
        ys.iter().all(|&y| {
            let mut sorted: Vec<f64> = xs.iter().copied().chain([y]).collect();
            sorted.sort_by(f64::total_cmp);
            let increasing = sorted
                .windows(2)
                .all(|w| self.eval(w[0], y) <= self.eval(w[1], y));
            let left_continuous = sorted
                .iter()
                .all(|&x| (self.eval(x - H, y) - self.eval(x, y)).abs() <= 1e-6);
            increasing && left_continuous
        })
    }

    /// Elementary score `S_eta(x, y) = V(eta, y) (1{y < eta <= x} - 1{x < eta <= y})`.
    pub fn elementary_score(&self, eta: f64, x: f64, y: f64) -> f64 {
        let v = self.eval(eta, y);
        if y < eta && eta <= x {
            v
        } else if x < eta && eta <= y {
            -v
        } else {
            0.0
        }
    }
}

/// `S^Q_{alpha,eta}(x, y) = (1 - alpha) 1{y < eta <= x} + alpha 1{x < eta <= y}`.
pub fn elementary_quantile_score(alpha: f64, eta: f64, x: f64, y: f64) -> f64 {
    if y < eta && eta <= x {
        1.0 - alpha
    } else if x < eta && eta <= y {
        alpha
    } else {
        0.0
    }
}

/// `S^E_eta(x, y) = (eta - y) 1{y < eta <= x} + (y - eta) 1{x < eta <= y}`.
pub fn elementary_mean_score(eta: f64, x: f64, y: f64) -> f64 {
    if y < eta && eta <= x {
        eta - y
    } else if x < eta && eta <= y {
        y - eta
    } else {
        0.0
    }
}

/// Pinball loss `QS_alpha(x, y) = (1{y <= x} - alpha)(x - y)`.
pub fn quantile_score(alpha: f64, x: f64, y: f64) -> f64 {
    let ind = if y <= x { 1.0 } else { 0.0 };
    (ind - alpha) * (x - y)
}

/// `BS(x, y) = (x - y)^2`.
pub fn brier_score(x: f64, y: f64) -> f64 {
    (x - y) * (x - y)
}

/// `crps(F, y) = ∫ (F(z) - 1{y <= z})^2 dz`.
///
/// The integrand is constant between consecutive knots of `points ∪ {y}` and
/// vanishes outside their hull, so the integral is a finite sum.
pub fn crps(f: &StepCdf, y: f64) -> f64 {
    let mut knots: Vec<f64> = f.points().to_vec();
    let pos = knots.partition_point(|p| *p < y);
    if knots.get(pos) != Some(&y) {
        knots.insert(pos, y);
    }
    knots
        .windows(2)
        .map(|w| {
            let ind = if y <= w[0] { 1.0 } else { 0.0 };
            brier_score(f.cdf(w[0]), ind) * (w[1] - w[0])
        })
        .sum()
}

/// `2 ∫_0^1 QS_alpha(F^{-1}(alpha), y) d alpha`.
///
/// On `(cum[k-1], cum[k]]` the quantile is `points[k]` and the pinball loss is
/// affine in `alpha`, so each cell integrates in closed form.
pub fn crps_via_quantiles(f: &StepCdf, y: f64) -> f64 {
    let mut lower = 0.0;
    let mut total = 0.0;
    for (&x, &upper) in f.points().iter().zip(f.cum()) {
        let ind = if y <= x { 1.0 } else { 0.0 };
        let integral = ind * (upper - lower) - (upper * upper - lower * lower) / 2.0;
        total += integral * (x - y);
        lower = upper;
    }
    2.0 * total
}

/// A finite nonnegative measure on thresholds `eta`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiscreteMeasure {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms
            .iter()
            .any(|(eta, m)| !eta.is_finite() || !m.is_finite() || *m < 0.0)
        {
            return Err(IclError::InvalidWeights(
                "measure atoms must be finite with nonnegative mass".into(),
            ));
        }
        Ok(Self { atoms })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn unit(eta: f64) -> Self {
        Self {
            atoms: vec![(eta, 1.0)],
        }
    }

    /// Midpoint discretization of `density · Lebesgue` on `[lo, hi]` with `cells` cells.
    pub fn lebesgue_grid(lo: f64, hi: f64, cells: usize, density: f64) -> Result<Self> {
        if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) || cells == 0 {
            return Err(IclError::InvalidWeights("empty grid".into()));
        }
        let step = (hi - lo) / cells as f64;
        Self::new(
            (0..cells)
                .map(|k| (lo + (k as f64 + 0.5) * step, density * step))
                .collect(),
        )
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }
}

/// `∫ S^E_eta(x, y) dH(eta)` for a discrete `H`.
pub fn mixture_mean_score(h: &DiscreteMeasure, x: f64, y: f64) -> f64 {
    h.atoms()
        .iter()
        .map(|&(eta, m)| m * elementary_mean_score(eta, x, y))
        .sum()
}

/// `∫ S^Q_{alpha,eta}(x, y) dH(eta)` for a discrete `H`.
pub fn mixture_quantile_score(h: &DiscreteMeasure, alpha: f64, x: f64, y: f64) -> f64 {
    h.atoms()
        .iter()
        .map(|&(eta, m)| m * elementary_quantile_score(alpha, eta, x, y))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::step_cdf_strategy;
    use proptest::prelude::*;

    fn two_point(a: f64, b: f64) -> StepCdf {
        StepCdf::from_masses(&[a, b], &[0.5, 0.5]).unwrap()
    }

    #[test]
    fn elementary_scores() {
        assert_eq!(elementary_quantile_score(0.25, 1.0, 0.0, 2.0), 0.25);
        assert_eq!(elementary_quantile_score(0.5, 1.0, 2.0, 0.0), 0.5);
        assert_eq!(elementary_quantile_score(0.3, 0.7, 1.5, 1.5), 0.0);
        assert_eq!(elementary_mean_score(1.0, 2.0, 0.0), 1.0);
        assert_eq!(elementary_mean_score(1.0, 0.0, 3.0), 2.0);
        assert_eq!(elementary_mean_score(-4.0, 0.5, 0.5), 0.0);
    }

    #[test]
    fn point_scores() {
        assert_eq!(quantile_score(0.5, 1.0, 3.0), 1.0);
        assert_eq!(quantile_score(0.2, 4.0, 4.0), 0.0);
        assert!((quantile_score(0.9, 2.0, 0.0) - 0.2).abs() < 1e-15);
        assert_eq!(brier_score(0.0, 0.0), 0.0);
        assert_eq!(brier_score(1.0, 0.0), 1.0);
        assert_eq!(brier_score(0.5, 1.0), 0.25);
    }

    #[test]
    fn crps_examples() {
        assert_eq!(crps(&StepCdf::point_mass(1.3), 1.3), 0.0);
        assert_eq!(crps(&two_point(0.0, 1.0), 0.0), 0.25);
        assert_eq!(crps(&two_point(0.0, 1.0), 1.0), 0.25);
        assert_eq!(crps_via_quantiles(&two_point(0.0, 1.0), 0.0), 0.25);
        assert_eq!(crps_via_quantiles(&two_point(0.0, 1.0), 1.0), 0.25);
        assert_eq!(crps_via_quantiles(&StepCdf::point_mass(1.3), 1.3), 0.0);
        assert_eq!(crps(&two_point(0.0, 2.0), 1.0), 0.5);
        assert_eq!(crps_via_quantiles(&two_point(0.0, 2.0), 1.0), 0.5);
        assert_eq!(crps(&StepCdf::point_mass(2.0), -1.0), 3.0);
        assert_eq!(crps_via_quantiles(&StepCdf::point_mass(2.0), -1.0), 3.0);
        assert_eq!(crps(&StepCdf::point_mass(2.0), 2.5), 0.5);
    }

    #[test]
    fn mixtures() {
        let x = 2.0;
        let y = -0.5;
        assert_eq!(
            mixture_mean_score(&DiscreteMeasure::unit(0.3), x, y),
            elementary_mean_score(0.3, x, y)
        );
        assert_eq!(mixture_mean_score(&DiscreteMeasure::zero(), x, y), 0.0);
        // density 2 Lebesgue yields the Brier score: ∫_y^x 2(eta - y) d eta = (x - y)^2
        for cells in [10, 100, 1000] {
            let h = DiscreteMeasure::lebesgue_grid(-1.0, 2.0, cells, 2.0).unwrap();
            let step = 3.0 / cells as f64;
            for (x, y) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
                assert!((mixture_mean_score(&h, x, y) - brier_score(x, y)).abs() <= step);
            }
        }
        // unit-density Lebesgue yields the pinball loss
        let h = DiscreteMeasure::lebesgue_grid(-3.0, 3.0, 6000, 1.0).unwrap();
        let qs = mixture_quantile_score(&h, 0.3, 1.0, -0.4);
        assert!((qs - quantile_score(0.3, 1.0, -0.4)).abs() < 1e-3);
        assert!(DiscreteMeasure::new(vec![(0.0, -1.0)]).is_err());
    }

    #[test]
    fn identification_functions() {
        let q = IdentificationFunction::quantile(0.25).unwrap();
        assert_eq!(q.eval(1.0, 1.0), -0.25);
        assert_eq!(q.eval(1.5, 1.0), 0.75);
        assert!(!q.is_strict());
        assert!(IdentificationFunction::Mean.is_strict());
        assert!(IdentificationFunction::quantile(1.0).is_err());
        let grid: Vec<f64> = (-8..=8).map(|k| k as f64 * 0.25).collect();
        assert!(q.spot_check(&grid, &[-1.0, 0.0, 0.5]));
        assert!(IdentificationFunction::Mean.spot_check(&grid, &[0.0, 1.0]));
        // a right-continuous step is rejected
        let bad = IdentificationFunction::Custom {
            name: "right-continuous",
            eval: |x, y| if x >= y { 0.5 } else { -0.5 },
            strict: false,
        };
        assert!(!bad.spot_check(&grid, &[0.0]));
        // the generic elementary score matches the named families
        for &eta in &grid {
            assert_eq!(
                q.elementary_score(eta, 1.0, -0.5),
                elementary_quantile_score(0.25, eta, 1.0, -0.5)
            );
            assert_eq!(
                IdentificationFunction::Mean.elementary_score(eta, -0.75, 1.25),
                elementary_mean_score(eta, -0.75, 1.25)
            );
        }
    }

    fn grid_argmins(objective: impl Fn(f64) -> f64, grid: &[f64]) -> Vec<f64> {
        let best = grid
            .iter()
            .map(|&x| objective(x))
            .fold(f64::INFINITY, f64::min);
        grid.iter()
            .copied()
            .filter(|&x| objective(x) <= best + 1e-12)
            .collect()
    }

    proptest! {
        #[test]
        fn two_crps_representations_agree(f in step_cdf_strategy(), y in -6.0f64..6.0) {
            let a = crps(&f, y);
            let b = crps_via_quantiles(&f, y);
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{} vs {}", a, b);
        }

        #[test]
        fn elementary_scores_nonnegative(
            alpha in 0.01f64..0.99, eta in -3.0f64..3.0, x in -3.0f64..3.0, y in -3.0f64..3.0
        ) {
            prop_assert!(elementary_quantile_score(alpha, eta, x, y) >= 0.0);
            prop_assert!(elementary_mean_score(eta, x, y) >= 0.0);
            prop_assert_eq!(elementary_quantile_score(alpha, eta, x, x), 0.0);
            prop_assert_eq!(elementary_mean_score(eta, y, y), 0.0);
            prop_assert!(quantile_score(alpha, x, y) >= 0.0);
        }

        // expected pinball loss under F is minimized at every alpha-quantile of F
        #[test]
        fn quantile_score_is_consistent(f in step_cdf_strategy(), alpha in 0.02f64..0.98) {
            let masses = f.masses();
            let expected = |x: f64| -> f64 {
                f.points().iter().zip(&masses).map(|(y, m)| m * quantile_score(alpha, x, *y)).sum()
            };
            let mut grid: Vec<f64> = (-24..=24).map(|k| k as f64 / 4.0).collect();
            grid.extend_from_slice(f.points());
            let best = grid_argmins(expected, &grid);
            let lo = f.lower_quantile(alpha).unwrap();
            let hi = f.upper_quantile(alpha).unwrap();
            prop_assert!(best.contains(&lo));
            prop_assert!(best.iter().all(|&x| x >= lo - 1e-12 && x <= hi + 1e-12));
        }

        #[test]
        fn brier_score_is_consistent_for_the_mean(f in step_cdf_strategy()) {
            let masses = f.masses();
            let expected = |x: f64| -> f64 {
                f.points().iter().zip(&masses).map(|(y, m)| m * brier_score(x, *y)).sum()
            };
            let mean = f.mean();
            let mut grid: Vec<f64> = (-48..=48).map(|k| k as f64 / 8.0).chain([mean]).collect();
            crate::distributions::sorted_unique(&mut grid);
            let best = grid_argmins(expected, &grid);
            prop_assert!(best.iter().all(|x| (x - mean).abs() < 1e-12));
        }
    }
}
