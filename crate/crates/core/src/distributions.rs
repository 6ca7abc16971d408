//! Right-continuous step distribution functions on the real line.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, IclError, Result};

/// Tolerance for comparing probability masses and cumulative levels.
pub const MASS_TOL: f64 = 1e-12;

/// A distribution with finitely many atoms.
///
/// `points` are strictly increasing jump locations and `cum[k] = F(points[k])`
/// is strictly increasing with `cum[last] == 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStepCdf")]
pub struct StepCdf {
    points: Vec<f64>,
    cum: Vec<f64>,
}

#[derive(Deserialize)]
struct RawStepCdf {
    points: Vec<f64>,
    cum: Vec<f64>,
}

impl TryFrom<RawStepCdf> for StepCdf {
    type Error = IclError;

    fn try_from(raw: RawStepCdf) -> Result<Self> {
        StepCdf::from_cum(raw.points, raw.cum)
    }
}

impl StepCdf {
    /// Validates a jump/cumulative representation.
    pub fn from_cum(points: Vec<f64>, mut cum: Vec<f64>) -> Result<Self> {
        check_len("cumulative masses", points.len(), cum.len())?;
        if points.is_empty() {
            return Err(IclError::InvalidCdf("no jump points".into()));
        }
        check_finite("jump points", &points)?;
        check_finite("cumulative masses", &cum)?;
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(IclError::InvalidCdf(
                "jump points must be strictly increasing".into(),
            ));
        }
        if cum[0] <= 0.0 || cum.windows(2).any(|w| w[0] >= w[1]) {
            return Err(IclError::InvalidCdf(
                "cumulative masses must be strictly increasing and positive".into(),
            ));
        }
        let last = cum.len() - 1;
        if (cum[last] - 1.0).abs() > MASS_TOL {
            return Err(IclError::InvalidCdf(format!(
                "total mass is {}, expected 1",
                cum[last]
            )));
        }
        cum[last] = 1.0;
        Ok(Self { points, cum })
    }

    /// Builds a distribution from atoms; equal points are merged, zero masses dropped.
    pub fn from_masses(points: &[f64], masses: &[f64]) -> Result<Self> {
        check_len("masses", points.len(), masses.len())?;
        check_finite("jump points", points)?;
        check_finite("masses", masses)?;
        if masses.iter().any(|m| *m < 0.0) {
            return Err(IclError::InvalidCdf("negative mass".into()));
        }
        let mut atoms: Vec<(f64, f64)> = points
            .iter()
            .copied()
            .zip(masses.iter().copied())
            .filter(|(_, m)| *m > 0.0)
            .collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged_points: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut merged_masses: Vec<f64> = Vec::with_capacity(atoms.len());
        for (p, m) in atoms {
            match merged_points.last() {
                Some(&last) if last == p => *merged_masses.last_mut().unwrap() += m,
                _ => {
                    merged_points.push(p);
                    merged_masses.push(m);
                }
            }
        }
        let cum: Vec<f64> = merged_masses
            .iter()
            .scan(0.0, |acc, m| {
                *acc += m;
                Some(*acc)
            })
            .collect();
        Self::from_cum(merged_points, cum)
    }

    /// Degenerate distribution at `x`.
    pub fn point_mass(x: f64) -> Self {
        Self {
            points: vec![x],
            cum: vec![1.0],
        }
    }

    /// Weighted empirical distribution of `values`; weights need not be normalized.
    pub fn empirical(values: &[f64], weights: &[f64]) -> Result<Self> {
        check_len("weights", values.len(), weights.len())?;
        let total: f64 = weights.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(IclError::InvalidWeights(
                "empirical weights must have positive finite total".into(),
            ));
        }
        let masses: Vec<f64> = weights.iter().map(|w| w / total).collect();
        Self::from_masses(values, &masses)
    }

    /// Distribution with `F(grid[k]) = values[k]`, constant between grid points.
    ///
    /// Increments of at most [`MASS_TOL`] (including rounding-level decreases)
    /// are not treated as jumps. The last value must be one within `1e-10`.
    pub fn from_grid_values(grid: &[f64], values: &[f64]) -> Result<Self> {
        check_len("cdf values", grid.len(), values.len())?;
        if grid.is_empty() {
            return Err(IclError::InvalidCdf("empty grid".into()));
        }
        let last = values[values.len() - 1];
        if (last - 1.0).abs() > 1e-10 {
            return Err(IclError::InvalidCdf(format!(
                "cdf ends at {last}, expected 1"
            )));
        }
        let mut points = Vec::new();
        let mut cum = Vec::new();
        let mut level = 0.0;
        for (k, (&z, &v)) in grid.iter().zip(values).enumerate() {
            let v = if k + 1 == grid.len() { 1.0 } else { v.min(1.0) };
            if v > level + MASS_TOL {
                points.push(z);
                cum.push(v);
                level = v;
            }
        }
        if let Some(c) = cum.last_mut() {
            *c = 1.0;
        } else {
            points.push(grid[grid.len() - 1]);
            cum.push(1.0);
        }
        Self::from_cum(points, cum)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn cum(&self) -> &[f64] {
        &self.cum
    }

    /// Individual jump sizes.
    pub fn masses(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.cum
            .iter()
            .map(|c| {
                let m = c - prev;
                prev = *c;
                m
            })
            .collect()
    }

    /// `F(x)`, mass at or below `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.points.partition_point(|p| *p <= x);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1]
        }
    }

    /// `F(x-)`, mass strictly below `x`.
    pub fn left_limit(&self, x: f64) -> f64 {
        let k = self.points.partition_point(|p| *p < x);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1]
        }
    }

    /// `1 - F(x)`.
    pub fn survival(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    /// `inf{z : F(z) >= alpha}`, with levels within [`MASS_TOL`] counted as reached.
    pub fn lower_quantile(&self, alpha: f64) -> Result<f64> {
        check_level(alpha)?;
        let k = self.cum.partition_point(|c| *c < alpha - MASS_TOL);
        Ok(self.points[k.min(self.points.len() - 1)])
    }

    /// `sup{z : F(z) <= alpha}`, with levels within [`MASS_TOL`] counted as not exceeded.
    pub fn upper_quantile(&self, alpha: f64) -> Result<f64> {
        check_level(alpha)?;
        let k = self.cum.partition_point(|c| *c <= alpha + MASS_TOL);
        Ok(self.points[k.min(self.points.len() - 1)])
    }

    pub fn quantile(&self, alpha: f64, side: QuantileSide) -> Result<f64> {
        match side {
            QuantileSide::Lower => self.lower_quantile(alpha),
            QuantileSide::Upper => self.upper_quantile(alpha),
        }
    }

    pub fn mean(&self) -> f64 {
        self.points
            .iter()
            .zip(self.masses())
            .map(|(p, m)| p * m)
            .sum()
    }

    pub fn min_point(&self) -> f64 {
        self.points[0]
    }

    pub fn max_point(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Same jump points and cumulative levels within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.points == other.points
            && self
                .cum
                .iter()
                .zip(&other.cum)
                .all(|(a, b)| (a - b).abs() <= tol)
    }

    /// `self <=_st other`, i.e. `F(x) >= G(x)` everywhere.
    pub fn stochastically_leq(&self, other: &Self) -> bool {
        self.points
            .iter()
            .chain(&other.points)
            .all(|&x| self.cdf(x) >= other.cdf(x) - MASS_TOL)
    }
}

/// Which end of the quantile interval to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantileSide {
    Lower,
    Upper,
}

pub(crate) fn check_level(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(IclError::LevelOutOfRange(alpha))
    }
}

/// Sorted, deduplicated union of the jump points of several distributions.
pub fn merged_grid<'a, I: IntoIterator<Item = &'a StepCdf>>(cdfs: I) -> Vec<f64> {
    let mut grid: Vec<f64> = cdfs
        .into_iter()
        .flat_map(|f| f.points().iter().copied())
        .collect();
    sorted_unique(&mut grid);
    grid
}

/// Sorts and removes exact duplicates.
pub fn sorted_unique(values: &mut Vec<f64>) {
    values.sort_by(f64::total_cmp);
    values.dedup();
}
