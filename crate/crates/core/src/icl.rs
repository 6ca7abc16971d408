//! The isotonic conditional law: per-threshold isotonic regression of the
//! survival indicators `1{y > z}`, assembled into stochastically monotone step
//! cdfs.

use serde::Serialize;

use crate::distributions::{merged_grid, sorted_unique, QuantileSide, StepCdf, MASS_TOL};
use crate::error::{check_finite, check_len, IclError, Result};
use crate::isotonic::{isotonic_mean, FIT_TOL};
use crate::space::{FiniteSpace, Preorder};

/// A fitted conditional law: one step cdf per atom, evaluated on the sorted
/// unique response values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IclFit {
    thresholds: Vec<f64>,
    /// `columns[k][i] = F_i(thresholds[k])`.
    columns: Vec<Vec<f64>>,
    #[serde(skip)]
    rows: Vec<StepCdf>,
}

impl IclFit {
    /// Assembles a fit from column-major cdf values, checking monotonicity
    /// along rows and anti-monotonicity along `order` within [`FIT_TOL`].
    pub fn from_columns(
        order: &Preorder,
        thresholds: Vec<f64>,
        columns: Vec<Vec<f64>>,
    ) -> Result<Self> {
        check_len("cdf columns", thresholds.len(), columns.len())?;
        if thresholds.is_empty() {
            return Err(IclError::Empty("thresholds"));
        }
        let n = order.len();
        for col in &columns {
            check_len("cdf column", n, col.len())?;
            check_finite("cdf column", col)?;
        }
        for (k, pair) in columns.windows(2).enumerate() {
            if let Some(i) = (0..n).find(|&i| pair[0][i] > pair[1][i] + FIT_TOL) {
                return Err(IclError::InvariantViolation(format!(
                    "row {i} decreases between thresholds {} and {}",
                    thresholds[k],
                    thresholds[k + 1]
                )));
            }
        }
        for (k, col) in columns.iter().enumerate() {
            for (i, j) in order.strict_pairs() {
                if col[i] + FIT_TOL < col[j] {
                    return Err(IclError::InvariantViolation(format!(
                        "column at {} is not antitone: F_{i} < F_{j}",
                        thresholds[k]
                    )));
                }
            }
        }
        let rows = (0..n)
            .map(|i| {
                let values: Vec<f64> = columns.iter().map(|c| c[i]).collect();
                StepCdf::from_grid_values(&thresholds, &values)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            thresholds,
            columns,
            rows,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Column-major cdf matrix.
    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// `F_i(z_k)`.
    pub fn value(&self, i: usize, k: usize) -> f64 {
        self.columns[k][i]
    }

    /// Row-major cdf matrix.
    pub fn cdf_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|i| self.columns.iter().map(|c| c[i]).collect())
            .collect()
    }

    pub fn row(&self, i: usize) -> &StepCdf {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[StepCdf] {
        &self.rows
    }

    pub fn survival(&self, i: usize, z: f64) -> f64 {
        self.rows[i].survival(z)
    }
}

/// Fits the conditional law of `y` given the upper sets of `order`.
pub fn icl_fit(space: &FiniteSpace, order: &Preorder, y: &[f64]) -> Result<IclFit> {
    check_len("order", space.len(), order.len())?;
    check_len("response", space.len(), y.len())?;
    check_finite("response", y)?;
    let mut thresholds = y.to_vec();
    sorted_unique(&mut thresholds);
    let last = thresholds.len() - 1;
    let columns = thresholds
        .iter()
        .enumerate()
        .map(|(k, &z)| {
            if k == last {
                return Ok(vec![1.0; y.len()]);
            }
            let exceed: Vec<f64> = y.iter().map(|&v| if v > z { 1.0 } else { 0.0 }).collect();
            let fit = isotonic_mean(space, order, &exceed)?;
            Ok(fit
                .fitted
                .iter()
                .map(|s| (1.0 - s).clamp(0.0, 1.0))
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    IclFit::from_columns(order, thresholds, columns)
}

/// Per-atom lower `alpha`-quantiles of the fitted rows.
pub fn icl_quantile(fit: &IclFit, alpha: f64) -> Result<Vec<f64>> {
    icl_quantile_side(fit, alpha, QuantileSide::Lower)
}

pub fn icl_quantile_side(fit: &IclFit, alpha: f64, side: QuantileSide) -> Result<Vec<f64>> {
    fit.rows().iter().map(|r| r.quantile(alpha, side)).collect()
}

/// Two comparable classes whose empirical laws are not stochastically ordered.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingWitness {
    /// Class below in the order.
    pub lower_class: Vec<usize>,
    pub upper_class: Vec<usize>,
    /// Point where the lower class cdf falls below the upper class cdf.
    pub at: f64,
    pub lower_cdf: f64,
    pub upper_cdf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalEquivalence {
    /// Equivalence classes of the preorder.
    pub classes: Vec<Vec<usize>>,
    /// Empirical law of the response within each class.
    pub classical: Vec<StepCdf>,
    /// The classical laws are stochastically increasing along the order.
    pub isotonic: bool,
    pub witness: Option<CrossingWitness>,
    /// When `isotonic`: largest deviation between the fitted and classical cdfs.
    pub max_deviation: Option<f64>,
    /// When `isotonic`: the fit equals the classical law within [`FIT_TOL`].
    pub coincides: Option<bool>,
}

/// Compares the classical conditional law given the equivalence classes of
/// `order` with the isotonic conditional law.
pub fn check_classical_equivalence(
    space: &FiniteSpace,
    order: &Preorder,
    y: &[f64],
) -> Result<ClassicalEquivalence> {
    check_len("order", space.len(), order.len())?;
    check_len("response", space.len(), y.len())?;
    check_finite("response", y)?;
    let (classes, quotient) = order.quotient();
    let classical = classes
        .iter()
        .map(|c| {
            let values: Vec<f64> = c.iter().map(|&i| y[i]).collect();
            let weights: Vec<f64> = c.iter().map(|&i| space.weight(i)).collect();
            StepCdf::empirical(&values, &weights)
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = merged_grid(&classical);
    let witness = quotient.strict_pairs().into_iter().find_map(|(a, b)| {
        grid.iter().find_map(|&x| {
            let (fa, fb) = (classical[a].cdf(x), classical[b].cdf(x));
            (fa < fb - MASS_TOL).then(|| CrossingWitness {
                lower_class: classes[a].clone(),
                upper_class: classes[b].clone(),
                at: x,
                lower_cdf: fa,
                upper_cdf: fb,
            })
        })
    });
    let isotonic = witness.is_none();
    let (max_deviation, coincides) = if isotonic {
        let fit = icl_fit(space, order, y)?;
        let mut dev: f64 = 0.0;
        for (c, members) in classes.iter().enumerate() {
            for &i in members {
                for (k, &z) in fit.thresholds().iter().enumerate() {
                    dev = dev.max((fit.value(i, k) - classical[c].cdf(z)).abs());
                }
            }
        }
        (Some(dev), Some(dev <= FIT_TOL))
    } else {
        (None, None)
    };
    Ok(ClassicalEquivalence {
        classes,
        classical,
        isotonic,
        witness,
        max_deviation,
        coincides,
    })
}
