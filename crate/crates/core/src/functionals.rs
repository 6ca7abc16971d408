//! Conditional functionals given a σ-lattice, built from minimizing sets of
//! the modular objective `s_A(η) = Σ_{i∈A} w_i V(η, y_i)` and decreasing
//! minimizing paths `η ↦ A_η`.
//!
//! Every minimizing set is the maximal minimizer, which makes paths
//! decreasing in `η` and increasing in the quantile level without any choice.

use serde::Serialize;

use crate::closure::{min_weight_closure, Policy};
use crate::distributions::{check_level, sorted_unique, QuantileSide, StepCdf};
use crate::error::{check_finite, check_len, IclError, Result};
use crate::isotonic::{isotonic_mean, level_sets};
use crate::oracle::{brute_expected_score_min, OracleBudget};
use crate::scoring::{quantile_score, IdentificationFunction};
use crate::space::{FiniteSpace, Preorder, UpperSet};

/// Distance below which two quantile levels are treated as the same breakpoint.
pub const LEVEL_TOL: f64 = 1e-10;

/// Per-atom contributions `v_i = w_i V(η, y_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModularObjective {
    pub v: Vec<f64>,
    pub eta: f64,
    pub alpha: Option<f64>,
}

impl ModularObjective {
    pub fn new(
        space: &FiniteSpace,
        y: &[f64],
        ident: &IdentificationFunction,
        eta: f64,
    ) -> Result<Self> {
        check_len("response", space.len(), y.len())?;
        check_finite("response", y)?;
        let v = y
            .iter()
            .enumerate()
            .map(|(i, &yi)| space.weight(i) * ident.eval(eta, yi))
            .collect();
        let alpha = match ident {
            IdentificationFunction::Quantile { alpha } => Some(*alpha),
            _ => None,
        };
        Ok(Self { v, eta, alpha })
    }

    /// `s(A)`.
    pub fn value(&self, set: &UpperSet) -> f64 {
        set.indices().iter().map(|&i| self.v[i]).sum()
    }
}

/// Minimizer of `s_A(η)` over upper sets `A`: the union of all minimizers
/// under [`Policy::Maximal`], their intersection under [`Policy::Minimal`].
pub fn minimizing_set(
    space: &FiniteSpace,
    order: &Preorder,
    y: &[f64],
    ident: &IdentificationFunction,
    eta: f64,
    policy: Policy,
) -> Result<UpperSet> {
    check_len("order", space.len(), order.len())?;
    let objective = ModularObjective::new(space, y, ident, eta)?;
    Ok(solve(order, &objective.v, policy))
}

fn solve(order: &Preorder, v: &[f64], policy: Policy) -> UpperSet {
    let members: Vec<usize> = (0..order.len()).collect();
    let sol = min_weight_closure(order, &members, v, policy);
    UpperSet::from_members_unchecked(sol.selected)
}

/// A decreasing family of upper sets indexed by the cells
/// `(-∞, b_0], (b_0, b_1], …, (b_{m-1}, ∞)` of the breakpoints `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimizingPath {
    breakpoints: Vec<f64>,
    sets: Vec<UpperSet>,
    alpha: Option<f64>,
    range: (f64, f64),
}

impl MinimizingPath {
    pub fn new(
        breakpoints: Vec<f64>,
        sets: Vec<UpperSet>,
        alpha: Option<f64>,
        range: (f64, f64),
    ) -> Result<Self> {
        check_len("path sets", breakpoints.len() + 1, sets.len())?;
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(IclError::InvariantViolation(
                "path breakpoints must be strictly increasing".into(),
            ));
        }
        let path = Self {
            breakpoints,
            sets,
            alpha,
            range,
        };
        if !path.is_decreasing() {
            return Err(IclError::InvariantViolation(
                "minimizing path is not decreasing in eta".into(),
            ));
        }
        Ok(path)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn sets(&self) -> &[UpperSet] {
        &self.sets
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    /// `A_η`.
    pub fn set_at(&self, eta: f64) -> &UpperSet {
        &self.sets[self.breakpoints.partition_point(|b| *b < eta)]
    }

    pub fn is_decreasing(&self) -> bool {
        self.sets.windows(2).all(|w| w[1].is_subset_of(&w[0]))
    }
}

/// Per-atom values of a conditional functional. Atoms whose path inverse is
/// infinite are clipped to the response range and flagged.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalFunctional {
    pub values: Vec<f64>,
    pub clipped: Vec<bool>,
}

/// Cell breakpoints (the sorted unique responses) and one representative
/// `η` per cell.
pub fn eta_cells(y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut u = y.to_vec();
    sorted_unique(&mut u);
    let mut reps = Vec::with_capacity(u.len() + 1);
    reps.push(u[0]);
    reps.extend(u.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    reps.push(u[u.len() - 1] + 1.0);
    (u, reps)
}

fn response_range(y: &[f64]) -> (f64, f64) {
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// The maximal-minimizer path of `ident`.
///
/// For the mean, the path is read off the level sets of the isotonic fit. For
/// other identification functions, `V(·, y)` is evaluated once per cell
/// between consecutive responses, which is exact whenever `V(η, y)` only
/// depends on `η` through `1{y < η}` (quantiles).
pub fn build_decreasing_path(
    space: &FiniteSpace,
    order: &Preorder,
    y: &[f64],
    ident: &IdentificationFunction,
) -> Result<MinimizingPath> {
    check_len("order", space.len(), order.len())?;
    check_len("response", space.len(), y.len())?;
    check_finite("response", y)?;
    if y.is_empty() {
        return Err(IclError::Empty("response"));
    }
    let range = response_range(y);
    match ident {
        IdentificationFunction::Mean => {
            let fit = isotonic_mean(space, order, y)?;
            let levels = fit.level_sets();
            let breakpoints: Vec<f64> = levels.iter().map(|(v, _)| *v).collect();
            let n = y.len();
            let mut sets = Vec::with_capacity(levels.len() + 1);
            let mut members = vec![true; n];
            sets.push(UpperSet::from_members_unchecked(members.clone()));
            for (_, block) in &levels[..levels.len() - 1] {
                for &i in block {
                    members[i] = false;
                }
                sets.push(UpperSet::from_members_unchecked(members.clone()));
            }
            sets.push(UpperSet::empty(n));
            MinimizingPath::new(breakpoints, sets, None, range)
        }
        _ => {
            let (breakpoints, reps) = eta_cells(y);
            let sets = reps
                .iter()
                .map(|&eta| minimizing_set(space, order, y, ident, eta, Policy::Maximal))
                .collect::<Result<Vec<_>>>()?;
            let alpha = match ident {
                IdentificationFunction::Quantile { alpha } => Some(*alpha),
                _ => None,
            };
            MinimizingPath::new(breakpoints, sets, alpha, range)
        }
    }
}

/// `sup{η : ω ∈ A_η}` per atom, cross-checked against `inf{η : ω ∉ A_η}`.
pub fn path_inverse(path: &MinimizingPath) -> Result<ConditionalFunctional> {
    let n = path.sets[0].members().len();
    let cells = path.sets.len();
    let mut values = Vec::with_capacity(n);
    let mut clipped = Vec::with_capacity(n);
    for i in 0..n {
        let last_in = (0..cells).rev().find(|&k| path.sets[k].contains(i));
        let first_out = (0..cells).find(|&k| !path.sets[k].contains(i));
        let sup = match last_in {
            None => f64::NEG_INFINITY,
            Some(k) if k + 1 == cells => f64::INFINITY,
            Some(k) => path.breakpoints[k],
        };
        let inf = match first_out {
            None => f64::INFINITY,
            Some(0) => f64::NEG_INFINITY,
            Some(k) => path.breakpoints[k - 1],
        };
        if sup != inf {
            return Err(IclError::InvariantViolation(format!(
                "sup and inf representations differ at atom {i}: {sup} vs {inf}"
            )));
        }
        clipped.push(!sup.is_finite());
        values.push(sup.clamp(path.range.0, path.range.1));
    }
    Ok(ConditionalFunctional { values, clipped })
}

/// Levels in `(0, 1)` at which the maximal minimizer of the quantile
/// objective changes for some `η`, sorted and merged within [`LEVEL_TOL`].
///
/// Per `η`-cell, `α ↦ min_A (P_A - α W_A)` is a concave piecewise-linear
/// envelope; its kinks are found by recursive line intersection with one
/// minimum cut per probe.
pub fn quantile_breakpoints(space: &FiniteSpace, order: &Preorder, y: &[f64]) -> Result<Vec<f64>> {
    check_len("order", space.len(), order.len())?;
    check_len("response", space.len(), y.len())?;
    check_finite("response", y)?;
    let (_, reps) = eta_cells(y);
    let w = space.weights();
    let mut out = Vec::new();
    // the first and last cells have constant sign, hence no breakpoints
    for &eta in &reps[1..reps.len() - 1] {
        let p: Vec<f64> = y
            .iter()
            .zip(w)
            .map(|(&yi, &wi)| if yi < eta { wi } else { 0.0 })
            .collect();
        let probe = |alpha: f64, policy: Policy| -> Line {
            let v: Vec<f64> = p.iter().zip(w).map(|(pi, wi)| pi - alpha * wi).collect();
            let set = solve(order, &v, policy);
            let idx = set.indices();
            Line {
                p: idx.iter().map(|&i| p[i]).sum(),
                w: idx.iter().map(|&i| w[i]).sum(),
            }
        };
        let lo = probe(0.0, Policy::Maximal);
        let hi = probe(1.0, Policy::Minimal);
        envelope_kinks(&probe, lo, hi, &mut out, 0);
    }
    out.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::with_capacity(out.len());
    for b in out {
        if merged.last().is_none_or(|&m| b - m > LEVEL_TOL) {
            merged.push(b);
        }
    }
    Ok(merged)
}

#[derive(Debug, Clone, Copy)]
struct Line {
    p: f64,
    w: f64,
}

impl Line {
    fn at(&self, alpha: f64) -> f64 {
        self.p - alpha * self.w
    }
}

fn envelope_kinks(
    probe: &dyn Fn(f64, Policy) -> Line,
    left: Line,
    right: Line,
    out: &mut Vec<f64>,
    depth: usize,
) {
    const TOL: f64 = 1e-12;
    if (right.w - left.w).abs() <= TOL || depth > 64 {
        return;
    }
    let alpha = (right.p - left.p) / (right.w - left.w);
    if !(alpha > TOL && alpha < 1.0 - TOL) {
        return;
    }
    let best = probe(alpha, Policy::Maximal);
    if best.at(alpha) >= left.at(alpha) - TOL {
        out.push(alpha);
        return;
    }
    let below = probe(alpha, Policy::Minimal);
    envelope_kinks(probe, left, below, out, depth + 1);
    envelope_kinks(probe, best, right, out, depth + 1);
}

/// The lattice `α`-quantile: the path inverse at a level just below `α`
/// (lower side) or just above it (upper side), inside the same cell of
/// [`quantile_breakpoints`].
pub fn conditional_quantile(
    space: &FiniteSpace,
    order: &Preorder,
    y: &[f64],
    alpha: f64,
    side: QuantileSide,
) -> Result<ConditionalFunctional> {
    check_level(alpha)?;
    let breaks = quantile_breakpoints(space, order, y)?;
    let proxy = match side {
        QuantileSide::Lower => {
            let b = breaks
                .iter()
                .rev()
                .find(|&&b| b < alpha - LEVEL_TOL)
                .copied()
                .unwrap_or(0.0);
            0.5 * (alpha + b)
        }
        QuantileSide::Upper => {
            let b = breaks
                .iter()
                .find(|&&b| b > alpha + LEVEL_TOL)
                .copied()
                .unwrap_or(1.0);
            0.5 * (alpha + b)
        }
    };
    let ident = IdentificationFunction::Quantile { alpha: proxy };
    let path = build_decreasing_path(space, order, y, &ident)?;
    let out = path_inverse(&path)?;
    if out.clipped.iter().any(|c| *c) {
        return Err(IclError::InvariantViolation(
            "quantile path produced an infinite value".into(),
        ));
    }
    Ok(out)
}

/// A group of atoms sharing one candidate value, with the value the check
/// expected there.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupWitness {
    pub group: Vec<usize>,
    pub value: f64,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileFixedPoint {
    /// `x` is the lower quantile of the response given the value of `x`.
    pub classical: bool,
    pub classical_witness: Option<GroupWitness>,
    /// `x` is the smallest minimizer of the expected quantile score over
    /// vectors increasing along the order induced by `x`.
    pub lattice: bool,
    /// The smallest minimizer used for `lattice`.
    pub lattice_values: Vec<f64>,
    /// `lattice_values` equals the lattice lower quantile from the path construction.
    pub path_agrees: bool,
}

impl QuantileFixedPoint {
    pub fn agree(&self) -> bool {
        self.classical == self.lattice
    }
}

/// Both sides of the quantile fixed-point equivalence for a candidate `x`.
///
/// Responses take finitely many values, so the support has no accumulation
/// points. The lattice side uses exhaustive search when the space fits the
/// default oracle budget and the path construction otherwise.
pub fn check_quantile_fixed_point(
    x: &[f64],
    y: &[f64],
    space: &FiniteSpace,
    alpha: f64,
) -> Result<QuantileFixedPoint> {
    check_level(alpha)?;
    check_len("candidate", space.len(), x.len())?;
    check_len("response", space.len(), y.len())?;
    check_finite("candidate", x)?;
    check_finite("response", y)?;

    let mut classical_witness = None;
    for group in level_sets(x, 0.0) {
        let values: Vec<f64> = group.iter().map(|&i| y[i]).collect();
        let weights: Vec<f64> = group.iter().map(|&i| space.weight(i)).collect();
        let q = StepCdf::empirical(&values, &weights)?.lower_quantile(alpha)?;
        if q != x[group[0]] {
            classical_witness = Some(GroupWitness {
                value: x[group[0]],
                expected: q,
                group,
            });
            break;
        }
    }

    let order = Preorder::by_values(x);
    let path_values = conditional_quantile(space, &order, y, alpha, QuantileSide::Lower)?.values;
    let budget = OracleBudget::default();
    let lattice_values = if space.len() <= budget.max_atoms {
        let mut domain = y.to_vec();
        sorted_unique(&mut domain);
        let score = |i: usize, v: f64| quantile_score(alpha, v, y[i]);
        brute_expected_score_min(space, &order, &score, &domain, &budget)?.values
    } else {
        path_values.clone()
    };
    Ok(QuantileFixedPoint {
        classical: classical_witness.is_none(),
        classical_witness,
        lattice: lattice_values == x,
        path_agrees: lattice_values == path_values,
        lattice_values,
    })
}
