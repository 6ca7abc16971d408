//! Finite probability spaces, preorders on atoms and their upper sets.
//!
//! A σ-lattice on a finite set is always the family of upper sets of a
//! preorder, so lattices are carried around as a [`Preorder`]. Upper sets are
//! only listed explicitly by [`enumerate_upper_sets`], which exists for
//! verification paths.

use crate::distributions::{StepCdf, MASS_TOL};
use crate::error::{check_finite, check_len, IclError, Result};

/// Tolerance on the total mass of a [`FiniteSpace`].
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Default cap on the atom count accepted by [`enumerate_upper_sets`].
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

/// A finite probability space: `n` atoms with strictly positive masses summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpace {
    weights: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl FiniteSpace {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(IclError::Empty("weights"));
        }
        check_finite("weights", &weights)?;
        if let Some(w) = weights.iter().find(|w| **w <= 0.0) {
            return Err(IclError::InvalidWeights(format!(
                "weights must be strictly positive, found {w}"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(IclError::InvalidWeights(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            weights,
            labels: None,
        })
    }

    /// Normalizes arbitrary positive masses to a probability vector.
    pub fn from_unnormalized(masses: &[f64]) -> Result<Self> {
        check_finite("weights", masses)?;
        if masses.iter().any(|w| *w <= 0.0) {
            return Err(IclError::InvalidWeights(
                "weights must be strictly positive".into(),
            ));
        }
        let total: f64 = masses.iter().sum();
        Self::new(masses.iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(IclError::Empty("space"));
        }
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        check_len("labels", self.len(), labels.len())?;
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Total mass of a subset of atoms.
    pub fn mass<I: IntoIterator<Item = usize>>(&self, atoms: I) -> f64 {
        atoms.into_iter().map(|i| self.weights[i]).sum()
    }

    /// `E(X 1_A)` for a random variable given by its per-atom values.
    pub fn integrate<I: IntoIterator<Item = usize>>(&self, values: &[f64], atoms: I) -> f64 {
        atoms.into_iter().map(|i| self.weights[i] * values[i]).sum()
    }

    /// Weighted mean of `values` over `atoms`.
    pub fn mean_over(&self, values: &[f64], atoms: &[usize]) -> f64 {
        let (num, den) = atoms.iter().fold((0.0, 0.0), |(num, den), &i| {
            (num + self.weights[i] * values[i], den + self.weights[i])
        });
        num / den
    }
}

const WORD: usize = 64;

/// A reflexive, transitive relation `i ⪯ j` on `0..n`, stored as bit rows.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Preorder {
    n: usize,
    words: usize,
    rows: Vec<u64>,
}

impl Preorder {
    fn empty_relation(n: usize) -> Self {
        let words = n.div_ceil(WORD).max(1);
        Self {
            n,
            words,
            rows: vec![0; n * words],
        }
    }

    fn set(&mut self, i: usize, j: usize) {
        self.rows[i * self.words + j / WORD] |= 1 << (j % WORD);
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    fn close(&mut self) {
        for i in 0..self.n {
            self.set(i, i);
        }
        for k in 0..self.n {
            let row_k = self.row(k).to_vec();
            for i in 0..self.n {
                if self.leq(i, k) {
                    let start = i * self.words;
                    for (w, bits) in row_k.iter().enumerate() {
                        self.rows[start + w] |= bits;
                    }
                }
            }
        }
    }

    /// Validates a dense relation matrix (`leq[i * n + j]` is `i ⪯ j`).
    pub fn from_matrix(n: usize, leq: &[bool]) -> Result<Self> {
        check_len("relation matrix", n * n, leq.len())?;
        let mut order = Self::empty_relation(n);
        for i in 0..n {
            for j in 0..n {
                if leq[i * n + j] {
                    order.set(i, j);
                }
            }
        }
        for i in 0..n {
            if !order.leq(i, i) {
                return Err(IclError::InvalidPreorder(format!("not reflexive at {i}")));
            }
        }
        for i in 0..n {
            for j in 0..n {
                if !order.leq(i, j) {
                    continue;
                }
                for k in 0..n {
                    if order.leq(j, k) && !order.leq(i, k) {
                        return Err(IclError::InvalidPreorder(format!(
                            "not transitive: {i} ⪯ {j} ⪯ {k}"
                        )));
                    }
                }
            }
        }
        Ok(order)
    }

    /// Reflexive-transitive closure of the given pairs.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut order = Self::empty_relation(n);
        for &(i, j) in pairs {
            if i >= n || j >= n {
                return Err(IclError::InvalidPreorder(format!(
                    "pair ({i}, {j}) out of range for {n} elements"
                )));
            }
            order.set(i, j);
        }
        order.close();
        Ok(order)
    }

    /// Only the reflexive pairs.
    pub fn antichain(n: usize) -> Self {
        let mut order = Self::empty_relation(n);
        for i in 0..n {
            order.set(i, i);
        }
        order
    }

    /// The chain `0 ⪯ 1 ⪯ … ⪯ n-1`.
    pub fn chain(n: usize) -> Self {
        let mut order = Self::empty_relation(n);
        for i in 0..n {
            for j in i..n {
                order.set(i, j);
            }
        }
        order
    }

    /// Total preorder `i ⪯ j` iff `values[i] <= values[j]`.
    pub fn by_values(values: &[f64]) -> Self {
        let n = values.len();
        let mut order = Self::empty_relation(n);
        for i in 0..n {
            for j in 0..n {
                if values[i] <= values[j] {
                    order.set(i, j);
                }
            }
        }
        order
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn leq(&self, i: usize, j: usize) -> bool {
        (self.rows[i * self.words + j / WORD] >> (j % WORD)) & 1 == 1
    }

    pub fn comparable(&self, i: usize, j: usize) -> bool {
        self.leq(i, j) || self.leq(j, i)
    }

    /// `i ⪯ j` and `j ⪯ i`.
    pub fn equivalent(&self, i: usize, j: usize) -> bool {
        self.leq(i, j) && self.leq(j, i)
    }

    /// The dual preorder; its upper sets are the complements of ours.
    pub fn reversed(&self) -> Self {
        let mut order = Self::empty_relation(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                if self.leq(j, i) {
                    order.set(i, j);
                }
            }
        }
        order
    }

    /// Every relation of `other` also holds here, i.e. our upper-set lattice is
    /// contained in the lattice of `other`.
    pub fn extends(&self, other: &Preorder) -> bool {
        self.n == other.n
            && self
                .rows
                .iter()
                .zip(&other.rows)
                .all(|(mine, theirs)| theirs & !mine == 0)
    }

    /// Relation restricted to `members`, re-indexed `0..members.len()`.
    pub fn restrict(&self, members: &[usize]) -> Self {
        let m = members.len();
        let mut order = Self::empty_relation(m);
        for (a, &i) in members.iter().enumerate() {
            for (b, &j) in members.iter().enumerate() {
                if self.leq(i, j) {
                    order.set(a, b);
                }
            }
        }
        order
    }

    /// Classes of mutually equivalent elements, ordered by smallest member.
    pub fn equivalence_classes(&self) -> Vec<Vec<usize>> {
        let mut class_of = vec![usize::MAX; self.n];
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for i in 0..self.n {
            if class_of[i] != usize::MAX {
                continue;
            }
            let id = classes.len();
            let members: Vec<usize> = (i..self.n).filter(|&j| self.equivalent(i, j)).collect();
            for &j in &members {
                class_of[j] = id;
            }
            classes.push(members);
        }
        classes
    }

    /// Quotient partial order on the equivalence classes.
    pub fn quotient(&self) -> (Vec<Vec<usize>>, Preorder) {
        let classes = self.equivalence_classes();
        let reps: Vec<usize> = classes.iter().map(|c| c[0]).collect();
        let order = self.restrict(&reps);
        (classes, order)
    }

    /// First incomparable pair, if any.
    pub fn incomparable_pair(&self) -> Option<(usize, usize)> {
        (0..self.n)
            .flat_map(|i| (i + 1..self.n).map(move |j| (i, j)))
            .find(|&(i, j)| !self.comparable(i, j))
    }

    pub fn is_total(&self) -> bool {
        self.incomparable_pair().is_none()
    }

    /// Elements sorted so that `i` precedes `j` whenever `i ≺ j` strictly.
    pub fn linear_extension(&self) -> Vec<usize> {
        let below: Vec<usize> = (0..self.n)
            .map(|i| (0..self.n).filter(|&k| self.leq(k, i)).count())
            .collect();
        let mut idx: Vec<usize> = (0..self.n).collect();
        idx.sort_by_key(|&i| (below[i], i));
        idx
    }

    /// All pairs `(i, j)` with `i ⪯ j`, `i != j`.
    pub fn strict_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j && self.leq(i, j) {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }

    /// Bit masks `up[i] = {j : i ⪯ j}`; only valid for `n <= 64`.
    pub(crate) fn up_masks(&self) -> Vec<u64> {
        debug_assert!(self.n <= 64);
        (0..self.n).map(|i| self.row(i)[0]).collect()
    }
}

/// A subset of atoms closed upward under a preorder.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UpperSet {
    members: Vec<bool>,
}

impl UpperSet {
    /// Validates upward closure.
    pub fn new(order: &Preorder, members: Vec<bool>) -> Result<Self> {
        check_len("upper set", order.len(), members.len())?;
        for i in (0..members.len()).filter(|&i| members[i]) {
            if let Some(j) = (0..members.len()).find(|&j| order.leq(i, j) && !members[j]) {
                return Err(IclError::InvalidPreorder(format!(
                    "set is not upward closed: contains {i} but not {j}"
                )));
            }
        }
        Ok(Self { members })
    }

    pub fn from_indices(order: &Preorder, indices: &[usize]) -> Result<Self> {
        let mut members = vec![false; order.len()];
        for &i in indices {
            if i >= members.len() {
                return Err(IclError::DimensionMismatch {
                    what: "atom index",
                    expected: members.len(),
                    got: i,
                });
            }
            members[i] = true;
        }
        Self::new(order, members)
    }

    pub(crate) fn from_members_unchecked(members: Vec<bool>) -> Self {
        Self { members }
    }

    pub(crate) fn from_mask(n: usize, mask: u64) -> Self {
        Self {
            members: (0..n).map(|i| (mask >> i) & 1 == 1).collect(),
        }
    }

    pub fn empty(n: usize) -> Self {
        Self {
            members: vec![false; n],
        }
    }

    pub fn full(n: usize) -> Self {
        Self {
            members: vec![true; n],
        }
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members[i]
    }

    pub fn members(&self) -> &[bool] {
        &self.members
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.members.len())
            .filter(|&i| self.members[i])
            .collect()
    }

    pub fn count(&self) -> usize {
        self.members.iter().filter(|m| **m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|m| *m)
    }

    pub fn is_full(&self) -> bool {
        self.members.iter().all(|m| *m)
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            members: self
                .members
                .iter()
                .zip(&other.members)
                .map(|(a, b)| *a || *b)
                .collect(),
        }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self {
            members: self
                .members
                .iter()
                .zip(&other.members)
                .map(|(a, b)| *a && *b)
                .collect(),
        }
    }

    pub fn complement(&self) -> Vec<bool> {
        self.members.iter().map(|m| !m).collect()
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.members
            .iter()
            .zip(&other.members)
            .all(|(a, b)| !*a || *b)
    }

    pub fn is_upper_for(&self, order: &Preorder) -> bool {
        self.members.len() == order.len() && UpperSet::new(order, self.members.clone()).is_ok()
    }
}

/// Real covariates: `n` rows of `p >= 1` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateTable {
    rows: Vec<Vec<f64>>,
    p: usize,
}

impl CovariateTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let p = rows
            .first()
            .map(Vec::len)
            .ok_or(IclError::Empty("covariates"))?;
        if p == 0 {
            return Err(IclError::Empty("covariate columns"));
        }
        for row in &rows {
            check_len("covariate row", p, row.len())?;
            check_finite("covariates", row)?;
        }
        Ok(Self { rows, p })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn columns(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[c]).collect()
    }
}

/// Componentwise order on the covariate rows. Tied rows become equivalent atoms.
pub fn preorder_from_covariates(space: &FiniteSpace, table: &CovariateTable) -> Result<Preorder> {
    check_len("covariate table", space.len(), table.len())?;
    let n = table.len();
    let mut order = Preorder::empty_relation(n);
    for i in 0..n {
        for j in 0..n {
            if table.row(i).iter().zip(table.row(j)).all(|(a, b)| a <= b) {
                order.set(i, j);
            }
        }
    }
    Ok(order)
}

/// First-order stochastic dominance: `i ⪯ j` iff `F_i(x) >= F_j(x)` for all `x`.
///
/// Both cdfs are piecewise constant, so the comparison on the merged jump grid
/// is exhaustive. Masses are compared with tolerance [`MASS_TOL`]; the result is
/// closed transitively so that it is always a preorder.
pub fn preorder_from_stochastic_order(cdfs: &[StepCdf]) -> Preorder {
    let n = cdfs.len();
    let mut grid: Vec<f64> = cdfs
        .iter()
        .flat_map(|f| f.points().iter().copied())
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let values: Vec<Vec<f64>> = cdfs
        .iter()
        .map(|f| grid.iter().map(|&x| f.cdf(x)).collect())
        .collect();
    let mut order = Preorder::empty_relation(n);
    for i in 0..n {
        for j in 0..n {
            if values[i]
                .iter()
                .zip(&values[j])
                .all(|(fi, fj)| *fi >= *fj - MASS_TOL)
            {
                order.set(i, j);
            }
        }
    }
    order.close();
    order
}

/// Every upward-closed subset, in increasing order of the atom bit mask.
pub fn enumerate_upper_sets(order: &Preorder) -> Result<Vec<UpperSet>> {
    enumerate_upper_sets_capped(order, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_upper_sets_capped(order: &Preorder, cap: usize) -> Result<Vec<UpperSet>> {
    Ok(upper_set_masks(order, cap)?
        .into_iter()
        .map(|m| UpperSet::from_mask(order.len(), m))
        .collect())
}

pub(crate) fn upper_set_masks(order: &Preorder, cap: usize) -> Result<Vec<u64>> {
    let n = order.len();
    if n > cap.min(63) {
        return Err(IclError::CapExceeded { n, cap });
    }
    let up = order.up_masks();
    let masks = (0..1u64 << n)
        .filter(|&mask| {
            (0..n)
                .filter(|i| (mask >> i) & 1 == 1)
                .all(|i| up[i] & !mask == 0)
        })
        .collect();
    Ok(masks)
}

/// `leq(i, j) ⇒ values[i] <= values[j]`, i.e. every superlevel set is an upper set.
pub fn is_upper_measurable(order: &Preorder, values: &[f64]) -> bool {
    is_upper_measurable_tol(order, values, 0.0)
}

/// As [`is_upper_measurable`], tolerating violations up to `tol`.
pub fn is_upper_measurable_tol(order: &Preorder, values: &[f64], tol: f64) -> bool {
    values.len() == order.len()
        && (0..order.len())
            .all(|i| (0..order.len()).all(|j| !order.leq(i, j) || values[i] <= values[j] + tol))
}
