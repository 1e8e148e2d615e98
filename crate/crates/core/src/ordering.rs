//! Stage 1: topological ordering from per-frequency conditional variances.
//!
//! At every frequency the node with the smallest variance conditional on the
//! already selected nodes is appended to the ordering. Under equal error
//! variances a source always has the smallest such variance, so each row of
//! the resulting [`OrderMatrix`] is a topological ordering of the summary DAG;
//! the consensus is the most frequent row.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{is_permutation, CMatrix, CVector, HermitianSolver};
use crate::spectral::SpectralStack;

/// Eigenvalue cutoff (relative to the largest) for singular conditioning sets.
pub const PINV_CUTOFF: f64 = 1e-10;
/// Relative distance under which two conditional variances count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Per-frequency orderings (0-based node indices), one row per frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderMatrix {
    rows: Vec<Vec<usize>>,
    weights: Option<Vec<f64>>,
}

impl OrderMatrix {
    pub fn new(rows: Vec<Vec<usize>>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        for (k, row) in rows.iter().enumerate() {
            if !is_permutation(row, p) {
                return Err(Error::InvalidInput(format!("row {k} is not a permutation of 0..{p}")));
            }
        }
        Ok(Self { rows, weights: None })
    }

    /// Frequency importance weights; normalized to sum to one.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.rows.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} rows",
                weights.len(),
                self.rows.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidInput("weights must not all be zero".into()));
        }
        self.weights = Some(weights.iter().map(|w| w / total).collect());
        Ok(self)
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }
}

/// A permutation of the nodes: `perm[k]` is the node placed `k`-th.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologicalOrder {
    pub perm: Vec<usize>,
    /// Weighted fraction of frequencies whose ordering equals `perm`.
    pub support: f64,
}

impl TopologicalOrder {
    pub fn identity(p: usize) -> Self {
        Self { perm: (0..p).collect(), support: 1.0 }
    }

    pub fn new(perm: Vec<usize>) -> Result<Self> {
        if !is_permutation(&perm, perm.len()) {
            return Err(Error::InvalidInput(format!("{perm:?} is not a permutation")));
        }
        Ok(Self { perm, support: 1.0 })
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }
}

/// `S_jj − S_{j,Θ} S_{Θ,Θ}^{-1} S_{Θ,j}` (real part).
pub fn conditional_variance(s: &CMatrix, selected: &[usize], j: usize) -> Result<f64> {
    let p = s.nrows();
    if j >= p {
        return Err(Error::InvalidInput(format!("candidate {j} outside 0..{p}")));
    }
    if selected.contains(&j) {
        return Err(Error::InvalidInput(format!("candidate {j} already selected")));
    }
    if let Some(&bad) = selected.iter().find(|&&v| v >= p) {
        return Err(Error::InvalidInput(format!("selected node {bad} outside 0..{p}")));
    }
    let ctx = Conditioner::new(s, selected);
    Ok(ctx.variance(s, j))
}

/// Factorization of `S_{Θ,Θ}` reused across candidates.
struct Conditioner<'a> {
    selected: &'a [usize],
    solver: Option<HermitianSolver>,
}

impl<'a> Conditioner<'a> {
    fn new(s: &CMatrix, selected: &'a [usize]) -> Self {
        let solver = (!selected.is_empty()).then(|| {
            let k = selected.len();
            let sub = CMatrix::from_fn(k, k, |a, b| s[(selected[a], selected[b])]);
            HermitianSolver::new(&sub, PINV_CUTOFF)
        });
        Self { selected, solver }
    }

    fn variance(&self, s: &CMatrix, j: usize) -> f64 {
        let sjj = s[(j, j)].re;
        match &self.solver {
            None => sjj,
            Some(solver) => {
                let v = CVector::from_iterator(self.selected.len(), self.selected.iter().map(|&a| s[(a, j)]));
                let w = solver.solve(&v);
                sjj - v.dotc(&w).re
            }
        }
    }
}

fn is_strictly_less(candidate: f64, best: f64) -> bool {
    candidate < best - TIE_TOLERANCE * best.abs().max(candidate.abs())
}

/// Greedy minimum-conditional-variance ordering of a single Hermitian matrix.
pub fn greedy_order(s: &CMatrix) -> Vec<usize> {
    let p = s.nrows();
    let mut order: Vec<usize> = Vec::with_capacity(p);
    let mut used = vec![false; p];
    for _ in 0..p {
        let ctx = Conditioner::new(s, &order);
        let mut best: Option<(usize, f64)> = None;
        for j in (0..p).filter(|&j| !used[j]) {
            let v = ctx.variance(s, j);
            match best {
                Some((_, bv)) if !is_strictly_less(v, bv) => {}
                _ => best = Some((j, v)),
            }
        }
        let (j, _) = best.expect("at least one unselected node");
        used[j] = true;
        order.push(j);
    }
    order
}

/// One ordering per frequency of the stack.
pub fn order_per_frequency(stack: &SpectralStack) -> OrderMatrix {
    let rows = stack.mats().par_iter().map(greedy_order).collect();
    OrderMatrix { rows, weights: None }
}

/// Most frequent (weighted) row; ties go to the row seen at the lowest frequency.
pub fn consensus_order(theta: &OrderMatrix) -> Result<TopologicalOrder> {
    let rows = theta.rows();
    if rows.is_empty() {
        return Err(Error::InvalidInput("order matrix has no rows".into()));
    }
    let m = rows.len();
    let uniform = vec![1.0 / m as f64; m];
    let weights = theta.weights().unwrap_or(&uniform);
    // (first occurrence, accumulated weight)
    let mut tallies: Vec<(usize, f64)> = Vec::new();
    for (k, row) in rows.iter().enumerate() {
        match tallies.iter_mut().find(|(first, _)| rows[*first] == *row) {
            Some(entry) => entry.1 += weights[k],
            None => tallies.push((k, weights[k])),
        }
    }
    let mut best = tallies[0];
    for &entry in &tallies[1..] {
        if entry.1 > best.1 + 1e-12 {
            best = entry;
        }
    }
    Ok(TopologicalOrder { perm: rows[best.0].clone(), support: best.1.min(1.0) })
}
