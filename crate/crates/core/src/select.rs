//! Tuning the sparsity level by extended BIC over a warm-started grid.

use crate::admm::{fredom_fit_from, refit_support, whittle_negloglik, AdmmConfig, CholeskyStack, FredomFit};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::ordering::TopologicalOrder;
use crate::spectral::SpectralStack;

pub const DEFAULT_GRID_SIZE: usize = 20;
pub const DEFAULT_GAMMA: f64 = 0.5;
/// `λ_min = λ_max / MIN_RATIO`.
pub const MIN_RATIO: f64 = 100.0;

#[derive(Debug, Clone)]
pub struct LambdaPath {
    /// Strictly descending.
    pub grid: Vec<f64>,
    pub scores: Vec<f64>,
    pub edges: Vec<usize>,
    pub chosen: usize,
    /// Smallest `λ` giving the empty graph.
    pub lambda_star: f64,
    pub best: FredomFit,
}

impl LambdaPath {
    pub fn lambda(&self) -> f64 {
        self.grid[self.chosen]
    }
}

/// Smallest `λ` at which the all-zero off-diagonal consensus satisfies the
/// optimality conditions: `max_{i>j} |Σ_n N·S̃_ij(n) / √S̃_ii(n)|` in the
/// ordered coordinates.
pub fn lambda_star_bound(stack: &SpectralStack, order: &TopologicalOrder) -> f64 {
    let ordered = stack.permuted(&order.perm);
    let p = ordered.dim();
    let n = ordered.window_len() as f64;
    let mut best: f64 = 0.0;
    for i in 0..p {
        for j in 0..i {
            let mut acc = crate::linalg::ZERO;
            for s in ordered.mats() {
                acc += s[(i, j)] * (n / s[(i, i)].re.sqrt());
            }
            best = best.max(acc.norm());
        }
    }
    best
}

/// Smallest `λ` whose fit has no edges, to 0.5% relative. The analytic bound is
/// exact at the optimum, so it is confirmed with two fits before falling back
/// to bisection.
pub fn lambda_star(stack: &SpectralStack, order: &TopologicalOrder, cfg: &AdmmConfig) -> Result<f64> {
    let bound = lambda_star_bound(stack, order);
    if bound == 0.0 {
        return Ok(0.0);
    }
    let empty = |lam: f64| -> Result<bool> { Ok(fredom_fit_from(stack, order, lam, cfg, None)?.dag.edge_count() == 0) };
    let below = bound * (1.0 - 0.005);
    let mut hi = bound;
    if empty(hi)? && !empty(below)? {
        return Ok(hi);
    }
    while !empty(hi)? {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    while empty(lo)? {
        hi = lo;
        lo /= 2.0;
        if lo < bound * 1e-6 {
            return Ok(hi);
        }
    }
    while (hi - lo) > 0.005 * hi {
        let mid = 0.5 * (lo + hi);
        if empty(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `L(n)` with off-diagonals replaced by the consensus support, the fitted
/// model whose likelihood enters the criterion.
pub fn projected_factors(fit: &FredomFit) -> CholeskyStack {
    let z = &fit.z.z;
    let p = z.nrows();
    let factors: Vec<CMatrix> = fit
        .state
        .l
        .factors()
        .iter()
        .map(|l| CMatrix::from_fn(p, p, |i, j| if i == j { l[(i, i)] } else if i > j { z[(i, j)] } else { l[(i, j)] }))
        .collect();
    CholeskyStack::new(factors).expect("diagonal taken from valid factors")
}

/// `2·W + |E| log(N·M) + 2γ|E| log(p(p−1)/2)`.
pub fn ebic(whittle: f64, edges: usize, n: usize, m: usize, p: usize, gamma: f64) -> f64 {
    let e = edges as f64;
    let pairs = (p * p.saturating_sub(1) / 2).max(1) as f64;
    2.0 * whittle + e * ((n * m) as f64).ln() + 2.0 * gamma * e * pairs.ln()
}

/// Descending log grid from `λ*/2` down to `λ*/200`, fit with warm starts, scored by eBIC.
pub fn ebic_path(
    stack: &SpectralStack,
    order: &TopologicalOrder,
    grid_size: usize,
    gamma: f64,
    cfg: &AdmmConfig,
) -> Result<LambdaPath> {
    if grid_size < 2 {
        return Err(Error::InvalidInput(format!("grid size must be >= 2, got {grid_size}")));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidInput(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    let star = lambda_star(stack, order, cfg)?;
    if star == 0.0 {
        let fit = fredom_fit_from(stack, order, 0.0, cfg, None)?;
        let w = whittle_negloglik(&projected_factors(&fit), &stack.permuted(&order.perm))?;
        let score = ebic(w, fit.dag.edge_count(), stack.window_len(), stack.len(), stack.dim(), gamma);
        return Ok(LambdaPath {
            grid: vec![0.0],
            scores: vec![score],
            edges: vec![fit.dag.edge_count()],
            chosen: 0,
            lambda_star: 0.0,
            best: fit,
        });
    }
    let lmax = star / 2.0;
    let lmin = lmax / MIN_RATIO;
    let grid: Vec<f64> = std::iter::once(star)
        .chain((0..grid_size).map(|g| lmax * (lmin / lmax).powf(g as f64 / (grid_size - 1) as f64)))
        .collect();
    let ordered = stack.permuted(&order.perm);
    let mut scores: Vec<f64> = Vec::with_capacity(grid_size);
    let mut edges = Vec::with_capacity(grid_size);
    let mut best: Option<(usize, FredomFit)> = None;
    let mut prev: Option<FredomFit> = None;
    // Support and refitted likelihood of the previous grid point.
    let mut last: Option<(Vec<(usize, usize)>, f64)> = None;
    for (g, &lam) in grid.iter().enumerate() {
        let fit = fredom_fit_from(stack, order, lam, cfg, prev.as_ref().map(|f| &f.state))?;
        let support = fit.dag.edges();
        let w = match &last {
            Some((sup, w)) if *sup == support => *w,
            _ => {
                let refit = refit_support(stack, &fit, cfg)?;
                whittle_negloglik(&projected_factors(&refit), &ordered)?
            }
        };
        last = Some((support, w));
        let ne = fit.dag.edge_count();
        let score = ebic(w, ne, stack.window_len(), stack.len(), stack.dim(), gamma);
        log::debug!("lambda {lam:.4e}: {ne} edges, eBIC {score:.6e}");
        let better = match &best {
            None => true,
            Some((b, _)) => {
                let tol = 1e-9 * scores[*b].abs().max(1.0);
                score < scores[*b] - tol || (score <= scores[*b] + tol && ne < edges[*b])
            }
        };
        scores.push(score);
        edges.push(ne);
        if better {
            best = Some((g, fit.clone()));
        }
        prev = Some(fit);
    }
    let (chosen, best) = best.expect("grid is non-empty");
    Ok(LambdaPath { grid, scores, edges, chosen, lambda_star: star, best })
}
