//! Time-domain two-step baseline: VAR residuals, then equal-variance ordering
//! and pruned regression on the residuals.

use crate::dag::{break_cycles, SummaryDag};
use crate::error::{Error, Result};
use crate::linalg::{to_complex, RMatrix};
use crate::ordering::{greedy_order, TopologicalOrder};
use crate::spectral::TimeSeriesMatrix;

pub const RIDGE: f64 = 1e-8;
pub const DEFAULT_PRUNE: f64 = 0.1;
/// Threshold on `|B_i|` for lag edges in the collapsed summary graph.
pub const DEFAULT_LAG_PRUNE: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct VarFit {
    /// `A_1..A_q`, with `x(t) ≈ Σ_i A_i x(t − i)` after demeaning.
    pub a: Vec<RMatrix>,
    /// `(T − q) × p`.
    pub residuals: RMatrix,
    pub q: usize,
    /// The normal equations needed the ridge fallback.
    pub ridge: bool,
}

/// Least squares on `p·q` lagged regressors, per equation, on demeaned data.
pub fn fit_var(x: &TimeSeriesMatrix, q: usize) -> Result<VarFit> {
    if !x.is_real() {
        return Err(Error::InvalidInput("VAR fitting needs a real series".into()));
    }
    let data = x.demeaned().real_data();
    let (t, p) = (data.nrows(), data.ncols());
    if q > 0 && t <= q * p + p {
        return Err(Error::InvalidInput(format!("series of length {t} too short for a VAR({q}) in {p} variables")));
    }
    if q == 0 {
        return Ok(VarFit { a: Vec::new(), residuals: data, q, ridge: false });
    }
    let n = t - q;
    let y = data.rows(q, n).into_owned();
    let mut design = RMatrix::zeros(n, p * q);
    for lag in 1..=q {
        design.view_mut((0, (lag - 1) * p), (n, p)).copy_from(&data.rows(q - lag, n));
    }
    let gram = design.transpose() * &design;
    let rhs = design.transpose() * &y;
    let scale = (0..gram.nrows()).map(|i| gram[(i, i)]).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let (beta, ridge) = match gram.clone().cholesky() {
        Some(ch) if (0..gram.nrows()).all(|i| ch.l_dirty()[(i, i)].powi(2) > 1e-12 * scale) => (ch.solve(&rhs), false),
        _ => {
            log::warn!("rank-deficient VAR design; adding ridge {RIDGE}");
            let reg = &gram + RMatrix::identity(p * q, p * q) * (RIDGE * scale);
            let ch = reg.cholesky().ok_or_else(|| Error::NotPositive("regularized VAR design".into()))?;
            (ch.solve(&rhs), true)
        }
    };
    let residuals = &y - &design * &beta;
    let a = (0..q).map(|lag| beta.rows(lag * p, p).transpose()).collect();
    Ok(VarFit { a, residuals, q, ridge })
}

/// Ordering by minimum conditional variance on the residual covariance, then
/// per-node least squares on the predecessors with `|b| < prune` set to zero.
/// Returns `B₀` with `B₀[i][j]` the effect of `j` on `i`.
pub fn eqvar_dag(residuals: &RMatrix, prune: f64) -> Result<(TopologicalOrder, RMatrix)> {
    let (n, p) = (residuals.nrows(), residuals.ncols());
    if n <= p {
        return Err(Error::InvalidInput(format!("need more than {p} residual rows, got {n}")));
    }
    let mean = residuals.row_mean();
    let centered = RMatrix::from_fn(n, p, |r, c| residuals[(r, c)] - mean[c]);
    let cov = centered.transpose() * &centered / n as f64;
    eqvar_from_covariance(&cov, prune)
}

/// [`eqvar_dag`] from a covariance matrix.
pub fn eqvar_from_covariance(cov: &RMatrix, prune: f64) -> Result<(TopologicalOrder, RMatrix)> {
    let p = cov.nrows();
    let perm = greedy_order(&to_complex(cov));
    let mut b0 = RMatrix::zeros(p, p);
    for k in 1..p {
        let node = perm[k];
        let pred = &perm[..k];
        let sub = RMatrix::from_fn(k, k, |a, b| cov[(pred[a], pred[b])]);
        let rhs = nalgebra::DVector::from_iterator(k, pred.iter().map(|&a| cov[(a, node)]));
        let coef = match sub.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => sub.pseudo_inverse(1e-10).map_err(|e| Error::NotPositive(e.to_string()))? * rhs,
        };
        for (a, &j) in pred.iter().enumerate() {
            if coef[a].abs() >= prune {
                b0[(node, j)] = coef[a];
            }
        }
    }
    Ok((TopologicalOrder::new(perm)?, b0))
}

#[derive(Debug, Clone)]
pub struct TseqvarFit {
    pub order: TopologicalOrder,
    pub b0: RMatrix,
    /// `B_i = (I − B₀) A_i`.
    pub lags: Vec<RMatrix>,
    pub var: VarFit,
    /// Support of `B₀`.
    pub instantaneous: SummaryDag,
    /// `B₀` together with lag edges `|B_i| > lag_prune`, made acyclic by dropping
    /// the weakest lag edge on each cycle.
    pub summary: SummaryDag,
}

pub fn tseqvar(x: &TimeSeriesMatrix, q: usize, prune: f64, lag_prune: f64) -> Result<TseqvarFit> {
    let var = fit_var(x, q)?;
    let (order, b0) = eqvar_dag(&var.residuals, prune)?;
    let p = b0.nrows();
    let i_minus_b0 = RMatrix::identity(p, p) - &b0;
    let lags: Vec<RMatrix> = var.a.iter().map(|a| &i_minus_b0 * a).collect();
    let instantaneous = SummaryDag::from_weights(&to_complex(&b0))?.with_labels(x.labels().to_vec())?;

    let mut adj = vec![vec![false; p]; p];
    let mut weight = vec![vec![0.0; p]; p];
    let mut removable = vec![vec![false; p]; p];
    for i in 0..p {
        for j in 0..p {
            if i == j {
                continue;
            }
            if b0[(i, j)] != 0.0 {
                adj[i][j] = true;
                weight[i][j] = f64::INFINITY;
                continue;
            }
            let w = lags.iter().map(|b| b[(i, j)].abs()).fold(0.0, f64::max);
            if w > lag_prune {
                adj[i][j] = true;
                weight[i][j] = w;
                removable[i][j] = true;
            }
        }
    }
    break_cycles(&mut adj, &weight, &removable)?;
    let summary = SummaryDag::from_adjacency(&adj)?.with_labels(x.labels().to_vec())?;
    Ok(TseqvarFit { order, b0, lags, var, instantaneous, summary })
}
