//! ExFreDom: ordering-free summary-DAG learning on DFT blocks.
//!
//! The positive-frequency DFT rows are split into `M` contiguous blocks
//! `D(n)`. Each block gets its own coefficient matrix `B(n)`, tied to a
//! shared `Z` by consensus constraints, and `Z` is pushed towards a DAG by the
//! acyclicity function `h(Z) = tr(exp(Z ⊙ Z*)) − p`:
//!
//! `min Σ_n ℓ(B(n); D(n)) + λ‖Z‖₁  s.t.  h(Z) = 0, B(n) = Z`,
//!
//! with `ℓ(B; D) = ‖D − D Bᵀ‖² / (2N)`. The augmented Lagrangian
//! `αh + ρ₁h² + ρ₂ Σ_n ‖B(n) − Z + U(n)‖²` is minimized by ADMM: (a) each
//! `B(n)` in closed form (row-wise ridge regression), (b) `Z` by L-BFGS on the smooth part followed by complex
//! soft-thresholding, (c) `U(n) ← U(n) + B(n) − Z`; the outer loop sets
//! `α ← α + ρ₁h(Z)` and multiplies `ρ₁` by ten whenever `h` fails to shrink
//! fourfold.
//!
//! Complex matrices enter L-BFGS through the real embedding
//! `[Re B; Im B] ∈ R^{2p×p}`; for a real function `f` the real gradient is
//! `2·[Re ∂f/∂B*; Im ∂f/∂B*]`. Diagonals stay at zero throughout.

use rayon::prelude::*;

use crate::dag::{break_cycles, SummaryDag};
use crate::error::{Error, Result};
use crate::lbfgs::{minimize, LbfgsConfig};
use crate::linalg::{soft_threshold, CMatrix, RMatrix, C64, ZERO};
use crate::spectral::FourierStack;

#[derive(Debug, Clone)]
pub struct ExfredomConfig {
    pub rho1_init: f64,
    pub rho1_max: f64,
    pub rho2: f64,
    pub h_tol: f64,
    /// Bound on `max_n ‖B(n) − Z‖_F`.
    pub consensus_tol: f64,
    pub max_outer: usize,
    /// ADMM sweeps per outer iteration.
    pub max_inner: usize,
    /// Edges are the entries with `|Z_ij| > w_thresh`.
    pub w_thresh: f64,
    pub lbfgs: LbfgsConfig,
}

impl Default for ExfredomConfig {
    fn default() -> Self {
        Self {
            rho1_init: 1.0,
            rho1_max: 1e16,
            rho2: 1.0,
            h_tol: 1e-8,
            consensus_tol: 1e-4,
            max_outer: 100,
            max_inner: 20,
            w_thresh: 0.3,
            lbfgs: LbfgsConfig::default(),
        }
    }
}

pub const DEFAULT_LAMBDA: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct ExfredomDiagnostics {
    pub converged: bool,
    pub outer_iterations: usize,
    pub h: f64,
    /// `h(Z)` after each outer iteration.
    pub h_trace: Vec<f64>,
    pub consensus_residual: f64,
    pub alpha: f64,
    pub rho1: f64,
    pub loss: f64,
    /// Edges dropped by the final cycle repair, as `(from, to)`.
    pub repaired: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct ExfredomFit {
    /// Consensus matrix before thresholding.
    pub z: CMatrix,
    pub blocks: Vec<CMatrix>,
    pub dag: SummaryDag,
    pub diagnostics: ExfredomDiagnostics,
}

/// `h(B) = tr(exp(B ⊙ B*)) − p`.
pub fn acyclicity(b: &CMatrix) -> f64 {
    let p = b.nrows();
    if p == 0 {
        return 0.0;
    }
    let e = b.map(|z| z.norm_sqr()).exp();
    ((0..p).map(|i| e[(i, i)]).sum::<f64>() - p as f64).max(0.0)
}

/// `∂h/∂B* = exp(B ⊙ B*)ᵀ ⊙ B`.
pub fn acyclicity_grad(b: &CMatrix) -> CMatrix {
    let e = b.map(|z| z.norm_sqr()).exp();
    CMatrix::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)] * e[(j, i)])
}

/// `h` and its Wirtinger gradient from one matrix exponential.
fn acyclicity_with_grad(b: &CMatrix) -> (f64, CMatrix) {
    let p = b.nrows();
    let e: RMatrix = b.map(|z| z.norm_sqr()).exp();
    let h = ((0..p).map(|i| e[(i, i)]).sum::<f64>() - p as f64).max(0.0);
    (h, CMatrix::from_fn(p, p, |i, j| b[(i, j)] * e[(j, i)]))
}

fn check_block(b: &CMatrix, block: &CMatrix) -> Result<()> {
    let p = b.nrows();
    if b.ncols() != p || block.ncols() != p {
        return Err(Error::DimensionMismatch(format!(
            "coefficients {}×{} against a block with {} columns",
            p,
            b.ncols(),
            block.ncols()
        )));
    }
    if block.nrows() == 0 {
        return Err(Error::InvalidInput("empty block".into()));
    }
    Ok(())
}

/// `‖D − D Bᵀ‖² / (2N)` over the `N` rows `d` of the block: `Σ ‖d − Bd‖² / (2N)`.
pub fn block_least_squares(b: &CMatrix, block: &CMatrix) -> Result<f64> {
    check_block(b, block)?;
    let r = block - block * b.transpose();
    Ok(r.norm_squared() / (2.0 * block.nrows() as f64))
}

/// `∂ℓ/∂B* = −Rᵀ D̄ / (2N)` with `R = D − D Bᵀ`.
pub fn block_least_squares_grad(b: &CMatrix, block: &CMatrix) -> Result<CMatrix> {
    check_block(b, block)?;
    let r = block - block * b.transpose();
    Ok((r.transpose() * block.map(|z| z.conj())).unscale(-2.0 * block.nrows() as f64))
}

/// DFT rows `k = 1..⌊(T−1)/2⌋` split into `M` contiguous equal blocks; a
/// remainder at the top is dropped.
pub fn fourier_blocks(d: &FourierStack, m: usize) -> Result<Vec<CMatrix>> {
    let half = (d.len().saturating_sub(1)) / 2;
    if m == 0 || half / m < 1 {
        return Err(Error::InvalidInput(format!("{half} positive frequencies cannot form {m} blocks")));
    }
    let size = half / m;
    Ok((0..m).map(|n| d.coeffs().rows(n * size, size).into_owned()).collect())
}

fn to_real(b: &CMatrix) -> Vec<f64> {
    let p = b.nrows();
    let mut x = vec![0.0; 2 * p * p];
    for i in 0..p {
        for j in 0..p {
            x[i * p + j] = b[(i, j)].re;
            x[p * p + i * p + j] = b[(i, j)].im;
        }
    }
    x
}

fn from_real(x: &[f64], p: usize) -> CMatrix {
    CMatrix::from_fn(p, p, |i, j| if i == j { ZERO } else { C64::new(x[i * p + j], x[p * p + i * p + j]) })
}

/// Real gradient `2[Re g; Im g]` of a Wirtinger gradient `g`, diagonal zeroed.
fn write_grad(g: &CMatrix, out: &mut [f64]) {
    let p = g.nrows();
    for i in 0..p {
        for j in 0..p {
            let (re, im) = if i == j { (0.0, 0.0) } else { (2.0 * g[(i, j)].re, 2.0 * g[(i, j)].im) };
            out[i * p + j] = re;
            out[p * p + i * p + j] = im;
        }
    }
}

/// Step (a): `argmin_B ℓ(B; D) + ρ₂‖B − Z + U‖²` with zero diagonal. Row `i`
/// is a ridge regression of column `i` on the others:
/// `(G₋ᵢ₋ᵢ/(2N) + ρ₂I) β = G₋ᵢ,ᵢ/(2N) + ρ₂ tᵢ`, `G = DᴴD`, `t = Z − U`.
fn update_block(gram: &CMatrix, n: f64, z: &CMatrix, u: &CMatrix, rho2: f64) -> CMatrix {
    let p = z.nrows();
    let target = z - u;
    let mut b = CMatrix::zeros(p, p);
    for i in 0..p {
        let idx: Vec<usize> = (0..p).filter(|&j| j != i).collect();
        let k = idx.len();
        if k == 0 {
            continue;
        }
        let mut a = CMatrix::from_fn(k, k, |r, c| gram[(idx[r], idx[c])].unscale(2.0 * n));
        for r in 0..k {
            a[(r, r)] += C64::new(rho2, 0.0);
        }
        let rhs = crate::linalg::CVector::from_fn(k, |r, _| gram[(idx[r], i)].unscale(2.0 * n) + target[(i, idx[r])].scale(rho2));
        let beta = a.cholesky().expect("ridge system is positive definite").solve(&rhs);
        for (r, &j) in idx.iter().enumerate() {
            b[(i, j)] = beta[r];
        }
    }
    b
}

/// Step (b): L-BFGS on `αh + ρ₁h² + ρ₂Σ‖B(n) − Z + U(n)‖²`, then
/// soft-thresholding at `λ/(2ρ₂M)`.
#[allow(clippy::too_many_arguments)]
fn update_consensus(
    blocks: &[CMatrix],
    u: &[CMatrix],
    init: &CMatrix,
    alpha: f64,
    rho1: f64,
    rho2: f64,
    lambda: f64,
    cfg: &LbfgsConfig,
) -> CMatrix {
    let p = init.nrows();
    let m = blocks.len() as f64;
    let mut mean = CMatrix::zeros(p, p);
    for (b, un) in blocks.iter().zip(u) {
        mean += b + un;
    }
    mean.unscale_mut(m);
    let res = minimize(
        |x, g| {
            let z = from_real(x, p);
            let (h, dh) = acyclicity_with_grad(&z);
            let dev = &mean - &z;
            // Σ_n ‖B + U − Z‖² = M‖mean − Z‖² + const
            let grad = dh.scale(alpha + 2.0 * rho1 * h) - dev.scale(rho2 * m);
            write_grad(&grad, g);
            alpha * h + rho1 * h * h + rho2 * m * dev.norm_squared()
        },
        to_real(init),
        cfg,
    );
    let tau = lambda / (2.0 * rho2 * m);
    let z = from_real(&res.x, p);
    z.map(|v| soft_threshold(v, tau))
}

fn consensus_residual(blocks: &[CMatrix], z: &CMatrix) -> f64 {
    blocks.iter().map(|b| (b - z).norm()).fold(0.0, f64::max)
}

/// Fits from a DFT, splitting its positive frequencies into `m` blocks.
pub fn exfredom_fit(d: &FourierStack, m: usize, lambda: f64, cfg: &ExfredomConfig) -> Result<ExfredomFit> {
    let blocks = fourier_blocks(d, m)?;
    exfredom_fit_blocks(&blocks, lambda, cfg)
}

pub fn exfredom_fit_blocks(data: &[CMatrix], lambda: f64, cfg: &ExfredomConfig) -> Result<ExfredomFit> {
    if data.is_empty() {
        return Err(Error::InvalidInput("no data blocks".into()));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let p = data[0].ncols();
    if data.iter().any(|d| d.ncols() != p || d.nrows() == 0) {
        return Err(Error::DimensionMismatch("blocks must share the column count and be non-empty".into()));
    }
    let m = data.len();
    let grams: Vec<CMatrix> = data.iter().map(|d| d.adjoint() * d).collect();
    let mut b = vec![CMatrix::zeros(p, p); m];
    let mut u = vec![CMatrix::zeros(p, p); m];
    let mut z = CMatrix::zeros(p, p);
    let mut alpha = 0.0;
    let mut rho1 = cfg.rho1_init;
    let mut h_prev = f64::INFINITY;
    let mut h_trace = Vec::new();
    let mut converged = false;
    let mut outer = 0;
    let mut resid = f64::INFINITY;
    let mut resid_prev = f64::INFINITY;

    while outer < cfg.max_outer {
        outer += 1;
        for _ in 0..cfg.max_inner {
            let z_prev = z.clone();
            b = grams
                .par_iter()
                .zip(data)
                .zip(u.par_iter())
                .map(|((g, d), un)| update_block(g, d.nrows() as f64, &z, un, cfg.rho2))
                .collect();
            z = update_consensus(&b, &u, &z, alpha, rho1, cfg.rho2, lambda, &cfg.lbfgs);
            for (un, bn) in u.iter_mut().zip(&b) {
                *un += bn - &z;
            }
            resid = consensus_residual(&b, &z);
            let moved = (&z - &z_prev).norm();
            if resid <= cfg.consensus_tol && moved <= cfg.consensus_tol {
                break;
            }
        }
        let loss: f64 = data.iter().zip(&b).map(|(d, bn)| block_least_squares(bn, d).unwrap_or(f64::NAN)).sum();
        if !loss.is_finite() || z.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Diverged(format!("loss {loss} at outer iteration {outer}")));
        }
        let h = acyclicity(&z);
        h_trace.push(h);
        log::debug!("outer {outer}: h {h:.3e}, rho1 {rho1:.1e}, residual {resid:.3e}");
        if h > 0.25 * h_prev && rho1 < cfg.rho1_max && h > cfg.h_tol {
            rho1 = (rho1 * 10.0).min(cfg.rho1_max);
            continue;
        }
        alpha += rho1 * h;
        h_prev = h;
        if h <= cfg.h_tol && resid <= cfg.consensus_tol {
            converged = true;
            break;
        }
        // Acyclic but the consensus has stalled: more sweeps will not help.
        if h <= cfg.h_tol && resid > 0.9 * resid_prev {
            log::debug!("consensus residual stalled at {resid:.3e}");
            break;
        }
        resid_prev = resid;
        if rho1 >= cfg.rho1_max {
            break;
        }
    }

    let loss: f64 = data.iter().zip(&b).map(|(d, bn)| block_least_squares(bn, d).unwrap_or(f64::NAN)).sum();
    let h = acyclicity(&z);
    let mut adj = vec![vec![false; p]; p];
    let mut weight = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..p {
            let w = z[(i, j)].norm();
            if i != j && w > cfg.w_thresh {
                adj[i][j] = true;
                weight[i][j] = w;
            }
        }
    }
    let removable = vec![vec![true; p]; p];
    let repaired = break_cycles(&mut adj, &weight, &removable)?;
    let weights = CMatrix::from_fn(p, p, |i, j| if adj[i][j] { z[(i, j)] } else { ZERO });
    let dag = SummaryDag::from_weights(&weights)?;
    Ok(ExfredomFit {
        z,
        blocks: b,
        dag,
        diagnostics: ExfredomDiagnostics {
            converged,
            outer_iterations: outer,
            h,
            h_trace,
            consensus_residual: resid,
            alpha,
            rho1,
            loss,
            repaired,
        },
    })
}
