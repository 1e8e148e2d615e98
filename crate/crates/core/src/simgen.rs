//! Ground-truth generators.
//!
//! - [`generate_transfer_ts`]: series with a prescribed frequency-domain DAG
//!   via the transfer-function model `X(t) = Σ_k (I − B(ω_k))^{-1} e^{2πiω_k t} ε(k)`.
//! - [`generate_svar`]: linear structural VARs with contemporaneous effects.
//! - [`generate_nonlinear_svar`]: the 4-variable nonlinear SVAR.
//! - [`generate_cscm`]: iid draws from a complex linear SCM.
//!
//! Every generator is a pure function of its model, length and seed.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::Rng;
use rustfft::FftPlanner;

use crate::dag::SummaryDag;
use crate::error::{Error, Result};
use crate::linalg::{max_abs, CMatrix, RMatrix, C64, ZERO};
use crate::ordering::TopologicalOrder;
use crate::rng::{complex_normal, normal, rng_from_seed, signed_uniform, SimRng};
use crate::spectral::TimeSeriesMatrix;

pub const SVAR_BURN_IN: usize = 500;

/// A simulated dataset with its true summary DAG.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub series: TimeSeriesMatrix,
    pub dag: SummaryDag,
    pub order: TopologicalOrder,
    pub seed: u64,
}

type CoefficientFn = Arc<dyn Fn(f64) -> CMatrix + Send + Sync>;

/// `B(ω)` with a fixed support that is strictly lower triangular under `order`.
#[derive(Clone)]
pub struct FrequencyDagModel {
    order: TopologicalOrder,
    support: SummaryDag,
    coeffs: CoefficientFn,
    paired: bool,
}

impl fmt::Debug for FrequencyDagModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrequencyDagModel")
            .field("order", &self.order)
            .field("support", &self.support)
            .field("hermitian_paired", &self.paired)
            .finish()
    }
}

const PAIRING_PROBES: usize = 37;

impl FrequencyDagModel {
    /// `coeffs(ω)` must vanish off `support` at every frequency; this is
    /// checked on a probe grid.
    pub fn new<F>(order: TopologicalOrder, support: SummaryDag, coeffs: F) -> Result<Self>
    where
        F: Fn(f64) -> CMatrix + Send + Sync + 'static,
    {
        let p = support.dim();
        if order.len() != p {
            return Err(Error::DimensionMismatch(format!("order of {} nodes for {p} series", order.len())));
        }
        if !support.is_topological_order(&order.perm) {
            return Err(Error::InvalidInput("order is not topological for the support".into()));
        }
        let mut paired = true;
        for s in 0..PAIRING_PROBES {
            let omega = (s as f64 + 0.37) / PAIRING_PROBES as f64;
            let b = coeffs(omega);
            if b.nrows() != p || b.ncols() != p {
                return Err(Error::DimensionMismatch("coefficient matrix must be p×p".into()));
            }
            for i in 0..p {
                for j in 0..p {
                    if !support.has_edge(j, i) && b[(i, j)] != ZERO {
                        return Err(Error::InvalidInput(format!("B({omega}) has an entry off the support at ({i}, {j})")));
                    }
                }
            }
            let mirror = coeffs(1.0 - omega);
            if max_abs(&(mirror - b.map(|z| z.conj()))) > 1e-12 * (1.0 + max_abs(&b)) {
                paired = false;
            }
        }
        Ok(Self { order, support, coeffs: Arc::new(coeffs), paired })
    }

    /// Frequency-independent coefficients.
    pub fn constant(order: TopologicalOrder, b: CMatrix) -> Result<Self> {
        let support = SummaryDag::from_weights(&b)?;
        Self::new(order, support, move |_| b.clone())
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    pub fn order(&self) -> &TopologicalOrder {
        &self.order
    }

    pub fn support(&self) -> &SummaryDag {
        &self.support
    }

    /// `B(ω) = B*(1 − ω)` on the probe grid, so generated series are real.
    pub fn is_hermitian_paired(&self) -> bool {
        self.paired
    }

    pub fn coefficients(&self, omega: f64) -> CMatrix {
        (self.coeffs)(omega)
    }

    /// `(I − B(ω))^{-1}`.
    pub fn transfer(&self, omega: f64) -> CMatrix {
        let p = self.dim();
        let a = CMatrix::identity(p, p) - self.coefficients(omega);
        a.try_inverse().expect("I - B is unit triangular under the model order")
    }

    /// `(I − B)^{-1} (I − B)^{-H}`, the spectrum scaled by `T`.
    pub fn normalized_spectrum(&self, omega: f64) -> CMatrix {
        let h = self.transfer(omega);
        &h * h.adjoint()
    }

    /// `S(ω) = T^{-1} (I − B)^{-1} (I − B)^{-H}`.
    pub fn spectrum(&self, omega: f64, t_len: usize) -> CMatrix {
        self.normalized_spectrum(omega).unscale(t_len as f64)
    }
}

/// Exact expected periodogram `E[d(ω) d(ω)^H]` of a transfer-function series
/// of length `T`, for arbitrary `ω`:
/// `Σ_k sin²(πT(ω_k − ω)) / (T² sin²(π(ω_k − ω))) · f(ω_k)` with
/// `f = T·S`. At Fourier frequencies this is `T·S(ω_k)`.
pub fn expected_periodogram(model: &FrequencyDagModel, t_len: usize, omega: f64) -> CMatrix {
    let f: Vec<CMatrix> = (1..=t_len).map(|k| model.normalized_spectrum(k as f64 / t_len as f64)).collect();
    expected_periodogram_from(&f, omega)
}

/// As [`expected_periodogram`], from precomputed `f(ω_k)`, `k = 1..T`.
pub fn expected_periodogram_from(f: &[CMatrix], omega: f64) -> CMatrix {
    let t = f.len() as f64;
    let p = f[0].nrows();
    let mut out = CMatrix::zeros(p, p);
    for (idx, fk) in f.iter().enumerate() {
        let delta = (idx + 1) as f64 / t - omega;
        let den = (std::f64::consts::PI * delta).sin();
        let w = if den.abs() < 1e-14 {
            1.0
        } else {
            let num = (std::f64::consts::PI * t * delta).sin();
            num * num / (t * t * den * den)
        };
        out += fk.scale(w);
    }
    out
}

/// Draws a series of even length `T` from the transfer-function model.
///
/// With Hermitian pairing, `ε(k) ~ N_c(0, I/T)` for `0 < k < T/2`,
/// `ε(T − k) = ε(k)*`, and `ε(k) ~ N_r(0, I/T)` at `k ∈ {T/2, T}`; the
/// series is then real. Otherwise every `ε(k)` is an independent `N_c(0, I/T)`
/// draw and the series is complex.
pub fn generate_transfer_ts(model: &FrequencyDagModel, t_len: usize, seed: u64) -> Result<GroundTruth> {
    if t_len < 4 || t_len % 2 != 0 {
        return Err(Error::InvalidInput(format!("series length must be even and >= 4, got {t_len}")));
    }
    let p = model.dim();
    let mut rng = rng_from_seed(seed);
    let var = 1.0 / t_len as f64;
    let half = t_len / 2;
    let paired = model.is_hermitian_paired();
    // eps[k mod T] holds ε(k)
    let mut eps = vec![vec![ZERO; p]; t_len];
    if paired {
        for k in 1..half {
            for i in 0..p {
                let z = complex_normal(&mut rng, var);
                eps[k][i] = z;
                eps[t_len - k][i] = z.conj();
            }
        }
        for k in [half, 0] {
            for i in 0..p {
                eps[k][i] = C64::new(var.sqrt() * normal(&mut rng), 0.0);
            }
        }
    } else {
        for k in 1..=t_len {
            for i in 0..p {
                eps[k % t_len][i] = complex_normal(&mut rng, var);
            }
        }
    }

    // y_k = (I − B(ω_k))^{-1} ε(k); X(t) = Σ_k y_k e^{2πikt/T}
    let mut cols = vec![vec![ZERO; t_len]; p];
    for k in 1..=t_len {
        let h = model.transfer(k as f64 / t_len as f64);
        let e = DVector::from_column_slice(&eps[k % t_len]);
        let y = h * e;
        for i in 0..p {
            cols[i][k % t_len] = y[i];
        }
    }
    let fft = FftPlanner::new().plan_fft_inverse(t_len);
    for col in &mut cols {
        fft.process(col);
    }
    let data = if paired {
        let mut max_im: f64 = 0.0;
        let real = RMatrix::from_fn(t_len, p, |t, i| {
            let z = cols[i][(t + 1) % t_len];
            max_im = max_im.max(z.im.abs());
            z.re
        });
        debug_assert!(max_im < 1e-9, "imaginary residual {max_im}");
        TimeSeriesMatrix::from_real(&real)?
    } else {
        TimeSeriesMatrix::from_complex(CMatrix::from_fn(t_len, p, |t, i| cols[i][(t + 1) % t_len]))?
    };
    Ok(GroundTruth { series: data, dag: model.support().clone(), order: model.order().clone(), seed })
}

/// Random frequency-domain DAG: identity order, each lower-triangular entry
/// an edge with probability `s`, weight `c₁ cos(4πω) + 1.2i·c₂ sin(2πω)` with
/// `c₁, c₂ ~ U([−1, −0.1] ∪ [0.1, 1])` drawn once per edge.
pub fn make_experiment1_model(k: usize, s: f64, seed: u64) -> Result<FrequencyDagModel> {
    if !(s > 0.0 && s < 1.0) && s != 1.0 {
        return Err(Error::InvalidInput(format!("sparsity must lie in (0, 1], got {s}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut edges = Vec::new();
    let mut amps = Vec::new();
    for i in 0..k {
        for j in 0..i {
            if rng.random_bool(s) {
                edges.push((j, i));
                amps.push((i, j, signed_uniform(&mut rng, 0.1, 1.0), signed_uniform(&mut rng, 0.1, 1.0)));
            }
        }
    }
    let support = SummaryDag::from_edges(k, &edges)?;
    let two_pi = 2.0 * std::f64::consts::PI;
    FrequencyDagModel::new(TopologicalOrder::identity(k), support, move |omega| {
        let mut b = CMatrix::zeros(k, k);
        for &(i, j, c1, c2) in &amps {
            b[(i, j)] = C64::new(c1 * (2.0 * two_pi * omega).cos(), 1.2 * c2 * (two_pi * omega).sin());
        }
        b
    })
}

/// `X(t) = B₀X(t) + Σ_j B_j X(t − j) + ε(t)`, `ε ~ N(0, σ²I)`.
#[derive(Debug, Clone)]
pub struct SvarModel {
    pub b0: RMatrix,
    pub lags: Vec<RMatrix>,
    pub noise_scale: f64,
}

impl SvarModel {
    pub fn new(b0: RMatrix, lags: Vec<RMatrix>, noise_scale: f64) -> Result<Self> {
        let p = b0.nrows();
        if b0.ncols() != p || lags.iter().any(|b| b.nrows() != p || b.ncols() != p) {
            return Err(Error::DimensionMismatch("SVAR matrices must all be p×p".into()));
        }
        if !(noise_scale > 0.0) {
            return Err(Error::InvalidInput("noise scale must be positive".into()));
        }
        let model = Self { b0, lags, noise_scale };
        model.instantaneous_dag()?;
        let rho = model.spectral_radius();
        if !(rho < 1.0) {
            return Err(Error::NonStationary(rho));
        }
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.b0.nrows()
    }

    /// Support of `B₀`.
    pub fn instantaneous_dag(&self) -> Result<SummaryDag> {
        SummaryDag::from_weights(&crate::linalg::to_complex(&self.b0))
    }

    /// Reduced-form coefficients `A_j = (I − B₀)^{-1} B_j`.
    pub fn var_coefficients(&self) -> Vec<RMatrix> {
        let p = self.dim();
        let inv = (RMatrix::identity(p, p) - &self.b0).try_inverse().expect("I - B0 invertible for acyclic B0");
        self.lags.iter().map(|b| &inv * b).collect()
    }

    /// Spectral radius of the companion matrix of the reduced-form VAR.
    pub fn spectral_radius(&self) -> f64 {
        let p = self.dim();
        let q = self.lags.len();
        if q == 0 {
            return 0.0;
        }
        let a = self.var_coefficients();
        let mut comp = RMatrix::zeros(p * q, p * q);
        for (j, aj) in a.iter().enumerate() {
            comp.view_mut((0, j * p), (p, p)).copy_from(aj);
        }
        for r in p..p * q {
            comp[(r, r - p)] = 1.0;
        }
        comp.complex_eigenvalues().iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Inverse spectrum `C(ω)^H C(ω) / σ²` with
    /// `C(ω) = (I − B₀) − Σ_j B_j e^{−2πijω}` (up to the `2π` convention).
    pub fn inverse_spectrum(&self, omega: f64) -> CMatrix {
        let p = self.dim();
        let mut c = crate::linalg::to_complex(&(RMatrix::identity(p, p) - &self.b0));
        for (j, b) in self.lags.iter().enumerate() {
            let phase = C64::from_polar(1.0, -2.0 * std::f64::consts::PI * (j + 1) as f64 * omega);
            c -= crate::linalg::to_complex(b) * phase;
        }
        (c.adjoint() * c).unscale(self.noise_scale * self.noise_scale)
    }
}

/// Simulates `T` observations after a burn-in of [`SVAR_BURN_IN`] steps.
/// The stored truth is the `B₀` support.
pub fn generate_svar(model: &SvarModel, t_len: usize, seed: u64) -> Result<GroundTruth> {
    let rho = model.spectral_radius();
    if !(rho < 1.0) {
        return Err(Error::NonStationary(rho));
    }
    let p = model.dim();
    let mut rng = rng_from_seed(seed);
    let inv = (RMatrix::identity(p, p) - &model.b0).try_inverse().expect("I - B0 invertible for acyclic B0");
    let total = t_len + SVAR_BURN_IN;
    let mut x = RMatrix::zeros(total, p);
    let mut rhs = DVector::<f64>::zeros(p);
    for t in 0..total {
        for i in 0..p {
            rhs[i] = model.noise_scale * normal(&mut rng);
        }
        for (j, b) in model.lags.iter().enumerate() {
            if t > j {
                let prev = x.row(t - j - 1).transpose();
                rhs += b * prev;
            }
        }
        let xt = &inv * &rhs;
        x.row_mut(t).copy_from(&xt.transpose());
    }
    let data = x.rows(SVAR_BURN_IN, t_len).into_owned();
    let dag = model.instantaneous_dag()?;
    let order = TopologicalOrder::new(dag.topological_order().expect("B0 is acyclic"))?;
    Ok(GroundTruth { series: TimeSeriesMatrix::from_real(&data)?, dag, order, seed })
}

fn redraw_until_stationary(mut draw: impl FnMut() -> Result<SvarModel>) -> Result<SvarModel> {
    for _ in 0..1000 {
        match draw() {
            Ok(m) => return Ok(m),
            Err(Error::NonStationary(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::InvalidInput("could not draw a stationary model in 1000 attempts".into()))
}

/// Five-node lag-1 SVAR with instantaneous edges `2→1, 3→4, 4→5` and lagged
/// edges `2→1, 3→1, 3→2, 1→4, 4→5` (1-based), noise `0.4·N(0, 1)`.
/// Instantaneous weights are drawn from `±U[0.5, 0.9]`, lagged ones from `±U[0.2, 0.4]`.
pub fn experiment_a_model(seed: u64) -> Result<SvarModel> {
    let mut rng = rng_from_seed(seed);
    redraw_until_stationary(|| {
        let mut b0 = RMatrix::zeros(5, 5);
        for &(i, j) in &[(0, 1), (3, 2), (4, 3)] {
            b0[(i, j)] = signed_uniform(&mut rng, 0.5, 0.9);
        }
        let mut b1 = RMatrix::zeros(5, 5);
        for &(i, j) in &[(0, 1), (0, 2), (1, 2), (3, 0), (4, 3)] {
            b1[(i, j)] = signed_uniform(&mut rng, 0.2, 0.4);
        }
        SvarModel::new(b0, vec![b1], 0.4)
    })
}

/// Parameters of the clustered SVAR design.
#[derive(Debug, Clone)]
pub struct ClusteredSvarDesign {
    pub clusters: usize,
    pub lag_order: usize,
    /// Probability of an instantaneous edge between two nodes of a cluster.
    pub edge_prob: f64,
    pub b0_range: (f64, f64),
    pub lag_range: (f64, f64),
    /// Probability that a within-cluster lag coefficient is non-zero.
    pub lag_density: f64,
}

impl Default for ClusteredSvarDesign {
    fn default() -> Self {
        Self { clusters: 3, lag_order: 3, edge_prob: 0.8, b0_range: (0.1, 0.3), lag_range: (0.1, 0.3), lag_density: 0.6 }
    }
}

/// `K` nodes in equal clusters with no cross-cluster coefficients, identity
/// noise covariance. Nodes are shuffled within each cluster so that label
/// order carries no information.
pub fn experiment_b_model(k: usize, design: &ClusteredSvarDesign, seed: u64) -> Result<SvarModel> {
    if design.clusters == 0 || k % design.clusters != 0 {
        return Err(Error::InvalidInput(format!("{k} nodes cannot be split into {} clusters", design.clusters)));
    }
    let size = k / design.clusters;
    let mut rng = rng_from_seed(seed);
    redraw_until_stationary(|| {
        let mut b0 = RMatrix::zeros(k, k);
        let mut lags = vec![RMatrix::zeros(k, k); design.lag_order];
        for c in 0..design.clusters {
            let mut nodes: Vec<usize> = (c * size..(c + 1) * size).collect();
            nodes.shuffle(&mut rng);
            for a in 0..size {
                for b in 0..a {
                    if rng.random_bool(design.edge_prob) {
                        b0[(nodes[a], nodes[b])] = signed_uniform(&mut rng, design.b0_range.0, design.b0_range.1);
                    }
                }
            }
            for lag in lags.iter_mut() {
                for &i in &nodes {
                    for &j in &nodes {
                        if rng.random_bool(design.lag_density) {
                            lag[(i, j)] = signed_uniform(&mut rng, design.lag_range.0, design.lag_range.1);
                        }
                    }
                }
            }
        }
        SvarModel::new(b0, lags, 1.0)
    })
}

/// Coefficients `b₁₁, b₁₂, b₁₃, b₂₂, b₃₁, b₃₂, b₃₃, b₄₁, b₄₂` of the nonlinear SVAR.
pub type NonlinearCoefficients = [f64; 9];

pub fn draw_nonlinear_coefficients(rng: &mut SimRng) -> NonlinearCoefficients {
    std::array::from_fn(|_| signed_uniform(rng, 0.1, 0.4))
}

/// True summary DAG of the nonlinear SVAR: `2→1, 1→3, 2→3, 3→4` (1-based).
pub fn nonlinear_truth() -> SummaryDag {
    SummaryDag::from_edges(4, &[(1, 0), (0, 2), (1, 2), (2, 3)]).expect("fixed acyclic graph")
}

const EXP_CLIP: f64 = 10.0;

/// Simulates
/// `X₁(t) = b₁₁X₂(t)² + b₁₂X₁(t−1) + b₁₃X₂(t−1)² + u₁`,
/// `X₂(t) = b₂₂X₂(t−1) + u₂`,
/// `X₃(t) = b₃₁X₁(t)³ + b₃₂X₂(t−1)² + b₃₃X₃(t−1) + u₃`,
/// `X₄(t) = exp(b₄₁X₃(t)) + b₄₂X₄(t−1) + u₄`, with `u ~ N(0, 1)` and the
/// exponent clipped to `[−10, 10]`.
pub fn simulate_nonlinear_svar(b: &NonlinearCoefficients, t_len: usize, rng: &mut SimRng) -> Result<TimeSeriesMatrix> {
    let [b11, b12, b13, b22, b31, b32, b33, b41, b42] = *b;
    let total = t_len + SVAR_BURN_IN;
    let mut x = RMatrix::zeros(total, 4);
    let mut prev = [0.0f64; 4];
    for t in 0..total {
        let u: [f64; 4] = std::array::from_fn(|_| normal(rng));
        let x2 = b22 * prev[1] + u[1];
        let x1 = b11 * x2 * x2 + b12 * prev[0] + b13 * prev[1] * prev[1] + u[0];
        let x3 = b31 * x1.powi(3) + b32 * prev[1] * prev[1] + b33 * prev[2] + u[2];
        let x4 = (b41 * x3).clamp(-EXP_CLIP, EXP_CLIP).exp() + b42 * prev[3] + u[3];
        prev = [x1, x2, x3, x4];
        for (i, v) in prev.iter().enumerate() {
            x[(t, i)] = *v;
        }
    }
    TimeSeriesMatrix::from_real(&x.rows(SVAR_BURN_IN, t_len).into_owned())
}

pub fn generate_nonlinear_svar(t_len: usize, seed: u64) -> Result<GroundTruth> {
    let mut rng = rng_from_seed(seed);
    let b = draw_nonlinear_coefficients(&mut rng);
    let series = simulate_nonlinear_svar(&b, t_len, &mut rng)?;
    Ok(GroundTruth { series, dag: nonlinear_truth(), order: TopologicalOrder::new(vec![1, 0, 2, 3])?, seed })
}

/// Complex linear SCM `Y = BY + ε`, `ε ~ N_c(0, I)`.
#[derive(Debug, Clone)]
pub struct CscmModel {
    pub b: CMatrix,
    pub dag: SummaryDag,
    pub order: TopologicalOrder,
}

impl CscmModel {
    pub fn new(b: CMatrix) -> Result<Self> {
        let dag = SummaryDag::from_weights(&b)?;
        let order = TopologicalOrder::new(dag.topological_order().expect("checked acyclic"))?;
        Ok(Self { b, dag, order })
    }

    pub fn dim(&self) -> usize {
        self.b.nrows()
    }

    /// `(I − B)^{-1}`, the total-effect matrix.
    pub fn total_effects(&self) -> CMatrix {
        let p = self.dim();
        (CMatrix::identity(p, p) - &self.b).try_inverse().expect("I - B invertible for acyclic B")
    }

    /// `(I − B)^{-1}(I − B)^{-H} / T`.
    pub fn population_spectrum(&self, t_len: usize) -> CMatrix {
        let k = self.total_effects();
        (&k * k.adjoint()).unscale(t_len as f64)
    }
}

/// Erdős–Rényi DAG over a random node order with edge probability
/// `min(1, 2/(p − 1))` (expected `p` edges); real and imaginary parts of each
/// coefficient from `±U[0.5, 2]`.
pub fn random_cscm(p: usize, rng: &mut SimRng) -> Result<CscmModel> {
    if p < 2 {
        return Err(Error::InvalidInput(format!("need p >= 2, got {p}")));
    }
    let prob = (2.0 / (p - 1) as f64).min(1.0);
    let mut perm: Vec<usize> = (0..p).collect();
    perm.shuffle(rng);
    let mut b = CMatrix::zeros(p, p);
    for a in 0..p {
        for c in (a + 1)..p {
            if rng.random_bool(prob) {
                b[(perm[c], perm[a])] = C64::new(signed_uniform(rng, 0.5, 2.0), signed_uniform(rng, 0.5, 2.0));
            }
        }
    }
    CscmModel::new(b)
}

/// `n` iid rows `Y = (I − B)^{-1} ε`.
pub fn sample_cscm(model: &CscmModel, n: usize, rng: &mut SimRng) -> Result<TimeSeriesMatrix> {
    let p = model.dim();
    let eps = CMatrix::from_fn(n, p, |_, _| complex_normal(rng, 1.0));
    let y = eps * model.total_effects().transpose();
    TimeSeriesMatrix::from_complex(y)
}

pub fn generate_cscm(p: usize, n: usize, seed: u64) -> Result<GroundTruth> {
    let mut rng = rng_from_seed(seed);
    let model = random_cscm(p, &mut rng)?;
    let series = sample_cscm(&model, n, &mut rng)?;
    Ok(GroundTruth { series, dag: model.dag.clone(), order: model.order, seed })
}
