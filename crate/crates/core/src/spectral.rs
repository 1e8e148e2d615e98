//! Fourier coefficients and smoothed sample spectral density matrices.
//!
//! Frequencies live on the grid `ω_k = k/T`, `k = 1..T`. The smoothed
//! periodogram averages `N = 2·m_t + 1` neighbouring outer products
//! `d(ω) d^H(ω)` over disjoint, contiguous windows centred at
//! `ω̃_k = ((k−1)·N + m_t + 1)/T`, `k = 1..M`, with
//! `M = ⌊(T/2 − m_t − 1)/N⌋`. Every window lies strictly inside `(0, 1/2)`,
//! so the zero and Nyquist frequencies never contribute.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::linalg::{permute_symmetric, CMatrix, CVector, RMatrix, C64, ZERO};

/// `T × p` observations. Real series keep a zero imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesMatrix {
    data: CMatrix,
    is_real: bool,
    labels: Vec<String>,
}

fn default_labels(p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("X{i}")).collect()
}

impl TimeSeriesMatrix {
    pub fn from_real(data: &RMatrix) -> Result<Self> {
        Self::from_complex_inner(data.map(|x| C64::new(x, 0.0)), true)
    }

    pub fn from_complex(data: CMatrix) -> Result<Self> {
        Self::from_complex_inner(data, false)
    }

    fn from_complex_inner(data: CMatrix, is_real: bool) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidInput("time series must have at least one row and one column".into()));
        }
        for row in 0..data.nrows() {
            for col in 0..data.ncols() {
                let z = data[(row, col)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite { row, col });
                }
            }
        }
        let labels = default_labels(data.ncols());
        Ok(Self { data, is_real, labels })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} series",
                labels.len(),
                self.dim()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Real parts as a real matrix.
    pub fn real_data(&self) -> RMatrix {
        self.data.map(|z| z.re)
    }

    /// Subtracts the column sample means.
    pub fn demeaned(&self) -> Self {
        let t = self.len() as f64;
        let mut data = self.data.clone();
        for mut col in data.column_iter_mut() {
            let mean = col.iter().sum::<C64>() / t;
            col.iter_mut().for_each(|z| *z -= mean);
        }
        Self { data, is_real: self.is_real, labels: self.labels.clone() }
    }

    /// Relabels the columns: column `a` of the result is column `perm[a]` of `self`.
    pub fn permuted_columns(&self, perm: &[usize]) -> Self {
        let data = CMatrix::from_fn(self.len(), perm.len(), |t, a| self.data[(t, perm[a])]);
        let labels = perm.iter().map(|&v| self.labels[v].clone()).collect();
        Self { data, is_real: self.is_real, labels }
    }
}

/// DFT coefficients: row `k − 1` holds `d(ω_k)`, `k = 1..T`, scaled by `1/√T`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierStack {
    coeffs: CMatrix,
}

impl FourierStack {
    pub fn from_coeffs(coeffs: CMatrix) -> Self {
        Self { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn coeffs(&self) -> &CMatrix {
        &self.coeffs
    }

    /// `d(ω_k)` for `k` in `1..=T`.
    pub fn at(&self, k: usize) -> CVector {
        assert!(k >= 1 && k <= self.len(), "frequency index {k} outside 1..={}", self.len());
        self.coeffs.row(k - 1).transpose()
    }

    /// Inverse transform `x(t) = T^{-1/2} Σ_k d(ω_k) e^{2πi k t/T}`, `t = 1..T`.
    pub fn inverse(&self) -> CMatrix {
        let t_len = self.len();
        let fft = FftPlanner::new().plan_fft_inverse(t_len);
        let scale = 1.0 / (t_len as f64).sqrt();
        let mut out = CMatrix::zeros(t_len, self.dim());
        let mut buf = vec![ZERO; t_len];
        for col in 0..self.dim() {
            for k in 1..=t_len {
                buf[k % t_len] = self.coeffs[(k - 1, col)];
            }
            fft.process(&mut buf);
            for t in 1..=t_len {
                out[(t - 1, col)] = buf[t % t_len] * scale;
            }
        }
        out
    }
}

fn forward_columns(data: &CMatrix, fft: &Arc<dyn Fft<f64>>) -> CMatrix {
    let t_len = data.nrows();
    let scale = 1.0 / (t_len as f64).sqrt();
    let mut out = CMatrix::zeros(t_len, data.ncols());
    let mut buf = vec![ZERO; t_len];
    for col in 0..data.ncols() {
        for t in 0..t_len {
            buf[t] = data[(t, col)];
        }
        fft.process(&mut buf);
        // Σ_{t=1}^{T} x(t) e^{-2πikt/T} = e^{-2πik/T} · FFT[k mod T] with 0-based input.
        for k in 1..=t_len {
            let phase = -2.0 * std::f64::consts::PI * (k as f64) / (t_len as f64);
            out[(k - 1, col)] = buf[k % t_len] * C64::from_polar(scale, phase);
        }
    }
    out
}

/// Discrete Fourier transform `d(ω_k) = T^{-1/2} Σ_{t=1}^{T} x(t) e^{-2πi ω_k t}`.
pub fn dft(x: &TimeSeriesMatrix) -> Result<FourierStack> {
    for (idx, z) in x.data().iter().enumerate() {
        if !z.re.is_finite() || !z.im.is_finite() {
            let t = x.len();
            return Err(Error::NonFinite { row: idx % t, col: idx / t });
        }
    }
    let fft = FftPlanner::new().plan_fft_forward(x.len());
    Ok(FourierStack { coeffs: forward_columns(x.data(), &fft) })
}

/// Number of smoothing blocks `M = ⌊(T/2 − m_t − 1)/(2m_t + 1)⌋` (0 if negative).
pub fn block_count(t_len: usize, half_window: usize) -> usize {
    let n = 2 * half_window + 1;
    let num = t_len as f64 / 2.0 - half_window as f64 - 1.0;
    if num < 0.0 {
        0
    } else {
        (num / n as f64).floor() as usize
    }
}

/// Smoothed sample spectral matrices on the block grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralStack {
    mats: Vec<CMatrix>,
    freqs: Vec<f64>,
    half_window: usize,
    series_len: usize,
}

impl SpectralStack {
    /// Builds a stack from explicit matrices; `window_len` is taken as
    /// `2·half_window + 1`. Used for population spectra and for iid blocks.
    pub fn from_parts(mats: Vec<CMatrix>, freqs: Vec<f64>, half_window: usize, series_len: usize) -> Result<Self> {
        if mats.is_empty() {
            return Err(Error::InvalidInput("spectral stack needs at least one matrix".into()));
        }
        if mats.len() != freqs.len() {
            return Err(Error::DimensionMismatch(format!("{} matrices, {} frequencies", mats.len(), freqs.len())));
        }
        let p = mats[0].nrows();
        for m in &mats {
            if m.nrows() != p || m.ncols() != p {
                return Err(Error::DimensionMismatch("spectral matrices must all be p×p".into()));
            }
        }
        Ok(Self { mats, freqs, half_window, series_len })
    }

    pub fn mats(&self) -> &[CMatrix] {
        &self.mats
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn half_window(&self) -> usize {
        self.half_window
    }

    /// `N = 2·m_t + 1`.
    pub fn window_len(&self) -> usize {
        2 * self.half_window + 1
    }

    pub fn series_len(&self) -> usize {
        self.series_len
    }

    /// Number of frequencies `M`.
    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.mats[0].nrows()
    }

    /// `S[perm, perm]` at every frequency.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            mats: self.mats.iter().map(|m| permute_symmetric(m, perm)).collect(),
            freqs: self.freqs.clone(),
            half_window: self.half_window,
            series_len: self.series_len,
        }
    }
}

/// Averages `N` periodogram matrices per block.
pub fn sample_spectral_stack(d: &FourierStack, half_window: usize) -> Result<SpectralStack> {
    let t_len = d.len();
    let p = d.dim();
    let n = 2 * half_window + 1;
    let blocks = block_count(t_len, half_window);
    if blocks < 2 {
        return Err(Error::WindowTooLarge { half_window, len: t_len, blocks, needed: 2 });
    }
    if half_window + 1 < p {
        log::warn!(
            "half-window {half_window} gives N = {n} < p = {p}: sample spectral matrices are singular"
        );
    }
    let coeffs = d.coeffs();
    let mats: Vec<CMatrix> = (1..=blocks)
        .into_par_iter()
        .map(|k| {
            let first = (k - 1) * n + 1;
            let mut s = CMatrix::zeros(p, p);
            // raw indices first..first+N-1, summed in ascending order
            for idx in first..first + n {
                let row = coeffs.row(idx - 1);
                for a in 0..p {
                    let da = row[a];
                    for b in 0..p {
                        s[(a, b)] += da * row[b].conj();
                    }
                }
            }
            s.unscale(n as f64)
        })
        .collect();
    let freqs = (1..=blocks)
        .map(|k| ((k - 1) * n + half_window + 1) as f64 / t_len as f64)
        .collect();
    Ok(SpectralStack { mats, freqs, half_window, series_len: t_len })
}

/// Demean, transform and smooth in one go.
pub fn spectral_stack(x: &TimeSeriesMatrix, half_window: usize) -> Result<SpectralStack> {
    let n = 2 * half_window + 1;
    if x.len() < 2 * n {
        return Err(Error::WindowTooLarge {
            half_window,
            len: x.len(),
            blocks: block_count(x.len(), half_window),
            needed: 2,
        });
    }
    sample_spectral_stack(&dft(&x.demeaned())?, half_window)
}

/// Largest half-window leaving at least `target_blocks` smoothing blocks.
pub fn choose_window(t_len: usize, target_blocks: usize) -> Result<usize> {
    if target_blocks == 0 {
        return Err(Error::InvalidInput("target block count must be positive".into()));
    }
    if t_len < 4 * target_blocks || block_count(t_len, 0) < target_blocks {
        return Err(Error::InvalidInput(format!(
            "cannot fit {target_blocks} smoothing blocks into a series of length {t_len}"
        )));
    }
    let mut m = 0;
    while block_count(t_len, m + 1) >= target_blocks {
        m += 1;
    }
    Ok(m)
}
