//! End-to-end learners on a raw series.

use std::fmt;
use std::str::FromStr;

use crate::admm::{fredom_fit, AdmmConfig};
use crate::baseline::{tseqvar, DEFAULT_LAG_PRUNE, DEFAULT_PRUNE};
use crate::dag::SummaryDag;
use crate::error::{Error, Result};
use crate::exfredom::{exfredom_fit, ExfredomConfig, DEFAULT_LAMBDA};
use crate::ordering::{consensus_order, order_per_frequency, OrderMatrix, TopologicalOrder};
use crate::select::{ebic_path, DEFAULT_GAMMA, DEFAULT_GRID_SIZE};
use crate::spectral::{choose_window, dft, spectral_stack, SpectralStack, TimeSeriesMatrix};

pub const DEFAULT_BLOCKS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Fredom,
    Exfredom,
    Tseqvar,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Fredom, Method::Exfredom, Method::Tseqvar];

    pub fn name(self) -> &'static str {
        match self {
            Method::Fredom => "fredom",
            Method::Exfredom => "exfredom",
            Method::Tseqvar => "tseqvar",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fredom" => Ok(Method::Fredom),
            "exfredom" => Ok(Method::Exfredom),
            "tseqvar" => Ok(Method::Tseqvar),
            other => Err(Error::InvalidInput(format!("unknown method '{other}' (expected fredom, exfredom or tseqvar)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FredomOptions {
    /// Target number of frequency blocks, used when `half_window` is unset.
    pub blocks: usize,
    pub half_window: Option<usize>,
    /// Fixed sparsity level; `None` selects it by eBIC.
    pub lambda: Option<f64>,
    pub grid_size: usize,
    pub gamma: f64,
    pub admm: AdmmConfig,
}

impl Default for FredomOptions {
    fn default() -> Self {
        Self {
            blocks: DEFAULT_BLOCKS,
            half_window: None,
            lambda: None,
            grid_size: DEFAULT_GRID_SIZE,
            gamma: DEFAULT_GAMMA,
            admm: AdmmConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExfredomOptions {
    pub blocks: usize,
    pub lambda: f64,
    pub config: ExfredomConfig,
}

impl Default for ExfredomOptions {
    fn default() -> Self {
        Self { blocks: DEFAULT_BLOCKS, lambda: DEFAULT_LAMBDA, config: ExfredomConfig::default() }
    }
}

#[derive(Debug, Clone)]
pub struct TseqvarOptions {
    pub lag_order: usize,
    pub prune: f64,
    pub lag_prune: f64,
}

impl Default for TseqvarOptions {
    fn default() -> Self {
        Self { lag_order: 1, prune: DEFAULT_PRUNE, lag_prune: DEFAULT_LAG_PRUNE }
    }
}

/// A learned graph with whatever metadata the method produces.
#[derive(Debug, Clone)]
pub struct Learned {
    pub dag: SummaryDag,
    pub order: Option<TopologicalOrder>,
    pub lambda: Option<f64>,
}

/// Stage 1 on a raw series.
#[derive(Debug, Clone)]
pub struct OrderingResult {
    pub stack: SpectralStack,
    pub theta: OrderMatrix,
    pub order: TopologicalOrder,
}

pub fn estimate_order(x: &TimeSeriesMatrix, blocks: usize, half_window: Option<usize>) -> Result<OrderingResult> {
    let m_t = match half_window {
        Some(m) => m,
        None => choose_window(x.len(), blocks)?,
    };
    let stack = spectral_stack(x, m_t)?;
    let theta = order_per_frequency(&stack);
    let order = consensus_order(&theta)?;
    Ok(OrderingResult { stack, theta, order })
}

pub fn learn_fredom(x: &TimeSeriesMatrix, opts: &FredomOptions) -> Result<Learned> {
    let stage1 = estimate_order(x, opts.blocks, opts.half_window)?;
    let (fit, lambda) = match opts.lambda {
        Some(lam) => (fredom_fit(&stage1.stack, &stage1.order, lam, &opts.admm)?, lam),
        None => {
            let path = ebic_path(&stage1.stack, &stage1.order, opts.grid_size, opts.gamma, &opts.admm)?;
            let lam = path.lambda();
            (path.best, lam)
        }
    };
    let dag = fit.dag.with_labels(x.labels().to_vec())?;
    Ok(Learned { dag, order: Some(stage1.order), lambda: Some(lambda) })
}

pub fn learn_exfredom(x: &TimeSeriesMatrix, opts: &ExfredomOptions) -> Result<Learned> {
    let d = dft(x)?;
    let fit = exfredom_fit(&d, opts.blocks, opts.lambda, &opts.config)?;
    let order = fit.dag.topological_order().map(TopologicalOrder::new).transpose()?;
    let dag = fit.dag.with_labels(x.labels().to_vec())?;
    Ok(Learned { dag, order, lambda: Some(opts.lambda) })
}

/// Reports the collapsed summary DAG (instantaneous plus lag edges).
pub fn learn_tseqvar(x: &TimeSeriesMatrix, opts: &TseqvarOptions) -> Result<Learned> {
    let fit = tseqvar(x, opts.lag_order, opts.prune, opts.lag_prune)?;
    Ok(Learned { dag: fit.summary, order: Some(fit.order), lambda: None })
}
