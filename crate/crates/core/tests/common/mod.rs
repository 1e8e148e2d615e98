//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use fredom::admm::{effective_rho, initial_state, AdmmConfig, AdmmState, CholeskyStack, ConsensusFactor};
use fredom::lbfgs::{minimize, LbfgsConfig};
use fredom::linalg::{CMatrix, CVector, RMatrix, C64, ZERO};
use fredom::rng::{normal, rng_from_seed, signed_uniform, SimRng};
use fredom::simgen::{expected_periodogram_from, generate_transfer_ts, make_experiment1_model, FrequencyDagModel};
use fredom::spectral::{dft, spectral_stack, SpectralStack};
use fredom::SummaryDag;
use rand::seq::SliceRandom;
use rand::Rng;

/// Every DAG on `p` labelled nodes (feasible for `p ≤ 4`).
pub fn all_dags(p: usize) -> Vec<SummaryDag> {
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|a| ((a + 1)..p).map(move |b| (a, b))).collect();
    let mut out = Vec::new();
    let total = 3usize.pow(pairs.len() as u32);
    for code in 0..total {
        let mut c = code;
        let mut edges = Vec::new();
        for &(a, b) in &pairs {
            match c % 3 {
                1 => edges.push((a, b)),
                2 => edges.push((b, a)),
                _ => {}
            }
            c /= 3;
        }
        if let Ok(g) = SummaryDag::from_edges(p, &edges) {
            out.push(g);
        }
    }
    out
}

pub fn random_dag(p: usize, prob: f64, rng: &mut SimRng) -> SummaryDag {
    let mut perm: Vec<usize> = (0..p).collect();
    perm.shuffle(rng);
    let mut edges = Vec::new();
    for a in 0..p {
        for b in (a + 1)..p {
            if rng.random_bool(prob) {
                edges.push((perm[a], perm[b]));
            }
        }
    }
    SummaryDag::from_edges(p, &edges).unwrap()
}

/// Pair states of a digraph without 2-cycles, as a base-3 code.
fn encode(g: &SummaryDag) -> usize {
    let p = g.dim();
    let mut code = 0;
    let mut mul = 1;
    for a in 0..p {
        for b in (a + 1)..p {
            let s = if g.has_edge(a, b) { 1 } else if g.has_edge(b, a) { 2 } else { 0 };
            code += s * mul;
            mul *= 3;
        }
    }
    code
}

/// Fewest single-edge additions, deletions or reversals turning `est` into
/// `truth`, by breadth-first search over all digraphs without 2-cycles.
pub fn shd_bfs(est: &SummaryDag, truth: &SummaryDag) -> usize {
    let p = est.dim();
    let npairs = p * (p - 1) / 2;
    let (start, goal) = (encode(est), encode(truth));
    let pow: Vec<usize> = (0..npairs).map(|k| 3usize.pow(k as u32)).collect();
    let mut dist: HashMap<usize, usize> = HashMap::from([(start, 0)]);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        let d = dist[&s];
        if s == goal {
            return d;
        }
        for &pk in &pow {
            let cur = (s / pk) % 3;
            for next in 0..3 {
                if next == cur {
                    continue;
                }
                // add / delete / reverse: any change of one pair's state
                let t = s - cur * pk + next * pk;
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(t) {
                    e.insert(d + 1);
                    queue.push_back(t);
                }
            }
        }
    }
    unreachable!("every state is reachable")
}

fn weights_for(truth: &SummaryDag, rng: &mut SimRng) -> RMatrix {
    let p = truth.dim();
    RMatrix::from_fn(p, p, |to, from| if truth.has_edge(from, to) { signed_uniform(rng, 0.5, 1.5) } else { 0.0 })
}

/// Structural intervention distance by checking, in linear Gaussian models
/// over `truth` with random weights, whether adjusting for `Pa_est(i)`
/// reproduces the total effect of `i` on `j` (zero when `j ∈ Pa_est(i)`).
pub fn sid_numeric(est: &SummaryDag, truth: &SummaryDag, seed: u64) -> usize {
    let p = truth.dim();
    let mut rng = rng_from_seed(seed);
    let draws: Vec<(RMatrix, RMatrix)> = (0..3)
        .map(|_| {
            let b = weights_for(truth, &mut rng);
            let total = (RMatrix::identity(p, p) - &b).try_inverse().unwrap();
            let cov = &total * total.transpose();
            (total, cov)
        })
        .collect();
    let mut count = 0;
    for i in 0..p {
        let pa = est.parents(i);
        for j in (0..p).filter(|&j| j != i) {
            let wrong = draws.iter().any(|(total, cov)| {
                let truth_effect = total[(j, i)];
                let implied = if pa.contains(&j) {
                    0.0
                } else {
                    let set: Vec<usize> = std::iter::once(i).chain(pa.iter().copied()).collect();
                    let k = set.len();
                    let sxx = RMatrix::from_fn(k, k, |a, b| cov[(set[a], set[b])]);
                    let sxy = RMatrix::from_fn(k, 1, |a, _| cov[(set[a], j)]);
                    (sxx.try_inverse().unwrap() * sxy)[(0, 0)]
                };
                (implied - truth_effect).abs() > 1e-8
            });
            count += wrong as usize;
        }
    }
    count
}

pub fn random_hpd(p: usize, rng: &mut SimRng) -> CMatrix {
    let a = CMatrix::from_fn(p, p + 3, |_, _| C64::new(normal(rng), normal(rng)));
    (&a * a.adjoint()).unscale((p + 3) as f64) + CMatrix::identity(p, p).scale(0.05)
}

pub fn random_lower(p: usize, rng: &mut SimRng) -> CMatrix {
    CMatrix::from_fn(p, p, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => C64::new(normal(rng), normal(rng)),
        std::cmp::Ordering::Equal => C64::new(0.5 + rng.random::<f64>(), 0.0),
        std::cmp::Ordering::Less => ZERO,
    })
}

pub fn cgauss(rng: &mut SimRng) -> C64 {
    C64::new(normal(rng), normal(rng))
}

pub fn sample_stack(k: usize, seed: u64) -> SpectralStack {
    let model = make_experiment1_model(k, 0.3, seed).unwrap();
    let truth = generate_transfer_ts(&model, 1000, seed + 1).unwrap();
    spectral_stack(&truth.series, 27).unwrap()
}

pub fn tight() -> AdmmConfig {
    AdmmConfig { max_iter: 20_000, abs_tol: 1e-10, rel_tol: 1e-9, ..AdmmConfig::default() }
}

// Row objective h(x) over the real embedding. Variables: (re, im) of the
// first k entries, then the log of the real diagonal entry.

pub struct RowProblem {
    pub a: CMatrix,
    pub c: Vec<C64>,
    pub rho: f64,
    pub n: f64,
}

impl RowProblem {
    pub fn random(k: usize, rng: &mut SimRng) -> Self {
        let a = random_hpd(k + 1, rng);
        let c = (0..k).map(|_| cgauss(rng).scale(0.5)).collect();
        Self { a, c, rho: 0.1 + 3.0 * rng.random::<f64>(), n: (1 + 2 * rng.random_range(0..6)) as f64 }
    }

    pub fn h(&self, x: &[C64]) -> f64 {
        let k = x.len() - 1;
        let xv = CVector::from_column_slice(x);
        let quad = (xv.transpose() * &self.a * xv.conjugate())[(0, 0)].re;
        let pen: f64 = (0..k).map(|j| (x[j] - self.c[j]).norm_sqr()).sum();
        self.n * (-2.0 * x[k].re.ln() + quad) + self.rho * pen
    }

    /// `∂h/∂x_j^*`, from the Wirtinger calculus.
    pub fn wirtinger(&self, x: &[C64]) -> Vec<C64> {
        let k = x.len() - 1;
        let xa = CVector::from_column_slice(x).transpose() * &self.a;
        (0..=k)
            .map(|j| {
                let mut g = xa[j].scale(self.n);
                if j < k {
                    g += (x[j] - self.c[j]).scale(self.rho);
                } else {
                    g -= C64::new(self.n / x[k].re, 0.0);
                }
                g
            })
            .collect()
    }

    pub fn unpack(v: &[f64]) -> Vec<C64> {
        let k = (v.len() - 1) / 2;
        let mut x: Vec<C64> = (0..k).map(|j| C64::new(v[2 * j], v[2 * j + 1])).collect();
        x.push(C64::new(v[2 * k].exp(), 0.0));
        x
    }

    pub fn minimize_numerically(&self) -> Vec<C64> {
        let k = self.c.len();
        let f = |v: &[f64], g: &mut [f64]| {
            let x = Self::unpack(v);
            let w = self.wirtinger(&x);
            for j in 0..k {
                g[2 * j] = 2.0 * w[j].re;
                g[2 * j + 1] = 2.0 * w[j].im;
            }
            g[2 * k] = 2.0 * w[k].re * x[k].re;
            self.h(&x)
        };
        let cfg = LbfgsConfig { max_iter: 5000, grad_tol: 1e-12, f_tol: 0.0, ..LbfgsConfig::default() };
        let res = minimize(f, vec![0.0; 2 * k + 1], &cfg);
        Self::unpack(&res.x)
    }
}

pub fn central_gradient(prob: &RowProblem, x: &[C64], j: usize) -> C64 {
    let step = 1e-6 * (1.0 + x[j].norm());
    let eval = |d: C64| {
        let mut y = x.to_vec();
        y[j] += d;
        prob.h(&y)
    };
    let d_re = (eval(C64::new(step, 0.0)) - eval(C64::new(-step, 0.0))) / (2.0 * step);
    let d_im = (eval(C64::new(0.0, step)) - eval(C64::new(0.0, -step))) / (2.0 * step);
    // ∂h/∂x^* = ½(∂h/∂Re x + i ∂h/∂Im x)
    C64::new(0.5 * d_re, 0.5 * d_im)
}

pub fn cold_state(stack: &SpectralStack, lambda: f64) -> AdmmState {
    let p = stack.dim();
    let rho = effective_rho(stack, AdmmConfig::default().rho);
    let mut state = initial_state(stack, rho, lambda).unwrap();
    state.l = CholeskyStack::new(vec![CMatrix::identity(p, p); stack.len()]).unwrap();
    state.z = ConsensusFactor { z: CMatrix::identity(p, p) };
    state
}

/// Transitive closure by Warshall; a cycle exists iff some node reaches itself.
pub fn has_cycle(adj: &[Vec<bool>]) -> bool {
    let p = adj.len();
    let mut r = adj.to_vec();
    for k in 0..p {
        for i in 0..p {
            if r[i][k] {
                for j in 0..p {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    (0..p).any(|i| r[i][i])
}

pub fn weight(rng: &mut SimRng) -> C64 {
    C64::new(signed_uniform(rng, 0.3, 1.5), signed_uniform(rng, 0.0, 1.5))
}

/// `adj[i][j]` is the entry `B_ij`.
pub fn weighted(adj: &[Vec<bool>], rng: &mut SimRng) -> CMatrix {
    let p = adj.len();
    CMatrix::from_fn(p, p, |i, j| if adj[i][j] { weight(rng) } else { ZERO })
}

/// `∂f/∂B_ij^* = ½(∂f/∂Re + i ∂f/∂Im)` by central differences.
pub fn fd_wirtinger(f: impl Fn(&CMatrix) -> f64, b: &CMatrix, step: f64) -> CMatrix {
    CMatrix::from_fn(b.nrows(), b.ncols(), |i, j| {
        let eval = |d: C64| {
            let mut c = b.clone();
            c[(i, j)] += d;
            f(&c)
        };
        let re = (eval(C64::new(step, 0.0)) - eval(C64::new(-step, 0.0))) / (2.0 * step);
        let im = (eval(C64::new(0.0, step)) - eval(C64::new(0.0, -step))) / (2.0 * step);
        C64::new(0.5 * re, 0.5 * im)
    })
}

pub fn rel_err(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm().max(1e-12)
}

/// Relative Frobenius error of the averaged periodogram `d d^H / T` against
/// `S(ω_k)` at each requested Fourier index.
pub fn periodogram_errors(model: &FrequencyDagModel, t_len: usize, reps: u64, ks: &[usize]) -> Vec<f64> {
    let p = model.dim();
    let mut acc = vec![CMatrix::zeros(p, p); ks.len()];
    for r in 0..reps {
        let d = dft(&generate_transfer_ts(model, t_len, 1000 + r).unwrap().series).unwrap();
        for (slot, &k) in acc.iter_mut().zip(ks) {
            let v = d.at(k);
            *slot += (&v * v.adjoint()).unscale(t_len as f64);
        }
    }
    acc.iter()
        .zip(ks)
        .map(|(sum, &k)| {
            let s = model.spectrum(k as f64 / t_len as f64, t_len);
            (sum.unscale(reps as f64) - &s).norm() / s.norm()
        })
        .collect()
}

/// Log-log slope of `sup_ω ‖E I_T(ω) − f(ω)‖` against `T`.
pub fn periodogram_bias_slope(model: &FrequencyDagModel, sizes: &[usize]) -> f64 {
    // off-grid error carries a phase e^{-2πiTω}; a dense probe set keeps the sup stable
    let probes: Vec<f64> = (0..300).map(|j| (j as f64 + 0.5) / 300.0 + 1e-4 * std::f64::consts::SQRT_2).collect();
    let points: Vec<(f64, f64)> = sizes
        .iter()
        .map(|&t| {
            let f: Vec<CMatrix> = (1..=t).map(|k| model.normalized_spectrum(k as f64 / t as f64)).collect();
            let sup = probes
                .iter()
                .map(|&w| (expected_periodogram_from(&f, w) - model.normalized_spectrum(w)).norm())
                .fold(0.0, f64::max);
            ((t as f64).ln(), sup.ln())
        })
        .collect();
    let n = points.len() as f64;
    let (mx, my) = (points.iter().map(|p| p.0).sum::<f64>() / n, points.iter().map(|p| p.1).sum::<f64>() / n);
    points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>()
}
