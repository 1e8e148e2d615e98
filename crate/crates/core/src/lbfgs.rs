//! Limited-memory BFGS with a strong-Wolfe line search, for smooth real objectives.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct LbfgsConfig {
    pub history: usize,
    pub max_iter: usize,
    /// Stop when `‖∇f‖∞` falls below this.
    pub grad_tol: f64,
    /// Stop when the relative decrease of `f` falls below this.
    pub f_tol: f64,
    pub c1: f64,
    pub c2: f64,
    pub max_line_search: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self { history: 10, max_iter: 500, grad_tol: 1e-8, f_tol: 1e-14, c1: 1e-4, c2: 0.9, max_line_search: 40 }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct Probe<'f, F> {
    f: &'f mut F,
    x0: &'f [f64],
    dir: &'f [f64],
    x: Vec<f64>,
    g: Vec<f64>,
}

impl<F: FnMut(&[f64], &mut [f64]) -> f64> Probe<'_, F> {
    /// `(φ(α), φ'(α))`; leaves `x`, `g` at the trial point.
    fn eval(&mut self, alpha: f64) -> (f64, f64) {
        for ((xi, &x0), &d) in self.x.iter_mut().zip(self.x0).zip(self.dir) {
            *xi = x0 + alpha * d;
        }
        let v = (self.f)(&self.x, &mut self.g);
        (v, dot(&self.g, self.dir))
    }
}

/// Cubic minimizer of the interpolant through two points, safeguarded into the
/// middle of the bracket.
fn interpolate(a: (f64, f64, f64), b: (f64, f64, f64)) -> f64 {
    let (a_lo, f_lo, g_lo) = a;
    let (a_hi, f_hi, g_hi) = b;
    let d1 = g_lo + g_hi - 3.0 * (f_lo - f_hi) / (a_lo - a_hi);
    let disc = d1 * d1 - g_lo * g_hi;
    let (lo, hi) = if a_lo < a_hi { (a_lo, a_hi) } else { (a_hi, a_lo) };
    let mid = 0.5 * (lo + hi);
    if disc < 0.0 || !disc.is_finite() {
        return mid;
    }
    let d2 = (a_hi - a_lo).signum() * disc.sqrt();
    let t = a_hi - (a_hi - a_lo) * (g_hi + d2 - d1) / (g_hi - g_lo + 2.0 * d2);
    let margin = 0.1 * (hi - lo);
    if t.is_finite() && t > lo + margin && t < hi - margin {
        t
    } else {
        mid
    }
}

/// Strong-Wolfe step along `dir`; returns `(α, f, g, x)` or `None`.
fn line_search<F: FnMut(&[f64], &mut [f64]) -> f64>(
    probe: &mut Probe<'_, F>,
    f0: f64,
    g0: f64,
    alpha_init: f64,
    cfg: &LbfgsConfig,
) -> Option<(f64, f64)> {
    let mut prev = (0.0, f0, g0);
    let mut alpha = alpha_init;
    for i in 0..cfg.max_line_search {
        let (fa, ga) = probe.eval(alpha);
        if !fa.is_finite() {
            // step into an invalid region: shrink
            alpha = 0.5 * (prev.0 + alpha);
            continue;
        }
        if fa > f0 + cfg.c1 * alpha * g0 || (i > 0 && fa >= prev.1) {
            return zoom(probe, prev, (alpha, fa, ga), f0, g0, cfg);
        }
        if ga.abs() <= -cfg.c2 * g0 {
            return Some((alpha, fa));
        }
        if ga >= 0.0 {
            return zoom(probe, (alpha, fa, ga), prev, f0, g0, cfg);
        }
        prev = (alpha, fa, ga);
        alpha *= 2.0;
    }
    None
}

fn zoom<F: FnMut(&[f64], &mut [f64]) -> f64>(
    probe: &mut Probe<'_, F>,
    mut lo: (f64, f64, f64),
    mut hi: (f64, f64, f64),
    f0: f64,
    g0: f64,
    cfg: &LbfgsConfig,
) -> Option<(f64, f64)> {
    for _ in 0..cfg.max_line_search {
        let alpha = interpolate(lo, hi);
        let (fa, ga) = probe.eval(alpha);
        if !fa.is_finite() || fa > f0 + cfg.c1 * alpha * g0 || fa >= lo.1 {
            hi = (alpha, if fa.is_finite() { fa } else { f64::MAX }, if ga.is_finite() { ga } else { 0.0 });
        } else {
            if ga.abs() <= -cfg.c2 * g0 {
                return Some((alpha, fa));
            }
            if ga * (hi.0 - lo.0) >= 0.0 {
                hi = lo;
            }
            lo = (alpha, fa, ga);
        }
        if (hi.0 - lo.0).abs() <= 1e-16 * lo.0.abs().max(1e-16) {
            break;
        }
    }
    // fall back to the best sufficient-decrease point seen
    if lo.0 > 0.0 && lo.1 < f0 {
        let (fa, _) = probe.eval(lo.0);
        return Some((lo.0, fa));
    }
    None
}

/// Minimizes `f`, which writes the gradient into its second argument and
/// returns the value.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, cfg: &LbfgsConfig) -> LbfgsResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.history);
    let mut iterations = 0;
    let mut converged = inf_norm(&g) <= cfg.grad_tol;
    let mut dir = vec![0.0; n];

    while !converged && iterations < cfg.max_iter && fx.is_finite() {
        // two-loop recursion
        let mut q: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = hist.back().map_or_else(
            || 1.0 / inf_norm(&g).max(1.0),
            |(s, y, _)| dot(s, y) / dot(y, y),
        );
        q.iter_mut().for_each(|v| *v *= gamma);
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        dir.copy_from_slice(&q);
        let mut g0 = dot(&g, &dir);
        if !(g0 < 0.0) {
            // not a descent direction: restart from steepest descent
            hist.clear();
            let scale = 1.0 / inf_norm(&g).max(1.0);
            dir.iter_mut().zip(&g).for_each(|(d, gi)| *d = -gi * scale);
            g0 = dot(&g, &dir);
        }

        let x_old = x.clone();
        let g_old = g.clone();
        let mut probe = Probe { f: &mut f, x0: &x_old, dir: &dir, x: vec![0.0; n], g: vec![0.0; n] };
        let Some((_, f_new)) = line_search(&mut probe, fx, g0, 1.0, cfg) else {
            if hist.is_empty() {
                break;
            }
            hist.clear();
            continue;
        };
        x = probe.x;
        g = probe.g;
        iterations += 1;
        let s: Vec<f64> = x.iter().zip(&x_old).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g.iter().zip(&g_old).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if hist.len() == cfg.history {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        let decrease = fx - f_new;
        fx = f_new;
        if inf_norm(&g) <= cfg.grad_tol {
            converged = true;
        } else if decrease <= cfg.f_tol * fx.abs().max(1.0) {
            converged = true;
        }
    }
    LbfgsResult { grad_norm: inf_norm(&g), x, f: fx, iterations, converged }
}
