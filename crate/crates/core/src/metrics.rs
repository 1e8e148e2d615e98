//! Graph-recovery metrics.

use crate::dag::SummaryDag;
use crate::error::{Error, Result};

fn same_dim(a: &SummaryDag, b: &SummaryDag) -> Result<usize> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!("graphs on {} and {} nodes", a.dim(), b.dim())));
    }
    Ok(a.dim())
}

/// Structural Hamming distance: node pairs whose edge status differs
/// (a reversed edge counts once).
pub fn shd(est: &SummaryDag, truth: &SummaryDag) -> Result<usize> {
    let p = same_dim(est, truth)?;
    let mut count = 0;
    for a in 0..p {
        for b in (a + 1)..p {
            let e = (est.has_edge(a, b), est.has_edge(b, a));
            let t = (truth.has_edge(a, b), truth.has_edge(b, a));
            if e != t {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// `x ⊥ y | z` in the DAG given by `edge(from, to)`, via the moralized
/// ancestral graph.
pub fn d_separated(p: usize, edge: impl Fn(usize, usize) -> bool, x: usize, y: usize, z: &[bool]) -> bool {
    // ancestral closure of {x, y} ∪ z
    let mut keep = z.to_vec();
    keep[x] = true;
    keep[y] = true;
    let mut stack: Vec<usize> = (0..p).filter(|&v| keep[v]).collect();
    while let Some(v) = stack.pop() {
        for u in 0..p {
            if !keep[u] && edge(u, v) {
                keep[u] = true;
                stack.push(u);
            }
        }
    }
    // moral graph restricted to the closure
    let mut adj = vec![vec![false; p]; p];
    for v in (0..p).filter(|&v| keep[v]) {
        let parents: Vec<usize> = (0..p).filter(|&u| keep[u] && edge(u, v)).collect();
        for (a, &u) in parents.iter().enumerate() {
            adj[u][v] = true;
            adj[v][u] = true;
            for &w in &parents[a + 1..] {
                adj[u][w] = true;
                adj[w][u] = true;
            }
        }
    }
    // search from x avoiding z
    let mut seen = vec![false; p];
    let mut stack = vec![x];
    seen[x] = true;
    while let Some(v) = stack.pop() {
        if v == y {
            return false;
        }
        for w in 0..p {
            if adj[v][w] && !seen[w] && !z[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    true
}

/// Structural intervention distance: ordered pairs `(i, j)` for which
/// adjusting for the parents of `i` in `est` does not yield the interventional
/// distribution of `j` under `do(i)` in `truth`.
///
/// With `Z = Pa_est(i)`: if `j ∈ Z`, `est` claims no effect, which is right
/// iff `j` is not a descendant of `i` in `truth`. Otherwise `Z` must avoid the
/// descendants of every node other than `i` on a directed `i → j` path, and
/// d-separate `i` from `j` once the first edges of those paths are removed.
pub fn sid(est: &SummaryDag, truth: &SummaryDag) -> Result<usize> {
    let p = same_dim(est, truth)?;
    if est.topological_order().is_none() || truth.topological_order().is_none() {
        return Err(Error::Cyclic("structural intervention distance needs acyclic graphs".into()));
    }
    let desc: Vec<Vec<bool>> = (0..p).map(|v| truth.descendants(v)).collect();
    let anc: Vec<Vec<bool>> = (0..p).map(|v| truth.ancestors(v)).collect();
    let mut count = 0;
    for i in 0..p {
        let mut z = vec![false; p];
        for u in est.parents(i) {
            z[u] = true;
        }
        for j in (0..p).filter(|&j| j != i) {
            let ok = if z[j] {
                !desc[i][j]
            } else {
                // nodes other than i on directed paths i → ... → j
                let on_path: Vec<usize> = (0..p).filter(|&w| w != i && desc[i][w] && anc[j][w]).collect();
                let forbidden = on_path.iter().any(|&w| (0..p).any(|v| z[v] && desc[w][v]));
                if forbidden {
                    false
                } else {
                    let cut = |from: usize, to: usize| {
                        truth.has_edge(from, to) && !(from == i && on_path.contains(&to))
                    };
                    d_separated(p, cut, i, j, &z)
                }
            };
            if !ok {
                count += 1;
            }
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(p: usize, e: &[(usize, usize)]) -> SummaryDag {
        SummaryDag::from_edges(p, e).unwrap()
    }

    #[test]
    fn shd_examples() {
        assert_eq!(shd(&g(2, &[(1, 0)]), &g(2, &[(0, 1)])).unwrap(), 1);
        assert_eq!(shd(&g(3, &[(0, 1), (0, 2)]), &g(3, &[(0, 1), (1, 2)])).unwrap(), 2);
        assert!(shd(&g(2, &[]), &g(3, &[])).is_err());
    }

    #[test]
    fn sid_examples() {
        assert_eq!(sid(&g(2, &[]), &g(2, &[(0, 1)])).unwrap(), 1);
        let chain = g(3, &[(0, 1), (1, 2)]);
        assert_eq!(sid(&chain, &chain).unwrap(), 0);
        assert_eq!(sid(&chain, &g(3, &[])).unwrap(), 0);
    }

    #[test]
    fn d_separation_collider() {
        // 0 → 2 ← 1
        let e = |a: usize, b: usize| (a, b) == (0, 2) || (a, b) == (1, 2);
        assert!(d_separated(3, e, 0, 1, &[false; 3]));
        assert!(!d_separated(3, e, 0, 1, &[false, false, true]));
    }
}
