//! Summary DAGs and small graph utilities.
//!
//! Adjacency follows the structural-equation convention used throughout the
//! crate: `adj[i][j] = 1` means `j → i` (node `j` is a parent of `i`), so the
//! support of a coefficient matrix `B` with `X_i = Σ_j B_ij X_j + ε_i` is the
//! adjacency itself.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryDag {
    p: usize,
    adj: Vec<bool>,
    labels: Vec<String>,
    weights: Option<CMatrix>,
}

impl SummaryDag {
    pub fn empty(p: usize) -> Self {
        Self {
            p,
            adj: vec![false; p * p],
            labels: (1..=p).map(|i| format!("X{i}")).collect(),
            weights: None,
        }
    }

    /// `adj[i][j]` true means `j → i`.
    pub fn from_adjacency(adj: &[Vec<bool>]) -> Result<Self> {
        let p = adj.len();
        let mut dag = Self::empty(p);
        for (i, row) in adj.iter().enumerate() {
            if row.len() != p {
                return Err(Error::DimensionMismatch("adjacency must be square".into()));
            }
            for (j, &e) in row.iter().enumerate() {
                if e {
                    if i == j {
                        return Err(Error::Cyclic(format!("self-loop on node {}", i + 1)));
                    }
                    dag.adj[i * p + j] = true;
                }
            }
        }
        dag.check_acyclic()?;
        Ok(dag)
    }

    /// Edges as `(from, to)` pairs.
    pub fn from_edges(p: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut dag = Self::empty(p);
        for &(from, to) in edges {
            if from >= p || to >= p {
                return Err(Error::InvalidInput(format!("edge {from}->{to} outside 0..{p}")));
            }
            if from == to {
                return Err(Error::Cyclic(format!("self-loop on node {}", from + 1)));
            }
            dag.adj[to * p + from] = true;
        }
        dag.check_acyclic()?;
        Ok(dag)
    }

    /// Support of the off-diagonal non-zeros of `b` (`b[i][j] ≠ 0` ⇒ `j → i`),
    /// keeping `b` as edge weights.
    pub fn from_weights(b: &CMatrix) -> Result<Self> {
        let p = b.nrows();
        let mut dag = Self::empty(p);
        for i in 0..p {
            for j in 0..p {
                if i != j && b[(i, j)].norm() != 0.0 {
                    dag.adj[i * p + j] = true;
                }
            }
        }
        dag.check_acyclic()?;
        dag.weights = Some(b.clone());
        Ok(dag)
    }

    fn check_acyclic(&self) -> Result<()> {
        if let Some(cycle) = self.find_cycle() {
            let names: Vec<String> = cycle.iter().map(|&v| (v + 1).to_string()).collect();
            return Err(Error::Cyclic(names.join(" -> ")));
        }
        Ok(())
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.p {
            return Err(Error::DimensionMismatch(format!("{} labels for {} nodes", labels.len(), self.p)));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn with_weights(mut self, weights: CMatrix) -> Result<Self> {
        if weights.nrows() != self.p || weights.ncols() != self.p {
            return Err(Error::DimensionMismatch("weights must be p×p".into()));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn weights(&self) -> Option<&CMatrix> {
        self.weights.as_ref()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.adj[to * self.p + from]
    }

    /// `(from, to)` sorted by `from`, then `to`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for from in 0..self.p {
            for to in 0..self.p {
                if self.has_edge(from, to) {
                    out.push((from, to));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&e| e).count()
    }

    pub fn parents(&self, node: usize) -> Vec<usize> {
        (0..self.p).filter(|&j| self.has_edge(j, node)).collect()
    }

    pub fn children(&self, node: usize) -> Vec<usize> {
        (0..self.p).filter(|&i| self.has_edge(node, i)).collect()
    }

    /// Adjacency rows: `matrix()[i][j]` is `j → i`.
    pub fn matrix(&self) -> Vec<Vec<bool>> {
        (0..self.p).map(|i| self.adj[i * self.p..(i + 1) * self.p].to_vec()).collect()
    }

    /// Descendants of `node`, including `node` itself.
    pub fn descendants(&self, node: usize) -> Vec<bool> {
        let mut seen = vec![false; self.p];
        let mut stack = vec![node];
        seen[node] = true;
        while let Some(v) = stack.pop() {
            for c in self.children(v) {
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        seen
    }

    /// Ancestors of `node`, including `node` itself.
    pub fn ancestors(&self, node: usize) -> Vec<bool> {
        let mut seen = vec![false; self.p];
        let mut stack = vec![node];
        seen[node] = true;
        while let Some(v) = stack.pop() {
            for c in self.parents(v) {
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        seen
    }

    /// Kahn's algorithm; ties resolved by smallest index.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        topological_sort(self.p, |from, to| self.has_edge(from, to))
    }

    pub fn is_topological_order(&self, perm: &[usize]) -> bool {
        let mut pos = vec![usize::MAX; self.p];
        for (k, &v) in perm.iter().enumerate() {
            if v >= self.p {
                return false;
            }
            pos[v] = k;
        }
        self.edges().iter().all(|&(from, to)| pos[from] < pos[to])
    }

    fn find_cycle(&self) -> Option<Vec<usize>> {
        find_cycle(self.p, |from, to| self.has_edge(from, to))
    }

    /// Graph on relabelled nodes: node `a` of the result is node `perm[a]` here.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let p = self.p;
        let mut out = Self::empty(p);
        for a in 0..p {
            for b in 0..p {
                out.adj[a * p + b] = self.adj[perm[a] * p + perm[b]];
            }
        }
        out.labels = perm.iter().map(|&v| self.labels[v].clone()).collect();
        out.weights = self.weights.as_ref().map(|w| crate::linalg::permute_symmetric(w, perm));
        out
    }
}

/// Kahn's algorithm over an arbitrary edge predicate `edge(from, to)`.
pub fn topological_sort(p: usize, edge: impl Fn(usize, usize) -> bool) -> Option<Vec<usize>> {
    let mut indeg = vec![0usize; p];
    for to in 0..p {
        for from in 0..p {
            if edge(from, to) {
                indeg[to] += 1;
            }
        }
    }
    let mut ready: std::collections::BTreeSet<usize> = (0..p).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(p);
    while let Some(&v) = ready.iter().next() {
        ready.remove(&v);
        order.push(v);
        for to in 0..p {
            if edge(v, to) {
                indeg[to] -= 1;
                if indeg[to] == 0 {
                    ready.insert(to);
                }
            }
        }
    }
    (order.len() == p).then_some(order)
}

/// Returns one directed cycle (as a node sequence) if any exists.
pub fn find_cycle(p: usize, edge: impl Fn(usize, usize) -> bool) -> Option<Vec<usize>> {
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; p];
    let mut parent = vec![usize::MAX; p];
    for root in 0..p {
        if state[root] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        state[root] = 1;
        while let Some(top) = stack.last_mut() {
            let v = top.0;
            if top.1 >= p {
                state[v] = 2;
                stack.pop();
                continue;
            }
            let w = top.1;
            top.1 += 1;
            if !edge(v, w) {
                continue;
            }
            match state[w] {
                0 => {
                    parent[w] = v;
                    state[w] = 1;
                    stack.push((w, 0));
                }
                1 => {
                    let mut cycle = vec![w];
                    let mut cur = v;
                    while cur != w {
                        cycle.push(cur);
                        cur = parent[cur];
                    }
                    cycle.reverse();
                    cycle.rotate_right(1);
                    return Some(cycle);
                }
                _ => {}
            }
        }
    }
    None
}

/// Removes edges until the weighted digraph is acyclic. Each surviving cycle
/// loses its removable edge of smallest magnitude. `weight[to][from]` holds
/// the magnitude of `from → to`; `removable[to][from]` marks edges that may go.
/// Returns the removed `(from, to)` edges.
pub fn break_cycles(
    adj: &mut [Vec<bool>],
    weight: &[Vec<f64>],
    removable: &[Vec<bool>],
) -> Result<Vec<(usize, usize)>> {
    let p = adj.len();
    let mut removed = Vec::new();
    loop {
        let cycle = match find_cycle(p, |from, to| adj[to][from]) {
            Some(c) => c,
            None => return Ok(removed),
        };
        let mut best: Option<(usize, usize, f64)> = None;
        for k in 0..cycle.len() {
            let from = cycle[k];
            let to = cycle[(k + 1) % cycle.len()];
            if !removable[to][from] {
                continue;
            }
            let w = weight[to][from];
            if best.is_none_or(|(_, _, bw)| w < bw) {
                best = Some((from, to, w));
            }
        }
        match best {
            Some((from, to, _)) => {
                adj[to][from] = false;
                removed.push((from, to));
            }
            None => {
                return Err(Error::Cyclic("cycle contains no removable edge".into()));
            }
        }
    }
}

/// Breadth-first reachability from `src` in an arbitrary digraph.
pub fn reachable(p: usize, src: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<bool> {
    let mut seen = vec![false; p];
    let mut queue = VecDeque::from([src]);
    seen[src] = true;
    while let Some(v) = queue.pop_front() {
        for w in 0..p {
            if !seen[w] && edge(v, w) {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen
}
