//! Spanning trees of small multigraphs, solved by exhaustive enumeration.
//!
//! The tree count is computed first with the matrix-tree theorem so that a
//! graph with too many trees is rejected before any enumeration starts.

use serde::{Deserialize, Serialize};

use super::{EumOutcome, SolverOptions};
use crate::config::{expected_utility_expsum, MomentTable};
use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::esum::{esum_decompose, ExponentialSum, UtilitySpec};

pub const MAX_NODES: usize = 8;
pub const MAX_TREES: u128 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UndirectedEdge {
    pub u: usize,
    pub v: usize,
    pub weight: Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanningTreeInstance {
    pub nodes: usize,
    pub edges: Vec<UndirectedEdge>,
}

impl SpanningTreeInstance {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 2 || self.nodes > MAX_NODES {
            return Err(Error::param(format!(
                "spanning trees need 2..={MAX_NODES} nodes, got {}",
                self.nodes
            )));
        }
        for e in &self.edges {
            if e.u >= self.nodes || e.v >= self.nodes {
                return Err(Error::param(format!("edge {}-{} out of range", e.u, e.v)));
            }
        }
        Ok(())
    }

    pub fn weights(&self) -> Vec<Distribution> {
        self.edges.iter().map(|e| e.weight.clone()).collect()
    }

    /// Exact count by the matrix-tree theorem; self-loops never count.
    pub fn count_trees(&self) -> u128 {
        let m = self.nodes - 1;
        let mut lap = vec![vec![0i128; m]; m];
        for e in self.edges.iter().filter(|e| e.u != e.v) {
            for (a, b) in [(e.u, e.v), (e.v, e.u)] {
                if a < m {
                    lap[a][a] += 1;
                    if b < m {
                        lap[a][b] -= 1;
                    }
                }
            }
        }
        bareiss_determinant(lap).max(0) as u128
    }

    /// Ascending edge-index lists of `nodes - 1` edges without a cycle.
    pub fn is_feasible(&self, tree: &[usize]) -> bool {
        if tree.len() != self.nodes - 1 || tree.windows(2).any(|w| w[0] >= w[1]) {
            return false;
        }
        let mut uf = UnionFind::new(self.nodes);
        tree.iter().all(|&i| self.edges.get(i).is_some_and(|e| uf.union(e.u, e.v)))
    }

    pub fn enumerate_trees(&self) -> Result<Vec<Vec<usize>>> {
        self.validate()?;
        let count = self.count_trees();
        if count > MAX_TREES {
            return Err(Error::TooManyTrees { count, cap: MAX_TREES });
        }
        let mut out = Vec::with_capacity(count as usize);
        let mut chosen = Vec::with_capacity(self.nodes - 1);
        self.extend(0, &mut chosen, &mut out);
        debug_assert_eq!(out.len() as u128, count);
        Ok(out)
    }

    fn extend(&self, from: usize, chosen: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let need = self.nodes - 1 - chosen.len();
        if need == 0 {
            out.push(chosen.clone());
            return;
        }
        for i in from..self.edges.len() {
            if self.edges.len() - i < need {
                break;
            }
            chosen.push(i);
            if self.acyclic(chosen) {
                self.extend(i + 1, chosen, out);
            }
            chosen.pop();
        }
    }

    fn acyclic(&self, edges: &[usize]) -> bool {
        let mut uf = UnionFind::new(self.nodes);
        edges.iter().all(|&i| uf.union(self.edges[i].u, self.edges[i].v))
    }
}

/// Fraction-free elimination; exact for integer matrices.
fn bareiss_determinant(mut a: Vec<Vec<i128>>) -> i128 {
    let n = a.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            let Some(p) = (k + 1..n).find(|&r| a[r][k] != 0) else {
                return 0;
            };
            a.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// False when `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Maximizes `E[mu_tilde(w(T))]` over all spanning trees.
///
/// No rounding is involved, so the returned tree is within twice the
/// certified error of the best tree.
pub fn spanning_tree_solve(
    inst: &SpanningTreeInstance,
    mu: &UtilitySpec,
    opts: &SolverOptions,
) -> Result<(EumOutcome, ExponentialSum)> {
    opts.validate()?;
    let trees = inst.enumerate_trees()?;
    if trees.is_empty() {
        return Err(Error::Infeasible("graph is disconnected".into()));
    }
    let expsum = esum_decompose(mu, opts.eps / 2.0, opts.max_terms)?;
    let coeffs = expsum.coeffs();
    let table = MomentTable::from_distributions(&inst.weights(), &expsum.rates())?;
    let mut best: Option<(&Vec<usize>, num_complex::Complex64)> = None;
    for t in &trees {
        let v = expected_utility_expsum(t, &table, &coeffs);
        if best.is_none_or(|(_, b)| v.re > b.re) {
            best = Some((t, v));
        }
    }
    let (tree, value) = best.expect("nonempty");
    if !inst.is_feasible(tree) {
        return Err(Error::Infeasible(format!("witness {tree:?} is not a spanning tree")));
    }
    let out = EumOutcome {
        solution: tree.clone(),
        expsum_value: value,
        score: value,
        certified_error: expsum.certified_error,
        rounding_gap: 0.0,
        max_rounding_gap: 0.0,
        terms: coeffs.len(),
        abs_coeff_sum: expsum.abs_coeff_sum(),
        reachable_size: trees.len(),
        states_explored: trees.len(),
        params: None,
    };
    Ok((out, expsum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{brute_force_solve, McSettings};

    fn edge(u: usize, v: usize, w: f64) -> UndirectedEdge {
        UndirectedEdge { u, v, weight: Distribution::point(w).unwrap() }
    }

    fn complete(n: usize) -> SpanningTreeInstance {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push(edge(u, v, 0.1));
            }
        }
        SpanningTreeInstance { nodes: n, edges }
    }

    #[test]
    fn cayley_counts() {
        for n in 2..=6 {
            let inst = complete(n);
            let expected = (n as u128).pow(n as u32 - 2);
            assert_eq!(inst.count_trees(), expected);
            assert_eq!(inst.enumerate_trees().unwrap().len() as u128, expected);
        }
    }

    #[test]
    fn triangle_has_three_trees() {
        let trees = complete(3).enumerate_trees().unwrap();
        assert_eq!(trees, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
    }

    #[test]
    fn k8_exceeds_the_cap() {
        // 8^6 = 262144 trees
        let err = complete(8).enumerate_trees().unwrap_err();
        assert_eq!(err, Error::TooManyTrees { count: 262_144, cap: MAX_TREES });
    }

    #[test]
    fn parallel_edges_and_loops() {
        let inst =
            SpanningTreeInstance { nodes: 2, edges: vec![edge(0, 1, 0.5), edge(0, 1, 0.7), edge(1, 1, 0.1)] };
        assert_eq!(inst.count_trees(), 2);
        assert_eq!(inst.enumerate_trees().unwrap(), vec![vec![0], vec![1]]);
    }

    #[test]
    fn disconnected_graph_is_infeasible() {
        let inst = SpanningTreeInstance { nodes: 3, edges: vec![edge(0, 1, 0.5)] };
        let mu = UtilitySpec::threshold_ramp(0.5, 1.0).unwrap();
        let err = spanning_tree_solve(&inst, &mu, &SolverOptions::with_eps(0.5)).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }

    #[test]
    fn light_tree_wins_under_a_threshold() {
        let inst =
            SpanningTreeInstance { nodes: 3, edges: vec![edge(0, 1, 0.9), edge(1, 2, 0.2), edge(0, 2, 0.3)] };
        let mu = UtilitySpec::threshold_ramp(0.25, 1.0).unwrap();
        let (out, expsum) = spanning_tree_solve(&inst, &mu, &SolverOptions::with_eps(0.3)).unwrap();
        assert_eq!(out.solution, vec![1, 2]);
        let rep = brute_force_solve(
            &inst.enumerate_trees().unwrap(),
            &inst.weights(),
            |x| mu.value(x),
            true,
            McSettings::default(),
        )
        .unwrap();
        let ours = rep.values.iter().find(|v| v.solution == out.solution).unwrap().value;
        assert!(ours >= rep.best_value - 2.0 * expsum.certified_error);
    }

    #[test]
    fn triangle_keeps_the_two_light_edges() {
        let inst =
            SpanningTreeInstance { nodes: 3, edges: vec![edge(0, 1, 0.4), edge(1, 2, 0.5), edge(0, 2, 0.9)] };
        let mu = UtilitySpec::threshold_ramp(0.1, 1.0).unwrap();
        let (out, _) = spanning_tree_solve(&inst, &mu, &SolverOptions::with_eps(0.2)).unwrap();
        assert_eq!(out.solution, vec![0, 1]);
    }

    #[test]
    fn a_tree_is_its_own_answer() {
        let inst =
            SpanningTreeInstance { nodes: 4, edges: vec![edge(0, 1, 0.7), edge(1, 2, 0.7), edge(1, 3, 0.7)] };
        let mu = UtilitySpec::threshold_ramp(0.5, 1.0).unwrap();
        let (out, _) = spanning_tree_solve(&inst, &mu, &SolverOptions::with_eps(0.5)).unwrap();
        assert_eq!(out.solution, vec![0, 1, 2]);
    }

    #[test]
    fn four_cycle_with_coins_matches_the_oracle() {
        let coin = |a: f64, b: f64| Distribution::discrete(vec![(a, 0.5), (b, 0.5)]).unwrap();
        let inst = SpanningTreeInstance {
            nodes: 4,
            edges: vec![
                UndirectedEdge { u: 0, v: 1, weight: coin(0.1, 0.5) },
                UndirectedEdge { u: 1, v: 2, weight: coin(0.2, 0.4) },
                UndirectedEdge { u: 2, v: 3, weight: coin(0.0, 0.9) },
                UndirectedEdge { u: 3, v: 0, weight: coin(0.3, 0.3) },
            ],
        };
        let trees = inst.enumerate_trees().unwrap();
        assert_eq!(trees.len(), 4);
        let mu = UtilitySpec::threshold_ramp(0.25, 1.0).unwrap();
        let (out, expsum) = spanning_tree_solve(&inst, &mu, &SolverOptions::with_eps(0.2)).unwrap();
        let rep =
            brute_force_solve(&trees, &inst.weights(), |x| mu.value(x), true, McSettings::default()).unwrap();
        let ours = rep.values.iter().find(|v| v.solution == out.solution).unwrap().value;
        assert!(ours >= rep.best_value - 2.0 * expsum.certified_error);
    }
}
