//! Source-to-sink walks in a directed graph with random edge lengths.
//!
//! A state is `(hops, node)`; the hop count makes the state graph acyclic, so
//! walks may repeat edges. Each traversal of an edge draws an independent
//! length.

use serde::{Deserialize, Serialize};

use super::{maximize_expected_utility, EumOutcome, SolverOptions};
use crate::config::{ProblemAdapter, Step};
use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::esum::{ExponentialSum, UtilitySpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortestPathInstance {
    pub nodes: usize,
    pub edges: Vec<Edge>,
    pub source: usize,
    pub sink: usize,
    /// Longest walk considered; defaults to `nodes`.
    #[serde(default)]
    pub hop_cap: Option<usize>,
}

impl ShortestPathInstance {
    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::param("graph has no nodes"));
        }
        if self.source >= self.nodes || self.sink >= self.nodes {
            return Err(Error::param("source or sink out of range"));
        }
        if self.source == self.sink {
            return Err(Error::param("source and sink coincide"));
        }
        if let Some(e) = self.edges.iter().find(|e| e.from >= self.nodes || e.to >= self.nodes) {
            return Err(Error::param(format!("edge {}->{} out of range", e.from, e.to)));
        }
        if self.hop_cap == Some(0) {
            return Err(Error::param("hop cap must be positive"));
        }
        Ok(())
    }

    pub fn hop_cap(&self) -> usize {
        self.hop_cap.unwrap_or(self.nodes)
    }

    pub fn weights(&self) -> Vec<Distribution> {
        self.edges.iter().map(|e| e.weight.clone()).collect()
    }

    /// Edge indices forming a walk from source to sink within the hop cap.
    pub fn is_feasible(&self, walk: &[usize]) -> bool {
        if walk.is_empty() || walk.len() > self.hop_cap() {
            return false;
        }
        let mut at = self.source;
        for &e in walk {
            let Some(edge) = self.edges.get(e) else {
                return false;
            };
            // the sink absorbs: a walk ends the first time it arrives
            if edge.from != at || at == self.sink {
                return false;
            }
            at = edge.to;
        }
        at == self.sink
    }

    pub fn adapter(&self) -> WalkAdapter<'_> {
        let mut out_edges = vec![Vec::new(); self.nodes];
        for (i, e) in self.edges.iter().enumerate() {
            out_edges[e.from].push(i);
        }
        WalkAdapter { inst: self, out_edges, hop_cap: self.hop_cap() }
    }
}

pub struct WalkAdapter<'a> {
    inst: &'a ShortestPathInstance,
    out_edges: Vec<Vec<usize>>,
    hop_cap: usize,
}

impl ProblemAdapter for WalkAdapter<'_> {
    type State = (usize, usize);

    fn num_elements(&self) -> usize {
        self.inst.edges.len()
    }

    fn max_solution_size(&self) -> usize {
        self.hop_cap
    }

    fn initial_states(&self) -> Vec<(usize, usize)> {
        vec![(0, self.inst.source)]
    }

    fn successors(&self, &(hops, node): &(usize, usize), out: &mut Vec<Step<(usize, usize)>>) {
        if node == self.inst.sink || hops == self.hop_cap {
            return;
        }
        for &e in &self.out_edges[node] {
            out.push(Step { next: (hops + 1, self.inst.edges[e].to), element: Some(e) });
        }
    }

    fn is_accepting(&self, &(_, node): &(usize, usize)) -> bool {
        node == self.inst.sink
    }

    fn max_stages(&self) -> usize {
        self.hop_cap
    }
}

/// Approximately maximizes `E[mu(length)]` over source-sink walks.
pub fn shortest_path_solve(
    inst: &ShortestPathInstance,
    mu: &UtilitySpec,
    opts: &SolverOptions,
) -> Result<(EumOutcome, ExponentialSum)> {
    inst.validate()?;
    let (out, expsum) = maximize_expected_utility(&inst.adapter(), &inst.weights(), mu, opts)?;
    if !inst.is_feasible(&out.solution) {
        return Err(Error::Infeasible(format!("witness {:?} is not a source-sink walk", out.solution)));
    }
    Ok((out, expsum))
}
