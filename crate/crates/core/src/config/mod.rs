//! Scaling, rounding and enumeration of moment configurations.
//!
//! For an exponential sum with `L` terms every element `e` gets a `2L`-vector of
//! integers: the scaled log-modulus `a_k(e) = floor(-ln|m_ek| / gamma)` and the
//! scaled argument `b_k(e) = floor(arg(m_ek) / delta)` of its moments
//! `m_ek = E[psi_k^{w_e}]`. A solution's configuration sums these vectors, with
//! every `alpha` coordinate saturating at `J`. Because moments multiply over
//! independent elements, `sum_k c_k exp(-alpha_k gamma + i beta_k delta)`
//! approximates `E[mu_tilde(w(S))]` within `2 eps sum|c_k| / L`.
//!
//! Configurations are enumerated by a layered reachable-set search over the
//! states of a [`ProblemAdapter`], so only configurations realized by some
//! feasible solution are ever materialized.

pub mod encoding;

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Debug;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::distributions::{arg_unit, moment_at_rate, Distribution};
use crate::error::{Error, Result};

/// Marker for a log-modulus coordinate beyond `J` (including a zero moment).
pub const OVERFLOW: u64 = u64::MAX;
/// Default cap on `(state, configuration)` pairs.
pub const DEFAULT_STATE_BUDGET: usize = 10_000_000;
/// Moduli above `1 + MODULUS_REJECT` indicate an invalid base upstream.
const MODULUS_REJECT: f64 = 1e-6;

/// Rounding constants for `n` elements and `L` terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundingParams {
    pub n: usize,
    pub l: usize,
    pub eps: f64,
    pub rounding_scale: f64,
    pub gamma: f64,
    pub delta_r: f64,
    pub j: u64,
    pub k: u64,
}

pub fn derive_params(n: usize, l: usize, eps: f64, rounding_scale: f64) -> Result<RoundingParams> {
    if n == 0 || l == 0 {
        return Err(Error::param("rounding needs n >= 1 and L >= 1"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param(format!("rounding eps = {eps} must lie in (0, 1)")));
    }
    if !(rounding_scale >= 1.0 && rounding_scale.is_finite()) {
        return Err(Error::param(format!("rounding scale {rounding_scale} must be at least 1")));
    }
    let base = eps / (l as f64 * n as f64);
    let gamma = base * rounding_scale;
    let delta_r = gamma;
    let j = (-(eps / l as f64).ln() / gamma).ceil();
    let k = (TAU * n as f64 / delta_r).ceil();
    if j >= u64::MAX as f64 / 4.0 || k >= u64::MAX as f64 / 4.0 {
        return Err(Error::param("rounding grid too fine for 64-bit coordinates"));
    }
    Ok(RoundingParams { n, l, eps, rounding_scale, gamma, delta_r, j: j as u64, k: k as u64 })
}

/// Rounding eps whose worst-case score gap `2 eps_r sum|c| / L` equals `budget`.
pub fn rounding_eps_for_budget(budget: f64, coeffs: &[Complex64]) -> f64 {
    let abs_sum: f64 = coeffs.iter().map(|c| c.norm()).sum();
    if abs_sum == 0.0 {
        return budget.min(0.5);
    }
    (budget * coeffs.len() as f64 / (2.0 * abs_sum)).min(0.5)
}

/// Rounded `(a_k, b_k)` of one element, interleaved as `a_1, b_1, ..., a_L, b_L`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementVector(pub Vec<u64>);

impl ElementVector {
    pub fn a(&self, k: usize) -> u64 {
        self.0[2 * k]
    }

    pub fn b(&self, k: usize) -> u64 {
        self.0[2 * k + 1]
    }
}

pub fn round_element(moments: &[Complex64], params: &RoundingParams) -> Result<ElementVector> {
    let mut v = Vec::with_capacity(2 * moments.len());
    for &m in moments {
        let modulus = m.norm();
        if !modulus.is_finite() || modulus > 1.0 + MODULUS_REJECT {
            return Err(Error::param(format!("moment {m} lies outside the unit disk")));
        }
        let a = if modulus == 0.0 {
            OVERFLOW
        } else {
            // moduli in (1, 1 + MODULUS_REJECT] clamp to 1
            let neg_log = if modulus >= 1.0 { 0.0 } else { -modulus.ln() };
            let a = (neg_log / params.gamma).floor();
            if a > params.j as f64 {
                OVERFLOW
            } else {
                a as u64
            }
        };
        let b = if modulus == 0.0 { 0 } else { (arg_unit(m) / params.delta_r).floor() as u64 };
        v.push(a);
        v.push(b);
    }
    Ok(ElementVector(v))
}

/// Summed `(alpha_k, beta_k)`, interleaved; `alpha_k <= J`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConfigVector(pub Vec<u64>);

impl ConfigVector {
    pub fn zero(l: usize) -> Self {
        ConfigVector(vec![0; 2 * l])
    }

    pub fn alpha(&self, k: usize) -> u64 {
        self.0[2 * k]
    }

    pub fn beta(&self, k: usize) -> u64 {
        self.0[2 * k + 1]
    }

    pub fn terms(&self) -> usize {
        self.0.len() / 2
    }

    /// `alpha += a` saturating at `j`; `beta += b`.
    pub fn add(&self, e: &ElementVector, j: u64) -> ConfigVector {
        let mut out = self.0.clone();
        for (i, x) in out.iter_mut().enumerate() {
            if i % 2 == 0 {
                *x = x.saturating_add(e.0[i]).min(j);
            } else {
                *x += e.0[i];
            }
        }
        ConfigVector(out)
    }
}

/// `sum_k c_k exp(-alpha_k gamma + i beta_k delta)` over terms `offset..offset + coeffs.len()`.
pub fn score_terms(
    cfg: &ConfigVector,
    coeffs: &[Complex64],
    offset: usize,
    params: &RoundingParams,
) -> Complex64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = offset + i;
            c * Complex64::from_polar(
                (-(cfg.alpha(k) as f64) * params.gamma).exp(),
                cfg.beta(k) as f64 * params.delta_r,
            )
        })
        .sum()
}

pub fn score_config(cfg: &ConfigVector, coeffs: &[Complex64], params: &RoundingParams) -> Complex64 {
    score_terms(cfg, coeffs, 0, params)
}

/// Per-element moments `m[e][k] = E[psi_k^{w_e}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    moments: Vec<Vec<Complex64>>,
}

impl MomentTable {
    pub fn new(moments: Vec<Vec<Complex64>>) -> Result<Self> {
        if let Some(first) = moments.first() {
            if moments.iter().any(|row| row.len() != first.len()) {
                return Err(Error::param("moment rows differ in length"));
            }
        }
        Ok(MomentTable { moments })
    }

    /// `E[exp(rate_k w_e)]` for every element law and term exponent.
    pub fn from_distributions(dists: &[Distribution], rates: &[Complex64]) -> Result<Self> {
        let moments = dists
            .iter()
            .map(|d| rates.iter().map(|&r| moment_at_rate(d, r).map(|m| m.value)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(MomentTable { moments })
    }

    pub fn num_elements(&self) -> usize {
        self.moments.len()
    }

    pub fn num_terms(&self) -> usize {
        self.moments.first().map_or(0, Vec::len)
    }

    pub fn row(&self, e: usize) -> &[Complex64] {
        &self.moments[e]
    }

    pub fn rows(&self) -> &[Vec<Complex64>] {
        &self.moments
    }

    /// Adds `delta(e, k)` to every moment.
    pub fn perturbed<F: FnMut(usize, usize) -> Complex64>(&self, mut delta: F) -> MomentTable {
        let moments = self
            .moments
            .iter()
            .enumerate()
            .map(|(e, row)| row.iter().enumerate().map(|(k, m)| m + delta(e, k)).collect())
            .collect();
        MomentTable { moments }
    }
}

/// `sum_k c_k prod_{e in S} m[e][offset + k]`; repeated elements count repeatedly.
pub fn expected_utility_terms(
    solution: &[usize],
    table: &MomentTable,
    coeffs: &[Complex64],
    offset: usize,
) -> Complex64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = offset + i;
            c * solution.iter().fold(Complex64::new(1.0, 0.0), |acc, &e| acc * table.moments[e][k])
        })
        .sum()
}

/// The exact `E[mu_tilde(w(S))]` from unrounded moments.
pub fn expected_utility_expsum(solution: &[usize], table: &MomentTable, coeffs: &[Complex64]) -> Complex64 {
    expected_utility_terms(solution, table, coeffs, 0)
}

/// One transition of a staged feasibility structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step<S> {
    pub next: S,
    /// Element added to the solution by this transition.
    pub element: Option<usize>,
}

/// Feasibility structure of a combinatorial problem as a staged transition system.
///
/// Every path from an initial state to an accepting state spells a feasible
/// solution as the sequence of elements on its transitions. States must
/// encode their stage so that no path revisits a state.
pub trait ProblemAdapter {
    type State: Clone + Ord + Debug;

    fn num_elements(&self) -> usize;

    /// Upper bound on the number of elements in any solution.
    fn max_solution_size(&self) -> usize;

    fn initial_states(&self) -> Vec<Self::State>;

    fn successors(&self, state: &Self::State, out: &mut Vec<Step<Self::State>>);

    fn is_accepting(&self, state: &Self::State) -> bool;

    /// Upper bound on transitions along any path.
    fn max_stages(&self) -> usize;
}

/// Every configuration realized by a feasible solution, with its first witness.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachableSet {
    pub configs: BTreeMap<ConfigVector, Vec<usize>>,
    /// Distinct `(state, configuration)` pairs explored.
    pub states_explored: usize,
}

impl ReachableSet {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }
}

pub fn enumerate_reachable<A: ProblemAdapter>(
    adapter: &A,
    vectors: &[ElementVector],
    params: &RoundingParams,
    state_budget: usize,
) -> Result<ReachableSet> {
    struct Node {
        parent: usize,
        element: Option<usize>,
    }
    const ROOT: usize = usize::MAX;

    let width = vectors.first().map_or(2 * params.l, |v| v.0.len());
    let zero = ConfigVector(vec![0; width]);
    let mut arena: Vec<Node> = Vec::new();
    // states encode their stage, so duplicates can only occur within a layer
    let mut explored = 0usize;
    let mut frontier: BTreeMap<(A::State, ConfigVector), usize> = BTreeMap::new();
    for s in adapter.initial_states() {
        if let Entry::Vacant(v) = frontier.entry((s, zero.clone())) {
            arena.push(Node { parent: ROOT, element: None });
            v.insert(arena.len() - 1);
            explored += 1;
        }
    }
    let mut accepted: BTreeMap<ConfigVector, usize> = BTreeMap::new();
    let mut steps = Vec::new();
    for stage in 0..=adapter.max_stages() {
        for ((state, cfg), &node) in &frontier {
            if adapter.is_accepting(state) {
                accepted.entry(cfg.clone()).or_insert(node);
            }
        }
        if stage == adapter.max_stages() || frontier.is_empty() {
            break;
        }
        let mut next = BTreeMap::new();
        for ((state, cfg), node) in frontier {
            steps.clear();
            adapter.successors(&state, &mut steps);
            for step in steps.drain(..) {
                let cfg2 = match step.element {
                    Some(e) => cfg.add(&vectors[e], params.j),
                    None => cfg.clone(),
                };
                let Entry::Vacant(v) = next.entry((step.next, cfg2)) else {
                    continue;
                };
                if explored >= state_budget {
                    return Err(Error::StateBudgetExceeded { cap: state_budget });
                }
                explored += 1;
                arena.push(Node { parent: node, element: step.element });
                v.insert(arena.len() - 1);
            }
        }
        frontier = next;
    }
    let configs = accepted
        .into_iter()
        .map(|(cfg, mut node)| {
            let mut witness = Vec::new();
            while node != ROOT {
                if let Some(e) = arena[node].element {
                    witness.push(e);
                }
                node = arena[node].parent;
            }
            witness.reverse();
            (cfg, witness)
        })
        .collect();
    Ok(ReachableSet { configs, states_explored: explored })
}

/// The configuration of `solution` recomputed from scratch.
///
/// Uses exact real sums of `-ln|m|` and `arg m`: the floor is applied once per
/// element and the saturation once at the end.
pub fn config_of(solution: &[usize], table: &MomentTable, params: &RoundingParams) -> Result<ConfigVector> {
    let l = table.num_terms();
    let mut out = Vec::with_capacity(2 * l);
    for k in 0..l {
        let mut alpha = 0u64;
        let mut beta = 0u64;
        for &e in solution {
            let v = round_element(&table.moments[e][k..=k], params)?;
            alpha = alpha.saturating_add(v.a(0));
            beta += v.b(0);
        }
        out.push(alpha.min(params.j));
        out.push(beta);
    }
    Ok(ConfigVector(out))
}

/// Which extreme of `|score|` to select.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// `eps` handed to [`derive_params`].
    pub rounding_eps: f64,
    pub rounding_scale: f64,
    pub state_budget: usize,
    pub mode: Mode,
}

impl SolveOptions {
    pub fn new(rounding_eps: f64) -> Self {
        SolveOptions {
            rounding_eps,
            rounding_scale: 1.0,
            state_budget: DEFAULT_STATE_BUDGET,
            mode: Mode::Maximize,
        }
    }
}

/// Result of [`solve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    /// Elements of the chosen solution in transition order.
    pub solution: Vec<usize>,
    pub config: ConfigVector,
    pub score: Complex64,
    /// Unrounded `E[mu_tilde(w(S))]` of the chosen solution.
    pub exact_value: Complex64,
    pub params: RoundingParams,
    pub reachable_size: usize,
    pub states_explored: usize,
    /// `|score - exact_value|` for the chosen solution.
    pub gap: f64,
    /// Largest such gap over all reachable configurations.
    pub max_gap: f64,
}

pub fn round_table(table: &MomentTable, params: &RoundingParams) -> Result<Vec<ElementVector>> {
    table.rows().iter().map(|row| round_element(row, params)).collect()
}

/// Picks the reachable configuration with the largest (or smallest) `|score|`.
///
/// Ties go to the lexicographically smallest configuration.
pub fn solve<A: ProblemAdapter>(
    adapter: &A,
    table: &MomentTable,
    coeffs: &[Complex64],
    opts: &SolveOptions,
) -> Result<SolveOutcome> {
    if table.num_elements() != adapter.num_elements() {
        return Err(Error::param(format!(
            "moment table has {} elements, adapter {}",
            table.num_elements(),
            adapter.num_elements()
        )));
    }
    if table.num_elements() > 0 && table.num_terms() != coeffs.len() {
        return Err(Error::param("moment table and coefficients disagree on L"));
    }
    let params = derive_params(
        adapter.max_solution_size().max(1),
        coeffs.len().max(1),
        opts.rounding_eps,
        opts.rounding_scale,
    )?;
    let vectors = round_table(table, &params)?;
    let reach = enumerate_reachable(adapter, &vectors, &params, opts.state_budget)?;
    if reach.is_empty() {
        return Err(Error::Infeasible("no feasible solution".into()));
    }
    let mut best: Option<(&ConfigVector, &Vec<usize>, Complex64)> = None;
    let mut max_gap = 0.0f64;
    for (cfg, witness) in &reach.configs {
        let score = score_config(cfg, coeffs, &params);
        let exact = expected_utility_expsum(witness, table, coeffs);
        max_gap = max_gap.max((score - exact).norm());
        let better = match best {
            None => true,
            Some((_, _, s)) => match opts.mode {
                Mode::Maximize => score.norm() > s.norm(),
                Mode::Minimize => score.norm() < s.norm(),
            },
        };
        if better {
            best = Some((cfg, witness, score));
        }
    }
    let (cfg, witness, score) = best.expect("nonempty reachable set");
    let exact_value = expected_utility_expsum(witness, table, coeffs);
    Ok(SolveOutcome {
        solution: witness.clone(),
        config: cfg.clone(),
        score,
        exact_value,
        params,
        reachable_size: reach.len(),
        states_explored: reach.states_explored,
        gap: (score - exact_value).norm(),
        max_gap,
    })
}
