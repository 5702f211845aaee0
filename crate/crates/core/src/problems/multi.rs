//! Several utilities evaluated on one solution.
//!
//! The moment table stacks one block of terms per utility. An element touches
//! the blocks it contributes weight to and carries moment 1 in the others, so a
//! single configuration vector tracks every utility at once and each block is
//! scored on its own slice.
//!
//! Candidates are the reachable configurations' witnesses. A witness is judged
//! by its unrounded per-block values minus the certified errors, so every
//! reported bound holds for the returned solution itself.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::knapsack::{fit_ramp, profit_units, SizeItem, WRAPPER_SPLIT};
use super::{geometric_grid, solve_table, SolverOptions};
use crate::config::{
    derive_params, enumerate_reachable, expected_utility_terms, round_table, rounding_eps_for_budget,
    score_terms, Mode, MomentTable, ProblemAdapter, RoundingParams, Step,
};
use crate::distributions::{moment_at_rate, Distribution};
use crate::error::{Error, Result};
use crate::esum::{esum_decompose, esum_decompose_2d, ExponentialSum, Utility2D, UtilitySpec};
use crate::oracle::JointLaw2;

/// Element rows: `rows[e][b]` is the weight element `e` adds to utility `b`.
pub fn stacked_table(rows: &[Vec<Option<Distribution>>], sums: &[&ExponentialSum]) -> Result<MomentTable> {
    let one = Complex64::new(1.0, 0.0);
    let moments = rows
        .iter()
        .map(|row| {
            if row.len() != sums.len() {
                return Err(Error::param("element row and utility count differ"));
            }
            let mut out = Vec::new();
            for (d, s) in row.iter().zip(sums) {
                match d {
                    Some(d) => {
                        for r in s.rates() {
                            out.push(moment_at_rate(d, r)?.value);
                        }
                    }
                    None => out.extend(std::iter::repeat_n(one, s.len())),
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    MomentTable::new(moments)
}

/// Per-utility view of one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockValue {
    pub score: Complex64,
    pub expsum_value: Complex64,
    pub certified_error: f64,
    /// `Re expsum_value - certified_error`, a lower bound on `E[mu_b]`.
    pub lower_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub solution: Vec<usize>,
    pub blocks: Vec<BlockValue>,
}

/// Witnesses of all reachable configurations with their per-block values.
pub fn stacked_candidates<A: ProblemAdapter>(
    adapter: &A,
    table: &MomentTable,
    sums: &[&ExponentialSum],
    rounding_budget: f64,
    opts: &SolverOptions,
) -> Result<(Vec<Candidate>, RoundingParams, usize)> {
    let all: Vec<Complex64> = sums.iter().flat_map(|s| s.coeffs()).collect();
    let params = derive_params(
        adapter.max_solution_size().max(1),
        all.len().max(1),
        rounding_eps_for_budget(rounding_budget, &all),
        opts.rounding_scale,
    )?;
    let vectors = round_table(table, &params)?;
    let reach = enumerate_reachable(adapter, &vectors, &params, opts.state_budget)?;
    let mut out = Vec::with_capacity(reach.len());
    for (cfg, witness) in reach.configs {
        let mut offset = 0;
        let mut blocks = Vec::with_capacity(sums.len());
        for s in sums {
            let coeffs = s.coeffs();
            let value = expected_utility_terms(&witness, table, &coeffs, offset);
            blocks.push(BlockValue {
                score: score_terms(&cfg, &coeffs, offset, &params),
                expsum_value: value,
                certified_error: s.certified_error,
                lower_bound: value.re - s.certified_error,
            });
            offset += coeffs.len();
        }
        out.push(Candidate { solution: witness, blocks });
    }
    Ok((out, params, reach.states_explored))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiOutcome {
    pub solution: Vec<usize>,
    pub blocks: Vec<BlockValue>,
    pub reachable_size: usize,
    pub states_explored: usize,
}

/// Finds a feasible solution with `E[mu_b] >= lambda_b - eps` for every `b`.
///
/// Decomposition and rounding each get `eps / 8`; a witness is accepted when
/// every lower bound clears `lambda_b - eps`. Among accepted witnesses the one
/// with the largest worst-case slack wins.
pub fn multi_utility_solve<A: ProblemAdapter>(
    adapter: &A,
    rows: &[Vec<Option<Distribution>>],
    utilities: &[UtilitySpec],
    lambdas: &[f64],
    opts: &SolverOptions,
) -> Result<MultiOutcome> {
    opts.validate()?;
    if utilities.is_empty() || utilities.len() != lambdas.len() {
        return Err(Error::param("need one lambda per utility"));
    }
    let part = opts.eps / 8.0;
    let sums =
        utilities.iter().map(|u| esum_decompose(u, part, opts.max_terms)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&ExponentialSum> = sums.iter().collect();
    let table = stacked_table(rows, &refs)?;
    let (cands, _, explored) = stacked_candidates(adapter, &table, &refs, part, opts)?;
    let reachable_size = cands.len();
    let slack = |c: &Candidate| {
        c.blocks.iter().zip(lambdas).map(|(b, l)| b.lower_bound - l).fold(f64::INFINITY, f64::min)
    };
    let mut best: Option<(f64, Candidate)> = None;
    for c in cands {
        let s = slack(&c);
        if s >= -opts.eps && best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, c));
        }
    }
    let (_, c) = best.ok_or_else(|| Error::Infeasible("no solution meets every lambda".into()))?;
    Ok(MultiOutcome { solution: c.solution, blocks: c.blocks, reachable_size, states_explored: explored })
}

/// Items assigned to at most one of `bins` bins; element `i * bins + b` puts item `i` in bin `b`.
///
/// Integer weight totals over all bins must land in `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignAdapter {
    pub units: Vec<Option<u64>>,
    pub bins: usize,
    pub lo: u64,
    pub hi: u64,
}

impl AssignAdapter {
    pub fn is_feasible(&self, elements: &[usize]) -> bool {
        let items: Vec<usize> = elements.iter().map(|e| e / self.bins).collect();
        if items.windows(2).any(|w| w[0] >= w[1]) {
            return false;
        }
        let mut total = 0u64;
        for &i in &items {
            match self.units.get(i).copied().flatten() {
                Some(u) => total = total.saturating_add(u),
                None => return false,
            }
        }
        (self.lo..=self.hi).contains(&total)
    }

    pub fn split(&self, elements: &[usize]) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.bins];
        for &e in elements {
            out[e % self.bins].push(e / self.bins);
        }
        out
    }
}

impl ProblemAdapter for AssignAdapter {
    type State = (usize, u64);

    fn num_elements(&self) -> usize {
        self.units.len() * self.bins
    }

    fn max_solution_size(&self) -> usize {
        self.units.iter().filter(|u| u.is_some()).count()
    }

    fn initial_states(&self) -> Vec<(usize, u64)> {
        vec![(0, 0)]
    }

    fn successors(&self, &(i, total): &(usize, u64), out: &mut Vec<Step<(usize, u64)>>) {
        if i == self.units.len() {
            return;
        }
        out.push(Step { next: (i + 1, total), element: None });
        if let Some(u) = self.units[i] {
            let t = total.saturating_add(u);
            if t <= self.hi {
                for b in 0..self.bins {
                    out.push(Step { next: (i + 1, t), element: Some(i * self.bins + b) });
                }
            }
        }
    }

    fn is_accepting(&self, &(i, total): &(usize, u64)) -> bool {
        i == self.units.len() && total >= self.lo
    }

    fn max_stages(&self) -> usize {
        self.units.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipleKnapsackInstance {
    pub items: Vec<SizeItem>,
    /// Required fitting probability per knapsack.
    pub gammas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipleKnapsackReport {
    /// Item indices per knapsack.
    pub bins: Vec<Vec<usize>>,
    pub profit: f64,
    pub guess: f64,
    /// Lower bounds on `Pr(size(S_b) <= 1 + eps)`.
    pub probability_lower_bounds: Vec<f64>,
    pub targets: Vec<f64>,
    pub certified_error: f64,
    pub terms: usize,
}

/// Ordering key for candidates across guesses: profit, then slack, then the witness.
fn better(a: (f64, f64, &[usize]), b: (f64, f64, &[usize])) -> bool {
    (a.0, a.1) > (b.0, b.1) || ((a.0, a.1) == (b.0, b.1) && a.2 < b.2)
}

/// Best candidate so far across profit guesses; `key` breaks profit ties.
struct Incumbent<T> {
    profit: f64,
    key: f64,
    witness: Vec<usize>,
    guess: f64,
    extra: T,
}

fn improves<T>(best: &Option<Incumbent<T>>, profit: f64, key: f64, witness: &[usize]) -> bool {
    best.as_ref().is_none_or(|b| better((profit, key, witness), (b.profit, b.key, &b.witness)))
}

/// Disjoint sets for several knapsacks, maximizing total profit.
///
/// Same profit guessing as the single knapsack; each bin must certify
/// `Pr(size(S_b) <= 1 + eps) >= (1 - eps) gamma_b`.
pub fn multiple_knapsack_solve(
    inst: &MultipleKnapsackInstance,
    opts: &SolverOptions,
) -> Result<MultipleKnapsackReport> {
    opts.validate()?;
    if inst.items.is_empty() || inst.gammas.is_empty() {
        return Err(Error::param("need items and at least one knapsack"));
    }
    if let Some(g) = inst.gammas.iter().find(|g| !(**g > 0.0 && **g <= 1.0)) {
        return Err(Error::param(format!("gamma = {g} must lie in (0, 1]")));
    }
    if let Some(it) = inst.items.iter().find(|it| !(it.profit > 0.0 && it.profit.is_finite())) {
        return Err(Error::param(format!("profit {} must be positive", it.profit)));
    }
    let eps = opts.eps;
    let bins = inst.gammas.len();
    let part = eps / WRAPPER_SPLIT;
    let expsum = esum_decompose(&fit_ramp(eps), part, opts.max_terms)?;
    let refs = vec![&expsum; bins];
    let rows: Vec<Vec<Option<Distribution>>> = inst
        .items
        .iter()
        .flat_map(|it| (0..bins).map(move |b| (0..bins).map(|k| (k == b).then(|| it.size.clone())).collect()))
        .collect();
    let table = stacked_table(&rows, &refs)?;
    let targets: Vec<f64> = inst.gammas.iter().map(|g| (1.0 - eps) * g).collect();
    let profits: Vec<f64> = inst.items.iter().map(|it| it.profit).collect();
    let mut best: Option<Incumbent<(Vec<f64>, AssignAdapter)>> = None;
    for g in geometric_grid(profits.iter().copied().fold(f64::INFINITY, f64::min), profits.iter().sum(), eps)
    {
        let (units, lo, hi) = profit_units(&profits, g, eps);
        let adapter = AssignAdapter { units, bins, lo, hi };
        let cands = match stacked_candidates(&adapter, &table, &refs, part, opts) {
            Ok((c, _, _)) => c,
            Err(Error::Infeasible(_)) => continue,
            Err(e) => return Err(e),
        };
        for c in cands {
            debug_assert!(adapter.is_feasible(&c.solution));
            let slack =
                c.blocks.iter().zip(&targets).map(|(b, t)| b.lower_bound - t).fold(f64::INFINITY, f64::min);
            if slack < 0.0 {
                continue;
            }
            let profit: f64 = c.solution.iter().map(|e| profits[e / bins]).sum();
            if improves(&best, profit, slack, &c.solution) {
                let bounds = c.blocks.iter().map(|b| b.lower_bound).collect();
                best = Some(Incumbent {
                    profit,
                    key: slack,
                    witness: c.solution,
                    guess: g,
                    extra: (bounds, adapter.clone()),
                });
            }
        }
    }
    let Incumbent { profit, witness: solution, guess, extra: (bounds, adapter), .. } =
        best.ok_or_else(|| Error::Infeasible("no assignment certifies every knapsack".into()))?;
    if !adapter.is_feasible(&solution) {
        return Err(Error::Infeasible(format!("witness {solution:?} reuses an item")));
    }
    Ok(MultipleKnapsackReport {
        bins: adapter.split(&solution),
        profit,
        guess,
        probability_lower_bounds: bounds,
        targets,
        certified_error: expsum.certified_error,
        terms: expsum.len(),
    })
}

/// Two-dimensional random size of an item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VectorSize {
    Independent {
        first: Distribution,
        second: Distribution,
    },
    /// Finitely supported joint law of the pair.
    Joint {
        support: Vec<((f64, f64), f64)>,
    },
}

impl VectorSize {
    fn validate(&self) -> Result<()> {
        match self {
            VectorSize::Independent { .. } => Ok(()),
            VectorSize::Joint { support } => JointLaw2::new(support.clone()).map(|_| ()),
        }
    }

    /// `E[exp(r1 w1 + r2 w2)]`.
    pub fn joint_moment(&self, r1: Complex64, r2: Complex64) -> Result<Complex64> {
        match self {
            VectorSize::Independent { first, second } => {
                Ok(moment_at_rate(first, r1)?.value * moment_at_rate(second, r2)?.value)
            }
            VectorSize::Joint { support } => {
                Ok(support.iter().map(|&((x, y), p)| p * (r1 * x + r2 * y).exp()).sum())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorItem {
    pub size: VectorSize,
    pub profit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiDimInstance {
    pub items: Vec<VectorItem>,
    /// Required probability that both coordinates fit.
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiDimMode {
    Independent,
    Correlated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiDimReport {
    pub items: Vec<usize>,
    pub profit: f64,
    pub guess: f64,
    pub mode: MultiDimMode,
    /// Lower bound on `Pr(both coordinate sums <= 1 + eps)`.
    pub probability_lower_bound: f64,
    /// Threshold pair met by the coordinates (independent mode).
    pub pair: Option<(f64, f64)>,
    pub target: f64,
    pub certified_error: f64,
    pub terms: usize,
}

/// Threshold pairs: powers of `1 - eps/4` no smaller than `(1 - eps) gamma`,
/// with product at least `(1 - eps) gamma`, largest product first.
pub fn threshold_pairs(gamma: f64, eps: f64) -> Vec<(f64, f64)> {
    let floor = (1.0 - eps) * gamma;
    let grid = {
        let mut g = vec![1.0];
        while g[g.len() - 1] * (1.0 - eps / 4.0) >= floor {
            let next = g[g.len() - 1] * (1.0 - eps / 4.0);
            g.push(next);
        }
        g
    };
    let mut pairs: Vec<(f64, f64)> = grid
        .iter()
        .flat_map(|&a| grid.iter().map(move |&b| (a, b)))
        .filter(|&(a, b)| a * b >= floor)
        .collect();
    pairs.sort_by(|x, y| (y.0 * y.1).total_cmp(&(x.0 * x.1)).then(y.0.total_cmp(&x.0)));
    pairs
}

/// Profit maximization with two-dimensional random sizes.
///
/// Independent mode stacks one fit ramp per coordinate and accepts a witness
/// whose coordinate bounds clear some threshold pair; coordinate independence
/// turns the product of bounds into a bound on the joint probability.
/// Correlated mode decomposes the two-dimensional plateau utility and takes
/// joint moments directly.
pub fn multidim_knapsack_solve(
    inst: &MultiDimInstance,
    mode: MultiDimMode,
    opts: &SolverOptions,
) -> Result<MultiDimReport> {
    opts.validate()?;
    if inst.items.is_empty() {
        return Err(Error::param("knapsack has no items"));
    }
    if !(inst.gamma > 0.0 && inst.gamma <= 1.0) {
        return Err(Error::param(format!("gamma = {} must lie in (0, 1]", inst.gamma)));
    }
    for it in &inst.items {
        it.size.validate()?;
        if !(it.profit > 0.0 && it.profit.is_finite()) {
            return Err(Error::param(format!("profit {} must be positive", it.profit)));
        }
    }
    match mode {
        MultiDimMode::Independent => independent(inst, opts),
        MultiDimMode::Correlated => correlated(inst, opts),
    }
}

fn independent(inst: &MultiDimInstance, opts: &SolverOptions) -> Result<MultiDimReport> {
    let eps = opts.eps;
    let rows = inst
        .items
        .iter()
        .map(|it| match &it.size {
            VectorSize::Independent { first, second } => Ok(vec![Some(first.clone()), Some(second.clone())]),
            VectorSize::Joint { .. } => {
                Err(Error::param("independent mode needs independent coordinates; use correlated mode"))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let part = eps / WRAPPER_SPLIT;
    let expsum = esum_decompose(&fit_ramp(eps), part, opts.max_terms)?;
    let refs = [&expsum, &expsum];
    let table = stacked_table(&rows, &refs)?;
    let pairs = threshold_pairs(inst.gamma, eps);
    let profits: Vec<f64> = inst.items.iter().map(|it| it.profit).collect();
    let mut best: Option<Incumbent<(f64, f64)>> = None;
    for g in geometric_grid(profits.iter().copied().fold(f64::INFINITY, f64::min), profits.iter().sum(), eps)
    {
        let (units, lo, hi) = profit_units(&profits, g, eps);
        let adapter = super::knapsack::BandAdapter { units, lo, hi: Some(hi) };
        let cands = match stacked_candidates(&adapter, &table, &refs, part, opts) {
            Ok((c, _, _)) => c,
            Err(Error::Infeasible(_)) => continue,
            Err(e) => return Err(e),
        };
        for c in cands {
            let (l1, l2) = (c.blocks[0].lower_bound, c.blocks[1].lower_bound);
            let Some(&pair) = pairs.iter().find(|&&(a, b)| l1 >= a && l2 >= b) else {
                continue;
            };
            let profit: f64 = c.solution.iter().map(|&i| profits[i]).sum();
            let bound = l1 * l2;
            if improves(&best, profit, bound, &c.solution) {
                if !adapter.is_feasible(&c.solution) {
                    return Err(Error::Infeasible(format!("witness {:?} leaves the band", c.solution)));
                }
                best = Some(Incumbent { profit, key: bound, witness: c.solution, guess: g, extra: pair });
            }
        }
    }
    let Incumbent { profit, key: bound, witness: items, guess, extra: pair } =
        best.ok_or_else(|| Error::Infeasible("no set certifies both coordinates".into()))?;
    Ok(MultiDimReport {
        items,
        profit,
        guess,
        mode: MultiDimMode::Independent,
        probability_lower_bound: bound,
        pair: Some(pair),
        target: (1.0 - eps) * inst.gamma,
        certified_error: expsum.certified_error,
        terms: 2 * expsum.len(),
    })
}

/// The correlated mode decomposes with `eps / 2`: the plateau needs far more
/// terms per unit of accuracy than a single ramp.
fn correlated(inst: &MultiDimInstance, opts: &SolverOptions) -> Result<MultiDimReport> {
    let eps = opts.eps;
    let expsum =
        esum_decompose_2d(&Utility2D::Plateau { delta: eps, threshold: 1.0 }, eps / 2.0, opts.max_terms)?;
    let coeffs: Vec<Complex64> = expsum.terms.iter().map(|t| t.coeff).collect();
    let moments = inst
        .items
        .iter()
        .map(|it| {
            expsum.terms.iter().map(|t| it.size.joint_moment(t.rate1, t.rate2)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let table = MomentTable::new(moments)?;
    let target = (1.0 - eps) * inst.gamma;
    let part = eps / WRAPPER_SPLIT;
    let profits: Vec<f64> = inst.items.iter().map(|it| it.profit).collect();
    let mut best: Option<(f64, f64, Vec<usize>, f64)> = None;
    for g in geometric_grid(profits.iter().copied().fold(f64::INFINITY, f64::min), profits.iter().sum(), eps)
    {
        let (units, lo, hi) = profit_units(&profits, g, eps);
        let adapter = super::knapsack::BandAdapter { units, lo, hi: Some(hi) };
        let out = match solve_table(
            &adapter,
            &table,
            &coeffs,
            expsum.certified_error,
            part,
            opts,
            Mode::Maximize,
        ) {
            Ok(o) => o,
            Err(Error::Infeasible(_)) => continue,
            Err(e) => return Err(e),
        };
        if !adapter.is_feasible(&out.solution) {
            return Err(Error::Infeasible(format!("witness {:?} leaves the band", out.solution)));
        }
        let bound = out.expsum_value.re - expsum.certified_error;
        if bound < target {
            continue;
        }
        let profit: f64 = out.solution.iter().map(|&i| profits[i]).sum();
        if best.as_ref().is_none_or(|(p, b, w, _)| better((profit, bound, &out.solution), (*p, *b, w))) {
            best = Some((profit, bound, out.solution, g));
        }
    }
    let (profit, bound, items, guess) =
        best.ok_or_else(|| Error::Infeasible("no set certifies the joint fit".into()))?;
    Ok(MultiDimReport {
        items,
        profit,
        guess,
        mode: MultiDimMode::Correlated,
        probability_lower_bound: bound,
        pair: None,
        target,
        certified_error: expsum.certified_error,
        terms: expsum.len(),
    })
}
