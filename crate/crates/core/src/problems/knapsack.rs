//! Knapsack variants.
//!
//! * [`covering_solve`]: maximize `E[mu(size(S))]` over sets whose integer
//!   profit reaches a floor.
//! * [`knapsack_size_solve`]: random sizes, deterministic profits. Maximize
//!   profit subject to `Pr(size(S) <= 1) >= gamma`, relaxed to `1 + eps` and
//!   `(1 - eps) gamma`.
//! * [`knapsack_profit_solve`]: deterministic sizes, random profits. Maximize
//!   `Pr(profit(S) >= T)` subject to `size(S) <= 1`, relaxed to `1 + eps` and
//!   `(1 - eps) T`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{geometric_grid, solve_table, EumOutcome, SolverOptions};
use crate::config::{Mode, MomentTable, ProblemAdapter, Step};
use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::esum::{esum_decompose, ExponentialSum, UtilitySpec};

/// The wrappers spend `eps / WRAPPER_SPLIT` on the decomposition and the same on rounding.
pub const WRAPPER_SPLIT: f64 = 16.0;

/// Subsets chosen item by item whose integer weight total lands in `[lo, hi]`.
///
/// `None` marks an item that may not be taken. With `hi = None` totals are
/// clamped at `lo`, which keeps the state space finite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandAdapter {
    pub units: Vec<Option<u64>>,
    pub lo: u64,
    pub hi: Option<u64>,
}

impl BandAdapter {
    pub fn is_feasible(&self, set: &[usize]) -> bool {
        if set.windows(2).any(|w| w[0] >= w[1]) {
            return false;
        }
        let mut total: u64 = 0;
        for &i in set {
            match self.units.get(i).copied().flatten() {
                Some(u) => total = total.saturating_add(u),
                None => return false,
            }
        }
        total >= self.lo && self.hi.is_none_or(|h| total <= h)
    }
}

impl ProblemAdapter for BandAdapter {
    /// `(next item, weight total so far)`.
    type State = (usize, u64);

    fn num_elements(&self) -> usize {
        self.units.len()
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
            match self.hi {
                Some(h) if t > h => {}
                Some(_) => out.push(Step { next: (i + 1, t), element: Some(i) }),
                None => out.push(Step { next: (i + 1, t.min(self.lo)), element: Some(i) }),
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

/// Random sizes with integer profits and a profit floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringInstance {
    pub sizes: Vec<Distribution>,
    pub profits: Vec<u64>,
    pub min_profit: u64,
}

impl CoveringInstance {
    pub fn adapter(&self) -> Result<BandAdapter> {
        if self.sizes.len() != self.profits.len() {
            return Err(Error::param("sizes and profits differ in length"));
        }
        Ok(BandAdapter {
            units: self.profits.iter().map(|&p| Some(p)).collect(),
            lo: self.min_profit,
            hi: None,
        })
    }
}

/// Approximately maximizes `E[mu(size(S))]` over sets with profit at least the floor.
pub fn covering_solve(
    inst: &CoveringInstance,
    mu: &UtilitySpec,
    opts: &SolverOptions,
) -> Result<(EumOutcome, ExponentialSum)> {
    let adapter = inst.adapter()?;
    let (out, expsum) = super::maximize_expected_utility(&adapter, &inst.sizes, mu, opts)?;
    if !adapter.is_feasible(&out.solution) {
        return Err(Error::Infeasible(format!("witness {:?} misses the profit floor", out.solution)));
    }
    Ok((out, expsum))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeItem {
    pub size: Distribution,
    pub profit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeKnapsackInstance {
    pub items: Vec<SizeItem>,
    /// Required probability of fitting.
    pub gamma: f64,
}

impl SizeKnapsackInstance {
    pub fn validate(&self) -> Result<()> {
        if self.items.is_empty() {
            return Err(Error::param("knapsack has no items"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::param(format!("gamma = {} must lie in (0, 1]", self.gamma)));
        }
        if let Some(it) = self.items.iter().find(|it| !(it.profit > 0.0 && it.profit.is_finite())) {
            return Err(Error::param(format!("profit {} must be positive", it.profit)));
        }
        Ok(())
    }

    pub fn sizes(&self) -> Vec<Distribution> {
        self.items.iter().map(|it| it.size.clone()).collect()
    }

    pub fn profit(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.items[i].profit).sum()
    }
}

/// Outcome of one profit guess.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuessRecord {
    pub guess: f64,
    /// Witness found for this guess, if its profit band was reachable.
    pub items: Option<Vec<usize>>,
    pub profit: f64,
    /// `Re E[mu_tilde] - certified error`, a lower bound on `Pr(size <= 1 + eps)`.
    pub probability_lower_bound: f64,
    pub qualified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeKnapsackReport {
    pub items: Vec<usize>,
    pub profit: f64,
    pub guess: f64,
    pub expsum_value: Complex64,
    pub certified_error: f64,
    pub probability_lower_bound: f64,
    pub target: f64,
    pub terms: usize,
    pub guesses: Vec<GuessRecord>,
}

/// The fit indicator relaxed by `eps`: 1 up to size 1, linear down to 0 at `1 + eps`.
pub fn fit_ramp(eps: f64) -> UtilitySpec {
    UtilitySpec::ThresholdRamp { delta: eps, threshold: 1.0 }
}

/// Profit units of the items under guess `g`, or `None` for items above `g`.
///
/// Profits below `eps g / n` count as zero; the rest are floored to multiples
/// of `eps g / n^2`. Returns the units and the band `[lo, hi]` standing for
/// `[(1 - 2 eps) g, (1 + 2 eps) g]`.
pub fn profit_units(profits: &[f64], g: f64, eps: f64) -> (Vec<Option<u64>>, u64, u64) {
    let n = profits.len() as f64;
    let unit = eps * g / (n * n);
    let units = profits
        .iter()
        .map(|&v| {
            if v > g * (1.0 + 1e-12) {
                None
            } else if v < eps * g / n {
                Some(0)
            } else {
                Some((v / unit + 1e-9).floor() as u64)
            }
        })
        .collect();
    let lo = ((1.0 - 2.0 * eps) * n * n / eps - 1e-9).ceil().max(0.0) as u64;
    let hi = ((1.0 + 2.0 * eps) * n * n / eps + 1e-9).floor() as u64;
    (units, lo, hi)
}

/// Profit maximization under a chance constraint on random sizes.
///
/// Guesses run over powers of `1 + eps` between the smallest profit and the
/// total. For each guess the configuration engine finds a set in the profit
/// band that maximizes `E[mu_tilde]`; a set qualifies when
/// `Re E[mu_tilde] - certified error >= (1 - eps) gamma`, which implies
/// `Pr(size <= 1 + eps) >= (1 - eps) gamma`. The qualifying set of largest
/// true profit is returned.
pub fn knapsack_size_solve(inst: &SizeKnapsackInstance, opts: &SolverOptions) -> Result<SizeKnapsackReport> {
    inst.validate()?;
    opts.validate()?;
    let eps = opts.eps;
    let part = eps / WRAPPER_SPLIT;
    let expsum = esum_decompose(&fit_ramp(eps), part, opts.max_terms)?;
    let coeffs = expsum.coeffs();
    let table = MomentTable::from_distributions(&inst.sizes(), &expsum.rates())?;
    let profits: Vec<f64> = inst.items.iter().map(|it| it.profit).collect();
    let min_v = profits.iter().copied().fold(f64::INFINITY, f64::min);
    let target = (1.0 - eps) * inst.gamma;
    let mut guesses = Vec::new();
    let mut best: Option<(f64, f64, Vec<usize>, f64, Complex64)> = None;
    for g in geometric_grid(min_v, profits.iter().sum(), eps) {
        let (units, lo, hi) = profit_units(&profits, g, eps);
        let adapter = BandAdapter { units, lo, hi: Some(hi) };
        let out = match solve_table(
            &adapter,
            &table,
            &coeffs,
            expsum.certified_error,
            part,
            opts,
            Mode::Maximize,
        ) {
            Ok(out) => out,
            Err(Error::Infeasible(_)) => {
                guesses.push(GuessRecord {
                    guess: g,
                    items: None,
                    profit: 0.0,
                    probability_lower_bound: 0.0,
                    qualified: false,
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        if !adapter.is_feasible(&out.solution) {
            return Err(Error::Infeasible(format!("witness {:?} leaves the profit band", out.solution)));
        }
        let bound = out.expsum_value.re - expsum.certified_error;
        let profit = inst.profit(&out.solution);
        let qualified = bound >= target;
        if qualified {
            let better = match &best {
                None => true,
                Some((p, b, s, _, _)) => {
                    (profit, bound) > (*p, *b) || ((profit, bound) == (*p, *b) && out.solution < *s)
                }
            };
            if better {
                best = Some((profit, bound, out.solution.clone(), g, out.expsum_value));
            }
        }
        guesses.push(GuessRecord {
            guess: g,
            items: Some(out.solution),
            profit,
            probability_lower_bound: bound,
            qualified,
        });
    }
    let Some((profit, bound, items, guess, value)) = best else {
        return Err(Error::Infeasible(format!("no set certifies Pr(size <= 1 + eps) >= {target:.6}")));
    };
    Ok(SizeKnapsackReport {
        items,
        profit,
        guess,
        expsum_value: value,
        certified_error: expsum.certified_error,
        probability_lower_bound: bound,
        target,
        terms: coeffs.len(),
        guesses,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfitItem {
    pub size: f64,
    pub profit: Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfitKnapsackInstance {
    pub items: Vec<ProfitItem>,
    /// Profit level `T` to reach.
    pub threshold: f64,
}

impl ProfitKnapsackInstance {
    pub fn validate(&self) -> Result<()> {
        if self.items.is_empty() {
            return Err(Error::param("knapsack has no items"));
        }
        if !(self.threshold >= 0.0 && self.threshold.is_finite()) {
            return Err(Error::param(format!("threshold {} must be nonnegative", self.threshold)));
        }
        if let Some(it) = self.items.iter().find(|it| !(it.size >= 0.0 && it.size.is_finite())) {
            return Err(Error::param(format!("size {} must be nonnegative", it.size)));
        }
        Ok(())
    }

    pub fn profits(&self) -> Vec<Distribution> {
        self.items.iter().map(|it| it.profit.clone()).collect()
    }

    pub fn size(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.items[i].size).sum()
    }

    /// Sizes floored to multiples of `eps / n`, in those units, and the capacity `n / eps`.
    pub fn size_units(&self, eps: f64) -> (Vec<Option<u64>>, u64) {
        let scale = self.items.len() as f64 / eps;
        let cap = (scale + 1e-9).floor() as u64;
        let units = self
            .items
            .iter()
            .map(|it| {
                let u = (it.size * scale + 1e-9).floor();
                (u <= cap as f64).then_some(u as u64)
            })
            .collect();
        (units, cap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfitKnapsackReport {
    pub items: Vec<usize>,
    pub size: f64,
    /// Lower bound on `Pr(profit > (1 - eps) T)`.
    pub probability_lower_bound: f64,
    /// `Re E[nu_tilde]` for the shortfall utility `nu`; `None` when `T = 0`.
    pub expsum_value: Option<Complex64>,
    pub certified_error: f64,
    pub terms: usize,
}

/// Shortfall utility on `profit / T`: 1 up to `1 - eps`, linear down to 0 at 1.
pub fn shortfall_ramp(eps: f64) -> UtilitySpec {
    UtilitySpec::ThresholdRamp { delta: eps, threshold: 1.0 - eps }
}

/// Approximately maximizes the chance of reaching profit `T`.
///
/// Minimizes `E[nu(profit(S) / T)]`, whose value is at least
/// `Pr(profit <= (1 - eps) T)` and at most `Pr(profit < T)`, over sets whose
/// rounded size is at most 1. For `T = 0` every set reaches `T`, and the
/// strict event `profit > 0` is maximized exactly instead.
pub fn knapsack_profit_solve(
    inst: &ProfitKnapsackInstance,
    opts: &SolverOptions,
) -> Result<ProfitKnapsackReport> {
    inst.validate()?;
    opts.validate()?;
    let eps = opts.eps;
    let (units, cap) = inst.size_units(eps);
    let adapter = BandAdapter { units, lo: 0, hi: Some(cap) };
    if inst.threshold == 0.0 {
        return zero_threshold(inst, &adapter);
    }
    let part = eps / WRAPPER_SPLIT;
    let expsum = esum_decompose(&shortfall_ramp(eps), part, opts.max_terms)?.rescaled(1.0 / inst.threshold);
    let out = super::solve_with_expsum(&adapter, &inst.profits(), &expsum, part, opts, Mode::Minimize)?;
    if !adapter.is_feasible(&out.solution) {
        return Err(Error::Infeasible(format!("witness {:?} exceeds the capacity", out.solution)));
    }
    Ok(ProfitKnapsackReport {
        size: inst.size(&out.solution),
        probability_lower_bound: (1.0 - out.expsum_value.re - expsum.certified_error).max(0.0),
        items: out.solution,
        expsum_value: Some(out.expsum_value),
        certified_error: expsum.certified_error,
        terms: out.terms,
    })
}

/// `Pr(profit = 0)` for one item.
fn mass_at_zero(d: &Distribution) -> f64 {
    match d {
        Distribution::Discrete(s) => s.iter().filter(|(v, _)| *v == 0.0).map(|(_, p)| p).sum(),
        Distribution::Poisson { lambda } => (-lambda).exp(),
        Distribution::Exponential { .. } | Distribution::Gaussian { .. } => 0.0,
    }
}

/// Minimizes `prod_{i in S} Pr(profit_i = 0)` under the rounded capacity.
fn zero_threshold(inst: &ProfitKnapsackInstance, adapter: &BandAdapter) -> Result<ProfitKnapsackReport> {
    let cap = adapter.hi.expect("capacity") as usize;
    // best[c]: smallest product with rounded size exactly c
    let mut best: Vec<Option<(f64, Vec<usize>)>> = vec![None; cap + 1];
    best[0] = Some((1.0, Vec::new()));
    for (i, it) in inst.items.iter().enumerate() {
        let Some(u) = adapter.units[i] else { continue };
        let q = mass_at_zero(&it.profit);
        for c in (u as usize..=cap).rev() {
            if let Some((p, set)) = best[c - u as usize].clone() {
                let cand = p * q;
                if best[c].as_ref().is_none_or(|(b, _)| cand < *b) {
                    let mut s = set;
                    s.push(i);
                    best[c] = Some((cand, s));
                }
            }
        }
    }
    let (p, items) = best
        .into_iter()
        .flatten()
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)))
        .expect("empty set fits");
    Ok(ProfitKnapsackReport {
        size: inst.size(&items),
        probability_lower_bound: 1.0 - p,
        items,
        expsum_value: None,
        certified_error: 0.0,
        terms: 0,
    })
}
