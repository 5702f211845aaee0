//! Combinatorial problems wired to the configuration engine.
//!
//! Each problem supplies a [`ProblemAdapter`] for its feasibility structure and,
//! where the objective is a probability, a wrapper that picks a ramp utility,
//! decomposes it and checks the returned witness against the target.

pub mod knapsack;
pub mod multi;
pub mod shortest_path;
pub mod spanning_tree;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{
    config_of, expected_utility_expsum, rounding_eps_for_budget, score_config, solve, Mode, MomentTable,
    ProblemAdapter, RoundingParams, SolveOptions, DEFAULT_STATE_BUDGET,
};
use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::esum::{esum_decompose, ExponentialSum, UtilitySpec};

/// Knobs shared by all solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Total additive error budget.
    pub eps: f64,
    pub max_terms: usize,
    pub rounding_scale: f64,
    pub state_budget: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            eps: 0.2,
            max_terms: 1 << 17,
            rounding_scale: 1.0,
            state_budget: DEFAULT_STATE_BUDGET,
        }
    }
}

impl SolverOptions {
    pub fn with_eps(eps: f64) -> Self {
        SolverOptions { eps, ..SolverOptions::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::param(format!("eps = {} must lie in (0, 1)", self.eps)));
        }
        if self.max_terms < 3 {
            return Err(Error::param("max_terms must be at least 3"));
        }
        if !(self.rounding_scale >= 1.0) {
            return Err(Error::param("rounding scale must be at least 1"));
        }
        if self.state_budget == 0 {
            return Err(Error::param("state budget must be positive"));
        }
        Ok(())
    }
}

/// Solution of an expected-utility problem with its error accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EumOutcome {
    pub solution: Vec<usize>,
    /// Unrounded `E[mu_tilde(w(S))]`.
    pub expsum_value: Complex64,
    pub score: Complex64,
    pub certified_error: f64,
    /// `|score - expsum_value|` of the returned solution.
    pub rounding_gap: f64,
    /// Largest such gap over all reachable configurations.
    pub max_rounding_gap: f64,
    pub terms: usize,
    pub abs_coeff_sum: f64,
    pub reachable_size: usize,
    pub states_explored: usize,
    pub params: Option<RoundingParams>,
}

/// Decomposes `mu` with `opts.eps / 2` and rounds with a gap budget of `opts.eps / 2`.
pub fn maximize_expected_utility<A: ProblemAdapter>(
    adapter: &A,
    dists: &[Distribution],
    mu: &UtilitySpec,
    opts: &SolverOptions,
) -> Result<(EumOutcome, ExponentialSum)> {
    opts.validate()?;
    let expsum = esum_decompose(mu, opts.eps / 2.0, opts.max_terms)?;
    let out = solve_with_expsum(adapter, dists, &expsum, opts.eps / 2.0, opts, Mode::Maximize)?;
    Ok((out, expsum))
}

/// Runs the configuration engine for a fixed decomposition.
pub fn solve_with_expsum<A: ProblemAdapter>(
    adapter: &A,
    dists: &[Distribution],
    expsum: &ExponentialSum,
    rounding_budget: f64,
    opts: &SolverOptions,
    mode: Mode,
) -> Result<EumOutcome> {
    let coeffs = expsum.coeffs();
    let table = MomentTable::from_distributions(dists, &expsum.rates())?;
    solve_table(adapter, &table, &coeffs, expsum.certified_error, rounding_budget, opts, mode)
}

pub(crate) fn solve_table<A: ProblemAdapter>(
    adapter: &A,
    table: &MomentTable,
    coeffs: &[Complex64],
    certified_error: f64,
    rounding_budget: f64,
    opts: &SolverOptions,
    mode: Mode,
) -> Result<EumOutcome> {
    let solve_opts = SolveOptions {
        rounding_eps: rounding_eps_for_budget(rounding_budget, coeffs),
        rounding_scale: opts.rounding_scale,
        state_budget: opts.state_budget,
        mode,
    };
    let out = solve(adapter, table, coeffs, &solve_opts)?;
    Ok(EumOutcome {
        solution: out.solution,
        expsum_value: out.exact_value,
        score: out.score,
        certified_error,
        rounding_gap: out.gap,
        max_rounding_gap: out.max_gap,
        terms: coeffs.len(),
        abs_coeff_sum: coeffs.iter().map(|c| c.norm()).sum(),
        reachable_size: out.reachable_size,
        states_explored: out.states_explored,
        params: Some(out.params),
    })
}

/// `|score(config(S)) - E[mu_tilde(w(S))]|` for any solution `S`.
///
/// Together with the returned solution's own gap this bounds what rounding
/// can cost against a competitor `S`.
pub fn rounding_gap_of(
    solution: &[usize],
    dists: &[Distribution],
    expsum: &ExponentialSum,
    params: &RoundingParams,
) -> Result<f64> {
    let coeffs = expsum.coeffs();
    let table = MomentTable::from_distributions(dists, &expsum.rates())?;
    let cfg = config_of(solution, &table, params)?;
    let exact = expected_utility_expsum(solution, &table, &coeffs);
    Ok((score_config(&cfg, &coeffs, params) - exact).norm())
}

/// `lo * (1 + eps)^j` for all `j` with value at most `hi`, ascending.
pub fn geometric_grid(lo: f64, hi: f64, eps: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut g = lo;
    while g <= hi * (1.0 + 1e-12) {
        out.push(g);
        g *= 1.0 + eps;
    }
    out
}
