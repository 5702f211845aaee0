//! Ground truth by exhaustive enumeration.
//!
//! Discrete weights are summed exactly by convolution; any continuous law
//! switches evaluation to seeded Monte Carlo. Nothing here touches exponential
//! sums or rounding, so the oracle stays independent of the solver.

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ProblemAdapter, Step};
use crate::distributions::Distribution;
use crate::error::{Error, Result};

/// Values closer than this are merged into one atom.
pub const MERGE_TOL: f64 = 1e-12;
/// Default cap on atoms of a convolved law.
pub const SUPPORT_CAP: usize = 1_000_000;
/// Default cap on enumerated feasible solutions.
pub const SOLUTION_CAP: usize = 100_000;
/// Smallest admissible Monte Carlo sample count.
pub const MIN_SAMPLES: usize = 10_000;

/// A finitely supported law on `[0, inf)`, sorted by value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLaw {
    support: Vec<(f64, f64)>,
}

impl DiscreteLaw {
    pub fn new(mut support: Vec<(f64, f64)>) -> Result<Self> {
        if support.iter().any(|&(v, p)| !(v >= 0.0 && v.is_finite()) || !(p >= 0.0)) {
            return Err(Error::InvalidDistribution(
                "law needs finite nonnegative values and probabilities".into(),
            ));
        }
        let total: f64 = support.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("law has total probability {total}")));
        }
        support.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(DiscreteLaw { support: merge_sorted(support) })
    }

    pub fn point(v: f64) -> Self {
        DiscreteLaw { support: vec![(v, 1.0)] }
    }

    pub fn from_distribution(d: &Distribution) -> Option<Self> {
        match d {
            Distribution::Discrete(s) => DiscreteLaw::new(s.clone()).ok(),
            _ => None,
        }
    }

    pub fn support(&self) -> &[(f64, f64)] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn total_probability(&self) -> f64 {
        self.support.iter().map(|a| a.1).sum()
    }

    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.support.iter().map(|&(v, p)| f(v) * p).sum()
    }

    /// `Pr(W <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.support.iter().filter(|a| a.0 <= x).map(|a| a.1).sum()
    }

    /// `Pr(W > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        self.support.iter().filter(|a| a.0 > x).map(|a| a.1).sum()
    }
}

fn merge_sorted(sorted: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
    for (v, p) in sorted {
        match out.last_mut() {
            Some(last) if v - last.0 <= MERGE_TOL => last.1 += p,
            _ => out.push((v, p)),
        }
    }
    out
}

fn convolve_pair(a: &DiscreteLaw, b: &DiscreteLaw, cap: usize) -> Result<DiscreteLaw> {
    let raw = a.len().saturating_mul(b.len());
    if raw > cap.saturating_mul(16) {
        return Err(Error::SupportExplosion { size: raw, cap });
    }
    let mut atoms = Vec::with_capacity(raw);
    for &(x, p) in &a.support {
        for &(y, q) in &b.support {
            atoms.push((x + y, p * q));
        }
    }
    atoms.sort_by(|u, v| u.0.total_cmp(&v.0));
    let support = merge_sorted(atoms);
    if support.len() > cap {
        return Err(Error::SupportExplosion { size: support.len(), cap });
    }
    Ok(DiscreteLaw { support })
}

/// Law of the sum of independent variables; the empty sum is the point mass at 0.
pub fn convolve(laws: &[DiscreteLaw]) -> Result<DiscreteLaw> {
    convolve_with_cap(laws, SUPPORT_CAP)
}

pub fn convolve_with_cap(laws: &[DiscreteLaw], cap: usize) -> Result<DiscreteLaw> {
    laws.iter().try_fold(DiscreteLaw::point(0.0), |acc, l| convolve_pair(&acc, l, cap))
}

/// Law of `w(S)` for a multiset of element indices.
pub fn solution_law(solution: &[usize], laws: &[DiscreteLaw]) -> Result<DiscreteLaw> {
    let parts: Vec<DiscreteLaw> = solution.iter().map(|&e| laws[e].clone()).collect();
    convolve(&parts)
}

/// Seeded Monte Carlo mean of `f(w(S))` and its standard error.
///
/// Position `j` of the solution draws from its own ChaCha stream `j` under
/// `seed`, so estimates are reproducible bit for bit.
pub fn mc_expectation<F: Fn(f64) -> f64>(
    solution: &[usize],
    dists: &[Distribution],
    f: F,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if samples < MIN_SAMPLES {
        return Err(Error::param(format!("Monte Carlo needs at least {MIN_SAMPLES} samples, got {samples}")));
    }
    let mut streams: Vec<ChaCha8Rng> = (0..solution.len())
        .map(|j| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(j as u64);
            r
        })
        .collect();
    // Welford: exact for constant samples
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    for i in 0..samples {
        let w: f64 = solution.iter().zip(streams.iter_mut()).map(|(&e, rng)| dists[e].sample(rng)).sum();
        let x = f(w);
        let d = x - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (x - mean);
    }
    let var = if samples > 1 { m2 / (samples - 1) as f64 } else { 0.0 };
    Ok((mean, (var / samples as f64).sqrt()))
}

pub fn mc_expected_utility(
    solution: &[usize],
    dists: &[Distribution],
    utility: &crate::esum::UtilitySpec,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    mc_expectation(solution, dists, |w| utility.value(w), samples, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleMethod {
    ExactConvolution,
    MonteCarlo { samples: usize, seed: u64, max_stderr: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionValue {
    pub solution: Vec<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub best_solution: Vec<usize>,
    pub best_value: f64,
    pub values: Vec<SolutionValue>,
    pub method: OracleMethod,
}

/// Monte Carlo settings used when some law is continuous.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSettings {
    pub samples: usize,
    pub seed: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings { samples: 100_000, seed: 0 }
    }
}

/// Evaluates `E[f(w(S))]` for every listed solution and returns the best.
///
/// Ties go to the lexicographically smallest solution.
pub fn brute_force_solve<F: Fn(f64) -> f64>(
    solutions: &[Vec<usize>],
    dists: &[Distribution],
    f: F,
    maximize: bool,
    mc: McSettings,
) -> Result<OracleReport> {
    if solutions.is_empty() {
        return Err(Error::Infeasible("no feasible solution".into()));
    }
    let exact_laws: Option<Vec<DiscreteLaw>> = dists.iter().map(DiscreteLaw::from_distribution).collect();
    let mut values = Vec::with_capacity(solutions.len());
    let mut max_stderr = 0.0f64;
    for s in solutions {
        let value = match &exact_laws {
            Some(laws) => solution_law(s, laws)?.expect(&f),
            None => {
                let (v, se) = mc_expectation(s, dists, &f, mc.samples, mc.seed)?;
                max_stderr = max_stderr.max(se);
                v
            }
        };
        values.push(SolutionValue { solution: s.clone(), value });
    }
    let best = values
        .iter()
        .min_by(|a, b| {
            let by_value = if maximize { b.value.total_cmp(&a.value) } else { a.value.total_cmp(&b.value) };
            match by_value {
                Ordering::Equal => a.solution.cmp(&b.solution),
                o => o,
            }
        })
        .expect("nonempty");
    let method = match exact_laws {
        Some(_) => OracleMethod::ExactConvolution,
        None => OracleMethod::MonteCarlo { samples: mc.samples, seed: mc.seed, max_stderr },
    };
    Ok(OracleReport { best_solution: best.solution.clone(), best_value: best.value, values, method })
}

/// Every accepted transition path of an adapter, as element sequences.
///
/// Distinct paths spelling the same element sequence are reported once.
pub fn enumerate_solutions<A: ProblemAdapter>(adapter: &A, cap: usize) -> Result<Vec<Vec<usize>>> {
    let mut out = std::collections::BTreeSet::new();
    let mut stack: Vec<(A::State, Vec<usize>, usize)> =
        adapter.initial_states().into_iter().map(|s| (s, Vec::new(), 0)).collect();
    let mut steps: Vec<Step<A::State>> = Vec::new();
    while let Some((state, path, depth)) = stack.pop() {
        if adapter.is_accepting(&state) {
            out.insert(path.clone());
            if out.len() > cap {
                return Err(Error::TooManySolutions { cap });
            }
        }
        if depth == adapter.max_stages() {
            continue;
        }
        steps.clear();
        adapter.successors(&state, &mut steps);
        for step in steps.drain(..) {
            let mut p = path.clone();
            if let Some(e) = step.element {
                p.push(e);
            }
            stack.push((step.next, p, depth + 1));
        }
    }
    Ok(out.into_iter().collect())
}

/// A finitely supported law on `[0, inf)^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointLaw2 {
    support: Vec<((f64, f64), f64)>,
}

impl JointLaw2 {
    pub fn new(mut support: Vec<((f64, f64), f64)>) -> Result<Self> {
        let total: f64 = support.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-9
            || support
                .iter()
                .any(|&((x, y), p)| !(x >= 0.0 && y >= 0.0 && x.is_finite() && y.is_finite() && p > 0.0))
        {
            return Err(Error::InvalidDistribution(
                "joint law needs nonnegative atoms with probabilities summing to 1".into(),
            ));
        }
        support.sort_by(|a, b| a.0 .0.total_cmp(&b.0 .0).then(a.0 .1.total_cmp(&b.0 .1)));
        Ok(JointLaw2 { support: merge_sorted_2d(support) })
    }

    pub fn point(x: f64, y: f64) -> Self {
        JointLaw2 { support: vec![((x, y), 1.0)] }
    }

    pub fn support(&self) -> &[((f64, f64), f64)] {
        &self.support
    }

    pub fn expect<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        self.support.iter().map(|&((x, y), p)| f(x, y) * p).sum()
    }

    pub fn marginal(&self, axis: usize) -> DiscreteLaw {
        let mut atoms: Vec<(f64, f64)> =
            self.support.iter().map(|&((x, y), p)| (if axis == 0 { x } else { y }, p)).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        DiscreteLaw { support: merge_sorted(atoms) }
    }
}

fn merge_sorted_2d(sorted: Vec<((f64, f64), f64)>) -> Vec<((f64, f64), f64)> {
    let mut out: Vec<((f64, f64), f64)> = Vec::with_capacity(sorted.len());
    for (v, p) in sorted {
        match out.last_mut() {
            Some(last) if (v.0 - last.0 .0).abs() <= MERGE_TOL && (v.1 - last.0 .1).abs() <= MERGE_TOL => {
                last.1 += p
            }
            _ => out.push((v, p)),
        }
    }
    out
}

/// Law of the coordinatewise sum of independent two-dimensional variables.
pub fn convolve_2d(laws: &[JointLaw2]) -> Result<JointLaw2> {
    let mut acc = JointLaw2::point(0.0, 0.0);
    for l in laws {
        let raw = acc.support.len() * l.support.len();
        if raw > SUPPORT_CAP {
            return Err(Error::SupportExplosion { size: raw, cap: SUPPORT_CAP });
        }
        let mut atoms = Vec::with_capacity(raw);
        for &((x1, y1), p) in &acc.support {
            for &((x2, y2), q) in &l.support {
                atoms.push(((x1 + x2, y1 + y2), p * q));
            }
        }
        atoms.sort_by(|a, b| a.0 .0.total_cmp(&b.0 .0).then(a.0 .1.total_cmp(&b.0 .1)));
        acc = JointLaw2 { support: merge_sorted_2d(atoms) };
    }
    Ok(acc)
}
