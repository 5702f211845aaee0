use std::path::Path;
use std::time::Instant;

use eumax::distributions::Distribution;
use eumax::esum::{esum_decompose, ExponentialSum, UtilitySpec};
use eumax::oracle::{brute_force_solve, enumerate_solutions, McSettings, OracleReport, SOLUTION_CAP};
use eumax::problems::knapsack::{covering_solve, knapsack_profit_solve, knapsack_size_solve};
use eumax::problems::multi::{multidim_knapsack_solve, multiple_knapsack_solve};
use eumax::problems::shortest_path::shortest_path_solve;
use eumax::problems::spanning_tree::spanning_tree_solve;
use eumax::problems::{rounding_gap_of, EumOutcome, SolverOptions};

use crate::instance::{load_instance, Problem, Resolved};
use crate::report::{emit_decompose, emit_run, DecomposeReport, RunReport, Verdict};
use crate::{CliError, Global, EXIT_BUDGET, EXIT_FAILED_CHECK, EXIT_OK};

/// Decomposition accuracy when `--eps` is absent.
const DEFAULT_DECOMPOSE_EPS: f64 = 0.1;
/// `solve` attaches oracle values only below this many feasible solutions.
const SOLVE_ORACLE_CAP: usize = 10_000;

/// Accepts `ramp:DELTA[:THRESHOLD]`, `inverse`, `zero`, or a JSON utility object.
pub fn parse_utility(text: &str) -> Result<UtilitySpec, CliError> {
    let text = text.trim();
    let mu = if text.starts_with('{') {
        serde_json::from_str(text).map_err(|e| CliError::invalid(format!("utility: {e}")))?
    } else {
        let mut parts = text.split(':');
        let num = |s: Option<&str>, what: &str| -> Result<f64, CliError> {
            s.ok_or_else(|| CliError::invalid(format!("utility `{text}` lacks {what}")))?
                .parse::<f64>()
                .map_err(|e| CliError::invalid(format!("utility `{text}`: {what}: {e}")))
        };
        match parts.next() {
            Some("inverse") => UtilitySpec::Inverse,
            Some("zero") => UtilitySpec::PiecewiseLinear { points: vec![(0.0, 0.0)] },
            Some("ramp") => {
                let delta = num(parts.next(), "a width")?;
                let threshold = match parts.next() {
                    Some(t) => num(Some(t), "a threshold")?,
                    None => 1.0,
                };
                UtilitySpec::ThresholdRamp { delta, threshold }
            }
            _ => return Err(CliError::invalid(format!("unknown utility `{text}`"))),
        }
    };
    mu.validate().map_err(CliError::from)?;
    Ok(mu)
}

pub fn decompose(utility: &str, g: &Global) -> Result<u8, CliError> {
    let mu = parse_utility(utility)?;
    let eps = g.eps.unwrap_or(DEFAULT_DECOMPOSE_EPS);
    let max_terms = g.max_terms.unwrap_or(SolverOptions::default().max_terms);
    let t0 = Instant::now();
    let s = esum_decompose(&mu, eps, max_terms)?;
    let mut report = DecomposeReport::new(mu, eps, max_terms, &s);
    if g.timing {
        report.wall_time_ms = Some(t0.elapsed().as_secs_f64() * 1e3);
    }
    emit_decompose(&report, g.format)?;
    Ok(EXIT_OK)
}

/// Loaded instance with command-line overrides applied.
struct Job {
    problem: Problem,
    utility: Option<UtilitySpec>,
    params: Resolved,
}

fn load(path: &Path, g: &Global) -> Result<Job, CliError> {
    let file = load_instance(path)?;
    let mut params = file.params.overridden_by(&g.params()).resolve()?;
    let mut problem = file.problem;
    match &mut problem {
        Problem::ShortestPath(inst) => {
            inst.hop_cap = params.hop_cap.or(inst.hop_cap);
            params.hop_cap = inst.hop_cap;
        }
        _ => params.hop_cap = None,
    }
    Ok(Job { problem, utility: file.utility, params })
}

struct EumRun {
    outcome: EumOutcome,
    expsum: ExponentialSum,
    dists: Vec<Distribution>,
}

fn run_eum(job: &Job, mu: &UtilitySpec) -> Result<EumRun, CliError> {
    let opts = job.params.options();
    let ((outcome, expsum), dists) = match &job.problem {
        Problem::ShortestPath(inst) => (shortest_path_solve(inst, mu, &opts)?, inst.weights()),
        Problem::SpanningTree(inst) => (spanning_tree_solve(inst, mu, &opts)?, inst.weights()),
        Problem::CoveringKnapsack(inst) => (covering_solve(inst, mu, &opts)?, inst.sizes.clone()),
        _ => unreachable!("utility-free kinds are dispatched elsewhere"),
    };
    Ok(EumRun { outcome, expsum, dists })
}

fn run_oracle(job: &Job, mu: &UtilitySpec, cap: usize) -> Result<OracleReport, CliError> {
    let (solutions, dists) = match &job.problem {
        Problem::ShortestPath(inst) => (enumerate_solutions(&inst.adapter(), cap), inst.weights()),
        Problem::SpanningTree(inst) => (inst.enumerate_trees(), inst.weights()),
        Problem::CoveringKnapsack(inst) => (enumerate_solutions(&inst.adapter()?, cap), inst.sizes.clone()),
        _ => unreachable!("utility-free kinds are dispatched elsewhere"),
    };
    let solutions = solutions.map_err(|e| {
        let e = CliError::from(e);
        match e.code {
            EXIT_BUDGET => e.context("oracle cap exceeded"),
            _ => e,
        }
    })?;
    let mc = McSettings { seed: job.params.seed, ..McSettings::default() };
    Ok(brute_force_solve(&solutions, &dists, |x| mu.value(x), true, mc)?)
}

fn eum_report(command: &'static str, job: &Job, run: &EumRun) -> Result<RunReport, CliError> {
    let o = &run.outcome;
    let mut r = RunReport::empty(command, job.problem.kind(), job.params.clone());
    r.solution = Some(o.solution.clone());
    r.score = Some(o.score);
    r.expsum_value = Some(o.expsum_value);
    r.certified_error = Some(o.certified_error);
    r.rounding_gap = Some(o.rounding_gap);
    r.terms = Some(o.terms);
    r.details = to_value(o)?;
    Ok(r)
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::invalid(format!("serializing report: {e}")))
}

fn utility_of(job: &Job) -> Option<&UtilitySpec> {
    job.utility.as_ref().filter(|_| job.problem.takes_utility())
}

fn solve_job(job: &Job) -> Result<RunReport, CliError> {
    let opts = job.params.options();
    let kind = job.problem.kind();
    if let Some(mu) = utility_of(job) {
        let run = run_eum(job, mu)?;
        let mut r = eum_report("solve", job, &run)?;
        if run.dists.iter().all(Distribution::is_discrete) {
            if let Ok(rep) = run_oracle(job, mu, SOLVE_ORACLE_CAP) {
                r.oracle_value = value_of(&rep, &run.outcome.solution);
                r.oracle_optimum = Some(rep.best_value);
            }
        }
        return Ok(r);
    }
    let mut r = RunReport::empty("solve", kind, job.params.clone());
    match &job.problem {
        Problem::SizeKnapsack(inst) => {
            let rep = knapsack_size_solve(inst, &opts)?;
            r.solution = Some(rep.items.clone());
            r.expsum_value = Some(rep.expsum_value);
            r.certified_error = Some(rep.certified_error);
            r.terms = Some(rep.terms);
            r.details = to_value(&rep)?;
        }
        Problem::ProfitKnapsack(inst) => {
            let rep = knapsack_profit_solve(inst, &opts)?;
            r.solution = Some(rep.items.clone());
            r.expsum_value = rep.expsum_value;
            r.certified_error = Some(rep.certified_error);
            r.terms = Some(rep.terms);
            r.details = to_value(&rep)?;
        }
        Problem::MultipleKnapsack(inst) => {
            let rep = multiple_knapsack_solve(inst, &opts)?;
            let mut items: Vec<usize> = rep.bins.concat();
            items.sort_unstable();
            r.solution = Some(items);
            r.certified_error = Some(rep.certified_error);
            r.terms = Some(rep.terms);
            r.details = to_value(&rep)?;
        }
        p => {
            let (inst, mode) = p.multidim().expect("remaining kind is multidimensional");
            let rep = multidim_knapsack_solve(&inst, mode, &opts)?;
            r.solution = Some(rep.items.clone());
            r.certified_error = Some(rep.certified_error);
            r.terms = Some(rep.terms);
            r.details = to_value(&rep)?;
        }
    }
    Ok(r)
}

fn value_of(rep: &OracleReport, solution: &[usize]) -> Option<f64> {
    rep.values.iter().find(|v| v.solution == solution).map(|v| v.value)
}

fn timed<T>(g: &Global, f: impl FnOnce() -> Result<T, CliError>) -> Result<(T, Option<f64>), CliError> {
    let t0 = Instant::now();
    let out = f()?;
    Ok((out, g.timing.then(|| t0.elapsed().as_secs_f64() * 1e3)))
}

pub fn solve(path: &Path, g: &Global) -> Result<u8, CliError> {
    let job = load(path, g)?;
    let (mut report, ms) = timed(g, || solve_job(&job))?;
    report.wall_time_ms = ms;
    emit_run(&report, g.format)?;
    Ok(EXIT_OK)
}

fn needs_utility<'a>(job: &'a Job, command: &str) -> Result<&'a UtilitySpec, CliError> {
    utility_of(job).ok_or_else(|| {
        CliError::invalid(format!(
            "`{command}` supports shortest_path, spanning_tree and covering_knapsack instances, not `{}`",
            job.problem.kind()
        ))
    })
}

pub fn oracle(path: &Path, g: &Global) -> Result<u8, CliError> {
    let job = load(path, g)?;
    let mu = needs_utility(&job, "oracle")?;
    let (rep, ms) = timed(g, || run_oracle(&job, mu, SOLUTION_CAP))?;
    let mut r = RunReport::empty("oracle", job.problem.kind(), job.params.clone());
    r.solution = Some(rep.best_solution.clone());
    r.oracle_value = Some(rep.best_value);
    r.oracle_optimum = Some(rep.best_value);
    r.details = to_value(&rep)?;
    r.wall_time_ms = ms;
    emit_run(&r, g.format)?;
    Ok(EXIT_OK)
}

pub fn verify(path: &Path, g: &Global) -> Result<u8, CliError> {
    let job = load(path, g)?;
    let mu = needs_utility(&job, "verify")?;
    let ((mut r, pass), ms) = timed(g, || {
        let rep = run_oracle(&job, mu, SOLUTION_CAP)?;
        let run = run_eum(&job, mu)?;
        let o = &run.outcome;
        let achieved = value_of(&rep, &o.solution)
            .ok_or_else(|| CliError::invalid("solver returned a solution the oracle does not list"))?;
        // the optimum's own rounding gap enters the budget alongside ours
        let rival = match &o.params {
            Some(p) => rounding_gap_of(&rep.best_solution, &run.dists, &run.expsum, p)?,
            None => 0.0,
        };
        let gap = rep.best_value - achieved;
        let budget = 2.0 * o.certified_error + o.rounding_gap + rival;
        let pass = gap <= budget + 1e-12;
        let mut r = eum_report("verify", &job, &run)?;
        r.oracle_value = Some(achieved);
        r.oracle_optimum = Some(rep.best_value);
        r.verdict = Some(Verdict { gap, budget, pass });
        Ok((r, pass))
    })?;
    r.wall_time_ms = ms;
    emit_run(&r, g.format)?;
    Ok(if pass { EXIT_OK } else { EXIT_FAILED_CHECK })
}
