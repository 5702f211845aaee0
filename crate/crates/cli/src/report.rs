//! Report documents shared by `solve`, `oracle` and `verify`.
//!
//! All three emit the same [`RunReport`] shape with absent values as `null`,
//! so two reports can be compared field by field.

use std::io::Write;

use eumax::esum::{ExpTerm, ExponentialSum, UtilitySpec};
use eumax::Complex64;
use serde::Serialize;

use crate::instance::Resolved;
use crate::{CliError, Format};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub problem: &'static str,
    /// Chosen elements or items; `null` only when nothing ran.
    pub solution: Option<Vec<usize>>,
    /// Rounded configuration score of the solution.
    pub score: Option<Complex64>,
    /// Unrounded exponential-sum value of the solution.
    pub expsum_value: Option<Complex64>,
    /// Exact (or Monte Carlo) expected utility of the solution.
    pub oracle_value: Option<f64>,
    /// Best expected utility over all feasible solutions.
    pub oracle_optimum: Option<f64>,
    pub certified_error: Option<f64>,
    /// `|score - expsum_value|` for the solution.
    pub rounding_gap: Option<f64>,
    pub terms: Option<usize>,
    pub verdict: Option<Verdict>,
    pub params: Resolved,
    /// Problem-specific solver output.
    pub details: serde_json::Value,
    pub wall_time_ms: Option<f64>,
}

impl RunReport {
    pub fn empty(command: &'static str, problem: &'static str, params: Resolved) -> Self {
        RunReport {
            command,
            problem,
            solution: None,
            score: None,
            expsum_value: None,
            oracle_value: None,
            oracle_optimum: None,
            certified_error: None,
            rounding_gap: None,
            terms: None,
            verdict: None,
            params,
            details: serde_json::Value::Null,
            wall_time_ms: None,
        }
    }

    fn rows(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
        let cx = |v: Option<Complex64>| v.map_or("-".to_string(), |z| format!("{:.6} {:+.2e}i", z.re, z.im));
        let mut rows = vec![
            ("command", self.command.to_string()),
            ("problem", self.problem.to_string()),
            ("solution", self.solution.as_ref().map_or("-".into(), |s| format!("{s:?}"))),
            ("score", cx(self.score)),
            ("expsum value", cx(self.expsum_value)),
            ("oracle value", opt(self.oracle_value)),
            ("oracle optimum", opt(self.oracle_optimum)),
            ("certified error", opt(self.certified_error)),
            ("rounding gap", opt(self.rounding_gap)),
            ("terms", self.terms.map_or("-".into(), |t| t.to_string())),
            ("eps", self.params.eps.to_string()),
        ];
        if let Some(v) = &self.verdict {
            rows.push(("gap", format!("{:.6}", v.gap)));
            rows.push(("budget", format!("{:.6}", v.budget)));
            rows.push(("verdict", if v.pass { "PASS" } else { "FAIL" }.to_string()));
        }
        if let Some(ms) = self.wall_time_ms {
            rows.push(("wall time", format!("{ms:.1} ms")));
        }
        rows
    }
}

/// Outcome of comparing a solve against the oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    /// `oracle_optimum - oracle_value`.
    pub gap: f64,
    /// `2 certified_error` plus the measured rounding gaps of both solutions.
    pub budget: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecomposeReport {
    pub utility: UtilitySpec,
    pub eps: f64,
    pub max_terms: usize,
    pub term_count: usize,
    pub eta: f64,
    pub h: f64,
    pub t_eps: f64,
    pub certified_error: f64,
    pub grid_error: f64,
    pub tail_error: f64,
    pub grid_max: f64,
    pub abs_coeff_sum: f64,
    pub terms: Vec<TermRow>,
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermRow {
    pub coeff: Complex64,
    pub rate: Complex64,
    pub psi: Complex64,
}

impl DecomposeReport {
    pub fn new(utility: UtilitySpec, eps: f64, max_terms: usize, s: &ExponentialSum) -> Self {
        DecomposeReport {
            utility,
            eps,
            max_terms,
            term_count: s.len(),
            eta: s.eta,
            h: s.h,
            t_eps: s.t_eps,
            certified_error: s.certified_error,
            grid_error: s.grid_error,
            tail_error: s.tail_error,
            grid_max: s.grid_max,
            abs_coeff_sum: s.abs_coeff_sum(),
            terms: s
                .terms
                .iter()
                .map(|t: &ExpTerm| TermRow { coeff: t.coeff, rate: t.rate, psi: t.psi() })
                .collect(),
            wall_time_ms: None,
        }
    }

    fn table(&self) -> String {
        let mut out = format!(
            "terms {}  eta {}  h {}  T_eps {:.4}  certified error {:.3e} (grid {:.3e}, tail {:.3e})  sum|c| {:.4}\n",
            self.term_count, self.eta, self.h, self.t_eps, self.certified_error, self.grid_error, self.tail_error,
            self.abs_coeff_sum
        );
        if let Some(ms) = self.wall_time_ms {
            out.push_str(&format!("wall time {ms:.1} ms\n"));
        }
        out.push_str(&format!("{:>4}  {:>24}  {:>24}\n", "k", "coeff", "psi"));
        for (k, t) in self.terms.iter().enumerate() {
            out.push_str(&format!(
                "{k:>4}  {:>11.4e} {:>+11.4e}i  {:>11.4e} {:>+11.4e}i\n",
                t.coeff.re, t.coeff.im, t.psi.re, t.psi.im
            ));
        }
        out
    }
}

pub fn emit_run(report: &RunReport, format: Format) -> Result<(), CliError> {
    match format {
        Format::Json => print_json(report),
        Format::Table => {
            let rows = report.rows();
            let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
            for (k, v) in rows {
                eprintln!("{k:<width$}  {v}");
            }
            Ok(())
        }
    }
}

pub fn emit_decompose(report: &DecomposeReport, format: Format) -> Result<(), CliError> {
    match format {
        Format::Json => print_json(report),
        Format::Table => {
            eprint!("{}", report.table());
            Ok(())
        }
    }
}

fn print_json<T: Serialize>(doc: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(doc)
        .map_err(|e| CliError::invalid(format!("serializing report: {e}")))?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        // a closed pipe downstream (`| head`) is not an error of ours
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(CliError { code: crate::EXIT_FAILED_CHECK, message: format!("writing report: {e}") })
        }
        _ => Ok(()),
    }
}
