//! On-disk instance schema.
//!
//! An instance file is one JSON document with three keys: `problem` (tagged by
//! `kind`), an optional `utility`, and optional solver `params`. Field names
//! match the core types so a file is a direct serialization of them.

use std::path::Path;

use eumax::esum::UtilitySpec;
use eumax::problems::knapsack::{CoveringInstance, ProfitKnapsackInstance, SizeKnapsackInstance};
use eumax::problems::multi::{MultiDimInstance, MultiDimMode, MultipleKnapsackInstance, VectorItem};
use eumax::problems::shortest_path::ShortestPathInstance;
use eumax::problems::spanning_tree::SpanningTreeInstance;
use eumax::problems::SolverOptions;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub problem: Problem,
    #[serde(default)]
    pub utility: Option<UtilitySpec>,
    #[serde(default)]
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Problem {
    ShortestPath(ShortestPathInstance),
    SpanningTree(SpanningTreeInstance),
    CoveringKnapsack(CoveringInstance),
    SizeKnapsack(SizeKnapsackInstance),
    ProfitKnapsack(ProfitKnapsackInstance),
    MultipleKnapsack(MultipleKnapsackInstance),
    MultidimKnapsack { items: Vec<VectorItem>, gamma: f64, mode: MultiDimMode },
}

impl Problem {
    pub fn kind(&self) -> &'static str {
        match self {
            Problem::ShortestPath(_) => "shortest_path",
            Problem::SpanningTree(_) => "spanning_tree",
            Problem::CoveringKnapsack(_) => "covering_knapsack",
            Problem::SizeKnapsack(_) => "size_knapsack",
            Problem::ProfitKnapsack(_) => "profit_knapsack",
            Problem::MultipleKnapsack(_) => "multiple_knapsack",
            Problem::MultidimKnapsack { .. } => "multidim_knapsack",
        }
    }

    /// Kinds whose objective is a user-supplied utility.
    pub fn takes_utility(&self) -> bool {
        matches!(self, Problem::ShortestPath(_) | Problem::SpanningTree(_) | Problem::CoveringKnapsack(_))
    }

    pub fn multidim(&self) -> Option<(MultiDimInstance, MultiDimMode)> {
        match self {
            Problem::MultidimKnapsack { items, gamma, mode } => {
                Some((MultiDimInstance { items: items.clone(), gamma: *gamma }, *mode))
            }
            _ => None,
        }
    }
}

/// Solver parameters as written in a file or on the command line; unset means default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub eps: Option<f64>,
    pub max_terms: Option<usize>,
    pub rounding_scale: Option<f64>,
    pub hop_cap: Option<usize>,
    pub state_budget: Option<usize>,
    pub seed: Option<u64>,
}

impl Params {
    /// Fields set in `over` win.
    pub fn overridden_by(&self, over: &Params) -> Params {
        Params {
            eps: over.eps.or(self.eps),
            max_terms: over.max_terms.or(self.max_terms),
            rounding_scale: over.rounding_scale.or(self.rounding_scale),
            hop_cap: over.hop_cap.or(self.hop_cap),
            state_budget: over.state_budget.or(self.state_budget),
            seed: over.seed.or(self.seed),
        }
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let d = SolverOptions::default();
        let opts = SolverOptions {
            eps: self.eps.unwrap_or(d.eps),
            max_terms: self.max_terms.unwrap_or(d.max_terms),
            rounding_scale: self.rounding_scale.unwrap_or(d.rounding_scale),
            state_budget: self.state_budget.unwrap_or(d.state_budget),
        };
        opts.validate().map_err(CliError::from)?;
        Ok(Resolved {
            eps: opts.eps,
            max_terms: opts.max_terms,
            rounding_scale: opts.rounding_scale,
            hop_cap: self.hop_cap,
            state_budget: opts.state_budget,
            seed: self.seed.unwrap_or(0),
        })
    }
}

/// Parameters after defaults are applied; echoed in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub eps: f64,
    pub max_terms: usize,
    pub rounding_scale: f64,
    pub hop_cap: Option<usize>,
    pub state_budget: usize,
    pub seed: u64,
}

impl Resolved {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            eps: self.eps,
            max_terms: self.max_terms,
            rounding_scale: self.rounding_scale,
            state_budget: self.state_budget,
        }
    }
}

/// Parses an instance document, reporting the offending field path and position.
pub fn parse_instance(text: &str) -> Result<InstanceFile, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: InstanceFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::invalid(format!("at field `{path}`: {}", e.into_inner()))
    })?;
    check(&file)?;
    Ok(file)
}

pub fn load_instance(path: &Path) -> Result<InstanceFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_instance(&text).map_err(|e| e.context(&path.display().to_string()))
}

/// Cross-field checks that serde cannot express.
fn check(file: &InstanceFile) -> Result<(), CliError> {
    let p = &file.problem;
    match (p.takes_utility(), &file.utility) {
        (true, None) => {
            return Err(CliError::invalid(format!("problem kind `{}` needs a `utility`", p.kind())));
        }
        (false, Some(_)) => {
            return Err(CliError::invalid(format!(
                "problem kind `{}` fixes its own objective; remove `utility`",
                p.kind()
            )));
        }
        (true, Some(u)) => u.validate().map_err(CliError::from)?,
        (false, None) => {}
    }
    file.params.resolve()?;
    match p {
        Problem::ShortestPath(inst) => inst.validate().map_err(CliError::from),
        Problem::SpanningTree(inst) => inst.validate().map_err(CliError::from),
        Problem::CoveringKnapsack(inst) => inst.adapter().map(|_| ()).map_err(CliError::from),
        Problem::SizeKnapsack(inst) => inst.validate().map_err(CliError::from),
        Problem::ProfitKnapsack(inst) => inst.validate().map_err(CliError::from),
        Problem::MultipleKnapsack(_) | Problem::MultidimKnapsack { .. } => Ok(()),
    }
}
