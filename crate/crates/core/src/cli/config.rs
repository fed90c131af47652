//! Campaign files: parsing, catalog resolution and validation.
//!
//! Every diagnostic carries the line and column it refers to, so a broken
//! file can be fixed without guessing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::catalog::{self, KineticSpec};
use super::suite;
use crate::estimates::DEFAULT_BUDGET;
use crate::euler::{Flow, Gas, InitialData, Scheme};
use crate::special::PotentialSpec;

/// A catalog entry given either by name or inline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CatalogRef<T> {
    Name(String),
    Inline(T),
}

/// Named entries that extend the built-in catalog.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserCatalog {
    #[serde(default)]
    pub potentials: BTreeMap<String, PotentialSpec>,
    #[serde(default)]
    pub initial_data: BTreeMap<String, InitialData>,
    #[serde(default)]
    pub kinetic_states: BTreeMap<String, KineticSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignManifest {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    /// Budget for the dimensional constants of the inequality checks.
    #[serde(default = "default_budget")]
    pub budget: f64,
    #[serde(default)]
    pub catalog: UserCatalog,
    #[serde(default)]
    pub experiments: Vec<ExperimentConfig>,
}

fn default_budget() -> f64 {
    DEFAULT_BUDGET
}

/// A solver run, shared by `solve` and `sweep` experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub gas: Gas,
    pub init: CatalogRef<InitialData>,
    /// One `[lo, hi]` per axis, or a single pair used for every axis.
    pub domain: Vec<[f64; 2]>,
    /// Cells per axis, or a single count used for every axis.
    pub cells: Vec<usize>,
    pub t_end: f64,
    pub steps: usize,
    #[serde(default = "one")]
    pub store_every: usize,
    #[serde(default)]
    pub scheme: Scheme,
    /// Times the step count may double when a run violates the CFL limit.
    #[serde(default = "six")]
    pub max_doublings: usize,
}

fn one() -> usize {
    1
}

fn six() -> usize {
    6
}

impl Problem {
    pub fn axes(&self) -> Vec<([f64; 2], usize)> {
        let d = self.gas.d;
        (0..d).map(|k| (self.domain[k.min(self.domain.len() - 1)], self.cells[k.min(self.cells.len() - 1)])).collect()
    }

    /// Validates against `catalog` and runs the solver.
    pub fn solve(&self, catalog: &UserCatalog) -> crate::Result<Flow> {
        check_problem(self, catalog).map_err(crate::Error::InvalidInput)?;
        super::runner::solve_problem(self, &catalog.initial_data(&self.init)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub id: String,
    #[serde(default)]
    pub depends_on: Vec<String>,
    pub problem: Problem,
}

/// Discretization of a kinetic state for the particle checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KineticTarget {
    pub state: CatalogRef<KineticSpec>,
    /// Horizon of the space-time grid.
    #[serde(default = "four")]
    pub t_end: f64,
    /// Half-width of the spatial box.
    #[serde(default = "four")]
    pub extent: f64,
    /// Quadrature cells per spatial axis for the particle realization.
    #[serde(default = "particles")]
    pub particles: usize,
}

fn four() -> f64 {
    4.0
}

fn particles() -> usize {
    80
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub id: String,
    #[serde(default)]
    pub depends_on: Vec<String>,
    /// A `solve` experiment whose flow the checks run on.
    #[serde(default)]
    pub flow: Option<String>,
    #[serde(default)]
    pub kinetic: Option<KineticTarget>,
    #[serde(default)]
    pub checks: Vec<String>,
    /// Named reference checks; `"all"` selects every one.
    #[serde(default)]
    pub suite: Vec<String>,
    #[serde(default)]
    pub budget: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum TransformSource {
    Potential(CatalogRef<PotentialSpec>),
    Kinetic(CatalogRef<KineticSpec>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    pub id: String,
    #[serde(default)]
    pub depends_on: Vec<String>,
    pub source: TransformSource,
    pub alphas: Vec<f64>,
    pub t: [f64; 2],
    pub x: Vec<[f64; 2]>,
    /// Cells per axis on each grid of the refinement ladder.
    #[serde(default = "ladder")]
    pub cells: Vec<usize>,
    #[serde(default = "min_slope")]
    pub min_slope: f64,
    /// Write the finest transformed field for each alpha.
    #[serde(default = "yes")]
    pub dump: bool,
}

fn ladder() -> Vec<usize> {
    vec![16, 32, 64]
}

fn min_slope() -> f64 {
    0.9
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub id: String,
    #[serde(default)]
    pub depends_on: Vec<String>,
    pub problem: Problem,
    /// Factors applied to cells, steps and storage stride.
    #[serde(default = "refinements")]
    pub refinements: Vec<usize>,
    pub checks: Vec<String>,
    /// Largest relative change of an implied constant across the sweep.
    #[serde(default = "max_change")]
    pub max_change: f64,
    #[serde(default)]
    pub budget: Option<f64>,
}

fn refinements() -> Vec<usize> {
    vec![1, 2]
}

fn max_change() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    Transform(TransformConfig),
    Solve(SolveConfig),
    Verify(VerifyConfig),
    Sweep(SweepConfig),
}

/// Checks available on solved flows.
pub const FLOW_CHECKS: [&str; 5] = ["precis", "estihp", "inertia", "reel", "functionals"];
/// Checks available on kinetic states.
pub const KINETIC_CHECKS: [&str; 3] = ["kinetic-det", "boltzmann-inertia", "inertia-regression"];

impl ExperimentConfig {
    pub fn id(&self) -> &str {
        match self {
            Self::Transform(c) => &c.id,
            Self::Solve(c) => &c.id,
            Self::Verify(c) => &c.id,
            Self::Sweep(c) => &c.id,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Transform(_) => "transform",
            Self::Solve(_) => "solve",
            Self::Verify(_) => "verify",
            Self::Sweep(_) => "sweep",
        }
    }

    /// Explicit edges plus the implicit edge from a verify to its flow.
    pub fn dependencies(&self) -> Vec<String> {
        let (explicit, extra) = match self {
            Self::Transform(c) => (&c.depends_on, None),
            Self::Solve(c) => (&c.depends_on, None),
            Self::Verify(c) => (&c.depends_on, c.flow.clone()),
            Self::Sweep(c) => (&c.depends_on, None),
        };
        let mut deps = explicit.clone();
        if let Some(f) = extra {
            if !deps.contains(&f) {
                deps.push(f);
            }
        }
        deps
    }

    /// Names of the records this experiment will emit.
    pub fn planned_checks(&self) -> Vec<String> {
        let id = self.id();
        match self {
            Self::Solve(_) => vec![format!("{id}/solve")],
            Self::Transform(c) => c.alphas.iter().map(|a| format!("{id}/alpha={a}")).collect(),
            Self::Verify(c) => c
                .checks
                .iter()
                .map(|k| format!("{id}/{k}"))
                .chain(suite::expand(&c.suite).into_iter().map(|k| format!("{id}/{k}")))
                .collect(),
            Self::Sweep(c) => c.checks.iter().map(|k| format!("{id}/{k}")).collect(),
        }
    }
}

/// A diagnostic anchored to a position in the campaign file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Parses and validates a campaign.
pub fn parse_manifest(text: &str) -> Result<CampaignManifest, ConfigError> {
    let manifest: CampaignManifest = serde_json::from_str(text).map_err(|e| ConfigError {
        line: e.line().max(1),
        column: e.column().max(1),
        message: e.to_string(),
    })?;
    validate(&manifest, text)?;
    Ok(manifest)
}

/// Line and column of `"key": "value"` in `text`, falling back to the first
/// occurrence of the quoted value, then to the top of the file.
fn locate(text: &str, key: &str, value: &str) -> (usize, usize) {
    let quoted = format!("\"{value}\"");
    let mut fallback = None;
    for (i, line) in text.lines().enumerate() {
        if let Some(col) = line.find(&quoted) {
            let before = &line[..col];
            if before.contains(&format!("\"{key}\"")) {
                return (i + 1, col + 1);
            }
            fallback.get_or_insert((i + 1, col + 1));
        }
    }
    fallback.unwrap_or((1, 1))
}

fn err_at(text: &str, id: &str, message: String) -> ConfigError {
    let (line, column) = locate(text, "id", id);
    ConfigError { line, column, message }
}

fn resolves<T>(r: &CatalogRef<T>, user: &BTreeMap<String, T>, builtin: impl Fn(&str) -> bool) -> Result<(), String> {
    match r {
        CatalogRef::Inline(_) => Ok(()),
        CatalogRef::Name(n) if user.contains_key(n) || builtin(n) => Ok(()),
        CatalogRef::Name(n) => Err(format!("unknown catalog entry '{n}'")),
    }
}

fn check_problem(p: &Problem, cat: &UserCatalog) -> Result<(), String> {
    let d = p.gas.d;
    if !(1..=2).contains(&d) {
        return Err(format!("d must be 1 or 2, found {d}"));
    }
    if !(p.gas.gamma > 1.0) || !p.gas.gamma.is_finite() {
        return Err(format!("gamma must exceed 1, found {}", p.gas.gamma));
    }
    resolves(&p.init, &cat.initial_data, |n| catalog::builtin_initial_data(n).is_some())?;
    if p.domain.is_empty() || (p.domain.len() != 1 && p.domain.len() != d) {
        return Err(format!("domain needs 1 or {d} intervals"));
    }
    if p.domain.iter().any(|[lo, hi]| !(hi > lo)) {
        return Err("every domain interval needs lo < hi".into());
    }
    if p.cells.is_empty() || (p.cells.len() != 1 && p.cells.len() != d) || p.cells.contains(&0) {
        return Err(format!("cells needs 1 or {d} positive counts"));
    }
    if !(p.t_end > 0.0) || p.steps == 0 || p.store_every == 0 || p.steps % p.store_every != 0 {
        return Err("need t_end > 0 and steps a positive multiple of store_every".into());
    }
    Ok(())
}

fn check_names(names: &[String], known: &[&str]) -> Result<(), String> {
    match names.iter().find(|n| !known.contains(&n.as_str())) {
        Some(n) => Err(format!("unknown check '{n}'; expected one of {}", known.join(", "))),
        None => Ok(()),
    }
}

fn check_experiment(e: &ExperimentConfig, m: &CampaignManifest, kinds: &BTreeMap<&str, &str>) -> Result<(), String> {
    let cat = &m.catalog;
    match e {
        ExperimentConfig::Solve(c) => check_problem(&c.problem, cat),
        ExperimentConfig::Sweep(c) => {
            check_problem(&c.problem, cat)?;
            check_names(&c.checks, &FLOW_CHECKS)?;
            if c.refinements.len() < 2 || c.refinements.contains(&0) {
                return Err("a sweep needs at least two positive refinement factors".into());
            }
            if !(c.max_change > 0.0) {
                return Err("max_change must be positive".into());
            }
            Ok(())
        }
        ExperimentConfig::Verify(c) => {
            if let Some(f) = &c.flow {
                match kinds.get(f.as_str()) {
                    Some(&"solve") => {}
                    Some(k) => return Err(format!("flow '{f}' names a {k} experiment, not a solve")),
                    None => return Err(format!("flow '{f}' is not an experiment of this campaign")),
                }
                check_names(&c.checks, &FLOW_CHECKS)?;
                if c.kinetic.is_some() {
                    return Err("a verify takes either a flow or a kinetic state".into());
                }
            } else if let Some(k) = &c.kinetic {
                resolves(&k.state, &cat.kinetic_states, |n| catalog::builtin_kinetic(n).is_some())?;
                check_names(&c.checks, &KINETIC_CHECKS)?;
                if !(k.t_end > 0.0 && k.extent > 0.0) || k.particles < 4 {
                    return Err("kinetic targets need t_end > 0, extent > 0 and particles >= 4".into());
                }
            } else if !c.checks.is_empty() {
                return Err("checks need a flow or a kinetic state".into());
            }
            if let Some(bad) = c.suite.iter().find(|s| s.as_str() != "all" && suite::find(s).is_none()) {
                return Err(format!("unknown suite check '{bad}'"));
            }
            Ok(())
        }
        ExperimentConfig::Transform(c) => {
            match &c.source {
                TransformSource::Potential(p) => {
                    resolves(p, &cat.potentials, |n| catalog::builtin_potential(n).is_some())?
                }
                TransformSource::Kinetic(k) => {
                    resolves(k, &cat.kinetic_states, |n| catalog::builtin_kinetic(n).is_some())?
                }
            }
            if !(1..=2).contains(&c.x.len()) {
                return Err(format!("d must be 1 or 2, found {}", c.x.len()));
            }
            if c.alphas.is_empty() || c.alphas.iter().any(|a| !a.is_finite()) {
                return Err("alphas must be a non-empty list of finite numbers".into());
            }
            if c.cells.len() < 2 || c.cells.windows(2).any(|w| w[1] <= w[0]) || c.cells[0] < 3 {
                return Err("cells must be an increasing ladder of at least two counts >= 3".into());
            }
            if !(c.t[1] > c.t[0]) || c.x.iter().any(|[lo, hi]| !(hi > lo)) {
                return Err("every interval needs lo < hi".into());
            }
            Ok(())
        }
    }
}

fn validate(m: &CampaignManifest, text: &str) -> Result<(), ConfigError> {
    if !(m.budget > 0.0) {
        let (line, column) = locate(text, "budget", "");
        return Err(ConfigError { line, column, message: "budget must be positive".into() });
    }
    if m.workers == Some(0) {
        return Err(ConfigError { line: 1, column: 1, message: "workers must be at least 1".into() });
    }
    let mut kinds = BTreeMap::new();
    for e in &m.experiments {
        if e.id().is_empty() || e.id().contains('/') {
            return Err(err_at(text, e.id(), format!("invalid experiment id '{}'", e.id())));
        }
        if kinds.insert(e.id(), e.kind()).is_some() {
            return Err(err_at(text, e.id(), format!("duplicate experiment id '{}'", e.id())));
        }
    }
    for e in &m.experiments {
        for dep in e.dependencies() {
            if !kinds.contains_key(dep.as_str()) {
                return Err(err_at(text, e.id(), format!("'{}' depends on unknown experiment '{dep}'", e.id())));
            }
        }
        check_experiment(e, m, &kinds)
            .map_err(|msg| err_at(text, e.id(), format!("experiment '{}': {msg}", e.id())))?;
    }
    if let Err(id) = topological_waves(&m.experiments) {
        return Err(err_at(text, &id, format!("dependency cycle through '{id}'")));
    }
    Ok(())
}

/// Experiments grouped into waves whose members only depend on earlier
/// waves; manifest order is kept within a wave. On a cycle, returns an id on it.
pub fn topological_waves(experiments: &[ExperimentConfig]) -> Result<Vec<Vec<usize>>, String> {
    let index: BTreeMap<&str, usize> = experiments.iter().enumerate().map(|(i, e)| (e.id(), i)).collect();
    let deps: Vec<Vec<usize>> = experiments
        .iter()
        .map(|e| e.dependencies().iter().filter_map(|d| index.get(d.as_str()).copied()).collect())
        .collect();
    let mut done = BTreeSet::new();
    let mut waves = Vec::new();
    while done.len() < experiments.len() {
        let wave: Vec<usize> =
            (0..experiments.len()).filter(|i| !done.contains(i) && deps[*i].iter().all(|d| done.contains(d))).collect();
        if wave.is_empty() {
            let stuck = (0..experiments.len()).find(|i| !done.contains(i)).unwrap_or(0);
            return Err(experiments[stuck].id().to_string());
        }
        done.extend(wave.iter().copied());
        waves.push(wave);
    }
    Ok(waves)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SOLVE: &str = r#"{
  "experiments": [
    {
      "kind": "solve",
      "id": "bump",
      "problem": {
        "gas": {"d": 1, "gamma": 3.0, "model": {"kind": "isentropic", "a": 1.0}},
        "init": "cos-bump",
        "domain": [[-6, 6]],
        "cells": [120],
        "t_end": 0.5,
        "steps": 20
      }
    },
    {"kind": "verify", "id": "check", "flow": "bump", "checks": ["precis"]}
  ]
}"#;

    #[test]
    fn valid_campaign_parses() {
        let m = parse_manifest(SOLVE).unwrap();
        assert_eq!(m.experiments.len(), 2);
        assert_eq!(m.experiments[1].dependencies(), vec!["bump".to_string()]);
        assert_eq!(topological_waves(&m.experiments).unwrap(), vec![vec![0], vec![1]]);
        assert_eq!(m.budget, DEFAULT_BUDGET);
    }

    #[test]
    fn empty_campaign_is_valid() {
        assert!(parse_manifest("{}").unwrap().experiments.is_empty());
    }

    #[test]
    fn syntax_error_reports_its_line() {
        let broken = SOLVE.replace("\"t_end\": 0.5,", "\"t_end\": 0.5");
        let e = parse_manifest(&broken).unwrap_err();
        assert_eq!(e.line, 12);
    }

    #[test]
    fn semantic_errors_point_at_the_experiment() {
        let bad = SOLVE.replace("\"gamma\": 3.0", "\"gamma\": 0.5");
        let e = parse_manifest(&bad).unwrap_err();
        assert_eq!(e.line, 5);
        assert!(e.message.contains("gamma"), "{e}");

        let unknown = SOLVE.replace("\"cos-bump\"", "\"no-such-bump\"");
        assert!(parse_manifest(&unknown).unwrap_err().message.contains("no-such-bump"));

        let typo = SOLVE.replace("\"steps\": 20", "\"steps\": 20, \"stepz\": 3");
        assert!(parse_manifest(&typo).unwrap_err().message.contains("stepz"));

        let d3 = SOLVE.replace("\"d\": 1", "\"d\": 3");
        assert!(parse_manifest(&d3).unwrap_err().message.contains("d must be"));
    }

    #[test]
    fn cycles_are_rejected() {
        let text = r#"{"experiments": [
  {"kind": "verify", "id": "a", "depends_on": ["b"]},
  {"kind": "verify", "id": "b", "depends_on": ["a"]}
]}"#;
        let e = parse_manifest(text).unwrap_err();
        assert!(e.message.contains("cycle"));
        assert_eq!(e.line, 2);
    }

    #[test]
    fn user_entries_resolve() {
        let text = SOLVE.replace("\"cos-bump\"", "\"mine\"").replacen(
            "\"experiments\"",
            r#""catalog": {"initial_data": {"mine": {"name": "gaussian-bump", "amplitude": 1.0, "width": 0.4, "thermal": {"kind": "isentropic", "a": 1.0}}}},
  "experiments""#,
            1,
        );
        parse_manifest(&text).unwrap();
    }
}
