//! Depth-first search over integer domains driven by bound propagation.
//!
//! There is no LP relaxation: nodes are pruned by propagation cutoffs and by
//! the objective interval of the current box. Continuous variables are left
//! to row tightening and settled greedily once every integer is fixed.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::SemanticRecord;
use crate::model::{DomainBox, MipModel, ObjectiveSense, VarId};
use crate::outcome::{duration_ms, PropagationOutcome};
use crate::propagate::{propagate_rows_fixpoint, run_fixpoint, PropagatorConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropFreq {
    /// Semantic handlers at the root only; deeper nodes get row tightening.
    #[default]
    RootOnly,
    EveryNode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchRule {
    /// Lowest-id integer variable that is not fixed.
    #[default]
    FirstUnfixed,
    /// Smallest remaining domain, ties to the lowest id.
    MostConstrained,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub propfreq: PropFreq,
    pub node_limit: u64,
    #[serde(rename = "time_limit_ms", with = "duration_ms")]
    pub time_limit: Duration,
    pub branch_rule: BranchRule,
    pub propagator: PropagatorConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            propfreq: PropFreq::RootOnly,
            node_limit: 1_000_000,
            time_limit: Duration::from_secs(60),
            branch_rule: BranchRule::FirstUnfixed,
            propagator: PropagatorConfig::default(),
        }
    }
}

impl SearchConfig {
    pub fn with_propfreq(propfreq: PropFreq) -> Self {
        SearchConfig {
            propfreq,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Optimal,
    /// Tree exhausted, but some leaf could not be settled exactly.
    Feasible,
    Infeasible,
    Limit,
}

impl SearchStatus {
    pub fn name(self) -> &'static str {
        match self {
            SearchStatus::Optimal => "optimal",
            SearchStatus::Feasible => "feasible",
            SearchStatus::Infeasible => "infeasible",
            SearchStatus::Limit => "limit",
        }
    }
}

impl std::fmt::Display for SearchStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Handler counters use the same names as [`PropagationOutcome`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub nodes: u64,
    #[serde(rename = "calls")]
    pub handler_calls: u64,
    pub domain_reductions: u64,
    pub cutoffs: u64,
    #[serde(rename = "prop_time_ms", with = "duration_ms")]
    pub prop_time: Duration,
    #[serde(rename = "solve_time_ms", with = "duration_ms")]
    pub solve_time: Duration,
    pub status: SearchStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub incumbent: Option<Vec<f64>>,
    /// Objective of the incumbent in the model's own sense.
    pub objective: Option<f64>,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("integer variable `{0}` has an infinite bound")]
    InfiniteDomain(String),
    #[error("node limit must be at least 1")]
    ZeroNodeLimit,
    #[error("record references variable {0} outside the model")]
    UnknownVariable(VarId),
}

struct Search<'a> {
    model: &'a MipModel,
    records: &'a [SemanticRecord],
    config: &'a SearchConfig,
    start: Instant,
    stats: SearchStats,
    best: Option<(f64, Vec<f64>)>,
    inexact: bool,
}

/// Depth-first search for a minimum of the model objective.
pub fn dfs_solve(model: &MipModel, records: &[SemanticRecord], config: &SearchConfig) -> Result<SearchResult, SearchError> {
    if config.node_limit == 0 {
        return Err(SearchError::ZeroNodeLimit);
    }
    for v in model.integer_vars() {
        let var = &model.variables[v];
        if !var.lower.is_finite() || !var.upper.is_finite() {
            return Err(SearchError::InfiniteDomain(var.name.clone()));
        }
    }
    if let Some(&v) = records.iter().flat_map(|r| r.scope.iter()).find(|&&v| v >= model.num_vars()) {
        return Err(SearchError::UnknownVariable(v));
    }
    let mut s = Search {
        model,
        records,
        config,
        start: Instant::now(),
        stats: SearchStats {
            nodes: 0,
            handler_calls: 0,
            domain_reductions: 0,
            cutoffs: 0,
            prop_time: Duration::ZERO,
            solve_time: Duration::ZERO,
            status: SearchStatus::Limit,
        },
        best: None,
        inexact: false,
    };
    let complete = s.run(DomainBox::from_model(model));
    s.stats.solve_time = s.start.elapsed();
    s.stats.status = match (complete, &s.best, s.inexact) {
        (false, _, _) => SearchStatus::Limit,
        (true, Some(_), false) => SearchStatus::Optimal,
        (true, Some(_), true) => SearchStatus::Feasible,
        (true, None, false) => SearchStatus::Infeasible,
        (true, None, true) => SearchStatus::Limit,
    };
    let (objective, incumbent) = match s.best {
        Some((obj, x)) => (Some(obj), Some(x)),
        None => (None, None),
    };
    let objective = objective.map(|o| match model.sense {
        ObjectiveSense::Minimize => o,
        ObjectiveSense::Maximize => -o,
    });
    Ok(SearchResult {
        incumbent,
        objective,
        stats: s.stats,
    })
}

impl Search<'_> {
    fn out_of_budget(&self) -> bool {
        self.stats.nodes >= self.config.node_limit || self.start.elapsed() >= self.config.time_limit
    }

    /// Returns false when a limit stopped the search.
    fn run(&mut self, root: DomainBox) -> bool {
        let mut stack = vec![(root, true)];
        while let Some((mut dom, is_root)) = stack.pop() {
            if self.out_of_budget() {
                return false;
            }
            self.stats.nodes += 1;
            self.propagate(&mut dom, is_root);
            if dom.is_empty() {
                continue;
            }
            let bound = self.objective_bound(&dom);
            if self.best.as_ref().is_some_and(|b| bound >= b.0 - self.tol()) {
                continue;
            }
            match self.branch_var(&dom) {
                None => self.settle_leaf(dom),
                Some(v) => {
                    let (lo, hi) = (dom.lb(v), dom.ub(v));
                    let mid = ((lo + hi) / 2.0).floor();
                    let mut left = dom.clone();
                    left.restrict(v, lo, mid);
                    dom.restrict(v, mid + 1.0, hi);
                    stack.push((dom, false));
                    stack.push((left, false));
                }
            }
        }
        true
    }

    fn tol(&self) -> f64 {
        self.config.propagator.tolerances.feasibility
    }

    fn propagate(&mut self, dom: &mut DomainBox, is_root: bool) {
        let cfg = &self.config.propagator;
        if is_root || self.config.propfreq == PropFreq::EveryNode {
            let out = run_fixpoint(self.model, self.records, dom, cfg);
            self.absorb(&out);
        } else {
            propagate_rows_fixpoint(self.model.rows.iter(), dom, &cfg.tolerances, cfg.rounds());
        }
    }

    fn absorb(&mut self, out: &PropagationOutcome) {
        self.stats.handler_calls += out.calls;
        self.stats.domain_reductions += out.domain_reductions;
        self.stats.cutoffs += out.cutoffs;
        self.stats.prop_time += out.prop_time;
    }

    fn objective_bound(&self, dom: &DomainBox) -> f64 {
        self.model.objective_offset
            + self
                .model
                .objective
                .iter()
                .map(|&(v, c)| if c > 0.0 { c * dom.lb(v) } else { c * dom.ub(v) })
                .sum::<f64>()
    }

    fn branch_var(&self, dom: &DomainBox) -> Option<VarId> {
        let open = (0..dom.len()).filter(|&v| dom.is_integral(v) && !dom.is_fixed(v));
        match self.config.branch_rule {
            BranchRule::FirstUnfixed => open.min(),
            BranchRule::MostConstrained => open.min_by(|&a, &b| {
                let wa = dom.ub(a) - dom.lb(a);
                let wb = dom.ub(b) - dom.lb(b);
                wa.total_cmp(&wb).then(a.cmp(&b))
            }),
        }
    }

    /// Every integer is fixed: fix the continuous variables one at a time to
    /// their cheaper bound (falling back to the other bound, then the
    /// midpoint) and keep the point if it satisfies every row.
    fn settle_leaf(&mut self, mut dom: DomainBox) {
        let tol = self.config.propagator.tolerances;
        let rounds = self.config.propagator.rounds();
        let bound = self.objective_bound(&dom);
        let cost = |v: VarId| {
            self.model
                .objective
                .iter()
                .filter(|t| t.0 == v)
                .map(|t| t.1)
                .sum::<f64>()
        };
        for v in 0..dom.len() {
            if dom.is_fixed(v) {
                continue;
            }
            let (lo, hi) = (dom.lb(v), dom.ub(v));
            let (first, second) = if cost(v) >= 0.0 { (lo, hi) } else { (hi, lo) };
            let candidates = [first, second, (lo + hi) / 2.0, 0.0f64.clamp(lo, hi)];
            let mut settled = false;
            for x in candidates.into_iter().filter(|x| x.is_finite()) {
                let mut trial = dom.clone();
                trial.restrict(v, x, x);
                propagate_rows_fixpoint(self.model.rows.iter(), &mut trial, &tol, rounds);
                if !trial.is_empty() {
                    dom = trial;
                    settled = true;
                    break;
                }
            }
            if !settled {
                self.inexact = true;
                return;
            }
        }
        let point: Vec<f64> = (0..dom.len()).map(|v| dom.lb(v)).collect();
        if !self.model.rows.iter().all(|r| r.is_satisfied(&point, tol.feasibility)) {
            self.inexact = true;
            return;
        }
        let obj = self.model.objective_value(&point);
        if obj > bound + tol.feasibility {
            self.inexact = true;
        }
        if self.best.as_ref().map_or(true, |b| obj < b.0 - tol.feasibility) {
            self.best = Some((obj, point));
        }
    }
}

impl SearchResult {
    /// Stats document with the incumbent keyed by variable name. Wall-clock
    /// fields appear only when `timings` is set.
    pub fn to_named_json(&self, model: &MipModel, propfreq: PropFreq, records: usize, timings: bool) -> serde_json::Value {
        let stats = &self.stats;
        let incumbent = self.incumbent.as_ref().map(|x| {
            model
                .variables
                .iter()
                .zip(x)
                .map(|(v, &val)| (v.name.clone(), serde_json::json!(val)))
                .collect::<serde_json::Map<_, _>>()
        });
        let mut doc = serde_json::json!({
            "schema": 1,
            "propfreq": propfreq,
            "records": records,
            "status": stats.status,
            "objective": self.objective,
            "nodes": stats.nodes,
            "calls": stats.handler_calls,
            "domain_reductions": stats.domain_reductions,
            "cutoffs": stats.cutoffs,
            "incumbent": incumbent,
        });
        if timings {
            doc["prop_time_ms"] = serde_json::json!(stats.prop_time.as_secs_f64() * 1e3);
            doc["solve_time_ms"] = serde_json::json!(stats.solve_time.as_secs_f64() * 1e3);
        }
        doc
    }
}
