//! Time-indexed scheduling: one exact-one start row per task and per-period
//! capacity rows `sum(demand * start) <= C` over the starts covering the
//! period.

use std::collections::BTreeMap;

use super::rows::{LeForm, Scan};
use super::{Confidence, CumulativeParams, CumulativeTask, RecordParams, SemanticRecord, StartOption};
use crate::model::{RowId, VarId};

struct Task {
    row: RowId,
    starts: Vec<VarId>,
}

pub(super) fn detect(scan: &Scan) -> Vec<SemanticRecord> {
    let n = scan.model.num_vars();
    let mut tasks: Vec<Task> = Vec::new();
    let mut task_of: Vec<Option<usize>> = vec![None; n];
    let mut ambiguous = vec![false; n];
    for &r in &scan.rows {
        if let Some(vars) = scan.exact_one(r) {
            let t = tasks.len();
            for &v in &vars {
                if task_of[v].is_some() {
                    ambiguous[v] = true;
                }
                task_of[v] = Some(t);
            }
            tasks.push(Task { row: r, starts: vars });
        }
    }
    let task_ok: Vec<bool> = tasks.iter().map(|t| t.starts.iter().all(|&v| !ambiguous[v])).collect();

    // Capacity rows: positive coefficients over start variables only.
    let mut caps: Vec<(RowId, LeForm)> = Vec::new();
    for &r in &scan.rows {
        if scan.exact_one(r).is_some() {
            continue;
        }
        for form in scan.le_forms(r) {
            let ok = !form.terms.is_empty()
                && form.terms.iter().all(|&(v, c)| {
                    c > 0.0 && task_of[v].is_some_and(|t| task_ok[t]) && !ambiguous[v]
                })
                && form.rhs > 0.0;
            if ok {
                caps.push((r, form));
                break;
            }
        }
    }

    // Union tasks that share a capacity row.
    let mut parent: Vec<usize> = (0..tasks.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (_, form) in &caps {
        let first = task_of[form.terms[0].0].unwrap();
        for &(v, _) in &form.terms[1..] {
            let a = find(&mut parent, first);
            let b = find(&mut parent, task_of[v].unwrap());
            parent[a] = b;
        }
    }
    let mut comps: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for t in 0..tasks.len() {
        if task_ok[t] {
            let root = find(&mut parent, t);
            comps.entry(root).or_default().0.push(t);
        }
    }
    for (i, (_, form)) in caps.iter().enumerate() {
        let root = find(&mut parent, task_of[form.terms[0].0].unwrap());
        comps.entry(root).or_default().1.push(i);
    }

    let mut out = Vec::new();
    for (comp_tasks, comp_caps) in comps.into_values() {
        if comp_tasks.len() < 2 || comp_caps.is_empty() {
            continue;
        }
        let capacity = caps[comp_caps[0]].1.rhs;
        if !comp_caps.iter().all(|&c| scan.near(caps[c].1.rhs, capacity)) {
            continue;
        }
        let mut demand: Vec<Option<f64>> = vec![None; tasks.len()];
        let mut periods: BTreeMap<VarId, Vec<RowId>> = BTreeMap::new();
        let mut consistent = true;
        for &c in &comp_caps {
            let (r, form) = &caps[c];
            for &(v, coef) in &form.terms {
                let t = task_of[v].unwrap();
                match demand[t] {
                    None => demand[t] = Some(coef),
                    Some(d) if scan.near(d, coef) => {}
                    Some(_) => consistent = false,
                }
                periods.entry(v).or_default().push(*r);
            }
        }
        if !consistent {
            continue;
        }
        let mut records_tasks = Vec::with_capacity(comp_tasks.len());
        for &t in &comp_tasks {
            let Some(d) = demand[t] else {
                consistent = false;
                break;
            };
            let mut starts = Vec::with_capacity(tasks[t].starts.len());
            let mut duration = 0;
            for &v in &tasks[t].starts {
                let p = periods.get(&v).cloned().unwrap_or_default();
                if p.is_empty() {
                    consistent = false;
                }
                duration = duration.max(p.len());
                starts.push(StartOption { var: v, periods: p });
            }
            records_tasks.push(CumulativeTask {
                demand: d,
                duration,
                starts,
            });
        }
        // Unit durations everywhere make this a plain assignment grid.
        if !consistent || records_tasks.iter().all(|t| t.duration <= 1) {
            continue;
        }
        let mut scope: Vec<VarId> = comp_tasks.iter().flat_map(|&t| tasks[t].starts.iter().copied()).collect();
        scope.sort_unstable();
        let evidence: Vec<RowId> = comp_tasks
            .iter()
            .map(|&t| tasks[t].row)
            .chain(comp_caps.iter().map(|&c| caps[c].0))
            .collect();
        out.push(SemanticRecord {
            params: RecordParams::Cumulative(CumulativeParams {
                capacity,
                tasks: records_tasks,
            }),
            scope,
            evidence,
            confidence: Confidence::Exact,
        });
    }
    out
}
