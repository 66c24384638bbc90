//! Big-M guarded polyhedral disjunctions.
//!
//! A one-sided row `g*y + a*x <= rhs` with binary `y` is guarded when, at the
//! inactive value of `y`, the row is implied by the original bounds
//! (`|g| >= maxact(a*x) - b` with `b` the active right-hand side) while the
//! active side `a*x <= b` still cuts (`b < maxact(a*x)`).

use std::collections::BTreeMap;

use super::rows::Scan;
use super::{BranchRow, Confidence, DisjBranch, DisjPolyhedralParams, DisjVariant, RecordParams, SemanticRecord};
use crate::model::{RowId, VarId};

/// Most branches a disjunction may have.
pub const MAX_BRANCHES: usize = 6;

#[derive(Clone)]
struct Guarded {
    row: RowId,
    guard: VarId,
    active: f64,
    terms: Vec<(VarId, f64)>,
    rhs: f64,
}

fn guarded(scan: &Scan, r: RowId) -> Option<Guarded> {
    if scan.exact_one(r).is_some() {
        return None;
    }
    let f = scan.one_sided(r)?;
    let tol = scan.config.tolerances.feasibility;
    let mut found: Option<Guarded> = None;
    for &(y, g) in &f.terms {
        if !scan.is_binary(y) {
            continue;
        }
        let rest: Vec<(VarId, f64)> = f.terms.iter().copied().filter(|t| t.0 != y).collect();
        // Polyhedral pieces only: single-variable bounds and pure binary
        // rows are left to other families.
        if rest.len() < 2 || rest.iter().all(|t| scan.is_binary(t.0)) {
            continue;
        }
        let max_rest = scan.activity(&rest).1;
        if !max_rest.is_finite() {
            continue;
        }
        let (b, active) = if g > 0.0 { (f.rhs - g, 1.0) } else { (f.rhs, 0.0) };
        let admitted = g.abs() >= max_rest - b - tol && b < max_rest - tol;
        if admitted {
            if found.is_some() {
                return None;
            }
            found = Some(Guarded {
                row: r,
                guard: y,
                active,
                terms: rest,
                rhs: b,
            });
        }
    }
    found
}

fn branch(selector: VarId, active: f64, rows: &[Guarded]) -> DisjBranch<VarId, RowId> {
    DisjBranch {
        selector,
        active_value: active,
        rows: rows
            .iter()
            .map(|g| BranchRow {
                row: g.row,
                terms: g.terms.clone(),
                rhs: g.rhs,
            })
            .collect(),
    }
}

fn record(variant: DisjVariant, branches: Vec<DisjBranch<VarId, RowId>>, extra: Option<RowId>) -> SemanticRecord {
    let mut touched: Vec<VarId> = branches
        .iter()
        .flat_map(|b| b.rows.iter().flat_map(|r| r.terms.iter().map(|t| t.0)))
        .collect();
    touched.sort_unstable();
    touched.dedup();
    let mut scope: Vec<VarId> = branches.iter().map(|b| b.selector).collect();
    scope.extend(&touched);
    let mut evidence: Vec<RowId> = branches.iter().flat_map(|b| b.rows.iter().map(|r| r.row)).collect();
    evidence.extend(extra);
    SemanticRecord {
        params: RecordParams::DisjPolyhedral(DisjPolyhedralParams {
            variant,
            branches,
            touched,
        }),
        scope,
        evidence,
        confidence: Confidence::Exact,
    }
}

pub(super) fn detect(scan: &Scan) -> Vec<SemanticRecord> {
    // guard -> (rows active at 0, rows active at 1)
    let mut by_guard: BTreeMap<VarId, (Vec<Guarded>, Vec<Guarded>)> = BTreeMap::new();
    for &r in &scan.rows {
        if let Some(g) = guarded(scan, r) {
            let e = by_guard.entry(g.guard).or_default();
            if g.active > 0.5 {
                e.1.push(g);
            } else {
                e.0.push(g);
            }
        }
    }
    let mut out = Vec::new();
    let mut taken: Vec<VarId> = Vec::new();

    for &r in &scan.rows {
        let Some(sel) = scan.exact_one(r) else { continue };
        if sel.len() > MAX_BRANCHES || sel.iter().any(|y| taken.contains(y)) {
            continue;
        }
        let mode = sel.iter().all(|y| {
            by_guard
                .get(y)
                .is_some_and(|(zero, one)| zero.is_empty() && !one.is_empty())
        });
        if !mode {
            continue;
        }
        let branches = sel.iter().map(|&y| branch(y, 1.0, &by_guard[&y].1)).collect();
        taken.extend(&sel);
        out.push(record(DisjVariant::ExactOneMode, branches, Some(r)));
    }

    for (&y, (zero, one)) in &by_guard {
        if taken.contains(&y) || zero.is_empty() || one.is_empty() {
            continue;
        }
        out.push(record(DisjVariant::BinarySelector, vec![branch(y, 0.0, zero), branch(y, 1.0, one)], None));
    }
    out
}
