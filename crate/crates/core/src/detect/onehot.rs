//! Disjoint exact-one groups sharing one binding capacity row.

use super::rows::Scan;
use super::{Confidence, OneHotResourceParams, RecordParams, SemanticRecord};
use crate::model::{RowId, VarId};

pub(super) fn detect(scan: &Scan) -> Vec<SemanticRecord> {
    let n = scan.model.num_vars();
    let mut groups: Vec<(RowId, Vec<VarId>)> = Vec::new();
    let mut group_of: Vec<Option<usize>> = vec![None; n];
    let mut ambiguous = vec![false; n];
    for &r in &scan.rows {
        if let Some(vars) = scan.exact_one(r) {
            let g = groups.len();
            for &v in &vars {
                if group_of[v].is_some() {
                    ambiguous[v] = true;
                }
                group_of[v] = Some(g);
            }
            groups.push((r, vars));
        }
    }
    if groups.len() < 2 {
        return Vec::new();
    }
    let group_ok: Vec<bool> = groups.iter().map(|(_, g)| g.iter().all(|&v| !ambiguous[v])).collect();
    let mut consumed = vec![false; groups.len()];
    let mut out = Vec::new();

    for &r in &scan.rows {
        if scan.exact_one(r).is_some() {
            continue;
        }
        for form in scan.le_forms(r) {
            let mut touched: Vec<usize> = form
                .terms
                .iter()
                .filter_map(|&(v, _)| group_of[v].filter(|_| !ambiguous[v]))
                .collect();
            touched.sort_unstable();
            touched.dedup();
            if touched.len() < 2 || touched.iter().any(|&g| consumed[g] || !group_ok[g]) {
                continue;
            }
            // Every option of a touched group appears with a nonnegative cost.
            let mut costs = Vec::with_capacity(touched.len());
            let mut ok = true;
            for &g in &touched {
                let c: Vec<f64> = groups[g].1.iter().map(|&v| form.coef(v).unwrap_or(f64::NAN)).collect();
                if c.iter().any(|x| x.is_nan() || *x < 0.0) {
                    ok = false;
                    break;
                }
                costs.push(c);
            }
            if !ok {
                continue;
            }
            let external: Vec<(VarId, f64)> = form
                .terms
                .iter()
                .copied()
                .filter(|&(v, _)| !touched.iter().any(|&g| group_of[v] == Some(g)) || ambiguous[v])
                .collect();
            let external_min = scan.activity(&external).0;
            if !external_min.is_finite() {
                continue;
            }
            let worst: f64 = costs.iter().map(|c| c.iter().cloned().fold(0.0, f64::max)).sum();
            if external_min + worst <= form.rhs + scan.config.tolerances.feasibility {
                continue;
            }
            for &g in &touched {
                consumed[g] = true;
            }
            let mut scope: Vec<VarId> = touched.iter().flat_map(|&g| groups[g].1.iter().copied()).collect();
            scope.sort_unstable();
            let mut evidence: Vec<RowId> = touched.iter().map(|&g| groups[g].0).collect();
            evidence.push(r);
            out.push(SemanticRecord {
                params: RecordParams::OneHotResource(OneHotResourceParams {
                    groups: touched.iter().map(|&g| groups[g].1.clone()).collect(),
                    costs,
                    budget: form.rhs,
                    external,
                    external_min,
                }),
                scope,
                evidence,
                confidence: Confidence::Exact,
            });
            break;
        }
    }
    out
}
