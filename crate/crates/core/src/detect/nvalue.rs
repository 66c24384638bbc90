//! Value indicators `z_v >= y_{i,v}`, a count row `N = sum(z_v)` and
//! exact-one item rows over the `y`.

use std::collections::BTreeMap;

use super::rows::Scan;
use super::{Confidence, NValueParams, RecordParams, SemanticRecord};
use crate::model::{RowId, VarId};

/// `N - sum(z) = 0` with unit coefficients; returns `(N, z)`.
fn count_row(scan: &Scan, r: RowId) -> Option<(VarId, Vec<VarId>)> {
    let row = scan.row(r);
    if !row.is_equality() || !scan.near(row.rhs, 0.0) || row.terms.len() < 3 {
        return None;
    }
    if !row.terms.iter().all(|t| scan.near(t.1.abs(), 1.0)) {
        return None;
    }
    let pos: Vec<VarId> = row.terms.iter().filter(|t| t.1 > 0.0).map(|t| t.0).collect();
    let neg: Vec<VarId> = row.terms.iter().filter(|t| t.1 < 0.0).map(|t| t.0).collect();
    let (count, mut values) = match (pos.len(), neg.len()) {
        (1, k) if k >= 2 => (pos[0], neg),
        (k, 1) if k >= 2 => (neg[0], pos),
        _ => return None,
    };
    if scan.is_binary(count) || !scan.model.variables[count].is_integral() {
        return None;
    }
    if !values.iter().all(|&z| scan.is_binary(z)) {
        return None;
    }
    values.sort_unstable();
    Some((count, values))
}

/// `y - z <= 0` between two binaries; returns `(y, z)`.
fn implication(scan: &Scan, r: RowId) -> Option<(VarId, VarId)> {
    let row = scan.row(r);
    if row.terms.len() != 2 {
        return None;
    }
    let form = scan.one_sided(r)?;
    if !scan.near(form.rhs, 0.0) {
        return None;
    }
    let (a, b) = (form.terms[0], form.terms[1]);
    let (y, z) = if scan.near(a.1, 1.0) && scan.near(b.1, -1.0) {
        (a.0, b.0)
    } else if scan.near(a.1, -1.0) && scan.near(b.1, 1.0) {
        (b.0, a.0)
    } else {
        return None;
    };
    (scan.is_binary(y) && scan.is_binary(z)).then_some((y, z))
}

pub(super) fn detect(scan: &Scan) -> Vec<SemanticRecord> {
    let n = scan.model.num_vars();
    let mut used = vec![false; scan.model.num_rows()];
    let mut out = Vec::new();
    for &c in &scan.rows {
        let Some((count, values)) = count_row(scan, c) else {
            continue;
        };
        let mut value_of: Vec<Option<usize>> = vec![None; n];
        let mut is_value = vec![false; n];
        for &z in &values {
            is_value[z] = true;
        }
        // y -> z implications per value.
        let mut members: Vec<Vec<VarId>> = vec![Vec::new(); values.len()];
        let mut links: Vec<RowId> = Vec::new();
        let mut clash = false;
        for (k, &z) in values.iter().enumerate() {
            for &r in &scan.cols[z] {
                if used[r] {
                    continue;
                }
                if let Some((y, zz)) = implication(scan, r) {
                    if zz != z || is_value[y] {
                        continue;
                    }
                    if value_of[y].is_some_and(|v| v != k) {
                        clash = true;
                    }
                    value_of[y] = Some(k);
                    members[k].push(y);
                    links.push(r);
                }
            }
        }
        if clash || members.iter().any(|m| m.is_empty()) {
            continue;
        }
        // Items: exact-one rows over the y variables.
        let mut items: Vec<(RowId, Vec<VarId>)> = Vec::new();
        let mut candidate_rows: Vec<RowId> = members
            .iter()
            .flatten()
            .flat_map(|&y| scan.cols[y].iter().copied())
            .collect();
        candidate_rows.sort_unstable();
        candidate_rows.dedup();
        let mut covered = vec![0usize; n];
        for r in candidate_rows {
            if used[r] {
                continue;
            }
            if let Some(vars) = scan.exact_one(r) {
                if vars.iter().all(|&y| value_of[y].is_some()) {
                    for &y in &vars {
                        covered[y] += 1;
                    }
                    items.push((r, vars));
                }
            }
        }
        let all_y: Vec<VarId> = members.iter().flatten().copied().collect();
        if items.is_empty() || all_y.iter().any(|&y| covered[y] != 1) {
            continue;
        }
        let mut grid = Vec::with_capacity(items.len());
        let mut ok = true;
        for (_, vars) in &items {
            let mut row: Vec<Option<VarId>> = vec![None; values.len()];
            for &y in vars {
                let k = value_of[y].unwrap();
                if row[k].is_some() {
                    ok = false;
                }
                row[k] = Some(y);
            }
            grid.push(row);
        }
        if !ok {
            continue;
        }
        // Optional z <= sum of its indicators, all or none.
        let mut upper: BTreeMap<usize, RowId> = BTreeMap::new();
        for (k, &z) in values.iter().enumerate() {
            let mut expect: Vec<VarId> = members[k].clone();
            expect.push(z);
            expect.sort_unstable();
            for &r in &scan.cols[z] {
                if used[r] || r == c {
                    continue;
                }
                let Some(form) = scan.one_sided(r) else { continue };
                let mut vars: Vec<VarId> = form.terms.iter().map(|t| t.0).collect();
                vars.sort_unstable();
                if vars != expect || !scan.near(form.rhs, 0.0) {
                    continue;
                }
                let shape = form.terms.iter().all(|&(v, a)| {
                    if v == z {
                        scan.near(a, 1.0)
                    } else {
                        scan.near(a, -1.0)
                    }
                });
                if shape {
                    upper.insert(k, r);
                    break;
                }
            }
        }
        let upper_link = upper.len() == values.len();
        let mut evidence = vec![c];
        evidence.extend(links);
        evidence.extend(items.iter().map(|i| i.0));
        if upper_link {
            evidence.extend(upper.values());
        }
        for &r in &evidence {
            used[r] = true;
        }
        let mut scope = vec![count];
        scope.extend(&values);
        scope.extend(all_y);
        out.push(SemanticRecord {
            params: RecordParams::NValue(NValueParams {
                count,
                values,
                items: grid,
                upper_link,
            }),
            scope,
            evidence,
            confidence: Confidence::Exact,
        });
    }
    out
}
