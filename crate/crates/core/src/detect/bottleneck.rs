//! Exact-one selector groups linked to a shared bottleneck `z >= w * x`, with
//! optional activators `x <= y_j` and `sum(y) = p`.

use std::collections::BTreeMap;

use super::rows::Scan;
use super::{ActivatorParams, BottleneckParams, Confidence, RecordParams, SemanticRecord};
use crate::model::{RowId, VarId};

/// `w * x - z <= 0` with `x` binary, `z` not binary, `w > 0`; returns
/// `(z, x, w)`.
fn link(scan: &Scan, r: RowId) -> Option<(VarId, VarId, f64)> {
    if scan.row(r).terms.len() != 2 {
        return None;
    }
    let f = scan.one_sided(r)?;
    if f.rhs != 0.0 {
        return None;
    }
    let (a, b) = (f.terms[0], f.terms[1]);
    let ((x, wx), (z, wz)) = if scan.is_binary(a.0) && !scan.is_binary(b.0) {
        (a, b)
    } else if scan.is_binary(b.0) && !scan.is_binary(a.0) {
        (b, a)
    } else {
        return None;
    };
    if wx <= 0.0 || wz >= 0.0 {
        return None;
    }
    Some((z, x, wx / -wz))
}

/// `x - y <= 0` over binaries; returns `(x, y)`.
fn activation(scan: &Scan, r: RowId) -> Option<(VarId, VarId)> {
    if scan.row(r).terms.len() != 2 {
        return None;
    }
    let f = scan.one_sided(r)?;
    if !scan.near(f.rhs, 0.0) {
        return None;
    }
    let (a, b) = (f.terms[0], f.terms[1]);
    let pair = if scan.near(a.1, 1.0) && scan.near(b.1, -1.0) {
        (a.0, b.0)
    } else if scan.near(a.1, -1.0) && scan.near(b.1, 1.0) {
        (b.0, a.0)
    } else {
        return None;
    };
    (scan.is_binary(pair.0) && scan.is_binary(pair.1)).then_some(pair)
}

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
    // z -> [(x, w, row)]
    let mut links: BTreeMap<VarId, Vec<(VarId, f64, RowId)>> = BTreeMap::new();
    for &r in &scan.rows {
        if let Some((z, x, w)) = link(scan, r) {
            if group_of[x].is_some() && !ambiguous[x] {
                links.entry(z).or_default().push((x, w, r));
            }
        }
    }

    let mut consumed = vec![false; groups.len()];
    let mut out = Vec::new();
    for (z, zl) in links {
        let mut weight: BTreeMap<VarId, (f64, RowId)> = BTreeMap::new();
        let mut dup = false;
        for &(x, w, r) in &zl {
            if weight.insert(x, (w, r)).is_some() {
                dup = true;
            }
        }
        let mut touched: Vec<usize> = zl.iter().map(|l| group_of[l.0].unwrap()).collect();
        touched.sort_unstable();
        touched.dedup();
        if dup || touched.len() < 2 || touched.iter().any(|&g| consumed[g] || groups[g].1.len() < 2) {
            continue;
        }
        if touched.iter().any(|&g| groups[g].1.iter().any(|&v| ambiguous[v])) {
            continue;
        }
        let pairs: usize = touched.iter().map(|&g| groups[g].1.len()).sum();
        let fraction = weight.len() as f64 / pairs as f64;
        if fraction + 1e-12 < scan.config.link_fraction {
            continue;
        }
        let sel_groups: Vec<Vec<VarId>> = touched.iter().map(|&g| groups[g].1.clone()).collect();
        let weights: Vec<Vec<Option<f64>>> = sel_groups
            .iter()
            .map(|g| g.iter().map(|x| weight.get(x).map(|w| w.0)).collect())
            .collect();
        let mut evidence: Vec<RowId> = touched.iter().map(|&g| groups[g].0).collect();
        evidence.extend(weight.values().map(|w| w.1));

        // Activators: every selector has exactly one, tied by sum(y) = p.
        let mut act_of: BTreeMap<VarId, (VarId, RowId)> = BTreeMap::new();
        let mut act_clash = false;
        for g in &sel_groups {
            for &x in g {
                for &r in &scan.cols[x] {
                    if let Some((xx, y)) = activation(scan, r) {
                        if xx == x && group_of[y].is_none() && act_of.insert(x, (y, r)).is_some() {
                            act_clash = true;
                        }
                    }
                }
            }
        }
        let mut activators = None;
        if !act_clash && act_of.len() == pairs {
            let mut ys: Vec<VarId> = act_of.values().map(|a| a.0).collect();
            ys.sort_unstable();
            ys.dedup();
            let card = scan.cols[ys[0]].iter().copied().find(|&r| {
                scan.binary_unit_form(r).is_some_and(|u| {
                    u.vars == ys && scan.near(u.lo, u.hi) && scan.near(u.hi, u.hi.round())
                })
            });
            if let Some(cr) = card {
                let p = scan.binary_unit_form(cr).unwrap().hi.round();
                evidence.extend(act_of.values().map(|a| a.1));
                evidence.push(cr);
                activators = Some(ActivatorParams {
                    selector_activator: sel_groups
                        .iter()
                        .map(|g| g.iter().map(|x| act_of.get(x).map(|a| a.0)).collect())
                        .collect(),
                    activators: ys,
                    open_count: p,
                });
            }
        }
        for &g in &touched {
            consumed[g] = true;
        }
        let mut scope: Vec<VarId> = sel_groups.iter().flatten().copied().collect();
        scope.push(z);
        if let Some(a) = &activators {
            scope.extend(&a.activators);
        }
        let confidence = if weight.len() == pairs {
            Confidence::Exact
        } else {
            Confidence::Heuristic
        };
        out.push(SemanticRecord {
            params: RecordParams::BottleneckExactOne(BottleneckParams {
                groups: sel_groups,
                weights,
                bottleneck: z,
                activators,
            }),
            scope,
            evidence,
            confidence,
        });
    }
    out
}
