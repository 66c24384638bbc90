//! Run-length chains over a binary sequence `x_1..x_T` with start indicators:
//!
//! * `x_1 - s_1 <= 0` and `x_t - x_{t-1} - s_t <= 0` mark run starts,
//! * `s_t - x_{t+k} <= 0` for `k < L` force runs of length at least `L`,
//! * optional windows `x_t + ... + x_{t+U} <= U` cap runs at `U`.

use std::collections::{BTreeMap, BTreeSet};

use super::rows::Scan;
use super::{Confidence, RecordParams, SemanticRecord, StretchParams};
use crate::model::{RowId, VarId};

/// `a - b <= 0` over two binaries as `(a, b)`.
fn implication(scan: &Scan, r: RowId) -> Option<(VarId, VarId)> {
    if scan.row(r).terms.len() != 2 {
        return None;
    }
    let f = scan.one_sided(r)?;
    if !scan.near(f.rhs, 0.0) {
        return None;
    }
    let (p, q) = (f.terms[0], f.terms[1]);
    let pair = if scan.near(p.1, 1.0) && scan.near(q.1, -1.0) {
        (p.0, q.0)
    } else if scan.near(p.1, -1.0) && scan.near(q.1, 1.0) {
        (q.0, p.0)
    } else {
        return None;
    };
    (scan.is_binary(pair.0) && scan.is_binary(pair.1)).then_some(pair)
}

/// `a - b - c <= 0` over three binaries as `(a, [b, c])`.
fn transition(scan: &Scan, r: RowId) -> Option<(VarId, [VarId; 2])> {
    if scan.row(r).terms.len() != 3 {
        return None;
    }
    let f = scan.one_sided(r)?;
    if !scan.near(f.rhs, 0.0) || !f.terms.iter().all(|t| scan.is_binary(t.0)) {
        return None;
    }
    let plus: Vec<VarId> = f.terms.iter().filter(|t| scan.near(t.1, 1.0)).map(|t| t.0).collect();
    let minus: Vec<VarId> = f.terms.iter().filter(|t| scan.near(t.1, -1.0)).map(|t| t.0).collect();
    (plus.len() == 1 && minus.len() == 2).then(|| (plus[0], [minus[0], minus[1]]))
}

pub(super) fn detect(scan: &Scan) -> Vec<SemanticRecord> {
    let mut trans: Vec<(RowId, VarId, [VarId; 2])> = Vec::new();
    let mut imps: Vec<(RowId, VarId, VarId)> = Vec::new();
    for &r in &scan.rows {
        if let Some((a, bc)) = transition(scan, r) {
            trans.push((r, a, bc));
        } else if let Some((a, b)) = implication(scan, r) {
            imps.push((r, a, b));
        }
    }
    let plus: BTreeSet<VarId> = trans.iter().map(|t| t.1).collect();
    let mut imp_from: BTreeMap<VarId, Vec<(RowId, VarId)>> = BTreeMap::new();
    for &(r, a, b) in &imps {
        imp_from.entry(a).or_default().push((r, b));
    }
    // The start of a chain is bounded by a start indicator outside `plus`.
    let heads_to_start = |q: VarId| -> Vec<(RowId, VarId)> {
        imp_from
            .get(&q)
            .map(|v| v.iter().copied().filter(|&(_, w)| !plus.contains(&w)).collect())
            .unwrap_or_default()
    };

    // pred[x_t] = (x_{t-1}, s_t, row)
    let mut pred: BTreeMap<VarId, (VarId, VarId, RowId)> = BTreeMap::new();
    let mut succ: BTreeMap<VarId, Vec<VarId>> = BTreeMap::new();
    for &(r, a, [b, c]) in &trans {
        let (p, s) = match (plus.contains(&b), plus.contains(&c)) {
            (true, false) => (b, c),
            (false, true) => (c, b),
            (false, false) => {
                let hb = !heads_to_start(b).is_empty();
                let hc = !heads_to_start(c).is_empty();
                match (hb, hc) {
                    (true, false) => (b, c),
                    (false, true) => (c, b),
                    _ => continue,
                }
            }
            (true, true) => continue,
        };
        if pred.insert(a, (p, s, r)).is_some() {
            pred.insert(a, (usize::MAX, usize::MAX, r));
        }
        succ.entry(p).or_default().push(a);
    }

    let mut out = Vec::new();
    let heads: Vec<VarId> = succ.keys().copied().filter(|v| !pred.contains_key(v)).collect();
    'chain: for head in heads {
        let start_rows = heads_to_start(head);
        if start_rows.len() != 1 {
            continue;
        }
        let (init_row, s1) = start_rows[0];
        let mut seq = vec![head];
        let mut starts = vec![s1];
        let mut evidence = vec![init_row];
        let mut cur = head;
        while let Some(next) = succ.get(&cur) {
            if next.len() != 1 {
                continue 'chain;
            }
            let x = next[0];
            let (p, s, r) = pred[&x];
            if p != cur || seq.contains(&x) {
                continue 'chain;
            }
            seq.push(x);
            starts.push(s);
            evidence.push(r);
            cur = x;
        }
        let t_len = seq.len();
        if t_len < 3 {
            continue;
        }
        let pos: BTreeMap<VarId, usize> = seq.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut distinct: BTreeSet<VarId> = seq.iter().copied().collect();
        if starts.iter().any(|s| pos.contains_key(s) || !distinct.insert(*s)) {
            continue;
        }

        // Minimum-run rows s_t - x_{t+k} <= 0.
        let mut offsets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); t_len];
        let mut run_rows = Vec::new();
        for (t, &s) in starts.iter().enumerate() {
            for &(r, b) in imp_from.get(&s).map(Vec::as_slice).unwrap_or(&[]) {
                match pos.get(&b) {
                    Some(&u) if u >= t => {
                        offsets[t].insert(u - t);
                        run_rows.push(r);
                    }
                    _ => continue 'chain,
                }
            }
        }
        let reach = offsets.iter().filter_map(|o| o.iter().max()).max().copied();
        let Some(reach) = reach else { continue };
        let min_run = reach + 1;
        for (t, o) in offsets.iter().enumerate() {
            let expect: BTreeSet<usize> = (0..=reach.min(t_len - 1 - t)).collect();
            if *o != expect {
                continue 'chain;
            }
        }

        // Windows capping run lengths.
        let mut windows: BTreeMap<usize, BTreeMap<usize, RowId>> = BTreeMap::new();
        let mut rows_seen: BTreeSet<RowId> = BTreeSet::new();
        for &x in &seq {
            for &r in &scan.cols[x] {
                if !rows_seen.insert(r) {
                    continue;
                }
                let Some(u) = scan.binary_unit_form(r) else { continue };
                if u.vars.len() < 2 || !u.vars.iter().all(|v| pos.contains_key(v)) {
                    continue;
                }
                let len = u.vars.len();
                if !scan.near(u.hi, (len - 1) as f64) || u.lo > 0.0 {
                    continue;
                }
                let mut p: Vec<usize> = u.vars.iter().map(|v| pos[v]).collect();
                p.sort_unstable();
                if p.windows(2).all(|w| w[1] == w[0] + 1) {
                    windows.entry(len).or_default().insert(p[0], r);
                }
            }
        }
        let max_run = match windows.len() {
            0 => None,
            1 => {
                let (&len, by_start) = windows.iter().next().unwrap();
                if by_start.len() != t_len + 1 - len {
                    continue;
                }
                evidence.extend(by_start.values());
                Some(len - 1)
            }
            _ => continue,
        };
        evidence.extend(run_rows);
        let mut scope = seq.clone();
        scope.extend(&starts);
        out.push(SemanticRecord {
            params: RecordParams::Stretch(StretchParams {
                sequence: seq,
                starts,
                min_run,
                max_run,
            }),
            scope,
            evidence,
            confidence: Confidence::Exact,
        });
    }
    out
}
