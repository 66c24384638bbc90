//! Integer view `x` linked to an exact-one indicator group by
//! `x = sum(value * y)`.

use super::rows::Scan;
use super::{ChannelOption, ChannelParams, Confidence, RecordParams, SemanticRecord};
use crate::model::{RowId, VarId};

/// Reads `row` as `x = sum(value_k * y_k)` over the group; `None` if the row
/// has a different shape.
fn link(scan: &Scan, group: &[VarId], r: RowId) -> Option<(VarId, Vec<ChannelOption<VarId>>)> {
    let row = scan.row(r);
    if !row.is_equality() || !row.rhs.is_finite() {
        return None;
    }
    let mut outside = row.terms.iter().filter(|t| group.binary_search(&t.0).is_err());
    let &(x, a) = outside.next()?;
    if outside.next().is_some() || a.abs() < scan.config.tolerances.coefficient_floor {
        return None;
    }
    let mut options = Vec::with_capacity(group.len());
    for &y in group {
        let b = row.coefficient(y).unwrap_or(0.0);
        options.push(ChannelOption {
            value: (row.rhs - b) / a,
            indicator: y,
        });
    }
    // Only the indicator missing from the row may take the value rhs / a.
    let missing = group.iter().filter(|&&y| row.coefficient(y).is_none()).count();
    if missing > 1 {
        return None;
    }
    let mut values: Vec<f64> = options.iter().map(|o| o.value).collect();
    values.sort_by(f64::total_cmp);
    if values.windows(2).any(|w| scan.near(w[0], w[1])) {
        return None;
    }
    Some((x, options))
}

pub(super) fn detect(scan: &Scan) -> Vec<SemanticRecord> {
    let mut used = vec![false; scan.model.num_rows()];
    let mut out = Vec::new();
    for &g in &scan.rows {
        if used[g] {
            continue;
        }
        let Some(group) = scan.exact_one(g) else {
            continue;
        };
        let mut links: Vec<RowId> = group.iter().flat_map(|&y| scan.cols[y].iter().copied()).collect();
        links.sort_unstable();
        links.dedup();
        let matches: Vec<(RowId, VarId, Vec<ChannelOption<VarId>>)> = links
            .into_iter()
            .filter(|&r| r != g && !used[r])
            .filter_map(|r| link(scan, &group, r).map(|(x, o)| (r, x, o)))
            .collect();
        if matches.len() != 1 {
            continue;
        }
        let (l, x, options) = matches.into_iter().next().unwrap();
        used[g] = true;
        used[l] = true;
        let mut scope = group.clone();
        scope.push(x);
        out.push(SemanticRecord {
            params: RecordParams::Channel(ChannelParams { x, options }),
            scope,
            evidence: vec![g, l],
            confidence: Confidence::Exact,
        });
    }
    out
}
