//! Assignment grids: item rows `sum = 1`, value columns `sum <= 1`.

use std::collections::VecDeque;

use super::rows::{intersection_size, Scan};
use super::{AllDifferentParams, Confidence, RecordParams, SemanticRecord};
use crate::model::RowId;

pub(super) fn detect(scan: &Scan) -> Vec<SemanticRecord> {
    // Candidate rows and, per variable, the candidates containing it.
    let mut cand: Vec<(RowId, Vec<usize>, bool)> = Vec::new();
    let mut by_var: Vec<Vec<usize>> = vec![Vec::new(); scan.model.num_vars()];
    for &r in &scan.rows {
        if let Some((vars, exact)) = scan.at_most_one(r) {
            let id = cand.len();
            for &v in &vars {
                by_var[v].push(id);
            }
            cand.push((r, vars, exact));
        }
    }

    let mut color = vec![u8::MAX; cand.len()];
    let mut out = Vec::new();
    for start in 0..cand.len() {
        if color[start] != u8::MAX {
            continue;
        }
        // Two-colour the conflict graph component (rows sharing a variable).
        let mut comp = vec![start];
        let mut bipartite = true;
        color[start] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for &v in &cand[i].1 {
                for &j in &by_var[v] {
                    if j == i {
                        continue;
                    }
                    if color[j] == u8::MAX {
                        color[j] = 1 - color[i];
                        comp.push(j);
                        queue.push_back(j);
                    } else if color[j] == color[i] {
                        bipartite = false;
                    }
                }
            }
        }
        if !bipartite {
            continue;
        }
        let side_a: Vec<usize> = comp.iter().copied().filter(|&i| color[i] == 0).collect();
        let side_b: Vec<usize> = comp.iter().copied().filter(|&i| color[i] == 1).collect();
        if side_a.len() < 2 || side_b.len() < 2 {
            continue;
        }
        let complete = side_a.iter().all(|&a| {
            cand[a].1.len() == side_b.len()
                && side_b.iter().all(|&b| intersection_size(&cand[a].1, &cand[b].1) == 1)
        }) && side_b.iter().all(|&b| cand[b].1.len() == side_a.len());
        if !complete {
            continue;
        }
        let a_exact = side_a.iter().all(|&i| cand[i].2);
        let b_exact = side_b.iter().all(|&i| cand[i].2);
        let (items, values) = match (a_exact, b_exact) {
            (true, _) => (side_a, side_b),
            (false, true) => (side_b, side_a),
            (false, false) => continue,
        };
        let values_exact = values.iter().all(|&i| cand[i].2);
        let mut scope: Vec<usize> = items.iter().flat_map(|&i| cand[i].1.iter().copied()).collect();
        scope.sort_unstable();
        let evidence: Vec<RowId> = items.iter().chain(values.iter()).map(|&i| cand[i].0).collect();
        out.push(SemanticRecord {
            params: RecordParams::AllDifferent(AllDifferentParams {
                items: items.iter().map(|&i| cand[i].1.clone()).collect(),
                values: values.iter().map(|&i| cand[i].1.clone()).collect(),
                values_exact,
            }),
            scope,
            evidence,
            confidence: Confidence::Exact,
        });
    }
    out
}
