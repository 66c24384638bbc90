//! Rostering blocks: per (nurse, day) at-most-one rows, per (day, shift)
//! coverage equalities, and multi-day rows over the same assignment variables.
//!
//! A day is a connected component of at-most-one and coverage rows whose
//! incidence is a complete grid. Roles of the remaining block rows are read
//! from their shape, never from their names.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::rows::{intersection_size, Scan};
use super::{Confidence, CoverageRow, RecordParams, RosterDay, RosterRole, RosteringParams, SemanticRecord};
use crate::model::{RowId, VarId};

struct Day {
    nurses: Vec<usize>,
    shifts: Vec<usize>,
}

pub(super) fn detect(scan: &Scan) -> Vec<SemanticRecord> {
    let n = scan.model.num_vars();
    // Candidates: sos = `<= 1` rows (not equalities), dem = integral equalities.
    let mut sos: Vec<(RowId, Vec<VarId>)> = Vec::new();
    let mut dem: Vec<(RowId, Vec<VarId>, f64)> = Vec::new();
    for &r in &scan.rows {
        if let Some((vars, false)) = scan.at_most_one(r) {
            sos.push((r, vars));
        } else if let Some(u) = scan.binary_unit_form(r) {
            if u.vars.len() >= 2 && scan.near(u.lo, u.hi) && scan.near(u.hi, u.hi.round()) && u.hi >= 0.0 {
                let req = u.hi.round();
                dem.push((r, u.vars, req));
            }
        }
    }
    let mut sos_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut dem_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, (_, vars)) in sos.iter().enumerate() {
        for &v in vars {
            sos_of[v].push(i);
        }
    }
    for (i, (_, vars, _)) in dem.iter().enumerate() {
        for &v in vars {
            dem_of[v].push(i);
        }
    }
    let core = |v: VarId| sos_of[v].len() == 1 && dem_of[v].len() == 1;

    // Days: components of the sos/dem incidence through core variables.
    let mut day_of_sos = vec![usize::MAX; sos.len()];
    let mut day_of_dem = vec![usize::MAX; dem.len()];
    let mut days: Vec<Day> = Vec::new();
    for s0 in 0..sos.len() {
        if day_of_sos[s0] != usize::MAX || !sos[s0].1.iter().all(|&v| core(v)) {
            continue;
        }
        let d = days.len();
        let mut day = Day {
            nurses: vec![s0],
            shifts: Vec::new(),
        };
        day_of_sos[s0] = d;
        let mut queue = VecDeque::from([(true, s0)]);
        let mut ok = true;
        while let Some((is_sos, i)) = queue.pop_front() {
            let vars = if is_sos { &sos[i].1 } else { &dem[i].1 };
            for &v in vars {
                if !core(v) {
                    ok = false;
                    continue;
                }
                let (ns, nd) = (sos_of[v][0], dem_of[v][0]);
                if day_of_sos[ns] == usize::MAX {
                    day_of_sos[ns] = d;
                    day.nurses.push(ns);
                    queue.push_back((true, ns));
                }
                if day_of_dem[nd] == usize::MAX {
                    day_of_dem[nd] = d;
                    day.shifts.push(nd);
                    queue.push_back((false, nd));
                }
            }
        }
        let grid = ok
            && day.nurses.len() >= 2
            && day.shifts.len() >= 2
            && day.nurses.iter().all(|&a| {
                sos[a].1.len() == day.shifts.len()
                    && day.shifts.iter().all(|&b| intersection_size(&sos[a].1, &dem[b].1) == 1)
            })
            && day.shifts.iter().all(|&b| dem[b].1.len() == day.nurses.len());
        if grid {
            days.push(day);
        } else {
            days.push(Day {
                nurses: Vec::new(),
                shifts: Vec::new(),
            });
        }
    }
    let mut var_day: Vec<Option<usize>> = vec![None; n];
    for (d, day) in days.iter().enumerate() {
        for &s in &day.nurses {
            for &v in &sos[s].1 {
                var_day[v] = Some(d);
            }
        }
    }

    // Block rows over day variables, and the days they link.
    let mut structural: BTreeSet<RowId> = BTreeSet::new();
    for day in &days {
        structural.extend(day.nurses.iter().map(|&s| sos[s].0));
        structural.extend(day.shifts.iter().map(|&s| dem[s].0));
    }
    let mut parent: Vec<usize> = (0..days.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut block: Vec<(RowId, Vec<usize>)> = Vec::new();
    for &r in &scan.rows {
        if structural.contains(&r) || scan.is_redundant(r) {
            continue;
        }
        let row = scan.row(r);
        let mut spanned: Vec<usize> = Vec::new();
        let mut inside = !row.terms.is_empty();
        for &(v, _) in &row.terms {
            match var_day[v] {
                Some(d) => spanned.push(d),
                None => inside = false,
            }
        }
        if !inside {
            continue;
        }
        spanned.sort_unstable();
        spanned.dedup();
        for w in spanned.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            parent[a] = b;
        }
        block.push((r, spanned));
    }

    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for d in 0..days.len() {
        if !days[d].nurses.is_empty() {
            let root = find(&mut parent, d);
            comps.entry(root).or_default().push(d);
        }
    }
    let mut out = Vec::new();
    for (root, comp) in comps {
        let linking: Vec<&(RowId, Vec<usize>)> = block
            .iter()
            .filter(|(_, sp)| find(&mut parent.clone(), sp[0]) == root)
            .collect();
        if comp.len() < 2 || !linking.iter().any(|(_, sp)| sp.len() >= 2) {
            continue;
        }
        let nurse_count = days[comp[0]].nurses.len();
        if comp.iter().any(|&d| days[d].nurses.len() != nurse_count) {
            continue;
        }
        let mut roles: Vec<(RowId, RosterRole)> = Vec::new();
        let mut scope: Vec<VarId> = Vec::new();
        let mut rdays = Vec::with_capacity(comp.len());
        for &d in &comp {
            let day = &days[d];
            for &s in &day.nurses {
                roles.push((sos[s].0, RosterRole::Sos));
                scope.extend(&sos[s].1);
            }
            for &s in &day.shifts {
                roles.push((dem[s].0, RosterRole::Dem));
            }
            rdays.push(RosterDay {
                nurses: day.nurses.iter().map(|&s| sos[s].1.clone()).collect(),
                coverage: day
                    .shifts
                    .iter()
                    .map(|&s| CoverageRow {
                        vars: dem[s].1.clone(),
                        requirement: dem[s].2,
                    })
                    .collect(),
            });
        }
        for (r, spanned) in linking {
            roles.push((*r, classify(scan, *r, spanned.len(), comp.len())));
        }
        scope.sort_unstable();
        let evidence: Vec<RowId> = roles.iter().map(|x| x.0).collect();
        out.push(SemanticRecord {
            params: RecordParams::RosteringWindow(RosteringParams { days: rdays, roles }),
            scope,
            evidence,
            confidence: Confidence::Exact,
        });
    }
    out
}

fn classify(scan: &Scan, r: RowId, spanned: usize, total_days: usize) -> RosterRole {
    let row = scan.row(r);
    let pos = row.terms.iter().any(|t| t.1 > 0.0);
    let neg = row.terms.iter().any(|t| t.1 < 0.0);
    if pos && neg {
        return RosterRole::Flow;
    }
    let Some(u) = scan.unit_form(r) else {
        return RosterRole::Other;
    };
    if spanned < 2 {
        return RosterRole::Other;
    }
    let upper = u.hi.is_finite();
    let lower = u.lo.is_finite() && u.lo > 0.0;
    match (upper, lower, spanned == total_days) {
        (true, false, true) => RosterRole::Hub,
        (false, true, true) => RosterRole::Hlb,
        (true, false, false) => RosterRole::WorkWind,
        (false, true, false) => RosterRole::RestWind,
        (true, true, _) => RosterRole::Lba,
        _ => RosterRole::Other,
    }
}
