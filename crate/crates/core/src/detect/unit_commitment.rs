//! Unit-commitment blocks. Per generator `g` and period `t`:
//!
//! * link rows `Pmin u - p <= 0` and `p + r - Pmax u <= 0`,
//! * logic rows `u_t - u_{t-1} - v_t + w_t = 0` (and `u_1 - v_1 + w_1 = u_0`),
//! * ramp rows `p_t - p_{t-1} - RU u_{t-1} - SU v_t <= 0` and the mirrored
//!   ramp-down row with `u_t`, `w_t`,
//! * demand `sum_g p_{g,t} >= D_t`, optional reserve `sum_g r_{g,t} >= R_t`,
//! * optional minimum-up rows `sum(v) - u_t <= 0`.
//!
//! Chains of logic rows order the periods; every role is identified by shape.

use std::collections::{BTreeMap, BTreeSet};

use super::rows::{LeForm, Scan};
use super::{Confidence, RecordParams, SemanticRecord, UcGenerator, UcRole, UnitCommitmentParams};
use crate::model::{RowId, VarId};

struct Link {
    p: VarId,
    p_min: f64,
    row: RowId,
}

fn norm(form: &LeForm, v: VarId) -> Option<Vec<(VarId, f64)>> {
    let c = form.coef(v)?.abs();
    Some(form.terms.iter().map(|&(x, a)| (x, a / c)).collect())
}

/// `Pmin u - p <= 0`; returns `(u, p, Pmin)`.
fn link_min(scan: &Scan, r: RowId) -> Option<(VarId, VarId, f64)> {
    if scan.row(r).terms.len() != 2 {
        return None;
    }
    let f = scan.one_sided(r)?;
    if f.rhs != 0.0 {
        return None;
    }
    let (a, b) = (f.terms[0], f.terms[1]);
    let ((u, cu), (p, cp)) = if scan.is_binary(a.0) && !scan.is_binary(b.0) {
        (a, b)
    } else if scan.is_binary(b.0) && !scan.is_binary(a.0) {
        (b, a)
    } else {
        return None;
    };
    (cu > 0.0 && cp < 0.0).then(|| (u, p, cu / -cp))
}

pub(super) fn detect(scan: &Scan) -> Vec<SemanticRecord> {
    let mut links: BTreeMap<VarId, Link> = BTreeMap::new();
    let mut p_taken: BTreeSet<VarId> = BTreeSet::new();
    for &r in &scan.rows {
        if let Some((u, p, p_min)) = link_min(scan, r) {
            if links.contains_key(&u) || !p_taken.insert(p) {
                return Vec::new();
            }
            links.insert(u, Link { p, p_min, row: r });
        }
    }
    if links.is_empty() {
        return Vec::new();
    }
    let is_u = |v: VarId| links.contains_key(&v);

    // Logic rows: 4-var transitions and 3-var initial rows.
    let mut adjacency: BTreeMap<VarId, Vec<(VarId, RowId)>> = BTreeMap::new();
    let mut initial: BTreeMap<VarId, RowId> = BTreeMap::new();
    for &r in &scan.rows {
        let row = scan.row(r);
        if !row.is_equality() || !row.terms.iter().all(|t| scan.is_binary(t.0) && scan.near(t.1.abs(), 1.0)) {
            continue;
        }
        let us: Vec<(VarId, f64)> = row.terms.iter().copied().filter(|t| is_u(t.0)).collect();
        let others: Vec<(VarId, f64)> = row.terms.iter().copied().filter(|t| !is_u(t.0)).collect();
        if others.len() != 2 || others[0].1 * others[1].1 > 0.0 {
            continue;
        }
        match us.len() {
            2 if us[0].1 * us[1].1 < 0.0 && scan.near(row.rhs, 0.0) => {
                adjacency.entry(us[0].0).or_default().push((us[1].0, r));
                adjacency.entry(us[1].0).or_default().push((us[0].0, r));
            }
            1 => {
                let u0 = row.rhs * us[0].1.signum();
                if scan.near(u0, 0.0) || scan.near(u0, 1.0) {
                    initial.insert(us[0].0, r);
                }
            }
            _ => {}
        }
    }

    let mut generators: Vec<UcGenerator<VarId>> = Vec::new();
    let mut roles: Vec<(RowId, UcRole)> = Vec::new();
    for (&u1, &init_row) in &initial {
        let row = scan.row(init_row);
        let su = row.coefficient(u1).unwrap().signum();
        let mut g = UcGenerator {
            status: vec![u1],
            startup: Vec::new(),
            shutdown: Vec::new(),
            power: Vec::new(),
            reserve: Vec::new(),
            p_min: links[&u1].p_min,
            p_max: 0.0,
            ramp_up: 0.0,
            startup_ramp: 0.0,
            initial_status: row.rhs * su,
        };
        let split = |r: RowId, sign: f64| -> (VarId, VarId) {
            let mut v = usize::MAX;
            let mut w = usize::MAX;
            for &(x, c) in &scan.row(r).terms {
                if is_u(x) {
                    continue;
                }
                if c.signum() == sign {
                    w = x;
                } else {
                    v = x;
                }
            }
            (v, w)
        };
        let (v1, w1) = split(init_row, su);
        g.startup.push(v1);
        g.shutdown.push(w1);
        roles.push((init_row, UcRole::Logic));
        let mut prev = None;
        let mut cur = u1;
        loop {
            let next: Vec<&(VarId, RowId)> = adjacency
                .get(&cur)
                .map(|a| a.iter().filter(|(x, _)| Some(*x) != prev).collect())
                .unwrap_or_default();
            if next.len() > 1 {
                return Vec::new();
            }
            let Some(&&(nu, r)) = next.first() else { break };
            if g.status.contains(&nu) {
                return Vec::new();
            }
            let sign = scan.row(r).coefficient(nu).unwrap().signum();
            let (v, w) = split(r, sign);
            g.status.push(nu);
            g.startup.push(v);
            g.shutdown.push(w);
            roles.push((r, UcRole::Logic));
            prev = Some(cur);
            cur = nu;
        }
        generators.push(g);
    }
    let horizon = match generators.first() {
        Some(g) => g.status.len(),
        None => return Vec::new(),
    };
    if horizon < 2 || generators.iter().any(|g| g.status.len() != horizon) {
        return Vec::new();
    }

    // Power and reserve per (g, t), with the upper link rows.
    let mut role_of_var: BTreeMap<VarId, (usize, usize, char)> = BTreeMap::new();
    for (gi, g) in generators.iter_mut().enumerate() {
        for t in 0..horizon {
            let u = g.status[t];
            let link = &links[&u];
            g.power.push(link.p);
            roles.push((link.row, UcRole::Link));
            role_of_var.insert(u, (gi, t, 'u'));
            role_of_var.insert(link.p, (gi, t, 'p'));
            role_of_var.insert(g.startup[t], (gi, t, 'v'));
            role_of_var.insert(g.shutdown[t], (gi, t, 'w'));
        }
    }
    for gi in 0..generators.len() {
        for t in 0..horizon {
            let (u, p) = (generators[gi].status[t], generators[gi].power[t]);
            let mut found = None;
            for &r in &scan.cols[p] {
                let Some(f) = scan.one_sided(r) else { continue };
                if !(2..=3).contains(&f.terms.len()) || f.rhs != 0.0 {
                    continue;
                }
                let Some(n) = norm(&f, p) else { continue };
                let cp = n.iter().find(|x| x.0 == p).unwrap().1;
                let Some(&(_, cu)) = n.iter().find(|x| x.0 == u) else { continue };
                if cp <= 0.0 || cu >= 0.0 {
                    continue;
                }
                let extra: Vec<(VarId, f64)> = n.iter().copied().filter(|x| x.0 != p && x.0 != u).collect();
                match extra.as_slice() {
                    [] => found = Some((r, -cu, None)),
                    [(x, c)] if scan.near(*c, 1.0) && !scan.is_binary(*x) => found = Some((r, -cu, Some(*x))),
                    _ => continue,
                }
                break;
            }
            let Some((r, p_max, reserve)) = found else {
                return Vec::new();
            };
            let g = &mut generators[gi];
            if t == 0 {
                g.p_max = p_max;
            } else if !scan.near(g.p_max, p_max) || !scan.near(g.p_min, links[&u].p_min) {
                return Vec::new();
            }
            g.reserve.push(reserve);
            if let Some(x) = reserve {
                role_of_var.insert(x, (gi, t, 'r'));
            }
            roles.push((r, UcRole::Link));
        }
    }
    let with_reserve = generators.iter().all(|g| g.reserve.iter().all(Option::is_some));
    let no_reserve = generators.iter().all(|g| g.reserve.iter().all(Option::is_none));
    if !with_reserve && !no_reserve {
        return Vec::new();
    }

    // Remaining roles, scanned over rows touching the power variables.
    let mut seen: BTreeSet<RowId> = roles.iter().map(|x| x.0).collect();
    let mut demand = vec![None; horizon];
    let mut reserve = vec![None; horizon];
    let mut ramps: BTreeMap<(usize, usize, bool), (f64, f64)> = BTreeMap::new();
    let block_vars: Vec<VarId> = role_of_var.keys().copied().collect();
    for &x in &block_vars {
        for &r in &scan.cols[x] {
            if !seen.insert(r) {
                continue;
            }
            if let Some(role) = classify(scan, r, &role_of_var, &generators, &mut demand, &mut reserve, &mut ramps) {
                roles.push((r, role));
            }
        }
    }
    if demand.iter().any(Option::is_none) || (with_reserve && reserve.iter().any(Option::is_none)) {
        return Vec::new();
    }
    for (gi, g) in generators.iter_mut().enumerate() {
        let mut values = BTreeSet::new();
        for t in 1..horizon {
            for up in [true, false] {
                match ramps.get(&(gi, t, up)) {
                    Some(&(a, b)) => {
                        values.insert(((a * 1e6).round() as i64, (b * 1e6).round() as i64));
                        g.ramp_up = a;
                        g.startup_ramp = b;
                    }
                    None => return Vec::new(),
                }
            }
        }
        if values.len() != 1 {
            return Vec::new();
        }
    }

    let mut scope: Vec<VarId> = block_vars;
    scope.sort_unstable();
    let evidence: Vec<RowId> = roles.iter().map(|x| x.0).collect();
    vec![SemanticRecord {
        params: RecordParams::UnitCommitmentRamp(UnitCommitmentParams {
            generators,
            demand: demand.into_iter().map(Option::unwrap).collect(),
            reserve: if with_reserve {
                reserve.into_iter().map(Option::unwrap).collect()
            } else {
                Vec::new()
            },
            roles,
        }),
        scope,
        evidence,
        confidence: Confidence::Exact,
    }]
}

fn classify(
    scan: &Scan,
    r: RowId,
    role_of: &BTreeMap<VarId, (usize, usize, char)>,
    gens: &[UcGenerator<VarId>],
    demand: &mut [Option<f64>],
    reserve: &mut [Option<f64>],
    ramps: &mut BTreeMap<(usize, usize, bool), (f64, f64)>,
) -> Option<UcRole> {
    let row = scan.row(r);
    let tags: Option<Vec<(usize, usize, char, f64)>> = row
        .terms
        .iter()
        .map(|&(v, c)| role_of.get(&v).map(|&(g, t, k)| (g, t, k, c)))
        .collect();
    let tags = tags?;
    // Demand / reserve: one variable of the kind per generator, same period.
    if let Some(u) = scan.unit_form(r) {
        let kind = tags[0].2;
        let t = tags[0].1;
        let mut gs: Vec<usize> = tags.iter().map(|x| x.0).collect();
        gs.sort_unstable();
        gs.dedup();
        let same = tags.iter().all(|x| x.2 == kind && x.1 == t) && gs.len() == gens.len() && tags.len() == gens.len();
        if same && (kind == 'p' || kind == 'r') && u.lo.is_finite() && !u.hi.is_finite() && u.lo > 0.0 {
            let slot = if kind == 'p' { &mut demand[t] } else { &mut reserve[t] };
            if slot.is_some() {
                return None;
            }
            *slot = Some(u.lo);
            return Some(if kind == 'p' { UcRole::Demand } else { UcRole::Reserve });
        }
    }
    let f = scan.one_sided(r)?;
    if f.rhs.abs() > 1e-12 {
        return None;
    }
    let g = tags[0].0;
    if tags.iter().any(|x| x.0 != g) {
        return None;
    }
    let tag = |v: VarId| role_of[&v];
    // Ramp rows: +p_a, -p_b with |a - b| = 1.
    let ps: Vec<(VarId, f64)> = f.terms.iter().copied().filter(|&(v, _)| tag(v).2 == 'p').collect();
    if ps.len() == 2 && f.terms.len() == 4 {
        let (hi, lo) = if ps[0].1 > 0.0 { (ps[0], ps[1]) } else { (ps[1], ps[0]) };
        let scale = hi.1;
        if hi.1 <= 0.0 || !scan.near(lo.1, -scale) {
            return None;
        }
        let (th, tl) = (tag(hi.0).1, tag(lo.0).1);
        let others: Vec<(usize, char, f64)> = f
            .terms
            .iter()
            .filter(|&&(v, _)| tag(v).2 != 'p')
            .map(|&(v, c)| (tag(v).1, tag(v).2, c / scale))
            .collect();
        let find = |t: usize, k: char| others.iter().find(|o| o.0 == t && o.1 == k).map(|o| -o.2);
        if th == tl + 1 {
            // Ramp up: p_t - p_{t-1} <= RU u_{t-1} + SU v_t
            let (a, b) = (find(tl, 'u')?, find(th, 'v')?);
            if a >= 0.0 && b >= 0.0 {
                ramps.insert((g, th, true), (a, b));
                return Some(UcRole::Ramp);
            }
        } else if tl == th + 1 {
            // Ramp down: p_{t-1} - p_t <= RU u_t + SU w_t
            let (a, b) = (find(tl, 'u')?, find(tl, 'w')?);
            if a >= 0.0 && b >= 0.0 {
                ramps.insert((g, tl, false), (a, b));
                return Some(UcRole::Ramp);
            }
        }
        return None;
    }
    // Minimum up: +v over consecutive periods ending at t, -u_t.
    let us: Vec<(usize, f64)> = f.terms.iter().filter(|x| tag(x.0).2 == 'u').map(|x| (tag(x.0).1, x.1)).collect();
    let vs: Vec<(usize, f64)> = f.terms.iter().filter(|x| tag(x.0).2 == 'v').map(|x| (tag(x.0).1, x.1)).collect();
    if us.len() == 1 && vs.len() + 1 == f.terms.len() && !vs.is_empty() {
        let (t, cu) = us[0];
        if cu >= 0.0 || !vs.iter().all(|&(_, c)| scan.near(c, -cu)) {
            return None;
        }
        let mut ts: Vec<usize> = vs.iter().map(|x| x.0).collect();
        ts.sort_unstable();
        if *ts.last().unwrap() == t && ts.windows(2).all(|w| w[1] == w[0] + 1) {
            return Some(UcRole::MinUp);
        }
    }
    None
}
