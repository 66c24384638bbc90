//! Lightweight filtering for the classic global constraints as they appear
//! in MIP encodings. Each rule is a direct consequence of the encoding rows,
//! iterated to a local fixpoint.

use std::collections::{BTreeMap, BTreeSet};

use crate::detect::{AllDifferentParams, CardinalityParams, ChannelParams, CumulativeParams, NValueParams, StretchParams};
use crate::model::{DomainBox, Tolerances, VarId};
use crate::outcome::PropagationOutcome;

use super::{all_binary, all_present, exact_one_closure};

fn cutoff(dom: &mut DomainBox, out: &mut PropagationOutcome) {
    dom.mark_empty();
    out.set_cutoff();
}

/// At-most-one closure: a fixed one zeroes the rest.
fn at_most_one_closure(dom: &mut DomainBox, group: &[VarId], tol: &Tolerances, out: &mut PropagationOutcome) -> bool {
    let ones: Vec<VarId> = group.iter().copied().filter(|&v| dom.is_fixed_one(v)).collect();
    if ones.len() > 1 {
        cutoff(dom, out);
        return false;
    }
    let mut changed = false;
    if let Some(&one) = ones.first() {
        for &v in group {
            if v != one {
                changed |= dom.tighten_ub(v, 0.0, tol, out);
            }
        }
    }
    changed
}

/// Residual counting on `lower <= sum(vars) <= upper` over binaries.
fn count_closure(
    dom: &mut DomainBox,
    vars: &[VarId],
    lower: f64,
    upper: f64,
    tol: &Tolerances,
    out: &mut PropagationOutcome,
) -> bool {
    let ones = vars.iter().filter(|&&v| dom.is_fixed_one(v)).count() as f64;
    let live = vars.iter().filter(|&&v| dom.is_live(v)).count() as f64;
    if ones > upper + tol.feasibility || live < lower - tol.feasibility {
        cutoff(dom, out);
        return false;
    }
    let mut changed = false;
    if ones >= upper - tol.feasibility {
        for &v in vars {
            if !dom.is_fixed_one(v) {
                changed |= dom.tighten_ub(v, 0.0, tol, out);
            }
        }
    } else if live <= lower + tol.feasibility {
        for &v in vars {
            if dom.is_live(v) {
                changed |= dom.tighten_lb(v, 1.0, tol, out);
            }
        }
    }
    changed
}

pub fn propagate_all_different(p: &AllDifferentParams<VarId>, dom: &mut DomainBox, tol: &Tolerances) -> PropagationOutcome {
    let mut out = PropagationOutcome::call();
    let vars = p.items.iter().chain(&p.values).flatten().copied();
    if dom.is_empty() || !all_binary(dom, vars) {
        return out;
    }
    let mut value_of: BTreeMap<VarId, usize> = BTreeMap::new();
    for (k, col) in p.values.iter().enumerate() {
        for &v in col {
            value_of.insert(v, k);
        }
    }
    loop {
        let mut changed = false;
        for item in &p.items {
            changed |= exact_one_closure(dom, item, tol, &mut out);
            if dom.is_empty() {
                return out;
            }
        }
        for col in &p.values {
            changed |= if p.values_exact {
                exact_one_closure(dom, col, tol, &mut out)
            } else {
                at_most_one_closure(dom, col, tol, &mut out)
            };
            if dom.is_empty() {
                return out;
            }
        }

        // Hall sets: k items whose live values all lie in the same k-set use
        // up those values.
        let live_sets: Vec<Option<BTreeSet<usize>>> = p
            .items
            .iter()
            .map(|item| {
                item.iter()
                    .filter(|&&v| dom.is_live(v))
                    .map(|v| value_of.get(v).copied())
                    .collect::<Option<BTreeSet<usize>>>()
            })
            .collect();
        let mut by_set: BTreeMap<&BTreeSet<usize>, Vec<usize>> = BTreeMap::new();
        for (i, s) in live_sets.iter().enumerate() {
            if let Some(s) = s {
                by_set.entry(s).or_default().push(i);
            }
        }
        let mut all_values: BTreeSet<usize> = BTreeSet::new();
        for s in live_sets.iter().flatten() {
            all_values.extend(s);
        }
        if live_sets.iter().all(Option::is_some) && all_values.len() < p.items.len() {
            cutoff(dom, &mut out);
            return out;
        }
        for (set, members) in &by_set {
            if members.len() > set.len() {
                cutoff(dom, &mut out);
                return out;
            }
            if members.len() < set.len() {
                continue;
            }
            for (i, item) in p.items.iter().enumerate() {
                if members.contains(&i) {
                    continue;
                }
                for &v in item {
                    if dom.is_live(v) && value_of.get(&v).is_some_and(|k| set.contains(k)) {
                        changed |= dom.tighten_ub(v, 0.0, tol, &mut out);
                    }
                }
            }
        }
        if dom.is_empty() || !changed {
            return out;
        }
    }
}

pub fn propagate_cardinality(p: &CardinalityParams<VarId>, dom: &mut DomainBox, tol: &Tolerances) -> PropagationOutcome {
    let mut out = PropagationOutcome::call();
    if dom.is_empty() || !all_binary(dom, p.vars.iter().copied()) {
        return out;
    }
    count_closure(dom, &p.vars, p.lower, p.upper, tol, &mut out);
    out
}

pub fn propagate_channel(p: &ChannelParams<VarId>, dom: &mut DomainBox, tol: &Tolerances) -> PropagationOutcome {
    let mut out = PropagationOutcome::call();
    let indicators: Vec<VarId> = p.options.iter().map(|o| o.indicator).collect();
    if dom.is_empty() || indicators.len() < 2 || !all_binary(dom, indicators.iter().copied()) || !all_present(dom, [p.x]) {
        return out;
    }
    let x = p.x;
    loop {
        let mut changed = exact_one_closure(dom, &indicators, tol, &mut out);
        if dom.is_empty() {
            return out;
        }
        let (lo, hi) = (dom.lb(x), dom.ub(x));
        let integral = dom.is_integral(x);
        for o in &p.options {
            let outside = o.value < lo - tol.feasibility || o.value > hi + tol.feasibility;
            let fractional = integral && (o.value - o.value.round()).abs() > tol.integrality;
            if dom.is_live(o.indicator) && (outside || fractional) {
                changed |= dom.tighten_ub(o.indicator, 0.0, tol, &mut out);
            }
        }
        if dom.is_empty() {
            return out;
        }
        let live = p.options.iter().filter(|o| dom.is_live(o.indicator)).map(|o| o.value);
        let (min, max) = live.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if min > max {
            cutoff(dom, &mut out);
            return out;
        }
        changed |= dom.tighten_lb(x, min, tol, &mut out);
        changed |= dom.tighten_ub(x, max, tol, &mut out);
        if dom.is_empty() || !changed {
            return out;
        }
    }
}

pub fn propagate_cumulative(p: &CumulativeParams<VarId, usize>, dom: &mut DomainBox, tol: &Tolerances) -> PropagationOutcome {
    let mut out = PropagationOutcome::call();
    let starts = p.tasks.iter().flat_map(|t| t.starts.iter().map(|s| s.var));
    if dom.is_empty() || p.tasks.iter().any(|t| t.demand < 0.0) || !all_binary(dom, starts) {
        return out;
    }
    loop {
        let mut changed = false;
        for t in &p.tasks {
            let group: Vec<VarId> = t.starts.iter().map(|s| s.var).collect();
            changed |= exact_one_closure(dom, &group, tol, &mut out);
            if dom.is_empty() {
                return out;
            }
        }
        // Compulsory part of a task: periods covered by every live start.
        let compulsory: Vec<BTreeSet<usize>> = p
            .tasks
            .iter()
            .map(|t| {
                let mut live = t.starts.iter().filter(|s| dom.is_live(s.var));
                let Some(first) = live.next() else { return BTreeSet::new() };
                let mut common: BTreeSet<usize> = first.periods.iter().copied().collect();
                for s in live {
                    let other: BTreeSet<usize> = s.periods.iter().copied().collect();
                    common = common.intersection(&other).copied().collect();
                }
                common
            })
            .collect();
        let mut load: BTreeMap<usize, f64> = BTreeMap::new();
        for (t, comp) in p.tasks.iter().zip(&compulsory) {
            for &r in comp {
                *load.entry(r).or_default() += t.demand;
            }
        }
        if load.values().any(|&l| l > p.capacity + tol.feasibility) {
            cutoff(dom, &mut out);
            return out;
        }
        for (t, comp) in p.tasks.iter().zip(&compulsory) {
            for s in &t.starts {
                if !dom.is_live(s.var) || dom.is_fixed_one(s.var) {
                    continue;
                }
                let overloads = s.periods.iter().any(|r| {
                    let others = load.get(r).copied().unwrap_or(0.0) - if comp.contains(r) { t.demand } else { 0.0 };
                    others + t.demand > p.capacity + tol.feasibility
                });
                if overloads {
                    changed |= dom.tighten_ub(s.var, 0.0, tol, &mut out);
                }
            }
        }
        if dom.is_empty() || !changed {
            return out;
        }
    }
}

pub fn propagate_nvalue(p: &NValueParams<VarId>, dom: &mut DomainBox, tol: &Tolerances) -> PropagationOutcome {
    let mut out = PropagationOutcome::call();
    let grid = p.items.iter().flatten().flatten().copied();
    if dom.is_empty()
        || !all_binary(dom, p.values.iter().copied().chain(grid))
        || !all_present(dom, [p.count])
        || p.items.iter().any(|row| row.len() != p.values.len())
    {
        return out;
    }
    let n = p.count;
    loop {
        let mut changed = false;
        for row in &p.items {
            let item: Vec<VarId> = row.iter().flatten().copied().collect();
            changed |= exact_one_closure(dom, &item, tol, &mut out);
            if dom.is_empty() {
                return out;
            }
        }
        for (k, &z) in p.values.iter().enumerate() {
            let column: Vec<VarId> = p.items.iter().filter_map(|row| row[k]).collect();
            for &y in &column {
                if dom.is_fixed_one(y) {
                    changed |= dom.tighten_lb(z, 1.0, tol, &mut out);
                }
                if !dom.is_live(z) {
                    changed |= dom.tighten_ub(y, 0.0, tol, &mut out);
                }
            }
            if p.upper_link {
                let live: Vec<VarId> = column.iter().copied().filter(|&y| dom.is_live(y)).collect();
                if live.is_empty() {
                    changed |= dom.tighten_ub(z, 0.0, tol, &mut out);
                } else if live.len() == 1 && dom.is_fixed_one(z) {
                    changed |= dom.tighten_lb(live[0], 1.0, tol, &mut out);
                }
            }
            if dom.is_empty() {
                return out;
            }
        }
        let forced = p.values.iter().filter(|&&z| dom.is_fixed_one(z)).count() as f64;
        let live = p.values.iter().filter(|&&z| dom.is_live(z)).count() as f64;
        let floor = if p.items.is_empty() { forced } else { forced.max(1.0) };
        changed |= dom.tighten_lb(n, floor, tol, &mut out);
        changed |= dom.tighten_ub(n, live, tol, &mut out);
        if dom.is_empty() {
            return out;
        }
        changed |= count_closure(dom, &p.values, dom.lb(n), dom.ub(n), tol, &mut out);
        if dom.is_empty() || !changed {
            return out;
        }
    }
}

pub fn propagate_stretch(p: &StretchParams<VarId>, dom: &mut DomainBox, tol: &Tolerances) -> PropagationOutcome {
    let mut out = PropagationOutcome::call();
    let t_len = p.sequence.len();
    if dom.is_empty()
        || p.starts.len() != t_len
        || p.min_run == 0
        || !all_binary(dom, p.sequence.iter().chain(&p.starts).copied())
    {
        return out;
    }
    let x = &p.sequence;
    let s = &p.starts;
    let l = p.min_run;
    loop {
        let mut changed = false;
        for t in 0..t_len {
            let end = (t + l - 1).min(t_len - 1);
            // A start forces its run; a forced zero inside the run forbids it.
            if dom.is_fixed_one(s[t]) {
                for &v in &x[t..=end] {
                    changed |= dom.tighten_lb(v, 1.0, tol, &mut out);
                }
            }
            if x[t..=end].iter().any(|&v| !dom.is_live(v)) {
                changed |= dom.tighten_ub(s[t], 0.0, tol, &mut out);
            }
            // A run beginning at t needs its start indicator.
            let prev_off = t == 0 || !dom.is_live(x[t - 1]);
            if prev_off && dom.is_fixed_one(x[t]) {
                changed |= dom.tighten_lb(s[t], 1.0, tol, &mut out);
            }
            if prev_off && !dom.is_live(s[t]) {
                changed |= dom.tighten_ub(x[t], 0.0, tol, &mut out);
            }
            if dom.is_empty() {
                return out;
            }
        }

        // Runs through a fixed one: its earliest possible start `b` and
        // latest possible end `e` bound the run from both sides.
        for t in 0..t_len {
            if !dom.is_fixed_one(x[t]) {
                continue;
            }
            let mut b = t;
            while b > 0 && dom.is_live(x[b - 1]) {
                b -= 1;
            }
            let mut e = t;
            while e + 1 < t_len && dom.is_live(x[e + 1]) {
                e += 1;
            }
            if e + 1 < t_len {
                // The run ends before the horizon, so it has full length.
                if e + 1 < l {
                    cutoff(dom, &mut out);
                    return out;
                }
                if e + 1 - l < t {
                    for &v in &x[(e + 1 - l)..t] {
                        changed |= dom.tighten_lb(v, 1.0, tol, &mut out);
                    }
                }
            }
            let reach = (b + l - 1).min(t_len - 1);
            if reach > t {
                for &v in &x[t + 1..=reach] {
                    changed |= dom.tighten_lb(v, 1.0, tol, &mut out);
                }
            }
            if dom.is_empty() {
                return out;
            }
        }

        if let Some(u) = p.max_run {
            let mut t = 0;
            while t < t_len {
                if !dom.is_fixed_one(x[t]) {
                    t += 1;
                    continue;
                }
                let a = t;
                while t + 1 < t_len && dom.is_fixed_one(x[t + 1]) {
                    t += 1;
                }
                let len = t - a + 1;
                if len > u {
                    cutoff(dom, &mut out);
                    return out;
                }
                if len == u {
                    if a > 0 {
                        changed |= dom.tighten_ub(x[a - 1], 0.0, tol, &mut out);
                    }
                    if t + 1 < t_len {
                        changed |= dom.tighten_ub(x[t + 1], 0.0, tol, &mut out);
                    }
                }
                t += 1;
            }
            if dom.is_empty() {
                return out;
            }
        }
        if !changed {
            return out;
        }
    }
}
