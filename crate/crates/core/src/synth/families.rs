//! Witness-first generators, one per family. Every generator draws a feasible
//! assignment, then emits rows it satisfies, then the record the detector is
//! expected to recover.

use rand::seq::SliceRandom;

use super::builder::{ones, Builder};
use super::SynthError;
use crate::detect::*;
use crate::model::{LinearRow, RowId, VarId};

fn need(ok: bool, what: &str) -> Result<(), SynthError> {
    if ok {
        Ok(())
    } else {
        Err(SynthError::Unsupported(what.to_string()))
    }
}

fn exact(params: RecordParams<VarId, RowId>, scope: Vec<VarId>, evidence: Vec<RowId>) -> SemanticRecord {
    SemanticRecord {
        params,
        scope,
        evidence,
        confidence: Confidence::Exact,
    }
}

pub(super) fn all_different(b: &mut Builder, items: usize, values: usize) -> Result<SemanticRecord, SynthError> {
    need(items >= 2 && values >= items, "AllDifferent needs 2 <= items <= values")?;
    let mut pool: Vec<usize> = (0..values).collect();
    pool.shuffle(&mut b.rng);
    let mut grid = Vec::with_capacity(items);
    for (i, &pick) in pool.iter().take(items).enumerate() {
        let row: Vec<VarId> = (0..values).map(|v| b.bin(format!("x_{i}_{v}"), v == pick)).collect();
        grid.push(row);
    }
    let mut evidence = Vec::new();
    for (i, row) in grid.iter().enumerate() {
        evidence.push(b.row(LinearRow::eq(format!("item_{i}"), ones(row), 1.0)));
    }
    let columns: Vec<Vec<VarId>> = (0..values).map(|v| grid.iter().map(|r| r[v]).collect()).collect();
    for (v, col) in columns.iter().enumerate() {
        evidence.push(b.row(LinearRow::le(format!("value_{v}"), ones(col), 1.0)));
    }
    let scope = grid.concat();
    Ok(exact(
        RecordParams::AllDifferent(AllDifferentParams {
            items: grid,
            values: columns,
            values_exact: false,
        }),
        scope,
        evidence,
    ))
}

pub(super) fn cardinality(b: &mut Builder, n: usize) -> Result<SemanticRecord, SynthError> {
    need(n >= 3, "Cardinality needs at least 3 variables")?;
    let bits: Vec<bool> = (0..n).map(|_| b.coin(0.5)).collect();
    let k = bits.iter().filter(|&&x| x).count() as i64;
    let vars: Vec<VarId> = bits.iter().enumerate().map(|(i, &x)| b.bin(format!("b_{i}"), x)).collect();
    let n = n as i64;
    let mode = b.range(0, 3);
    let (lo, hi) = match mode {
        1 if k < n => (None, Some(b.range(k.max(2), n - 1).max(k))),
        2 if k > 0 => (Some(b.range(1, k)), None),
        3 if k > 0 && k < n => (Some(b.range(1, k)), Some(b.range(k, n - 1))),
        _ => (Some(k), Some(k)),
    };
    let lhs = lo.map_or(f64::NEG_INFINITY, |x| x as f64);
    let rhs = hi.map_or(f64::INFINITY, |x| x as f64);
    let r = b.row(LinearRow::new("card", ones(&vars), lhs, rhs));
    Ok(exact(
        RecordParams::Cardinality(CardinalityParams {
            vars: vars.clone(),
            lower: lo.unwrap_or(0) as f64,
            upper: hi.unwrap_or(n) as f64,
        }),
        vars,
        vec![r],
    ))
}

pub(super) fn channel(b: &mut Builder, k: usize) -> Result<SemanticRecord, SynthError> {
    need(k >= 3, "Channel needs at least 3 values")?;
    let mut values = Vec::with_capacity(k);
    let mut v = b.range(-2, 3);
    for _ in 0..k {
        values.push(v);
        v += b.range(1, 2);
    }
    let pick = b.range(0, k as i64 - 1) as usize;
    let ys: Vec<VarId> = (0..k).map(|j| b.bin(format!("y_{j}"), j == pick)).collect();
    let x = b.int(
        "x".into(),
        values[0] as f64,
        values[k - 1] as f64,
        values[pick] as f64,
    );
    let pick_row = b.row(LinearRow::eq("pick", ones(&ys), 1.0));
    let mut terms = vec![(x, 1.0)];
    for (j, &y) in ys.iter().enumerate() {
        if values[j] != 0 {
            terms.push((y, -(values[j] as f64)));
        }
    }
    let link = b.row(LinearRow::eq("link", terms, 0.0));
    let mut scope = ys.clone();
    scope.push(x);
    Ok(exact(
        RecordParams::Channel(ChannelParams {
            x,
            options: ys
                .iter()
                .zip(&values)
                .map(|(&y, &v)| ChannelOption {
                    value: v as f64,
                    indicator: y,
                })
                .collect(),
        }),
        scope,
        vec![pick_row, link],
    ))
}

pub(super) fn cumulative(b: &mut Builder, tasks: usize, horizon: usize) -> Result<SemanticRecord, SynthError> {
    need(tasks >= 2 && horizon >= 3, "Cumulative needs 2 tasks and a horizon of 3")?;
    let durations: Vec<usize> = (0..tasks)
        .map(|j| if j == 0 { 2 } else { b.range(1, 2) as usize })
        .collect();
    let demands: Vec<i64> = (0..tasks).map(|_| b.range(1, 3)).collect();
    let chosen: Vec<usize> = durations
        .iter()
        .map(|&d| b.range(0, (horizon - d) as i64) as usize)
        .collect();
    let starts: Vec<Vec<VarId>> = (0..tasks)
        .map(|j| {
            (0..=horizon - durations[j])
                .map(|t| b.bin(format!("s_{j}_{t}"), t == chosen[j]))
                .collect()
        })
        .collect();
    let mut load = vec![0i64; horizon];
    for j in 0..tasks {
        for l in load.iter_mut().skip(chosen[j]).take(durations[j]) {
            *l += demands[j];
        }
    }
    let floor = load.iter().chain(&demands).copied().max().unwrap().max(2);
    let capacity = floor + b.range(0, 1);
    let mut evidence = Vec::new();
    for (j, s) in starts.iter().enumerate() {
        evidence.push(b.row(LinearRow::eq(format!("task_{j}"), ones(s), 1.0)));
    }
    let mut periods_of: Vec<Vec<Vec<RowId>>> = starts.iter().map(|s| vec![Vec::new(); s.len()]).collect();
    for p in 0..horizon {
        let mut terms = Vec::new();
        let mut covers = Vec::new();
        for j in 0..tasks {
            for (t, &s) in starts[j].iter().enumerate() {
                if t <= p && p < t + durations[j] {
                    terms.push((s, demands[j] as f64));
                    covers.push((j, t));
                }
            }
        }
        let r = b.row(LinearRow::le(format!("cap_{p}"), terms, capacity as f64));
        evidence.push(r);
        for (j, t) in covers {
            periods_of[j][t].push(r);
        }
    }
    let scope = starts.concat();
    Ok(exact(
        RecordParams::Cumulative(CumulativeParams {
            capacity: capacity as f64,
            tasks: (0..tasks)
                .map(|j| CumulativeTask {
                    demand: demands[j] as f64,
                    duration: durations[j],
                    starts: starts[j]
                        .iter()
                        .zip(&periods_of[j])
                        .map(|(&var, periods)| StartOption {
                            var,
                            periods: periods.clone(),
                        })
                        .collect(),
                })
                .collect(),
        }),
        scope,
        evidence,
    ))
}

pub(super) fn nvalue(b: &mut Builder, items: usize, values: usize) -> Result<SemanticRecord, SynthError> {
    need(items >= 2 && values >= 2, "NValue needs 2 items and 2 values")?;
    let picks: Vec<usize> = (0..items).map(|_| b.range(0, values as i64 - 1) as usize).collect();
    let upper_link = b.coin(0.5);
    let used: Vec<bool> = (0..values)
        .map(|v| picks.contains(&v) || (!upper_link && b.coin(0.3)))
        .collect();
    let grid: Vec<Vec<VarId>> = (0..items)
        .map(|i| (0..values).map(|v| b.bin(format!("y_{i}_{v}"), picks[i] == v)).collect())
        .collect();
    let zs: Vec<VarId> = (0..values).map(|v| b.bin(format!("z_{v}"), used[v])).collect();
    let count = used.iter().filter(|&&u| u).count() as f64;
    let n = b.int("nval".into(), 0.0, values as f64, count);
    let mut evidence = Vec::new();
    for (i, row) in grid.iter().enumerate() {
        evidence.push(b.row(LinearRow::eq(format!("item_{i}"), ones(row), 1.0)));
        for (v, &y) in row.iter().enumerate() {
            evidence.push(b.row(LinearRow::le(format!("imp_{i}_{v}"), vec![(y, 1.0), (zs[v], -1.0)], 0.0)));
        }
    }
    let mut terms = vec![(n, 1.0)];
    terms.extend(zs.iter().map(|&z| (z, -1.0)));
    evidence.push(b.row(LinearRow::eq("count", terms, 0.0)));
    if upper_link {
        for (v, &z) in zs.iter().enumerate() {
            let mut terms = vec![(z, 1.0)];
            terms.extend(grid.iter().map(|r| (r[v], -1.0)));
            evidence.push(b.row(LinearRow::le(format!("up_{v}"), terms, 0.0)));
        }
    }
    let mut scope = grid.concat();
    scope.extend(&zs);
    scope.push(n);
    Ok(exact(
        RecordParams::NValue(NValueParams {
            count: n,
            values: zs,
            items: grid.iter().map(|r| r.iter().map(|&y| Some(y)).collect()).collect(),
            upper_link,
        }),
        scope,
        evidence,
    ))
}

pub(super) fn stretch(b: &mut Builder, horizon: usize, min_run: usize) -> Result<SemanticRecord, SynthError> {
    need(horizon >= 3 && min_run >= 1 && min_run <= horizon, "Stretch needs 1 <= min run <= horizon, horizon >= 3")?;
    let max_run = if horizon >= min_run.max(2) + 1 && b.coin(0.5) {
        let hi = (min_run.max(2) + 2).min(horizon - 1);
        Some(b.range(min_run.max(2) as i64, hi as i64) as usize)
    } else {
        None
    };
    let longest = max_run.unwrap_or(min_run + 2);
    let mut on = vec![false; horizon];
    let mut start = vec![false; horizon];
    let mut t = 0;
    while t < horizon {
        if b.coin(0.5) {
            let len = b.range(min_run as i64, longest as i64) as usize;
            start[t] = true;
            for x in on.iter_mut().skip(t).take(len) {
                *x = true;
            }
            t += len + 1;
        } else {
            t += 1;
        }
    }
    let xs: Vec<VarId> = (0..horizon).map(|t| b.bin(format!("x_{t}"), on[t])).collect();
    let ss: Vec<VarId> = (0..horizon).map(|t| b.bin(format!("s_{t}"), start[t])).collect();
    let mut evidence = vec![b.row(LinearRow::le("init", vec![(xs[0], 1.0), (ss[0], -1.0)], 0.0))];
    for t in 1..horizon {
        evidence.push(b.row(LinearRow::le(
            format!("trans_{t}"),
            vec![(xs[t], 1.0), (xs[t - 1], -1.0), (ss[t], -1.0)],
            0.0,
        )));
    }
    for t in 0..horizon {
        for k in 0..min_run.min(horizon - t) {
            evidence.push(b.row(LinearRow::le(
                format!("run_{t}_{k}"),
                vec![(ss[t], 1.0), (xs[t + k], -1.0)],
                0.0,
            )));
        }
    }
    if let Some(u) = max_run {
        for t in 0..horizon - u {
            evidence.push(b.row(LinearRow::le(format!("win_{t}"), ones(&xs[t..=t + u]), u as f64)));
        }
    }
    let mut scope = xs.clone();
    scope.extend(&ss);
    Ok(exact(
        RecordParams::Stretch(StretchParams {
            sequence: xs,
            starts: ss,
            min_run,
            max_run,
        }),
        scope,
        evidence,
    ))
}

pub(super) fn one_hot(b: &mut Builder, groups: usize, options: usize) -> Result<SemanticRecord, SynthError> {
    need(groups >= 2 && options >= 2, "OneHotResource needs 2 groups of 2 options")?;
    let costs: Vec<Vec<i64>> = loop {
        let c: Vec<Vec<i64>> = (0..groups)
            .map(|_| (0..options).map(|_| b.range(1, 9)).collect())
            .collect();
        if c.iter().any(|g| g.iter().min() < g.iter().max()) {
            break c;
        }
    };
    let mut picks: Vec<usize> = (0..groups).map(|_| b.range(0, options as i64 - 1) as usize).collect();
    let max_of = |g: &Vec<i64>| *g.iter().max().unwrap();
    if (0..groups).all(|g| costs[g][picks[g]] == max_of(&costs[g])) {
        let g = costs.iter().position(|c| c.iter().min() < c.iter().max()).unwrap();
        picks[g] = (0..options).min_by_key(|&k| costs[g][k]).unwrap();
    }
    let used: i64 = (0..groups).map(|g| costs[g][picks[g]]).sum();
    let worst: i64 = costs.iter().map(max_of).sum();
    let budget = b.range(used, worst - 1);
    let vars: Vec<Vec<VarId>> = (0..groups)
        .map(|g| (0..options).map(|k| b.bin(format!("y_{g}_{k}"), picks[g] == k)).collect())
        .collect();
    let mut evidence = Vec::new();
    for (g, row) in vars.iter().enumerate() {
        evidence.push(b.row(LinearRow::eq(format!("grp_{g}"), ones(row), 1.0)));
    }
    let terms: Vec<(VarId, f64)> = (0..groups)
        .flat_map(|g| (0..options).map(move |k| (g, k)))
        .map(|(g, k)| (vars[g][k], costs[g][k] as f64))
        .collect();
    evidence.push(b.row(LinearRow::le("budget", terms, budget as f64)));
    Ok(exact(
        RecordParams::OneHotResource(OneHotResourceParams {
            groups: vars.clone(),
            costs: costs.iter().map(|g| g.iter().map(|&c| c as f64).collect()).collect(),
            budget: budget as f64,
            external: Vec::new(),
            external_min: 0.0,
        }),
        vars.concat(),
        evidence,
    ))
}

pub(super) fn bottleneck(b: &mut Builder, groups: usize, options: usize) -> Result<SemanticRecord, SynthError> {
    need(groups >= 2 && options >= 2, "BottleneckExactOne needs 2 groups of 2 options")?;
    let weights: Vec<Vec<i64>> = (0..groups)
        .map(|_| (0..options).map(|_| b.range(1, 9)).collect())
        .collect();
    let w_max = *weights.iter().flatten().max().unwrap();
    // Activators need a cardinality row that is not itself an exact-one row.
    let open_count = (options >= 3 && b.coin(0.5)).then(|| b.range(2, options as i64 - 1) as usize);
    let mut order: Vec<usize> = (0..options).collect();
    order.shuffle(&mut b.rng);
    let open: Vec<usize> = match open_count {
        Some(p) => order[..p].to_vec(),
        None => (0..options).collect(),
    };
    let picks: Vec<usize> = (0..groups).map(|_| *open.choose(&mut b.rng).unwrap()).collect();
    let z_val = (0..groups).map(|g| weights[g][picks[g]]).max().unwrap();
    let xs: Vec<Vec<VarId>> = (0..groups)
        .map(|g| (0..options).map(|j| b.bin(format!("x_{g}_{j}"), picks[g] == j)).collect())
        .collect();
    let z = b.cont("z".into(), 0.0, w_max as f64, z_val as f64);
    let ys: Option<Vec<VarId>> = open_count.map(|_| {
        (0..options)
            .map(|j| b.bin(format!("open_{j}"), open.contains(&j)))
            .collect()
    });
    let mut evidence = Vec::new();
    for g in 0..groups {
        evidence.push(b.row(LinearRow::eq(format!("grp_{g}"), ones(&xs[g]), 1.0)));
        for j in 0..options {
            evidence.push(b.row(LinearRow::le(
                format!("link_{g}_{j}"),
                vec![(xs[g][j], weights[g][j] as f64), (z, -1.0)],
                0.0,
            )));
            if let Some(ys) = &ys {
                evidence.push(b.row(LinearRow::le(
                    format!("act_{g}_{j}"),
                    vec![(xs[g][j], 1.0), (ys[j], -1.0)],
                    0.0,
                )));
            }
        }
    }
    if let (Some(ys), Some(p)) = (&ys, open_count) {
        evidence.push(b.row(LinearRow::eq("open", ones(ys), p as f64)));
    }
    let mut scope = xs.concat();
    scope.push(z);
    scope.extend(ys.iter().flatten());
    Ok(exact(
        RecordParams::BottleneckExactOne(BottleneckParams {
            weights: weights
                .iter()
                .map(|g| g.iter().map(|&w| Some(w as f64)).collect())
                .collect(),
            bottleneck: z,
            activators: ys.map(|ys| ActivatorParams {
                selector_activator: (0..groups).map(|_| ys.iter().map(|&y| Some(y)).collect()).collect(),
                activators: ys,
                open_count: open_count.unwrap() as f64,
            }),
            groups: xs,
        }),
        scope,
        evidence,
    ))
}

pub(super) fn rostering(
    b: &mut Builder,
    nurses: usize,
    days: usize,
    shifts: usize,
) -> Result<SemanticRecord, SynthError> {
    need(nurses >= 2 && days >= 2 && shifts >= 2, "RosteringWindow needs 2 nurses, 2 days, 2 shifts")?;
    // plan[n][d] = shift worked, if any
    let plan: Vec<Vec<Option<usize>>> = (0..nurses)
        .map(|_| {
            (0..days)
                .map(|_| (!b.coin(0.3)).then(|| b.range(0, shifts as i64 - 1) as usize))
                .collect()
        })
        .collect();
    let x: Vec<Vec<Vec<VarId>>> = (0..nurses)
        .map(|n| {
            (0..days)
                .map(|d| {
                    (0..shifts)
                        .map(|s| b.bin(format!("x_{n}_{d}_{s}"), plan[n][d] == Some(s)))
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut roles: Vec<(RowId, RosterRole)> = Vec::new();
    let mut rdays = Vec::with_capacity(days);
    for d in 0..days {
        for (n, xn) in x.iter().enumerate() {
            roles.push((b.row(LinearRow::le(format!("sos_{n}_{d}"), ones(&xn[d]), 1.0)), RosterRole::Sos));
        }
        let mut coverage = Vec::with_capacity(shifts);
        for s in 0..shifts {
            let vars: Vec<VarId> = x.iter().map(|xn| xn[d][s]).collect();
            let req = plan.iter().filter(|p| p[d] == Some(s)).count() as f64;
            roles.push((b.row(LinearRow::eq(format!("dem_{d}_{s}"), ones(&vars), req)), RosterRole::Dem));
            coverage.push(CoverageRow { vars, requirement: req });
        }
        rdays.push(RosterDay {
            nurses: x.iter().map(|xn| xn[d].clone()).collect(),
            coverage,
        });
    }
    for (n, xn) in x.iter().enumerate() {
        let all: Vec<VarId> = xn.concat();
        let worked = plan[n].iter().filter(|p| p.is_some()).count() as i64;
        let max_work = (worked.max(2) + b.range(0, 1)).min((days * shifts) as i64 - 1);
        roles.push((b.row(LinearRow::le(format!("hub_{n}"), ones(&all), max_work as f64)), RosterRole::Hub));
        if worked > 0 {
            roles.push((b.row(LinearRow::ge(format!("hlb_{n}"), ones(&all), 1.0)), RosterRole::Hlb));
        }
        if days >= 3 {
            for d in 0..days - 1 {
                if plan[n][d].is_some() || plan[n][d + 1].is_some() {
                    let vars: Vec<VarId> = xn[d..=d + 1].concat();
                    roles.push((b.row(LinearRow::ge(format!("rest_{n}_{d}"), ones(&vars), 1.0)), RosterRole::RestWind));
                }
            }
        }
    }
    let scope = x.iter().map(|xn| xn.concat()).collect::<Vec<_>>().concat();
    let evidence = roles.iter().map(|r| r.0).collect();
    Ok(exact(
        RecordParams::RosteringWindow(RosteringParams { days: rdays, roles }),
        scope,
        evidence,
    ))
}

pub(super) fn unit_commitment(b: &mut Builder, gens: usize, periods: usize) -> Result<SemanticRecord, SynthError> {
    need(gens >= 1 && periods >= 2, "UnitCommitmentRamp needs 1 generator and 2 periods")?;
    let with_reserve = b.coin(0.5);
    struct Plan {
        p_min: i64,
        p_max: i64,
        init: bool,
        on: Vec<bool>,
        p: Vec<i64>,
        r: Vec<i64>,
        ru: i64,
        su: i64,
    }
    let mut plans = Vec::with_capacity(gens);
    for g in 0..gens {
        let p_min = b.range(1, 3);
        let p_max = p_min + b.range(3, 6);
        let init = b.coin(0.5);
        let on: Vec<bool> = (0..periods).map(|_| g == 0 || b.coin(0.6)).collect();
        let p: Vec<i64> = on.iter().map(|&u| if u { b.range(p_min, p_max - 1) } else { 0 }).collect();
        let r: Vec<i64> = (0..periods)
            .map(|t| match (with_reserve, on[t]) {
                (true, true) => b.range(if g == 0 { 1 } else { 0 }, p_max - p[t]),
                _ => 0,
            })
            .collect();
        let mut ru_need = 1;
        let mut su_need = p_min;
        for t in 1..periods {
            match (on[t - 1], on[t]) {
                (true, true) => ru_need = ru_need.max((p[t] - p[t - 1]).abs()),
                (false, true) => su_need = su_need.max(p[t]),
                (true, false) => su_need = su_need.max(p[t - 1]),
                (false, false) => {}
            }
        }
        // Ramp limits stay below Pmax so the ramp rows never read as big-M.
        let ru = (ru_need + b.range(0, 1)).min(p_max - 1);
        let su = (su_need + b.range(0, 1)).min(p_max - 1);
        plans.push(Plan {
            p_min,
            p_max,
            init,
            on,
            p,
            r,
            ru,
            su,
        });
    }

    let mut gens_out = Vec::with_capacity(gens);
    for (g, pl) in plans.iter().enumerate() {
        let mut u = Vec::new();
        let mut v = Vec::new();
        let mut w = Vec::new();
        let mut p = Vec::new();
        let mut r = Vec::new();
        for t in 0..periods {
            let prev = if t == 0 { pl.init } else { pl.on[t - 1] };
            u.push(b.bin(format!("u_{g}_{t}"), pl.on[t]));
            v.push(b.bin(format!("v_{g}_{t}"), pl.on[t] && !prev));
            w.push(b.bin(format!("w_{g}_{t}"), !pl.on[t] && prev));
            p.push(b.cont(format!("p_{g}_{t}"), 0.0, pl.p_max as f64, pl.p[t] as f64));
            if with_reserve {
                r.push(Some(b.cont(format!("r_{g}_{t}"), 0.0, pl.p_max as f64, pl.r[t] as f64)));
            } else {
                r.push(None);
            }
        }
        gens_out.push(UcGenerator {
            status: u,
            startup: v,
            shutdown: w,
            power: p,
            reserve: r,
            p_min: pl.p_min as f64,
            p_max: pl.p_max as f64,
            ramp_up: pl.ru as f64,
            startup_ramp: pl.su as f64,
            initial_status: if pl.init { 1.0 } else { 0.0 },
        });
    }

    let mut roles = Vec::new();
    for (g, (gen, pl)) in gens_out.iter().zip(&plans).enumerate() {
        for t in 0..periods {
            let (u, v, w, p) = (gen.status[t], gen.startup[t], gen.shutdown[t], gen.power[t]);
            let logic = if t == 0 {
                LinearRow::eq(
                    format!("logic_{g}_{t}"),
                    vec![(u, 1.0), (v, -1.0), (w, 1.0)],
                    gen.initial_status,
                )
            } else {
                LinearRow::eq(
                    format!("logic_{g}_{t}"),
                    vec![(u, 1.0), (gen.status[t - 1], -1.0), (v, -1.0), (w, 1.0)],
                    0.0,
                )
            };
            roles.push((b.row(logic), UcRole::Logic));
            roles.push((
                b.row(LinearRow::le(format!("lmin_{g}_{t}"), vec![(u, gen.p_min), (p, -1.0)], 0.0)),
                UcRole::Link,
            ));
            let mut terms = vec![(p, 1.0)];
            terms.extend(gen.reserve[t].map(|r| (r, 1.0)));
            terms.push((u, -gen.p_max));
            roles.push((b.row(LinearRow::le(format!("lmax_{g}_{t}"), terms, 0.0)), UcRole::Link));
            if t >= 1 {
                let (ru, su) = (pl.ru as f64, pl.su as f64);
                let up = vec![(p, 1.0), (gen.power[t - 1], -1.0), (gen.status[t - 1], -ru), (v, -su)];
                roles.push((b.row(LinearRow::le(format!("rup_{g}_{t}"), up, 0.0)), UcRole::Ramp));
                let down = vec![(gen.power[t - 1], 1.0), (p, -1.0), (u, -ru), (w, -su)];
                roles.push((b.row(LinearRow::le(format!("rdn_{g}_{t}"), down, 0.0)), UcRole::Ramp));
            }
        }
    }
    let mut demand = Vec::with_capacity(periods);
    let mut reserve = Vec::new();
    for t in 0..periods {
        let total: i64 = plans.iter().map(|pl| pl.p[t]).sum();
        let d = (total - b.range(0, 2)).max(1);
        let vars: Vec<VarId> = gens_out.iter().map(|g| g.power[t]).collect();
        roles.push((b.row(LinearRow::ge(format!("dem_{t}"), ones(&vars), d as f64)), UcRole::Demand));
        demand.push(d as f64);
        if with_reserve {
            let total: i64 = plans.iter().map(|pl| pl.r[t]).sum();
            let q = (total - b.range(0, 1)).max(1);
            let vars: Vec<VarId> = gens_out.iter().map(|g| g.reserve[t].unwrap()).collect();
            roles.push((b.row(LinearRow::ge(format!("res_{t}"), ones(&vars), q as f64)), UcRole::Reserve));
            reserve.push(q as f64);
        }
    }
    let mut scope = Vec::new();
    for g in &gens_out {
        scope.extend(&g.status);
        scope.extend(&g.startup);
        scope.extend(&g.shutdown);
        scope.extend(&g.power);
        scope.extend(g.reserve.iter().flatten());
    }
    let evidence = roles.iter().map(|r| r.0).collect();
    Ok(exact(
        RecordParams::UnitCommitmentRamp(UnitCommitmentParams {
            generators: gens_out,
            demand,
            reserve,
            roles,
        }),
        scope,
        evidence,
    ))
}

pub(super) fn disjunction(b: &mut Builder, branches: usize, dims: usize) -> Result<SemanticRecord, SynthError> {
    need(
        (2..=crate::detect::MAX_BRANCHES).contains(&branches) && dims >= 2,
        "DisjPolyhedral needs 2..=6 branches over 2 variables",
    )?;
    let upper = b.range(6, 10);
    let point: Vec<i64> = (0..dims).map(|_| b.range(0, upper)).collect();
    let active = b.range(0, branches as i64 - 1) as usize;
    // Rows `a.x <= rhs` per branch; every row must cut the box.
    let mut pieces: Vec<Vec<(Vec<i64>, i64)>> = Vec::with_capacity(branches);
    for k in 0..branches {
        let count = b.range(1, 2);
        let mut rows = Vec::new();
        while rows.len() < count as usize {
            let a: Vec<i64> = (0..dims)
                .map(|_| {
                    let m = b.range(1, 3);
                    if b.coin(0.5) {
                        m
                    } else {
                        -m
                    }
                })
                .collect();
            let max_act: i64 = a.iter().map(|&c| (c * upper).max(0)).sum();
            let min_act: i64 = a.iter().map(|&c| (c * upper).min(0)).sum();
            let at: i64 = a.iter().zip(&point).map(|(c, x)| c * x).sum();
            let rhs = if k == active {
                if at >= max_act {
                    continue;
                }
                b.range(at, max_act - 1)
            } else {
                b.range(min_act, max_act - 1)
            };
            rows.push((a, rhs));
        }
        pieces.push(rows);
    }
    let xs: Vec<VarId> = (0..dims)
        .map(|i| b.int(format!("x_{i}"), 0.0, upper as f64, point[i] as f64))
        .collect();
    let max_act = |a: &[i64]| a.iter().map(|&c| (c * upper).max(0)).sum::<i64>();
    let variant = if branches == 2 {
        DisjVariant::BinarySelector
    } else {
        DisjVariant::ExactOneMode
    };
    let selectors: Vec<VarId> = match variant {
        DisjVariant::BinarySelector => vec![b.bin("y".into(), active == 1)],
        DisjVariant::ExactOneMode => (0..branches).map(|k| b.bin(format!("y_{k}"), k == active)).collect(),
    };
    let mut out_branches = Vec::with_capacity(branches);
    let mut evidence = Vec::new();
    for (k, rows) in pieces.iter().enumerate() {
        let (sel, active_value) = match variant {
            DisjVariant::BinarySelector => (selectors[0], k as f64),
            DisjVariant::ExactOneMode => (selectors[k], 1.0),
        };
        let mut brows = Vec::new();
        for (i, (a, rhs)) in rows.iter().enumerate() {
            let big_m = (max_act(a) - rhs + b.range(0, 3)) as f64;
            let mut terms: Vec<(VarId, f64)> = xs.iter().zip(a).map(|(&x, &c)| (x, c as f64)).collect();
            let rest = terms.clone();
            let row_rhs = if active_value > 0.5 {
                terms.push((sel, big_m));
                *rhs as f64 + big_m
            } else {
                terms.push((sel, -big_m));
                *rhs as f64
            };
            let r = b.row(LinearRow::le(format!("br_{k}_{i}"), terms, row_rhs));
            evidence.push(r);
            brows.push(BranchRow {
                row: r,
                terms: rest,
                rhs: *rhs as f64,
            });
        }
        out_branches.push(DisjBranch {
            selector: sel,
            active_value,
            rows: brows,
        });
    }
    if variant == DisjVariant::ExactOneMode {
        evidence.push(b.row(LinearRow::eq("choose", ones(&selectors), 1.0)));
    }
    let mut scope = selectors.clone();
    scope.extend(&xs);
    Ok(exact(
        RecordParams::DisjPolyhedral(DisjPolyhedralParams {
            variant,
            branches: out_branches,
            touched: xs,
        }),
        scope,
        evidence,
    ))
}
