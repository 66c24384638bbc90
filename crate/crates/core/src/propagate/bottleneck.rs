//! Exact-one selector groups bounded by a shared bottleneck `z >= w_ij x_ij`.

use crate::detect::{ActivatorParams, BottleneckParams};
use crate::model::{DomainBox, Tolerances, VarId};
use crate::outcome::PropagationOutcome;

use super::{all_binary, all_present, exact_one_closure, PropagatorConfig};

fn shape_ok(p: &BottleneckParams<VarId>, dom: &DomainBox) -> bool {
    if p.groups.len() != p.weights.len() || p.groups.iter().zip(&p.weights).any(|(g, w)| g.len() != w.len()) {
        return false;
    }
    if !all_binary(dom, p.groups.iter().flatten().copied()) || !all_present(dom, [p.bottleneck]) {
        return false;
    }
    match &p.activators {
        None => true,
        Some(a) => {
            a.selector_activator.len() == p.groups.len()
                && a
                    .selector_activator
                    .iter()
                    .zip(&p.groups)
                    .all(|(s, g)| s.len() == g.len())
                && all_binary(dom, a.activators.iter().copied())
                && a.selector_activator.iter().flatten().flatten().all(|y| a.activators.contains(y))
        }
    }
}

/// `max_i min{w_ij : x_ij live}`; a group with a live unlinked selector
/// gives no bound.
fn max_min(p: &BottleneckParams<VarId>, dom: &DomainBox) -> Option<f64> {
    let mut best: Option<f64> = None;
    for (g, w) in p.groups.iter().zip(&p.weights) {
        let mut lo = f64::INFINITY;
        for (&x, &wij) in g.iter().zip(w) {
            if !dom.is_live(x) {
                continue;
            }
            match wij {
                Some(v) => lo = lo.min(v),
                None => lo = f64::NEG_INFINITY,
            }
        }
        if lo.is_finite() {
            best = Some(best.map_or(lo, |b: f64| b.max(lo)));
        }
    }
    best
}

fn activator_rules(
    p: &BottleneckParams<VarId>,
    a: &ActivatorParams<VarId>,
    dom: &mut DomainBox,
    tol: &Tolerances,
    out: &mut PropagationOutcome,
) -> bool {
    let mut changed = false;
    for (g, links) in p.groups.iter().zip(&a.selector_activator) {
        for (&x, y) in g.iter().zip(links) {
            let Some(y) = *y else { continue };
            if dom.is_fixed_one(x) {
                changed |= dom.tighten_lb(y, 1.0, tol, out);
            }
            if !dom.is_live(y) {
                changed |= dom.tighten_ub(x, 0.0, tol, out);
            }
        }
    }
    if dom.is_empty() {
        return changed;
    }
    // Residual counting on sum(y) = p.
    let ones = a.activators.iter().filter(|&&y| dom.is_fixed_one(y)).count() as f64;
    let live = a.activators.iter().filter(|&&y| dom.is_live(y)).count() as f64;
    let target = a.open_count;
    if ones > target + tol.feasibility || live < target - tol.feasibility {
        dom.mark_empty();
        out.set_cutoff();
        return changed;
    }
    if ones >= target - tol.feasibility {
        for &y in &a.activators {
            if !dom.is_fixed_one(y) {
                changed |= dom.tighten_ub(y, 0.0, tol, out);
            }
        }
    } else if live <= target + tol.feasibility {
        for &y in &a.activators {
            if dom.is_live(y) {
                changed |= dom.tighten_lb(y, 1.0, tol, out);
            }
        }
    }
    changed
}

/// Greedy packing of groups whose cheap activator sets (live selectors with
/// weight below `radius`) are pairwise disjoint. Each packed group needs its
/// own open activator, so a packing larger than `p` rules out `z < radius`.
/// Groups that can pick a cheap selector without an activator are skipped.
fn packing_exceeds(p: &BottleneckParams<VarId>, a: &ActivatorParams<VarId>, dom: &DomainBox, radius: f64) -> bool {
    let mut used: Vec<VarId> = Vec::new();
    let mut packed = 0usize;
    for (gi, g) in p.groups.iter().enumerate() {
        let mut hood: Vec<VarId> = Vec::new();
        let mut free = false;
        for (j, &x) in g.iter().enumerate() {
            if !dom.is_live(x) {
                continue;
            }
            let cheap = p.weights[gi][j].is_none_or(|w| w < radius);
            if !cheap {
                continue;
            }
            match a.selector_activator[gi][j] {
                Some(y) if dom.is_live(y) => hood.push(y),
                Some(_) => {}
                None => free = true,
            }
        }
        if free || hood.is_empty() {
            continue;
        }
        if hood.iter().all(|y| !used.contains(y)) {
            used.extend(hood);
            packed += 1;
        }
    }
    packed as f64 > a.open_count + 0.5
}

/// Largest candidate weight at which the greedy packing still exceeds `p`,
/// by binary search over the sorted distinct weights.
fn radius_bound(p: &BottleneckParams<VarId>, a: &ActivatorParams<VarId>, dom: &DomainBox) -> Option<f64> {
    let mut cand: Vec<f64> = p.weights.iter().flatten().flatten().copied().collect();
    cand.sort_by(f64::total_cmp);
    cand.dedup();
    let (mut lo, mut hi) = (0usize, cand.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if packing_exceeds(p, a, dom, cand[mid]) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    // Each accepted radius is checked directly, so the search only affects
    // how strong the bound is.
    (lo > 0 && packing_exceeds(p, a, dom, cand[lo - 1])).then(|| cand[lo - 1])
}

pub fn propagate_bottleneck_exact_one(
    p: &BottleneckParams<VarId>,
    dom: &mut DomainBox,
    config: &PropagatorConfig,
) -> PropagationOutcome {
    let tol = &config.tolerances;
    let mut out = PropagationOutcome::call();
    if dom.is_empty() || !shape_ok(p, dom) {
        return out;
    }
    let z = p.bottleneck;
    loop {
        let mut changed = false;
        for g in &p.groups {
            changed |= exact_one_closure(dom, g, tol, &mut out);
            if dom.is_empty() {
                return out;
            }
        }
        if let Some(a) = &p.activators {
            changed |= activator_rules(p, a, dom, tol, &mut out);
            if dom.is_empty() {
                return out;
            }
        }
        if let Some(lb) = max_min(p, dom) {
            changed |= dom.tighten_lb(z, lb, tol, &mut out);
        }
        if config.radius_rule && !dom.is_empty() {
            if let Some(a) = &p.activators {
                if let Some(r) = radius_bound(p, a, dom) {
                    changed |= dom.tighten_lb(z, r, tol, &mut out);
                }
            }
        }
        if dom.is_empty() {
            return out;
        }
        let ub = dom.ub(z);
        for (g, w) in p.groups.iter().zip(&p.weights) {
            for (&x, &wij) in g.iter().zip(w) {
                if wij.is_some_and(|v| v > ub + tol.feasibility) && dom.is_live(x) {
                    changed |= dom.tighten_ub(x, 0.0, tol, &mut out);
                }
            }
        }
        if dom.is_empty() || !changed {
            return out;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // x00 x01 | x10 x11 | z
    fn setup(z_ub: f64) -> (BottleneckParams<VarId>, DomainBox) {
        let p = BottleneckParams {
            groups: vec![vec![0, 1], vec![2, 3]],
            weights: vec![vec![Some(2.0), Some(5.0)], vec![Some(3.0), Some(6.0)]],
            bottleneck: 4,
            activators: None,
        };
        let dom = DomainBox::from_bounds(
            vec![0.0; 5],
            vec![1.0, 1.0, 1.0, 1.0, z_ub],
            vec![true, true, true, true, false],
        );
        (p, dom)
    }

    #[test]
    fn lower_bound_is_max_of_group_minima() {
        let (p, mut dom) = setup(f64::INFINITY);
        let out = propagate_bottleneck_exact_one(&p, &mut dom, &PropagatorConfig::default());
        assert_eq!(dom.lb(4), 3.0);
        assert_eq!(out.bound_changes.len(), 1);
    }

    #[test]
    fn upper_bound_removes_heavy_selectors() {
        let (p, mut dom) = setup(4.0);
        propagate_bottleneck_exact_one(&p, &mut dom, &PropagatorConfig::default());
        assert_eq!(dom.lower[..4], [1.0, 0.0, 1.0, 0.0]);
        assert_eq!(dom.upper[..4], [1.0, 0.0, 1.0, 0.0]);
        assert_eq!(dom.lb(4), 3.0);
    }

    #[test]
    fn tight_bottleneck_is_a_no_op() {
        let p = BottleneckParams {
            groups: vec![vec![0, 1], vec![2, 3]],
            weights: vec![vec![Some(4.0), Some(4.0)], vec![Some(4.0), Some(4.0)]],
            bottleneck: 4,
            activators: None,
        };
        let mut dom = DomainBox::from_bounds(vec![0.0, 0.0, 0.0, 0.0, 4.0], vec![1.0, 1.0, 1.0, 1.0, 4.0], vec![
            true, true, true, true, false,
        ]);
        let out = propagate_bottleneck_exact_one(&p, &mut dom, &PropagatorConfig::default());
        assert!(!out.changed());
    }

    #[test]
    fn emptied_group_cuts_off() {
        let (p, mut dom) = setup(1.0);
        let out = propagate_bottleneck_exact_one(&p, &mut dom, &PropagatorConfig::default());
        assert!(out.cutoff);
    }

    fn with_activators() -> (BottleneckParams<VarId>, DomainBox) {
        // Two groups, each can use activator 5 (cheap for group 0 only) or 6.
        // x00 -> y5 (w 1), x01 -> y6 (w 4), x10 -> y5 (w 4), x11 -> y6 (w 1).
        let p = BottleneckParams {
            groups: vec![vec![0, 1], vec![2, 3]],
            weights: vec![vec![Some(1.0), Some(4.0)], vec![Some(4.0), Some(1.0)]],
            bottleneck: 4,
            activators: Some(ActivatorParams {
                activators: vec![5, 6],
                selector_activator: vec![vec![Some(5), Some(6)], vec![Some(5), Some(6)]],
                open_count: 1.0,
            }),
        };
        let mut integral = vec![true; 7];
        integral[4] = false;
        let mut upper = vec![1.0; 7];
        upper[4] = 10.0;
        (p, DomainBox::from_bounds(vec![0.0; 7], upper, integral))
    }

    #[test]
    fn radius_rule_uses_the_open_count() {
        let (p, dom0) = with_activators();
        let mut plain = dom0.clone();
        propagate_bottleneck_exact_one(&p, &mut plain, &PropagatorConfig::default());
        assert_eq!(plain.lb(4), 1.0);

        // With one activator open both groups share it, so some group pays 4.
        let mut dom = dom0;
        let config = PropagatorConfig {
            radius_rule: true,
            ..PropagatorConfig::default()
        };
        propagate_bottleneck_exact_one(&p, &mut dom, &config);
        assert_eq!(dom.lb(4), 4.0);
    }

    #[test]
    fn closed_activator_removes_its_selectors() {
        let (p, mut dom) = with_activators();
        dom.upper[5] = 0.0;
        propagate_bottleneck_exact_one(&p, &mut dom, &PropagatorConfig::default());
        assert_eq!(dom.ub(0), 0.0);
        assert_eq!(dom.ub(2), 0.0);
        assert_eq!(dom.lb(6), 1.0);
        assert_eq!(dom.lb(4), 4.0);
    }
}
