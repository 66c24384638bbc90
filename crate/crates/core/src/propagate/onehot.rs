//! Budgeted one-hot groups: `sum_g sum_k c_gk y_gk + r <= B` with exactly one
//! option per group.

use crate::detect::OneHotResourceParams;
use crate::model::{DomainBox, Tolerances, VarId};
use crate::outcome::PropagationOutcome;

use super::{all_binary, all_present, exact_one_closure};

fn external_min(p: &OneHotResourceParams<VarId>, dom: &DomainBox) -> f64 {
    let mut current = 0.0;
    for &(v, a) in &p.external {
        current += if a > 0.0 { a * dom.lb(v) } else { a * dom.ub(v) };
    }
    if current.is_finite() {
        current.max(p.external_min)
    } else {
        p.external_min
    }
}

pub fn propagate_one_hot_resource(
    p: &OneHotResourceParams<VarId>,
    dom: &mut DomainBox,
    tol: &Tolerances,
) -> PropagationOutcome {
    let mut out = PropagationOutcome::call();
    let shape_ok = p.groups.len() == p.costs.len() && p.groups.iter().zip(&p.costs).all(|(g, c)| g.len() == c.len());
    if !shape_ok
        || !all_binary(dom, p.groups.iter().flatten().copied())
        || !all_present(dom, p.external.iter().map(|e| e.0))
        || dom.is_empty()
    {
        return out;
    }
    loop {
        let mut changed = false;
        for g in &p.groups {
            changed |= exact_one_closure(dom, g, tol, &mut out);
            if dom.is_empty() {
                return out;
            }
        }
        let mins: Vec<f64> = p
            .groups
            .iter()
            .zip(&p.costs)
            .map(|(g, c)| {
                g.iter()
                    .zip(c)
                    .filter(|(&v, _)| dom.is_live(v))
                    .map(|(_, &cost)| cost)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total = external_min(p, dom) + mins.iter().sum::<f64>();
        if total > p.budget + tol.feasibility {
            dom.mark_empty();
            out.set_cutoff();
            return out;
        }
        for (gi, (g, c)) in p.groups.iter().zip(&p.costs).enumerate() {
            let limit = p.budget - (total - mins[gi]);
            for (&v, &cost) in g.iter().zip(c) {
                if dom.is_live(v) && cost > limit + tol.feasibility {
                    changed |= dom.tighten_ub(v, 0.0, tol, &mut out);
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

    fn params(costs: Vec<Vec<f64>>, budget: f64) -> (OneHotResourceParams<VarId>, DomainBox) {
        let mut next = 0;
        let groups: Vec<Vec<VarId>> = costs
            .iter()
            .map(|c| {
                c.iter()
                    .map(|_| {
                        next += 1;
                        next - 1
                    })
                    .collect()
            })
            .collect();
        let dom = DomainBox::from_bounds(vec![0.0; next], vec![1.0; next], vec![true; next]);
        (
            OneHotResourceParams {
                groups,
                costs,
                budget,
                external: vec![],
                external_min: 0.0,
            },
            dom,
        )
    }

    #[test]
    fn cheapest_alternatives_eliminate_expensive_options() {
        let (p, mut dom) = params(vec![vec![3.0, 5.0], vec![4.0, 7.0]], 8.0);
        let out = propagate_one_hot_resource(&p, &mut dom, &Tolerances::default());
        assert!(!out.cutoff);
        assert_eq!(dom.lower, vec![1.0, 0.0, 1.0, 0.0]);
        assert_eq!(dom.upper, vec![1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn slack_budget_changes_nothing() {
        let (p, mut dom) = params(vec![vec![3.0, 5.0], vec![4.0, 7.0]], 12.0);
        let out = propagate_one_hot_resource(&p, &mut dom, &Tolerances::default());
        assert!(out.bound_changes.is_empty());
        assert_eq!(out.calls, 1);
    }

    #[test]
    fn over_budget_minimum_cuts_off() {
        let (p, mut dom) = params(vec![vec![3.0], vec![6.0]], 8.0);
        let out = propagate_one_hot_resource(&p, &mut dom, &Tolerances::default());
        assert!(out.cutoff);
        assert_eq!(out.cutoffs, 1);
    }

    #[test]
    fn external_minimum_counts_against_the_budget() {
        let (mut p, _) = params(vec![vec![3.0, 5.0], vec![4.0, 7.0]], 12.0);
        p.external = vec![(4, 1.0)];
        p.external_min = 0.0;
        let mut dom = DomainBox::from_bounds(
            vec![0.0, 0.0, 0.0, 0.0, 4.0],
            vec![1.0, 1.0, 1.0, 1.0, 9.0],
            vec![true, true, true, true, false],
        );
        propagate_one_hot_resource(&p, &mut dom, &Tolerances::default());
        assert_eq!(dom.upper[..4], [1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn non_binary_group_is_left_alone() {
        let (p, mut dom) = params(vec![vec![3.0, 5.0], vec![4.0, 7.0]], 8.0);
        dom.upper[1] = 3.0;
        let before = dom.clone();
        let out = propagate_one_hot_resource(&p, &mut dom, &Tolerances::default());
        assert_eq!(dom, before);
        assert!(!out.changed());
    }
}
