//! Constructive disjunction over big-M guarded branches.

use crate::detect::{DisjPolyhedralParams, DisjVariant};
use crate::model::{DomainBox, LinearRow, VarId};
use crate::outcome::PropagationOutcome;

use super::{all_binary, all_present, propagate_rows_fixpoint, PropagatorConfig};

/// Selector settings that put the box into branch `i`.
fn branch_settings(p: &DisjPolyhedralParams<VarId, usize>, i: usize) -> Vec<(VarId, f64)> {
    match p.variant {
        DisjVariant::ExactOneMode => p
            .branches
            .iter()
            .enumerate()
            .map(|(k, b)| (b.selector, if k == i { 1.0 } else { 0.0 }))
            .collect(),
        DisjVariant::BinarySelector => vec![(p.branches[i].selector, p.branches[i].active_value)],
    }
}

fn compatible(dom: &DomainBox, settings: &[(VarId, f64)]) -> bool {
    settings
        .iter()
        .all(|&(y, v)| dom.lb(y) <= v + 0.5 && dom.ub(y) >= v - 0.5)
}

/// Branch-local box, or `None` when the branch is impossible.
fn branch_box(
    p: &DisjPolyhedralParams<VarId, usize>,
    i: usize,
    dom: &DomainBox,
    config: &PropagatorConfig,
) -> Option<DomainBox> {
    let settings = branch_settings(p, i);
    if !compatible(dom, &settings) {
        return None;
    }
    let mut local = dom.clone();
    for &(y, v) in &settings {
        local.restrict(y, v, v);
    }
    let rows: Vec<LinearRow> = p.branches[i]
        .rows
        .iter()
        .map(|r| LinearRow::le(format!("branch{i}"), r.terms.clone(), r.rhs))
        .collect();
    propagate_rows_fixpoint(rows.iter(), &mut local, &config.tolerances, config.rounds());
    (!local.is_empty()).then_some(local)
}

pub fn propagate_disj_polyhedral(
    p: &DisjPolyhedralParams<VarId, usize>,
    dom: &mut DomainBox,
    config: &PropagatorConfig,
) -> PropagationOutcome {
    let tol = &config.tolerances;
    let mut out = PropagationOutcome::call();
    let selectors: Vec<VarId> = p.branches.iter().map(|b| b.selector).collect();
    let row_vars = p.branches.iter().flat_map(|b| b.rows.iter().flat_map(|r| r.terms.iter().map(|t| t.0)));
    if dom.is_empty()
        || p.branches.is_empty()
        || !all_binary(dom, selectors.iter().copied())
        || !all_present(dom, row_vars)
        || !all_present(dom, p.touched.iter().copied())
    {
        return out;
    }
    let locals: Vec<Option<DomainBox>> = (0..p.branches.len()).map(|i| branch_box(p, i, dom, config)).collect();
    let viable: Vec<usize> = (0..locals.len()).filter(|&i| locals[i].is_some()).collect();
    if viable.is_empty() {
        dom.mark_empty();
        out.set_cutoff();
        return out;
    }

    // Remove the selector values of impossible branches.
    for (i, local) in locals.iter().enumerate() {
        if local.is_some() {
            continue;
        }
        let b = &p.branches[i];
        match p.variant {
            DisjVariant::ExactOneMode => {
                dom.tighten_ub(b.selector, 0.0, tol, &mut out);
            }
            DisjVariant::BinarySelector => {
                let other = 1.0 - b.active_value;
                dom.fix(b.selector, other, tol, &mut out);
            }
        }
        if dom.is_empty() {
            return out;
        }
    }
    if viable.len() == 1 {
        for (y, v) in branch_settings(p, viable[0]) {
            dom.fix(y, v, tol, &mut out);
        }
        if dom.is_empty() {
            return out;
        }
    }

    // Envelope over the variables constrained in every viable branch.
    for &x in &p.touched {
        let everywhere = viable
            .iter()
            .all(|&i| p.branches[i].rows.iter().any(|r| r.terms.iter().any(|t| t.0 == x)));
        if !everywhere {
            continue;
        }
        let lb = viable
            .iter()
            .map(|&i| locals[i].as_ref().unwrap().lb(x))
            .fold(f64::INFINITY, f64::min);
        let ub = viable
            .iter()
            .map(|&i| locals[i].as_ref().unwrap().ub(x))
            .fold(f64::NEG_INFINITY, f64::max);
        dom.tighten_lb(x, lb, tol, &mut out);
        dom.tighten_ub(x, ub, tol, &mut out);
        if dom.is_empty() {
            return out;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::{BranchRow, DisjBranch};

    // x = 0, y = 1. Branch y=0: x <= 2. Branch y=1: 5 <= x <= 7.
    fn params() -> DisjPolyhedralParams<VarId, usize> {
        DisjPolyhedralParams {
            variant: DisjVariant::BinarySelector,
            branches: vec![
                DisjBranch {
                    selector: 1,
                    active_value: 0.0,
                    rows: vec![BranchRow {
                        row: 0,
                        terms: vec![(0, 1.0)],
                        rhs: 2.0,
                    }],
                },
                DisjBranch {
                    selector: 1,
                    active_value: 1.0,
                    rows: vec![
                        BranchRow {
                            row: 1,
                            terms: vec![(0, -1.0)],
                            rhs: -5.0,
                        },
                        BranchRow {
                            row: 2,
                            terms: vec![(0, 1.0)],
                            rhs: 7.0,
                        },
                    ],
                },
            ],
            touched: vec![0],
        }
    }

    fn dom(x_ub: f64) -> DomainBox {
        DomainBox::from_bounds(vec![0.0, 0.0], vec![x_ub, 1.0], vec![true, true])
    }

    #[test]
    fn envelope_takes_the_widest_branch() {
        let mut d = dom(10.0);
        let out = propagate_disj_polyhedral(&params(), &mut d, &PropagatorConfig::default());
        assert_eq!(d.ub(0), 7.0);
        assert_eq!(d.lb(0), 0.0);
        assert_eq!((d.lb(1), d.ub(1)), (0.0, 1.0));
        assert_eq!(out.bound_changes.len(), 1);
    }

    #[test]
    fn impossible_branch_fixes_the_selector() {
        let mut d = dom(4.0);
        propagate_disj_polyhedral(&params(), &mut d, &PropagatorConfig::default());
        assert_eq!((d.lb(1), d.ub(1)), (0.0, 0.0));
        assert_eq!(d.ub(0), 2.0);
    }

    #[test]
    fn no_viable_branch_cuts_off() {
        let mut d = DomainBox::from_bounds(vec![3.0, 0.0], vec![4.0, 1.0], vec![true, true]);
        let out = propagate_disj_polyhedral(&params(), &mut d, &PropagatorConfig::default());
        assert!(out.cutoff);
        assert!(d.is_empty());
    }

    #[test]
    fn exact_one_mode_zeroes_dead_selectors() {
        // x = 0; selectors 1, 2, 3 with branches x <= 1, 3 <= x <= 4, x >= 8.
        let row = |terms: Vec<(VarId, f64)>, rhs| BranchRow { row: 0, terms, rhs };
        let p = DisjPolyhedralParams {
            variant: DisjVariant::ExactOneMode,
            branches: vec![
                DisjBranch {
                    selector: 1,
                    active_value: 1.0,
                    rows: vec![row(vec![(0, 1.0)], 1.0)],
                },
                DisjBranch {
                    selector: 2,
                    active_value: 1.0,
                    rows: vec![row(vec![(0, -1.0)], -3.0), row(vec![(0, 1.0)], 4.0)],
                },
                DisjBranch {
                    selector: 3,
                    active_value: 1.0,
                    rows: vec![row(vec![(0, -1.0)], -8.0)],
                },
            ],
            touched: vec![0],
        };
        let mut d = DomainBox::from_bounds(vec![0.0; 4], vec![6.0, 1.0, 1.0, 1.0], vec![true; 4]);
        propagate_disj_polyhedral(&p, &mut d, &PropagatorConfig::default());
        assert_eq!(d.ub(3), 0.0);
        assert_eq!(d.ub(0), 4.0);
        assert_eq!(d.ub(1), 1.0);
    }
}
