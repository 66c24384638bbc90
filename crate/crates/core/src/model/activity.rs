use serde::{Deserialize, Serialize};

use super::{DomainBox, LinearRow, ModelError, Tolerances};
use crate::outcome::PropagationOutcome;

/// Interval image of a row's linear form over a box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowActivity {
    #[serde(with = "crate::ext_real")]
    pub min_activity: f64,
    #[serde(with = "crate::ext_real")]
    pub max_activity: f64,
}

#[inline]
fn min_contribution(coef: f64, lb: f64, ub: f64) -> f64 {
    if coef > 0.0 {
        coef * lb
    } else {
        coef * ub
    }
}

#[inline]
fn max_contribution(coef: f64, lb: f64, ub: f64) -> f64 {
    if coef > 0.0 {
        coef * ub
    } else {
        coef * lb
    }
}

pub fn compute_activity(row: &LinearRow, dom: &DomainBox) -> RowActivity {
    let tracker = ActivityTracker::new(row, dom);
    RowActivity {
        min_activity: tracker.min_activity(),
        max_activity: tracker.max_activity(),
    }
}

/// Activity sums kept as a finite part plus a count of infinite contributions,
/// so a residual never evaluates `inf - inf`.
struct ActivityTracker {
    min_finite: f64,
    min_inf: usize,
    max_finite: f64,
    max_inf: usize,
}

impl ActivityTracker {
    fn new(row: &LinearRow, dom: &DomainBox) -> Self {
        let mut t = ActivityTracker {
            min_finite: 0.0,
            min_inf: 0,
            max_finite: 0.0,
            max_inf: 0,
        };
        for &(v, a) in &row.terms {
            let lo = min_contribution(a, dom.lb(v), dom.ub(v));
            let hi = max_contribution(a, dom.lb(v), dom.ub(v));
            if lo.is_finite() {
                t.min_finite += lo;
            } else {
                t.min_inf += 1;
            }
            if hi.is_finite() {
                t.max_finite += hi;
            } else {
                t.max_inf += 1;
            }
        }
        t
    }

    fn min_activity(&self) -> f64 {
        if self.min_inf > 0 {
            f64::NEG_INFINITY
        } else {
            self.min_finite
        }
    }

    fn max_activity(&self) -> f64 {
        if self.max_inf > 0 {
            f64::INFINITY
        } else {
            self.max_finite
        }
    }

    fn min_residual(&self, contribution: f64) -> f64 {
        if contribution.is_finite() {
            if self.min_inf == 0 {
                self.min_finite - contribution
            } else {
                f64::NEG_INFINITY
            }
        } else if self.min_inf == 1 {
            self.min_finite
        } else {
            f64::NEG_INFINITY
        }
    }

    fn max_residual(&self, contribution: f64) -> f64 {
        if contribution.is_finite() {
            if self.max_inf == 0 {
                self.max_finite - contribution
            } else {
                f64::INFINITY
            }
        } else if self.max_inf == 1 {
            self.max_finite
        } else {
            f64::INFINITY
        }
    }
}

/// Activity of the row with term `skip` removed, as `(minact_{-j}, maxact_{-j})`.
pub fn residual_activity(row: &LinearRow, dom: &DomainBox, skip: usize) -> RowActivity {
    let mut min_activity = 0.0;
    let mut max_activity = 0.0;
    for (k, &(v, a)) in row.terms.iter().enumerate() {
        if k != skip {
            min_activity += min_contribution(a, dom.lb(v), dom.ub(v));
            max_activity += max_contribution(a, dom.lb(v), dom.ub(v));
        }
    }
    RowActivity {
        min_activity,
        max_activity,
    }
}

/// Residual-activity tightening of every variable in `row`.
///
/// For a term with `a_j > 0`: `x_j <= (rhs - minact_{-j}) / a_j` and
/// `x_j >= (lhs - maxact_{-j}) / a_j`; the roles swap for `a_j < 0`. Integer
/// bounds are rounded inward. A row whose activity range misses `[lhs, rhs]`
/// empties the box and reports a cutoff.
pub fn tighten_row(row: &LinearRow, dom: &mut DomainBox, tol: &Tolerances) -> PropagationOutcome {
    let mut out = PropagationOutcome::call();
    if dom.is_empty() {
        out.set_cutoff();
        return out;
    }
    let tracker = ActivityTracker::new(row, dom);
    if tracker.min_activity() > row.rhs + tol.feasibility || tracker.max_activity() < row.lhs - tol.feasibility {
        dom.mark_empty();
        out.set_cutoff();
        return out;
    }
    for &(v, a) in &row.terms {
        if a.abs() < tol.coefficient_floor {
            continue;
        }
        // Residuals use the activities from the start of the pass; bounds
        // tightened earlier in the loop only make them weaker, never wrong.
        let lo = min_contribution(a, dom.lb(v), dom.ub(v));
        let hi = max_contribution(a, dom.lb(v), dom.ub(v));
        let min_res = tracker.min_residual(lo);
        let max_res = tracker.max_residual(hi);
        let upper_side = if row.rhs.is_finite() && min_res.is_finite() {
            Some((row.rhs - min_res) / a)
        } else {
            None
        };
        let lower_side = if row.lhs.is_finite() && max_res.is_finite() {
            Some((row.lhs - max_res) / a)
        } else {
            None
        };
        if a > 0.0 {
            if let Some(bound) = upper_side {
                dom.tighten_ub(v, bound, tol, &mut out);
            }
            if let Some(bound) = lower_side {
                dom.tighten_lb(v, bound, tol, &mut out);
            }
        } else {
            if let Some(bound) = upper_side {
                dom.tighten_lb(v, bound, tol, &mut out);
            }
            if let Some(bound) = lower_side {
                dom.tighten_ub(v, bound, tol, &mut out);
            }
        }
        if dom.is_empty() {
            out.set_cutoff();
            break;
        }
    }
    out
}

/// `X ⊆ reduced ⊆ original`: the reduced box lies inside the original one and
/// keeps every feasible point. An empty reduced box is valid exactly when there
/// are no feasible points.
pub fn is_valid_reduction(original: &DomainBox, reduced: &DomainBox, feasible_points: &[Vec<f64>]) -> Result<bool, ModelError> {
    if original.len() != reduced.len() {
        return Err(ModelError::DimensionMismatch(original.len(), reduced.len()));
    }
    if let Some(p) = feasible_points.iter().find(|p| p.len() != original.len()) {
        return Err(ModelError::DimensionMismatch(original.len(), p.len()));
    }
    if reduced.is_empty() {
        return Ok(feasible_points.is_empty());
    }
    if !reduced.is_subset_of(original)? {
        return Ok(false);
    }
    Ok(feasible_points.iter().all(|p| reduced.contains(p, 1e-9)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn int_box(bounds: &[(f64, f64)]) -> DomainBox {
        DomainBox::from_bounds(
            bounds.iter().map(|b| b.0).collect(),
            bounds.iter().map(|b| b.1).collect(),
            vec![true; bounds.len()],
        )
    }

    /// Evaluates the linear form at every corner of the box.
    fn corner_range(row: &LinearRow, dom: &DomainBox) -> (f64, f64) {
        let n = row.terms.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for mask in 0..(1u32 << n) {
            let value: f64 = row
                .terms
                .iter()
                .enumerate()
                .map(|(k, &(v, a))| a * if mask >> k & 1 == 1 { dom.ub(v) } else { dom.lb(v) })
                .sum();
            lo = lo.min(value);
            hi = hi.max(value);
        }
        if n == 0 {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }

    #[test]
    fn activity_examples() {
        let dom = int_box(&[(0.0, 10.0), (2.0, 4.0)]);
        let row = LinearRow::le("r", vec![(0, 1.0), (1, 1.0)], 5.0);
        let act = compute_activity(&row, &dom);
        assert_eq!((act.min_activity, act.max_activity), (2.0, 14.0));

        let empty = LinearRow::le("e", vec![], 5.0);
        let act = compute_activity(&empty, &dom);
        assert_eq!((act.min_activity, act.max_activity), (0.0, 0.0));

        let dom = int_box(&[(0.0, 3.0), (1.0, 5.0)]);
        let row = LinearRow::le("r", vec![(0, 2.0), (1, -1.0)], 5.0);
        let act = compute_activity(&row, &dom);
        assert_eq!((act.min_activity, act.max_activity), (-5.0, 5.0));
        assert_eq!(corner_range(&row, &dom), (-5.0, 5.0));
    }

    #[test]
    fn infinite_bounds_propagate() {
        let dom = DomainBox::from_bounds(vec![0.0, f64::NEG_INFINITY], vec![f64::INFINITY, 3.0], vec![false; 2]);
        let row = LinearRow::le("r", vec![(0, 1.0), (1, 1.0)], 5.0);
        let act = compute_activity(&row, &dom);
        assert_eq!(act.min_activity, f64::NEG_INFINITY);
        assert_eq!(act.max_activity, f64::INFINITY);
    }

    #[test]
    fn tighten_row_examples() {
        let tol = Tolerances::default();
        let mut dom = int_box(&[(0.0, 10.0), (2.0, 4.0)]);
        let row = LinearRow::new("r", vec![(0, 1.0), (1, 1.0)], 0.0, 5.0);
        let out = tighten_row(&row, &mut dom, &tol);
        assert_eq!(dom.ub(0), 3.0);
        assert_eq!(out.bound_changes.len(), 1);
        assert!(!out.cutoff);

        let mut dom = int_box(&[(0.0, 1.0), (0.0, 1.0)]);
        let row = LinearRow::le("slack", vec![(0, 1.0), (1, 1.0)], 5.0);
        assert!(!tighten_row(&row, &mut dom, &tol).changed());

        let mut dom = int_box(&[(0.0, 3.0)]);
        let row = LinearRow::ge("cut", vec![(0, 1.0)], 4.0);
        let out = tighten_row(&row, &mut dom, &tol);
        assert!(out.cutoff);
        assert!(dom.is_empty());
    }

    #[test]
    fn one_infinite_contribution_still_bounds_that_variable() {
        let tol = Tolerances::default();
        // x + y <= 4 with x in [-inf, 10], y in [1, 2]: only x is unbounded
        // below, so y's residual is -inf but x's residual is finite.
        let mut dom = DomainBox::from_bounds(vec![f64::NEG_INFINITY, 1.0], vec![10.0, 2.0], vec![false; 2]);
        let row = LinearRow::le("r", vec![(0, 1.0), (1, 1.0)], 4.0);
        tighten_row(&row, &mut dom, &tol);
        assert_eq!(dom.ub(0), 3.0);
        assert_eq!(dom.ub(1), 2.0);
    }

    #[test]
    fn valid_reduction_examples() {
        let d = int_box(&[(0.0, 3.0), (0.0, 3.0)]);
        let pts = vec![vec![1.0, 2.0], vec![0.0, 0.0]];
        assert!(is_valid_reduction(&d, &d, &pts).unwrap());
        let r = int_box(&[(1.0, 3.0), (0.0, 3.0)]);
        assert!(!is_valid_reduction(&d, &r, &pts).unwrap());
        assert!(is_valid_reduction(&d, &DomainBox::empty(2), &[]).unwrap());
        assert!(!is_valid_reduction(&d, &DomainBox::empty(2), &pts).unwrap());
        assert!(is_valid_reduction(&d, &int_box(&[(0.0, 1.0)]), &pts).is_err());
    }

    fn arb_row_and_box() -> impl Strategy<Value = (LinearRow, DomainBox)> {
        (1usize..=4)
            .prop_flat_map(|n| {
                (
                    prop::collection::vec((-4i32..=4).prop_filter("nonzero", |c| *c != 0), n),
                    prop::collection::vec((-3i32..=2, 0i32..=3), n),
                    -8i32..=8,
                    0i32..=8,
                )
            })
            .prop_map(|(coefs, bounds, lhs, width)| {
                let terms = coefs.iter().enumerate().map(|(v, &c)| (v, c as f64)).collect();
                let row = LinearRow::new("p", terms, lhs as f64, (lhs + width) as f64);
                let dom = DomainBox::from_bounds(
                    bounds.iter().map(|b| b.0 as f64).collect(),
                    bounds.iter().map(|b| (b.0 + b.1) as f64).collect(),
                    vec![true; bounds.len()],
                );
                (row, dom)
            })
    }

    fn grid_points(dom: &DomainBox) -> Vec<Vec<f64>> {
        let mut points = vec![vec![]];
        for v in 0..dom.len() {
            let mut next = Vec::new();
            for p in &points {
                let mut x = dom.lb(v);
                while x <= dom.ub(v) {
                    let mut q = p.clone();
                    q.push(x);
                    next.push(q);
                    x += 1.0;
                }
            }
            points = next;
        }
        points
    }

    proptest! {
        #[test]
        fn activity_matches_corners((row, dom) in arb_row_and_box()) {
            let act = compute_activity(&row, &dom);
            let (lo, hi) = corner_range(&row, &dom);
            prop_assert_eq!(act.min_activity, lo);
            prop_assert_eq!(act.max_activity, hi);
        }

        #[test]
        fn tighten_row_is_sound_and_monotone((row, dom) in arb_row_and_box()) {
            let tol = Tolerances::default();
            let feasible: Vec<Vec<f64>> = grid_points(&dom)
                .into_iter()
                .filter(|p| row.is_satisfied(p, 0.0))
                .collect();
            let mut reduced = dom.clone();
            let out = tighten_row(&row, &mut reduced, &tol);
            prop_assert!(reduced.is_subset_of(&dom).unwrap());
            prop_assert!(is_valid_reduction(&dom, &reduced, &feasible).unwrap());
            if out.cutoff {
                prop_assert!(feasible.is_empty());
            }
        }

        #[test]
        fn tighten_row_idempotent_at_fixpoint((row, dom) in arb_row_and_box()) {
            let tol = Tolerances::default();
            let mut once = dom.clone();
            let first = tighten_row(&row, &mut once, &tol);
            if !first.changed() {
                let mut twice = once.clone();
                tighten_row(&row, &mut twice, &tol);
                prop_assert_eq!(once, twice);
            }
        }
    }
}
