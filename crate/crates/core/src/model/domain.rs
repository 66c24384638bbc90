use serde::{Deserialize, Serialize};

use super::{MipModel, ModelError, Tolerances, VarId};
use crate::outcome::{BoundChange, BoundSide, PropagationOutcome};

/// Per-variable bounds plus integrality marks.
///
/// A box derived from a model starts at the variable bounds. Tightening only
/// ever shrinks it; once some lower bound crosses its upper bound the box is
/// flagged empty and stays that way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    #[serde(with = "crate::ext_real::vec")]
    pub lower: Vec<f64>,
    #[serde(with = "crate::ext_real::vec")]
    pub upper: Vec<f64>,
    pub integral: Vec<bool>,
    pub empty: bool,
}

impl DomainBox {
    pub fn from_model(model: &MipModel) -> Self {
        let lower: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
        let upper: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
        let integral = model.variables.iter().map(|v| v.is_integral()).collect();
        let empty = lower.iter().zip(&upper).any(|(l, u)| l > u);
        DomainBox {
            lower,
            upper,
            integral,
            empty,
        }
    }

    pub fn from_bounds(lower: Vec<f64>, upper: Vec<f64>, integral: Vec<bool>) -> Self {
        assert_eq!(lower.len(), upper.len());
        assert_eq!(lower.len(), integral.len());
        let empty = lower.iter().zip(&upper).any(|(l, u)| l > u);
        DomainBox {
            lower,
            upper,
            integral,
            empty,
        }
    }

    /// An explicitly empty box of dimension `n`.
    pub fn empty(n: usize) -> Self {
        DomainBox {
            lower: vec![0.0; n],
            upper: vec![0.0; n],
            integral: vec![false; n],
            empty: true,
        }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn mark_empty(&mut self) {
        self.empty = true;
    }

    #[inline]
    pub fn lb(&self, var: VarId) -> f64 {
        self.lower[var]
    }

    #[inline]
    pub fn ub(&self, var: VarId) -> f64 {
        self.upper[var]
    }

    #[inline]
    pub fn is_integral(&self, var: VarId) -> bool {
        self.integral[var]
    }

    pub fn is_fixed(&self, var: VarId) -> bool {
        self.lower[var] == self.upper[var]
    }

    /// Integral with current bounds inside [0, 1].
    pub fn is_binary(&self, var: VarId) -> bool {
        self.integral[var] && self.lower[var] >= 0.0 && self.upper[var] <= 1.0
    }

    /// Live means the binary can still take value 1.
    pub fn is_live(&self, var: VarId) -> bool {
        self.upper[var] > 0.5
    }

    pub fn is_fixed_one(&self, var: VarId) -> bool {
        self.lower[var] > 0.5
    }

    fn round_lower(&self, var: VarId, value: f64, tol: &Tolerances) -> f64 {
        if self.integral[var] {
            (value - tol.integrality).ceil()
        } else {
            value
        }
    }

    fn round_upper(&self, var: VarId, value: f64, tol: &Tolerances) -> f64 {
        if self.integral[var] {
            (value + tol.integrality).floor()
        } else {
            value
        }
    }

    /// Raises the lower bound of `var` to `value` (rounded inward for integer
    /// variables). Returns true when the bound moved by more than the
    /// feasibility tolerance. Crossing the upper bound empties the box and sets
    /// the cutoff flag on `out`.
    pub fn tighten_lb(&mut self, var: VarId, value: f64, tol: &Tolerances, out: &mut PropagationOutcome) -> bool {
        if self.empty || value.is_nan() {
            return false;
        }
        let new = self.round_lower(var, value, tol);
        let old = self.lower[var];
        if new <= old + tol.feasibility {
            return false;
        }
        let ub = self.upper[var];
        if new > ub + tol.feasibility {
            self.empty = true;
            out.set_cutoff();
            return false;
        }
        let new = new.min(ub);
        if new <= old {
            return false;
        }
        self.lower[var] = new;
        out.record(BoundChange {
            var,
            side: BoundSide::Lower,
            old,
            new,
        });
        true
    }

    /// Mirror of [`DomainBox::tighten_lb`] for the upper bound.
    pub fn tighten_ub(&mut self, var: VarId, value: f64, tol: &Tolerances, out: &mut PropagationOutcome) -> bool {
        if self.empty || value.is_nan() {
            return false;
        }
        let new = self.round_upper(var, value, tol);
        let old = self.upper[var];
        if new >= old - tol.feasibility {
            return false;
        }
        let lb = self.lower[var];
        if new < lb - tol.feasibility {
            self.empty = true;
            out.set_cutoff();
            return false;
        }
        let new = new.max(lb);
        if new >= old {
            return false;
        }
        self.upper[var] = new;
        out.record(BoundChange {
            var,
            side: BoundSide::Upper,
            old,
            new,
        });
        true
    }

    /// Fixes a variable to `value` by tightening both sides.
    pub fn fix(&mut self, var: VarId, value: f64, tol: &Tolerances, out: &mut PropagationOutcome) -> bool {
        let a = self.tighten_lb(var, value, tol, out);
        let b = self.tighten_ub(var, value, tol, out);
        a || b
    }

    /// Sets the bounds of `var` without recording a change. Used by search
    /// branching, where the split is a decision rather than a reduction.
    pub fn restrict(&mut self, var: VarId, lower: f64, upper: f64) {
        self.lower[var] = self.lower[var].max(lower);
        self.upper[var] = self.upper[var].min(upper);
        if self.lower[var] > self.upper[var] {
            self.empty = true;
        }
    }

    pub fn contains(&self, point: &[f64], tol: f64) -> bool {
        !self.empty
            && point.len() == self.len()
            && point
                .iter()
                .enumerate()
                .all(|(i, &x)| x >= self.lower[i] - tol && x <= self.upper[i] + tol)
    }

    /// Component-wise inclusion. An empty box is a subset of everything.
    pub fn is_subset_of(&self, other: &DomainBox) -> Result<bool, ModelError> {
        if self.len() != other.len() {
            return Err(ModelError::DimensionMismatch(self.len(), other.len()));
        }
        if self.empty {
            return Ok(true);
        }
        if other.empty {
            return Ok(false);
        }
        Ok((0..self.len()).all(|i| self.lower[i] >= other.lower[i] && self.upper[i] <= other.upper[i]))
    }

    /// Restriction to the listed variables, in order.
    pub fn project(&self, scope: &[VarId]) -> DomainBox {
        DomainBox {
            lower: scope.iter().map(|&v| self.lower[v]).collect(),
            upper: scope.iter().map(|&v| self.upper[v]).collect(),
            integral: scope.iter().map(|&v| self.integral[v]).collect(),
            empty: self.empty,
        }
    }

    /// True when every integral variable is fixed.
    pub fn integers_fixed(&self) -> bool {
        (0..self.len()).all(|v| !self.integral[v] || self.is_fixed(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int_box(bounds: &[(f64, f64)]) -> DomainBox {
        DomainBox::from_bounds(
            bounds.iter().map(|b| b.0).collect(),
            bounds.iter().map(|b| b.1).collect(),
            vec![true; bounds.len()],
        )
    }

    #[test]
    fn integer_rounding_uses_tolerance() {
        let tol = Tolerances::default();
        let mut b = int_box(&[(0.0, 10.0)]);
        let mut out = PropagationOutcome::default();
        assert!(b.tighten_ub(0, 2.9999999, &tol, &mut out));
        assert_eq!(b.ub(0), 3.0);
        assert!(b.tighten_lb(0, 1.2, &tol, &mut out));
        assert_eq!(b.lb(0), 2.0);
        assert_eq!(out.bound_changes.len(), 2);
    }

    #[test]
    fn crossing_bounds_cuts_off() {
        let tol = Tolerances::default();
        let mut b = int_box(&[(0.0, 3.0)]);
        let mut out = PropagationOutcome::default();
        assert!(!b.tighten_lb(0, 4.0, &tol, &mut out));
        assert!(b.is_empty());
        assert!(out.cutoff);
    }

    #[test]
    fn changes_below_tolerance_are_suppressed() {
        let tol = Tolerances::default();
        let mut b = DomainBox::from_bounds(vec![0.0], vec![1.0], vec![false]);
        let mut out = PropagationOutcome::default();
        assert!(!b.tighten_ub(0, 1.0 - 1e-8, &tol, &mut out));
        assert_eq!(b.ub(0), 1.0);
        assert!(out.bound_changes.is_empty());
    }

    #[test]
    fn subset_and_projection() {
        let a = int_box(&[(0.0, 5.0), (1.0, 2.0)]);
        let b = int_box(&[(1.0, 4.0), (1.0, 2.0)]);
        assert!(b.is_subset_of(&a).unwrap());
        assert!(!a.is_subset_of(&b).unwrap());
        assert!(DomainBox::empty(2).is_subset_of(&b).unwrap());
        assert!(a.is_subset_of(&int_box(&[(0.0, 1.0)])).is_err());
        let p = a.project(&[1]);
        assert_eq!((p.lb(0), p.ub(0)), (1.0, 2.0));
    }
}
