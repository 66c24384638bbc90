//! Brute-force enumeration of the feasible region over a scope.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::VerifyError;
use crate::model::{compute_activity, DomainBox, MipModel, Tolerances, VarId};
use crate::propagate::propagate_rows_fixpoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationOptions {
    /// Node budget; exceeding it truncates the result.
    pub cap: u64,
    /// Reject continuous variables in the scope instead of handling them by
    /// interval consistency.
    pub strict: bool,
    pub tolerances: Tolerances,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            cap: 1_000_000,
            strict: false,
            tolerances: Tolerances::default(),
        }
    }
}

impl EnumerationOptions {
    pub fn with_cap(cap: u64) -> Self {
        EnumerationOptions {
            cap,
            ..Default::default()
        }
    }
}

/// Full-length points, one per feasible assignment of the integer scope
/// variables. Variables left free after fixing the assignment (continuous
/// ones, or integers outside the scope) contribute the lower and the upper
/// corner of their consistent interval box, so an assignment may appear twice
/// with different free parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationResult {
    pub scope: Vec<VarId>,
    pub feasible_points: Vec<Vec<f64>>,
    pub truncated: bool,
    pub nodes_visited: u64,
    /// Product of the integer scope domain sizes.
    pub combinations: f64,
}

impl EnumerationResult {
    /// Distinct assignments of the integer scope variables.
    pub fn assignments(&self, model: &MipModel) -> BTreeSet<Vec<i64>> {
        let ints: Vec<VarId> = self
            .scope
            .iter()
            .copied()
            .filter(|&v| model.variables[v].is_integral())
            .collect();
        self.feasible_points
            .iter()
            .map(|p| ints.iter().map(|&v| p[v].round() as i64).collect())
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.feasible_points.is_empty()
    }
}

/// Enumerates over the model bounds with the default options except `cap`.
pub fn enumerate_feasible(model: &MipModel, scope: &[VarId], cap: u64) -> Result<EnumerationResult, VerifyError> {
    enumerate_feasible_in(model, &DomainBox::from_model(model), scope, &EnumerationOptions::with_cap(cap))
}

/// Depth-first enumeration of the integer scope variables inside `dom`. A
/// partial assignment is dropped once some row's activity interval misses
/// its sides; a complete one is kept when a row fixpoint over the whole model
/// does not cut it off.
pub fn enumerate_feasible_in(
    model: &MipModel,
    dom: &DomainBox,
    scope: &[VarId],
    opts: &EnumerationOptions,
) -> Result<EnumerationResult, VerifyError> {
    let mut ints = Vec::new();
    let mut combinations = 1.0;
    for &v in scope {
        if v >= model.num_vars() {
            return Err(VerifyError::UnknownVariable(v));
        }
        if !model.variables[v].is_integral() {
            if opts.strict {
                return Err(VerifyError::ContinuousInScope(v));
            }
            continue;
        }
        if !dom.lb(v).is_finite() || !dom.ub(v).is_finite() {
            return Err(VerifyError::InfiniteDomain(v));
        }
        if !ints.contains(&v) {
            ints.push(v);
            combinations *= (dom.ub(v).floor() - dom.lb(v).ceil() + 1.0).max(0.0);
        }
    }
    let mut state = Dfs {
        model,
        cols: model.column_index(),
        ints: &ints,
        tol: opts.tolerances,
        cap: opts.cap,
        nodes: 0,
        truncated: false,
        points: Vec::new(),
    };
    if !dom.is_empty() && state.consistent(dom, None) {
        state.descend(0, dom.clone());
    }
    Ok(EnumerationResult {
        scope: scope.to_vec(),
        feasible_points: state.points,
        truncated: state.truncated,
        nodes_visited: state.nodes,
        combinations,
    })
}

struct Dfs<'a> {
    model: &'a MipModel,
    cols: Vec<Vec<usize>>,
    ints: &'a [VarId],
    tol: Tolerances,
    cap: u64,
    nodes: u64,
    truncated: bool,
    points: Vec<Vec<f64>>,
}

impl Dfs<'_> {
    /// Activity check of the rows touching `var` (all rows when `None`).
    fn consistent(&self, dom: &DomainBox, var: Option<VarId>) -> bool {
        let eps = self.tol.feasibility;
        let check = |r: usize| {
            let row = &self.model.rows[r];
            let a = compute_activity(row, dom);
            a.min_activity <= row.rhs + eps && a.max_activity >= row.lhs - eps
        };
        match var {
            Some(v) => self.cols[v].iter().all(|&r| check(r)),
            None => (0..self.model.num_rows()).all(check),
        }
    }

    fn descend(&mut self, depth: usize, dom: DomainBox) {
        if self.truncated {
            return;
        }
        if depth == self.ints.len() {
            self.leaf(dom);
            return;
        }
        let v = self.ints[depth];
        let lo = dom.lb(v).ceil() as i64;
        let hi = dom.ub(v).floor() as i64;
        for value in lo..=hi {
            if self.truncated {
                return;
            }
            self.nodes += 1;
            if self.nodes > self.cap {
                self.truncated = true;
                return;
            }
            let mut child = dom.clone();
            child.restrict(v, value as f64, value as f64);
            if self.consistent(&child, Some(v)) {
                self.descend(depth + 1, child);
            }
        }
    }

    fn leaf(&mut self, mut dom: DomainBox) {
        propagate_rows_fixpoint(self.model.rows.iter(), &mut dom, &self.tol, 1000);
        if dom.is_empty() || !self.consistent(&dom, None) {
            return;
        }
        let low = dom.lower.clone();
        let high = dom.upper.clone();
        let same = low == high;
        self.points.push(low);
        if !same {
            self.points.push(high);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinearRow, Variable};

    #[test]
    fn lone_binary_has_two_points() {
        let mut m = MipModel::new("b");
        m.add_variable(Variable::binary("x"));
        let r = enumerate_feasible(&m, &[0], 100).unwrap();
        assert_eq!(r.feasible_points, vec![vec![0.0], vec![1.0]]);
        assert_eq!(r.combinations, 2.0);
        assert!(!r.truncated);
    }

    #[test]
    fn two_by_two_grid_has_two_permutations() {
        let mut m = MipModel::new("g");
        let x: Vec<VarId> = (0..4).map(|i| m.add_variable(Variable::binary(format!("x{i}")))).collect();
        for (a, b) in [(0, 1), (2, 3), (0, 2), (1, 3)] {
            m.add_row(LinearRow::eq(format!("r{a}{b}"), vec![(x[a], 1.0), (x[b], 1.0)], 1.0));
        }
        let r = enumerate_feasible(&m, &x, 1000).unwrap();
        assert_eq!(r.assignments(&m).len(), 2);
    }

    #[test]
    fn cap_truncates() {
        let mut m = MipModel::new("c");
        for i in 0..10 {
            m.add_variable(Variable::binary(format!("x{i}")));
        }
        let r = enumerate_feasible(&m, &(0..10).collect::<Vec<_>>(), 50).unwrap();
        assert!(r.truncated);
        assert_eq!(r.nodes_visited, 51);
    }

    #[test]
    fn continuous_companion_gives_corners() {
        let mut m = MipModel::new("z");
        let x = m.add_variable(Variable::binary("x"));
        let z = m.add_variable(Variable::continuous("z", 0.0, 10.0));
        m.add_row(LinearRow::le("l", vec![(x, 4.0), (z, -1.0)], 0.0));
        let r = enumerate_feasible(&m, &[x, z], 100).unwrap();
        assert!(r.feasible_points.contains(&vec![1.0, 4.0]));
        assert!(r.feasible_points.contains(&vec![1.0, 10.0]));
        assert!(r.feasible_points.contains(&vec![0.0, 0.0]));
        let strict = EnumerationOptions {
            strict: true,
            ..Default::default()
        };
        assert!(matches!(
            enumerate_feasible_in(&m, &DomainBox::from_model(&m), &[x, z], &strict),
            Err(VerifyError::ContinuousInScope(_))
        ));
    }

    #[test]
    fn unbounded_integer_is_rejected() {
        let mut m = MipModel::new("u");
        m.add_variable(Variable::integer("n", 0.0, f64::INFINITY));
        assert!(matches!(enumerate_feasible(&m, &[0], 10), Err(VerifyError::InfiniteDomain(0))));
    }
}
