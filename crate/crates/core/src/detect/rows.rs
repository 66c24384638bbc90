//! Row views shared by the detectors.

use crate::model::{LinearRow, MipModel, RowId, VarId};

use super::DetectConfig;

/// A row with every coefficient of the same magnitude `scale` and the same
/// sign, divided through: `lo <= sum(vars) <= hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitForm {
    pub vars: Vec<VarId>,
    pub lo: f64,
    pub hi: f64,
}

/// One side of a row written as `sum(terms) <= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeForm {
    pub terms: Vec<(VarId, f64)>,
    pub rhs: f64,
}

impl LeForm {
    pub fn coef(&self, v: VarId) -> Option<f64> {
        self.terms.iter().find(|t| t.0 == v).map(|t| t.1)
    }
}

/// Read-only view of the rows a detector may use.
pub struct Scan<'a> {
    pub model: &'a MipModel,
    pub config: &'a DetectConfig,
    /// Rows per variable, restricted to usable rows, ascending.
    pub cols: Vec<Vec<RowId>>,
    /// Usable rows in scan order.
    pub rows: Vec<RowId>,
    pub warning: Option<String>,
}

impl<'a> Scan<'a> {
    pub fn new(model: &'a MipModel, config: &'a DetectConfig, blocked: Option<&[bool]>) -> Scan<'a> {
        let mut rows = Vec::new();
        let mut warning = None;
        for r in 0..model.num_rows() {
            if blocked.is_some_and(|b| b[r]) {
                continue;
            }
            if rows.len() >= config.row_cap {
                warning = Some(format!("row scan truncated at {} rows", config.row_cap));
                break;
            }
            rows.push(r);
        }
        let mut cols = vec![Vec::new(); model.num_vars()];
        for &r in &rows {
            for &(v, _) in &model.rows[r].terms {
                cols[v].push(r);
            }
        }
        Scan {
            model,
            config,
            cols,
            rows,
            warning,
        }
    }

    pub fn row(&self, r: RowId) -> &LinearRow {
        &self.model.rows[r]
    }

    pub fn is_binary(&self, v: VarId) -> bool {
        self.model.is_binary(v)
    }

    pub fn lb(&self, v: VarId) -> f64 {
        self.model.variables[v].lower
    }

    pub fn ub(&self, v: VarId) -> f64 {
        self.model.variables[v].upper
    }

    fn eq(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.config.tolerances.feasibility
    }

    /// Unit form with scale 1: every coefficient is +1 or every one is -1.
    pub fn unit_form(&self, r: RowId) -> Option<UnitForm> {
        let row = self.row(r);
        let first = row.terms.first()?.1;
        if !self.eq(first.abs(), 1.0) {
            return None;
        }
        if !row.terms.iter().all(|t| self.eq(t.1, first)) {
            return None;
        }
        let mut vars: Vec<VarId> = row.terms.iter().map(|t| t.0).collect();
        vars.sort_unstable();
        let (lo, hi) = if first > 0.0 { (row.lhs, row.rhs) } else { (-row.rhs, -row.lhs) };
        Some(UnitForm { vars, lo, hi })
    }

    /// Unit form over binaries only.
    pub fn binary_unit_form(&self, r: RowId) -> Option<UnitForm> {
        let u = self.unit_form(r)?;
        u.vars.iter().all(|&v| self.is_binary(v)).then_some(u)
    }

    /// `sum(vars) = 1` over at least two binaries.
    pub fn exact_one(&self, r: RowId) -> Option<Vec<VarId>> {
        let u = self.binary_unit_form(r)?;
        (u.vars.len() >= 2 && self.eq(u.lo, 1.0) && self.eq(u.hi, 1.0)).then_some(u.vars)
    }

    /// `sum(vars) <= 1` (or `= 1`) over at least two binaries; the flag is
    /// true for the equality.
    pub fn at_most_one(&self, r: RowId) -> Option<(Vec<VarId>, bool)> {
        let u = self.binary_unit_form(r)?;
        if u.vars.len() < 2 || !self.eq(u.hi, 1.0) {
            return None;
        }
        if self.eq(u.lo, 1.0) {
            Some((u.vars, true))
        } else if u.lo <= 0.0 {
            Some((u.vars, false))
        } else {
            None
        }
    }

    /// Every finite side of the row as a `<=` inequality.
    pub fn le_forms(&self, r: RowId) -> Vec<LeForm> {
        let row = self.row(r);
        let mut out = Vec::with_capacity(2);
        if row.rhs.is_finite() {
            out.push(LeForm {
                terms: row.terms.clone(),
                rhs: row.rhs,
            });
        }
        if row.lhs.is_finite() {
            out.push(LeForm {
                terms: row.terms.iter().map(|&(v, c)| (v, -c)).collect(),
                rhs: -row.lhs,
            });
        }
        out
    }

    /// The single `<=` form of a one-sided row.
    pub fn one_sided(&self, r: RowId) -> Option<LeForm> {
        let row = self.row(r);
        if row.lhs.is_finite() == row.rhs.is_finite() {
            return None;
        }
        self.le_forms(r).pop()
    }

    /// Activity interval of `terms` under the original bounds.
    pub fn activity(&self, terms: &[(VarId, f64)]) -> (f64, f64) {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for &(v, c) in terms {
            let (l, u) = (self.lb(v), self.ub(v));
            if c > 0.0 {
                lo += c * l;
                hi += c * u;
            } else {
                lo += c * u;
                hi += c * l;
            }
        }
        (lo, hi)
    }

    /// True when the original bounds alone satisfy the row.
    pub fn is_redundant(&self, r: RowId) -> bool {
        let row = self.row(r);
        let (lo, hi) = self.activity(&row.terms);
        let tol = self.config.tolerances.feasibility;
        lo >= row.lhs - tol && hi <= row.rhs + tol
    }

    pub fn near(&self, a: f64, b: f64) -> bool {
        self.eq(a, b)
    }
}

/// Sorted intersection size of two ascending lists.
pub fn intersection_size(a: &[VarId], b: &[VarId]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variable;

    fn scan_model() -> MipModel {
        let mut m = MipModel::new("s");
        for i in 0..3 {
            m.add_variable(Variable::binary(format!("b{i}")));
        }
        m.add_variable(Variable::integer("x", 0.0, 5.0));
        m.add_row(LinearRow::eq("eo", vec![(0, -1.0), (1, -1.0), (2, -1.0)], -1.0));
        m.add_row(LinearRow::le("amo", vec![(0, 1.0), (1, 1.0)], 1.0));
        m.add_row(LinearRow::le("slack", vec![(0, 1.0), (3, 1.0)], 9.0));
        m.add_row(LinearRow::new("ranged", vec![(3, 2.0)], 1.0, 4.0));
        m
    }

    #[test]
    fn unit_forms_undo_sign_flips() {
        let m = scan_model();
        let cfg = DetectConfig::default();
        let s = Scan::new(&m, &cfg, None);
        assert_eq!(s.exact_one(0), Some(vec![0, 1, 2]));
        assert_eq!(s.at_most_one(0), Some((vec![0, 1, 2], true)));
        assert_eq!(s.at_most_one(1), Some((vec![0, 1], false)));
        assert_eq!(s.exact_one(1), None);
        assert!(s.is_redundant(2));
        assert!(!s.is_redundant(3));
        assert_eq!(s.le_forms(3).len(), 2);
        assert!(s.one_sided(3).is_none());
    }

    #[test]
    fn blocked_rows_and_cap() {
        let m = scan_model();
        let cfg = DetectConfig {
            row_cap: 2,
            ..DetectConfig::default()
        };
        let s = Scan::new(&m, &cfg, Some(&[true, false, false, false]));
        assert_eq!(s.rows, vec![1, 2]);
        assert!(s.warning.is_some());
        assert_eq!(s.cols[0], vec![1, 2]);
    }

    #[test]
    fn intersections() {
        assert_eq!(intersection_size(&[1, 3, 5], &[2, 3, 5, 8]), 2);
        assert_eq!(intersection_size(&[], &[1]), 0);
    }
}
