//! In-memory MIP representation and the domain box that propagation shrinks.

mod activity;
mod domain;

pub use activity::{compute_activity, is_valid_reduction, residual_activity, tighten_row, RowActivity};
pub use domain::DomainBox;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type VarId = usize;
pub type RowId = usize;

/// Numerical tolerances shared by every propagator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub feasibility: f64,
    pub integrality: f64,
    pub coefficient_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feasibility: 1e-6,
            integrality: 1e-6,
            coefficient_floor: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn with_feasibility(feasibility: f64) -> Self {
        Tolerances {
            feasibility,
            ..Tolerances::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarType {
    Continuous,
    Integer,
    Binary,
}

impl VarType {
    pub fn is_integral(self) -> bool {
        !matches!(self, VarType::Continuous)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    #[serde(with = "crate::ext_real")]
    pub lower: f64,
    #[serde(with = "crate::ext_real")]
    pub upper: f64,
    pub var_type: VarType,
}

impl Variable {
    pub fn continuous(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Variable {
            name: name.into(),
            lower,
            upper,
            var_type: VarType::Continuous,
        }
    }

    pub fn integer(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Variable {
            name: name.into(),
            lower,
            upper,
            var_type: VarType::Integer,
        }
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Variable {
            name: name.into(),
            lower: 0.0,
            upper: 1.0,
            var_type: VarType::Binary,
        }
    }

    pub fn is_integral(&self) -> bool {
        self.var_type.is_integral()
    }

    /// Integral with bounds inside [0, 1].
    pub fn is_binary(&self) -> bool {
        self.is_integral() && self.lower >= 0.0 && self.upper <= 1.0
    }
}

/// `lhs <= sum(coef * x) <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    #[serde(with = "crate::ext_real")]
    pub lhs: f64,
    #[serde(with = "crate::ext_real")]
    pub rhs: f64,
}

impl LinearRow {
    pub fn new(name: impl Into<String>, terms: Vec<(VarId, f64)>, lhs: f64, rhs: f64) -> Self {
        LinearRow {
            name: name.into(),
            terms,
            lhs,
            rhs,
        }
    }

    pub fn le(name: impl Into<String>, terms: Vec<(VarId, f64)>, rhs: f64) -> Self {
        Self::new(name, terms, f64::NEG_INFINITY, rhs)
    }

    pub fn ge(name: impl Into<String>, terms: Vec<(VarId, f64)>, lhs: f64) -> Self {
        Self::new(name, terms, lhs, f64::INFINITY)
    }

    pub fn eq(name: impl Into<String>, terms: Vec<(VarId, f64)>, rhs: f64) -> Self {
        Self::new(name, terms, rhs, rhs)
    }

    pub fn is_equality(&self) -> bool {
        self.lhs == self.rhs
    }

    pub fn coefficient(&self, var: VarId) -> Option<f64> {
        self.terms.iter().find(|&&(v, _)| v == var).map(|&(_, c)| c)
    }

    /// Multiplies the row by -1 (coefficients negated, sides swapped and negated).
    pub fn negated(&self) -> LinearRow {
        LinearRow {
            name: self.name.clone(),
            terms: self.terms.iter().map(|&(v, c)| (v, -c)).collect(),
            lhs: -self.rhs,
            rhs: -self.lhs,
        }
    }

    /// Evaluates the linear form at a full assignment.
    pub fn evaluate(&self, point: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * point[v]).sum()
    }

    pub fn is_satisfied(&self, point: &[f64], tol: f64) -> bool {
        let value = self.evaluate(point);
        value >= self.lhs - tol && value <= self.rhs + tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveSense {
    #[default]
    Minimize,
    Maximize,
}

/// A mixed-integer linear program.
///
/// The stored objective is always a minimization objective: maximization
/// problems are negated on construction and `sense` only records the original
/// direction for reporting and writing.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MipModel {
    pub name: String,
    pub variables: Vec<Variable>,
    pub rows: Vec<LinearRow>,
    pub objective: Vec<(VarId, f64)>,
    pub objective_offset: f64,
    pub sense: ObjectiveSense,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("row `{row}` references unknown variable {var}")]
    UnknownVariable { row: String, var: VarId },
    #[error("objective references unknown variable {0}")]
    UnknownObjectiveVariable(VarId),
    #[error("row `{0}` lists a variable twice")]
    DuplicateTerm(String),
    #[error("row `{0}` stores a zero coefficient")]
    ZeroCoefficient(String),
    #[error("row `{0}` has lhs > rhs")]
    InvertedSides(String),
    #[error("variable `{0}` has lower > upper")]
    InvertedBounds(String),
    #[error("binary variable `{0}` has bounds outside [0, 1]")]
    BinaryBounds(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

impl MipModel {
    pub fn new(name: impl Into<String>) -> Self {
        MipModel {
            name: name.into(),
            ..MipModel::default()
        }
    }

    pub fn add_variable(&mut self, var: Variable) -> VarId {
        self.variables.push(var);
        self.variables.len() - 1
    }

    pub fn add_row(&mut self, row: LinearRow) -> RowId {
        self.rows.push(row);
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Sets the objective, negating it for maximization so the stored form is
    /// always minimized.
    pub fn set_objective(&mut self, terms: Vec<(VarId, f64)>, sense: ObjectiveSense) {
        self.sense = sense;
        self.objective = match sense {
            ObjectiveSense::Minimize => terms,
            ObjectiveSense::Maximize => terms.into_iter().map(|(v, c)| (v, -c)).collect(),
        };
    }

    /// Objective value in the stored (minimization) form.
    pub fn objective_value(&self, point: &[f64]) -> f64 {
        self.objective_offset + self.objective.iter().map(|&(v, c)| c * point[v]).sum::<f64>()
    }

    pub fn integer_vars(&self) -> Vec<VarId> {
        (0..self.variables.len())
            .filter(|&v| self.variables[v].is_integral())
            .collect()
    }

    pub fn is_binary(&self, var: VarId) -> bool {
        self.variables[var].is_binary()
    }

    /// `row_index[v]` lists the rows in which `v` appears.
    pub fn column_index(&self) -> Vec<Vec<RowId>> {
        let mut index = vec![Vec::new(); self.variables.len()];
        for (r, row) in self.rows.iter().enumerate() {
            for &(v, _) in &row.terms {
                if v < index.len() {
                    index[v].push(r);
                }
            }
        }
        index
    }

    /// Checks the structural invariants; the first violation is reported.
    pub fn validate(&self) -> Result<(), ModelError> {
        for var in &self.variables {
            if var.lower > var.upper {
                return Err(ModelError::InvertedBounds(var.name.clone()));
            }
            if var.var_type == VarType::Binary && (var.lower < 0.0 || var.upper > 1.0) {
                return Err(ModelError::BinaryBounds(var.name.clone()));
            }
        }
        let n = self.variables.len();
        let mut seen = vec![usize::MAX; n];
        for (r, row) in self.rows.iter().enumerate() {
            if row.lhs > row.rhs {
                return Err(ModelError::InvertedSides(row.name.clone()));
            }
            for &(v, c) in &row.terms {
                if v >= n {
                    return Err(ModelError::UnknownVariable {
                        row: row.name.clone(),
                        var: v,
                    });
                }
                if c == 0.0 {
                    return Err(ModelError::ZeroCoefficient(row.name.clone()));
                }
                if seen[v] == r {
                    return Err(ModelError::DuplicateTerm(row.name.clone()));
                }
                seen[v] = r;
            }
        }
        for &(v, _) in &self.objective {
            if v >= n {
                return Err(ModelError::UnknownObjectiveVariable(v));
            }
        }
        Ok(())
    }

    /// True when some variable has lower > upper, i.e. the model is infeasible
    /// before any row is looked at.
    pub fn has_empty_domain(&self) -> bool {
        self.variables.iter().any(|v| v.lower > v.upper)
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn row_by_name(&self, name: &str) -> Option<RowId> {
        self.rows.iter().position(|r| r.name == name)
    }
}
