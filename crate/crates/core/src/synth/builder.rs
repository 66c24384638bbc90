//! Incremental model construction with a running witness assignment.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::detect::SemanticRecord;
use crate::model::{LinearRow, MipModel, ObjectiveSense, RowId, VarId, Variable};

pub(super) struct Builder {
    pub model: MipModel,
    pub witness: Vec<f64>,
    pub rng: ChaCha8Rng,
}

impl Builder {
    pub fn new(name: &str, rng: ChaCha8Rng) -> Self {
        Builder {
            model: MipModel::new(name),
            witness: Vec::new(),
            rng,
        }
    }

    pub fn range(&mut self, lo: i64, hi: i64) -> i64 {
        self.rng.gen_range(lo..=hi)
    }

    pub fn coin(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    pub fn bin(&mut self, name: String, value: bool) -> VarId {
        self.witness.push(if value { 1.0 } else { 0.0 });
        self.model.add_variable(Variable::binary(name))
    }

    pub fn int(&mut self, name: String, lo: f64, hi: f64, value: f64) -> VarId {
        self.witness.push(value);
        self.model.add_variable(Variable::integer(name, lo, hi))
    }

    pub fn cont(&mut self, name: String, lo: f64, hi: f64, value: f64) -> VarId {
        self.witness.push(value);
        self.model.add_variable(Variable::continuous(name, lo, hi))
    }

    pub fn row(&mut self, row: LinearRow) -> RowId {
        debug_assert!(
            row.is_satisfied(&self.witness, 1e-9),
            "witness violates generated row {}",
            row.name
        );
        self.model.add_row(row)
    }

    /// Random integer costs over the record scope, minimised.
    pub fn finish(mut self, mut record: SemanticRecord) -> (MipModel, SemanticRecord, Vec<f64>) {
        record.canonicalize();
        let mut objective = Vec::new();
        for &v in &record.scope {
            let c = self.rng.gen_range(-5i64..=5);
            if c != 0 {
                objective.push((v, c as f64));
            }
        }
        self.model.set_objective(objective, ObjectiveSense::Minimize);
        (self.model, record, self.witness)
    }
}

pub(super) fn ones(vars: &[VarId]) -> Vec<(VarId, f64)> {
    vars.iter().map(|&v| (v, 1.0)).collect()
}

/// Largest and smallest value of `terms` over the variable bounds.
pub(super) fn activity_range(model: &MipModel, terms: &[(VarId, f64)]) -> (f64, f64) {
    let mut lo = 0.0;
    let mut hi = 0.0;
    for &(v, a) in terms {
        let (l, u) = (model.variables[v].lower, model.variables[v].upper);
        if a > 0.0 {
            lo += a * l;
            hi += a * u;
        } else {
            lo += a * u;
            hi += a * l;
        }
    }
    (lo, hi)
}
