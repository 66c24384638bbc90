//! Classifies a candidate record against already-registered structure by
//! comparing row-pattern fingerprints.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{DetectConfig, Scan, SemanticRecord};
use crate::model::{MipModel, RowId};

/// Coarse shape of a single row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowPattern {
    /// `sum = 1` over binaries.
    ExactOne,
    /// `sum <= 1` over binaries.
    SetPacking,
    /// `sum >= 1` over binaries.
    SetCover,
    /// Other unit-coefficient rows over binaries.
    Cardinality,
    /// Two variables, at least one binary.
    VarBound,
    /// Same-sign coefficients over integer variables.
    Knapsack,
    /// Equality over anything else.
    LinearEquality,
    /// Any other row.
    Linear,
}

pub fn row_pattern(model: &MipModel, r: RowId) -> RowPattern {
    let config = DetectConfig::default();
    let scan = Scan::new(model, &config, None);
    pattern_of(&scan, r)
}

fn pattern_of(scan: &Scan, r: RowId) -> RowPattern {
    let row = scan.row(r);
    if let Some(u) = scan.binary_unit_form(r) {
        let one = |x: f64| scan.near(x, 1.0);
        if one(u.lo) && one(u.hi) {
            return RowPattern::ExactOne;
        }
        if one(u.hi) && u.lo <= 0.0 {
            return RowPattern::SetPacking;
        }
        if one(u.lo) && u.hi >= u.vars.len() as f64 {
            return RowPattern::SetCover;
        }
        return RowPattern::Cardinality;
    }
    if row.terms.len() == 2 && row.terms.iter().any(|t| scan.is_binary(t.0)) {
        return RowPattern::VarBound;
    }
    if row.is_equality() {
        return RowPattern::LinearEquality;
    }
    let integral = row.terms.iter().all(|t| scan.model.variables[t.0].is_integral());
    let same_sign = row.terms.iter().all(|t| t.1 > 0.0) || row.terms.iter().all(|t| t.1 < 0.0);
    if integral && same_sign {
        RowPattern::Knapsack
    } else {
        RowPattern::Linear
    }
}

/// A registered family: the row patterns it handles, and whether it reasons
/// about one row at a time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyDescriptor {
    pub name: String,
    pub patterns: BTreeSet<RowPattern>,
    pub single_row: bool,
}

impl FamilyDescriptor {
    pub fn single_row(name: &str, patterns: &[RowPattern]) -> Self {
        FamilyDescriptor {
            name: name.to_string(),
            patterns: patterns.iter().copied().collect(),
            single_row: true,
        }
    }

    pub fn multi_row(name: &str, patterns: &[RowPattern]) -> Self {
        FamilyDescriptor {
            name: name.to_string(),
            patterns: patterns.iter().copied().collect(),
            single_row: false,
        }
    }
}

/// The single-row handlers a MIP solver ships with.
pub fn default_registry() -> Vec<FamilyDescriptor> {
    vec![
        FamilyDescriptor::single_row(
            "setppc",
            &[RowPattern::ExactOne, RowPattern::SetPacking, RowPattern::SetCover],
        ),
        FamilyDescriptor::single_row("knapsack", &[RowPattern::Knapsack]),
        FamilyDescriptor::single_row("varbound", &[RowPattern::VarBound]),
        FamilyDescriptor::single_row("cardinality", &[RowPattern::Cardinality]),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Novelty {
    Duplicate,
    Extension,
    Novel,
}

/// Pattern set of the candidate's evidence rows.
pub fn fingerprint(model: &MipModel, record: &SemanticRecord) -> BTreeSet<RowPattern> {
    let config = DetectConfig::default();
    let scan = Scan::new(model, &config, None);
    record.evidence.iter().map(|&r| pattern_of(&scan, r)).collect()
}

/// Duplicate when one registered single-row rule explains every evidence row
/// or a registered fingerprint matches exactly; extension when a registered
/// multi-row family covers a strict subset of the fingerprint; novel otherwise.
pub fn novelty_gate(model: &MipModel, candidate: &SemanticRecord, registry: &[FamilyDescriptor]) -> Novelty {
    let fp = fingerprint(model, candidate);
    if fp.is_empty() {
        return Novelty::Duplicate;
    }
    if registry
        .iter()
        .any(|d| (d.single_row && fp.is_subset(&d.patterns)) || d.patterns == fp)
    {
        return Novelty::Duplicate;
    }
    if registry
        .iter()
        .any(|d| !d.single_row && d.patterns.is_subset(&fp) && d.patterns != fp)
    {
        return Novelty::Extension;
    }
    Novelty::Novel
}
