//! Lifting groups of linear rows into semantic records.
//!
//! Each family has a structural detector that scans the rows of a model and
//! returns the non-overlapping matches it finds. [`detect_all`] runs every
//! detector in a fixed priority order; rows claimed by an exact record of a
//! higher-priority family are hidden from the families after it.

mod alldifferent;
mod bottleneck;
mod cardinality;
mod channel;
mod cumulative;
mod disjunction;
pub mod novelty;
mod nvalue;
mod onehot;
mod params;
mod rostering;
mod rows;
mod stretch;
mod unit_commitment;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{MipModel, RowId, Tolerances, VarId};

pub use disjunction::MAX_BRANCHES;
pub use params::*;
pub(crate) use rows::Scan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    AllDifferent,
    Cardinality,
    Channel,
    Cumulative,
    NValue,
    Stretch,
    OneHotResource,
    BottleneckExactOne,
    RosteringWindow,
    UnitCommitmentRamp,
    DisjPolyhedral,
}

impl Family {
    pub const ALL: [Family; 11] = [
        Family::AllDifferent,
        Family::Cardinality,
        Family::Channel,
        Family::Cumulative,
        Family::NValue,
        Family::Stretch,
        Family::OneHotResource,
        Family::BottleneckExactOne,
        Family::RosteringWindow,
        Family::UnitCommitmentRamp,
        Family::DisjPolyhedral,
    ];

    /// Arbitration order: multi-row, more specific patterns first.
    pub const PRIORITY: [Family; 11] = [
        Family::DisjPolyhedral,
        Family::UnitCommitmentRamp,
        Family::RosteringWindow,
        Family::BottleneckExactOne,
        Family::OneHotResource,
        Family::Cumulative,
        Family::Channel,
        Family::AllDifferent,
        Family::NValue,
        Family::Stretch,
        Family::Cardinality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::AllDifferent => "AllDifferent",
            Family::Cardinality => "Cardinality",
            Family::Channel => "Channel",
            Family::Cumulative => "Cumulative",
            Family::NValue => "NValue",
            Family::Stretch => "Stretch",
            Family::OneHotResource => "OneHotResource",
            Family::BottleneckExactOne => "BottleneckExactOne",
            Family::RosteringWindow => "RosteringWindow",
            Family::UnitCommitmentRamp => "UnitCommitmentRamp",
            Family::DisjPolyhedral => "DisjPolyhedral",
        }
    }

    /// The six classic constraint-programming families.
    pub fn is_cp(self) -> bool {
        matches!(
            self,
            Family::AllDifferent
                | Family::Cardinality
                | Family::Channel
                | Family::Cumulative
                | Family::NValue
                | Family::Stretch
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    /// Accepts the display name in any case, with or without `_`/`-`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| *c != '_' && *c != '-')
            .map(|c| c.to_ascii_lowercase())
            .collect();
        Family::ALL
            .into_iter()
            .find(|f| f.name().to_ascii_lowercase() == key)
            .ok_or_else(|| format!("unknown family `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Exact,
    Heuristic,
}

/// A detected global constraint: its variables, payload and the rows it was
/// lifted from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticRecord<V = VarId, R = RowId> {
    #[serde(flatten)]
    pub params: RecordParams<V, R>,
    pub scope: Vec<V>,
    pub evidence: Vec<R>,
    pub confidence: Confidence,
}

/// Record keyed by variable and row names, as written to JSON.
pub type NamedRecord = SemanticRecord<String, String>;

impl<V, R> SemanticRecord<V, R> {
    pub fn family(&self) -> Family {
        use RecordParams::*;
        match &self.params {
            AllDifferent(_) => Family::AllDifferent,
            Cardinality(_) => Family::Cardinality,
            Channel(_) => Family::Channel,
            Cumulative(_) => Family::Cumulative,
            NValue(_) => Family::NValue,
            Stretch(_) => Family::Stretch,
            OneHotResource(_) => Family::OneHotResource,
            BottleneckExactOne(_) => Family::BottleneckExactOne,
            RosteringWindow(_) => Family::RosteringWindow,
            UnitCommitmentRamp(_) => Family::UnitCommitmentRamp,
            DisjPolyhedral(_) => Family::DisjPolyhedral,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.confidence == Confidence::Exact
    }
}

impl<V: Clone, R: Clone> SemanticRecord<V, R> {
    pub fn map_ids<V2, R2>(&self, m: &IdMapper<V, R, V2, R2>) -> Result<SemanticRecord<V2, R2>, String> {
        Ok(SemanticRecord {
            params: self.params.map_ids(m)?,
            scope: m.vs(&self.scope)?,
            evidence: m.rs(&self.evidence)?,
            confidence: self.confidence,
        })
    }
}

impl<V: Ord + Clone, R: Ord + Clone> SemanticRecord<V, R> {
    pub fn canonicalize(&mut self) {
        self.scope.sort();
        self.scope.dedup();
        self.evidence.sort();
        self.evidence.dedup();
        self.params.canonicalize();
    }

    pub fn canonical(mut self) -> Self {
        self.canonicalize();
        self
    }
}

impl SemanticRecord {
    /// Renames ids through `new = var_map[old]`, `new = row_map[old]`.
    pub fn remap(&self, var_map: &[VarId], row_map: &[RowId]) -> Result<SemanticRecord, String> {
        let var = |v: &VarId| var_map.get(*v).copied().ok_or_else(|| format!("variable {v} outside permutation"));
        let row = |r: &RowId| row_map.get(*r).copied().ok_or_else(|| format!("row {r} outside permutation"));
        self.map_ids(&IdMapper { var: &var, row: &row })
    }

    pub fn to_named(&self, model: &MipModel) -> Result<NamedRecord, String> {
        let var = |v: &VarId| {
            model
                .variables
                .get(*v)
                .map(|x| x.name.clone())
                .ok_or_else(|| format!("unknown variable {v}"))
        };
        let row = |r: &RowId| model.rows.get(*r).map(|x| x.name.clone()).ok_or_else(|| format!("unknown row {r}"));
        self.map_ids(&IdMapper { var: &var, row: &row })
    }

    pub fn from_named(model: &MipModel, named: &NamedRecord) -> Result<SemanticRecord, String> {
        let vars: BTreeMap<&str, VarId> = model
            .variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.as_str(), i))
            .collect();
        let rows: BTreeMap<&str, RowId> = model.rows.iter().enumerate().map(|(i, r)| (r.name.as_str(), i)).collect();
        let var = |v: &String| vars.get(v.as_str()).copied().ok_or_else(|| format!("unknown variable `{v}`"));
        let row = |r: &String| rows.get(r.as_str()).copied().ok_or_else(|| format!("unknown row `{r}`"));
        named.map_ids(&IdMapper { var: &var, row: &row })
    }

    /// Checks the record-level invariants against `model`.
    pub fn check(&self, model: &MipModel) -> Result<(), String> {
        if self.scope.is_empty() {
            return Err(format!("{} record with empty scope", self.family()));
        }
        if let Some(v) = self.scope.iter().find(|&&v| v >= model.num_vars()) {
            return Err(format!("scope variable {v} outside the model"));
        }
        if let Some(r) = self.evidence.iter().find(|&&r| r >= model.num_rows()) {
            return Err(format!("evidence row {r} outside the model"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    /// Fraction of (group, option) pairs that must carry a bottleneck link row.
    pub link_fraction: f64,
    /// Rows scanned per family; further rows are ignored with a warning.
    pub row_cap: usize,
    pub tolerances: Tolerances,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            link_fraction: 0.8,
            row_cap: 200_000,
            tolerances: Tolerances::default(),
        }
    }
}

/// Records of one model plus the per-family record counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub records: Vec<SemanticRecord>,
    pub counts: BTreeMap<Family, usize>,
    pub warnings: Vec<String>,
}

impl DetectionReport {
    pub fn count(&self, family: Family) -> usize {
        self.counts.get(&family).copied().unwrap_or(0)
    }

    pub fn families(&self) -> Vec<Family> {
        self.counts.iter().filter(|(_, &n)| n > 0).map(|(&f, _)| f).collect()
    }

    /// JSON document with names in place of ids.
    pub fn to_json(&self, model: &MipModel) -> Result<serde_json::Value, String> {
        records_to_json(model, &self.records, &self.warnings)
    }
}

/// `{schema: 1, records: [...], counts: {...}}` with names in place of ids.
pub fn records_to_json(
    model: &MipModel,
    records: &[SemanticRecord],
    warnings: &[String],
) -> Result<serde_json::Value, String> {
    let named: Vec<NamedRecord> = records.iter().map(|r| r.to_named(model)).collect::<Result<_, _>>()?;
    let mut counts = BTreeMap::new();
    for r in records {
        *counts.entry(r.family().name()).or_insert(0usize) += 1;
    }
    Ok(serde_json::json!({
        "schema": 1,
        "records": named,
        "counts": counts,
        "warnings": warnings,
    }))
}

/// Reads a document written by [`records_to_json`] back into id-keyed records.
pub fn records_from_json(model: &MipModel, doc: &serde_json::Value) -> Result<Vec<SemanticRecord>, String> {
    match doc.get("schema").and_then(|s| s.as_u64()) {
        Some(1) => {}
        other => return Err(format!("unsupported records schema {other:?}")),
    }
    let named: Vec<NamedRecord> = serde_json::from_value(doc.get("records").cloned().unwrap_or_default())
        .map_err(|e| format!("malformed records: {e}"))?;
    named.iter().map(|n| SemanticRecord::from_named(model, n)).collect()
}

fn run_detector(family: Family, scan: &Scan) -> Vec<SemanticRecord> {
    let mut records = match family {
        Family::AllDifferent => alldifferent::detect(scan),
        Family::Cardinality => cardinality::detect(scan),
        Family::Channel => channel::detect(scan),
        Family::Cumulative => cumulative::detect(scan),
        Family::NValue => nvalue::detect(scan),
        Family::Stretch => stretch::detect(scan),
        Family::OneHotResource => onehot::detect(scan),
        Family::BottleneckExactOne => bottleneck::detect(scan),
        Family::RosteringWindow => rostering::detect(scan),
        Family::UnitCommitmentRamp => unit_commitment::detect(scan),
        Family::DisjPolyhedral => disjunction::detect(scan),
    };
    for r in &mut records {
        r.canonicalize();
    }
    records
}

/// All non-overlapping matches of one family.
pub fn detect_family(model: &MipModel, family: Family, config: &DetectConfig) -> Vec<SemanticRecord> {
    let scan = Scan::new(model, config, None);
    if let Some(w) = &scan.warning {
        log::warn!("{family}: {w}");
    }
    run_detector(family, &scan)
}

/// Runs every detector in priority order with row arbitration.
pub fn detect_all(model: &MipModel, config: &DetectConfig) -> DetectionReport {
    let mut blocked = vec![false; model.num_rows()];
    let mut report = DetectionReport::default();
    for family in Family::PRIORITY {
        let scan = Scan::new(model, config, Some(&blocked));
        if let Some(w) = &scan.warning {
            report.warnings.push(format!("{family}: {w}"));
        }
        let records = run_detector(family, &scan);
        drop(scan);
        for r in &records {
            if r.is_exact() {
                for &e in &r.evidence {
                    blocked[e] = true;
                }
            }
        }
        report.counts.insert(family, records.len());
        report.records.extend(records);
    }
    report
}
