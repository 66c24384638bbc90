//! Unit-coefficient rows over three or more binaries.

use super::rows::Scan;
use super::{CardinalityParams, Confidence, RecordParams, SemanticRecord};

pub(super) fn detect(scan: &Scan) -> Vec<SemanticRecord> {
    let tol = scan.config.tolerances.integrality;
    let mut out = Vec::new();
    for &r in &scan.rows {
        let Some(u) = scan.binary_unit_form(r) else {
            continue;
        };
        let n = u.vars.len() as f64;
        if u.vars.len() < 3 || scan.is_redundant(r) {
            continue;
        }
        let lower = (u.lo - tol).ceil().max(0.0);
        let upper = (u.hi + tol).floor().min(n);
        out.push(SemanticRecord {
            params: RecordParams::Cardinality(CardinalityParams {
                vars: u.vars.clone(),
                lower,
                upper,
            }),
            scope: u.vars,
            evidence: vec![r],
            confidence: Confidence::Exact,
        });
    }
    out
}
