//! Detector recovery and propagation soundness checks, and the gate ladder
//! that strings them together per family.

mod enumerate;
mod ladder;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::SemanticRecord;
use crate::model::{is_valid_reduction, DomainBox, MipModel, VarId};
use crate::outcome::PropagationOutcome;
use crate::propagate::{propagate_record, PropagatorConfig};
use crate::synth::PlantedInstance;

pub use enumerate::{enumerate_feasible, enumerate_feasible_in, EnumerationOptions, EnumerationResult};
pub use ladder::{
    ladder_report, record_schema, run_gate_ladder, run_gate_ladder_with, run_ladders, DetectorFn, FamilyArtifacts,
    LadderConfig, PropagatorFn, SerializerFn,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("variable {0} has an infinite domain")]
    InfiniteDomain(VarId),
    #[error("variable {0} is continuous and strict mode forbids it in scope")]
    ContinuousInScope(VarId),
    #[error("variable {0} is not in the model")]
    UnknownVariable(VarId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    ArtifactCompleteness,
    Load,
    DetectorVerification,
    PropagatorSoundness,
    Smoke,
    BenchmarkReady,
}

impl Gate {
    pub const LADDER: [Gate; 6] = [
        Gate::ArtifactCompleteness,
        Gate::Load,
        Gate::DetectorVerification,
        Gate::PropagatorSoundness,
        Gate::Smoke,
        Gate::BenchmarkReady,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Gate::ArtifactCompleteness => "artifact_completeness",
            Gate::Load => "load",
            Gate::DetectorVerification => "detector_verification",
            Gate::PropagatorSoundness => "propagator_soundness",
            Gate::Smoke => "smoke",
            Gate::BenchmarkReady => "benchmark_ready",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateStatus {
    Passed,
    Failed,
    /// The check could not decide (truncated enumeration).
    Inconclusive,
    /// Skipped because an earlier gate did not pass.
    NotRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    pub gate: Gate,
    pub status: GateStatus,
    pub passed: bool,
    pub detail: String,
    #[serde(rename = "elapsed_ms", with = "crate::outcome::duration_ms")]
    pub elapsed: Duration,
}

impl GateResult {
    fn new(gate: Gate, status: GateStatus, detail: impl Into<String>) -> Self {
        GateResult {
            gate,
            status,
            passed: status == GateStatus::Passed,
            detail: detail.into(),
            elapsed: Duration::ZERO,
        }
    }

    pub fn pass(gate: Gate, detail: impl Into<String>) -> Self {
        Self::new(gate, GateStatus::Passed, detail)
    }

    pub fn fail(gate: Gate, detail: impl Into<String>) -> Self {
        Self::new(gate, GateStatus::Failed, detail)
    }

    pub fn inconclusive(gate: Gate, detail: impl Into<String>) -> Self {
        Self::new(gate, GateStatus::Inconclusive, detail)
    }

    pub fn not_run(gate: Gate) -> Self {
        Self::new(gate, GateStatus::NotRun, "not run")
    }

    pub fn timed(mut self, since: Instant) -> Self {
        self.elapsed = since.elapsed();
        self
    }
}

/// Passes iff `detected` holds exactly one record of the planted family and
/// it equals the ground truth (both canonical).
pub fn verify_detector(instance: &PlantedInstance, detected: &[SemanticRecord]) -> GateResult {
    let start = Instant::now();
    let gate = Gate::DetectorVerification;
    let family = instance.family;
    if detected.is_empty() {
        return GateResult::fail(gate, "no records").timed(start);
    }
    let same: Vec<SemanticRecord> = detected
        .iter()
        .filter(|r| r.family() == family)
        .map(|r| r.clone().canonical())
        .collect();
    let result = match same.as_slice() {
        [] => GateResult::fail(gate, format!("no {family} records")),
        [found] => {
            let want = instance.ground_truth.clone().canonical();
            if found.scope != want.scope {
                let missing: Vec<VarId> = want.scope.iter().copied().filter(|v| !found.scope.contains(v)).collect();
                let extra: Vec<VarId> = found.scope.iter().copied().filter(|v| !want.scope.contains(v)).collect();
                GateResult::fail(gate, format!("scope differs: missing {missing:?}, extra {extra:?}"))
            } else if found.params != want.params {
                GateResult::fail(gate, format!("{family} params differ from ground truth"))
            } else {
                GateResult::pass(gate, format!("{family} recovered"))
            }
        }
        many => GateResult::fail(gate, format!("{} {family} records, expected 1", many.len())),
    };
    result.timed(start)
}

/// Propagator under test: shrinks the box in place.
pub type Propagator<'a> = dyn Fn(&MipModel, &SemanticRecord, &mut DomainBox) -> PropagationOutcome + 'a;

/// Runs the built-in propagator of `record` on the model bounds and checks
/// the result against the enumerated feasible set.
pub fn verify_propagation(model: &MipModel, record: &SemanticRecord, cap: u64) -> GateResult {
    let config = PropagatorConfig::default();
    verify_propagation_with(model, record, cap, &|m, r, d| propagate_record(m, r, d, &config))
}

pub fn verify_propagation_with(
    model: &MipModel,
    record: &SemanticRecord,
    cap: u64,
    propagator: &Propagator,
) -> GateResult {
    let start = Instant::now();
    let gate = Gate::PropagatorSoundness;
    let original = DomainBox::from_model(model);
    let enumeration = match enumerate_feasible(model, &record.scope, cap) {
        Ok(e) => e,
        Err(e) => return GateResult::fail(gate, format!("enumeration: {e}")).timed(start),
    };
    if enumeration.truncated {
        return GateResult::inconclusive(
            gate,
            format!("inconclusive: enumeration truncated after {} nodes", enumeration.nodes_visited),
        )
        .timed(start);
    }
    let mut reduced = original.clone();
    let outcome = propagator(model, record, &mut reduced);
    let points = &enumeration.feasible_points;
    let result = if outcome.cutoff && !points.is_empty() {
        GateResult::fail(
            gate,
            format!("reported a cutoff despite {} feasible assignments", enumeration.assignments(model).len()),
        )
    } else {
        match is_valid_reduction(&original, &reduced, points) {
            Ok(true) => GateResult::pass(
                gate,
                format!(
                    "{} bound changes kept all {} feasible assignments",
                    outcome.bound_changes.len(),
                    enumeration.assignments(model).len()
                ),
            ),
            Ok(false) => {
                let lost = points.iter().find(|p| !reduced.contains(p, 1e-9));
                match lost {
                    Some(p) => {
                        let shown: Vec<f64> = record.scope.iter().map(|&v| p[v]).collect();
                        GateResult::fail(gate, format!("excluded feasible point {shown:?} on scope"))
                    }
                    None => GateResult::fail(gate, "reduced box leaves the original box"),
                }
            }
            Err(e) => GateResult::fail(gate, e.to_string()),
        }
    };
    result.timed(start)
}
