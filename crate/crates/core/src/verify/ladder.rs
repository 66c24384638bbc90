//! The per-family gate ladder: completeness, load, detector recovery,
//! propagation soundness, smoke, benchmark-ready.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{mpsc, Arc};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde_json::{json, Value};

use super::{verify_detector, verify_propagation_with, Gate, GateResult, GateStatus};
use crate::detect::{detect_all, records_to_json, DetectConfig, Family, SemanticRecord};
use crate::model::{DomainBox, MipModel};
use crate::outcome::PropagationOutcome;
use crate::propagate::{propagate_record, run_fixpoint, PropagatorConfig};
use crate::synth::{obfuscate, reverse_sample, reverse_sample_with, ObfuscationConfig, SizeParams, SynthOptions};

pub type DetectorFn = Arc<dyn Fn(&MipModel, &DetectConfig) -> Vec<SemanticRecord> + Send + Sync>;
pub type PropagatorFn =
    Arc<dyn Fn(&MipModel, &SemanticRecord, &mut DomainBox, &PropagatorConfig) -> PropagationOutcome + Send + Sync>;
pub type SerializerFn = Arc<dyn Fn(&MipModel, &[SemanticRecord]) -> Result<Value, String> + Send + Sync>;

const RECORD_SCHEMA: &str = include_str!("../../schemas/record.schema.json");

/// The published JSON schema of a named record.
pub fn record_schema() -> Value {
    serde_json::from_str(RECORD_SCHEMA).expect("bundled record schema is valid JSON")
}

fn schema_covers(schema: &Value, family: Family) -> bool {
    schema
        .pointer("/properties/family/enum")
        .and_then(Value::as_array)
        .is_some_and(|names| names.iter().any(|n| n.as_str() == Some(family.name())))
}

/// The four per-family components the ladder needs.
#[derive(Clone)]
pub struct FamilyArtifacts {
    pub family: Family,
    pub detector: Option<DetectorFn>,
    pub record_schema: Option<Value>,
    pub propagator: Option<PropagatorFn>,
    pub serializer: Option<SerializerFn>,
}

impl FamilyArtifacts {
    pub fn builtin(family: Family) -> Self {
        FamilyArtifacts {
            family,
            detector: Some(Arc::new(|m: &MipModel, c: &DetectConfig| detect_all(m, c).records)),
            record_schema: Some(record_schema()),
            propagator: Some(Arc::new(propagate_record)),
            serializer: Some(Arc::new(|m: &MipModel, r: &[SemanticRecord]| records_to_json(m, r, &[]))),
        }
    }

    /// Same components with a detector that never finds anything.
    pub fn with_empty_detector(mut self) -> Self {
        self.detector = Some(Arc::new(|_: &MipModel, _: &DetectConfig| Vec::new()));
        self
    }
}

#[derive(Debug, Clone)]
pub struct LadderConfig {
    pub detector_suite: usize,
    pub soundness_suite: usize,
    pub enumeration_cap: u64,
    pub obfuscation: ObfuscationConfig,
    pub detect: DetectConfig,
    pub propagator: PropagatorConfig,
    pub load_cap: Duration,
    pub detector_cap: Duration,
    pub soundness_cap: Duration,
    pub smoke_cap: Duration,
}

impl Default for LadderConfig {
    fn default() -> Self {
        LadderConfig {
            detector_suite: 50,
            soundness_suite: 100,
            enumeration_cap: 1_000_000,
            obfuscation: ObfuscationConfig::default(),
            detect: DetectConfig::default(),
            propagator: PropagatorConfig::default(),
            load_cap: Duration::from_secs(30),
            detector_cap: Duration::from_secs(120),
            soundness_cap: Duration::from_secs(120),
            smoke_cap: Duration::from_secs(90),
        }
    }
}

/// Ladder with the built-in components and default limits.
pub fn run_gate_ladder(family: Family, suite_seed: u64) -> Vec<GateResult> {
    run_gate_ladder_with(&FamilyArtifacts::builtin(family), suite_seed, &LadderConfig::default())
}

pub fn run_gate_ladder_with(artifacts: &FamilyArtifacts, suite_seed: u64, config: &LadderConfig) -> Vec<GateResult> {
    let mut out: Vec<GateResult> = Vec::with_capacity(Gate::LADDER.len());
    for gate in Gate::LADDER {
        if out.iter().any(|r| r.status != GateStatus::Passed) {
            out.push(GateResult::not_run(gate));
            continue;
        }
        let start = Instant::now();
        let result = match gate {
            Gate::ArtifactCompleteness => completeness(artifacts),
            Gate::Load => capped(gate, load(artifacts, config), start, config.load_cap),
            Gate::DetectorVerification => {
                capped(gate, detector_gate(artifacts, suite_seed, config), start, config.detector_cap)
            }
            Gate::PropagatorSoundness => {
                capped(gate, soundness_gate(artifacts, suite_seed, config), start, config.soundness_cap)
            }
            Gate::Smoke => smoke(artifacts, suite_seed, config),
            Gate::BenchmarkReady => GateResult::pass(gate, "all gates passed"),
        };
        out.push(result.timed(start));
    }
    out
}

fn capped(gate: Gate, result: GateResult, start: Instant, cap: Duration) -> GateResult {
    if result.passed && start.elapsed() > cap {
        GateResult::fail(gate, format!("timeout: took {:.1}s, cap {}s", start.elapsed().as_secs_f64(), cap.as_secs()))
    } else {
        result
    }
}

fn completeness(a: &FamilyArtifacts) -> GateResult {
    let mut missing = Vec::new();
    if a.detector.is_none() {
        missing.push("detector");
    }
    if !a.record_schema.as_ref().is_some_and(|s| schema_covers(s, a.family)) {
        missing.push("record schema");
    }
    if a.propagator.is_none() {
        missing.push("propagator");
    }
    if a.serializer.is_none() {
        missing.push("serializer");
    }
    if missing.is_empty() {
        GateResult::pass(Gate::ArtifactCompleteness, "detector, record schema, propagator, serializer")
    } else {
        GateResult::fail(Gate::ArtifactCompleteness, format!("missing: {}", missing.join(", ")))
    }
}

fn load(a: &FamilyArtifacts, config: &LadderConfig) -> GateResult {
    let gate = Gate::Load;
    let (Some(detector), Some(serializer)) = (&a.detector, &a.serializer) else {
        return GateResult::fail(gate, "components missing");
    };
    let empty = MipModel::new("empty");
    let run = catch_unwind(AssertUnwindSafe(|| {
        let records = detector(&empty, &config.detect);
        let doc = serializer(&empty, &records);
        (records.len(), doc)
    }));
    match run {
        Err(_) => GateResult::fail(gate, "panicked on an empty model"),
        Ok((n, _)) if n > 0 => GateResult::fail(gate, format!("{n} records on an empty model")),
        Ok((_, Err(e))) => GateResult::fail(gate, format!("serializer: {e}")),
        Ok((_, Ok(_))) => GateResult::pass(gate, "constructed on an empty model"),
    }
}

fn detector_gate(a: &FamilyArtifacts, suite_seed: u64, config: &LadderConfig) -> GateResult {
    let gate = Gate::DetectorVerification;
    let Some(detector) = &a.detector else {
        return GateResult::fail(gate, "no detector");
    };
    let n = config.detector_suite;
    let mut passed = 0;
    let mut first_failure = None;
    for i in 0..n as u64 {
        let seed = suite_seed + i;
        let instance = match reverse_sample(a.family, SizeParams::default(), seed)
            .and_then(|b| obfuscate(&b, &ObfuscationConfig { seed, ..config.obfuscation.clone() }))
        {
            Ok(x) => x,
            Err(e) => return GateResult::fail(gate, format!("generation failed at seed {seed}: {e}")),
        };
        let detected = match catch_unwind(AssertUnwindSafe(|| detector(&instance.model, &config.detect))) {
            Ok(d) => d,
            Err(_) => Vec::new(),
        };
        let r = verify_detector(&instance, &detected);
        if r.passed {
            passed += 1;
        } else if first_failure.is_none() {
            first_failure = Some(format!("seed {seed}: {}", r.detail));
        }
    }
    match first_failure {
        None => GateResult::pass(gate, format!("{passed}/{n} recovered")),
        Some(f) => GateResult::fail(gate, format!("{passed}/{n} recovered; first failure {f}")),
    }
}

fn soundness_gate(a: &FamilyArtifacts, suite_seed: u64, config: &LadderConfig) -> GateResult {
    let gate = Gate::PropagatorSoundness;
    let Some(propagator) = &a.propagator else {
        return GateResult::fail(gate, "no propagator");
    };
    let n = config.soundness_suite;
    let (mut passed, mut inconclusive, mut reducing) = (0, 0, 0);
    let mut first_failure = None;
    for i in 0..n as u64 {
        let seed = suite_seed + i;
        // Every other instance fixes a few binaries, so cutoff paths run too.
        let opts = SynthOptions {
            allow_infeasible: i % 2 == 1,
            ..SynthOptions::default()
        };
        let instance = match reverse_sample_with(a.family, SizeParams::default(), seed, &opts)
            .and_then(|b| obfuscate(&b, &ObfuscationConfig { seed, ..config.obfuscation.clone() }))
        {
            Ok(x) => x,
            Err(e) => return GateResult::fail(gate, format!("generation failed at seed {seed}: {e}")),
        };
        let changed = std::cell::Cell::new(false);
        let wrapped = |m: &MipModel, r: &SemanticRecord, d: &mut DomainBox| {
            let o = propagator(m, r, d, &config.propagator);
            changed.set(o.changed());
            o
        };
        let r = verify_propagation_with(&instance.model, &instance.ground_truth, config.enumeration_cap, &wrapped);
        match r.status {
            GateStatus::Passed => passed += 1,
            GateStatus::Inconclusive => inconclusive += 1,
            _ => {
                if first_failure.is_none() {
                    first_failure = Some(format!("seed {seed}: {}", r.detail));
                }
            }
        }
        if changed.get() {
            reducing += 1;
        }
    }
    if let Some(f) = first_failure {
        GateResult::fail(gate, format!("{passed}/{n} sound; first failure {f}"))
    } else if inconclusive > 0 {
        GateResult::inconclusive(gate, format!("{passed}/{n} sound, {inconclusive} inconclusive"))
    } else {
        GateResult::pass(gate, format!("{passed}/{n} sound, {reducing} with reductions"))
    }
}

fn smoke(a: &FamilyArtifacts, suite_seed: u64, config: &LadderConfig) -> GateResult {
    let gate = Gate::Smoke;
    let (Some(detector), Some(propagator)) = (a.detector.clone(), a.propagator.clone()) else {
        return GateResult::fail(gate, "components missing");
    };
    let family = a.family;
    let cfg = config.clone();
    let (tx, rx) = mpsc::channel();
    let start = Instant::now();
    std::thread::spawn(move || {
        let run = catch_unwind(AssertUnwindSafe(|| -> Result<String, String> {
            let base = reverse_sample(family, SizeParams::default(), suite_seed).map_err(|e| e.to_string())?;
            let inst = obfuscate(&base, &cfg.obfuscation).map_err(|e| e.to_string())?;
            let records = detector(&inst.model, &cfg.detect);
            let mut dom = DomainBox::from_model(&inst.model);
            for r in records.iter().filter(|r| r.family() == family) {
                propagator(&inst.model, r, &mut dom, &cfg.propagator);
            }
            let out = run_fixpoint(&inst.model, &records, &mut dom, &cfg.propagator);
            if (out.cutoff || dom.is_empty()) && inst.witness.is_some() {
                return Err("cutoff on a feasible instance".into());
            }
            Ok(format!("{} records, {} bound changes", records.len(), out.bound_changes.len()))
        }));
        let _ = tx.send(run.unwrap_or_else(|_| Err("panicked".into())));
    });
    match rx.recv_timeout(config.smoke_cap) {
        Ok(_) if start.elapsed() > config.smoke_cap => {
            GateResult::fail(gate, format!("timeout after {}s", config.smoke_cap.as_secs_f64()))
        }
        Ok(Ok(detail)) => GateResult::pass(gate, detail),
        Ok(Err(e)) => GateResult::fail(gate, e),
        Err(_) => GateResult::fail(gate, format!("timeout after {}s", config.smoke_cap.as_secs_f64())),
    }
}

/// Ladders for several families in parallel.
pub fn run_ladders(
    families: &[Family],
    suite_seed: u64,
    config: &LadderConfig,
) -> BTreeMap<Family, Vec<GateResult>> {
    families
        .par_iter()
        .map(|&f| (f, run_gate_ladder_with(&FamilyArtifacts::builtin(f), suite_seed, config)))
        .collect()
}

/// JSON report: per-family gate rows plus a per-gate pass count. Timings are
/// left out unless asked for, so reruns give identical bytes.
pub fn ladder_report(results: &BTreeMap<Family, Vec<GateResult>>, suite_seed: u64, timings: bool) -> Value {
    let mut summary: BTreeMap<&str, usize> = BTreeMap::new();
    let families: Vec<Value> = results
        .iter()
        .map(|(family, gates)| {
            let rows: Vec<Value> = gates
                .iter()
                .map(|g| {
                    let mut v = serde_json::to_value(g).expect("gate result serializes");
                    if !timings {
                        v.as_object_mut().unwrap().remove("elapsed_ms");
                    }
                    *summary.entry(g.gate.name()).or_insert(0) += g.passed as usize;
                    v
                })
                .collect();
            json!({
                "family": family.name(),
                "benchmark_ready": gates.iter().all(|g| g.passed),
                "gates": rows,
            })
        })
        .collect();
    json!({
        "schema": 1,
        "suite_seed": suite_seed,
        "families": families,
        "passed_per_gate": summary,
    })
}
