use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use structprop_core::detect::{records_from_json, Family};
use structprop_core::synth::PlantedInstance;
use structprop_core::verify::{record_schema, verify_detector};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_structprop"))
        .args(args)
        .env_remove("STRUCTPROP_SEED")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json_of(out: &Output) -> Value {
    assert_eq!(code(out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_valid(name: &str, doc: &Value) {
    let validator = jsonschema::validator_for(&schema(name)).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{name} output violates its schema: {errors:?}");
}

const INFEASIBLE_MPS: &str = "NAME bad
ROWS
 N obj
 G c0
COLUMNS
 M1 'MARKER' 'INTORG'
 x obj 1 c0 1
 M2 'MARKER' 'INTEND'
RHS
 rhs c0 2
BOUNDS
 UP bnd x 1
ENDATA
";

const NO_ROWS_MPS: &str = "NAME empty
ROWS
 N obj
COLUMNS
 M1 'MARKER' 'INTORG'
 x obj 1
 M2 'MARKER' 'INTEND'
BOUNDS
 UP bnd x 3
ENDATA
";

#[test]
fn synth_then_detect_passes_detector_gate() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    for family in Family::ALL {
        let synth = run(&["--seed", "7", "synth", "--family", family.name(), "--out", out_dir, "--json"]);
        let doc = json_of(&synth);
        let entry = &doc["instances"][0];
        let (mps, sidecar) = (entry["mps"].as_str().unwrap(), entry["sidecar"].as_str().unwrap());

        let detected = json_of(&run(&["detect", mps, "--json"]));
        let instance = PlantedInstance::read(Path::new(mps), Path::new(sidecar)).unwrap();
        let records = records_from_json(&instance.model, &detected).unwrap();
        let gate = verify_detector(&instance, &records);
        assert!(gate.passed, "{family}: {}", gate.detail);
    }
}

#[test]
fn verify_all_families_is_benchmark_ready() {
    let out = run(&["verify", "--family", "all", "--json"]);
    let doc = json_of(&out);
    assert_valid("verify", &doc);
    let families = doc["families"].as_array().unwrap();
    assert_eq!(families.len(), Family::ALL.len());
    for f in families {
        assert_eq!(f["benchmark_ready"], true, "{}", f);
    }
}

#[test]
fn zero_row_model_has_no_records() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("empty.mps");
    fs::write(&file, NO_ROWS_MPS).unwrap();
    let out = run(&["detect", file.to_str().unwrap(), "--json"]);
    let doc = json_of(&out);
    assert_eq!(doc["records"], Value::Array(vec![]));
    assert_valid("detect", &doc);
}

#[test]
fn unknown_flags_are_usage_errors() {
    for sub in ["detect", "propagate", "synth", "verify", "search", "bench"] {
        let out = run(&[sub, "--no-such-flag"]);
        assert_eq!(code(&out), 2, "{sub}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"), "{sub}");
        assert!(out.stdout.is_empty());
    }
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["synth", "--family", "Nope", "--out", "x"])), 2);
    assert_eq!(code(&run(&["--tolerance", "-1", "verify"])), 2);
}

#[test]
fn unreadable_input_is_a_usage_error() {
    let out = run(&["search", "/no/such/file.mps"]);
    assert_eq!(code(&out), 2);
    assert!(out.stdout.is_empty());
}

#[test]
fn asserted_feasibility_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.mps");
    fs::write(&file, INFEASIBLE_MPS).unwrap();
    let f = file.to_str().unwrap();

    assert_eq!(code(&run(&["search", f, "--quiet"])), 0);
    assert_eq!(code(&run(&["search", f, "--expect-feasible", "--quiet"])), 1);
    assert_eq!(code(&run(&["propagate", f, "--detect", "--quiet"])), 0);
    let out = run(&["propagate", f, "--detect", "--expect-feasible", "--json"]);
    assert_eq!(code(&out), 1);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["cutoff"], true);
}

#[test]
fn every_json_output_matches_its_schema_and_repeats_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst");
    let inst_s = inst.to_str().unwrap();
    let records = dir.path().join("records.json");

    let mut outputs: Vec<(&str, Vec<String>)> = Vec::new();
    for family in ["DisjPolyhedral", "OneHotResource", "Cardinality"] {
        let args = ["--seed", "11", "synth", "--family", family, "--count", "2", "--out", inst_s, "--json"];
        outputs.push(("synth", args.iter().map(|s| s.to_string()).collect()));
        json_of(&run(&args));
    }
    let mps = inst.join("disjpolyhedral_11.mps");
    let mps_s = mps.to_str().unwrap().to_string();
    json_of(&run(&["detect", &mps_s, "--records-out", records.to_str().unwrap(), "--json"]));
    let strs = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    outputs.push(("detect", strs(&["detect", &mps_s, "--json"])));
    outputs.push(("propagate", strs(&["propagate", &mps_s, "--records", records.to_str().unwrap(), "--json"])));
    outputs.push(("propagate", strs(&["propagate", &mps_s, "--detect", "--fixpoint-rounds", "1", "--json"])));
    outputs.push(("search", strs(&["search", &mps_s, "--propfreq", "all", "--json"])));
    outputs.push(("search", strs(&["search", &mps_s, "--no-records", "--branch", "most-constrained", "--json"])));
    outputs.push(("verify", strs(&["verify", "--family", "OneHotResource", "--suite-seed", "4", "--json"])));
    outputs.push(("bench", strs(&["bench", "--dir", inst_s, "--jobs", "3", "--json"])));

    for (schema_name, args) in &outputs {
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let first = run(&argv);
        let doc = json_of(&first);
        assert_valid(schema_name, &doc);
        let second = run(&argv);
        assert_eq!(first.stdout, second.stdout, "{argv:?} is not repeatable");
    }

    // Timings are opt-in and still fit the schemas.
    let timed = json_of(&run(&["search", &mps_s, "--json", "--timings"]));
    assert!(timed["solve_time_ms"].is_number());
    assert_valid("search", &timed);
    let timed = json_of(&run(&["bench", "--dir", inst_s, "--json", "--timings"]));
    assert_valid("bench", &timed);
}

#[test]
fn bench_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst");
    let rep = dir.path().join("rep");
    json_of(&run(&["synth", "--family", "Channel", "--count", "2", "--out", inst.to_str().unwrap(), "--json"]));
    let out = run(&[
        "bench",
        "--dir",
        inst.to_str().unwrap(),
        "--families",
        "Channel,DisjPolyhedral",
        "--time-limit",
        "5",
        "--out",
        rep.to_str().unwrap(),
        "--suite",
        "desk",
        "--quiet",
    ]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    for name in ["desk_coverage.csv", "desk_performance.csv", "desk_diagnostics.csv", "desk.json"] {
        assert!(rep.join(name).is_file(), "{name}");
    }
    let doc: Value = serde_json::from_str(&fs::read_to_string(rep.join("desk.json")).unwrap()).unwrap();
    assert_valid("bench", &doc);
    let channel = doc["coverage"].as_array().unwrap().iter().find(|r| r["family"] == "Channel").unwrap();
    assert_eq!(channel["detected"], 2);
}

#[test]
fn seed_env_var_is_a_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let with_env = Command::new(env!("CARGO_BIN_EXE_structprop"))
        .args(["synth", "--family", "Stretch", "--out", d, "--json"])
        .env("STRUCTPROP_SEED", "42")
        .output()
        .unwrap();
    let doc = json_of(&with_env);
    assert_eq!(doc["instances"][0]["seed"], 42);
    let flag_wins = Command::new(env!("CARGO_BIN_EXE_structprop"))
        .args(["--seed", "5", "synth", "--family", "Stretch", "--out", d, "--json"])
        .env("STRUCTPROP_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(json_of(&flag_wins)["instances"][0]["seed"], 5);
}

#[test]
fn logs_stay_off_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("m.mps");
    fs::write(&file, NO_ROWS_MPS).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_structprop"))
        .args(["detect", file.to_str().unwrap(), "--json"])
        .env("RUST_LOG", "trace")
        .output()
        .unwrap();
    serde_json::from_slice::<Value>(&out.stdout).expect("stdout holds only the document");
}

#[test]
fn embedded_record_schema_matches_core() {
    let mut expected = record_schema();
    let obj = expected.as_object_mut().unwrap();
    for k in ["$schema", "$id", "title"] {
        obj.remove(k);
    }
    assert_eq!(schema("detect")["$defs"]["record"], expected);
}
