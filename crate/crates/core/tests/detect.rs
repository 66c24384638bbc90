use proptest::prelude::*;
use structprop_core::detect::novelty::{default_registry, novelty_gate, FamilyDescriptor, Novelty, RowPattern};
use structprop_core::detect::*;
use structprop_core::model::{LinearRow, MipModel, Variable};
use structprop_core::synth::*;

fn cfg() -> DetectConfig {
    DetectConfig::default()
}

/// Two or three one-hot groups over a shared knapsack row, plus `extra`
/// independent binaries under their own cardinality row.
fn one_hot_model(costs: &[&[f64]], budget: f64, extra: usize) -> MipModel {
    let mut m = MipModel::new("oh");
    let mut cap = Vec::new();
    for (g, cs) in costs.iter().enumerate() {
        let vars: Vec<usize> = (0..cs.len()).map(|k| m.add_variable(Variable::binary(format!("y_{g}_{k}")))).collect();
        m.add_row(LinearRow::eq(format!("grp_{g}"), vars.iter().map(|&v| (v, 1.0)).collect(), 1.0));
        cap.extend(vars.iter().zip(cs.iter()).map(|(&v, &c)| (v, c)));
    }
    m.add_row(LinearRow::le("budget", cap, budget));
    if extra > 0 {
        let b: Vec<usize> = (0..extra).map(|i| m.add_variable(Variable::binary(format!("b{i}")))).collect();
        m.add_row(LinearRow::new("card", b.iter().map(|&v| (v, 1.0)).collect(), 1.0, 2.0));
    }
    m
}

#[test]
fn assignment_matrix_gives_one_all_different_record() {
    let inst = reverse_sample(Family::AllDifferent, SizeParams::new(3, 3), 0).unwrap();
    let recs = detect_family(&inst.model, Family::AllDifferent, &cfg());
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].scope.len(), 9);
    assert_eq!(recs[0], inst.ground_truth);
}

#[test]
fn example_one_structure_is_recovered_with_its_costs() {
    let m = one_hot_model(&[&[3.0, 5.0], &[4.0, 7.0]], 8.0, 0);
    let recs = detect_family(&m, Family::OneHotResource, &cfg());
    assert_eq!(recs.len(), 1);
    let RecordParams::OneHotResource(p) = &recs[0].params else { panic!() };
    assert_eq!(p.budget, 8.0);
    assert_eq!(p.costs, vec![vec![3.0, 5.0], vec![4.0, 7.0]]);
    assert_eq!(p.external_min, 0.0);
    assert_eq!(recs[0].evidence, vec![0, 1, 2]);
}

#[test]
fn disjoint_evidence_keeps_both_records() {
    let m = one_hot_model(&[&[3.0, 5.0], &[4.0, 7.0]], 8.0, 4);
    let report = detect_all(&m, &cfg());
    assert_eq!(report.families(), vec![Family::Cardinality, Family::OneHotResource]);
    assert_eq!(report.count(Family::Cardinality), 1);
}

#[test]
fn higher_priority_family_takes_shared_rows() {
    // Three-option groups are cardinality rows on their own.
    let m = one_hot_model(&[&[3.0, 5.0, 6.0], &[4.0, 7.0, 9.0]], 10.0, 0);
    let alone = detect_family(&m, Family::Cardinality, &cfg());
    assert_eq!(alone.len(), 2);
    let report = detect_all(&m, &cfg());
    assert_eq!(report.families(), vec![Family::OneHotResource]);
    assert_eq!(report.count(Family::Cardinality), 0);
}

#[test]
fn slack_budget_is_not_a_resource() {
    let m = one_hot_model(&[&[3.0, 5.0], &[4.0, 7.0]], 12.0, 0);
    assert!(detect_family(&m, Family::OneHotResource, &cfg()).is_empty());
}

#[test]
fn continuous_only_model_has_no_records() {
    let mut m = MipModel::new("lp");
    let x: Vec<usize> = (0..4).map(|i| m.add_variable(Variable::continuous(format!("x{i}"), 0.0, 5.0))).collect();
    m.add_row(LinearRow::eq("e", x.iter().map(|&v| (v, 1.0)).collect(), 1.0));
    m.add_row(LinearRow::le("k", vec![(x[0], 2.0), (x[1], 3.0)], 4.0));
    for family in Family::ALL {
        assert!(detect_family(&m, family, &cfg()).is_empty(), "{family}");
    }
    assert!(detect_all(&m, &cfg()).records.is_empty());
}

#[test]
fn records_cite_model_rows_and_never_share_evidence() {
    for family in Family::ALL {
        for seed in 0..5 {
            let base = reverse_sample(family, SizeParams::default(), seed).unwrap();
            let inst = obfuscate(&base, &ObfuscationConfig { seed, ..Default::default() }).unwrap();
            let report = detect_all(&inst.model, &cfg());
            let mut seen = std::collections::BTreeSet::new();
            for r in report.records.iter().filter(|r| r.is_exact()) {
                r.check(&inst.model).unwrap();
                for &e in &r.evidence {
                    assert!(seen.insert(e), "{family} seed {seed}: row {e} claimed twice");
                }
            }
        }
    }
}

#[test]
fn novelty_examples() {
    let registry = default_registry();
    let mut m = MipModel::new("k");
    let x: Vec<usize> = (0..3).map(|i| m.add_variable(Variable::integer(format!("x{i}"), 0.0, 4.0))).collect();
    m.add_row(LinearRow::le("knap", vec![(x[0], 2.0), (x[1], 3.0), (x[2], 5.0)], 9.0));
    let knap = SemanticRecord {
        params: RecordParams::Cardinality(CardinalityParams { vars: x.clone(), lower: 0.0, upper: 9.0 }),
        scope: x,
        evidence: vec![0],
        confidence: Confidence::Heuristic,
    };
    assert_eq!(novelty_gate(&m, &knap, &registry), Novelty::Duplicate);

    let oh = one_hot_model(&[&[3.0, 5.0], &[4.0, 7.0]], 8.0, 0);
    let rec = detect_family(&oh, Family::OneHotResource, &cfg()).remove(0);
    assert_eq!(novelty_gate(&oh, &rec, &registry), Novelty::Novel);

    let fingerprint = [RowPattern::ExactOne, RowPattern::Knapsack];
    let with_copy = [FamilyDescriptor::multi_row("onehot", &fingerprint)];
    assert_eq!(novelty_gate(&oh, &rec, &with_copy), Novelty::Duplicate);
    let partial = [FamilyDescriptor::multi_row("groups", &[RowPattern::ExactOne])];
    assert_eq!(novelty_gate(&oh, &rec, &partial), Novelty::Extension);
}

fn sorted_json(records: &[SemanticRecord]) -> Vec<String> {
    let mut v: Vec<String> = records.iter().map(|r| serde_json::to_string(&r.clone().canonical()).unwrap()).collect();
    v.sort();
    v
}

/// Detection on the plain instance, renamed through the permutation, equals
/// detection on the transformed one.
fn invariant_under(family: Family, seed: u64, permute: bool, flip: f64) -> Result<(), String> {
    let base = reverse_sample(family, SizeParams::default(), seed).map_err(|e| e.to_string())?;
    let obf = obfuscate(
        &base,
        &ObfuscationConfig {
            noise_rows: 0,
            permute_rows: permute,
            permute_vars: permute,
            sign_flip_prob: flip,
            seed: seed + 1000,
        },
    )
    .map_err(|e| e.to_string())?;
    let before = detect_all(&base.model, &cfg()).records;
    let after = detect_all(&obf.model, &cfg()).records;
    let renamed: Vec<SemanticRecord> = before
        .iter()
        .map(|r| r.remap(&obf.permutation.vars, &obf.permutation.rows))
        .collect::<Result<_, _>>()?;
    if sorted_json(&renamed) != sorted_json(&after) || after.is_empty() {
        return Err(format!("{family} seed {seed}: {} vs {} records", renamed.len(), after.len()));
    }
    Ok(())
}

#[test]
fn detection_is_invariant_under_permutation_and_sign_inversion() {
    for family in Family::ALL {
        for seed in 0..20 {
            invariant_under(family, seed, true, 0.0).unwrap();
            invariant_under(family, seed, false, 1.0).unwrap();
            invariant_under(family, seed, true, 1.0).unwrap();
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn invariance_holds_for_random_seeds(f in 0usize..11, seed in 1000u64..100_000, flip in 0.0f64..=1.0) {
        invariant_under(Family::ALL[f], seed, true, flip).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn json_records_round_trip(f in 0usize..11, seed in 0u64..10_000) {
        let inst = reverse_sample(Family::ALL[f], SizeParams::default(), seed).unwrap();
        let report = detect_all(&inst.model, &cfg());
        let doc = records_to_json(&inst.model, &report.records, &report.warnings).unwrap();
        let back = records_from_json(&inst.model, &doc).unwrap();
        prop_assert_eq!(back, report.records);
    }
}
