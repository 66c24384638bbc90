use structprop_core::detect::{detect_all, DetectConfig, Family};
use structprop_core::search::*;
use structprop_core::synth::*;
use structprop_core::verify::enumerate_feasible;

const FAMILIES: [Family; 10] = [
    Family::AllDifferent,
    Family::Cardinality,
    Family::Channel,
    Family::Cumulative,
    Family::NValue,
    Family::Stretch,
    Family::OneHotResource,
    Family::BottleneckExactOne,
    Family::RosteringWindow,
    Family::DisjPolyhedral,
];

fn instance(family: Family, seed: u64) -> PlantedInstance {
    let opts = SynthOptions {
        allow_infeasible: seed % 2 == 1,
        ..Default::default()
    };
    let base = reverse_sample_with(family, SizeParams::default(), seed, &opts).unwrap();
    obfuscate(&base, &ObfuscationConfig { seed, ..Default::default() }).unwrap()
}

/// Minimum over every enumerated point, `None` when nothing is feasible.
fn oracle_optimum(inst: &PlantedInstance) -> Option<f64> {
    let all: Vec<usize> = (0..inst.model.num_vars()).collect();
    let e = enumerate_feasible(&inst.model, &all, 5_000_000).unwrap();
    assert!(!e.truncated);
    e.feasible_points
        .iter()
        .filter(|p| inst.model.rows.iter().all(|r| r.is_satisfied(p, 1e-9)))
        .map(|p| inst.model.objective_value(p))
        .min_by(f64::total_cmp)
}

#[test]
fn both_propfreqs_match_the_enumeration_optimum() {
    let mut infeasible = 0;
    for family in FAMILIES {
        for seed in 0..5 {
            let inst = instance(family, seed);
            let records = detect_all(&inst.model, &DetectConfig::default()).records;
            let want = oracle_optimum(&inst);
            let mut results = Vec::new();
            for pf in [PropFreq::RootOnly, PropFreq::EveryNode] {
                let r = dfs_solve(&inst.model, &records, &SearchConfig::with_propfreq(pf)).unwrap();
                match want {
                    Some(opt) => {
                        assert_eq!(r.stats.status, SearchStatus::Optimal, "{family} seed {seed} {pf:?}");
                        assert_eq!(r.objective, Some(opt), "{family} seed {seed} {pf:?}");
                    }
                    None => assert_eq!(r.stats.status, SearchStatus::Infeasible, "{family} seed {seed} {pf:?}"),
                }
                assert!(r.stats.cutoffs <= r.stats.handler_calls);
                results.push((r.stats.status, r.objective));
            }
            assert_eq!(results[0], results[1]);
            infeasible += want.is_none() as usize;
        }
    }
    assert!(infeasible > 0);
}

#[test]
fn incumbent_is_feasible_and_matches_its_objective() {
    for family in FAMILIES {
        let inst = instance(family, 2);
        let r = dfs_solve(&inst.model, &[], &SearchConfig::default()).unwrap();
        let x = r.incumbent.expect("feasible plant");
        assert!(inst.model.rows.iter().all(|row| row.is_satisfied(&x, 1e-9)));
        assert_eq!(r.objective, Some(inst.model.objective_value(&x)));
    }
}

#[test]
fn every_node_propagation_never_needs_more_disjunction_nodes() {
    let (mut root, mut every) = (0u64, 0u64);
    for seed in 0..20 {
        let inst = instance(Family::DisjPolyhedral, seed * 2);
        let records = detect_all(&inst.model, &DetectConfig::default()).records;
        let a = dfs_solve(&inst.model, &records, &SearchConfig::with_propfreq(PropFreq::RootOnly)).unwrap();
        let b = dfs_solve(&inst.model, &records, &SearchConfig::with_propfreq(PropFreq::EveryNode)).unwrap();
        assert_eq!(a.objective, b.objective);
        root += a.stats.nodes;
        every += b.stats.nodes;
    }
    assert!(every <= root, "every_node {every} vs root_only {root}");
}

#[test]
fn root_only_calls_are_bounded_by_root_rounds() {
    for family in FAMILIES {
        let inst = instance(family, 4);
        let records = detect_all(&inst.model, &DetectConfig::default()).records;
        let cfg = SearchConfig::default();
        let r = dfs_solve(&inst.model, &records, &cfg).unwrap();
        assert!(r.stats.handler_calls <= (records.len() * cfg.propagator.rounds()) as u64);
        let base = dfs_solve(&inst.model, &[], &cfg).unwrap();
        assert_eq!(base.stats.handler_calls, 0);
        assert_eq!(base.objective, r.objective);
    }
}

#[test]
fn stats_serialize_with_diagnostic_names() {
    let inst = instance(Family::Channel, 0);
    let r = dfs_solve(&inst.model, &[], &SearchConfig::default()).unwrap();
    let v = serde_json::to_value(&r.stats).unwrap();
    for key in ["nodes", "calls", "domain_reductions", "cutoffs", "prop_time_ms", "status"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["status"], "optimal");
}
