use structprop_core::detect::{
    detect_all, detect_family, BranchRow, Confidence, DetectConfig, DisjBranch, DisjPolyhedralParams, DisjVariant, Family,
    RecordParams, SemanticRecord,
};
use structprop_core::model::{LinearRow, MipModel, Variable};
use structprop_core::propagate::{propagate_record, run_fixpoint, PropagatorConfig};
use structprop_core::synth::*;
use structprop_core::verify::enumerate_feasible;
use structprop_core::DomainBox;

/// Per-variable hull of every enumerated feasible point.
fn feasible_hull(model: &MipModel) -> Option<Vec<(f64, f64)>> {
    let all: Vec<usize> = (0..model.num_vars()).collect();
    let e = enumerate_feasible(model, &all, 1_000_000).unwrap();
    assert!(!e.truncated);
    if e.feasible_points.is_empty() {
        return None;
    }
    Some(
        (0..model.num_vars())
            .map(|v| {
                let vals = e.feasible_points.iter().map(|p| p[v]);
                (vals.clone().fold(f64::INFINITY, f64::min), vals.fold(f64::NEG_INFINITY, f64::max))
            })
            .collect(),
    )
}

fn only_record(model: &MipModel, family: Family) -> SemanticRecord {
    let mut recs = detect_family(model, family, &DetectConfig::default());
    assert_eq!(recs.len(), 1, "{family}");
    recs.remove(0)
}

fn propagate_alone(model: &MipModel, rec: &SemanticRecord) -> DomainBox {
    let mut dom = DomainBox::from_model(model);
    propagate_record(model, rec, &mut dom, &PropagatorConfig::default());
    dom
}

fn assert_matches_hull(model: &MipModel, dom: &DomainBox) {
    let hull = feasible_hull(model).expect("feasible");
    for (v, &(lo, hi)) in hull.iter().enumerate() {
        assert_eq!((dom.lb(v), dom.ub(v)), (lo, hi), "{}", model.variables[v].name);
    }
}

fn one_hot(costs: [[f64; 2]; 2], budget: f64) -> MipModel {
    let mut m = MipModel::new("oh");
    let mut cap = Vec::new();
    for (g, cs) in costs.iter().enumerate() {
        let a = m.add_variable(Variable::binary(format!("y_{g}_0")));
        let b = m.add_variable(Variable::binary(format!("y_{g}_1")));
        m.add_row(LinearRow::eq(format!("g{g}"), vec![(a, 1.0), (b, 1.0)], 1.0));
        cap.push((a, cs[0]));
        cap.push((b, cs[1]));
    }
    m.add_row(LinearRow::le("cap", cap, budget));
    m
}

#[test]
fn one_hot_budget_eliminates_expensive_options() {
    let m = one_hot([[3.0, 5.0], [4.0, 7.0]], 8.0);
    let rec = only_record(&m, Family::OneHotResource);
    let dom = propagate_alone(&m, &rec);
    assert_eq!(dom.upper, vec![1.0, 0.0, 1.0, 0.0]);
    assert_eq!(dom.lower, vec![1.0, 0.0, 1.0, 0.0]);
    assert_matches_hull(&m, &dom);
}

fn bottleneck(z_ub: f64) -> MipModel {
    let mut m = MipModel::new("bn");
    let w = [[2.0, 5.0], [3.0, 6.0]];
    let z_name = "z";
    let mut x = Vec::new();
    for (i, ws) in w.iter().enumerate() {
        let a = m.add_variable(Variable::binary(format!("x_{i}_0")));
        let b = m.add_variable(Variable::binary(format!("x_{i}_1")));
        m.add_row(LinearRow::eq(format!("grp{i}"), vec![(a, 1.0), (b, 1.0)], 1.0));
        x.push([(a, ws[0]), (b, ws[1])]);
    }
    let z = m.add_variable(Variable::integer(z_name, 0.0, z_ub));
    for (v, wt) in x.iter().flatten() {
        m.add_row(LinearRow::ge(format!("link_{v}"), vec![(z, 1.0), (*v, -wt)], 0.0));
    }
    m
}

#[test]
fn bottleneck_lower_bound_is_the_max_of_group_minima() {
    let m = bottleneck(20.0);
    let rec = only_record(&m, Family::BottleneckExactOne);
    let dom = propagate_alone(&m, &rec);
    assert_eq!(dom.lb(4), 3.0);
    let hull = feasible_hull(&m).unwrap();
    assert_eq!(hull[4].0, 3.0);
}

#[test]
fn bottleneck_upper_bound_collapses_both_groups() {
    let m = bottleneck(4.0);
    let rec = only_record(&m, Family::BottleneckExactOne);
    let dom = propagate_alone(&m, &rec);
    assert_eq!(dom.lower[..4], [1.0, 0.0, 1.0, 0.0]);
    assert_eq!(dom.upper[..4], [1.0, 0.0, 1.0, 0.0]);
    assert_matches_hull(&m, &dom);
}

/// `y = 0 => x <= 2`, `y = 1 => 5 <= x <= 7`, big-M encoded over x in [0, 10].
/// The record is written out by hand: single-variable branch rows are plain
/// bounds, which detection leaves to row tightening.
fn disjunction() -> (MipModel, SemanticRecord) {
    let mut m = MipModel::new("dj");
    let x = m.add_variable(Variable::integer("x", 0.0, 10.0));
    let y = m.add_variable(Variable::binary("y"));
    let off = m.add_row(LinearRow::le("off", vec![(x, 1.0), (y, -8.0)], 2.0));
    let on_lo = m.add_row(LinearRow::le("on_lo", vec![(x, -1.0), (y, 5.0)], 0.0));
    let on_hi = m.add_row(LinearRow::le("on_hi", vec![(x, 1.0), (y, 3.0)], 10.0));
    let row = |row, c: f64, rhs| BranchRow { row, terms: vec![(x, c)], rhs };
    let rec = SemanticRecord {
        params: RecordParams::DisjPolyhedral(DisjPolyhedralParams {
            variant: DisjVariant::BinarySelector,
            branches: vec![
                DisjBranch { selector: y, active_value: 0.0, rows: vec![row(off, 1.0, 2.0)] },
                DisjBranch { selector: y, active_value: 1.0, rows: vec![row(on_lo, -1.0, -5.0), row(on_hi, 1.0, 7.0)] },
            ],
            touched: vec![x],
        }),
        scope: vec![x, y],
        evidence: vec![off, on_lo, on_hi],
        confidence: Confidence::Exact,
    };
    rec.check(&m).unwrap();
    (m, rec)
}

#[test]
fn disjunction_envelope_and_selector_fixing() {
    let (m, rec) = disjunction();
    // Row tightening alone leaves x in [0, 10].
    let mut rows_only = DomainBox::from_model(&m);
    run_fixpoint(&m, &[], &mut rows_only, &PropagatorConfig::default());
    assert_eq!(rows_only.ub(0), 10.0);
    let dom = propagate_alone(&m, &rec);
    assert_eq!((dom.lb(0), dom.ub(0)), (0.0, 7.0));
    assert_matches_hull(&m, &dom);

    // Same disjunction with ub(x) = 4: the on-branch is empty.
    let mut small = DomainBox::from_model(&m);
    small.restrict(0, 0.0, 4.0);
    propagate_record(&m, &rec, &mut small, &PropagatorConfig::default());
    assert_eq!((small.lb(1), small.ub(1)), (0.0, 0.0));
    assert_eq!(small.ub(0), 2.0);
    let mut restricted = m.clone();
    restricted.variables[0].upper = 4.0;
    assert_matches_hull(&restricted, &small);
}

#[test]
fn coupled_records_reach_further_than_either_alone() {
    let mut m = one_hot([[3.0, 5.0], [4.0, 7.0]], 8.0);
    let b = m.add_variable(Variable::binary("b"));
    m.add_row(LinearRow::ge("cover", vec![(1, 1.0), (3, 1.0), (b, 1.0)], 1.0));
    let records = detect_all(&m, &DetectConfig::default()).records;
    assert_eq!(records.len(), 2);
    let config = PropagatorConfig {
        include_rows: false,
        ..Default::default()
    };
    for rec in &records {
        let mut d = DomainBox::from_model(&m);
        propagate_record(&m, rec, &mut d, &config);
        assert_eq!(d.lb(b), 0.0, "{} alone", rec.family());
    }
    let mut dom = DomainBox::from_model(&m);
    run_fixpoint(&m, &records, &mut dom, &config);
    assert_eq!(dom.lb(b), 1.0);
    assert_matches_hull(&m, &dom);
}

#[test]
fn fixpoint_is_deterministic_apart_from_timing() {
    for family in Family::ALL {
        let base = reverse_sample(family, SizeParams::default(), 3).unwrap();
        let inst = obfuscate(&base, &ObfuscationConfig { seed: 3, ..Default::default() }).unwrap();
        let records = detect_all(&inst.model, &DetectConfig::default()).records;
        let run = || {
            let mut dom = DomainBox::from_model(&inst.model);
            let mut out = run_fixpoint(&inst.model, &records, &mut dom, &PropagatorConfig::default());
            out.prop_time = Default::default();
            (dom, out)
        };
        assert_eq!(run(), run(), "{family}");
    }
}

#[test]
fn fixpoint_only_shrinks_and_reports_cutoffs_on_empty_regions() {
    let opts = SynthOptions {
        allow_infeasible: true,
        ..Default::default()
    };
    for family in Family::ALL {
        for seed in 0..10 {
            let inst = reverse_sample_with(family, SizeParams::default(), seed, &opts).unwrap();
            let records = detect_all(&inst.model, &DetectConfig::default()).records;
            let start = DomainBox::from_model(&inst.model);
            let mut dom = start.clone();
            let out = run_fixpoint(&inst.model, &records, &mut dom, &PropagatorConfig::default());
            if out.cutoff {
                assert!(dom.is_empty());
                let e = enumerate_feasible(&inst.model, &inst.ground_truth.scope, 1_000_000).unwrap();
                assert!(e.is_empty(), "{family} seed {seed}");
            } else {
                assert!(dom.is_subset_of(&start).unwrap());
            }
            for c in &out.bound_changes {
                assert!(c.new != c.old);
            }
        }
    }
}
