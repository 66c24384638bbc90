use proptest::prelude::*;
use structprop_core::detect::Family;
use structprop_core::model::{LinearRow, MipModel, ObjectiveSense, VarType, Variable};
use structprop_core::mps::{parse_mps, write_mps};
use structprop_core::synth::*;

fn arb_bound() -> impl Strategy<Value = f64> {
    prop_oneof![(-50i32..50).prop_map(f64::from), (-1e4f64..1e4), Just(0.0)]
}

fn arb_variable(i: usize) -> impl Strategy<Value = Variable> {
    prop_oneof![
        Just(Variable::binary(format!("b{i}"))),
        (arb_bound(), 0i32..20).prop_map(move |(lo, w)| {
            // MPS has no way to tell these apart from binaries.
            let mut v = Variable::integer(format!("n{i}"), lo.round(), lo.round() + f64::from(w));
            if v.lower >= 0.0 && v.upper <= 1.0 {
                v.var_type = VarType::Binary;
            }
            v
        }),
        (arb_bound(), 0.0f64..100.0, any::<bool>(), any::<bool>()).prop_map(move |(lo, w, free_lo, free_hi)| {
            let lower = if free_lo { f64::NEG_INFINITY } else { lo };
            let upper = if free_hi { f64::INFINITY } else { lo + w };
            Variable::continuous(format!("c{i}"), lower, upper)
        }),
    ]
}

fn arb_model() -> impl Strategy<Value = MipModel> {
    (1usize..8).prop_flat_map(|n| {
        let vars: Vec<_> = (0..n).map(arb_variable).collect();
        let row = (
            prop::collection::btree_map(0..n, prop_oneof![(-9i32..=9).prop_filter("nonzero", |c| *c != 0).prop_map(f64::from), -1e3f64..1e3], 0..=n),
            arb_bound(),
            0u8..5,
            0.0f64..20.0,
        );
        let obj = prop::collection::btree_map(0..n, -20i32..=20, 0..=n);
        (vars, prop::collection::vec(row, 0..6), obj, any::<bool>(), -5i32..5)
    })
    .prop_map(|(vars, rows, obj, maximize, offset)| {
        let mut m = MipModel::new("prop");
        for v in vars {
            m.add_variable(v);
        }
        for (i, (terms, side, kind, width)) in rows.into_iter().enumerate() {
            let terms: Vec<(usize, f64)> = terms.into_iter().filter(|t| t.1 != 0.0).collect();
            let (lhs, rhs) = match kind {
                0 => (f64::NEG_INFINITY, side),
                1 => (side, f64::INFINITY),
                2 => (side, side),
                3 => (side, side + width),
                _ => (f64::NEG_INFINITY, f64::INFINITY),
            };
            m.add_row(LinearRow::new(format!("r{i}"), terms, lhs, rhs));
        }
        let obj: Vec<(usize, f64)> = obj.into_iter().filter(|t| t.1 != 0).map(|(v, c)| (v, f64::from(c))).collect();
        let sense = if maximize { ObjectiveSense::Maximize } else { ObjectiveSense::Minimize };
        m.set_objective(obj, sense);
        m.objective_offset = f64::from(offset);
        m
    })
}

proptest! {
    #[test]
    fn write_then_parse_is_identity(m in arb_model()) {
        let text = write_mps(&m).unwrap();
        let back = parse_mps(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(write_mps(&back).unwrap(), text);
    }

    #[test]
    fn parser_is_total_on_garbage(bytes in prop::collection::vec(any::<u8>(), 0..400)) {
        let _ = parse_mps(&bytes);
    }

    #[test]
    fn parser_is_total_on_truncated_and_mangled_documents(m in arb_model(), cut in 0.0f64..1.0, flip in any::<u8>()) {
        let text = write_mps(&m).unwrap();
        let at = (text.len() as f64 * cut) as usize;
        let end = text.windows(6).position(|w| w == b"ENDATA").unwrap();
        let cut_result = parse_mps(&text[..at]);
        prop_assert!(at > end || cut_result.is_err());
        let mut mangled = text.clone();
        if !mangled.is_empty() {
            mangled[at.min(text.len() - 1)] = flip;
            let _ = parse_mps(&mangled);
        }
    }
}

#[test]
fn twenty_file_corpus_reparses_identically() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..20u64 {
        let family = Family::ALL[seed as usize % Family::ALL.len()];
        let base = reverse_sample(family, SizeParams::default(), seed).unwrap();
        let inst = obfuscate(&base, &ObfuscationConfig { seed, ..Default::default() }).unwrap();
        inst.write(dir.path(), &format!("c{seed:02}")).unwrap();
    }
    let mut n = 0;
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "mps") {
            let first = parse_mps(&std::fs::read(&path).unwrap()).unwrap();
            let again = parse_mps(&write_mps(&first).unwrap()).unwrap();
            assert_eq!(first, again, "{}", path.display());
            n += 1;
        }
    }
    assert_eq!(n, 20);
}

#[test]
fn one_hot_instance_round_trips() {
    let inst = reverse_sample(Family::OneHotResource, SizeParams::default(), 4).unwrap();
    let back = parse_mps(&write_mps(&inst.model).unwrap()).unwrap();
    assert_eq!(back, inst.model);
    assert!(back.variables.iter().all(|v| v.var_type == VarType::Binary || v.var_type == VarType::Integer || v.var_type == VarType::Continuous));
}

#[test]
fn hand_written_document() {
    let text = "\
NAME tiny
ROWS
 N obj
 E bal
 L cap
COLUMNS
 MARKER 'MARKER' 'INTORG'
 x obj 1 bal 1
 x cap 2
 MARKER 'MARKER' 'INTEND'
 z obj -1 bal 1
RHS
 RHS bal 5 cap 8
BOUNDS
 UP BND z 4
ENDATA
";
    let m = parse_mps(text.as_bytes()).unwrap();
    assert_eq!(m.num_vars(), 2);
    assert_eq!(m.num_rows(), 2);
    assert_eq!((m.rows[0].lhs, m.rows[0].rhs), (5.0, 5.0));
    assert_eq!((m.rows[1].lhs, m.rows[1].rhs), (f64::NEG_INFINITY, 8.0));
    assert!(m.variables[0].is_integral());
    assert_eq!((m.variables[0].lower, m.variables[0].upper), (0.0, 1.0));
    assert_eq!((m.variables[1].lower, m.variables[1].upper), (0.0, 4.0));
    assert_eq!(m.objective, vec![(0, 1.0), (1, -1.0)]);
}
