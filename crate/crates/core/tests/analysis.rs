use std::sync::Arc;

use qsda::engine::{analyze, AnalysisState, EngineConfig};
use qsda::heap::Signature;
use qsda::lang::{load, Program};
use qsda::oracle::{enumerate_initial_heaps, soundness_sweep, OracleConfig};
use qsda::qsda::Qsda;
use qsda::strandout::{check_assertion, precondition, PropertySpec, Verdict};

fn run(text: &str) -> (Program, AnalysisState) {
    let p = load(text).expect("parses");
    let sig = Arc::new(Signature::new(&p.pointers[1..], p.universals.unwrap_or(0)));
    let pre = precondition(&p, sig).expect("precondition");
    let st = analyze(&p, &pre, &EngineConfig::default()).expect("analysis");
    (p, st)
}

fn verdicts(p: &Program, st: &AnalysisState) -> Vec<Verdict> {
    p.asserts
        .iter()
        .map(|a| {
            let spec = PropertySpec::from_annot(&a.prop, &st.sig).unwrap();
            check_assertion(&st.inv[st.cfg.node_of(a.at)], &spec).unwrap()
        })
        .collect()
}

const INIT: &str = include_str!("../../../corpus/init.hp");
const ADD_HEAD: &str = include_str!("../../../corpus/add-head.hp");
const SORTED_INSERT: &str = include_str!("../../../corpus/sorted-insert.hp");

#[test]
fn small_programs_are_proved() {
    for text in [INIT, ADD_HEAD, SORTED_INSERT] {
        let (p, st) = run(text);
        assert!(verdicts(&p, &st).iter().all(Verdict::is_proved));
    }
}

#[test]
fn invariants_cover_concrete_runs() {
    let oc = OracleConfig { max_nodes: 3, data_lo: 0, data_hi: 2, fuel: 100, seed: 0 };
    for text in [INIT, SORTED_INSERT] {
        let p = load(text).unwrap();
        let sig = Arc::new(Signature::new(&p.pointers[1..], p.universals.unwrap_or(0)));
        let pre = precondition(&p, sig).unwrap();
        let st = analyze(&p, &pre, &EngineConfig::default()).unwrap();
        let init = enumerate_initial_heaps(&pre, &oc);
        assert!(!init.is_empty());
        let rep = soundness_sweep(&st.cfg, &st.inv, &init, &oc);
        assert!(rep.violations.is_empty(), "{:?}", rep.violations.first());
        assert!(rep.errors.is_empty(), "{:?}", rep.errors);
    }
}

#[test]
fn false_assertion_is_not_proved() {
    // The cells past the first keep their old data, so Init cannot hold.
    let text = "pointer head, cur;\ndata key;\n@universals 1\n@pre List(head)\n@assert exit Init(head, key)\n\
                1: cur := head;\n2: if (cur != nil) then\n3:   cur->data := key;\n   fi\n";
    let (p, st) = run(text);
    assert!(!verdicts(&p, &st)[0].is_proved());
}

#[test]
fn invariants_survive_json() {
    let (_, st) = run(SORTED_INSERT);
    for inv in &st.inv {
        let back = Qsda::from_json_str(&inv.to_json_string()).expect("decodes");
        assert!(back.order_leq(inv) && inv.order_leq(&back));
    }
}
