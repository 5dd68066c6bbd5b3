use std::sync::Arc;

use super::*;
use crate::datafmla::{CmpOp, DataAtom, Operand};
use crate::heap::{encode, HeapConfig, HeapTree};

fn single_tree(sig: &Arc<Signature>, t: &SymTree, f: DataFormula) -> Qsda {
    Qsda::from_tree(sig.clone(), t, f).unwrap()
}

fn atom(sig: &Signature, l: &str, op: CmpOp, r: &str) -> DataFormula {
    let names = sig.term_names();
    let t = |n: &str| Operand::Term(names.iter().position(|x| x == n).unwrap(), 0);
    DataFormula::from_atom(sig.nterms(), &DataAtom { lhs: t(l), op, rhs: t(r) }).unwrap()
}

/// The configuration at the insertion point of sorted insert: head(2) ->
/// prev(6) -> cur(9) -> nil, tmp(8) -> cur, key(8) alone.
fn insertion_point() -> (Arc<Signature>, HeapTree, Vec<usize>) {
    let sig = Arc::new(Signature::new(&["head", "cur", "prev", "tmp", "key"], 2));
    // Locations: 0 dirty, 1 nil, 2 cur, 3 prev, 4 head, 5 tmp, 6 key.
    let h = HeapConfig {
        next: vec![None, Some(0), Some(1), Some(2), Some(3), Some(2), Some(0)],
        data: vec![0, 0, 9, 6, 2, 8, 8],
        pval: vec![1, 4, 2, 3, 5, 6],
    };
    h.check().unwrap();
    let t = encode(&h);
    let at = |p: usize| t.nodes.iter().position(|n| n.ptrs >> p & 1 == 1).unwrap();
    let place = vec![at(3), at(2)];
    (sig, t, place)
}

fn sortedness_fragment() -> (Qsda, HeapTree, Vec<usize>) {
    let (sig, t, place) = insertion_point();
    let phi = atom(&sig, "y1", CmpOp::Le, "y2")
        .meet(&atom(&sig, "y1", CmpOp::Lt, "key"))
        .meet(&atom(&sig, "y2", CmpOp::Ge, "key"));
    let a = single_tree(&sig, &SymTree::from_valuation(&t, &place), phi);
    (a, t, place)
}

#[test]
fn insertion_point_valuation_is_recognized() {
    let (a, t, place) = sortedness_fragment();
    a.validate().unwrap();
    assert!(a.run(&SymTree::from_valuation(&t, &place)).is_some());
    assert!(a.accepts_valuation(&t, &place));
}

#[test]
fn changing_y2_datum_breaks_the_formula() {
    let (a, mut t, place) = sortedness_fragment();
    t.nodes[place[1]].datum = 7;
    assert!(!a.accepts_valuation(&t, &place));
}

#[test]
fn missing_universal_is_rejected() {
    let (a, t, place) = sortedness_fragment();
    assert!(a.run(&SymTree::from_valuation(&t, &place[..1])).is_none());
}

#[test]
fn bottom_rejects_everything() {
    let (_, t, place) = sortedness_fragment();
    let b = Qsda::bottom(Arc::new(Signature::new(&["head", "cur", "prev", "tmp", "key"], 2)));
    assert!(!b.accepts_valuation(&t, &place));
    assert!(b.is_bottom());
}

#[test]
fn top_runs_on_every_heap() {
    let sig = Arc::new(Signature::new(&["p", "q"], 1));
    let top = Qsda::top(sig.clone());
    top.validate().unwrap();
    let heaps = [
        HeapConfig::list(3, 1, &[1, 2, 3]),
        HeapConfig::empty(3),
        HeapConfig { next: vec![None, Some(0), Some(1), Some(1)], data: vec![0, 0, 4, 5], pval: vec![1, 2, 3] },
        HeapConfig { next: vec![None, Some(0), Some(0)], data: vec![0, 0, 4], pval: vec![1, 2, 2] },
    ];
    for h in &heaps {
        h.check().unwrap();
        let t = encode(h);
        for p in valuations(&t, 1) {
            assert!(top.run(&SymTree::from_valuation(&t, &p)).is_some(), "{h:?}");
        }
        assert!(top.accepts_heap(&t));
    }
}

/// Two copies of one tree carrying different formulas.
fn two_bounds(lo: i64, hi: i64) -> (Nfa, HeapTree) {
    let sig = Arc::new(Signature::new(&["x"], 0));
    let h = HeapConfig::list(2, 1, &[5]);
    let t = encode(&h);
    let st = SymTree::from_valuation(&t, &[]);
    let le = |k| {
        DataFormula::from_atom(2, &DataAtom { lhs: Operand::Term(1, 0), op: CmpOp::Le, rhs: Operand::Const(k) }).unwrap()
    };
    let mut n = single_tree(&sig, &st, le(lo)).to_nfa(0);
    single_tree(&sig, &st, le(hi)).append_to(&mut n, 1);
    (n, t)
}

#[test]
fn determinize_join_and_meet() {
    let (n, t) = two_bounds(1, 3);
    let j = n.determinize(Combine::Join).unwrap().minimize();
    let m = n.determinize(Combine::Meet).unwrap().minimize();
    let names = j.sig().term_names();
    let root = |a: &Qsda| {
        let q = a.run(&SymTree::from_valuation(&t, &[])).unwrap();
        a.states()[q as usize].formula.render(&names)
    };
    assert_eq!(root(&j), "x <= 3");
    assert_eq!(root(&m), "x <= 1");
    assert_eq!(j.len(), 3);
}

#[test]
fn deterministic_input_keeps_its_shape() {
    let (a, _, _) = sortedness_fragment();
    let d = a.to_nfa(0).determinize(Combine::Join).unwrap();
    assert_eq!(d.len(), a.len());
    assert_eq!(d.minimize(), a.minimize());
}

#[test]
fn minimize_merges_twins_and_is_idempotent() {
    let sig = Arc::new(Signature::new(&["x"], 0));
    let f = DataFormula::from_atom(2, &DataAtom { lhs: Operand::Term(1, 0), op: CmpOp::Le, rhs: Operand::Const(2) }).unwrap();
    let inner = |ty| State { ty, root: false, formula: DataFormula::Bottom };
    let root = State { ty: 0b11, root: true, formula: f };
    // States 1, 3 and 5 copy 0, 2 and 4 behind a blank node.
    let states = vec![inner(0b10), inner(0b10), inner(0b11), inner(0b11), root.clone(), root];
    let tr = |children: Vec<StateId>, letter, target| Transition { children, letter, target };
    let trans = vec![
        tr(vec![], Letter::new(0b10, None), 0),
        tr(vec![0], Letter::BLANK, 1),
        tr(vec![1], Letter::BLANK, 1),
        tr(vec![0], Letter::new(0b01, None), 2),
        tr(vec![1], Letter::new(0b01, None), 3),
        tr(vec![2], Letter::ROOT, 4),
        tr(vec![3], Letter::ROOT, 5),
    ];
    let a = Qsda::from_parts(sig, states, trans).unwrap();
    a.validate().unwrap();
    let m = a.minimize();
    assert_eq!(m.len(), 3);
    assert_eq!(m.minimize(), m);
    for cells in 1..5 {
        let t = encode(&HeapConfig::list(2, 1, &vec![1; cells]));
        assert_eq!(a.accepts_heap(&t), m.accepts_heap(&t));
    }
}

#[test]
fn lattice_bounds() {
    let (a, _, _) = sortedness_fragment();
    let sig = a.sig().clone();
    let b = Qsda::bottom(sig.clone());
    assert!(b.order_leq(&a));
    assert!(!a.order_leq(&b));
    let (n, _) = two_bounds(1, 3);
    let lo = n.determinize(Combine::Meet).unwrap().minimize();
    let hi = n.determinize(Combine::Join).unwrap().minimize();
    assert!(lo.order_leq(&hi));
    assert!(!hi.order_leq(&lo));
    assert_eq!(lo.lattice_join(&hi), hi);
    assert_eq!(lo.lattice_meet(&hi), lo);
    let top = Qsda::top(lo.sig().clone());
    assert!(hi.order_leq(&top));
    assert!(!top.order_leq(&hi));
}

#[test]
fn meet_intersects_bounds() {
    let sig = Arc::new(Signature::new(&["x"], 0));
    let t = encode(&HeapConfig::list(2, 1, &[5]));
    let st = SymTree::from_valuation(&t, &[]);
    let x = Operand::Term(1, 0);
    let f1 = DataFormula::from_atom(2, &DataAtom { lhs: x, op: CmpOp::Le, rhs: Operand::Const(1) }).unwrap();
    let f2 = DataFormula::from_atom(2, &DataAtom { lhs: x, op: CmpOp::Ge, rhs: Operand::Const(0) }).unwrap();
    let m = single_tree(&sig, &st, f1).lattice_meet(&single_tree(&sig, &st, f2));
    let q = m.run(&st).unwrap();
    assert_eq!(m.states()[q as usize].formula.render(&sig.term_names()), "x >= 0 && x <= 1");
}

#[test]
fn validator_catches_type_errors() {
    let sig = Arc::new(Signature::new(&["x"], 0));
    let bad = Qsda::from_parts(
        sig.clone(),
        vec![State { ty: 0b01, root: false, formula: DataFormula::Bottom }],
        vec![Transition { children: vec![], letter: Letter::new(0b10, None), target: 0 }],
    )
    .unwrap();
    assert!(bad.validate().is_err());
    let dup = Qsda::from_parts(
        sig,
        vec![State { ty: 0b10, root: false, formula: DataFormula::Bottom }; 2],
        vec![
            Transition { children: vec![], letter: Letter::new(0b10, None), target: 0 },
            Transition { children: vec![], letter: Letter::new(0b10, None), target: 1 },
        ],
    );
    assert!(dup.is_err());
}

#[test]
fn json_round_trip() {
    let (a, _, _) = sortedness_fragment();
    let s = a.to_json_string();
    let b = Qsda::from_json_str(&s).unwrap();
    assert_eq!(a, b);
    let mut j = a.to_json();
    j.version = 99;
    assert_eq!(Qsda::from_json(&j), Err(QsdaError::UnsupportedVersion(99)));
    assert!(Qsda::from_json_str("{").is_err());
    assert!(a.to_dot().starts_with("digraph"));
}
