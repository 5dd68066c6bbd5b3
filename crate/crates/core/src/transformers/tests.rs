use std::collections::HashSet;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::datafmla::CmpOp;
use crate::heap::{encode, HeapConfig, Signature};
use crate::lang::{concrete_successors, Step};
use crate::oracle::{heaps, naive_accepts, random_qsda};

pub(crate) fn statement_forms() -> Vec<StmtKind> {
    use StmtKind::*;
    let lit = |atom, positive| AssumeStruct(StructLit { atom, positive });
    let deref = |p, k| DataExpr::Term(DataRef::Deref(p), k);
    vec![
        PtrAssignNil(1),
        PtrAssign(1, 2),
        PtrAssignNext(1, 2),
        PtrAssignNext(1, 1),
        NextAssignNil(1),
        NextAssign(1, 2),
        DataAssign(1, DataExpr::Const(1)),
        DataAssign(1, deref(2, 1)),
        DataAssign(1, deref(1, -1)),
        New(1),
        lit(StructAtom::Eq(1, 2), true),
        lit(StructAtom::Eq(1, 2), false),
        lit(StructAtom::Next(1, 2), true),
        lit(StructAtom::Next(1, 2), false),
        lit(StructAtom::Reach(1, 2), true),
        lit(StructAtom::Reach(1, 2), false),
        AssumeData(DataCmp { lhs: deref(1, 0), op: CmpOp::Lt, rhs: deref(2, 0) }),
    ]
}

/// Every concrete successor of every accepted heap is accepted by the post.
fn check_sound(pre: &Qsda, s: &StmtKind, pool: &[HeapConfig]) -> Result<(), String> {
    let out = post(pre, s).map_err(|e| e.to_string())?;
    out.validate().map_err(|e| format!("{s:?}: invalid output: {e}"))?;
    for h in pool {
        if !naive_accepts(pre, &encode(h)) {
            continue;
        }
        for step in concrete_successors(h, s, &[0, 1, 2]) {
            if let Step::Next(c) = step {
                if !naive_accepts(&out, &encode(&c)) {
                    return Err(format!("{s:?}\npre {pre:?}\nheap {h:?}\nsucc {c:?}\npost {out:?}"));
                }
            }
        }
    }
    Ok(())
}

#[test]
fn transformers_are_sound_on_small_heaps() {
    let pool = heaps(4, 3, &[0, 1, 2], &|_| true);
    for seed in 0..12u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sig = Arc::new(Signature::new(&["p", "q", "r"], (seed % 3) as usize));
        let pre = random_qsda(&mut rng, &sig, 40);
        for s in statement_forms() {
            check_sound(&pre, &s, &pool).unwrap();
        }
    }
}

#[test]
fn post_of_top_only_pins_the_assigned_pointer() {
    let sig = Arc::new(Signature::new(&["p", "q"], 1));
    let top = Qsda::top(sig).minimize();
    assert_eq!(post(&top, &StmtKind::Skip).unwrap(), top);
    assert_eq!(strengthen(&top, 0), top);
    let out = post(&top, &StmtKind::PtrAssignNil(1)).unwrap();
    assert!(out.order_leq(&top));
    for h in heaps(3, 3, &[0, 1], &|_| true) {
        assert_eq!(naive_accepts(&out, &encode(&h)), h.pval[1] == h.nil_loc(), "{h:?}");
    }
}

#[test]
fn random_pre_automata_accept_something() {
    let pool = heaps(4, 2, &[0, 1, 2], &|_| true);
    let mut total = 0;
    for seed in 0..6u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sig = Arc::new(Signature::new(&["p", "q", "r"], (seed % 3) as usize));
        let pre = random_qsda(&mut rng, &sig, 40);
        let n = pool.iter().filter(|h| naive_accepts(&pre, &encode(h))).count();
        eprintln!("seed {seed}: {} states, {n} heaps", pre.len());
        total += n;
    }
    assert!(total > 0);
}

#[test]
fn the_soundness_check_catches_a_wrong_post() {
    let pool = heaps(4, 3, &[0, 1, 2], &|_| true);
    let mut caught = 0;
    for seed in 0..12u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sig = Arc::new(Signature::new(&["p", "q", "r"], (seed % 3) as usize));
        let pre = random_qsda(&mut rng, &sig, 40);
        // Pretend `p := nil` left the automaton unchanged.
        for s in [StmtKind::PtrAssignNil(1), StmtKind::New(1), StmtKind::NextAssignNil(1)] {
            let bad = pool.iter().filter(|h| naive_accepts(&pre, &encode(h))).any(|h| {
                concrete_successors(h, &s, &[0]).into_iter().any(|st| match st {
                    Step::Next(c) => !naive_accepts(&pre, &encode(&c)),
                    _ => false,
                })
            });
            caught += usize::from(bad);
        }
    }
    assert!(caught > 10, "{caught}");
}

/// All valuations of one shape, each mapped to `true`.
fn shape_automaton(sig: &Arc<Signature>, h: &HeapConfig) -> Qsda {
    let t = encode(h);
    let mut a = Qsda::bottom(sig.clone());
    for place in crate::heap::valuations(&t, sig.ny()) {
        let st = crate::heap::SymTree::from_valuation(&t, &place);
        a = a.lattice_join(&Qsda::from_tree(sig.clone(), &st, DataFormula::top(sig.nterms())).unwrap());
    }
    a
}

#[test]
fn pointer_statements_are_exact_on_shapes() {
    use crate::oracle::shapes;
    let pool: Vec<HeapConfig> = (0..=3).flat_map(|k| shapes(3, k)).collect();
    let mut checked = 0;
    for ny in 0..2 {
        let sig = Arc::new(Signature::new(&["p", "q"], ny));
        for h in (0..=2).flat_map(|k| shapes(3, k)) {
            if h.len() - 1 < ny {
                continue;
            }
            let pre = shape_automaton(&sig, &h);
            for s in statement_forms().into_iter().filter(|s| !matches!(s, StmtKind::DataAssign(..) | StmtKind::AssumeData(..))) {
                let out = post(&pre, &s).unwrap();
                let want: HashSet<HeapConfig> = concrete_successors(&h, &s, &[0])
                    .into_iter()
                    .filter_map(|st| match st {
                        Step::Next(c) => Some(c),
                        _ => None,
                    })
                    .collect();
                for c in &pool {
                    let small = c.len() - 1 < ny;
                    if small {
                        continue;
                    }
                    checked += usize::from(want.contains(c));
                    assert_eq!(naive_accepts(&out, &encode(c)), want.contains(c), "{s:?} on {h:?} at {c:?} (ny {ny})");
                }
            }
        }
    }
    assert!(checked > 100, "{checked}");
}

#[test]
fn strengthen_spreads_facts_across_placements() {
    let sig = Arc::new(Signature::new(&["head"], 1));
    let n = sig.nterms();
    let h = HeapConfig::list(2, 1, &[0]);
    let t = encode(&h);
    let at_head = t.nodes.iter().position(|x| x.ptrs == 0b10).unwrap();
    let at_nil = t.nodes.iter().position(|x| x.ptrs == 0b01).unwrap();
    let pinned = DataFormula::top(n).constrain_const(1, 0).constrain_eq(1, 2);
    let st = |p: usize| crate::heap::SymTree::from_valuation(&t, &[p]);
    let a = Qsda::from_tree(sig.clone(), &st(at_head), pinned)
        .unwrap()
        .lattice_join(&Qsda::from_tree(sig.clone(), &st(at_nil), DataFormula::top(n)).unwrap());
    let s = strengthen(&a, 0);
    let names = sig.term_names();
    let q = s.run(&st(at_nil)).unwrap();
    assert_eq!(s.states()[q as usize].formula.render(&names), "head = 0");
    assert!(s.order_leq(&a));
}

#[test]
fn strengthen_keeps_the_heap_language() {
    let pool = heaps(3, 3, &[0, 1, 2], &|_| true);
    for seed in 0..8u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let sig = Arc::new(Signature::new(&["p", "q"], 1 + (seed % 2) as usize));
        let a = random_qsda(&mut rng, &sig, 30);
        let s = (0..sig.ny()).fold(a.clone(), |acc, y| strengthen(&acc, y));
        s.validate().unwrap();
        assert!(s.order_leq(&a));
        for h in &pool {
            let t = encode(h);
            assert_eq!(naive_accepts(&a, &t), naive_accepts(&s, &t), "{h:?}");
        }
    }
}
