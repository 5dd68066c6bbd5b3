//! The seven acceptance criteria. Each prints one PASS or FAIL line; the
//! binary exits non-zero when any criterion fails.

use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use qsda::datafmla::{neg, pos, CmpOp, Constraint, DataFormula};
use qsda::elastic::{elastify, is_elastic};
use qsda::engine::EngineConfig;
use qsda::heap::{encode, valuations, HeapConfig, HeapTree, Signature, SymTree};
use qsda::lang::{concrete_successors, DataCmp, DataExpr, DataRef, Step, StmtKind, StructAtom, StructLit};
use qsda::oracle::{heaps, labelings, naive_accepts, random_qsda, shapes, structurally_possible, OracleConfig};
use qsda::qsda::{Combine, Qsda};
use qsda::strandout::{emit_formula, property_eqsda, PropKind, PropertySpec};
use qsda::transformers::{post, strengthen};
use qsda_analyzer::{check, corpus, prepare, sweep};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn benchmark_proofs() -> Outcome {
    let mut worst = 0f64;
    for e in corpus::required() {
        let prep = prepare(e.name, e.source, None).map_err(|err| format!("{}: {err}", e.name))?;
        ensure(prep.sig.ny() == e.reference_universals, || {
            format!("{}: |Y| = {}, reference {}", e.name, prep.sig.ny(), e.reference_universals)
        })?;
        let (_, rep) = check(&prep, &EngineConfig::default()).map_err(|err| format!("{}: {err}", e.name))?;
        ensure(rep.all_proved(), || format!("{}: {:?}", e.name, rep.assertions))?;
        ensure(rep.seconds <= 60.0, || format!("{}: {:.1}s", e.name, rep.seconds))?;
        match (e.reference_iterations, rep.iterations) {
            (Some(r), Some(k)) => ensure(k <= 3 * r, || format!("{}: {k} iterations, reference {r}", e.name))?,
            (None, None) => {}
            (r, k) => return Err(format!("{}: loop structure differs ({k:?} vs reference {r:?})", e.name)),
        }
        worst = worst.max(rep.seconds);
    }
    Ok(format!("14 programs proved, slowest {worst:.2}s"))
}

fn soundness() -> Outcome {
    let start = Instant::now();
    let oc = OracleConfig { max_nodes: 4, data_lo: 0, data_hi: 3, fuel: 200, seed: 0 };
    let mut configs = 0;
    for e in corpus::required() {
        let prep = prepare(e.name, e.source, None).map_err(|err| err.to_string())?;
        let (st, _) = check(&prep, &EngineConfig::default()).map_err(|err| err.to_string())?;
        let (rep, _) = sweep(&prep, &st, &oc);
        ensure(rep.violations.is_empty(), || format!("{}: {:?}", e.name, rep.violations.first()))?;
        ensure(rep.initial_heaps > 0, || format!("{}: no initial heaps", e.name))?;
        configs += rep.configurations;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs <= 600.0, || format!("took {secs:.0}s"))?;
    Ok(format!("{configs} configurations, 0 violations, {secs:.1}s"))
}

/// One instance of each statement form; the seed picks the variant.
fn statement_form(form: usize, seed: u64) -> StmtKind {
    let deref = |p, k| DataExpr::Term(DataRef::Deref(p), k);
    match form {
        0 => StmtKind::PtrAssignNil(1),
        1 => StmtKind::PtrAssign(1, 2),
        2 => StmtKind::PtrAssignNext(1, [2, 1][seed as usize % 2]),
        3 => StmtKind::NextAssignNil(1),
        4 => StmtKind::NextAssign(1, 2),
        5 => StmtKind::DataAssign(1, [DataExpr::Const(1), deref(2, 1), deref(1, -1)][seed as usize % 3]),
        6 => StmtKind::New(1),
        7 => {
            let atom = [StructAtom::Eq(1, 2), StructAtom::Next(1, 2), StructAtom::Reach(1, 2)][seed as usize % 3];
            StmtKind::AssumeStruct(StructLit { atom, positive: seed % 2 == 0 })
        }
        _ => {
            let op = [CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ge][seed as usize % 4];
            StmtKind::AssumeData(DataCmp { lhs: deref(1, 0), op, rhs: deref(2, 0) })
        }
    }
}

fn transformer_oracle() -> Outcome {
    let pool = heaps(4, 3, &[0, 1, 2], &|_| true);
    let checked: Vec<Result<usize, String>> = (0..30u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let sig = Arc::new(Signature::new(&["p", "q", "r"], (seed % 3) as usize));
            let pre = random_qsda(&mut rng, &sig, 40);
            let accepted: Vec<&HeapConfig> = pool.iter().filter(|h| naive_accepts(&pre, &encode(h))).collect();
            let mut n = 0;
            for form in 0..9 {
                let s = statement_form(form, seed);
                let out = post(&pre, &s).map_err(|e| format!("{s:?}: {e}"))?;
                out.validate().map_err(|e| format!("{s:?}: {e}"))?;
                for h in &accepted {
                    for step in concrete_successors(h, &s, &[0, 1, 2]) {
                        if let Step::Next(c) = step {
                            n += 1;
                            ensure(naive_accepts(&out, &encode(&c)), || {
                                format!("seed {seed}, {s:?}: successor {c:?} of {h:?} rejected")
                            })?;
                        }
                    }
                }
            }
            Ok(n)
        })
        .collect();
    let mut total = 0;
    for c in checked {
        total += c?;
    }
    Ok(format!("9 forms x 30 automata, {total} successor heaps accepted"))
}

/// All valuation trees over small heaps that `a` accepts.
fn accepted_valuations(a: &Qsda, pool: &[HeapConfig]) -> Vec<(HeapTree, Vec<usize>)> {
    let ny = a.sig().ny();
    let mut out = Vec::new();
    for h in pool {
        let t = encode(h);
        for pl in valuations(&t, ny) {
            if a.accepts_valuation(&t, &pl) {
                out.push((t.clone(), pl));
            }
        }
    }
    out
}

/// Every valuation of `h` with the formula pinning each term to its datum.
fn exact(sig: &Arc<Signature>, h: &HeapConfig) -> Qsda {
    let t = encode(h);
    let mut acc = Qsda::bottom(sig.clone());
    for pl in valuations(&t, sig.ny()) {
        let env = acc.env(&t, &pl);
        let f = env.iter().enumerate().fold(DataFormula::top(sig.nterms()), |f, (i, &d)| f.constrain_const(i, d));
        acc = acc.lattice_join(&Qsda::from_tree(sig.clone(), &SymTree::from_valuation(&t, &pl), f).unwrap());
    }
    acc
}

fn list_with(npv: usize, data: &[i64], extra: &[(usize, i64)]) -> HeapConfig {
    let mut h = HeapConfig::list(npv, 1, data);
    for &(p, d) in extra {
        h.next.push(Some(0));
        h.data.push(d);
        h.pval[p] = h.next.len() - 1;
    }
    h.normalize();
    h
}

/// Hand-built pairs `(A, B)` with `B` elastic and `A ⊑ B`.
fn order_pairs() -> Vec<(&'static str, Qsda, Qsda)> {
    let spec = |kind, param| PropertySpec { kind, anchor: 1, param, offset: 0 };
    let one = |ny| Arc::new(Signature::new(&["head"], ny));
    let two = |ny| Arc::new(Signature::new(&["head", "key"], ny));
    let cur = Arc::new(Signature::new(&["head", "cur"], 1));
    let prop = |s: &PropertySpec, sig: &Arc<Signature>| property_eqsda(s, sig.clone()).unwrap();
    let sort = spec(PropKind::Sort, None);
    let mut middle = HeapConfig::list(3, 1, &[0, 1, 2, 3]);
    middle.pval[2] = middle.next[middle.pval[1]].unwrap();
    middle.normalize();
    let small = exact(&one(1), &HeapConfig::list(2, 1, &[0, 0, 0]));
    let other = exact(&one(1), &HeapConfig::list(2, 1, &[1]));
    vec![
        ("sorted 0,1,2", exact(&one(2), &HeapConfig::list(2, 1, &[0, 1, 2])), prop(&sort, &one(2))),
        ("sorted 1,1,3,3", exact(&one(2), &HeapConfig::list(2, 1, &[1, 1, 3, 3])), prop(&sort, &one(2))),
        (
            "init 2,2,2",
            exact(&two(1), &list_with(3, &[2, 2, 2], &[(2, 2)])),
            prop(&spec(PropKind::Init, Some(2)), &two(1)),
        ),
        (
            "max 0,2,1",
            exact(&two(1), &list_with(3, &[0, 2, 1], &[(2, 2)])),
            prop(&spec(PropKind::Max, Some(2)), &two(1)),
        ),
        (
            "gek 3,2,3",
            exact(&two(1), &list_with(3, &[3, 2, 3], &[(2, 2)])),
            prop(&spec(PropKind::Gek, Some(2)), &two(1)),
        ),
        ("list of 4", exact(&one(0), &HeapConfig::list(2, 1, &[5, 1, 4, 2])), prop(&spec(PropKind::List, None), &one(0))),
        ("list with cur inside", exact(&cur, &middle), prop(&spec(PropKind::List, None), &cur)),
        ("top", exact(&one(1), &HeapConfig::list(2, 1, &[1, 2])), Qsda::top(one(1))),
        ("own elastic hull", small.clone(), elastify(&small.lattice_join(&other))),
        (
            "descending 3,2,0",
            exact(&one(2), &HeapConfig::list(2, 1, &[3, 2, 0])),
            prop(&spec(PropKind::SortDesc, None), &one(2)),
        ),
    ]
}

fn elastify_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut sampled, mut fewest, mut empty) = (0, usize::MAX, 0);
    let pool = heaps(3, 3, &[-1, 0, 1, 2, 3, 4], &|_| true);
    for i in 0..50 {
        let sig = Arc::new(Signature::new(&["p", "q"], i % 3));
        let a = random_qsda(&mut rng, &sig, 12);
        let e = elastify(&a);
        ensure(is_elastic(&e), || format!("automaton {i}: output not elastic"))?;
        // The input only accepts trees over at most three cells, so every
        // accepted tree of the pool is a candidate; at most 200 are drawn.
        let mut acc = accepted_valuations(&a, &pool);
        acc.shuffle(&mut rng);
        acc.truncate(200);
        if acc.is_empty() {
            empty += 1;
        } else {
            fewest = fewest.min(acc.len());
        }
        for (t, pl) in &acc {
            sampled += 1;
            ensure(e.accepts_valuation(t, pl), || format!("automaton {i}: accepted tree lost"))?;
        }
    }
    for (name, a, b) in order_pairs() {
        ensure(is_elastic(&b), || format!("{name}: B not elastic"))?;
        ensure(a.order_leq(&b), || format!("{name}: A not below B"))?;
        ensure(!is_elastic(&a), || format!("{name}: A already elastic"))?;
        ensure(elastify(&a).order_leq(&b), || format!("{name}: elastify(A) not below B"))?;
    }
    Ok(format!(
        "50 automata ({empty} with an empty pool language), {sampled} valuation trees, fewest per automaton {fewest}, 10 order pairs"
    ))
}

fn random_formula(rng: &mut ChaCha8Rng, n: usize) -> DataFormula {
    if rng.gen_bool(0.05) {
        return DataFormula::Bottom;
    }
    let mut f = DataFormula::top(n);
    for _ in 0..rng.gen_range(0..4) {
        let a = rng.gen_range(0..n);
        let sa = if rng.gen_bool(0.5) { pos(a) } else { neg(a) };
        let b = if rng.gen_bool(0.6) {
            let t = (a + rng.gen_range(1..n)) % n;
            Some(if rng.gen_bool(0.5) { pos(t) } else { neg(t) })
        } else {
            None
        };
        f = f.constrain(&Constraint { a: sa, b, bound: rng.gen_range(-3..4) });
    }
    f
}

fn equiv(a: &DataFormula, b: &DataFormula) -> bool {
    a.leq(b) && b.leq(a)
}

fn lattice_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..10_000 {
        let n = 3 + i % 2;
        let (a, b, c) = (random_formula(&mut rng, n), random_formula(&mut rng, n), random_formula(&mut rng, n));
        let laws = [
            ("meet commutes", equiv(&a.meet(&b), &b.meet(&a))),
            ("join commutes", equiv(&a.join(&b), &b.join(&a))),
            ("meet associates", equiv(&a.meet(&b).meet(&c), &a.meet(&b.meet(&c)))),
            ("join associates", equiv(&a.join(&b).join(&c), &a.join(&b.join(&c)))),
            ("meet absorbs", equiv(&a.meet(&a.join(&b)), &a)),
            ("join absorbs", equiv(&a.join(&a.meet(&b)), &a)),
            ("idempotent", equiv(&a.meet(&a), &a) && equiv(&a.join(&a), &a)),
            ("order agrees with meet", a.leq(&b) == equiv(&a.meet(&b), &a)),
            ("widening bounds", a.leq(&a.widen(&b)) && b.leq(&a.widen(&b))),
        ];
        for (name, ok) in laws {
            ensure(ok, || format!("{name} fails on {a:?} / {b:?} / {c:?}"))?;
        }
    }
    // Inclusion against models: inside the box 0..3 a formula is exactly
    // its set of integer points.
    let models: Vec<[i64; 3]> =
        (0..64).map(|k| [k % 4, (k / 4) % 4, k / 16]).map(|m| [m[0] as i64, m[1] as i64, m[2] as i64]).collect();
    let boxed = |f: DataFormula| {
        (0..3).fold(f, |f, t| {
            f.constrain(&Constraint { a: pos(t), b: None, bound: 3 }).constrain(&Constraint { a: neg(t), b: None, bound: 0 })
        })
    };
    for _ in 0..3000 {
        let f = boxed(random_formula(&mut rng, 3));
        let g = random_formula(&mut rng, 3);
        let semantic = models.iter().all(|m| !f.sat(m) || g.sat(m));
        ensure(f.leq(&g) == semantic, || format!("leq disagrees with models on {f:?} <= {g:?}"))?;
    }
    // Canonicity: minimize on unminimized products, and the lattice bounds.
    let sig = Arc::new(Signature::new(&["p", "q"], 1));
    let trees: Vec<SymTree> = heaps(sig.npv(), 3, &[0], &|_| true)
        .iter()
        .flat_map(|h| {
            let t = encode(h);
            valuations(&t, 1).into_iter().map(move |pl| SymTree::from_valuation(&t, &pl))
        })
        .collect();
    for i in 0..100 {
        let a = random_qsda(&mut rng, &sig, 12);
        let b = random_qsda(&mut rng, &sig, 12);
        let mut n = a.to_nfa(0);
        b.append_to(&mut n, 1);
        let d = n.determinize(Combine::Join).map_err(|e| e.to_string())?;
        let m = d.minimize();
        ensure(m.minimize() == m, || format!("pair {i}: minimize not idempotent"))?;
        for t in trees.choose_multiple(&mut rng, 100) {
            let lf = |x: &Qsda| x.run(t).map(|q| x.states()[q as usize].formula.clone());
            let same = match (lf(&d), lf(&m)) {
                (None, None) => true,
                (Some(f), Some(g)) => equiv(&f, &g),
                _ => false,
            };
            ensure(same, || format!("pair {i}: minimize changes a tree's formula"))?;
        }
        let (j, mt) = (a.lattice_join(&b), a.lattice_meet(&b));
        ensure(a.order_leq(&j) && b.order_leq(&j), || format!("pair {i}: join not an upper bound"))?;
        ensure(mt.order_leq(&a) && mt.order_leq(&b), || format!("pair {i}: meet not a lower bound"))?;
        ensure(a.order_leq(&a) && j.order_leq(&m) && m.order_leq(&j), || {
            format!("pair {i}: the product and the join differ in the order")
        })?;
    }
    Ok("10000 triples, 3000 inclusions over 64 models, 100 automaton pairs".into())
}

/// Compares emission with acceptance on every shape of at most `cells`
/// cells. Shapes the automaton cannot run on are rejected under every
/// labelling, so the formula only has to fail on the shape itself.
fn fidelity(a: &Qsda, cells: usize, data: &[i64]) -> Result<usize, String> {
    let inv = emit_formula(a).map_err(|e| e.to_string())?;
    let all: Vec<HeapConfig> = (0..=cells).flat_map(|k| shapes(a.sig().npv(), k)).collect();
    let counts: Vec<Result<usize, String>> = all
        .par_iter()
        .map(|s| {
            if !structurally_possible(a, s) {
                let t = encode(s);
                return if inv.shape_holds(&t) { Err(format!("formula admits the shape {s:?}")) } else { Ok(1) };
            }
            let mut n = 0;
            for h in labelings(s, data) {
                let t = encode(&h);
                n += 1;
                if inv.holds(&t) != a.accepts_heap(&t) {
                    return Err(format!("disagreement on {h:?}\n{}", inv.render()));
                }
            }
            Ok(n)
        })
        .collect();
    counts.into_iter().sum()
}

fn emission() -> Outcome {
    let data = [0, 1, 2, 3];
    let spec = |kind, param| PropertySpec { kind, anchor: 1, param, offset: 0 };
    let templates = [
        (spec(PropKind::Sort, None), Signature::new(&["head"], 2)),
        (spec(PropKind::Init, Some(2)), Signature::new(&["head", "key"], 1)),
        (spec(PropKind::List, None), Signature::new(&["head"], 0)),
    ];
    let mut total = 0;
    for (s, sig) in templates {
        let a = property_eqsda(&s, Arc::new(sig)).map_err(|e| e.to_string())?;
        total += fidelity(&a, 5, &data).map_err(|e| format!("{}: {e}", s.name()))?;
    }
    let e = corpus::find("sorted-insert").expect("in the corpus");
    let prep = prepare(e.name, e.source, None).map_err(|e| e.to_string())?;
    let (st, _) = check(&prep, &EngineConfig::default()).map_err(|e| e.to_string())?;
    total += fidelity(st.at_exit(), 5, &data).map_err(|e| format!("sorted-insert exit: {e}"))?;
    Ok(format!("{total} heaps and shapes, 0 disagreements"))
}

fn strengthen_language() -> Outcome {
    let pool: Vec<HeapTree> = heaps(3, 4, &[0, 1, 2], &|_| true).iter().map(encode).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let autos: Vec<Qsda> = (0..30)
        .map(|i| {
            let sig = Arc::new(Signature::new(&["p", "q"], 1 + i % 2));
            random_qsda(&mut rng, &sig, 30)
        })
        .collect();
    autos.par_iter().enumerate().try_for_each(|(i, a)| {
        let s = (0..a.sig().ny()).fold(a.clone(), |acc, y| strengthen(&acc, y));
        for t in &pool {
            ensure(naive_accepts(a, t) == naive_accepts(&s, t), || format!("automaton {i} differs on {t:?}"))?;
        }
        Ok::<(), String>(())
    })?;
    Ok(format!("30 automata, {} heaps each", pool.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("benchmark proofs", benchmark_proofs),
        ("soundness sweep", soundness),
        ("transformer oracle", transformer_oracle),
        ("elastification laws", elastify_laws),
        ("lattice and canonicity", lattice_suite),
        ("emission fidelity", emission),
        ("strengthen keeps heap language", strengthen_language),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = run();
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
