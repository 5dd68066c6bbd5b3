//! Brute-force checks that do not trust the fast paths of the analyzer:
//! exhaustive heap enumeration, naive acceptance by explicit valuations,
//! and a soundness sweep comparing concrete runs with inferred invariants.

use std::collections::HashSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::datafmla::{Constraint, DataFormula, Signed};
use crate::elastic::elastify;
use crate::heap::{encode, HeapConfig, HeapTree, Letter, Signature, SymTree, VarSet, DIRTY};
use crate::lang::{run_concrete, Cfg, ErrorTrace};
use crate::qsda::Qsda;

#[derive(Clone, Debug)]
pub struct OracleConfig {
    /// Largest number of list cells (`nil` and `dirty` not counted).
    pub max_nodes: usize,
    pub data_lo: i64,
    pub data_hi: i64,
    pub fuel: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { max_nodes: 4, data_lo: 0, data_hi: 3, fuel: 200, seed: 0 }
    }
}

impl OracleConfig {
    pub fn data(&self) -> Vec<i64> {
        (self.data_lo..=self.data_hi).collect()
    }
}

fn signed(s: Signed, env: &[i64]) -> i64 {
    if s.neg {
        -env[s.term]
    } else {
        env[s.term]
    }
}

fn holds(cs: &[Constraint], env: &[i64]) -> bool {
    cs.iter().all(|c| signed(c.a, env) + c.b.map_or(0, |b| signed(b, env)) <= c.bound)
}

/// Acceptance by explicit enumeration of placements, a linear search of the
/// transition list and direct evaluation of the root constraints.
pub fn naive_accepts(a: &Qsda, h: &HeapTree) -> bool {
    let sig = a.sig();
    let (npv, ny) = (sig.npv(), sig.ny());
    let n = h.nodes.len();
    // Variables below each node, computed from the tree alone.
    let mut below = vec![0 as VarSet; n];
    for v in (0..n).rev() {
        below[v] = h.nodes[v].ptrs | h.nodes[v].children.iter().fold(0, |acc, &c| acc | below[c]);
    }
    let mut place = Vec::with_capacity(ny);
    let mut ok = true;
    placements(n, ny, &mut place, &mut |place| {
        ok &= accepts_placement(a, h, &below, place, npv);
        ok
    });
    ok
}

/// Calls `f` for every injective placement of `ny` universals on nodes
/// `1..n`; stops early when `f` returns false.
fn placements(n: usize, ny: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    if cur.len() == ny {
        return f(cur);
    }
    for v in 1..n {
        if !cur.contains(&v) {
            cur.push(v);
            let go = placements(n, ny, cur, f);
            cur.pop();
            if !go {
                return false;
            }
        }
    }
    true
}

fn accepts_placement(a: &Qsda, h: &HeapTree, below: &[VarSet], place: &[usize], npv: usize) -> bool {
    let n = h.nodes.len();
    let mut state = vec![u32::MAX; n];
    for v in (0..n).rev() {
        let node = &h.nodes[v];
        let uvar = place.iter().position(|&p| p == v).map(|j| j as u8);
        let letter = if v == 0 { Letter::ROOT } else { Letter::new(node.ptrs, uvar) };
        let mut kids: Vec<u32> = node.children.iter().map(|&c| state[c]).collect();
        kids.sort_unstable();
        let Some(t) = a.transitions().iter().find(|t| t.letter == letter && t.children == kids) else {
            return false;
        };
        let mut ty = below[v];
        for (j, &p) in place.iter().enumerate() {
            if p == v || is_below(h, p, v) {
                ty |= 1 << (npv + j);
            }
        }
        if a.states()[t.target as usize].ty != ty {
            return false;
        }
        state[v] = t.target;
    }
    let root = &a.states()[state[0] as usize];
    if !root.root {
        return false;
    }
    let mut env = vec![0; npv + place.len()];
    for (v, node) in h.nodes.iter().enumerate() {
        for (p, slot) in env.iter_mut().enumerate().take(npv) {
            if node.ptrs >> p & 1 == 1 {
                *slot = h.nodes[v].datum;
            }
        }
    }
    for (j, &p) in place.iter().enumerate() {
        env[npv + j] = h.nodes[p].datum;
    }
    match &root.formula {
        DataFormula::Bottom => false,
        f => holds(&f.constraints(), &env),
    }
}

fn is_below(h: &HeapTree, v: usize, anc: usize) -> bool {
    let mut cur = h.nodes[v].parent;
    while let Some(u) = cur {
        if u == anc {
            return true;
        }
        cur = h.nodes[u].parent;
    }
    false
}

/// All heap shapes with exactly `cells` cells over `npv` pointers, up to
/// isomorphism. Data are zero.
pub fn shapes(npv: usize, cells: usize) -> Vec<HeapConfig> {
    let n = cells + 2;
    // Successor maps: each cell points to dirty (a fresh cell), to nil or
    // to another cell; acyclic.
    let mut nexts: Vec<Vec<usize>> = Vec::new();
    let mut cur = vec![DIRTY; cells];
    loop {
        let acyclic = (0..cells).all(|i| {
            let mut v = i + 2;
            for _ in 0..=cells {
                if v <= 1 {
                    return true;
                }
                v = cur[v - 2];
            }
            false
        });
        if acyclic {
            nexts.push(cur.clone());
        }
        let mut i = 0;
        loop {
            if i == cells {
                break;
            }
            cur[i] += 1;
            if cur[i] < n {
                break;
            }
            cur[i] = DIRTY;
            i += 1;
        }
        if i == cells {
            break;
        }
    }
    let found: Vec<HashSet<HeapConfig>> = nexts
        .par_iter()
        .map(|next| {
            let mut out = HashSet::new();
            let mut has_pred = vec![false; n];
            for &s in next {
                has_pred[s] = true;
            }
            let sources: Vec<usize> = (2..n).filter(|&v| !has_pred[v]).collect();
            let free = npv - 1;
            let mut pval = vec![1usize; npv];
            let total = n.saturating_sub(1).pow(free as u32);
            for code in 0..total {
                let mut c = code;
                for slot in pval.iter_mut().skip(1) {
                    *slot = 1 + c % (n - 1);
                    c /= n - 1;
                }
                if !sources.iter().all(|s| pval.contains(s)) {
                    continue;
                }
                let mut h = HeapConfig {
                    next: std::iter::once(None).chain(std::iter::once(Some(DIRTY))).chain(next.iter().map(|&s| Some(s))).collect(),
                    data: vec![0; n],
                    pval: pval.clone(),
                };
                h.normalize();
                out.insert(h);
            }
            out
        })
        .collect();
    let mut all: Vec<HeapConfig> = found.into_iter().flatten().collect::<HashSet<_>>().into_iter().collect();
    all.sort();
    all
}

/// Every data labelling of a shape's cells; `nil` keeps datum 0.
pub fn labelings(shape: &HeapConfig, data: &[i64]) -> Vec<HeapConfig> {
    let nil = shape.nil_loc();
    let cells: Vec<usize> = (1..shape.len()).filter(|&v| v != nil).collect();
    let mut out = Vec::new();
    let total = data.len().pow(cells.len() as u32);
    for code in 0..total {
        let mut h = shape.clone();
        let mut c = code;
        for &v in &cells {
            h.data[v] = data[c % data.len()];
            c /= data.len();
        }
        out.push(h);
    }
    out
}

/// All heaps with at most `max_cells` cells whose shape passes `keep`.
pub fn heaps(
    npv: usize,
    max_cells: usize,
    data: &[i64],
    keep: &(dyn Fn(&HeapConfig) -> bool + Sync),
) -> Vec<HeapConfig> {
    (0..=max_cells)
        .flat_map(|k| shapes(npv, k))
        .filter(|s| keep(s))
        .flat_map(|s| labelings(&s, data))
        .collect()
}

/// Whether every placement of universals on the shape has a run of `a`.
/// Data play no role in runs, so this prunes shapes before labelling.
pub fn structurally_possible(a: &Qsda, shape: &HeapConfig) -> bool {
    let t = encode(shape);
    crate::heap::valuations(&t, a.sig().ny()).iter().all(|p| a.run(&SymTree::from_valuation(&t, p)).is_some())
}

/// Heaps up to the configured size accepted by the precondition. Heaps with
/// too few nodes to place every universal are accepted vacuously by any
/// automaton and say nothing about the precondition, so they are left out.
pub fn enumerate_initial_heaps(pre: &Qsda, cfg: &OracleConfig) -> Vec<HeapConfig> {
    let (npv, ny) = (pre.sig().npv(), pre.sig().ny());
    let data = cfg.data();
    let keep = |s: &HeapConfig| encode(s).len() > ny && structurally_possible(pre, s);
    let candidates = heaps(npv, cfg.max_nodes, &data, &keep);
    candidates.into_par_iter().filter(|h| naive_accepts(pre, &encode(h))).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub node: usize,
    pub node_name: String,
    pub heap: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SweepReport {
    pub initial_heaps: usize,
    pub configurations: usize,
    pub violations: Vec<Violation>,
    /// Memory errors reachable under the precondition.
    pub errors: Vec<String>,
}

/// Runs the program concretely from every initial heap and checks that
/// each visited configuration is accepted by the invariant of its node.
pub fn soundness_sweep(cfg: &Cfg, inv: &[Qsda], initial: &[HeapConfig], oc: &OracleConfig) -> SweepReport {
    let data = oc.data();
    let runs: Vec<(Vec<(usize, HeapConfig)>, Vec<ErrorTrace>)> = initial
        .par_iter()
        .map(|h| {
            let r = run_concrete(cfg, cfg.entry, h, oc.fuel, &data);
            (r.visited, r.errors)
        })
        .collect();
    let mut seen: HashSet<(usize, HeapConfig)> = HashSet::new();
    let mut errors = Vec::new();
    for (visited, errs) in runs {
        seen.extend(visited);
        for e in errs {
            let at = e.trace.last().map(|(n, _)| cfg.node_name(*n)).unwrap_or_default();
            errors.push(format!("{} at {at}", e.message));
        }
    }
    errors.sort();
    errors.dedup();
    let mut configs: Vec<(usize, HeapConfig)> = seen.into_iter().collect();
    configs.sort();
    let violations: Vec<Violation> = configs
        .par_iter()
        .filter(|(v, c)| !naive_accepts(&inv[*v], &encode(c)))
        .map(|(v, c)| Violation { node: *v, node_name: cfg.node_name(*v), heap: format!("{c:?}") })
        .collect();
    SweepReport { initial_heaps: initial.len(), configurations: configs.len(), violations, errors }
}

/// A random heap with at most `max_cells` cells.
pub fn random_heap<R: Rng>(rng: &mut R, npv: usize, max_cells: usize, data: &[i64]) -> HeapConfig {
    let cells = rng.gen_range(0..=max_cells);
    let mut h = HeapConfig::empty(npv);
    for i in 0..cells {
        // Pointing only to nil or earlier cells keeps the heap acyclic.
        let succ = if i == 0 || rng.gen_bool(0.3) { 1 } else { rng.gen_range(2..2 + i) };
        h.next.push(Some(succ));
        h.data.push(*data.choose(rng).unwrap());
    }
    let n = h.next.len();
    for p in 1..npv {
        h.pval[p] = rng.gen_range(1..n);
    }
    h.normalize();
    h
}

fn random_formula<R: Rng>(rng: &mut R, nterms: usize, env: &[i64]) -> DataFormula {
    let mut f = DataFormula::top(nterms);
    if rng.gen_bool(0.4) {
        return f;
    }
    for _ in 0..rng.gen_range(1..3) {
        let t = rng.gen_range(0..nterms);
        let u = rng.gen_range(0..nterms);
        let c = match rng.gen_range(0..3) {
            // Keep the valuation itself admissible half of the time.
            0 => Constraint { a: Signed { neg: false, term: t }, b: None, bound: env[t].max(rng.gen_range(0..3)) },
            1 if t != u => Constraint {
                a: Signed { neg: false, term: t },
                b: Some(Signed { neg: true, term: u }),
                bound: rng.gen_range(-1..2),
            },
            _ => Constraint { a: Signed { neg: true, term: t }, b: None, bound: -rng.gen_range(0..2) },
        };
        f = f.constrain(&c);
    }
    if f.is_bottom() {
        DataFormula::top(nterms)
    } else {
        f
    }
}

/// A random valid automaton with at most `max_states` states. It accepts a
/// handful of random heap shapes (all their valuations, with random data
/// constraints) and is elastified half of the time.
pub fn random_qsda<R: Rng>(rng: &mut R, sig: &Arc<Signature>, max_states: usize) -> Qsda {
    let npv = sig.npv();
    let ny = sig.ny();
    let data = [0, 1, 2];
    loop {
        let mut acc = Qsda::bottom(sig.clone());
        let shapes = rng.gen_range(1..=4);
        for _ in 0..shapes {
            let h = random_heap(rng, npv, 3, &data);
            let t = encode(&h);
            for place in crate::heap::valuations(&t, ny) {
                let mut env: Vec<i64> = vec![0; sig.nterms()];
                for (v, node) in t.nodes.iter().enumerate() {
                    for p in 0..npv {
                        if node.ptrs >> p & 1 == 1 {
                            env[p] = t.nodes[v].datum;
                        }
                    }
                }
                for (j, &p) in place.iter().enumerate() {
                    env[npv + j] = t.nodes[p].datum;
                }
                let f = random_formula(rng, sig.nterms(), &env);
                let one = Qsda::from_tree(sig.clone(), &SymTree::from_valuation(&t, &place), f)
                    .expect("encoded heaps give valid trees");
                let next = acc.lattice_join(&one);
                if next.len() > max_states {
                    break;
                }
                acc = next;
            }
        }
        if rng.gen_bool(0.5) {
            let e = elastify(&acc);
            if e.len() <= max_states {
                acc = e;
            }
        }
        if !acc.is_empty() && acc.len() <= max_states {
            return acc;
        }
    }
}
