//! Fixpoint iteration of the abstract semantics over a control-flow graph.
//!
//! Nodes are processed in reverse post-order from the entry. Merge points
//! join their incoming posts; loop headers elastify what flows in and join
//! it with what they held, switching to widening after a few visits.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::elastic::{ejoin, elastify};
use crate::heap::Signature;
use crate::lang::{Cfg, Program};
use crate::qsda::Qsda;
use crate::transformers::{full_post, strengthen, TransformError};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EngineConfig {
    /// Header visits that use the plain elastic join before widening.
    pub widen_delay: usize,
    /// Visits allowed per loop header.
    pub max_iter: usize,
    /// Strengthen every join of two or more incoming states.
    pub strengthen_after_join: bool,
    pub trace: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { widen_delay: 2, max_iter: 100, strengthen_after_join: false, trace: false }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("no fixpoint at {node} after {visits} visits")]
    NonTermination { node: String, visits: usize },
    #[error("at {node}: {source}")]
    Transform { node: String, source: TransformError },
}

/// One header visit, for reports.
#[derive(Clone, Debug, Serialize)]
pub struct TraceEvent {
    pub node: String,
    pub visit: usize,
    pub widened: bool,
    pub states: usize,
}

#[derive(Clone, Debug)]
pub struct AnalysisState {
    pub cfg: Cfg,
    pub sig: Arc<Signature>,
    pub inv: Vec<Qsda>,
    /// Visits of each loop header, in header order.
    pub iterations: Vec<(usize, usize)>,
    pub config: EngineConfig,
    pub trace: Vec<TraceEvent>,
    /// Largest automaton met during the analysis, posts included.
    pub max_states: usize,
}

impl AnalysisState {
    /// Most visits of any header; zero for loop-free programs.
    pub fn max_iterations(&self) -> usize {
        self.iterations.iter().map(|&(_, k)| k).max().unwrap_or(0)
    }

    pub fn at_exit(&self) -> &Qsda {
        &self.inv[self.cfg.exit]
    }
}

/// A node, or a loop iterated as a block until its header is stable.
#[derive(Debug)]
enum Item {
    Node(usize),
    Loop(usize, Vec<Item>),
}

/// Nodes of the natural loop of `h`, header excluded, among `live`.
fn loop_body(cfg: &Cfg, h: usize, live: &[bool]) -> Vec<bool> {
    let n = cfg.nodes.len();
    let mut fwd = vec![false; n];
    let mut stack = vec![h];
    while let Some(v) = stack.pop() {
        for &e in &cfg.succ[v] {
            let w = cfg.edges[e].to;
            if w != h && live[w] && !fwd[w] {
                fwd[w] = true;
                stack.push(w);
            }
        }
    }
    let mut body = vec![false; n];
    let mut stack: Vec<usize> = cfg.pred[h].iter().map(|&e| cfg.edges[e].from).filter(|&u| fwd[u]).collect();
    while let Some(v) = stack.pop() {
        if body[v] {
            continue;
        }
        body[v] = true;
        for &e in &cfg.pred[v] {
            let u = cfg.edges[e].from;
            if u != h && fwd[u] && !body[u] {
                stack.push(u);
            }
        }
    }
    body
}

/// Nests the nodes of `order` (reverse post-order) into loop blocks.
fn schedule(cfg: &Cfg, order: &[usize], live: &[bool]) -> Vec<Item> {
    let mut out = Vec::new();
    let mut taken = vec![false; cfg.nodes.len()];
    for &v in order {
        if taken[v] {
            continue;
        }
        taken[v] = true;
        if cfg.is_header(v) {
            let body = loop_body(cfg, v, live);
            if body.iter().any(|&b| b) {
                let inner: Vec<usize> = order.iter().copied().filter(|&w| body[w] && !taken[w]).collect();
                for &w in &inner {
                    taken[w] = true;
                }
                out.push(Item::Loop(v, schedule(cfg, &inner, &body)));
                continue;
            }
        }
        out.push(Item::Node(v));
    }
    out
}

struct Run<'a> {
    st: AnalysisState,
    pre: &'a Qsda,
    opts: &'a EngineConfig,
    posts: Vec<Option<Qsda>>,
}

impl Run<'_> {
    /// Recomputes the value at `v` and the posts of its out-edges; reports
    /// whether the value changed.
    fn update(&mut self, v: usize) -> Result<bool, EngineError> {
        let cfg = &self.st.cfg;
        let sig = &self.st.sig;
        let incoming: Vec<&Qsda> = cfg.pred[v].iter().filter_map(|&e| self.posts[e].as_ref()).collect();
        let mut input = if v == cfg.entry { self.pre.clone() } else { Qsda::bottom(sig.clone()) };
        for q in &incoming {
            input = input.lattice_join(q);
        }
        if self.opts.strengthen_after_join && incoming.len() + usize::from(v == cfg.entry) > 1 {
            input = (0..sig.ny()).fold(input, |a, y| strengthen(&a, y));
        }
        let old = &self.st.inv[v];
        let new = if cfg.is_header(v) {
            let slot = self.st.iterations.iter_mut().find(|(h, _)| *h == v).expect("header listed");
            slot.1 += 1;
            let visit = slot.1;
            if visit > self.opts.max_iter {
                return Err(EngineError::NonTermination { node: cfg.node_name(v), visits: visit - 1 });
            }
            let cand = elastify(&input);
            let widened = visit > self.opts.widen_delay;
            let next = if widened { widen_eqsda(old, &cand) } else { ejoin(old, &cand) };
            if self.opts.trace {
                self.st.trace.push(TraceEvent { node: cfg.node_name(v), visit, widened, states: next.len() });
            }
            next
        } else {
            input
        };
        let first = cfg.succ[v].iter().any(|&e| self.posts[e].is_none());
        if !first && new == *old {
            return Ok(false);
        }
        self.st.max_states = self.st.max_states.max(new.len());
        let mut outs = Vec::with_capacity(cfg.succ[v].len());
        for &e in &cfg.succ[v] {
            let out = full_post(&new, &cfg.edges[e].stmt)
                .map_err(|source| EngineError::Transform { node: cfg.node_name(v), source })?;
            self.st.max_states = self.st.max_states.max(out.len());
            outs.push((e, out));
        }
        for (e, out) in outs {
            self.posts[e] = Some(out);
        }
        let changed = new != self.st.inv[v];
        self.st.inv[v] = new;
        Ok(changed)
    }

    fn iterate(&mut self, items: &[Item]) -> Result<(), EngineError> {
        for it in items {
            match it {
                Item::Node(v) => {
                    self.update(*v)?;
                }
                Item::Loop(h, body) => {
                    let mut once = false;
                    while self.update(*h)? || !once {
                        self.iterate(body)?;
                        once = true;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Runs the analysis of a desugared program from `pre` at its entry.
///
/// Nodes are visited in reverse post-order; a loop is iterated as a block,
/// inner loops to stability first, until its header no longer changes.
pub fn analyze(p: &Program, pre: &Qsda, opts: &EngineConfig) -> Result<AnalysisState, EngineError> {
    let cfg = Cfg::build(p);
    let sig = pre.sig().clone();
    let n = cfg.nodes.len();
    let order = cfg.rpo(cfg.entry);
    let mut live = vec![false; n];
    for &v in &order {
        live[v] = true;
    }
    let items = schedule(&cfg, &order, &live);
    let st = AnalysisState {
        inv: vec![Qsda::bottom(sig.clone()); n],
        iterations: cfg.loop_headers.iter().map(|&h| (h, 0)).collect(),
        sig,
        config: opts.clone(),
        trace: Vec::new(),
        max_states: pre.len(),
        cfg,
    };
    let mut run = Run { posts: vec![None; st.cfg.edges.len()], st, pre, opts };
    run.iterate(&items)?;
    Ok(run.st)
}

/// Joins `new` into `old` in the elastic lattice and widens the formula of
/// every root of the result against the old roots that read the same trees.
pub fn widen_eqsda(old: &Qsda, new: &Qsda) -> Qsda {
    let j = ejoin(old, new);
    if old.is_empty() {
        return j;
    }
    let pairs = old.root_pairs(&j);
    let widened = j.map_formulas(|q, f| {
        let mut before = crate::datafmla::DataFormula::Bottom;
        for (mine, theirs) in &pairs {
            if *theirs == q {
                if let Some(m) = mine {
                    before = before.join(&old.states()[*m as usize].formula);
                }
            }
        }
        if before.is_bottom() {
            f.clone()
        } else {
            before.widen(f)
        }
    });
    widened.minimize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datafmla::DataFormula;
    use crate::elastic::is_elastic;
    use crate::heap::{encode, HeapConfig};
    use crate::lang::load;
    use crate::oracle::{enumerate_initial_heaps, random_qsda, soundness_sweep, OracleConfig};
    use crate::strandout::{check_assertion, precondition, PropertySpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(src: &str) -> (Program, Qsda) {
        let p = load(src).unwrap();
        let sig = Arc::new(Signature::new(&p.pointers[1..], p.universals.unwrap_or(0)));
        let pre = precondition(&p, sig).unwrap();
        (p, pre)
    }

    const INIT: &str = include_str!("../../../corpus/init.hp");

    #[test]
    fn init_proves_its_assertions_and_is_sound() {
        let (p, pre) = setup(INIT);
        let st = analyze(&p, &pre, &EngineConfig::default()).unwrap();
        for a in &p.asserts {
            let s = PropertySpec::from_annot(&a.prop, &st.sig).unwrap();
            let v = check_assertion(&st.inv[st.cfg.node_of(a.at)], &s).unwrap();
            assert!(v.is_proved(), "{}: {v:?}", a.prop.name);
        }
        assert!(st.max_iterations() <= 12, "{}", st.max_iterations());
        let oc = OracleConfig { max_nodes: 3, ..OracleConfig::default() };
        let init = enumerate_initial_heaps(&pre, &oc);
        let rep = soundness_sweep(&st.cfg, &st.inv, &init, &oc);
        assert!(rep.violations.is_empty(), "{:?}", rep.violations.first());
        for &h in &st.cfg.loop_headers {
            assert!(is_elastic(&st.inv[h]));
        }
    }

    #[test]
    fn bottom_precondition_stays_bottom() {
        let (p, pre) = setup(INIT);
        let bot = Qsda::bottom(pre.sig().clone());
        let st = analyze(&p, &bot, &EngineConfig::default()).unwrap();
        assert!(st.inv.iter().all(|q| q.is_bottom()));
    }

    #[test]
    fn loop_free_programs_have_no_header_visits() {
        let src = "pointer head, tmp;\ndata key;\n@universals 1\n@pre List(head)\n1: new tmp;\n2: tmp->next := head;\n3: head := tmp;\n";
        let (p, pre) = setup(src);
        let st = analyze(&p, &pre, &EngineConfig::default()).unwrap();
        assert_eq!(st.max_iterations(), 0);
        let h = HeapConfig::list(4, 1, &[]);
        let _ = encode(&h);
        assert!(!st.at_exit().is_bottom());
    }

    #[test]
    fn widening_is_an_upper_bound_and_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sig = Arc::new(Signature::new(&["p", "q"], 1));
        for _ in 0..20 {
            let a = elastify(&random_qsda(&mut rng, &sig, 10));
            let b = elastify(&random_qsda(&mut rng, &sig, 10));
            let w = widen_eqsda(&a, &b);
            assert!(is_elastic(&w));
            assert!(b.order_leq(&w) && a.order_leq(&w));
            assert_eq!(widen_eqsda(&a, &a), a);
        }
    }

    #[test]
    fn widening_drops_a_growing_bound() {
        // One tree whose formula bounds head's datum by 1, 2, 3, ...
        let sig = Arc::new(Signature::new(&["head"], 0));
        let t = crate::heap::SymTree::from_valuation(&encode(&HeapConfig::list(2, 1, &[0])), &[]);
        let at = |k| {
            let f = DataFormula::top(2).constrain(&crate::datafmla::Constraint {
                a: crate::datafmla::pos(1),
                b: None,
                bound: k,
            });
            elastify(&Qsda::from_tree(sig.clone(), &t, f).unwrap())
        };
        let mut cur = at(1);
        let mut rounds = 0;
        for k in 2..10 {
            let next = widen_eqsda(&cur, &at(k));
            if next == cur {
                break;
            }
            cur = next;
            rounds += 1;
        }
        assert!(rounds <= 2, "{rounds}");
        assert!(cur.accepts_heap(&encode(&HeapConfig::list(2, 1, &[1000]))));
    }
}
