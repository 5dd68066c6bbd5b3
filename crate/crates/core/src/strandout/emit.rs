//! Quantified formulas read off elastic automata.
//!
//! Every accepting run of an elastic automaton collapses, after dropping the
//! blank self-loops, to a loop-free skeleton: the labelled nodes, the
//! branching nodes and the root. A clause pairs the structural guard that
//! pins a valuation tree to one skeleton with the formula of its root state.
//!
//! Branching nodes that carry no variable are named by existential `b`
//! variables. A branching node is identified by the pointers below it, which
//! do not depend on where the universals sit, so one choice of the `b`s
//! serves every placement.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::rc::Rc;
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use super::StrandError;
use crate::datafmla::{Constraint, DataFormula};
use crate::elastic::is_elastic;
use crate::heap::{valuations, HeapTree, Letter, Signature, VarSet};
use crate::qsda::{Qsda, StateId};

/// A node named in a guard.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum GuardNode {
    /// The node of a pointer or universal (term index).
    Term(usize),
    /// The existential `b` with this index.
    Branch(usize),
    Dirty,
}

/// Guard atoms. `NextPlus(x, z)` holds when `z` is reached from `x` in one or
/// more steps and every node strictly between carries no variable and has a
/// single predecessor.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Atom {
    Eq(GuardNode, GuardNode),
    Ne(GuardNode, GuardNode),
    Next(GuardNode, GuardNode),
    NextPlus(GuardNode, GuardNode),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub guard: Vec<Atom>,
    pub formula: DataFormula,
    constraints: Vec<Constraint>,
}

/// `∃ b. ∀ y. (∨ guards) ∧ ∧ (guard ⇒ formula)`.
#[derive(Clone, Debug)]
pub struct QuantifiedInvariant {
    sig: Arc<Signature>,
    /// Pointers below each existential branching node.
    pub branch_vars: Vec<VarSet>,
    pub clauses: Vec<Clause>,
}

#[derive(Debug)]
struct Sk {
    letter: Letter,
    ty: VarSet,
    /// Children with whether a blank gap may sit above them.
    kids: Vec<(Rc<Sk>, bool)>,
}

/// Reads the quantified invariant off an elastic automaton.
pub fn emit_formula(a: &Qsda) -> Result<QuantifiedInvariant, StrandError> {
    if !is_elastic(a) {
        return Err(StrandError::NotElastic);
    }
    let sig = a.sig().clone();
    let n = a.len();
    let looped: Vec<bool> = (0..n as StateId).map(|q| a.delta(Letter::BLANK, &[q]) == Some(q)).collect();
    let mut by_target: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, t) in a.transitions().iter().enumerate() {
        let is_loop = t.letter == Letter::BLANK && t.children == [t.target];
        if !is_loop && !t.letter.root {
            by_target[t.target as usize].push(i);
        }
    }
    let mut memo: Vec<Option<Rc<Vec<Rc<Sk>>>>> = vec![None; n];
    let mut inv = QuantifiedInvariant { sig: sig.clone(), branch_vars: Vec::new(), clauses: Vec::new() };
    let mut branch_ids: HashMap<VarSet, usize> = HashMap::new();
    for t in a.transitions().iter().filter(|t| t.letter.root) {
        let opts: Vec<Rc<Vec<Rc<Sk>>>> =
            t.children.iter().map(|&c| skeletons(a, c, &by_target, &looped, &mut memo)).collect();
        let formula = a.states()[t.target as usize].formula.clone();
        let mut pick = vec![0usize; opts.len()];
        if formula.is_bottom() || opts.iter().any(|o| o.is_empty()) {
            continue;
        }
        loop {
            let kids: Vec<(Rc<Sk>, bool)> =
                opts.iter().zip(&pick).zip(&t.children).map(|((o, &i), &c)| (o[i].clone(), looped[c as usize])).collect();
            let root = Sk { letter: Letter::ROOT, ty: sig.full(), kids };
            let guard = guard_of(&root, &sig, &mut branch_ids, &mut inv.branch_vars);
            inv.clauses.push(Clause { guard, constraints: formula.constraints(), formula: formula.clone() });
            let mut i = 0;
            while i < pick.len() {
                pick[i] += 1;
                if pick[i] < opts[i].len() {
                    break;
                }
                pick[i] = 0;
                i += 1;
            }
            if i == pick.len() {
                break;
            }
        }
    }
    Ok(inv)
}

fn skeletons(
    a: &Qsda,
    q: StateId,
    by_target: &[Vec<usize>],
    looped: &[bool],
    memo: &mut Vec<Option<Rc<Vec<Rc<Sk>>>>>,
) -> Rc<Vec<Rc<Sk>>> {
    if let Some(v) = &memo[q as usize] {
        return v.clone();
    }
    let mut out = Vec::new();
    for &ti in &by_target[q as usize] {
        let t = &a.transitions()[ti];
        let opts: Vec<Rc<Vec<Rc<Sk>>>> = t.children.iter().map(|&c| skeletons(a, c, by_target, looped, memo)).collect();
        if opts.iter().any(|o| o.is_empty()) {
            continue;
        }
        let mut pick = vec![0usize; opts.len()];
        loop {
            let kids = opts.iter().zip(&pick).zip(&t.children).map(|((o, &i), &c)| (o[i].clone(), looped[c as usize]));
            out.push(Rc::new(Sk { letter: t.letter, ty: a.states()[q as usize].ty, kids: kids.collect() }));
            let mut i = 0;
            while i < pick.len() {
                pick[i] += 1;
                if pick[i] < opts[i].len() {
                    break;
                }
                pick[i] = 0;
                i += 1;
            }
            if i == pick.len() {
                break;
            }
        }
    }
    let v = Rc::new(out);
    memo[q as usize] = Some(v.clone());
    v
}

fn guard_of(root: &Sk, sig: &Signature, ids: &mut HashMap<VarSet, usize>, branch_vars: &mut Vec<VarSet>) -> Vec<Atom> {
    let npv = sig.npv();
    let mut eqs = Vec::new();
    let mut edges = Vec::new();
    let mut named = Vec::new();
    let mut stack: Vec<(&Sk, GuardNode)> = vec![(root, GuardNode::Dirty)];
    while let Some((s, me)) = stack.pop() {
        for (k, gap) in &s.kids {
            let vars = k.letter.vars(npv);
            let name = if vars != 0 {
                let lead = vars.trailing_zeros() as usize;
                for t in (lead + 1..32).filter(|t| vars >> t & 1 == 1) {
                    eqs.push(Atom::Eq(GuardNode::Term(lead), GuardNode::Term(t)));
                }
                GuardNode::Term(lead)
            } else {
                let below = k.ty & sig.pv_mask();
                let id = *ids.entry(below).or_insert_with(|| {
                    branch_vars.push(below);
                    branch_vars.len() - 1
                });
                GuardNode::Branch(id)
            };
            named.push(name);
            edges.push(if *gap { Atom::NextPlus(name, me) } else { Atom::Next(name, me) });
            stack.push((k, name));
        }
    }
    named.sort();
    eqs.sort_by_key(|a| format!("{a:?}"));
    edges.sort_by_key(|a| format!("{a:?}"));
    let mut out = eqs;
    out.extend(edges);
    for (i, &x) in named.iter().enumerate() {
        for &z in &named[i + 1..] {
            out.push(Atom::Ne(x, z));
        }
    }
    out
}

impl QuantifiedInvariant {
    pub fn sig(&self) -> &Arc<Signature> {
        &self.sig
    }

    fn node_name(&self, n: GuardNode) -> String {
        match n {
            GuardNode::Term(t) => self.sig.term_names()[t].clone(),
            GuardNode::Branch(i) => format!("b{}", i + 1),
            GuardNode::Dirty => "dirty".into(),
        }
    }

    pub fn render_atom(&self, a: &Atom) -> String {
        let (x, op, z) = match *a {
            Atom::Eq(x, z) => (x, "=", z),
            Atom::Ne(x, z) => (x, "!=", z),
            Atom::Next(x, z) => (x, "→next", z),
            Atom::NextPlus(x, z) => (x, "→next+", z),
        };
        format!("{} {op} {}", self.node_name(x), self.node_name(z))
    }

    pub fn render_guard(&self, c: &Clause) -> String {
        let atoms: Vec<String> = c.guard.iter().map(|a| self.render_atom(a)).collect();
        format!("({})", atoms.join(" && "))
    }

    pub fn render_formula(&self, c: &Clause) -> String {
        let names: Vec<String> = self.sig.term_names().iter().map(|n| format!("d({n})")).collect();
        c.formula.render(&names)
    }

    /// The invariant as text, one conjunct per line.
    pub fn render(&self) -> String {
        let mut s = String::new();
        if !self.branch_vars.is_empty() {
            let bs: Vec<String> = (0..self.branch_vars.len()).map(|i| format!("b{}", i + 1)).collect();
            let _ = write!(s, "exists {}. ", bs.join(", "));
        }
        if self.sig.ny() > 0 {
            let _ = write!(s, "forall {}. ", self.sig.uvars().join(", "));
        }
        if self.clauses.is_empty() {
            s.push_str("false\n");
            return s;
        }
        let guards: Vec<String> = self.clauses.iter().map(|c| self.render_guard(c)).collect();
        let _ = writeln!(s, "\n  ({})", guards.join("\n   || "));
        for (c, g) in self.clauses.iter().zip(&guards) {
            let _ = writeln!(s, "  && ({g} => ({}))", self.render_formula(c));
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let names = self.sig.pointers();
        let branch: Vec<_> = self
            .branch_vars
            .iter()
            .enumerate()
            .map(|(i, &below)| {
                let ptrs: Vec<&String> = (0..names.len()).filter(|p| below >> p & 1 == 1).map(|p| &names[p]).collect();
                json!({ "name": format!("b{}", i + 1), "below": ptrs })
            })
            .collect();
        let clauses: Vec<_> = self
            .clauses
            .iter()
            .map(|c| {
                let guard: Vec<String> = c.guard.iter().map(|a| self.render_atom(a)).collect();
                json!({ "guard": guard, "formula": self.render_formula(c) })
            })
            .collect();
        json!({
            "version": 1,
            "pointers": names,
            "universals": self.sig.uvars(),
            "branch_vars": branch,
            "clauses": clauses,
        })
    }

    /// Evaluates the invariant on a heap by enumerating the quantifiers:
    /// each `b` over the branching nodes (or `dirty` when unused), each
    /// universal over the non-root nodes, injectively.
    pub fn holds(&self, h: &HeapTree) -> bool {
        self.eval(h, true)
    }

    /// The invariant with every data formula read as true. It depends on
    /// the shape alone and is implied by `holds`, so a shape failing it
    /// fails the invariant under every labelling.
    pub fn shape_holds(&self, h: &HeapTree) -> bool {
        self.eval(h, false)
    }

    fn eval(&self, h: &HeapTree, data: bool) -> bool {
        let mut domain: Vec<usize> = (1..h.len()).filter(|&v| h.nodes[v].children.len() >= 2).collect();
        domain.push(0);
        let places = valuations(h, self.sig.ny());
        let k = self.branch_vars.len();
        let mut pick = vec![0usize; k];
        loop {
            let b: Vec<usize> = pick.iter().map(|&i| domain[i]).collect();
            if places.iter().all(|pl| self.holds_at(h, &b, pl, data)) {
                return true;
            }
            let mut i = 0;
            while i < k {
                pick[i] += 1;
                if pick[i] < domain.len() {
                    break;
                }
                pick[i] = 0;
                i += 1;
            }
            if i == k {
                return false;
            }
        }
    }

    fn holds_at(&self, h: &HeapTree, b: &[usize], place: &[usize], data: bool) -> bool {
        let npv = self.sig.npv();
        let ptr_node: Vec<usize> =
            (0..npv).map(|p| (0..h.len()).find(|&v| v > 0 && h.nodes[v].ptrs >> p & 1 == 1).unwrap_or(0)).collect();
        let node = |g: GuardNode| match g {
            GuardNode::Term(t) if t < npv => ptr_node[t],
            GuardNode::Term(t) => place[t - npv],
            GuardNode::Branch(i) => b[i],
            GuardNode::Dirty => 0,
        };
        let silent = |v: usize| v != 0 && h.nodes[v].ptrs == 0 && !place.contains(&v) && h.nodes[v].children.len() == 1;
        let atom = |a: &Atom| match *a {
            Atom::Eq(x, z) => node(x) == node(z),
            Atom::Ne(x, z) => node(x) != node(z),
            Atom::Next(x, z) => {
                let v = node(x);
                v != 0 && h.nodes[v].parent == Some(node(z))
            }
            Atom::NextPlus(x, z) => {
                let (v, target) = (node(x), node(z));
                if v == 0 {
                    return false;
                }
                let mut cur = h.nodes[v].parent;
                while let Some(u) = cur {
                    if u == target {
                        return true;
                    }
                    if !silent(u) {
                        return false;
                    }
                    cur = h.nodes[u].parent;
                }
                false
            }
        };
        let mut env: Vec<i64> = ptr_node.iter().map(|&v| h.nodes[v].datum).collect();
        env.extend(place.iter().map(|&v| h.nodes[v].datum));
        let sat = |cs: &[Constraint]| {
            cs.iter().all(|c| {
                let val = |s: crate::datafmla::Signed| if s.neg { -(env[s.term] as i128) } else { env[s.term] as i128 };
                val(c.a) + c.b.map_or(0, val) <= c.bound as i128
            })
        };
        let mut any = false;
        for c in &self.clauses {
            if c.guard.iter().all(atom) {
                any = true;
                if data && !sat(&c.constraints) {
                    return false;
                }
            }
        }
        any
    }
}
