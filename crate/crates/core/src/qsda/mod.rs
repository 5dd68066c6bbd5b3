//! Quantified skinny-tree data automata.
//!
//! A [`Qsda`] is a bottom-up deterministic automaton over symbolic trees.
//! Transitions read a letter and the sorted multiset of child states. Every
//! state has a type (the variables occurring below it) and root states carry
//! the data formula that the values at `PV ∪ Y` must satisfy.

mod io;
mod minimize;
mod powerset;

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::datafmla::DataFormula;
use crate::heap::{valuations, HeapTree, Letter, Signature, SymTree, VarSet};

pub use io::{QsdaJson, JSON_VERSION};
pub use powerset::{Combine, NState, NTrans, Nfa};

pub type StateId = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QsdaError {
    #[error("states of one powerset disagree on their type: {0}")]
    TypeClashInPowerset(String),
    #[error("invalid automaton: {0}")]
    Invalid(String),
    #[error("automata over different signatures")]
    SignatureMismatch,
    #[error("unsupported serialization version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed serialization: {0}")]
    Json(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct State {
    pub ty: VarSet,
    pub root: bool,
    /// `Bottom` on every non-root state.
    pub formula: DataFormula,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    /// Sorted.
    pub children: Vec<StateId>,
    pub letter: Letter,
    pub target: StateId,
}

/// A deterministic QSDA. Missing transitions reject.
#[derive(Clone)]
pub struct Qsda {
    sig: Arc<Signature>,
    states: Vec<State>,
    trans: Vec<Transition>,
    index: HashMap<(Letter, Vec<StateId>), StateId>,
}

impl PartialEq for Qsda {
    fn eq(&self, other: &Self) -> bool {
        self.sig == other.sig && self.states == other.states && self.trans == other.trans
    }
}

impl Eq for Qsda {}

impl std::hash::Hash for Qsda {
    fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
        self.states.hash(h);
        self.trans.hash(h);
    }
}

impl std::fmt::Debug for Qsda {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl Qsda {
    /// Builds an automaton from explicit parts. Children lists are sorted
    /// here; a repeated `(letter, children)` key is an error.
    pub fn from_parts(sig: Arc<Signature>, states: Vec<State>, trans: Vec<Transition>) -> Result<Qsda, QsdaError> {
        let mut index = HashMap::with_capacity(trans.len());
        let mut ts = Vec::with_capacity(trans.len());
        for mut t in trans {
            t.children.sort_unstable();
            if t.target as usize >= states.len() || t.children.iter().any(|&c| c as usize >= states.len()) {
                return Err(QsdaError::Invalid("transition mentions an unknown state".into()));
            }
            match index.insert((t.letter, t.children.clone()), t.target) {
                Some(old) if old != t.target => {
                    return Err(QsdaError::Invalid("nondeterministic transition".into()));
                }
                Some(_) => continue,
                None => ts.push(t),
            }
        }
        ts.sort();
        Ok(Qsda { sig, states, trans: ts, index })
    }

    /// The automaton with no states; maps every tree to false.
    pub fn bottom(sig: Arc<Signature>) -> Qsda {
        Qsda { sig, states: Vec::new(), trans: Vec::new(), index: HashMap::new() }
    }

    /// One state per type and `true` at the root: accepts every heap.
    /// The transition table grows quickly with the number of variables, so
    /// this is meant for small signatures.
    pub fn top(sig: Arc<Signature>) -> Qsda {
        let full = sig.full();
        let npv = sig.npv();
        let pv = sig.pv_mask();
        let n = sig.nterms();
        // Inner states are the types meeting PV.
        let types: Vec<VarSet> = (1..=full).filter(|t| t & pv != 0).collect();
        let id: HashMap<VarSet, StateId> = types.iter().enumerate().map(|(i, &t)| (t, i as StateId)).collect();
        let mut states: Vec<State> =
            types.iter().map(|&ty| State { ty, root: false, formula: DataFormula::Bottom }).collect();
        let root = states.len() as StateId;
        states.push(State { ty: full, root: true, formula: DataFormula::top(n) });
        let mut letters = Vec::new();
        for ptrs in 0..=pv {
            letters.push(Letter::new(ptrs, None));
            for j in 0..sig.ny() {
                letters.push(Letter::new(ptrs, Some(j as u8)));
            }
        }
        let mut trans = Vec::new();
        // Children multisets: sets of pairwise disjoint types, in increasing order.
        let mut stack: Vec<(Vec<VarSet>, VarSet)> = vec![(Vec::new(), 0)];
        while let Some((kids, used)) = stack.pop() {
            let kid_ids: Vec<StateId> = kids.iter().map(|t| id[t]).collect();
            for l in &letters {
                let lv = l.vars(npv);
                if lv & used != 0 || (kids.is_empty() && l.ptrs == 0) {
                    continue;
                }
                let ty = lv | used;
                if let Some(&t) = id.get(&ty) {
                    trans.push(Transition { children: kid_ids.clone(), letter: *l, target: t });
                }
            }
            if !kids.is_empty() && used & 1 == 1 {
                trans.push(Transition { children: kid_ids.clone(), letter: Letter::ROOT, target: root });
            }
            let last = kids.last().copied().unwrap_or(0);
            for &t in &types {
                if t > last && t & used == 0 {
                    let mut k = kids.clone();
                    k.push(t);
                    stack.push((k, used | t));
                }
            }
        }
        // Root requires the full type: drop root transitions below it.
        trans.retain(|t| t.target != root || t.children.iter().fold(0, |a, &c| a | types[c as usize]) == full);
        Qsda::from_parts(sig, states, trans).expect("top is well formed")
    }

    /// The automaton accepting exactly the symbolic tree `t`, mapped to `f`.
    pub fn from_tree(sig: Arc<Signature>, t: &SymTree, f: DataFormula) -> Result<Qsda, QsdaError> {
        let npv = sig.npv();
        let mut ty = vec![0; t.letters.len()];
        for v in t.post_order() {
            ty[v] = t.letters[v].vars(npv) | t.children[v].iter().fold(0, |a, &c| a | ty[c]);
        }
        let states = (0..t.letters.len())
            .map(|v| State { ty: ty[v], root: v == 0, formula: if v == 0 { f.clone() } else { DataFormula::Bottom } })
            .collect();
        let trans = (0..t.letters.len())
            .map(|v| Transition {
                children: t.children[v].iter().map(|&c| c as StateId).collect(),
                letter: t.letters[v],
                target: v as StateId,
            })
            .collect();
        let a = Qsda::from_parts(sig, states, trans)?;
        a.validate()?;
        Ok(a)
    }

    pub fn sig(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.trans
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// No tree reaches a root with a satisfiable formula.
    pub fn is_bottom(&self) -> bool {
        self.states.iter().all(|s| !s.root || s.formula.is_bottom())
    }

    pub fn delta(&self, letter: Letter, children: &[StateId]) -> Option<StateId> {
        let mut k = children.to_vec();
        k.sort_unstable();
        self.index.get(&(letter, k)).copied()
    }

    /// Same structure with every root formula replaced.
    pub fn map_formulas(&self, mut f: impl FnMut(StateId, &DataFormula) -> DataFormula) -> Qsda {
        let mut out = self.clone();
        for (i, s) in out.states.iter_mut().enumerate() {
            if s.root {
                s.formula = f(i as StateId, &s.formula);
            }
        }
        out
    }

    /// Runs bottom-up over a symbolic tree; `None` when some transition is
    /// missing or the root does not see every variable.
    pub fn run(&self, t: &SymTree) -> Option<StateId> {
        let mut at = vec![0 as StateId; t.letters.len()];
        for v in t.post_order() {
            let kids: Vec<StateId> = t.children[v].iter().map(|&c| at[c]).collect();
            at[v] = self.delta(t.letters[v], &kids)?;
        }
        let q = at[0];
        let s = &self.states[q as usize];
        (s.root && s.ty == self.sig.full()).then_some(q)
    }

    fn run_heap(&self, h: &HeapTree, place: &[usize]) -> Option<StateId> {
        let mut at = vec![0 as StateId; h.len()];
        for v in h.post_order() {
            let mut kids: Vec<StateId> = h.nodes[v].children.iter().map(|&c| at[c]).collect();
            kids.sort_unstable();
            at[v] = *self.index.get(&(h.letter(v, place), kids))?;
        }
        let s = &self.states[at[0] as usize];
        (s.root && s.ty == self.sig.full()).then_some(at[0])
    }

    /// Data values of the terms `PV ∪ Y` in a valuation tree.
    pub fn env(&self, h: &HeapTree, place: &[usize]) -> Vec<i64> {
        term_env(&self.sig, h, place)
    }

    /// Acceptance of one valuation tree.
    pub fn accepts_valuation(&self, h: &HeapTree, place: &[usize]) -> bool {
        match self.run_heap(h, place) {
            Some(q) => self.states[q as usize].formula.sat(&self.env(h, place)),
            None => false,
        }
    }

    /// Acceptance of a heap: every valuation tree must be accepted. Heaps
    /// with fewer cells than universals have none and are accepted.
    pub fn accepts_heap(&self, h: &HeapTree) -> bool {
        valuations(h, self.sig.ny()).iter().all(|p| self.accepts_valuation(h, p))
    }

    /// Checks the structural invariants of a QSDA.
    pub fn validate(&self) -> Result<(), QsdaError> {
        let npv = self.sig.npv();
        let full = self.sig.full();
        let pv = self.sig.pv_mask();
        let bad = |m: String| Err(QsdaError::Invalid(m));
        for (i, s) in self.states.iter().enumerate() {
            if s.ty & !full != 0 {
                return bad(format!("state {i} has a type outside the signature"));
            }
            if s.root && s.ty != full {
                return bad(format!("root state {i} lacks some variable"));
            }
            if !s.root && !s.formula.is_bottom() {
                return bad(format!("inner state {i} carries a formula"));
            }
            if let Some(n) = s.formula.arity() {
                if n != self.sig.nterms() {
                    return bad(format!("state {i} has a formula over {n} terms"));
                }
            }
        }
        for t in &self.trans {
            let target = &self.states[t.target as usize];
            let lv = t.letter.vars(npv);
            let mut acc = lv;
            for &c in &t.children {
                let cs = &self.states[c as usize];
                if cs.root {
                    return bad("a root state appears as a child".into());
                }
                if acc & cs.ty != 0 {
                    return bad("child types overlap".into());
                }
                acc |= cs.ty;
            }
            if acc != target.ty {
                return bad(format!("target type of {:?} is not the union of its inputs", t));
            }
            if t.letter.root != target.root {
                return bad("root letters must lead exactly to root states".into());
            }
            if t.letter.root && (t.letter.ptrs != 0 || t.letter.uvar.is_some()) {
                return bad("the root letter carries variables".into());
            }
            if t.children.is_empty() && (t.letter.ptrs == 0 || target.ty & pv == 0) {
                return bad("leaf transition without a pointer".into());
            }
            if t.letter.uvar.is_some_and(|j| j as usize >= self.sig.ny()) {
                return bad("letter mentions an unknown universal".into());
            }
        }
        Ok(())
    }

    /// The automaton as an NFA whose states are tagged with `side`.
    pub fn to_nfa(&self, side: u8) -> Nfa {
        let mut n = Nfa::new(self.sig.clone());
        self.append_to(&mut n, side);
        n
    }

    /// Adds a disjoint copy of this automaton to `n`; returns the id offset.
    pub fn append_to(&self, n: &mut Nfa, side: u8) -> u32 {
        let off = n.states.len() as u32;
        for s in &self.states {
            n.states.push(NState { ty: s.ty, root: s.root, formula: s.formula.clone(), side });
        }
        for t in &self.trans {
            n.trans.push(NTrans {
                children: t.children.iter().map(|&c| c + off).collect(),
                letter: t.letter,
                target: t.target + off,
            });
        }
        off
    }

    fn union(&self, other: &Qsda) -> Result<Nfa, QsdaError> {
        if self.sig != other.sig {
            return Err(QsdaError::SignatureMismatch);
        }
        let mut n = self.to_nfa(0);
        other.append_to(&mut n, 1);
        Ok(n)
    }

    /// Least upper bound in the formula-tree order.
    pub fn lattice_join(&self, other: &Qsda) -> Qsda {
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() || self == other {
            return self.clone();
        }
        let n = self.union(other).expect("join over one signature");
        n.determinize(Combine::Join).expect("union of valid automata").minimize()
    }

    /// Greatest lower bound in the formula-tree order.
    pub fn lattice_meet(&self, other: &Qsda) -> Qsda {
        if self.is_empty() || other.is_empty() {
            return Qsda::bottom(self.sig.clone());
        }
        if self == other {
            return self.clone();
        }
        let n = self.union(other).expect("meet over one signature");
        n.determinize(Combine::BothSidesMeet).expect("union of valid automata").minimize()
    }

    /// `self ⊑ other`: every symbolic tree maps to a formula in `self` that
    /// entails its formula in `other` (missing runs count as false).
    pub fn order_leq(&self, other: &Qsda) -> bool {
        if self.is_bottom() {
            return true;
        }
        if self == other {
            return true;
        }
        let n = self.union(other).expect("order over one signature");
        let ps = powerset::powerset(&n, false).expect("union of valid automata");
        ps.sets.iter().all(|set| {
            let mut fa = DataFormula::Bottom;
            let mut fb = DataFormula::Bottom;
            for &m in set {
                let s = &n.states[m as usize];
                if !s.root {
                    continue;
                }
                if s.side == 0 {
                    fa = fa.join(&s.formula);
                } else {
                    fb = fb.join(&s.formula);
                }
            }
            fa.leq(&fb)
        })
    }

    /// For every symbolic tree accepted by `other`, the root state of
    /// `other` it reaches paired with the root state of `self` it reaches,
    /// if any. Each pair is listed once.
    pub fn root_pairs(&self, other: &Qsda) -> Vec<(Option<StateId>, StateId)> {
        if other.is_empty() {
            return Vec::new();
        }
        let n = self.union(other).expect("pairing over one signature");
        let base = self.states.len() as u32;
        let ps = powerset::powerset(&n, false).expect("union of valid automata");
        let mut out: Vec<(Option<StateId>, StateId)> = Vec::new();
        for set in &ps.sets {
            let roots = set.iter().filter(|&&m| n.states[m as usize].root);
            let mut mine = None;
            let mut theirs = None;
            for &m in roots {
                if m < base {
                    mine = Some(m);
                } else {
                    theirs = Some(m - base);
                }
            }
            if let Some(r) = theirs {
                out.push((mine, r));
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Human-readable listing of states and transitions.
    pub fn render(&self) -> String {
        use std::fmt::Write as _;
        let names = self.sig.term_names();
        let mut s = String::new();
        for (i, st) in self.states.iter().enumerate() {
            let _ = write!(s, "q{i} {}", self.sig.render_set(st.ty));
            if st.root {
                let _ = write!(s, " root [{}]", st.formula.render(&names));
            }
            s.push('\n');
        }
        for t in &self.trans {
            let kids: Vec<String> = t.children.iter().map(|c| format!("q{c}")).collect();
            let _ = writeln!(s, "({}) {} -> q{}", kids.join(","), t.letter.render(&self.sig), t.target);
        }
        s
    }
}

/// Data values of `PV ∪ Y` in a heap tree under a placement of universals.
pub fn term_env(sig: &Signature, h: &HeapTree, place: &[usize]) -> Vec<i64> {
    let mut env = vec![0; sig.nterms()];
    for node in &h.nodes {
        for (p, slot) in env.iter_mut().enumerate().take(sig.npv()) {
            if node.ptrs >> p & 1 == 1 {
                *slot = node.datum;
            }
        }
    }
    for (j, &v) in place.iter().enumerate() {
        env[sig.npv() + j] = h.nodes[v].datum;
    }
    env
}

#[cfg(test)]
mod tests;
