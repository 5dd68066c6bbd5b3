//! Rule sets for the statements that change the shape of the heap.

use std::collections::HashMap;

use super::explore::{blank_closure, garbage_states, Emit, Explorer, Rules};
use crate::datafmla::DataFormula;
use crate::heap::{Letter, VarSet};
use crate::qsda::{NState, Qsda, StateId, Transition};

fn bit(v: usize) -> VarSet {
    1 << v
}

fn inner(ty: VarSet) -> NState {
    NState { ty, root: false, formula: DataFormula::Bottom, side: 0 }
}

fn rooted(ty: VarSet, formula: DataFormula) -> NState {
    NState { ty, root: true, formula, side: 0 }
}

/// An unlabelled leaf cannot occur in a heap.
fn empty_leaf(children: &[u32], letter: Letter) -> bool {
    children.is_empty() && !letter.root && letter.ptrs == 0
}

fn ids<K>(kids: &[(u32, &K)]) -> Vec<u32> {
    kids.iter().map(|k| k.0).collect()
}

const GARBAGE: u32 = 0;
const STAR_LEAF: u32 = 1;

/// Omission table: every state in `states` may be dropped with `tag`.
fn omit_table(a: &Qsda, states: &[StateId], tag: u32) -> Vec<Vec<u32>> {
    let mut t = vec![Vec::new(); a.len()];
    for &s in states {
        t[s as usize] = vec![tag];
    }
    t
}

/// `p := q`, including `p := nil`.
pub(crate) struct Assign<'a> {
    pub a: &'a Qsda,
    pub p: usize,
    pub q: usize,
    omit: Vec<Vec<u32>>,
}

impl<'a> Assign<'a> {
    pub fn new(a: &'a Qsda, p: usize, q: usize) -> Self {
        Assign { a, p, q, omit: omit_table(a, &garbage_states(a, p), GARBAGE) }
    }

    fn relabel(&self, s: VarSet) -> VarSet {
        (s & !bit(self.p)) | if s & bit(self.q) != 0 { bit(self.p) } else { 0 }
    }
}

impl Rules for Assign<'_> {
    type Key = StateId;

    fn base(&self, k: &StateId) -> Option<StateId> {
        Some(*k)
    }

    fn state(&self, &q: &StateId) -> NState {
        let s = &self.a.states()[q as usize];
        if s.root {
            rooted(s.ty, s.formula.project(self.p).constrain_eq(self.p, self.q))
        } else {
            inner(self.relabel(s.ty))
        }
    }

    fn omissions(&self, c: StateId) -> &[u32] {
        &self.omit[c as usize]
    }

    fn expand(&self, tr: &Transition, kids: &[(u32, &StateId)], _: Option<u32>, _: &Explorer<StateId>, out: &mut Vec<Emit<StateId>>) {
        let letter = Letter { ptrs: self.relabel(tr.letter.ptrs), ..tr.letter };
        let children = ids(kids);
        if !empty_leaf(&children, letter) {
            out.push(Emit { children, letter, target: tr.target });
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Load {
    Plain(StateId),
    /// The subtree rooted at the node `r` points to.
    Star(StateId),
    /// `p` has been placed; the set holds the other variables at its node.
    Done(StateId, VarSet),
}

/// `p := r->next`.
pub(crate) struct LoadNext<'a> {
    pub a: &'a Qsda,
    pub p: usize,
    pub r: usize,
    npv: usize,
    omit: Vec<Vec<u32>>,
}

impl<'a> LoadNext<'a> {
    pub fn new(a: &'a Qsda, p: usize, r: usize) -> Self {
        let omit = if p == r {
            match a.delta(Letter::new(bit(p), None), &[]) {
                Some(leaf) => omit_table(a, &[leaf], STAR_LEAF),
                None => vec![Vec::new(); a.len()],
            }
        } else {
            omit_table(a, &garbage_states(a, p), GARBAGE)
        };
        LoadNext { a, p, r, npv: a.sig().npv(), omit }
    }
}

impl Rules for LoadNext<'_> {
    type Key = Load;

    fn base(&self, k: &Load) -> Option<StateId> {
        match *k {
            Load::Plain(q) | Load::Star(q) | Load::Done(q, _) => Some(q),
        }
    }

    fn state(&self, k: &Load) -> NState {
        let p = bit(self.p);
        match *k {
            Load::Plain(q) | Load::Star(q) => inner(self.a.states()[q as usize].ty & !p),
            Load::Done(q, v) => {
                let s = &self.a.states()[q as usize];
                if s.root {
                    let mut f = s.formula.project(self.p);
                    for t in (0..32).filter(|t| v >> t & 1 == 1) {
                        f = f.constrain_eq(self.p, t);
                    }
                    rooted(s.ty, f)
                } else {
                    inner(s.ty | p)
                }
            }
        }
    }

    fn omissions(&self, c: StateId) -> &[u32] {
        &self.omit[c as usize]
    }

    fn expand(&self, tr: &Transition, kids: &[(u32, &Load)], omitted: Option<u32>, _: &Explorer<Load>, out: &mut Vec<Emit<Load>>) {
        let pi = tr.letter;
        let (p, r) = (bit(self.p), bit(self.r));
        let children = ids(kids);
        let stars = kids.iter().filter(|k| matches!(k.1, Load::Star(_))).count();
        let done: Vec<VarSet> = kids
            .iter()
            .filter_map(|k| match k.1 {
                Load::Done(_, v) => Some(*v),
                _ => None,
            })
            .collect();
        let star_leaf = omitted == Some(STAR_LEAF);
        let stripped = Letter { ptrs: pi.ptrs & !p, ..pi };
        let placed = Letter { ptrs: (pi.ptrs & !p) | p, ..pi };
        let here = (pi.vars(self.npv) & !p, tr.target);
        let (letter, target) = if pi.ptrs & r != 0 {
            // The node `r` points to.
            if pi.root || pi.ptrs & 1 != 0 || stars + done.len() > 0 || star_leaf {
                return;
            }
            (stripped, Load::Star(tr.target))
        } else if star_leaf || stars == 1 {
            if pi.root || stars + done.len() + usize::from(star_leaf) != 1 {
                return;
            }
            (placed, Load::Done(here.1, here.0))
        } else if stars > 1 {
            return;
        } else if done.len() == 1 {
            (stripped, Load::Done(tr.target, done[0]))
        } else if done.is_empty() {
            if self.a.states()[tr.target as usize].ty & r != 0 {
                return;
            }
            (stripped, Load::Plain(tr.target))
        } else {
            return;
        };
        if !empty_leaf(&children, letter) {
            out.push(Emit { children, letter, target });
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Alloc {
    /// An input state in the branch where the named universal (if any) is
    /// moved onto the new node.
    Base(StateId, Option<u8>),
    /// The new node.
    Hat(Option<u8>),
    /// Subtrees whose every node carries a universal other than the moved one.
    Vac(u8, VarSet),
    VacRoot(u8),
}

/// `new p`.
pub(crate) struct New<'a> {
    pub a: &'a Qsda,
    pub p: usize,
    npv: usize,
    ny: usize,
    omit: Vec<Vec<u32>>,
}

impl<'a> New<'a> {
    pub fn new(a: &'a Qsda, p: usize) -> Self {
        let sig = a.sig();
        New { a, p, npv: sig.npv(), ny: sig.ny(), omit: omit_table(a, &garbage_states(a, p), GARBAGE) }
    }

    fn ybit(&self, y: Option<u8>) -> VarSet {
        y.map_or(0, |j| bit(self.npv + j as usize))
    }

    fn vac_seeds(&self, ex: &Explorer<Alloc>, out: &mut Vec<Emit<Alloc>>) {
        let full = self.a.sig().full();
        let free_ptrs = self.a.sig().pv_mask() & !bit(self.p);
        for y in 0..self.ny as u8 {
            let vac: Vec<(u32, VarSet)> = ex
                .keys()
                .iter()
                .enumerate()
                .filter_map(|(i, k)| match *k {
                    Alloc::Vac(j, ty) if j == y => Some((i as u32, ty)),
                    _ => None,
                })
                .collect();
            // Children: sets of existing states with disjoint types.
            let mut combos: Vec<(Vec<u32>, VarSet)> = vec![(Vec::new(), 0)];
            for &(id, ty) in &vac {
                let n = combos.len();
                for i in 0..n {
                    if combos[i].1 & ty == 0 {
                        let mut c = combos[i].0.clone();
                        c.push(id);
                        combos.push((c, combos[i].1 | ty));
                    }
                }
            }
            for (kids, used) in &combos {
                for u in (0..self.ny as u8).filter(|&u| u != y) {
                    let ub = bit(self.npv + u as usize);
                    if used & ub != 0 {
                        continue;
                    }
                    // Pointer sets: subsets of the free pointers not yet used.
                    let avail = free_ptrs & !used;
                    let mut s = avail;
                    loop {
                        if !(kids.is_empty() && s == 0) {
                            out.push(Emit {
                                children: kids.clone(),
                                letter: Letter::new(s, Some(u)),
                                target: Alloc::Vac(y, used | s | ub),
                            });
                        }
                        if s == 0 {
                            break;
                        }
                        s = (s - 1) & avail;
                    }
                }
                if let Some(hat) = ex.id(&Alloc::Hat(Some(y))) {
                    if !kids.is_empty() && used | bit(self.p) | self.ybit(Some(y)) == full {
                        let mut children = kids.clone();
                        children.push(hat);
                        out.push(Emit { children, letter: Letter::ROOT, target: Alloc::VacRoot(y) });
                    }
                }
            }
        }
    }
}

impl Rules for New<'_> {
    type Key = Alloc;

    fn base(&self, k: &Alloc) -> Option<StateId> {
        match *k {
            Alloc::Base(q, _) => Some(q),
            _ => None,
        }
    }

    fn state(&self, k: &Alloc) -> NState {
        let p = bit(self.p);
        let full = self.a.sig().full();
        match *k {
            Alloc::Base(q, y) => {
                let s = &self.a.states()[q as usize];
                if s.root {
                    let f = match y {
                        None => s.formula.project(self.p),
                        Some(j) => {
                            let t = self.npv + j as usize;
                            s.formula.project(self.p).project(t).constrain_eq(self.p, t)
                        }
                    };
                    rooted(full, f)
                } else {
                    inner(s.ty & !p & !self.ybit(y))
                }
            }
            Alloc::Hat(y) => inner(p | self.ybit(y)),
            Alloc::Vac(_, ty) => inner(ty),
            Alloc::VacRoot(y) => {
                rooted(full, DataFormula::top(self.a.sig().nterms()).constrain_eq(self.p, self.npv + y as usize))
            }
        }
    }

    fn omissions(&self, c: StateId) -> &[u32] {
        &self.omit[c as usize]
    }

    fn is_extra(&self, k: &Alloc) -> bool {
        matches!(k, Alloc::Hat(_) | Alloc::Vac(..))
    }

    fn seed(&self, ex: &Explorer<Alloc>, out: &mut Vec<Emit<Alloc>>) {
        let p = bit(self.p);
        out.push(Emit { children: vec![], letter: Letter::new(p, None), target: Alloc::Hat(None) });
        for j in 0..self.ny as u8 {
            out.push(Emit { children: vec![], letter: Letter::new(p, Some(j)), target: Alloc::Hat(Some(j)) });
        }
        if self.ny >= 2 {
            self.vac_seeds(ex, out);
        }
    }

    fn expand(&self, tr: &Transition, kids: &[(u32, &Alloc)], _: Option<u32>, ex: &Explorer<Alloc>, out: &mut Vec<Emit<Alloc>>) {
        let mut branch: Option<Option<u8>> = None;
        for k in kids {
            match k.1 {
                Alloc::Base(_, y) => {
                    if branch.is_some_and(|b| b != *y) {
                        return;
                    }
                    branch = Some(*y);
                }
                _ => return,
            }
        }
        let branches: Vec<Option<u8>> = match branch {
            Some(b) => vec![b],
            None => std::iter::once(None).chain((0..self.ny as u8).map(Some)).collect(),
        };
        for y in branches {
            let pi = tr.letter;
            let uvar = if y.is_some() && pi.uvar == y { None } else { pi.uvar };
            let letter = Letter { ptrs: pi.ptrs & !bit(self.p), uvar, root: pi.root };
            let mut children = ids(kids);
            if pi.root {
                match ex.id(&Alloc::Hat(y)) {
                    Some(h) => children.push(h),
                    None => continue,
                }
            } else if empty_leaf(&children, letter) {
                continue;
            }
            out.push(Emit { children, letter, target: Alloc::Base(tr.target, y) });
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Redirect {
    Plain(StateId),
    /// The subtree rooted at `p`'s node, unchanged.
    Star(StateId),
    /// Contains the node `r` points to, with `p`'s subtree (second) hung
    /// below it; the first component is the input state without it.
    Holding(StateId, StateId),
    /// Contains the old parent of `p`'s node, which lost that child.
    Needing(StateId, StateId),
}

/// `p->next := r`, including `p->next := nil`. Never called with `p == r`.
pub(crate) struct Redirects<'a> {
    pub a: &'a Qsda,
    pub p: usize,
    pub r: usize,
    omit: Vec<Vec<u32>>,
}

impl<'a> Redirects<'a> {
    pub fn new(a: &'a Qsda, p: usize, r: usize) -> Self {
        let mut omit: Vec<Vec<u32>> = vec![Vec::new(); a.len()];
        for (qv, s) in a.states().iter().enumerate() {
            if s.root || s.ty & bit(p) == 0 || s.ty & bit(r) != 0 {
                continue;
            }
            // The subtree itself, or an unlabelled chain above it that
            // becomes garbage once it moves.
            let mut attach = vec![qv as StateId];
            if let Some(c) = a.delta(Letter::BLANK, &[qv as StateId]) {
                attach.extend(blank_closure(a, c));
            }
            for c in attach {
                if !omit[c as usize].contains(&(qv as u32)) {
                    omit[c as usize].push(qv as u32);
                }
            }
        }
        Redirects { a, p, r, omit }
    }

    fn ty(&self, q: StateId) -> VarSet {
        self.a.states()[q as usize].ty
    }
}

impl Rules for Redirects<'_> {
    type Key = Redirect;

    fn base(&self, k: &Redirect) -> Option<StateId> {
        match *k {
            Redirect::Plain(q) | Redirect::Star(q) | Redirect::Holding(q, _) | Redirect::Needing(q, _) => Some(q),
        }
    }

    fn state(&self, k: &Redirect) -> NState {
        match *k {
            Redirect::Plain(q) => {
                let s = &self.a.states()[q as usize];
                NState { ty: s.ty, root: s.root, formula: s.formula.clone(), side: 0 }
            }
            Redirect::Star(q) => inner(self.ty(q)),
            Redirect::Holding(q, v) => inner(self.ty(q) | self.ty(v)),
            Redirect::Needing(q, v) => inner(self.ty(q) & !self.ty(v)),
        }
    }

    fn omissions(&self, c: StateId) -> &[u32] {
        &self.omit[c as usize]
    }

    fn is_extra(&self, k: &Redirect) -> bool {
        matches!(k, Redirect::Star(_))
    }

    fn expand(&self, tr: &Transition, kids: &[(u32, &Redirect)], omitted: Option<u32>, ex: &Explorer<Redirect>, out: &mut Vec<Emit<Redirect>>) {
        let pi = tr.letter;
        let q = tr.target;
        let (p, r) = (bit(self.p), bit(self.r));
        let mut star = None;
        let mut holding = None;
        let mut needing = None;
        for &(_, k) in kids {
            let (slot, v) = match *k {
                Redirect::Plain(_) => continue,
                Redirect::Star(v) => (&mut star, v),
                Redirect::Holding(_, v) => (&mut holding, v),
                Redirect::Needing(_, v) => (&mut needing, v),
            };
            if slot.is_some() {
                return;
            }
            *slot = Some(v);
        }
        let plain_kids = star.is_none() && holding.is_none() && needing.is_none();
        let children = ids(kids);
        let mut emit = |children: Vec<u32>, target: Redirect| {
            if !empty_leaf(&children, pi) {
                out.push(Emit { children, letter: pi, target });
            }
        };
        if pi.ptrs & p != 0 {
            // The node `p` points to.
            if omitted.is_none() && plain_kids && !pi.root && pi.ptrs & 1 == 0 && self.ty(q) & r == 0 {
                emit(children, Redirect::Star(q));
            }
        } else if pi.ptrs & r != 0 {
            // The node `r` points to; `p`'s subtree hangs here afterwards.
            match (omitted, star, holding, needing) {
                (None, Some(_), None, None) => emit(children, Redirect::Plain(q)),
                (Some(v), None, None, None) | (None, None, None, Some(v)) => {
                    if let Some(s) = ex.id(&Redirect::Star(v)) {
                        let mut c = children;
                        c.push(s);
                        emit(c, Redirect::Plain(q));
                    }
                }
                (None, None, None, None) => {
                    for (id, k) in ex.keys().iter().enumerate() {
                        if let Redirect::Star(v) = *k {
                            let mut c = children.clone();
                            c.push(id as u32);
                            emit(c, Redirect::Holding(q, v));
                        }
                    }
                }
                _ => {}
            }
        } else {
            if star.is_some() {
                return;
            }
            match (omitted, holding, needing) {
                (Some(v), Some(h), None) if h == v => emit(children, Redirect::Plain(q)),
                (Some(v), None, None) if !pi.root => emit(children, Redirect::Needing(q, v)),
                (None, Some(h), Some(n)) if h == n => emit(children, Redirect::Plain(q)),
                (None, Some(h), None) if !pi.root => emit(children, Redirect::Holding(q, h)),
                (None, None, Some(n)) if !pi.root => emit(children, Redirect::Needing(q, n)),
                (None, None, None) => emit(children, Redirect::Plain(q)),
                _ => {}
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Write {
    Plain(StateId),
    /// Below `p`'s node; the set holds every variable at that node.
    Has(StateId, VarSet),
}

/// `p->data := e`. The formula update is supplied by the caller.
pub(crate) struct DataWrite<'a, F: Fn(&DataFormula, VarSet) -> DataFormula> {
    pub a: &'a Qsda,
    pub p: usize,
    pub update: F,
    pub npv: usize,
}

impl<F: Fn(&DataFormula, VarSet) -> DataFormula> Rules for DataWrite<'_, F> {
    type Key = Write;

    fn base(&self, k: &Write) -> Option<StateId> {
        match *k {
            Write::Plain(q) | Write::Has(q, _) => Some(q),
        }
    }

    fn state(&self, k: &Write) -> NState {
        match *k {
            Write::Plain(q) => inner(self.a.states()[q as usize].ty),
            Write::Has(q, v) => {
                let s = &self.a.states()[q as usize];
                if s.root {
                    rooted(s.ty, (self.update)(&s.formula, v))
                } else {
                    inner(s.ty)
                }
            }
        }
    }

    fn expand(&self, tr: &Transition, kids: &[(u32, &Write)], _: Option<u32>, _: &Explorer<Write>, out: &mut Vec<Emit<Write>>) {
        let pi = tr.letter;
        let mut has = kids.iter().filter_map(|k| match *k.1 {
            Write::Has(_, v) => Some(v),
            Write::Plain(_) => None,
        });
        let target = if pi.ptrs & bit(self.p) != 0 {
            if pi.ptrs & 1 != 0 {
                // A write through nil is a memory error.
                return;
            }
            Write::Has(tr.target, pi.vars(self.npv))
        } else {
            match has.next() {
                Some(v) => Write::Has(tr.target, v),
                None => Write::Plain(tr.target),
            }
        };
        out.push(Emit { children: ids(kids), letter: pi, target });
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) enum NextTest {
    Away(StateId),
    /// The subtree rooted at `p`'s node.
    AtP(StateId),
    Settled(StateId),
}

/// `assume(p->next == r)` and its negation.
pub(crate) struct NextIs<'a> {
    pub a: &'a Qsda,
    pub p: usize,
    pub r: usize,
    pub positive: bool,
}

impl Rules for NextIs<'_> {
    type Key = NextTest;

    fn base(&self, k: &NextTest) -> Option<StateId> {
        match *k {
            NextTest::Away(q) | NextTest::AtP(q) | NextTest::Settled(q) => Some(q),
        }
    }

    fn state(&self, k: &NextTest) -> NState {
        let q = self.base(k).unwrap();
        let s = &self.a.states()[q as usize];
        NState { ty: s.ty, root: s.root, formula: s.formula.clone(), side: 0 }
    }

    fn expand(&self, tr: &Transition, kids: &[(u32, &NextTest)], _: Option<u32>, _: &Explorer<NextTest>, out: &mut Vec<Emit<NextTest>>) {
        let pi = tr.letter;
        let at_p = kids.iter().any(|k| matches!(k.1, NextTest::AtP(_)));
        let settled = kids.iter().any(|k| matches!(k.1, NextTest::Settled(_)));
        let target = if pi.ptrs & bit(self.p) != 0 {
            // `nil->next` is dirty, which no variable denotes.
            if self.positive && pi.ptrs & 1 != 0 {
                return;
            }
            NextTest::AtP(tr.target)
        } else if at_p {
            let is_r = !pi.root && pi.ptrs & bit(self.r) != 0;
            if is_r != self.positive {
                return;
            }
            NextTest::Settled(tr.target)
        } else if settled {
            NextTest::Settled(tr.target)
        } else {
            NextTest::Away(tr.target)
        };
        out.push(Emit { children: ids(kids), letter: pi, target });
    }
}

/// Input transitions grouped by target, used by filters.
#[allow(dead_code)]
pub(crate) fn by_target(a: &Qsda) -> HashMap<StateId, Vec<&Transition>> {
    let mut m: HashMap<StateId, Vec<&Transition>> = HashMap::new();
    for t in a.transitions() {
        m.entry(t.target).or_default().push(t);
    }
    m
}
