//! Property templates and the bottom-up trackers that read them.
//!
//! A template is a shape requirement on the anchor's path plus a rule on the
//! data of the list cells on that path. The tracker walks a symbolic tree
//! bottom-up; the list cells are the nodes strictly between the anchor and
//! `nil`, read from the anchor upwards, which is list order.

use std::collections::HashMap;
use std::hash::Hash;
use std::sync::Arc;

use serde::Serialize;

use crate::datafmla::{neg, pos, Constraint, DataFormula};
use crate::heap::{Letter, Signature, VarSet};
use crate::qsda::{Qsda, State, Transition};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PropKind {
    List,
    Init,
    Sort,
    SortDesc,
    Max,
    Gek,
    Last,
    Empty,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub(crate) enum Shape {
    Any,
    ReachesNil,
    AtNil,
    /// The parameter pointer sits on the last list cell (or at `nil` with
    /// the anchor).
    LastIs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub(crate) enum Elems {
    Free,
    /// Earlier cells hold smaller or equal data.
    Ordered,
    /// Earlier cells hold larger or equal data.
    Descending,
    /// Every cell `x` has `x = k + c`.
    Equal,
    /// `x <= k + c`.
    AtMost,
    /// `x >= k + c`.
    AtLeast,
}

/// Declarative description of one property.
#[derive(Copy, Clone, Debug)]
pub(crate) struct Template {
    pub kind: PropKind,
    pub name: &'static str,
    /// Whether a second pointer argument is taken.
    pub param: bool,
    pub shape: Shape,
    pub elems: Elems,
    pub universals: usize,
}

pub(crate) const TEMPLATES: &[Template] = &[
    Template { kind: PropKind::List, name: "List", param: false, shape: Shape::ReachesNil, elems: Elems::Free, universals: 0 },
    Template { kind: PropKind::Init, name: "Init", param: true, shape: Shape::Any, elems: Elems::Equal, universals: 1 },
    Template { kind: PropKind::Sort, name: "Sort", param: false, shape: Shape::Any, elems: Elems::Ordered, universals: 2 },
    Template { kind: PropKind::SortDesc, name: "SortDesc", param: false, shape: Shape::Any, elems: Elems::Descending, universals: 2 },
    Template { kind: PropKind::Max, name: "Max", param: true, shape: Shape::Any, elems: Elems::AtMost, universals: 1 },
    Template { kind: PropKind::Gek, name: "Gek", param: true, shape: Shape::Any, elems: Elems::AtLeast, universals: 1 },
    Template { kind: PropKind::Last, name: "Last", param: true, shape: Shape::LastIs, elems: Elems::Free, universals: 0 },
    Template { kind: PropKind::Empty, name: "Empty", param: false, shape: Shape::AtNil, elems: Elems::Free, universals: 0 },
];

pub(crate) fn template(kind: PropKind) -> &'static Template {
    TEMPLATES.iter().find(|t| t.kind == kind).expect("every kind has a template")
}

/// A property instantiated over pointer indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PropertySpec {
    pub kind: PropKind,
    pub anchor: usize,
    pub param: Option<usize>,
    /// Constant added to the parameter in data bounds.
    pub offset: i64,
}

// `last` starts at 0: the parameter has not been seen on the path.
const TOP: u8 = 1;
const DONE: u8 = 2;

/// What the tracker knows about a subtree.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub(crate) struct Track {
    /// The subtree's top node is `nil`.
    pub(crate) nil: bool,
    /// The property already failed inside the subtree.
    pub(crate) dead: bool,
    /// The anchor is in the subtree.
    on: bool,
    /// The anchor's path went through `nil`.
    past: bool,
    anchor_at_nil: bool,
    /// Universals on list cells of the anchor's path, in list order.
    ys: Vec<u8>,
    last: u8,
}

/// The subtree cannot occur in a heap: `nil` hangs below a non-root node.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Invalid;

impl PropertySpec {
    pub(crate) fn template(&self) -> &'static Template {
        template(self.kind)
    }

    pub fn universals(&self) -> usize {
        self.template().universals
    }

    pub(crate) fn step(&self, l: Letter, kids: &[&Track]) -> Result<Track, Invalid> {
        if kids.iter().any(|k| k.nil) {
            return Err(Invalid);
        }
        let is_nil = l.has_ptr(0);
        if kids.iter().any(|k| k.dead) {
            return Ok(Track { nil: is_nil, dead: true, ..Track::default() });
        }
        let tpl = self.template();
        let has_a = l.has_ptr(self.anchor);
        let below = kids.iter().find(|k| k.on);
        let Some(mut t) = below.map(|k| (*k).clone()).or_else(|| has_a.then(Track::default)) else {
            return Ok(Track { nil: is_nil, ..Track::default() });
        };
        t.on = true;
        t.nil = is_nil;
        let lp = self.param.unwrap_or(usize::MAX);
        let dead = Track { nil: is_nil, dead: true, ..Track::default() };
        if is_nil {
            t.past = true;
            t.anchor_at_nil = has_a;
            if tpl.shape == Shape::LastIs {
                let ok = if has_a { l.has_ptr(lp) } else { t.last == TOP };
                if !ok {
                    return Ok(dead);
                }
                t.last = DONE;
            }
        } else {
            if let (Some(y), false) = (l.uvar, tpl.elems == Elems::Free) {
                t.ys.push(y);
            }
            if tpl.shape == Shape::LastIs {
                if l.has_ptr(lp) {
                    t.last = TOP;
                } else if t.last == TOP {
                    return Ok(dead);
                }
            }
        }
        Ok(t)
    }

    /// The formula a root over `kids` demands; `None` when the shape fails.
    pub(crate) fn root(&self, sig: &Signature, kids: &[&Track]) -> Option<DataFormula> {
        let t = kids.iter().find(|k| k.on)?;
        if t.dead {
            return None;
        }
        let tpl = self.template();
        let ok = match tpl.shape {
            Shape::Any => true,
            Shape::ReachesNil => t.past,
            Shape::AtNil => t.anchor_at_nil,
            Shape::LastIs => t.last == DONE,
        };
        ok.then(|| self.elements(sig, &t.ys, DataFormula::top(sig.nterms())))
    }

    /// Meets `f` with the data rule over the given list-order universals.
    pub(crate) fn elements(&self, sig: &Signature, ys: &[u8], f: DataFormula) -> DataFormula {
        let yt = |y: u8| sig.uvar_term(y as usize);
        let k = self.param.unwrap_or(0);
        let c = self.offset;
        let mut f = f;
        match self.template().elems {
            Elems::Free => {}
            Elems::Ordered | Elems::Descending => {
                let up = self.template().elems == Elems::Ordered;
                for (i, &a) in ys.iter().enumerate() {
                    for &b in &ys[i + 1..] {
                        let (lo, hi) = if up { (a, b) } else { (b, a) };
                        f = f.constrain(&Constraint { a: pos(yt(lo)), b: Some(neg(yt(hi))), bound: 0 });
                    }
                }
            }
            Elems::Equal => {
                for &y in ys {
                    f = f.constrain_offset(yt(y), k, c);
                }
            }
            Elems::AtMost => {
                for &y in ys {
                    f = f.constrain(&Constraint { a: pos(yt(y)), b: Some(neg(k)), bound: c });
                }
            }
            Elems::AtLeast => {
                for &y in ys {
                    f = f.constrain(&Constraint { a: pos(k), b: Some(neg(yt(y))), bound: -c });
                }
            }
        }
        f
    }
}

/// Every letter over the signature, the root letter excluded.
pub(crate) fn all_letters(sig: &Signature) -> Vec<Letter> {
    let mut out = Vec::new();
    for ptrs in 0..1u32 << sig.npv() {
        out.push(Letter::new(ptrs, None));
        for y in 0..sig.ny() {
            out.push(Letter::new(ptrs, Some(y as u8)));
        }
    }
    out
}

/// The deterministic automaton of a tracker over all symbolic trees built
/// from `letters`. `step` returning `None` rejects; `root` gives the formula
/// at an accepting root.
pub(crate) fn materialize<T, S, R>(sig: &Arc<Signature>, letters: &[Letter], step: S, root: R) -> Qsda
where
    T: Clone + Eq + Hash,
    S: Fn(Letter, &[&T]) -> Option<T>,
    R: Fn(&[&T]) -> Option<DataFormula>,
{
    let npv = sig.npv();
    let full = sig.full();
    // Inner keys with their state ids; root states live only in `states`.
    let mut keys: Vec<(VarSet, T, u32)> = Vec::new();
    let mut ids: HashMap<(VarSet, T), u32> = HashMap::new();
    let mut states: Vec<State> = Vec::new();
    let mut roots: HashMap<DataFormula, u32> = HashMap::new();
    let mut trans: Vec<Transition> = Vec::new();

    let mut add = |ty: VarSet, t: T, states: &mut Vec<State>, keys: &mut Vec<(VarSet, T, u32)>| -> u32 {
        *ids.entry((ty, t.clone())).or_insert_with(|| {
            let id = states.len() as u32;
            states.push(State { ty, root: false, formula: DataFormula::Bottom });
            keys.push((ty, t, id));
            id
        })
    };

    for &l in letters.iter().filter(|l| l.ptrs != 0) {
        if let Some(t) = step(l, &[]) {
            let id = add(l.vars(npv), t, &mut states, &mut keys);
            trans.push(Transition { children: vec![], letter: l, target: id });
        }
    }

    // Combinations are generated once, when their last member is new.
    let mut i = 0;
    while i < keys.len() {
        let mut combos: Vec<Vec<usize>> = Vec::new();
        let types: Vec<VarSet> = keys.iter().map(|k| k.0).collect();
        subsets(&types, i, types[i], &mut vec![i], &mut combos);
        for combo in combos {
            let ty: VarSet = combo.iter().fold(0, |a, &c| a | keys[c].0);
            let kid_keys: Vec<T> = combo.iter().map(|&c| keys[c].1.clone()).collect();
            let kids: Vec<&T> = kid_keys.iter().collect();
            let children: Vec<u32> = combo.iter().map(|&c| keys[c].2).collect();
            for &l in letters {
                let lv = l.vars(npv);
                if lv & ty != 0 {
                    continue;
                }
                if let Some(t) = step(l, &kids) {
                    let id = add(ty | lv, t, &mut states, &mut keys);
                    trans.push(Transition { children: children.clone(), letter: l, target: id });
                }
            }
            if ty == full {
                if let Some(f) = root(&kids) {
                    let id = *roots.entry(f.clone()).or_insert_with(|| {
                        states.push(State { ty: full, root: true, formula: f });
                        (states.len() - 1) as u32
                    });
                    trans.push(Transition { children, letter: Letter::ROOT, target: id });
                }
            }
        }
        i += 1;
    }
    Qsda::from_parts(sig.clone(), states, trans).expect("tracker transitions are functional").minimize()
}

fn subsets(types: &[VarSet], below: usize, used: VarSet, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    out.push(cur.clone());
    for j in (0..below).rev() {
        if types[j] & used == 0 {
            cur.push(j);
            subsets(types, j, used | types[j], cur, out);
            cur.pop();
        }
    }
}
