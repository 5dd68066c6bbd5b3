//! Bottom-up discovery of the tagged nondeterministic automaton a
//! transformer describes.
//!
//! States of the result are keys chosen by the rule set, most of them pairs
//! of an input state and a tag. Every input transition is replayed with each
//! combination of discovered keys over its children; at most one child may
//! be left out when the rules allow it (dropped garbage, a moved subtree).

use std::collections::{HashMap, HashSet};
use std::fmt::Debug;
use std::hash::Hash;

use crate::heap::Letter;
use crate::qsda::{NState, NTrans, Nfa, Qsda, StateId, Transition};

pub(crate) struct Emit<K> {
    pub children: Vec<u32>,
    pub letter: Letter,
    pub target: K,
}

pub(crate) trait Rules {
    type Key: Clone + Eq + Hash + Debug;

    /// The input state a key refines, if any.
    fn base(&self, k: &Self::Key) -> Option<StateId>;

    fn state(&self, k: &Self::Key) -> NState;

    /// Ways a child in input state `c` may be left out of the output.
    fn omissions(&self, _c: StateId) -> &[u32] {
        &[]
    }

    /// Keys that `expand` consults beyond the children it is handed.
    fn is_extra(&self, _k: &Self::Key) -> bool {
        false
    }

    /// Transitions not derived from input transitions.
    fn seed(&self, _ex: &Explorer<Self::Key>, _out: &mut Vec<Emit<Self::Key>>) {}

    /// Output transitions for input transition `tr` when its kept children
    /// carry `kids` and `omitted` names the dropped child, if any.
    fn expand(
        &self,
        tr: &Transition,
        kids: &[(u32, &Self::Key)],
        omitted: Option<u32>,
        ex: &Explorer<Self::Key>,
        out: &mut Vec<Emit<Self::Key>>,
    );
}

pub(crate) struct Explorer<K> {
    keys: Vec<K>,
    ids: HashMap<K, u32>,
    by_base: HashMap<StateId, Vec<u32>>,
}

impl<K: Clone + Eq + Hash> Explorer<K> {
    pub fn id(&self, k: &K) -> Option<u32> {
        self.ids.get(k).copied()
    }

    pub fn keys(&self) -> &[K] {
        &self.keys
    }
}

/// Runs the rules to saturation and returns the discovered automaton.
pub(crate) fn explore<R: Rules>(a: &Qsda, rules: &R) -> Nfa {
    let mut ex: Explorer<R::Key> = Explorer { keys: Vec::new(), ids: HashMap::new(), by_base: HashMap::new() };
    let mut trans: Vec<NTrans> = Vec::new();
    let mut seen: HashSet<(Vec<u32>, Letter, u32)> = HashSet::new();
    let mut old = 0usize;
    let mut full = true;
    loop {
        let start = ex.keys.len();
        let mut out = Vec::new();
        rules.seed(&ex, &mut out);
        for tr in a.transitions() {
            replay(tr, rules, &ex, old, full, &mut out);
        }
        let mut extra = false;
        for e in out {
            let target = match ex.ids.get(&e.target) {
                Some(&id) => id,
                None => {
                    let id = ex.keys.len() as u32;
                    extra |= rules.is_extra(&e.target);
                    if let Some(b) = rules.base(&e.target) {
                        ex.by_base.entry(b).or_default().push(id);
                    }
                    ex.ids.insert(e.target.clone(), id);
                    ex.keys.push(e.target);
                    id
                }
            };
            let mut children = e.children;
            children.sort_unstable();
            if seen.insert((children.clone(), e.letter, target)) {
                trans.push(NTrans { children, letter: e.letter, target });
            }
        }
        if ex.keys.len() == start {
            break;
        }
        old = start;
        full = extra;
    }
    let sig = a.sig().clone();
    let states = ex.keys.iter().map(|k| rules.state(k)).collect();
    Nfa { sig, states, trans }
}

/// Replays one input transition over key combinations. Unless `full`, only
/// combinations using some key discovered since `old` are tried.
fn replay<R: Rules>(tr: &Transition, rules: &R, ex: &Explorer<R::Key>, old: usize, full: bool, out: &mut Vec<Emit<R::Key>>) {
    let k = tr.children.len();
    let empty: Vec<u32> = Vec::new();
    let opts: Vec<&Vec<u32>> = tr.children.iter().map(|c| ex.by_base.get(c).unwrap_or(&empty)).collect();
    let mut omit_choices: Vec<Option<(usize, u32)>> = vec![None];
    for i in 0..k {
        if i > 0 && tr.children[i] == tr.children[i - 1] {
            continue;
        }
        for &tag in rules.omissions(tr.children[i]) {
            omit_choices.push(Some((i, tag)));
        }
    }
    for omit in omit_choices {
        let positions: Vec<usize> = (0..k).filter(|&i| omit.map_or(true, |(j, _)| j != i)).collect();
        if positions.iter().any(|&i| opts[i].is_empty()) {
            continue;
        }
        let mut pick = vec![0usize; positions.len()];
        'combos: loop {
            let ids: Vec<u32> = positions.iter().zip(&pick).map(|(&i, &x)| opts[i][x]).collect();
            // Leaf transitions and omissions of the only child have no
            // children to be new; they are replayed every round.
            if full || ids.is_empty() || ids.iter().any(|&id| id as usize >= old) {
                let kids: Vec<(u32, &R::Key)> = ids.iter().map(|&id| (id, &ex.keys[id as usize])).collect();
                rules.expand(tr, &kids, omit.map(|(_, t)| t), ex, out);
            }
            for (slot, &i) in pick.iter_mut().zip(&positions) {
                *slot += 1;
                if *slot < opts[i].len() {
                    continue 'combos;
                }
                *slot = 0;
            }
            break;
        }
    }
}

/// The states reachable from `from` by unary blank transitions, `from`
/// included.
pub(crate) fn blank_closure(a: &Qsda, from: StateId) -> Vec<StateId> {
    let mut out = vec![from];
    let mut i = 0;
    while i < out.len() {
        if let Some(d) = a.delta(Letter::BLANK, &[out[i]]) {
            if !out.contains(&d) {
                out.push(d);
            }
        }
        i += 1;
    }
    out
}

/// States an unlabelled chain above a lone `p` leaf can reach: the subtrees
/// that become garbage when `p` leaves that leaf.
pub(crate) fn garbage_states(a: &Qsda, p: usize) -> Vec<StateId> {
    match a.delta(Letter::new(1 << p, None), &[]) {
        Some(leaf) => blank_closure(a, leaf),
        None => Vec::new(),
    }
}
