//! Nondeterministic automata and the reachable powerset construction.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use super::{Qsda, QsdaError, State, Transition};
use crate::datafmla::DataFormula;
use crate::heap::{Letter, Signature, VarSet};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NState {
    pub ty: VarSet,
    pub root: bool,
    pub formula: DataFormula,
    /// Which operand of a binary construction the state came from.
    pub side: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NTrans {
    pub children: Vec<u32>,
    pub letter: Letter,
    pub target: u32,
}

/// A nondeterministic QSDA.
#[derive(Clone, Debug)]
pub struct Nfa {
    pub sig: Arc<Signature>,
    pub states: Vec<NState>,
    pub trans: Vec<NTrans>,
}

/// How the formulas of the members of a powerset state are combined.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Combine {
    Join,
    Meet,
    /// Meet when both sides are present, false otherwise (product semantics).
    BothSidesMeet,
}

impl Nfa {
    pub fn new(sig: Arc<Signature>) -> Nfa {
        Nfa { sig, states: Vec::new(), trans: Vec::new() }
    }

    pub fn add_state(&mut self, s: NState) -> u32 {
        self.states.push(s);
        (self.states.len() - 1) as u32
    }

    pub fn add_trans(&mut self, mut children: Vec<u32>, letter: Letter, target: u32) {
        children.sort_unstable();
        self.trans.push(NTrans { children, letter, target });
    }

    /// Subset construction over the reachable sets.
    pub fn determinize(&self, combine: Combine) -> Result<Qsda, QsdaError> {
        let ps = powerset(self, false)?;
        Ok(ps.build(self, |members| combine_formulas(self, members, combine)))
    }

    /// Subset construction with blank closure: blank unary moves become
    /// self-loops and every set is closed under blank successors. The
    /// result is elastic; formulas are joined.
    pub fn determinize_elastic(&self) -> Result<Qsda, QsdaError> {
        let ps = powerset(self, true)?;
        Ok(ps.build(self, |members| combine_formulas(self, members, Combine::Join)))
    }
}

fn combine_formulas(n: &Nfa, members: &[u32], combine: Combine) -> DataFormula {
    let roots = members.iter().map(|&m| &n.states[m as usize]).filter(|s| s.root);
    match combine {
        Combine::Join => roots.fold(DataFormula::Bottom, |acc, s| acc.join(&s.formula)),
        Combine::Meet => {
            let mut it = roots;
            match it.next() {
                None => DataFormula::Bottom,
                Some(first) => it.fold(first.formula.clone(), |acc, s| acc.meet(&s.formula)),
            }
        }
        Combine::BothSidesMeet => {
            let mut sides = [false; 2];
            let mut acc: Option<DataFormula> = None;
            for s in roots {
                sides[usize::from(s.side.min(1))] = true;
                acc = Some(match acc {
                    None => s.formula.clone(),
                    Some(a) => a.meet(&s.formula),
                });
            }
            if sides == [true, true] {
                acc.unwrap_or(DataFormula::Bottom)
            } else {
                DataFormula::Bottom
            }
        }
    }
}

/// Reachable subsets and the transitions between them.
pub(crate) struct Powerset {
    pub sets: Vec<Vec<u32>>,
    pub trans: Vec<Transition>,
}

impl Powerset {
    pub fn build(&self, n: &Nfa, mut formula: impl FnMut(&[u32]) -> DataFormula) -> Qsda {
        let states = self
            .sets
            .iter()
            .map(|set| {
                let s0 = &n.states[set[0] as usize];
                State {
                    ty: s0.ty,
                    root: s0.root,
                    formula: if s0.root { formula(set) } else { DataFormula::Bottom },
                }
            })
            .collect();
        Qsda::from_parts(n.sig.clone(), states, self.trans.clone()).expect("powerset is deterministic")
    }
}

struct Ctx<'a> {
    n: &'a Nfa,
    elastic: bool,
    leaves: HashMap<Letter, Vec<u32>>,
    /// Transitions in which a state occurs as a child.
    by_child: Vec<Vec<usize>>,
    blank: Vec<Vec<u32>>,
}

impl Ctx<'_> {
    fn close(&self, mut set: Vec<u32>) -> Vec<u32> {
        set.sort_unstable();
        set.dedup();
        if !self.elastic {
            return set;
        }
        let mut seen: HashSet<u32> = set.iter().copied().collect();
        let mut stack = set.clone();
        while let Some(q) = stack.pop() {
            for &r in &self.blank[q as usize] {
                if seen.insert(r) {
                    set.push(r);
                    stack.push(r);
                }
            }
        }
        set.sort_unstable();
        set
    }
}

fn matches(children: &[u32], combo: &[&[u32]], used: &mut [bool], i: usize) -> bool {
    if i == children.len() {
        return true;
    }
    for j in 0..combo.len() {
        if !used[j] && combo[j].binary_search(&children[i]).is_ok() {
            used[j] = true;
            if matches(children, combo, used, i + 1) {
                used[j] = false;
                return true;
            }
            used[j] = false;
        }
    }
    false
}

pub(crate) fn powerset(n: &Nfa, elastic: bool) -> Result<Powerset, QsdaError> {
    let mut ctx = Ctx {
        n,
        elastic,
        leaves: HashMap::new(),
        by_child: vec![Vec::new(); n.states.len()],
        blank: vec![Vec::new(); n.states.len()],
    };
    for (i, t) in n.trans.iter().enumerate() {
        if t.children.is_empty() {
            ctx.leaves.entry(t.letter).or_default().push(t.target);
        }
        let mut prev = None;
        for &c in &t.children {
            if prev != Some(c) {
                ctx.by_child[c as usize].push(i);
            }
            prev = Some(c);
        }
        if elastic && t.letter.is_blank() && t.children.len() == 1 {
            ctx.blank[t.children[0] as usize].push(t.target);
        }
    }

    let mut sets: Vec<Vec<u32>> = Vec::new();
    let mut ids: HashMap<Vec<u32>, u32> = HashMap::new();
    let mut of_member: Vec<Vec<u32>> = vec![Vec::new(); n.states.len()];
    let mut queue = VecDeque::new();
    let mut out: Vec<Transition> = Vec::new();

    let mut intern = |set: Vec<u32>,
                      sets: &mut Vec<Vec<u32>>,
                      of_member: &mut Vec<Vec<u32>>,
                      queue: &mut VecDeque<u32>|
     -> Result<u32, QsdaError> {
        if let Some(&id) = ids.get(&set) {
            return Ok(id);
        }
        let s0 = &n.states[set[0] as usize];
        if let Some(&bad) = set.iter().find(|&&m| {
            let s = &n.states[m as usize];
            s.ty != s0.ty || s.root != s0.root
        }) {
            return Err(QsdaError::TypeClashInPowerset(format!(
                "{} vs {}",
                n.sig.render_set(s0.ty),
                n.sig.render_set(n.states[bad as usize].ty)
            )));
        }
        let id = sets.len() as u32;
        for &m in &set {
            of_member[m as usize].push(id);
        }
        ids.insert(set.clone(), id);
        sets.push(set);
        queue.push_back(id);
        Ok(id)
    };

    let mut leaf_letters: Vec<&Letter> = ctx.leaves.keys().collect();
    leaf_letters.sort();
    for l in leaf_letters {
        let set = ctx.close(ctx.leaves[l].clone());
        let id = intern(set, &mut sets, &mut of_member, &mut queue)?;
        out.push(Transition { children: Vec::new(), letter: *l, target: id });
    }

    let mut done: HashSet<(Letter, Vec<u32>)> = HashSet::new();
    while let Some(d) = queue.pop_front() {
        let members = sets[d as usize].clone();
        let mut seen_t: HashSet<usize> = HashSet::new();
        for &q in &members {
            for &ti in &ctx.by_child[q as usize] {
                if !seen_t.insert(ti) {
                    continue;
                }
                let t = &n.trans[ti];
                let k = t.children.len();
                for j in 0..k {
                    if members.binary_search(&t.children[j]).is_err() {
                        continue;
                    }
                    if j > 0 && t.children[j - 1] == t.children[j] {
                        continue;
                    }
                    // Positions other than j range over the sets holding that child.
                    let options: Vec<Vec<u32>> = (0..k)
                        .map(|i| if i == j { vec![d] } else { of_member[t.children[i] as usize].clone() })
                        .collect();
                    if options.iter().any(Vec::is_empty) {
                        continue;
                    }
                    let mut pick = vec![0usize; k];
                    'combos: loop {
                        let mut key: Vec<u32> = (0..k).map(|i| options[i][pick[i]]).collect();
                        key.sort_unstable();
                        if done.insert((t.letter, key.clone())) {
                            if let Some(target) = step(&ctx, &sets, t.letter, &key) {
                                let id = intern(target, &mut sets, &mut of_member, &mut queue)?;
                                out.push(Transition { children: key, letter: t.letter, target: id });
                            }
                        }
                        for i in 0..k {
                            pick[i] += 1;
                            if pick[i] < options[i].len() {
                                continue 'combos;
                            }
                            pick[i] = 0;
                        }
                        break;
                    }
                }
            }
        }
    }
    Ok(Powerset { sets, trans: out })
}

fn step(ctx: &Ctx, sets: &[Vec<u32>], letter: Letter, key: &[u32]) -> Option<Vec<u32>> {
    let combo: Vec<&[u32]> = key.iter().map(|&d| sets[d as usize].as_slice()).collect();
    if ctx.elastic && letter.is_blank() && key.len() == 1 {
        let has = combo[0].iter().any(|&m| !ctx.blank[m as usize].is_empty());
        return has.then(|| combo[0].to_vec());
    }
    // Candidates: transitions with this letter and arity that mention a
    // member of the first set.
    let mut targets = Vec::new();
    let mut seen = HashSet::new();
    let mut used = vec![false; key.len()];
    for &m in combo[0] {
        for &ti in &ctx.by_child[m as usize] {
            let t = &ctx.n.trans[ti];
            if t.letter != letter || t.children.len() != key.len() || !seen.insert(ti) {
                continue;
            }
            if matches(&t.children, &combo, &mut used, 0) {
                targets.push(t.target);
            }
        }
    }
    if targets.is_empty() {
        None
    } else {
        Some(ctx.close(targets))
    }
}
