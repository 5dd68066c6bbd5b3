//! Trimming, Moore-style minimization and canonical renumbering.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use super::{Qsda, State, StateId, Transition};
use crate::datafmla::DataFormula;
use crate::heap::Letter;

impl Qsda {
    /// The canonical minimal automaton mapping every symbolic tree to the
    /// same formula. Root states with a false formula and states that lead
    /// to no live root are removed first.
    pub fn minimize(&self) -> Qsda {
        let trimmed = self.trim();
        let merged = trimmed.refine();
        merged.canonical()
    }

    fn trim(&self) -> Qsda {
        let n = self.states.len();
        let mut useful = vec![false; n];
        let mut users: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, t) in self.trans.iter().enumerate() {
            users[t.target as usize].push(i);
        }
        let mut stack: Vec<usize> = (0..n).filter(|&q| self.states[q].root && !self.states[q].formula.is_bottom()).collect();
        for &q in &stack {
            useful[q] = true;
        }
        while let Some(q) = stack.pop() {
            for &ti in &users[q] {
                for &c in &self.trans[ti].children {
                    if !useful[c as usize] {
                        useful[c as usize] = true;
                        stack.push(c as usize);
                    }
                }
            }
        }
        // Bottom-up reachability through useful states only.
        let mut reach = vec![false; n];
        let mut missing: Vec<usize> = Vec::with_capacity(self.trans.len());
        let mut waiting: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut stack = Vec::new();
        for (i, t) in self.trans.iter().enumerate() {
            let ok = useful[t.target as usize] && t.children.iter().all(|&c| useful[c as usize]);
            missing.push(if ok { t.children.len() } else { usize::MAX });
            if !ok {
                continue;
            }
            for &c in &t.children {
                waiting[c as usize].push(i);
            }
            if t.children.is_empty() && !reach[t.target as usize] {
                reach[t.target as usize] = true;
                stack.push(t.target as usize);
            }
        }
        while let Some(q) = stack.pop() {
            for &ti in &waiting[q] {
                missing[ti] -= 1;
                if missing[ti] == 0 {
                    let tq = self.trans[ti].target as usize;
                    if !reach[tq] {
                        reach[tq] = true;
                        stack.push(tq);
                    }
                }
            }
        }
        let keep: Vec<bool> = (0..n).map(|q| useful[q] && reach[q]).collect();
        if keep.iter().all(|&k| k) {
            return self.clone();
        }
        let mut remap = vec![u32::MAX; n];
        let mut states = Vec::new();
        for q in 0..n {
            if keep[q] {
                remap[q] = states.len() as StateId;
                states.push(self.states[q].clone());
            }
        }
        let trans = self
            .trans
            .iter()
            .filter(|t| keep[t.target as usize] && t.children.iter().all(|&c| keep[c as usize]))
            .map(|t| Transition {
                children: t.children.iter().map(|&c| remap[c as usize]).collect(),
                letter: t.letter,
                target: remap[t.target as usize],
            })
            .collect();
        Qsda::from_parts(self.sig.clone(), states, trans).expect("trimming keeps determinism")
    }

    /// Coarsest congruence refining (root, type, formula).
    fn refine(&self) -> Qsda {
        let n = self.states.len();
        if n == 0 {
            return self.clone();
        }
        let mut block: Vec<u32> = {
            let mut ids: HashMap<(bool, u32, &DataFormula), u32> = HashMap::new();
            self.states
                .iter()
                .map(|s| {
                    let k = ids.len() as u32;
                    *ids.entry((s.root, s.ty, &s.formula)).or_insert(k)
                })
                .collect()
        };
        let mut nblocks = block.iter().max().map_or(0, |&m| m + 1);
        loop {
            // Context of each occurrence: letter, the other children's blocks,
            // and the target block.
            let mut ctx: Vec<Vec<(Letter, Vec<u32>, u32)>> = vec![Vec::new(); n];
            for t in &self.trans {
                let mut prev = None;
                for (i, &c) in t.children.iter().enumerate() {
                    if prev == Some(c) {
                        continue;
                    }
                    prev = Some(c);
                    let mut others: Vec<u32> = t
                        .children
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, &d)| block[d as usize])
                        .collect();
                    others.sort_unstable();
                    ctx[c as usize].push((t.letter, others, block[t.target as usize]));
                }
            }
            let mut ids: HashMap<(u32, Vec<(Letter, Vec<u32>, u32)>), u32> = HashMap::new();
            let mut next = Vec::with_capacity(n);
            for (q, mut c) in ctx.into_iter().enumerate() {
                c.sort();
                c.dedup();
                let k = ids.len() as u32;
                next.push(*ids.entry((block[q], c)).or_insert(k));
            }
            let count = ids.len() as u32;
            block = next;
            if count == nblocks {
                break;
            }
            nblocks = count;
        }
        let mut states: Vec<Option<State>> = vec![None; nblocks as usize];
        for (q, &b) in block.iter().enumerate() {
            states[b as usize].get_or_insert_with(|| self.states[q].clone());
        }
        let trans = self
            .trans
            .iter()
            .map(|t| Transition {
                children: t.children.iter().map(|&c| block[c as usize]).collect(),
                letter: t.letter,
                target: block[t.target as usize],
            })
            .collect();
        Qsda::from_parts(self.sig.clone(), states.into_iter().map(Option::unwrap).collect(), trans)
            .expect("a congruence quotient is deterministic")
    }

    /// Renumbers states in the order a canonical bottom-up traversal first
    /// reaches them, so isomorphic automata become equal.
    fn canonical(&self) -> Qsda {
        let n = self.states.len();
        let mut id = vec![u32::MAX; n];
        let mut missing: Vec<usize> = self.trans.iter().map(|t| t.children.len()).collect();
        let mut waiting: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, t) in self.trans.iter().enumerate() {
            let mut prev = None;
            for &c in &t.children {
                if prev != Some(c) {
                    waiting[c as usize].push(i);
                }
                prev = Some(c);
            }
        }
        let key = |t: &Transition, id: &[u32]| {
            let mut k: Vec<u32> = t.children.iter().map(|&c| id[c as usize]).collect();
            k.sort_unstable();
            (k, t.letter)
        };
        let mut heap: BinaryHeap<Reverse<((Vec<u32>, Letter), usize)>> = BinaryHeap::new();
        for (i, t) in self.trans.iter().enumerate() {
            if t.children.is_empty() {
                heap.push(Reverse((key(t, &id), i)));
            }
        }
        let mut next = 0u32;
        while let Some(Reverse((_, ti))) = heap.pop() {
            let q = self.trans[ti].target as usize;
            if id[q] != u32::MAX {
                continue;
            }
            id[q] = next;
            next += 1;
            for &wi in &waiting[q] {
                let t = &self.trans[wi];
                missing[wi] -= t.children.iter().filter(|&&c| c as usize == q).count();
                if missing[wi] == 0 {
                    heap.push(Reverse((key(t, &id), wi)));
                }
            }
        }
        // Unreachable states cannot occur after trimming, but keep them
        // deterministic anyway.
        for slot in id.iter_mut() {
            if *slot == u32::MAX {
                *slot = next;
                next += 1;
            }
        }
        let mut states = vec![None; n];
        for (q, s) in self.states.iter().enumerate() {
            states[id[q] as usize] = Some(s.clone());
        }
        let trans = self
            .trans
            .iter()
            .map(|t| Transition {
                children: t.children.iter().map(|&c| id[c as usize]).collect(),
                letter: t.letter,
                target: id[t.target as usize],
            })
            .collect();
        Qsda::from_parts(self.sig.clone(), states.into_iter().map(Option::unwrap).collect(), trans)
            .expect("renumbering keeps determinism")
    }
}
