//! Concrete heaps and their skinny-tree encodings.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Bit set over the variables `PV ∪ Y`; pointer `i` is bit `i`, universal
/// `j` is bit `npv + j`.
pub type VarSet = u32;

pub const MAX_VARS: usize = 31;

/// Pointer variables (index 0 is always `nil`) and universal variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pointers: Vec<String>,
    uvars: Vec<String>,
}

impl Signature {
    /// `pointers` excludes `nil`, which is added in front.
    pub fn new<S: AsRef<str>>(pointers: &[S], nuvars: usize) -> Signature {
        let mut p = vec!["nil".to_string()];
        p.extend(pointers.iter().map(|s| s.as_ref().to_string()));
        let y = (1..=nuvars).map(|i| format!("y{i}")).collect();
        Signature::from_parts(p, y)
    }

    /// `pointers` must start with `nil`.
    pub fn from_parts(pointers: Vec<String>, uvars: Vec<String>) -> Signature {
        assert!(pointers.first().is_some_and(|n| n == "nil"), "nil must be pointer 0");
        assert!(pointers.len() + uvars.len() <= MAX_VARS, "too many variables");
        Signature { pointers, uvars }
    }

    pub fn npv(&self) -> usize {
        self.pointers.len()
    }

    pub fn ny(&self) -> usize {
        self.uvars.len()
    }

    pub fn nterms(&self) -> usize {
        self.npv() + self.ny()
    }

    pub fn pointers(&self) -> &[String] {
        &self.pointers
    }

    pub fn uvars(&self) -> &[String] {
        &self.uvars
    }

    pub fn ptr_index(&self, name: &str) -> Option<usize> {
        self.pointers.iter().position(|p| p == name)
    }

    pub fn uvar_term(&self, j: usize) -> usize {
        self.npv() + j
    }

    pub fn pv_mask(&self) -> VarSet {
        (1u32 << self.npv()) - 1
    }

    pub fn y_mask(&self) -> VarSet {
        self.full() & !self.pv_mask()
    }

    pub fn full(&self) -> VarSet {
        ((1u64 << self.nterms()) - 1) as u32
    }

    pub fn term_names(&self) -> Vec<String> {
        self.pointers.iter().chain(&self.uvars).cloned().collect()
    }

    /// Same pointers with a different number of universals.
    pub fn with_uvars(&self, ny: usize) -> Signature {
        let y = (1..=ny).map(|i| format!("y{i}")).collect();
        Signature::from_parts(self.pointers.clone(), y)
    }

    pub fn render_set(&self, s: VarSet) -> String {
        let names = self.term_names();
        let parts: Vec<&str> =
            (0..self.nterms()).filter(|i| s >> i & 1 == 1).map(|i| names[i].as_str()).collect();
        format!("{{{}}}", parts.join(","))
    }
}

/// A tree letter: pointer set, optional universal, and the root flag.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub ptrs: VarSet,
    pub uvar: Option<u8>,
    pub root: bool,
}

impl Letter {
    pub const ROOT: Letter = Letter { ptrs: 0, uvar: None, root: true };
    pub const BLANK: Letter = Letter { ptrs: 0, uvar: None, root: false };

    pub fn new(ptrs: VarSet, uvar: Option<u8>) -> Letter {
        Letter { ptrs, uvar, root: false }
    }

    pub fn vars(&self, npv: usize) -> VarSet {
        self.ptrs | self.uvar.map_or(0, |j| 1 << (npv + j as usize))
    }

    pub fn is_blank(&self) -> bool {
        *self == Letter::BLANK
    }

    pub fn has_ptr(&self, p: usize) -> bool {
        self.ptrs >> p & 1 == 1
    }

    pub fn render(&self, sig: &Signature) -> String {
        if self.root {
            return "$".to_string();
        }
        let mut s = sig.render_set(self.ptrs);
        if let Some(j) = self.uvar {
            s.push('|');
            s.push_str(&sig.uvars()[j as usize]);
        }
        s
    }
}

pub const DIRTY: usize = 0;

/// A concrete heap. Location 0 is `dirty`; `next[DIRTY]` is `None` and every
/// other location has a successor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HeapConfig {
    pub next: Vec<Option<usize>>,
    pub data: Vec<i64>,
    pub pval: Vec<usize>,
}

impl HeapConfig {
    /// The heap with only `nil`, every pointer at `nil`.
    pub fn empty(npv: usize) -> HeapConfig {
        HeapConfig { next: vec![None, Some(DIRTY)], data: vec![0, 0], pval: vec![1; npv] }
    }

    /// A chain `anchor -> c_0 -> ... -> nil` with the given data; every other
    /// pointer sits at `nil`.
    pub fn list(npv: usize, anchor: usize, data: &[i64]) -> HeapConfig {
        let mut h = HeapConfig::empty(npv);
        let mut succ = 1;
        for &d in data.iter().rev() {
            h.next.push(Some(succ));
            h.data.push(d);
            succ = h.next.len() - 1;
        }
        h.pval[anchor] = succ;
        h.normalize();
        h
    }

    pub fn nil_loc(&self) -> usize {
        self.pval[0]
    }

    pub fn len(&self) -> usize {
        self.next.len()
    }

    pub fn is_empty(&self) -> bool {
        self.next.len() <= 1
    }

    /// Number of list cells, excluding `dirty` and `nil`.
    pub fn cells(&self) -> usize {
        self.next.len().saturating_sub(2)
    }

    /// Whether `to` is reachable from `from` by zero or more next steps.
    pub fn reaches(&self, from: usize, to: usize) -> bool {
        let mut cur = Some(from);
        let mut steps = 0;
        while let Some(v) = cur {
            if v == to {
                return true;
            }
            steps += 1;
            if steps > self.next.len() {
                return false;
            }
            cur = self.next[v];
        }
        false
    }

    /// Drops unreachable locations and renumbers the rest canonically: dirty
    /// first, then locations in order of discovery along each pointer's chain.
    pub fn normalize(&mut self) {
        let n = self.next.len();
        let mut order = vec![usize::MAX; n];
        order[DIRTY] = 0;
        let mut next_id = 1;
        for &p in &self.pval {
            let mut chain = Vec::new();
            let mut cur = Some(p);
            while let Some(v) = cur {
                if order[v] != usize::MAX {
                    break;
                }
                chain.push(v);
                cur = self.next[v];
            }
            // Number from the far end so ids grow away from dirty.
            for &v in chain.iter().rev() {
                order[v] = next_id;
                next_id += 1;
            }
        }
        let mut next = vec![None; next_id];
        let mut data = vec![0; next_id];
        for v in 0..n {
            let id = order[v];
            if id == usize::MAX {
                continue;
            }
            next[id] = self.next[v].map(|s| order[s]);
            data[id] = self.data[v];
        }
        data[DIRTY] = 0;
        self.pval = self.pval.iter().map(|&v| order[v]).collect();
        self.next = next;
        self.data = data;
    }

    /// Checks the structural invariants of a legal configuration.
    pub fn check(&self) -> Result<(), String> {
        let n = self.next.len();
        if self.next.first() != Some(&None) {
            return Err("dirty must have no successor".into());
        }
        if self.next[self.nil_loc()] != Some(DIRTY) {
            return Err("nil must point to dirty".into());
        }
        for v in 1..n {
            match self.next[v] {
                None => return Err(format!("location {v} has no successor")),
                Some(s) if s >= n => return Err(format!("location {v} points outside")),
                _ => {}
            }
            if !self.reaches(v, DIRTY) {
                return Err(format!("location {v} is on a cycle"));
            }
        }
        let mut live = vec![false; n];
        live[DIRTY] = true;
        for &p in &self.pval {
            if p == DIRTY || p >= n {
                return Err("pointer at dirty or outside".into());
            }
            let mut cur = Some(p);
            while let Some(v) = cur {
                live[v] = true;
                cur = self.next[v];
            }
        }
        if let Some(v) = live.iter().position(|l| !l) {
            return Err(format!("location {v} is garbage"));
        }
        Ok(())
    }
}

/// A labelled tree with reversed next edges. Node 0 is the root (dirty).
/// Children are in canonical order and nodes are numbered in pre-order, so
/// equal trees are exactly isomorphic heaps.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HeapTree {
    pub nodes: Vec<HNode>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HNode {
    pub ptrs: VarSet,
    pub datum: i64,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Node(VarSet, i64, Vec<Key>),
}

impl HeapTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of branching nodes (two or more children), root excluded.
    pub fn branching(&self) -> usize {
        self.nodes.iter().skip(1).filter(|n| n.children.len() >= 2).count()
    }

    /// The letter read at `node` under a placement of universals.
    pub fn letter(&self, node: usize, place: &[usize]) -> Letter {
        if node == 0 {
            return Letter::ROOT;
        }
        let uvar = place.iter().position(|&v| v == node).map(|j| j as u8);
        Letter::new(self.nodes[node].ptrs, uvar)
    }

    /// Bottom-up node order (children before parents).
    pub fn post_order(&self) -> impl Iterator<Item = usize> {
        (0..self.nodes.len()).rev()
    }

    pub fn to_dot(&self, sig: &Signature, place: &[usize]) -> String {
        let mut s = String::from("digraph heap {\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let label = if i == 0 {
                "$".to_string()
            } else {
                let u = place
                    .iter()
                    .position(|&v| v == i)
                    .map_or("-".to_string(), |j| sig.uvars()[j].clone());
                format!("{}|{}|{}", sig.render_set(n.ptrs), u, n.datum)
            };
            let _ = writeln!(s, "  n{i} [label=\"{label}\"];");
            for &c in &n.children {
                let _ = writeln!(s, "  n{i} -> n{c};");
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Encodes a configuration as a heap skinny tree.
pub fn encode(c: &HeapConfig) -> HeapTree {
    let n = c.next.len();
    let mut kids: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 1..n {
        if let Some(u) = c.next[v] {
            kids[u].push(v);
        }
    }
    let mut ptrs = vec![0u32; n];
    for (p, &v) in c.pval.iter().enumerate() {
        ptrs[v] |= 1 << p;
    }
    fn key(v: usize, kids: &[Vec<usize>], ptrs: &[VarSet], c: &HeapConfig, memo: &mut HashMap<usize, Key>) -> Key {
        if let Some(k) = memo.get(&v) {
            return k.clone();
        }
        let mut ks: Vec<Key> = kids[v].iter().map(|&u| key(u, kids, ptrs, c, memo)).collect();
        ks.sort();
        let datum = if v == DIRTY { 0 } else { c.data[v] };
        let k = Key::Node(ptrs[v], datum, ks);
        memo.insert(v, k.clone());
        k
    }
    let mut memo = HashMap::new();
    key(DIRTY, &kids, &ptrs, c, &mut memo);
    for ks in kids.iter_mut() {
        ks.sort_by(|a, b| memo[a].cmp(&memo[b]));
    }
    let mut nodes = Vec::with_capacity(n);
    let mut stack = vec![(DIRTY, None)];
    while let Some((v, parent)) = stack.pop() {
        let id = nodes.len();
        nodes.push(HNode {
            ptrs: ptrs[v],
            datum: if v == DIRTY { 0 } else { c.data[v] },
            children: Vec::new(),
            parent,
        });
        if let Some(p) = parent {
            nodes[p].children.push(id);
        }
        for &u in kids[v].iter().rev() {
            stack.push((u, Some(id)));
        }
    }
    nodes.iter_mut().for_each(|n| n.children.sort());
    HeapTree { nodes }
}

/// Recovers the configuration a heap tree encodes.
pub fn decode(t: &HeapTree, npv: usize) -> HeapConfig {
    let n = t.nodes.len();
    let mut next = vec![None; n];
    let mut data = vec![0; n];
    let mut pval = vec![usize::MAX; npv];
    for (i, node) in t.nodes.iter().enumerate() {
        next[i] = node.parent;
        data[i] = node.datum;
        for (p, slot) in pval.iter_mut().enumerate() {
            if node.ptrs >> p & 1 == 1 {
                *slot = i;
            }
        }
    }
    let mut h = HeapConfig { next, data, pval };
    h.normalize();
    h
}

/// All injective placements of `ny` universals over the non-root nodes.
/// Empty when the tree has fewer non-root nodes than `ny`.
pub fn valuations(t: &HeapTree, ny: usize) -> Vec<Vec<usize>> {
    let m = t.nodes.len().saturating_sub(1);
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(ny);
    fn rec(m: usize, ny: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == ny {
            out.push(cur.clone());
            return;
        }
        for v in 1..=m {
            if !cur.contains(&v) {
                cur.push(v);
                rec(m, ny, cur, out);
                cur.pop();
            }
        }
    }
    rec(m, ny, &mut cur, &mut out);
    out
}

/// A data-free tree labelled with letters. Node 0 is the root.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymTree {
    pub letters: Vec<Letter>,
    pub children: Vec<Vec<usize>>,
}

impl SymTree {
    pub fn from_valuation(t: &HeapTree, place: &[usize]) -> SymTree {
        SymTree {
            letters: (0..t.nodes.len()).map(|i| t.letter(i, place)).collect(),
            children: t.nodes.iter().map(|n| n.children.clone()).collect(),
        }
    }

    /// Nodes such that every child comes after its parent are required by
    /// consumers; this returns a bottom-up order regardless of numbering.
    pub fn post_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.letters.len());
        let mut stack = vec![(0usize, false)];
        while let Some((v, done)) = stack.pop() {
            if done {
                out.push(v);
            } else {
                stack.push((v, true));
                for &c in &self.children[v] {
                    stack.push((c, false));
                }
            }
        }
        out
    }

    pub fn to_dot(&self, sig: &Signature) -> String {
        let mut s = String::from("digraph sym {\n");
        for (i, l) in self.letters.iter().enumerate() {
            let _ = writeln!(s, "  n{i} [label=\"{}\"];", l.render(sig));
            for &c in &self.children[i] {
                let _ = writeln!(s, "  n{i} -> n{c};");
            }
        }
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_encodes_as_path() {
        let h = HeapConfig::list(2, 1, &[1, 2, 3, 4, 5]);
        h.check().unwrap();
        let t = encode(&h);
        assert_eq!(t.len(), 7);
        assert_eq!(t.branching(), 0);
        assert_eq!(t.nodes[0].children.len(), 1);
        assert_eq!(t.nodes[1].ptrs, 1);
    }

    #[test]
    fn single_node_pointed_by_all() {
        let h = HeapConfig::empty(3);
        let t = encode(&h);
        assert_eq!(t.len(), 2);
        assert_eq!(t.nodes[1].ptrs, 0b111);
    }

    #[test]
    fn decode_inverts_encode() {
        let mut h = HeapConfig::list(3, 1, &[4, 7]);
        h.pval[2] = h.pval[1];
        h.normalize();
        assert_eq!(decode(&encode(&h), 3), h);
    }

    #[test]
    fn valuation_counts_are_falling_factorials() {
        let t = encode(&HeapConfig::list(2, 1, &[1, 2]));
        assert_eq!(valuations(&t, 2).len(), 6);
        assert_eq!(valuations(&t, 0).len(), 1);
        assert_eq!(valuations(&t, 4).len(), 0);
    }

    #[test]
    fn isomorphic_heaps_encode_equally() {
        // Two cells hanging off nil, pointers swapped in allocation order.
        let a = HeapConfig { next: vec![None, Some(0), Some(1), Some(1)], data: vec![0, 0, 5, 6], pval: vec![1, 2, 3] };
        let b = HeapConfig { next: vec![None, Some(0), Some(1), Some(1)], data: vec![0, 0, 6, 5], pval: vec![1, 3, 2] };
        assert_eq!(encode(&a), encode(&b));
    }

    #[test]
    fn garbage_is_dropped_by_normalize() {
        let mut h = HeapConfig::list(2, 1, &[1, 2]);
        h.pval[1] = h.nil_loc();
        h.normalize();
        assert_eq!(h.len(), 2);
        h.check().unwrap();
    }
}
