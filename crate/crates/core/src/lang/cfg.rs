use std::fmt::Write as _;

use super::ast::*;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CfgNode {
    /// The statement about to execute, or `None` for the exit and for the
    /// intermediate points of multi-literal guards.
    pub pc: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// Never composite.
    pub stmt: StmtKind,
}

/// Control-flow graph; node `pc - 1` is the point before statement `pc`.
#[derive(Clone, Debug)]
pub struct Cfg {
    pub nodes: Vec<CfgNode>,
    pub edges: Vec<Edge>,
    pub start: usize,
    /// First node after the desugaring prologue; where preconditions hold.
    pub entry: usize,
    pub exit: usize,
    pub loop_headers: Vec<usize>,
    pub succ: Vec<Vec<usize>>,
    pub pred: Vec<Vec<usize>>,
}

impl Cfg {
    pub fn build(p: &Program) -> Cfg {
        let npcs = p.num_pcs();
        let mut nodes: Vec<CfgNode> = (1..=npcs).map(|pc| CfgNode { pc: Some(pc) }).collect();
        nodes.push(CfgNode { pc: None });
        let exit = npcs;
        let mut b = Builder { nodes, edges: Vec::new() };
        let start = b.block(&p.body, exit);
        let entry = if p.prologue == 0 { start } else { p.prologue.min(npcs) };
        let mut cfg = Cfg {
            nodes: b.nodes,
            edges: b.edges,
            start,
            entry,
            exit,
            loop_headers: Vec::new(),
            succ: Vec::new(),
            pred: Vec::new(),
        };
        cfg.index();
        cfg
    }

    fn index(&mut self) {
        let n = self.nodes.len();
        self.succ = vec![Vec::new(); n];
        self.pred = vec![Vec::new(); n];
        for (i, e) in self.edges.iter().enumerate() {
            self.succ[e.from].push(i);
            self.pred[e.to].push(i);
        }
        // Back edges of a depth-first search from the start.
        let mut state = vec![0u8; n];
        let mut headers = vec![false; n];
        let mut stack = vec![(self.start, 0usize)];
        state[self.start] = 1;
        while let Some((v, k)) = stack.pop() {
            if k < self.succ[v].len() {
                stack.push((v, k + 1));
                let w = self.edges[self.succ[v][k]].to;
                match state[w] {
                    0 => {
                        state[w] = 1;
                        stack.push((w, 0));
                    }
                    1 => headers[w] = true,
                    _ => {}
                }
            } else {
                state[v] = 2;
            }
        }
        self.loop_headers = (0..n).filter(|&v| headers[v]).collect();
    }

    pub fn node_of_pc(&self, pc: usize) -> usize {
        pc - 1
    }

    pub fn node_of(&self, at: AssertAt) -> usize {
        match at {
            AssertAt::Pc(pc) => self.node_of_pc(pc),
            AssertAt::Exit => self.exit,
        }
    }

    pub fn is_header(&self, v: usize) -> bool {
        self.loop_headers.binary_search(&v).is_ok()
    }

    /// Reverse post-order from `from`.
    pub fn rpo(&self, from: usize) -> Vec<usize> {
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        let mut post = Vec::new();
        let mut stack = vec![(from, 0usize)];
        seen[from] = true;
        while let Some((v, k)) = stack.pop() {
            if k < self.succ[v].len() {
                stack.push((v, k + 1));
                let w = self.edges[self.succ[v][k]].to;
                if !seen[w] {
                    seen[w] = true;
                    stack.push((w, 0));
                }
            } else {
                post.push(v);
            }
        }
        post.reverse();
        post
    }

    pub fn node_name(&self, v: usize) -> String {
        match self.nodes[v].pc {
            Some(pc) => format!("pc{pc}"),
            None if v == self.exit => "exit".into(),
            None => format!("n{v}"),
        }
    }

    pub fn to_dot(&self, p: &Program) -> String {
        let pr = p.printer();
        let mut s = String::from("digraph cfg {\n");
        for v in 0..self.nodes.len() {
            let shape = if self.is_header(v) { "doublecircle" } else { "circle" };
            let _ = writeln!(s, "  {} [shape={shape}];", self.node_name(v));
        }
        for e in &self.edges {
            let label = pr.simple(&e.stmt).replace('"', "\\\"");
            let _ = writeln!(s, "  {} -> {} [label=\"{label}\"];", self.node_name(e.from), self.node_name(e.to));
        }
        s.push_str("}\n");
        s
    }
}

struct Builder {
    nodes: Vec<CfgNode>,
    edges: Vec<Edge>,
}

impl Builder {
    fn fresh(&mut self) -> usize {
        self.nodes.push(CfgNode { pc: None });
        self.nodes.len() - 1
    }

    /// Lowers `ss` so that it falls through to `next`; returns its first node.
    fn block(&mut self, ss: &[Stmt], next: usize) -> usize {
        let mut succ = next;
        for s in ss.iter().rev() {
            let v = s.pc - 1;
            match &s.kind {
                StmtKind::If(g, t, e) => {
                    let t0 = self.block(t, succ);
                    let e0 = self.block(e, succ);
                    self.guard(v, g, true, t0);
                    self.guard(v, g, false, e0);
                }
                StmtKind::While(g, body) => {
                    let b0 = self.block(body, v);
                    self.guard(v, g, true, b0);
                    self.guard(v, g, false, succ);
                }
                StmtKind::Assume(g) => self.guard(v, g, true, succ),
                k => self.edges.push(Edge { from: v, to: succ, stmt: k.clone() }),
            }
            succ = v;
        }
        succ
    }

    /// One path of assume edges per disjunct of the (possibly negated) guard.
    fn guard(&mut self, from: usize, g: &Guard, positive: bool, to: usize) {
        for conj in g.dnf(positive) {
            if conj.is_empty() {
                self.edges.push(Edge { from, to, stmt: StmtKind::Skip });
                continue;
            }
            let mut cur = from;
            for (i, lit) in conj.iter().enumerate() {
                let dst = if i + 1 == conj.len() { to } else { self.fresh() };
                let stmt = match lit {
                    Literal::Struct(s) => StmtKind::AssumeStruct(*s),
                    Literal::Data(c) => StmtKind::AssumeData(*c),
                };
                self.edges.push(Edge { from: cur, to: dst, stmt });
                cur = dst;
            }
        }
    }
}
