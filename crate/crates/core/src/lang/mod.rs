//! The heap language: syntax, desugaring, control-flow graphs and the
//! concrete semantics.

mod ast;
mod cfg;
mod concrete;
mod parse;

pub use ast::*;
pub use cfg::{Cfg, CfgNode, Edge};
pub use concrete::{concrete_step, concrete_successors, eval_literal, run_concrete, ConcreteRun, ErrorTrace, Step};
pub use parse::{parse, ParseError};

/// Turns every data variable into a pointer variable whose node is allocated
/// by a prologue `new d`, and rewrites uses of `d` into `d->data`.
pub fn desugar_data_vars(p: &Program) -> Program {
    if p.data_vars.is_empty() {
        return p.clone();
    }
    let base = p.pointers.len();
    let k = p.data_vars.len();
    let map_ref = |r: DataRef| match r {
        DataRef::Var(d) => DataRef::Deref(base + d),
        r => r,
    };
    let map_expr = |e: DataExpr| match e {
        DataExpr::Term(r, c) => DataExpr::Term(map_ref(r), c),
        e => e,
    };
    let map_cmp = |c: DataCmp| DataCmp { lhs: map_expr(c.lhs), op: c.op, rhs: map_expr(c.rhs) };
    fn map_guard(g: &Guard, f: &dyn Fn(DataCmp) -> DataCmp) -> Guard {
        match g {
            Guard::Data(c) => Guard::Data(f(*c)),
            Guard::Not(a) => Guard::Not(Box::new(map_guard(a, f))),
            Guard::And(a, b) => Guard::And(Box::new(map_guard(a, f)), Box::new(map_guard(b, f))),
            Guard::Or(a, b) => Guard::Or(Box::new(map_guard(a, f)), Box::new(map_guard(b, f))),
            g => g.clone(),
        }
    }
    fn map_block(
        ss: &[Stmt],
        k: usize,
        base: usize,
        e: &dyn Fn(DataExpr) -> DataExpr,
        c: &dyn Fn(DataCmp) -> DataCmp,
    ) -> Vec<Stmt> {
        ss.iter()
            .map(|s| {
                let kind = match &s.kind {
                    StmtKind::DataVarAssign(d, x) => StmtKind::DataAssign(base + d, e(*x)),
                    StmtKind::DataAssign(p, x) => StmtKind::DataAssign(*p, e(*x)),
                    StmtKind::AssumeData(x) => StmtKind::AssumeData(c(*x)),
                    StmtKind::Assume(g) => StmtKind::Assume(map_guard(g, c)),
                    StmtKind::If(g, t, f) => {
                        StmtKind::If(map_guard(g, c), map_block(t, k, base, e, c), map_block(f, k, base, e, c))
                    }
                    StmtKind::While(g, b) => StmtKind::While(map_guard(g, c), map_block(b, k, base, e, c)),
                    other => other.clone(),
                };
                Stmt { pc: s.pc + k, line: s.line, kind }
            })
            .collect()
    }
    let mut body: Vec<Stmt> = (0..k).map(|d| Stmt { pc: d + 1, line: 0, kind: StmtKind::New(base + d) }).collect();
    body.extend(map_block(&p.body, k, base, &map_expr, &map_cmp));
    let mut pointers = p.pointers.clone();
    pointers.extend(p.data_vars.iter().cloned());
    let asserts = p
        .asserts
        .iter()
        .map(|a| Assertion {
            at: match a.at {
                AssertAt::Pc(pc) => AssertAt::Pc(pc + k),
                AssertAt::Exit => AssertAt::Exit,
            },
            prop: a.prop.clone(),
        })
        .collect();
    Program {
        pointers,
        data_vars: Vec::new(),
        body,
        pre: p.pre.clone(),
        asserts,
        universals: p.universals,
        prologue: p.prologue + k,
    }
}

/// Parses and desugars in one go.
pub fn load(text: &str) -> Result<Program, ParseError> {
    parse(text).map(|p| desugar_data_vars(&p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datafmla::CmpOp;
    use crate::heap::{encode, HeapConfig};

    const SORTED_INSERT: &str = include_str!("../../../../corpus/sorted-insert.hp");
    const INIT: &str = include_str!("../../../../corpus/init.hp");

    #[test]
    fn parses_sorted_insert() {
        let p = parse(SORTED_INSERT).unwrap();
        assert_eq!(p.pointers, ["nil", "head", "cur", "prev", "tmp"]);
        assert_eq!(p.data_vars, ["key"]);
        assert_eq!(p.num_pcs(), 10);
        assert_eq!(p.pre.len(), 1);
        assert_eq!(p.asserts.len(), 2);
        assert_eq!(p.universals, Some(2));
    }

    #[test]
    fn empty_body_is_a_syntax_error() {
        let e = parse("pointer a;\n").unwrap_err();
        assert!(matches!(e, ParseError::SyntaxError { line: 1, .. }), "{e}");
    }

    #[test]
    fn duplicate_and_undeclared_variables() {
        assert!(matches!(parse("pointer a, a;\n1: skip;"), Err(ParseError::DuplicatePointerVar { .. })));
        assert!(matches!(parse("pointer a;\n1: a := b;"), Err(ParseError::UseOfUndeclaredVar { .. })));
        assert!(matches!(parse("pointer a;\n@pre List(q)\n1: skip;"), Err(ParseError::UseOfUndeclaredVar { .. })));
    }

    #[test]
    fn wrong_label_is_reported_with_position() {
        let e = parse("pointer a;\n1: skip;\n3: skip;\n").unwrap_err();
        assert_eq!(e.to_string(), "3:1: syntax error: expected program counter 2, found `3`");
    }

    #[test]
    fn desugaring_rewrites_data_variables() {
        let p = load(SORTED_INSERT).unwrap();
        assert!(p.data_vars.is_empty());
        assert_eq!(p.pointers.last().unwrap(), "key");
        assert_eq!(p.prologue, 1);
        assert_eq!(p.body[0].kind, StmtKind::New(5));
        let StmtKind::While(g, _) = &p.body[2].kind else { panic!("pc 3 should be the loop") };
        let Guard::And(_, rhs) = g else { panic!() };
        assert_eq!(
            **rhs,
            Guard::Data(DataCmp {
                lhs: DataExpr::Term(DataRef::Deref(2), 0),
                op: CmpOp::Lt,
                rhs: DataExpr::Term(DataRef::Deref(5), 0),
            })
        );
    }

    #[test]
    fn desugaring_two_variables_renumbers() {
        let src = "pointer a;\ndata x, y;\n1: x := y;\n2: a->data := x + 1;\n";
        let p = load(src).unwrap();
        assert_eq!(p.num_pcs(), 4);
        let text = p.printer().to_string();
        let q = parse(&text).unwrap();
        assert_eq!(q.body, p.body.iter().map(|s| Stmt { line: q.body[s.pc - 1].line, ..s.clone() }).collect::<Vec<_>>());
        assert_eq!(q.prologue, 2);
    }

    #[test]
    fn desugaring_without_data_is_identity() {
        let p = parse("pointer a;\n1: a := nil;\n").unwrap();
        assert_eq!(desugar_data_vars(&p), p);
    }

    #[test]
    fn loop_lowering_matches_hand_graph() {
        let p = load(SORTED_INSERT).unwrap();
        let cfg = Cfg::build(&p);
        // pc 3 is the loop (after the one-statement prologue).
        assert_eq!(cfg.loop_headers, vec![2]);
        assert_eq!(cfg.entry, 1);
        let out: Vec<String> = cfg.succ[2].iter().map(|&e| p.printer().simple(&cfg.edges[e].stmt)).collect();
        // Positive guard: one chain of two literals. Negative: cur == nil, or
        // cur != nil followed by the negated data comparison.
        assert_eq!(out, ["assume(cur != nil)", "assume(cur == nil)", "assume(cur != nil)"]);
        let mut back: Vec<usize> = cfg.pred[2].iter().map(|&e| cfg.edges[e].from).collect();
        back.sort();
        assert_eq!(back, vec![1, 4]);
    }

    #[test]
    fn step_examples() {
        let h = HeapConfig::list(3, 1, &[4, 5]);
        let Step::Next(g) = concrete_step(&h, &StmtKind::PtrAssign(2, 1)) else { panic!() };
        assert_eq!(g.pval[2], g.pval[1]);
        assert_eq!(concrete_step(&h, &StmtKind::Skip), Step::Next(h.clone()));
        assert!(matches!(concrete_step(&h, &StmtKind::PtrAssignNext(2, 0)), Step::Error(_)));
        let lit = StructLit { atom: StructAtom::Eq(1, 0), positive: true };
        assert_eq!(concrete_step(&h, &StmtKind::AssumeStruct(lit)), Step::Blocked);
    }

    #[test]
    fn cycle_creating_redirect_is_an_error() {
        let mut h = HeapConfig::list(3, 1, &[1, 2]);
        h.pval[2] = h.next[h.pval[1]].unwrap();
        h.normalize();
        assert!(matches!(concrete_step(&h, &StmtKind::NextAssign(2, 1)), Step::Error(_)));
    }

    #[test]
    fn init_runs_to_exit_on_three_cells() {
        let p = load(INIT).unwrap();
        let cfg = Cfg::build(&p);
        let mut h = HeapConfig::list(p.npv(), 1, &[1, 2, 3]);
        // key cell, allocated by the prologue
        h.next.push(Some(0));
        h.data.push(7);
        h.pval[3] = h.next.len() - 1;
        h.normalize();
        let run = run_concrete(&cfg, cfg.entry, &h, 100, &[0]);
        assert!(run.errors.is_empty());
        let at_exit: Vec<&HeapConfig> = run.visited.iter().filter(|(v, _)| *v == cfg.exit).map(|(_, c)| c).collect();
        assert_eq!(at_exit.len(), 1);
        let mut pcs: Vec<usize> = run.visited.iter().filter_map(|(v, _)| cfg.nodes[*v].pc).collect();
        pcs.sort();
        pcs.dedup();
        assert_eq!(pcs, vec![2, 3, 4, 5]);
        let cells: Vec<i64> = at_exit[0].data.iter().copied().filter(|&d| d != 0).collect();
        assert_eq!(cells, vec![7, 7, 7, 7]);
    }

    #[test]
    fn fuel_zero_visits_only_the_start() {
        let p = load(INIT).unwrap();
        let cfg = Cfg::build(&p);
        let h = HeapConfig::empty(p.npv());
        assert_eq!(run_concrete(&cfg, cfg.start, &h, 0, &[0]).visited.len(), 1);
    }

    #[test]
    fn sorted_insert_completes_a_two_cell_list() {
        let p = load(SORTED_INSERT).unwrap();
        let cfg = Cfg::build(&p);
        let h = HeapConfig::list(p.npv(), 1, &[2, 9]);
        let run = run_concrete(&cfg, cfg.start, &h, 200, &[6]);
        assert!(run.errors.is_empty());
        let finals: Vec<&HeapConfig> = run.visited.iter().filter(|(v, _)| *v == cfg.exit).map(|(_, c)| c).collect();
        assert_eq!(finals.len(), 1);
        let f = finals[0];
        let mut v = f.pval[1];
        let mut seen = Vec::new();
        while v != f.nil_loc() {
            seen.push(f.data[v]);
            v = f.next[v].unwrap();
        }
        assert_eq!(seen, vec![2, 6, 9]);
        assert_eq!(encode(f).len(), 6);
    }
}
