use std::collections::{HashMap, VecDeque};

use super::ast::*;
use super::cfg::Cfg;
use crate::heap::{HeapConfig, DIRTY};

/// Outcome of executing one statement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Next(HeapConfig),
    Blocked,
    Error(String),
}

fn cell(c: &HeapConfig, p: Ptr, what: &str) -> Result<usize, String> {
    let v = c.pval[p];
    if v == c.nil_loc() || v == DIRTY {
        Err(format!("{what} through a pointer at nil"))
    } else {
        Ok(v)
    }
}

fn eval_expr(c: &HeapConfig, e: &DataExpr) -> Result<i64, String> {
    match e {
        DataExpr::Const(k) => Ok(*k),
        DataExpr::Term(DataRef::Deref(p), k) => {
            let v = cell(c, *p, "data read")?;
            c.data[v].checked_add(*k).ok_or_else(|| "data overflow".to_string())
        }
        DataExpr::Term(DataRef::Var(_), _) => Err("data variable survived desugaring".into()),
    }
}

/// Truth of a guard literal in `c`. Structural atoms about `nil->next` are
/// false (it is dirty, which no variable denotes); data reads through nil are
/// errors.
pub fn eval_literal(c: &HeapConfig, l: &Literal) -> Result<bool, String> {
    match l {
        Literal::Struct(s) => {
            let truth = match s.atom {
                StructAtom::Eq(p, q) => c.pval[p] == c.pval[q],
                StructAtom::Next(p, q) => {
                    let v = c.pval[p];
                    v != c.nil_loc() && c.next[v] == Some(c.pval[q])
                }
                StructAtom::Reach(p, q) => c.reaches(c.pval[p], c.pval[q]),
            };
            Ok(truth == s.positive)
        }
        Literal::Data(d) => {
            let l = eval_expr(c, &d.lhs)?;
            let r = eval_expr(c, &d.rhs)?;
            Ok(d.op.holds(l, r))
        }
    }
}

/// All successors of `c` under `s`; `new` branches over `new_data`.
pub fn concrete_successors(c: &HeapConfig, s: &StmtKind, new_data: &[i64]) -> Vec<Step> {
    if let StmtKind::New(p) = s {
        return new_data
            .iter()
            .map(|&d| {
                let mut h = c.clone();
                h.next.push(Some(DIRTY));
                h.data.push(d);
                h.pval[*p] = h.next.len() - 1;
                h.normalize();
                Step::Next(h)
            })
            .collect();
    }
    vec![concrete_step(c, s)]
}

/// Executes one non-composite statement. `new` gives the fresh cell datum 0.
pub fn concrete_step(c: &HeapConfig, s: &StmtKind) -> Step {
    let mut h = c.clone();
    let res: Result<bool, String> = (|| {
        match s {
            StmtKind::Skip => {}
            StmtKind::PtrAssignNil(p) => h.pval[*p] = h.nil_loc(),
            StmtKind::PtrAssign(p, q) => h.pval[*p] = h.pval[*q],
            StmtKind::PtrAssignNext(p, q) => {
                let v = cell(&h, *q, "next read")?;
                let u = h.next[v].expect("cells have successors");
                if u == DIRTY {
                    return Err("next read of an uninitialised cell".into());
                }
                h.pval[*p] = u;
            }
            StmtKind::NextAssignNil(p) => {
                let v = cell(&h, *p, "next write")?;
                h.next[v] = Some(h.nil_loc());
            }
            StmtKind::NextAssign(p, q) => {
                let v = cell(&h, *p, "next write")?;
                let w = h.pval[*q];
                if h.reaches(w, v) {
                    return Err("next write would close a cycle".into());
                }
                h.next[v] = Some(w);
            }
            StmtKind::DataAssign(p, e) => {
                let val = eval_expr(&h, e)?;
                let v = cell(&h, *p, "data write")?;
                h.data[v] = val;
            }
            StmtKind::New(p) => {
                h.next.push(Some(DIRTY));
                h.data.push(0);
                h.pval[*p] = h.next.len() - 1;
            }
            StmtKind::AssumeStruct(l) => return eval_literal(&h, &Literal::Struct(*l)),
            StmtKind::AssumeData(d) => return eval_literal(&h, &Literal::Data(*d)),
            other => return Err(format!("composite statement {other:?} has no step")),
        }
        Ok(true)
    })();
    match res {
        Ok(true) => {
            h.normalize();
            Step::Next(h)
        }
        Ok(false) => Step::Blocked,
        Err(e) => Step::Error(e),
    }
}

/// An error configuration together with the path of nodes leading to it.
#[derive(Clone, Debug)]
pub struct ErrorTrace {
    pub message: String,
    pub trace: Vec<(usize, HeapConfig)>,
}

#[derive(Clone, Debug, Default)]
pub struct ConcreteRun {
    /// Visited (CFG node, configuration) pairs, each once.
    pub visited: Vec<(usize, HeapConfig)>,
    pub errors: Vec<ErrorTrace>,
}

fn trace_of(visited: &[(usize, HeapConfig)], parents: &[Option<usize>], mut i: usize) -> Vec<(usize, HeapConfig)> {
    let mut out = vec![visited[i].clone()];
    while let Some(p) = parents[i] {
        out.push(visited[p].clone());
        i = p;
    }
    out.reverse();
    out
}

/// Breadth-first exploration of the reachable configurations from
/// `(from, init)` for at most `fuel` steps, taking both branches of every
/// guard and every datum in `new_data` for allocations.
pub fn run_concrete(cfg: &Cfg, from: usize, init: &HeapConfig, fuel: usize, new_data: &[i64]) -> ConcreteRun {
    let mut run = ConcreteRun::default();
    let mut parents: Vec<Option<usize>> = Vec::new();
    let mut seen: HashMap<(usize, HeapConfig), usize> = HashMap::new();
    let mut queue = VecDeque::new();
    seen.insert((from, init.clone()), 0);
    run.visited.push((from, init.clone()));
    parents.push(None);
    queue.push_back((0usize, 0usize));
    while let Some((i, depth)) = queue.pop_front() {
        if depth >= fuel {
            continue;
        }
        let (v, c) = run.visited[i].clone();
        for &ei in &cfg.succ[v] {
            let e = &cfg.edges[ei];
            for step in concrete_successors(&c, &e.stmt, new_data) {
                match step {
                    Step::Blocked => {}
                    Step::Error(message) => {
                        let mut trace = trace_of(&run.visited, &parents, i);
                        trace.push((e.to, c.clone()));
                        run.errors.push(ErrorTrace { message, trace });
                    }
                    Step::Next(h) => {
                        let key = (e.to, h);
                        if !seen.contains_key(&key) {
                            let j = run.visited.len();
                            seen.insert(key.clone(), j);
                            run.visited.push(key);
                            parents.push(Some(i));
                            queue.push_back((j, depth + 1));
                        }
                    }
                }
            }
        }
    }
    run
}
