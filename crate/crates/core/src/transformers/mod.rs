//! Abstract post-conditions of primitive statements over QSDAs.
//!
//! Each statement that moves pointers or edges is described by a rule set
//! over tagged input states (see [`cases`]). The rules are run to saturation,
//! which gives a nondeterministic automaton mapping each output symbolic tree
//! to the formulas of the input trees it can come from; that automaton is
//! determinized with join and minimized.

mod cases;
mod explore;
#[cfg(test)]
pub(crate) mod tests;

use serde::Serialize;
use thiserror::Error;

use crate::datafmla::{DataAtom, DataFormula, FormulaError, Operand};
use crate::heap::{Letter, VarSet};
use crate::lang::{DataCmp, DataExpr, DataRef, StmtKind, StructAtom, StructLit};
use crate::qsda::{Combine, NState, Nfa, Qsda, QsdaError, Transition};

use cases::{Assign, DataWrite, LoadNext, New, NextIs, Redirects};
use explore::{explore, Rules};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("statement has no abstract transformer: {0}")]
    UnsupportedStmt(String),
    #[error(transparent)]
    InexpressiblePredicate(#[from] FormulaError),
    #[error(transparent)]
    Qsda(#[from] QsdaError),
}

/// Size statistics of one transformer application.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct TraceRecord {
    pub case: &'static str,
    pub input_states: usize,
    /// States of the tagged automaton before determinization; zero for
    /// transformers that only filter or relabel.
    pub nfa_states: usize,
    pub det_states: usize,
    pub output_states: usize,
}

/// The abstract post of `a` under a primitive statement.
pub fn post(a: &Qsda, s: &StmtKind) -> Result<Qsda, TransformError> {
    post_traced(a, s).map(|(q, _)| q)
}

/// [`post`] together with size statistics.
pub fn post_traced(a: &Qsda, s: &StmtKind) -> Result<(Qsda, TraceRecord), TransformError> {
    let case = case_name(s)?;
    let mut rec = TraceRecord { case, input_states: a.len(), nfa_states: 0, det_states: 0, output_states: 0 };
    if a.is_empty() {
        return Ok((a.clone(), rec));
    }
    let via = |rules: &dyn Fn() -> Nfa, rec: &mut TraceRecord| -> Result<Qsda, TransformError> {
        let n = rules();
        rec.nfa_states = n.states.len();
        let d = n.determinize(Combine::Join)?;
        rec.det_states = d.len();
        Ok(d.minimize())
    };
    let out = match *s {
        StmtKind::Skip => a.clone(),
        StmtKind::PtrAssign(p, q) if p == q => a.clone(),
        StmtKind::PtrAssignNil(p) => via(&|| run(a, &Assign::new(a, p, 0)), &mut rec)?,
        StmtKind::PtrAssign(p, q) => via(&|| run(a, &Assign::new(a, p, q)), &mut rec)?,
        StmtKind::PtrAssignNext(p, r) => via(&|| run(a, &LoadNext::new(a, p, r)), &mut rec)?,
        StmtKind::NextAssign(p, r) if p == r => Qsda::bottom(a.sig().clone()),
        StmtKind::NextAssignNil(p) => via(&|| run(a, &Redirects::new(a, p, 0)), &mut rec)?,
        StmtKind::NextAssign(p, r) => via(&|| run(a, &Redirects::new(a, p, r)), &mut rec)?,
        StmtKind::New(p) => via(&|| run(a, &New::new(a, p)), &mut rec)?,
        StmtKind::DataAssign(p, e) => {
            let update = write_update(e)?;
            let npv = a.sig().npv();
            via(&|| run(a, &DataWrite { a, p, update: &update, npv }), &mut rec)?
        }
        StmtKind::AssumeStruct(lit) => assume_struct(a, lit, &mut rec, &via)?,
        StmtKind::AssumeData(c) => {
            let psi = DataFormula::from_atom(a.sig().nterms(), &data_atom(&c)?)?;
            a.map_formulas(|_, f| f.meet(&psi)).minimize()
        }
        _ => unreachable!("rejected by case_name"),
    };
    rec.output_states = out.len();
    Ok((out, rec))
}

fn run<R: Rules>(a: &Qsda, rules: &R) -> Nfa {
    explore(a, rules)
}

fn case_name(s: &StmtKind) -> Result<&'static str, TransformError> {
    Ok(match s {
        StmtKind::Skip => "skip",
        StmtKind::PtrAssignNil(_) | StmtKind::PtrAssign(..) => "assign",
        StmtKind::PtrAssignNext(..) => "load-next",
        StmtKind::NextAssignNil(_) | StmtKind::NextAssign(..) => "redirect",
        StmtKind::New(_) => "new",
        StmtKind::DataAssign(..) => "data-write",
        StmtKind::AssumeStruct(StructLit { atom: StructAtom::Eq(..), .. }) => "assume-eq",
        StmtKind::AssumeStruct(StructLit { atom: StructAtom::Next(..), .. }) => "assume-next",
        StmtKind::AssumeStruct(StructLit { atom: StructAtom::Reach(..), .. }) => "assume-reach",
        StmtKind::AssumeData(_) => "assume-data",
        other => return Err(TransformError::UnsupportedStmt(format!("{other:?}"))),
    })
}

fn operand(e: &DataExpr) -> Result<Operand, TransformError> {
    match *e {
        DataExpr::Const(c) => Ok(Operand::Const(c)),
        DataExpr::Term(DataRef::Deref(p), k) => Ok(Operand::Term(p, k)),
        DataExpr::Term(DataRef::Var(_), _) => {
            Err(TransformError::UnsupportedStmt("data variable left after desugaring".into()))
        }
    }
}

fn data_atom(c: &DataCmp) -> Result<DataAtom, TransformError> {
    Ok(DataAtom { lhs: operand(&c.lhs)?, op: c.op, rhs: operand(&c.rhs)? })
}

fn terms(v: VarSet) -> impl Iterator<Item = usize> {
    (0..32).filter(move |t| v >> t & 1 == 1)
}

type Update = Box<dyn Fn(&DataFormula, VarSet) -> DataFormula>;

/// The root-formula update of `p->data := e` given the variables `V` at
/// `p`'s node.
fn write_update(e: DataExpr) -> Result<Update, TransformError> {
    Ok(match e {
        DataExpr::Const(c) => Box::new(move |f, v| {
            let mut g = f.project_all(terms(v));
            for t in terms(v) {
                g = g.constrain_const(t, c);
            }
            g
        }),
        DataExpr::Term(DataRef::Deref(r), k) => Box::new(move |f, v| {
            if v >> r & 1 == 1 {
                let mut g = f.project_all(terms(v & !(1 << r))).shift(r, k);
                for t in terms(v & !(1 << r)) {
                    g = g.constrain_eq(t, r);
                }
                g
            } else {
                let mut g = f.project_all(terms(v));
                for t in terms(v) {
                    g = g.constrain_offset(t, r, k);
                }
                g
            }
        }),
        DataExpr::Term(DataRef::Var(_), _) => {
            return Err(TransformError::UnsupportedStmt("data variable left after desugaring".into()))
        }
    })
}

fn filter(a: &Qsda, keep: impl Fn(&Transition) -> bool) -> Qsda {
    let trans = a.transitions().iter().filter(|t| keep(t)).cloned().collect();
    Qsda::from_parts(a.sig().clone(), a.states().to_vec(), trans)
        .expect("a subset of a deterministic table stays deterministic")
        .minimize()
}

fn assume_struct(
    a: &Qsda,
    lit: StructLit,
    rec: &mut TraceRecord,
    via: &dyn Fn(&dyn Fn() -> Nfa, &mut TraceRecord) -> Result<Qsda, TransformError>,
) -> Result<Qsda, TransformError> {
    let positive = lit.positive;
    Ok(match lit.atom {
        StructAtom::Eq(p, r) if p == r => {
            if positive {
                a.clone()
            } else {
                Qsda::bottom(a.sig().clone())
            }
        }
        StructAtom::Eq(p, r) => filter(a, |t| {
            let (hp, hr) = (t.letter.has_ptr(p), t.letter.has_ptr(r));
            if positive {
                hp == hr
            } else {
                !(hp && hr)
            }
        }),
        StructAtom::Reach(p, r) => filter(a, |t| {
            !t.letter.has_ptr(r) || (a.states()[t.target as usize].ty >> p & 1 == 1) == positive
        }),
        StructAtom::Next(p, r) => via(&|| run(a, &NextIs { a, p, r, positive }), rec)?,
    })
}

/// Meets every formula with what holds for all placements of `y` on the same
/// heap shape. The heap language is unchanged.
pub fn strengthen(a: &Qsda, y: usize) -> Qsda {
    if a.is_empty() {
        return a.clone();
    }
    let sig = a.sig().clone();
    let yt = sig.uvar_term(y);
    let ybit: VarSet = 1 << yt;
    let yu = y as u8;
    let drop_y = |l: Letter| if l.uvar == Some(yu) { Letter { uvar: None, ..l } } else { l };

    // A1 reads trees with `y` erased and guesses where it was.
    let mut n1 = Nfa::new(sig.clone());
    for s in a.states() {
        let formula = if s.root { s.formula.project(yt) } else { DataFormula::Bottom };
        n1.add_state(NState { ty: s.ty & !ybit, root: s.root, formula, side: 0 });
    }
    for t in a.transitions() {
        n1.add_trans(t.children.clone(), drop_y(t.letter), t.target);
    }
    let a1 = n1.determinize(Combine::Meet).expect("erasing one variable keeps types aligned");

    // Put `y` back at exactly one node of every A1 run.
    let mut n = a.to_nfa(0);
    let base = n.states.len() as u32;
    let lifted = |s: u32, h: bool| base + 2 * s + u32::from(h);
    for s in a1.states() {
        for h in [false, true] {
            let formula = if s.root && h { s.formula.clone() } else { DataFormula::Bottom };
            let ty = s.ty | if h { ybit } else { 0 };
            n.add_state(NState { ty, root: s.root, formula, side: 1 });
        }
    }
    for t in a1.transitions() {
        let k = t.children.len();
        let unmarked: Vec<u32> = t.children.iter().map(|&c| lifted(c, false)).collect();
        if t.letter.root {
            for i in 0..k {
                let mut ch = unmarked.clone();
                ch[i] = lifted(t.children[i], true);
                n.add_trans(ch, t.letter, lifted(t.target, true));
            }
            continue;
        }
        n.add_trans(unmarked.clone(), t.letter, lifted(t.target, false));
        if t.letter.uvar.is_none() && !(k == 0 && t.letter.ptrs == 0) {
            n.add_trans(unmarked.clone(), Letter { uvar: Some(yu), ..t.letter }, lifted(t.target, true));
        }
        for i in 0..k {
            let mut ch = unmarked.clone();
            ch[i] = lifted(t.children[i], true);
            n.add_trans(ch, t.letter, lifted(t.target, true));
        }
    }
    n.determinize(Combine::BothSidesMeet).expect("both sides agree on types").minimize()
}

/// [`post`] followed by [`strengthen`] for every universal variable.
pub fn full_post(a: &Qsda, s: &StmtKind) -> Result<Qsda, TransformError> {
    let p = post(a, s)?;
    Ok((0..a.sig().ny()).fold(p, |acc, y| strengthen(&acc, y)))
}
