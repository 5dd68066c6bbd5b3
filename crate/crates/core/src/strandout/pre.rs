//! Precondition automata for the program entry.
//!
//! Every `@pre` anchor heads its own list ending in `nil`; the lists are
//! disjoint. Data-variable pointers sit on fresh cells of their own (the
//! prologue allocated them), and every other pointer is at `nil`. The root
//! formula carries the data rules of the annotations, equalities between
//! variables that share a node, and `nil`'s datum 0.

use std::sync::Arc;

use super::template::{Elems, Shape};
use super::{materialize, PropertySpec, StrandError};
use crate::datafmla::DataFormula;
use crate::heap::{Letter, Signature, VarSet};
use crate::lang::{Program, StmtKind};
use crate::qsda::Qsda;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Part {
    /// A list segment whose leaf holds `anchor`; universals in list order.
    Chain { anchor: usize, ys: Vec<u8>, group: VarSet },
    /// The `nil` node with the chains hanging below it.
    Nil { chains: Vec<(usize, Vec<u8>, VarSet)>, group: VarSet },
    Cell { group: VarSet },
}

/// The precondition EQSDA of a desugared program over `sig`.
pub fn precondition(p: &Program, sig: Arc<Signature>) -> Result<Qsda, StrandError> {
    let specs: Vec<PropertySpec> =
        p.pre.iter().map(|a| PropertySpec::from_annot(a, &sig)).collect::<Result<_, _>>()?;
    for s in &specs {
        s.check_universals(&sig)?;
        if s.template().shape == Shape::LastIs {
            return Err(StrandError::UnsupportedPrecondition(s.render(&sig)));
        }
    }
    let cells: Vec<usize> = p.body[..p.prologue]
        .iter()
        .filter_map(|s| match s.kind {
            StmtKind::New(d) => Some(d),
            _ => None,
        })
        .collect();
    let mut anchors: Vec<usize> = specs.iter().map(|s| s.anchor).collect();
    anchors.sort_unstable();
    anchors.dedup();
    if let Some(&a) = anchors.iter().find(|a| cells.contains(a) || **a == 0) {
        return Err(StrandError::UnsupportedPrecondition(format!("`{}` cannot head a list", sig.pointers()[a])));
    }
    let empty: Vec<usize> = specs.iter().filter(|s| s.template().shape == Shape::AtNil).map(|s| s.anchor).collect();
    let npv = sig.npv();
    let others: VarSet = (1..npv).filter(|q| !anchors.contains(q) && !cells.contains(q)).fold(1, |m, q| m | 1 << q);
    let amask: VarSet = anchors.iter().fold(0, |m, a| m | 1 << a);

    let uv: Vec<Option<u8>> = std::iter::once(None).chain((0..sig.ny()).map(|y| Some(y as u8))).collect();
    let mut letters = Vec::new();
    for &u in &uv {
        letters.push(Letter::new(0, u));
        for &a in &anchors {
            letters.push(Letter::new(1 << a, u));
        }
        for &d in &cells {
            letters.push(Letter::new(1 << d, u));
        }
        let mut sub = amask;
        loop {
            letters.push(Letter::new(others | sub, u));
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & amask;
        }
    }

    let step = |l: Letter, kids: &[&Part]| -> Option<Part> {
        let group = l.vars(npv);
        if l.has_ptr(0) {
            let mut chains = Vec::new();
            for k in kids {
                match k {
                    Part::Chain { anchor, ys, group } => chains.push((*anchor, ys.clone(), *group)),
                    _ => return None,
                }
            }
            chains.sort();
            return Some(Part::Nil { chains, group });
        }
        match kids {
            [] if l.ptrs & amask != 0 => {
                let anchor = l.ptrs.trailing_zeros() as usize;
                (!empty.contains(&anchor)).then(|| Part::Chain { anchor, ys: l.uvar.into_iter().collect(), group })
            }
            [] => Some(Part::Cell { group }),
            [Part::Chain { anchor, ys, group: g }] if l.ptrs == 0 => {
                let mut ys = ys.clone();
                ys.extend(l.uvar);
                Some(Part::Chain { anchor: *anchor, ys, group: *g })
            }
            _ => None,
        }
    };
    let root = |kids: &[&Part]| -> Option<DataFormula> {
        let mut f = DataFormula::top(sig.nterms()).constrain_const(0, 0);
        let mut nils = 0;
        let mut lists: Vec<(usize, Vec<u8>)> = Vec::new();
        let eq = |f: DataFormula, g: VarSet| {
            let lead = g.trailing_zeros() as usize;
            (lead + 1..32).filter(|t| g >> t & 1 == 1).fold(f, |f, t| f.constrain_eq(t, lead))
        };
        for k in kids {
            match k {
                Part::Nil { chains, group } => {
                    nils += 1;
                    f = eq(f, *group);
                    for (a, ys, g) in chains {
                        f = eq(f, *g);
                        lists.push((*a, ys.clone()));
                    }
                }
                Part::Cell { group } => f = eq(f, *group),
                Part::Chain { .. } => return None,
            }
        }
        if nils != 1 {
            return None;
        }
        for s in &specs {
            if s.template().elems == Elems::Free {
                continue;
            }
            let ys = lists.iter().find(|(a, _)| *a == s.anchor).map_or(&[][..], |(_, ys)| &ys[..]);
            f = s.elements(&sig, ys, f);
        }
        Some(f)
    };
    Ok(materialize(&sig, &letters, step, root))
}
