//! Property templates, assertion checking and quantified-formula emission.

mod emit;
mod pre;
mod template;

use std::collections::HashSet;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::heap::Signature;
use crate::lang::PropAnnot;
use crate::qsda::Qsda;

pub use emit::{emit_formula, Atom, Clause, GuardNode, QuantifiedInvariant};
pub use pre::precondition;
pub use template::{PropKind, PropertySpec};

use template::{all_letters, materialize, Track, TEMPLATES};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StrandError {
    #[error("unknown property `{0}`")]
    UnknownProperty(String),
    #[error("property {name} expects {expected}, got {got} argument(s)")]
    Arity { name: String, expected: String, got: usize },
    #[error("`{0}` is not a pointer of the signature")]
    UnknownPointer(String),
    #[error("property {name} needs {needed} universal variable(s), the signature has {have}")]
    InsufficientUniversals { name: String, needed: usize, have: usize },
    #[error("unsupported precondition: {0}")]
    UnsupportedPrecondition(String),
    #[error("formula emission needs an elastic automaton")]
    NotElastic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Proved,
    Unknown(String),
}

impl Verdict {
    pub fn is_proved(&self) -> bool {
        matches!(self, Verdict::Proved)
    }
}

impl PropertySpec {
    /// Resolves an annotation against the pointer names of `sig`. Arguments
    /// are the anchor, then the parameter pointer if the property takes one,
    /// then an optional integer offset.
    pub fn from_annot(a: &PropAnnot, sig: &Signature) -> Result<PropertySpec, StrandError> {
        let tpl = TEMPLATES
            .iter()
            .find(|t| t.name == a.name)
            .ok_or_else(|| StrandError::UnknownProperty(a.name.clone()))?;
        let ptr = |s: &String| sig.ptr_index(s).ok_or_else(|| StrandError::UnknownPointer(s.clone()));
        let want = 1 + usize::from(tpl.param);
        let arity = || StrandError::Arity {
            name: a.name.clone(),
            expected: if tpl.param { "2 or 3".into() } else { "1".into() },
            got: a.args.len(),
        };
        if a.args.len() < want || a.args.len() > want + usize::from(tpl.param) {
            return Err(arity());
        }
        let anchor = ptr(&a.args[0])?;
        let param = if tpl.param { Some(ptr(&a.args[1])?) } else { None };
        let offset = match a.args.get(want) {
            Some(s) => s.parse::<i64>().map_err(|_| arity())?,
            None => 0,
        };
        Ok(PropertySpec { kind: tpl.kind, anchor, param, offset })
    }

    pub fn name(&self) -> &'static str {
        self.template().name
    }

    pub fn render(&self, sig: &Signature) -> String {
        let mut args = vec![sig.pointers()[self.anchor].clone()];
        if let Some(k) = self.param {
            args.push(sig.pointers()[k].clone());
        }
        if self.offset != 0 {
            args.push(self.offset.to_string());
        }
        format!("{}({})", self.name(), args.join(", "))
    }

    fn check_universals(&self, sig: &Signature) -> Result<(), StrandError> {
        if sig.ny() < self.universals() {
            return Err(StrandError::InsufficientUniversals {
                name: self.name().into(),
                needed: self.universals(),
                have: sig.ny(),
            });
        }
        Ok(())
    }
}

/// The smallest elastic automaton accepting exactly the heaps that satisfy
/// `spec`. The construction enumerates every letter of the signature, so it
/// is meant for small signatures; assertion checking does not need it.
pub fn property_eqsda(spec: &PropertySpec, sig: Arc<Signature>) -> Result<Qsda, StrandError> {
    spec.check_universals(&sig)?;
    let letters = all_letters(&sig);
    Ok(materialize(
        &sig,
        &letters,
        |l, kids: &[&Track]| match spec.step(l, kids) {
            Ok(t) if !t.dead => Some(t),
            _ => None,
        },
        |kids| spec.root(&sig, kids),
    ))
}

/// Whether `inv ⊑ property_eqsda(spec)` on the trees that encode heaps.
///
/// The check runs `inv` in lockstep with the property tracker and compares
/// root formulas, so no property automaton is built. Trees where `nil` is
/// not a child of the root encode no heap and are skipped.
pub fn check_assertion(inv: &Qsda, spec: &PropertySpec) -> Result<Verdict, StrandError> {
    let sig = inv.sig().clone();
    spec.check_universals(&sig)?;
    let n = inv.len();
    let mut reach: Vec<Vec<Track>> = vec![Vec::new(); n];
    let mut seen: Vec<HashSet<Track>> = vec![HashSet::new(); n];
    let inner: Vec<_> = inv.transitions().iter().filter(|t| !t.letter.root).collect();
    loop {
        let mut changed = false;
        for t in &inner {
            let opts: Vec<&Vec<Track>> = t.children.iter().map(|&c| &reach[c as usize]).collect();
            let mut found = Vec::new();
            for_each_combo(&opts, |kids| {
                if let Ok(tr) = spec.step(t.letter, kids) {
                    found.push(tr);
                }
            });
            let q = t.target as usize;
            for tr in found {
                if seen[q].insert(tr.clone()) {
                    reach[q].push(tr);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let names = sig.term_names();
    for t in inv.transitions().iter().filter(|t| t.letter.root) {
        let f_inv = &inv.states()[t.target as usize].formula;
        let opts: Vec<&Vec<Track>> = t.children.iter().map(|&c| &reach[c as usize]).collect();
        let mut verdict = None;
        for_each_combo(&opts, |kids| {
            if verdict.is_some() || kids.iter().filter(|k| k.nil).count() != 1 {
                return;
            }
            match spec.root(&sig, kids) {
                None => verdict = Some(format!("a tree with formula {} violates the shape", f_inv.render(&names))),
                Some(f) if !f_inv.leq(&f) => {
                    verdict = Some(format!("{} does not entail {}", f_inv.render(&names), f.render(&names)))
                }
                Some(_) => {}
            }
        });
        if let Some(why) = verdict {
            return Ok(Verdict::Unknown(why));
        }
    }
    Ok(Verdict::Proved)
}

fn for_each_combo<'a, T>(opts: &[&'a Vec<T>], mut f: impl FnMut(&[&'a T])) {
    fn rec<'a, T>(opts: &[&'a Vec<T>], cur: &mut Vec<&'a T>, f: &mut dyn FnMut(&[&'a T])) {
        if cur.len() == opts.len() {
            f(cur);
            return;
        }
        for x in opts[cur.len()].iter() {
            cur.push(x);
            rec(opts, cur, f);
            cur.pop();
        }
    }
    rec(opts, &mut Vec::with_capacity(opts.len()), &mut f);
}
