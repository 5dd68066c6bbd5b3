//! JSON and DOT renderings.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Qsda, QsdaError, State, Transition};
use crate::datafmla::{Constraint, DataFormula, Signed};
use crate::heap::{Letter, Signature, MAX_VARS};

pub const JSON_VERSION: u32 = 1;

/// Serialized form of a QSDA.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QsdaJson {
    pub version: u32,
    pub pointers: Vec<String>,
    pub universals: Vec<String>,
    #[serde(default)]
    pub elastic: bool,
    pub states: Vec<StateJson>,
    pub transitions: Vec<TransJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateJson {
    #[serde(rename = "type")]
    pub ty: Vec<String>,
    pub root: bool,
    /// Absent on inner states; `null` means false.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<Option<Vec<ConstraintJson>>>,
}

/// `sum(coef * term) <= bound` with one or two terms and coefficients ±1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintJson {
    pub terms: Vec<(i8, String)>,
    pub bound: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransJson {
    pub children: Vec<u32>,
    pub ptrs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uvar: Option<String>,
    #[serde(default)]
    pub root: bool,
    pub target: u32,
}

fn names_of(sig: &Signature, set: u32) -> Vec<String> {
    let names = sig.term_names();
    (0..sig.nterms()).filter(|i| set >> i & 1 == 1).map(|i| names[i].clone()).collect()
}

impl Qsda {
    pub fn to_json(&self) -> QsdaJson {
        let sig = &self.sig;
        let names = sig.term_names();
        let states = self
            .states
            .iter()
            .map(|s| StateJson {
                ty: names_of(sig, s.ty),
                root: s.root,
                formula: s.root.then(|| {
                    (!s.formula.is_bottom()).then(|| {
                        s.formula
                            .constraints()
                            .iter()
                            .map(|c| {
                                let term = |x: Signed| (if x.neg { -1 } else { 1 }, names[x.term].clone());
                                let mut terms = vec![term(c.a)];
                                terms.extend(c.b.map(term));
                                ConstraintJson { terms, bound: c.bound }
                            })
                            .collect()
                    })
                }),
            })
            .collect();
        let transitions = self
            .trans
            .iter()
            .map(|t| TransJson {
                children: t.children.clone(),
                ptrs: names_of(sig, t.letter.ptrs),
                uvar: t.letter.uvar.map(|j| sig.uvars()[j as usize].clone()),
                root: t.letter.root,
                target: t.target,
            })
            .collect();
        QsdaJson {
            version: JSON_VERSION,
            pointers: sig.pointers().to_vec(),
            universals: sig.uvars().to_vec(),
            elastic: crate::elastic::is_elastic(self),
            states,
            transitions,
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("serializable")
    }

    /// Decodes and validates a serialized automaton.
    pub fn from_json(j: &QsdaJson) -> Result<Qsda, QsdaError> {
        let bad = |m: &str| QsdaError::Json(m.to_string());
        if j.version != JSON_VERSION {
            return Err(QsdaError::UnsupportedVersion(j.version));
        }
        if j.pointers.first().map(String::as_str) != Some("nil") {
            return Err(bad("pointer list must start with nil"));
        }
        if j.pointers.len() + j.universals.len() > MAX_VARS {
            return Err(bad("too many variables"));
        }
        let mut all: Vec<&String> = j.pointers.iter().chain(&j.universals).collect();
        all.sort();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(bad("duplicate variable name"));
        }
        let sig = Arc::new(Signature::from_parts(j.pointers.clone(), j.universals.clone()));
        let names = sig.term_names();
        let term = |n: &str| names.iter().position(|x| x == n).ok_or_else(|| bad("unknown variable"));
        let set = |ns: &[String]| -> Result<u32, QsdaError> {
            let mut s = 0u32;
            for n in ns {
                s |= 1 << term(n)?;
            }
            Ok(s)
        };
        let nterms = sig.nterms();
        let mut states = Vec::with_capacity(j.states.len());
        for s in &j.states {
            let formula = match (&s.formula, s.root) {
                (None, false) => DataFormula::Bottom,
                (Some(None), true) => DataFormula::Bottom,
                (Some(Some(cs)), true) => {
                    let mut out = Vec::with_capacity(cs.len());
                    for c in cs {
                        let signed = |(k, n): &(i8, String)| -> Result<Signed, QsdaError> {
                            match k {
                                1 | -1 => Ok(Signed { neg: *k < 0, term: term(n)? }),
                                _ => Err(bad("coefficients must be 1 or -1")),
                            }
                        };
                        let (a, b) = match c.terms.as_slice() {
                            [a] => (signed(a)?, None),
                            [a, b] => (signed(a)?, Some(signed(b)?)),
                            _ => return Err(bad("constraints have one or two terms")),
                        };
                        if c.bound.checked_mul(2).is_none() {
                            return Err(bad("bound out of range"));
                        }
                        out.push(Constraint { a, b, bound: c.bound });
                    }
                    DataFormula::from_constraints(nterms, &out)
                }
                (None, true) => return Err(bad("root state without formula")),
                (Some(_), false) => return Err(bad("inner state with formula")),
            };
            states.push(State { ty: set(&s.ty)?, root: s.root, formula });
        }
        let mut trans = Vec::with_capacity(j.transitions.len());
        for t in &j.transitions {
            let ptrs = set(&t.ptrs)?;
            if ptrs & !sig.pv_mask() != 0 {
                return Err(bad("letters hold pointers only"));
            }
            let uvar = match &t.uvar {
                None => None,
                Some(n) => Some(
                    sig.uvars().iter().position(|u| u == n).ok_or_else(|| bad("unknown universal"))? as u8,
                ),
            };
            trans.push(Transition { children: t.children.clone(), letter: Letter { ptrs, uvar, root: t.root }, target: t.target });
        }
        let q = Qsda::from_parts(sig, states, trans)?;
        q.validate()?;
        Ok(q)
    }

    pub fn from_json_str(s: &str) -> Result<Qsda, QsdaError> {
        let j: QsdaJson = serde_json::from_str(s).map_err(|e| QsdaError::Json(e.to_string()))?;
        Qsda::from_json(&j)
    }

    /// Graphviz rendering; transitions with several children go through a
    /// small junction node.
    pub fn to_dot(&self) -> String {
        let names = self.sig.term_names();
        let mut s = String::from("digraph qsda {\n  rankdir=BT;\n");
        let _ = writeln!(s, "  label=\"elastic: {}\";", crate::elastic::is_elastic(self));
        for (i, st) in self.states.iter().enumerate() {
            let mut label = format!("q{i}\\n{}", self.sig.render_set(st.ty));
            let shape = if st.root {
                label.push_str(&format!("\\n{}", st.formula.render(&names).replace('"', "\\\"")));
                "doublecircle"
            } else {
                "circle"
            };
            let _ = writeln!(s, "  q{i} [shape={shape}, label=\"{label}\"];");
        }
        for (k, t) in self.trans.iter().enumerate() {
            let l = t.letter.render(&self.sig);
            match t.children.as_slice() {
                [] => {
                    let _ = writeln!(s, "  leaf{k} [shape=point];\n  leaf{k} -> q{} [label=\"{l}\"];", t.target);
                }
                [c] => {
                    let _ = writeln!(s, "  q{c} -> q{} [label=\"{l}\"];", t.target);
                }
                cs => {
                    let _ = writeln!(s, "  j{k} [shape=box, label=\"{l}\"];\n  j{k} -> q{};", t.target);
                    for c in cs {
                        let _ = writeln!(s, "  q{c} -> j{k};");
                    }
                }
            }
        }
        s.push_str("}\n");
        s
    }
}
