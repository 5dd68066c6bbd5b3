//! Octagon data formulas over a fixed term universe.
//!
//! Terms are indexed `0..n`. The matrix uses the usual doubled encoding: index
//! `2t` stands for `+t` and `2t+1` for `-t`, and entry `(i, j)` bounds
//! `V_i - V_j`. Every non-bottom value is kept tightly closed, so equivalent
//! formulas share one matrix and structural equality is semantic equality.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

const INF: i64 = i64::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("predicate is not expressible as an octagon: {0}")]
    InexpressiblePredicate(String),
    #[error("arithmetic overflow while building a constraint")]
    Overflow,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Oct {
    n: usize,
    m: Vec<i64>,
}

/// A conjunction of octagonal constraints, or `Bottom`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DataFormula {
    Bottom,
    Oct(Arc<Oct>),
}

/// A signed occurrence of a term.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signed {
    pub neg: bool,
    pub term: usize,
}

/// `a (+ b) <= bound`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constraint {
    pub a: Signed,
    pub b: Option<Signed>,
    pub bound: i64,
}

/// Linear operand of a data comparison: a term plus offset, or a constant.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Operand {
    Term(usize, i64),
    Const(i64),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Gt => CmpOp::Le,
        }
    }

    pub fn holds(self, l: i64, r: i64) -> bool {
        match self {
            CmpOp::Lt => l < r,
            CmpOp::Le => l <= r,
            CmpOp::Eq => l == r,
            CmpOp::Ne => l != r,
            CmpOp::Ge => l >= r,
            CmpOp::Gt => l > r,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

/// An atomic data comparison `lhs op rhs`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct DataAtom {
    pub lhs: Operand,
    pub op: CmpOp,
    pub rhs: Operand,
}

impl DataAtom {
    pub fn eval(&self, env: &[i64]) -> bool {
        let val = |o: Operand| match o {
            Operand::Term(t, c) => env[t] as i128 + c as i128,
            Operand::Const(c) => c as i128,
        };
        let (l, r) = (val(self.lhs), val(self.rhs));
        match self.op {
            CmpOp::Lt => l < r,
            CmpOp::Le => l <= r,
            CmpOp::Eq => l == r,
            CmpOp::Ne => l != r,
            CmpOp::Ge => l >= r,
            CmpOp::Gt => l > r,
        }
    }
}

impl Oct {
    fn top(n: usize) -> Oct {
        let d = 2 * n;
        let mut m = vec![INF; d * d];
        for i in 0..d {
            m[i * d + i] = 0;
        }
        Oct { n, m }
    }

    #[inline]
    fn dim(&self) -> usize {
        2 * self.n
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> i64 {
        self.m[i * self.dim() + j]
    }

    #[inline]
    fn set_min(&mut self, i: usize, j: usize, v: i64) {
        let d = self.dim();
        if v < self.m[i * d + j] {
            self.m[i * d + j] = v;
        }
    }

    /// Adds `V_i - V_j <= c` together with its coherent twin.
    fn add_raw(&mut self, i: usize, j: usize, c: i64) {
        self.set_min(i, j, c);
        self.set_min(j ^ 1, i ^ 1, c);
    }

    /// Tight closure. Returns false when the octagon has no integer point.
    fn close(&mut self) -> bool {
        let d = self.dim();
        let m = &mut self.m;
        for k in 0..d {
            for i in 0..d {
                let ik = m[i * d + k];
                if ik == INF {
                    continue;
                }
                for j in 0..d {
                    let kj = m[k * d + j];
                    if kj == INF {
                        continue;
                    }
                    let s = ik + kj;
                    if s < m[i * d + j] {
                        m[i * d + j] = s;
                    }
                }
            }
        }
        for i in 0..d {
            if m[i * d + i] < 0 {
                return false;
            }
        }
        for i in 0..d {
            let b = i ^ 1;
            let v = m[i * d + b];
            if v != INF {
                m[i * d + b] = 2 * v.div_euclid(2);
            }
        }
        for i in (0..d).step_by(2) {
            let (a, b) = (m[i * d + i + 1], m[(i + 1) * d + i]);
            if a != INF && b != INF && a + b < 0 {
                return false;
            }
        }
        for i in 0..d {
            let ii = m[i * d + (i ^ 1)];
            if ii == INF {
                continue;
            }
            for j in 0..d {
                let jj = m[(j ^ 1) * d + j];
                if jj == INF {
                    continue;
                }
                let s = (ii + jj) / 2;
                if s < m[i * d + j] {
                    m[i * d + j] = s;
                }
            }
        }
        for i in 0..d {
            if m[i * d + i] < 0 {
                return false;
            }
            m[i * d + i] = 0;
        }
        true
    }
}

fn idx(s: Signed) -> usize {
    2 * s.term + usize::from(s.neg)
}

impl DataFormula {
    pub fn top(n: usize) -> DataFormula {
        DataFormula::Oct(Arc::new(Oct::top(n)))
    }

    pub fn bottom() -> DataFormula {
        DataFormula::Bottom
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, DataFormula::Bottom)
    }

    pub fn is_top(&self) -> bool {
        match self {
            DataFormula::Bottom => false,
            DataFormula::Oct(o) => {
                let d = o.dim();
                (0..d).all(|i| (0..d).all(|j| i == j || o.get(i, j) == INF))
            }
        }
    }

    fn from_oct(mut o: Oct) -> DataFormula {
        if o.close() {
            DataFormula::Oct(Arc::new(o))
        } else {
            DataFormula::Bottom
        }
    }

    /// Builds a formula from constraints over `n` terms.
    pub fn from_constraints(n: usize, cs: &[Constraint]) -> DataFormula {
        let mut o = Oct::top(n);
        for c in cs {
            push_constraint(&mut o, c);
        }
        DataFormula::from_oct(o)
    }

    pub fn meet(&self, other: &DataFormula) -> DataFormula {
        match (self, other) {
            (DataFormula::Bottom, _) | (_, DataFormula::Bottom) => DataFormula::Bottom,
            (DataFormula::Oct(a), DataFormula::Oct(b)) => {
                if a == b {
                    return self.clone();
                }
                let mut o = (**a).clone();
                for (x, y) in o.m.iter_mut().zip(&b.m) {
                    *x = (*x).min(*y);
                }
                DataFormula::from_oct(o)
            }
        }
    }

    pub fn join(&self, other: &DataFormula) -> DataFormula {
        match (self, other) {
            (DataFormula::Bottom, x) | (x, DataFormula::Bottom) => x.clone(),
            (DataFormula::Oct(a), DataFormula::Oct(b)) => {
                if a == b {
                    return self.clone();
                }
                let mut o = (**a).clone();
                for (x, y) in o.m.iter_mut().zip(&b.m) {
                    *x = (*x).max(*y);
                }
                DataFormula::from_oct(o)
            }
        }
    }

    pub fn leq(&self, other: &DataFormula) -> bool {
        match (self, other) {
            (DataFormula::Bottom, _) => true,
            (_, DataFormula::Bottom) => false,
            (DataFormula::Oct(a), DataFormula::Oct(b)) => {
                a.m.iter().zip(&b.m).all(|(x, y)| x <= y)
            }
        }
    }

    /// Keeps bounds of `self` that `other` does not exceed; drops the rest.
    pub fn widen(&self, other: &DataFormula) -> DataFormula {
        match (self, other) {
            (DataFormula::Bottom, x) => x.clone(),
            (x, DataFormula::Bottom) => x.clone(),
            (DataFormula::Oct(a), DataFormula::Oct(b)) => {
                let mut o = (**a).clone();
                for (x, y) in o.m.iter_mut().zip(&b.m) {
                    if *y > *x {
                        *x = INF;
                    }
                }
                DataFormula::from_oct(o)
            }
        }
    }

    /// Forgets everything about term `t`.
    pub fn project(&self, t: usize) -> DataFormula {
        match self {
            DataFormula::Bottom => DataFormula::Bottom,
            DataFormula::Oct(a) => {
                let mut o = (**a).clone();
                let d = o.dim();
                for k in [2 * t, 2 * t + 1] {
                    for j in 0..d {
                        if j != k {
                            o.m[k * d + j] = INF;
                            o.m[j * d + k] = INF;
                        }
                    }
                }
                DataFormula::Oct(Arc::new(o))
            }
        }
    }

    pub fn project_all(&self, ts: impl IntoIterator<Item = usize>) -> DataFormula {
        ts.into_iter().fold(self.clone(), |f, t| f.project(t))
    }

    pub fn constrain(&self, c: &Constraint) -> DataFormula {
        match self {
            DataFormula::Bottom => DataFormula::Bottom,
            DataFormula::Oct(a) => {
                let mut o = (**a).clone();
                push_constraint(&mut o, c);
                DataFormula::from_oct(o)
            }
        }
    }

    pub fn constrain_eq(&self, t1: usize, t2: usize) -> DataFormula {
        if t1 == t2 {
            return self.clone();
        }
        let c1 = Constraint { a: pos(t1), b: Some(neg(t2)), bound: 0 };
        let c2 = Constraint { a: pos(t2), b: Some(neg(t1)), bound: 0 };
        self.constrain(&c1).constrain(&c2)
    }

    /// Conjoins `t1 = t2 + k`.
    pub fn constrain_offset(&self, t1: usize, t2: usize, k: i64) -> DataFormula {
        if t1 == t2 {
            return if k == 0 { self.clone() } else { DataFormula::Bottom };
        }
        let c1 = Constraint { a: pos(t1), b: Some(neg(t2)), bound: k };
        let c2 = Constraint { a: pos(t2), b: Some(neg(t1)), bound: -k };
        self.constrain(&c1).constrain(&c2)
    }

    /// Conjoins `t = k`.
    pub fn constrain_const(&self, t: usize, k: i64) -> DataFormula {
        let c1 = Constraint { a: pos(t), b: None, bound: k };
        let c2 = Constraint { a: neg(t), b: None, bound: -k };
        self.constrain(&c1).constrain(&c2)
    }

    /// Substitutes `t + k` for `t`, i.e. the effect of `t := t + k`.
    pub fn shift(&self, t: usize, k: i64) -> DataFormula {
        match self {
            DataFormula::Bottom => DataFormula::Bottom,
            DataFormula::Oct(a) => {
                if k == 0 {
                    return self.clone();
                }
                let mut o = (**a).clone();
                let d = o.dim();
                let delta = |i: usize| -> i64 {
                    if i == 2 * t {
                        k
                    } else if i == 2 * t + 1 {
                        -k
                    } else {
                        0
                    }
                };
                for i in 0..d {
                    for j in 0..d {
                        let v = &mut o.m[i * d + j];
                        if *v != INF {
                            *v += delta(i) - delta(j);
                        }
                    }
                }
                DataFormula::Oct(Arc::new(o))
            }
        }
    }

    /// The octagon of a single comparison atom over `n` terms.
    pub fn from_atom(n: usize, atom: &DataAtom) -> Result<DataFormula, FormulaError> {
        let cs = atom_constraints(atom)?;
        match cs {
            None => Ok(DataFormula::Bottom),
            Some(cs) => Ok(DataFormula::from_constraints(n, &cs)),
        }
    }

    pub fn sat(&self, env: &[i64]) -> bool {
        match self {
            DataFormula::Bottom => false,
            DataFormula::Oct(_) => self.constraints().iter().all(|c| {
                let val = |s: Signed| if s.neg { -(env[s.term] as i128) } else { env[s.term] as i128 };
                val(c.a) + c.b.map_or(0, val) <= c.bound as i128
            }),
        }
    }

    /// Finite constraints in canonical order; empty for Top and for Bottom.
    pub fn constraints(&self) -> Vec<Constraint> {
        let o = match self {
            DataFormula::Bottom => return Vec::new(),
            DataFormula::Oct(o) => o,
        };
        let mut out = Vec::new();
        for x in 0..o.n {
            let (px, nx) = (2 * x, 2 * x + 1);
            let up = o.get(px, nx);
            if up != INF {
                out.push(Constraint { a: pos(x), b: None, bound: up / 2 });
            }
            let lo = o.get(nx, px);
            if lo != INF {
                out.push(Constraint { a: neg(x), b: None, bound: lo / 2 });
            }
            for y in x + 1..o.n {
                let (py, ny) = (2 * y, 2 * y + 1);
                let pairs = [
                    (o.get(px, py), pos(x), neg(y)),
                    (o.get(py, px), neg(x), pos(y)),
                    (o.get(px, ny), pos(x), pos(y)),
                    (o.get(nx, py), neg(x), neg(y)),
                ];
                for (v, a, b) in pairs {
                    if v != INF {
                        out.push(Constraint { a, b: Some(b), bound: v });
                    }
                }
            }
        }
        out
    }

    /// Number of terms, or `None` for Bottom.
    pub fn arity(&self) -> Option<usize> {
        match self {
            DataFormula::Bottom => None,
            DataFormula::Oct(o) => Some(o.n),
        }
    }

    /// Renders a conjunction using the given term names: per-term bounds
    /// first, then pairwise constraints not already implied by those bounds.
    pub fn render(&self, names: &[String]) -> String {
        let o = match self {
            DataFormula::Bottom => return "false".to_string(),
            DataFormula::Oct(o) => o,
        };
        let up = |x: usize| {
            let v = o.get(2 * x, 2 * x + 1);
            (v != INF).then_some(v / 2)
        };
        let lo = |x: usize| {
            let v = o.get(2 * x + 1, 2 * x);
            (v != INF).then(|| -(v / 2))
        };
        let implied = |a: Option<i64>, b: Option<i64>, c: i64| matches!((a, b), (Some(a), Some(b)) if a + b <= c);
        let neg_opt = |v: Option<i64>| v.map(|v| -v);
        let mut atoms = Vec::new();
        for x in 0..o.n {
            match (lo(x), up(x)) {
                (Some(l), Some(u)) if l == u => atoms.push(format!("{} = {}", names[x], u)),
                (l, u) => {
                    if let Some(l) = l {
                        atoms.push(format!("{} >= {}", names[x], l));
                    }
                    if let Some(u) = u {
                        atoms.push(format!("{} <= {}", names[x], u));
                    }
                }
            }
        }
        for x in 0..o.n {
            for y in x + 1..o.n {
                let (a, b) = (&names[x], &names[y]);
                let xy = o.get(2 * x, 2 * y);
                let yx = o.get(2 * y, 2 * x);
                let xy_new = xy != INF && !implied(up(x), neg_opt(lo(y)), xy);
                let yx_new = yx != INF && !implied(up(y), neg_opt(lo(x)), yx);
                if xy == 0 && yx == 0 && (xy_new || yx_new) {
                    atoms.push(format!("{a} = {b}"));
                } else {
                    if xy_new {
                        atoms.push(diff_atom(a, b, xy));
                    }
                    if yx_new {
                        atoms.push(diff_atom(b, a, yx));
                    }
                }
                let s = o.get(2 * x, 2 * y + 1);
                if s != INF && !implied(up(x), up(y), s) {
                    atoms.push(format!("{a} + {b} <= {s}"));
                }
                let ns = o.get(2 * x + 1, 2 * y);
                if ns != INF && !implied(neg_opt(lo(x)), neg_opt(lo(y)), ns) {
                    atoms.push(format!("{a} + {b} >= {}", -ns));
                }
            }
        }
        if atoms.is_empty() {
            "true".to_string()
        } else {
            atoms.join(" && ")
        }
    }
}

fn diff_atom(a: &str, b: &str, c: i64) -> String {
    match c {
        0 => format!("{a} <= {b}"),
        -1 => format!("{a} < {b}"),
        c if c > 0 => format!("{a} <= {b} + {c}"),
        c => format!("{a} <= {b} - {}", -c),
    }
}

pub fn pos(t: usize) -> Signed {
    Signed { neg: false, term: t }
}

pub fn neg(t: usize) -> Signed {
    Signed { neg: true, term: t }
}

fn push_constraint(o: &mut Oct, c: &Constraint) {
    let i = idx(c.a);
    match c.b {
        None => o.add_raw(i, i ^ 1, c.bound.saturating_mul(2)),
        Some(b) if b.term == c.a.term => {
            if b.neg == c.a.neg {
                o.add_raw(i, i ^ 1, c.bound);
            } else if c.bound < 0 {
                // 0 <= negative bound: contradiction.
                o.add_raw(i, i ^ 1, -1);
                o.add_raw(i ^ 1, i, -1);
            }
        }
        Some(b) => {
            // a + b <= c  is  V_a - V_{-b} <= c.
            o.add_raw(i, idx(b) ^ 1, c.bound);
        }
    }
}

/// Lowers `lhs op rhs` to constraints. `Ok(None)` means the atom is false.
fn atom_constraints(atom: &DataAtom) -> Result<Option<Vec<Constraint>>, FormulaError> {
    let (lt, lc) = split(atom.lhs);
    let (rt, rc) = split(atom.rhs);
    // lt - rt  op  rc - lc
    let k = rc.checked_sub(lc).ok_or(FormulaError::Overflow)?;
    let le = |bound: i64| -> Vec<Constraint> {
        match (lt, rt) {
            (None, None) => {
                if 0 <= bound {
                    vec![]
                } else {
                    vec![Constraint { a: pos(0), b: Some(neg(0)), bound: -1 }]
                }
            }
            (Some(x), None) => vec![Constraint { a: pos(x), b: None, bound }],
            (None, Some(y)) => vec![Constraint { a: neg(y), b: None, bound }],
            (Some(x), Some(y)) => vec![Constraint { a: pos(x), b: Some(neg(y)), bound }],
        }
    };
    let ge = |bound: i64| -> Vec<Constraint> {
        // lt - rt >= bound  is  rt - lt <= -bound
        match (lt, rt) {
            (None, None) => {
                if 0 >= bound {
                    vec![]
                } else {
                    vec![Constraint { a: pos(0), b: Some(neg(0)), bound: -1 }]
                }
            }
            (Some(x), None) => vec![Constraint { a: neg(x), b: None, bound: -bound }],
            (None, Some(y)) => vec![Constraint { a: pos(y), b: None, bound: -bound }],
            (Some(x), Some(y)) => vec![Constraint { a: pos(y), b: Some(neg(x)), bound: -bound }],
        }
    };
    let cs = match atom.op {
        CmpOp::Le => le(k),
        CmpOp::Lt => le(k - 1),
        CmpOp::Ge => ge(k),
        CmpOp::Gt => ge(k + 1),
        CmpOp::Eq => {
            let mut v = le(k);
            v.extend(ge(k));
            v
        }
        CmpOp::Ne => {
            if lt.is_none() && rt.is_none() {
                return Ok(if k != 0 { Some(vec![]) } else { None });
            }
            return Err(FormulaError::InexpressiblePredicate(format!(
                "disequality {:?} != {:?}",
                atom.lhs, atom.rhs
            )));
        }
    };
    // A constant-only contradiction is encoded as 0 - 0 <= -1 on term 0; flag it.
    if cs.iter().any(|c| c.b.is_some_and(|b| b.term == c.a.term && b.neg != c.a.neg && c.bound < 0)) {
        return Ok(None);
    }
    Ok(Some(cs))
}

fn split(o: Operand) -> (Option<usize>, i64) {
    match o {
        Operand::Term(t, c) => (Some(t), c),
        Operand::Const(c) => (None, c),
    }
}

impl fmt::Debug for DataFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataFormula::Bottom => write!(f, "false"),
            DataFormula::Oct(o) => {
                let names: Vec<String> = (0..o.n).map(|i| format!("t{i}")).collect();
                write!(f, "{}", self.render(&names))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn le(x: usize, c: i64) -> Constraint {
        Constraint { a: pos(x), b: None, bound: c }
    }

    fn ge(x: usize, c: i64) -> Constraint {
        Constraint { a: neg(x), b: None, bound: -c }
    }

    fn diff(x: usize, y: usize, c: i64) -> Constraint {
        Constraint { a: pos(x), b: Some(neg(y)), bound: c }
    }

    #[test]
    fn meet_with_top_is_neutral() {
        let f = DataFormula::from_constraints(2, &[le(0, 3), diff(0, 1, 0)]);
        assert_eq!(f.meet(&DataFormula::top(2)), f);
    }

    #[test]
    fn contradictory_bounds_meet_to_bottom() {
        let a = DataFormula::from_constraints(1, &[le(0, 1)]);
        let b = DataFormula::from_constraints(1, &[ge(0, 3)]);
        assert!(a.meet(&b).is_bottom());
    }

    #[test]
    fn closure_derives_transitive_difference() {
        let a = DataFormula::from_constraints(3, &[diff(0, 1, 0)]);
        let b = DataFormula::from_constraints(3, &[diff(1, 2, 0)]);
        let m = a.meet(&b);
        assert!(m.leq(&DataFormula::from_constraints(3, &[diff(0, 2, 0)])));
    }

    #[test]
    fn join_takes_max_bound() {
        let a = DataFormula::from_constraints(1, &[le(0, 1)]);
        let b = DataFormula::from_constraints(1, &[le(0, 3)]);
        assert_eq!(a.join(&b), b);
        assert_eq!(DataFormula::Bottom.join(&a), a);
        assert!(DataFormula::Bottom.leq(&a));
    }

    #[test]
    fn widening_drops_grown_bounds_only() {
        let a = DataFormula::from_constraints(1, &[le(0, 1)]);
        let b = DataFormula::from_constraints(1, &[le(0, 3)]);
        assert!(a.widen(&b).is_top());
        assert_eq!(b.widen(&b), b);
    }

    #[test]
    fn projection_keeps_implied_bound() {
        let f = DataFormula::from_constraints(2, &[le(0, 5), ge(0, 5), diff(1, 0, 0)]);
        let p = f.project(0);
        assert_eq!(p, DataFormula::from_constraints(2, &[le(1, 5)]));
        assert!(DataFormula::top(2).project(0).is_top());
        assert!(DataFormula::Bottom.project(0).is_bottom());
    }

    #[test]
    fn strict_comparison_is_tightened() {
        let atom = DataAtom { lhs: Operand::Term(0, 0), op: CmpOp::Lt, rhs: Operand::Term(1, 0) };
        let f = DataFormula::from_atom(2, &atom).unwrap();
        assert_eq!(f, DataFormula::from_constraints(2, &[diff(0, 1, -1)]));
    }

    #[test]
    fn disequality_is_rejected() {
        let atom = DataAtom { lhs: Operand::Term(0, 0), op: CmpOp::Ne, rhs: Operand::Term(1, 0) };
        assert!(DataFormula::from_atom(2, &atom).is_err());
    }

    #[test]
    fn constant_atoms_fold() {
        let t = DataAtom { lhs: Operand::Const(1), op: CmpOp::Lt, rhs: Operand::Const(2) };
        let f = DataAtom { lhs: Operand::Const(3), op: CmpOp::Lt, rhs: Operand::Const(2) };
        assert!(DataFormula::from_atom(1, &t).unwrap().is_top());
        assert!(DataFormula::from_atom(1, &f).unwrap().is_bottom());
    }

    #[test]
    fn sorted_fragment_formula_evaluates() {
        // y1 <= y2, y1 < key, y2 >= key with terms y1=0, y2=1, key=2
        let f = DataFormula::from_constraints(3, &[diff(0, 1, 0), diff(0, 2, -1), diff(2, 1, 0)]);
        assert!(f.sat(&[6, 9, 8]));
        assert!(!f.sat(&[6, 7, 8]));
    }

    #[test]
    fn integer_tightening_detects_parity_gap() {
        // 2x <= 1 and 2x >= 1 has no integer solution.
        let a = Constraint { a: pos(0), b: Some(pos(0)), bound: 1 };
        let b = Constraint { a: neg(0), b: Some(neg(0)), bound: -1 };
        assert!(DataFormula::from_constraints(1, &[a, b]).is_bottom());
    }

    #[test]
    fn shift_moves_bounds() {
        let f = DataFormula::from_constraints(2, &[le(0, 3), diff(0, 1, 0)]);
        let g = f.shift(0, 2);
        assert_eq!(g, DataFormula::from_constraints(2, &[le(0, 5), diff(0, 1, 2)]));
    }

    #[test]
    fn render_folds_equalities() {
        let f = DataFormula::top(2).constrain_eq(0, 1).constrain_const(0, 4);
        let names = vec!["a".to_string(), "b".to_string()];
        assert_eq!(f.render(&names), "a = 4 && b = 4");
        let g = DataFormula::top(2).constrain_eq(0, 1);
        assert_eq!(g.render(&names), "a = b");
    }
}
