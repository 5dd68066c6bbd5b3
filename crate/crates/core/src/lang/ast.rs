use std::fmt;

use crate::datafmla::CmpOp;

/// Index of a pointer variable; 0 is `nil`.
pub type Ptr = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    /// Pointer variables, `nil` first.
    pub pointers: Vec<String>,
    pub data_vars: Vec<String>,
    pub body: Vec<Stmt>,
    pub pre: Vec<PropAnnot>,
    pub asserts: Vec<Assertion>,
    /// Suggested number of universals (`@universals N`).
    pub universals: Option<usize>,
    /// Number of leading prologue statements introduced by desugaring.
    pub prologue: usize,
}

/// A property mention in an annotation, e.g. `Sort(head)` or `Init(head, key)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PropAnnot {
    pub name: String,
    pub args: Vec<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum AssertAt {
    /// Before the statement with this pc.
    Pc(usize),
    Exit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assertion {
    pub at: AssertAt,
    pub prop: PropAnnot,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Stmt {
    pub pc: usize,
    pub line: usize,
    pub kind: StmtKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StmtKind {
    PtrAssignNil(Ptr),
    PtrAssign(Ptr, Ptr),
    PtrAssignNext(Ptr, Ptr),
    NextAssignNil(Ptr),
    NextAssign(Ptr, Ptr),
    DataAssign(Ptr, DataExpr),
    /// Assignment to a data variable, removed by desugaring.
    DataVarAssign(usize, DataExpr),
    New(Ptr),
    Assume(Guard),
    AssumeStruct(StructLit),
    AssumeData(DataCmp),
    Skip,
    If(Guard, Vec<Stmt>, Vec<Stmt>),
    While(Guard, Vec<Stmt>),
}

impl StmtKind {
    pub fn is_composite(&self) -> bool {
        matches!(self, StmtKind::If(..) | StmtKind::While(..) | StmtKind::Assume(..) | StmtKind::DataVarAssign(..))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum DataRef {
    Deref(Ptr),
    Var(usize),
}

/// `r->data + k`, or an integer constant.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum DataExpr {
    Const(i64),
    Term(DataRef, i64),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct DataCmp {
    pub lhs: DataExpr,
    pub op: CmpOp,
    pub rhs: DataExpr,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum StructAtom {
    /// `p == q`
    Eq(Ptr, Ptr),
    /// `p->next == q`
    Next(Ptr, Ptr),
    /// `p->*next == q`: q is reachable from p.
    Reach(Ptr, Ptr),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct StructLit {
    pub atom: StructAtom,
    pub positive: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Guard {
    True,
    False,
    Struct(StructAtom),
    Data(DataCmp),
    Not(Box<Guard>),
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
}

/// A literal of a lowered guard.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Literal {
    Struct(StructLit),
    Data(DataCmp),
}

impl Guard {
    /// Disjunctive normal form under short-circuit evaluation: a later
    /// conjunct is only reached when the earlier ones held, so negations keep
    /// the guarding prefix (`!(a && b)` is `!a || (a && !b)`).
    pub fn dnf(&self, positive: bool) -> Vec<Vec<Literal>> {
        match (self, positive) {
            (Guard::True, true) | (Guard::False, false) => vec![vec![]],
            (Guard::True, false) | (Guard::False, true) => vec![],
            (Guard::Struct(a), pos) => vec![vec![Literal::Struct(StructLit { atom: *a, positive: pos })]],
            (Guard::Data(c), pos) => {
                let op = if pos { c.op } else { c.op.negate() };
                if op == CmpOp::Ne {
                    vec![
                        vec![Literal::Data(DataCmp { op: CmpOp::Lt, ..*c })],
                        vec![Literal::Data(DataCmp { op: CmpOp::Gt, ..*c })],
                    ]
                } else {
                    vec![vec![Literal::Data(DataCmp { op, ..*c })]]
                }
            }
            (Guard::Not(g), pos) => g.dnf(!pos),
            (Guard::And(a, b), true) => product(&a.dnf(true), &b.dnf(true)),
            (Guard::Or(a, b), false) => product(&a.dnf(false), &b.dnf(false)),
            (Guard::And(a, b), false) => {
                let mut out = a.dnf(false);
                out.extend(product(&a.dnf(true), &b.dnf(false)));
                out
            }
            (Guard::Or(a, b), true) => {
                let mut out = a.dnf(true);
                out.extend(product(&a.dnf(false), &b.dnf(true)));
                out
            }
        }
    }
}

fn product(a: &[Vec<Literal>], b: &[Vec<Literal>]) -> Vec<Vec<Literal>> {
    let mut out = Vec::new();
    for x in a {
        for y in b {
            let mut c = x.clone();
            c.extend(y.iter().copied());
            out.push(c);
        }
    }
    out
}

/// Pretty printer producing re-parseable source.
pub struct Printer<'a> {
    pub program: &'a Program,
}

impl Program {
    pub fn printer(&self) -> Printer<'_> {
        Printer { program: self }
    }

    pub fn npv(&self) -> usize {
        self.pointers.len()
    }

    /// Number of statements, composites included.
    pub fn num_pcs(&self) -> usize {
        fn count(ss: &[Stmt]) -> usize {
            ss.iter()
                .map(|s| {
                    1 + match &s.kind {
                        StmtKind::If(_, t, e) => count(t) + count(e),
                        StmtKind::While(_, b) => count(b),
                        _ => 0,
                    }
                })
                .sum()
        }
        count(&self.body)
    }
}

impl Printer<'_> {
    fn ptr(&self, p: Ptr) -> &str {
        &self.program.pointers[p]
    }

    fn dexpr(&self, e: &DataExpr) -> String {
        match e {
            DataExpr::Const(c) => c.to_string(),
            DataExpr::Term(r, k) => {
                let base = match r {
                    DataRef::Deref(p) => format!("{}->data", self.ptr(*p)),
                    DataRef::Var(v) => self.program.data_vars[*v].clone(),
                };
                match k {
                    0 => base,
                    k if *k > 0 => format!("{base} + {k}"),
                    k => format!("{base} - {}", -k),
                }
            }
        }
    }

    fn satom(&self, a: &StructAtom, positive: bool) -> String {
        let op = if positive { "==" } else { "!=" };
        match a {
            StructAtom::Eq(p, q) => format!("{} {op} {}", self.ptr(*p), self.ptr(*q)),
            StructAtom::Next(p, q) => format!("{}->next {op} {}", self.ptr(*p), self.ptr(*q)),
            StructAtom::Reach(p, q) => format!("{}->*next {op} {}", self.ptr(*p), self.ptr(*q)),
        }
    }

    fn dcmp(&self, c: &DataCmp) -> String {
        format!("{} {} {}", self.dexpr(&c.lhs), c.op.symbol(), self.dexpr(&c.rhs))
    }

    pub fn guard(&self, g: &Guard) -> String {
        match g {
            Guard::True => "true".into(),
            Guard::False => "false".into(),
            Guard::Struct(a) => self.satom(a, true),
            Guard::Data(c) => self.dcmp(c),
            Guard::Not(g) => format!("!({})", self.guard(g)),
            Guard::And(a, b) => format!("({} && {})", self.guard(a), self.guard(b)),
            Guard::Or(a, b) => format!("({} || {})", self.guard(a), self.guard(b)),
        }
    }

    pub fn literal(&self, l: &Literal) -> String {
        match l {
            Literal::Struct(s) => self.satom(&s.atom, s.positive),
            Literal::Data(c) => self.dcmp(c),
        }
    }

    /// One-line rendering of a non-composite statement.
    pub fn simple(&self, k: &StmtKind) -> String {
        match k {
            StmtKind::PtrAssignNil(p) => format!("{} := nil", self.ptr(*p)),
            StmtKind::PtrAssign(p, q) => format!("{} := {}", self.ptr(*p), self.ptr(*q)),
            StmtKind::PtrAssignNext(p, q) => format!("{} := {}->next", self.ptr(*p), self.ptr(*q)),
            StmtKind::NextAssignNil(p) => format!("{}->next := nil", self.ptr(*p)),
            StmtKind::NextAssign(p, q) => format!("{}->next := {}", self.ptr(*p), self.ptr(*q)),
            StmtKind::DataAssign(p, e) => format!("{}->data := {}", self.ptr(*p), self.dexpr(e)),
            StmtKind::DataVarAssign(d, e) => format!("{} := {}", self.program.data_vars[*d], self.dexpr(e)),
            StmtKind::New(p) => format!("new {}", self.ptr(*p)),
            StmtKind::Assume(g) => format!("assume({})", self.guard(g)),
            StmtKind::AssumeStruct(s) => format!("assume({})", self.satom(&s.atom, s.positive)),
            StmtKind::AssumeData(c) => format!("assume({})", self.dcmp(c)),
            StmtKind::Skip => "skip".into(),
            StmtKind::If(g, ..) => format!("if {} then ...", self.guard(g)),
            StmtKind::While(g, _) => format!("while {} do ...", self.guard(g)),
        }
    }

    fn block(&self, out: &mut String, ss: &[Stmt], depth: usize) {
        let pad = "  ".repeat(depth);
        for s in ss {
            match &s.kind {
                StmtKind::If(g, t, e) => {
                    out.push_str(&format!("{pad}{}: if {} then\n", s.pc, self.guard(g)));
                    self.block(out, t, depth + 1);
                    if !e.is_empty() {
                        out.push_str(&format!("{pad}else\n"));
                        self.block(out, e, depth + 1);
                    }
                    out.push_str(&format!("{pad}fi\n"));
                }
                StmtKind::While(g, b) => {
                    out.push_str(&format!("{pad}{}: while {} do\n", s.pc, self.guard(g)));
                    self.block(out, b, depth + 1);
                    out.push_str(&format!("{pad}od\n"));
                }
                k => out.push_str(&format!("{pad}{}: {};\n", s.pc, self.simple(k))),
            }
        }
    }
}

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.program;
        if p.pointers.len() > 1 {
            writeln!(f, "pointer {};", p.pointers[1..].join(", "))?;
        }
        if !p.data_vars.is_empty() {
            writeln!(f, "data {};", p.data_vars.join(", "))?;
        }
        if let Some(n) = p.universals {
            writeln!(f, "@universals {n}")?;
        }
        if p.prologue > 0 {
            writeln!(f, "@prologue {}", p.prologue)?;
        }
        for a in &p.pre {
            writeln!(f, "@pre {}({})", a.name, a.args.join(", "))?;
        }
        for a in &p.asserts {
            let at = match a.at {
                AssertAt::Pc(pc) => pc.to_string(),
                AssertAt::Exit => "exit".into(),
            };
            writeln!(f, "@assert {at} {}({})", a.prop.name, a.prop.args.join(", "))?;
        }
        let mut out = String::new();
        self.block(&mut out, &p.body, 0);
        write!(f, "{out}")
    }
}
