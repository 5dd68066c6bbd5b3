use thiserror::Error;

use super::ast::*;
use crate::datafmla::CmpOp;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: expected {expected}, found {found}")]
    SyntaxError { line: usize, col: usize, expected: String, found: String },
    #[error("{line}:{col}: duplicate variable `{name}`")]
    DuplicatePointerVar { line: usize, col: usize, name: String },
    #[error("{line}:{col}: use of undeclared variable `{name}`")]
    UseOfUndeclaredVar { line: usize, col: usize, name: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMS: &[&str] = &[
    "->*", ":=", "->", "==", "!=", "<=", ">=", "&&", "||", "<", ">", "!", "(", ")", ";", ",", ":", "+", "-", "*",
];

fn lex(src: &str, line0: usize) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    for (li, raw) in src.lines().enumerate() {
        let line = line0 + li;
        let text = raw.split('#').next().unwrap_or("").replace('→', "->");
        let bytes: Vec<char> = text.chars().collect();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            let col = i + 1;
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = bytes[start..i].iter().collect();
                let v = s.parse().map_err(|_| ParseError::SyntaxError {
                    line,
                    col,
                    expected: "integer literal".into(),
                    found: s.clone(),
                })?;
                out.push(Token { tok: Tok::Int(v), line, col });
            } else if c.is_alphabetic() || c == '_' {
                let start = i;
                while i < bytes.len() && (bytes[i].is_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                out.push(Token { tok: Tok::Ident(bytes[start..i].iter().collect()), line, col });
            } else {
                let rest: String = bytes[i..].iter().collect();
                match SYMS.iter().find(|s| rest.starts_with(**s)) {
                    Some(s) => {
                        out.push(Token { tok: Tok::Sym(s), line, col });
                        i += s.chars().count();
                    }
                    None => {
                        return Err(ParseError::SyntaxError {
                            line,
                            col,
                            expected: "a token".into(),
                            found: format!("`{c}`"),
                        })
                    }
                }
            }
        }
    }
    Ok(out)
}

const KEYWORDS: &[&str] =
    &["pointer", "data", "new", "nil", "skip", "assume", "if", "then", "else", "fi", "while", "do", "od", "true", "false", "next"];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    pointers: Vec<String>,
    data_vars: Vec<String>,
    next_pc: usize,
    eof_line: usize,
}

/// A parsed operand of a comparison, before deciding whether the comparison
/// is structural or about data.
enum Operand {
    Ptr(Ptr),
    Next(Ptr),
    Reach(Ptr),
    Data(DataExpr),
}

impl Parser {
    fn peek(&self) -> &Tok {
        self.toks.get(self.pos).map_or(&Tok::Eof, |t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> &Tok {
        self.toks.get(self.pos + k).map_or(&Tok::Eof, |t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map_or((self.eof_line, 1), |t| (t.line, t.col))
    }

    fn found(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn err<T>(&self, expected: &str) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError::SyntaxError { line, col, expected: expected.into(), found: self.found() })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(&format!("`{s}`"))
        }
    }

    fn expect_kw(&mut self, k: &str) -> Result<(), ParseError> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            self.err(&format!("`{k}`"))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("identifier"),
        }
    }

    fn undeclared<T>(&self, name: &str) -> Result<T, ParseError> {
        let (line, col) = self.toks.get(self.pos.saturating_sub(1)).map_or((self.eof_line, 1), |t| (t.line, t.col));
        Err(ParseError::UseOfUndeclaredVar { line, col, name: name.into() })
    }

    /// A pointer variable or `nil`.
    fn ptr(&mut self) -> Result<Ptr, ParseError> {
        if self.eat_kw("nil") {
            return Ok(0);
        }
        let name = self.ident()?;
        match self.pointers.iter().position(|p| *p == name) {
            Some(i) => Ok(i),
            None => self.undeclared(&name),
        }
    }

    fn decls(&mut self) -> Result<(), ParseError> {
        loop {
            let is_ptr = if self.is_kw("pointer") {
                true
            } else if self.is_kw("data") && !matches!(self.peek_at(1), Tok::Sym(_)) {
                false
            } else {
                return Ok(());
            };
            self.pos += 1;
            loop {
                let (line, col) = self.here();
                let name = if self.is_kw("nil") { "nil".to_string() } else { self.ident()? };
                if self.pointers.contains(&name) || self.data_vars.contains(&name) {
                    return Err(ParseError::DuplicatePointerVar { line, col, name });
                }
                if is_ptr {
                    self.pointers.push(name);
                } else {
                    self.data_vars.push(name);
                }
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(";")?;
        }
    }

    fn block(&mut self, terminators: &[&str]) -> Result<Vec<Stmt>, ParseError> {
        let mut out = Vec::new();
        while !terminators.iter().any(|t| self.is_kw(t)) && *self.peek() != Tok::Eof {
            out.push(self.stmt()?);
        }
        if out.is_empty() {
            return self.err("a statement");
        }
        Ok(out)
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        if let (Tok::Int(n), Tok::Sym(":")) = (self.peek().clone(), self.peek_at(1).clone()) {
            if n as usize != self.next_pc {
                return self.err(&format!("program counter {}", self.next_pc));
            }
            self.pos += 2;
        }
        let pc = self.next_pc;
        self.next_pc += 1;
        let line = self.here().0;
        let kind = if self.eat_kw("if") {
            let g = self.guard()?;
            self.expect_kw("then")?;
            let t = self.block(&["else", "fi"])?;
            let e = if self.eat_kw("else") { self.block(&["fi"])? } else { Vec::new() };
            self.expect_kw("fi")?;
            self.eat_sym(";");
            return Ok(Stmt { pc, line, kind: StmtKind::If(g, t, e) });
        } else if self.eat_kw("while") {
            let g = self.guard()?;
            self.expect_kw("do")?;
            let b = self.block(&["od"])?;
            self.expect_kw("od")?;
            self.eat_sym(";");
            return Ok(Stmt { pc, line, kind: StmtKind::While(g, b) });
        } else if self.eat_kw("skip") {
            StmtKind::Skip
        } else if self.eat_kw("new") {
            StmtKind::New(self.ptr()?)
        } else if self.eat_kw("assume") {
            self.expect_sym("(")?;
            let g = self.guard()?;
            self.expect_sym(")")?;
            StmtKind::Assume(g)
        } else {
            self.assignment()?
        };
        if !self.eat_sym(";") && !matches!(self.peek(), Tok::Eof) && !["od", "fi", "else"].iter().any(|k| self.is_kw(k)) {
            return self.err("`;`");
        }
        Ok(Stmt { pc, line, kind })
    }

    fn assignment(&mut self) -> Result<StmtKind, ParseError> {
        let name = self.ident()?;
        if let Some(d) = self.data_vars.iter().position(|v| *v == name) {
            self.expect_sym(":=")?;
            return Ok(StmtKind::DataVarAssign(d, self.data_expr()?));
        }
        let p = match self.pointers.iter().position(|v| *v == name) {
            Some(p) => p,
            None => return self.undeclared(&name),
        };
        if self.eat_sym("->") {
            if self.eat_kw("next") {
                self.expect_sym(":=")?;
                let q = self.ptr()?;
                return Ok(if q == 0 { StmtKind::NextAssignNil(p) } else { StmtKind::NextAssign(p, q) });
            }
            if self.eat_kw("data") {
                self.expect_sym(":=")?;
                return Ok(StmtKind::DataAssign(p, self.data_expr()?));
            }
            return self.err("`next` or `data`");
        }
        self.expect_sym(":=")?;
        let q = self.ptr()?;
        if self.eat_sym("->") {
            self.expect_kw("next")?;
            return Ok(StmtKind::PtrAssignNext(p, q));
        }
        Ok(if q == 0 { StmtKind::PtrAssignNil(p) } else { StmtKind::PtrAssign(p, q) })
    }

    fn offset(&mut self) -> Result<i64, ParseError> {
        let mut k: i64 = 0;
        loop {
            let sign = if self.eat_sym("+") {
                1
            } else if self.eat_sym("-") {
                -1
            } else {
                return Ok(k);
            };
            match self.peek().clone() {
                Tok::Int(v) => {
                    self.pos += 1;
                    k = k.checked_add(sign * v).map_or_else(|| self.err("a smaller constant"), Ok)?;
                }
                _ => return self.err("integer constant"),
            }
        }
    }

    fn data_expr(&mut self) -> Result<DataExpr, ParseError> {
        match self.operand()? {
            Operand::Data(e) => Ok(e),
            _ => self.err("a data expression"),
        }
    }

    fn operand(&mut self) -> Result<Operand, ParseError> {
        if self.eat_sym("-") {
            if let Tok::Int(v) = self.peek().clone() {
                self.pos += 1;
                let k = self.offset()?;
                return Ok(Operand::Data(DataExpr::Const(-v + k)));
            }
            return self.err("integer constant");
        }
        if let Tok::Int(v) = self.peek().clone() {
            self.pos += 1;
            let k = self.offset()?;
            return Ok(Operand::Data(DataExpr::Const(v + k)));
        }
        if self.eat_kw("nil") {
            return self.ptr_operand(0);
        }
        let name = self.ident()?;
        if let Some(d) = self.data_vars.iter().position(|v| *v == name) {
            let k = self.offset()?;
            return Ok(Operand::Data(DataExpr::Term(DataRef::Var(d), k)));
        }
        match self.pointers.iter().position(|v| *v == name) {
            Some(p) => self.ptr_operand(p),
            None => self.undeclared(&name),
        }
    }

    fn ptr_operand(&mut self, p: Ptr) -> Result<Operand, ParseError> {
        if self.eat_sym("->*") {
            self.expect_kw("next")?;
            return Ok(Operand::Reach(p));
        }
        if self.eat_sym("->") {
            if self.eat_kw("next") {
                return Ok(Operand::Next(p));
            }
            if self.eat_kw("data") {
                let k = self.offset()?;
                return Ok(Operand::Data(DataExpr::Term(DataRef::Deref(p), k)));
            }
            return self.err("`next` or `data`");
        }
        Ok(Operand::Ptr(p))
    }

    fn guard(&mut self) -> Result<Guard, ParseError> {
        let mut g = self.conj()?;
        while self.eat_sym("||") {
            g = Guard::Or(Box::new(g), Box::new(self.conj()?));
        }
        Ok(g)
    }

    fn conj(&mut self) -> Result<Guard, ParseError> {
        let mut g = self.unary()?;
        while self.eat_sym("&&") {
            g = Guard::And(Box::new(g), Box::new(self.unary()?));
        }
        Ok(g)
    }

    fn unary(&mut self) -> Result<Guard, ParseError> {
        if self.eat_sym("!") {
            return Ok(Guard::Not(Box::new(self.unary()?)));
        }
        if self.eat_sym("(") {
            let g = self.guard()?;
            self.expect_sym(")")?;
            return Ok(g);
        }
        if self.eat_kw("true") {
            return Ok(Guard::True);
        }
        if self.eat_kw("false") {
            return Ok(Guard::False);
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Guard, ParseError> {
        let lhs = self.operand()?;
        let op = match self.peek() {
            Tok::Sym("==") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            _ => return self.err("a comparison operator"),
        };
        self.pos += 1;
        let rhs = self.operand()?;
        let structural = |a: StructAtom| -> Result<Guard, ParseError> {
            match op {
                CmpOp::Eq => Ok(Guard::Struct(a)),
                CmpOp::Ne => Ok(Guard::Not(Box::new(Guard::Struct(a)))),
                _ => Err(()),
            }
            .or_else(|_| self.err("`==` or `!=` in a pointer comparison"))
        };
        match (lhs, rhs) {
            (Operand::Data(l), Operand::Data(r)) => Ok(Guard::Data(DataCmp { lhs: l, op, rhs: r })),
            (Operand::Ptr(p), Operand::Ptr(q)) => structural(StructAtom::Eq(p, q)),
            (Operand::Next(p), Operand::Ptr(q)) | (Operand::Ptr(q), Operand::Next(p)) => {
                structural(StructAtom::Next(p, q))
            }
            (Operand::Reach(p), Operand::Ptr(q)) | (Operand::Ptr(q), Operand::Reach(p)) => {
                structural(StructAtom::Reach(p, q))
            }
            _ => self.err("comparable operands"),
        }
    }
}

fn annotation(
    line: &str,
    lineno: usize,
    pointers: &[String],
    data_vars: &[String],
    program: &mut Program,
) -> Result<(), ParseError> {
    let toks = lex(line, lineno)?;
    let mut p = Parser { toks, pos: 0, pointers: pointers.to_vec(), data_vars: data_vars.to_vec(), next_pc: 0, eof_line: lineno };
    let kind = p.ident().or_else(|_| p.err("annotation name"))?;
    let prop = |p: &mut Parser| -> Result<PropAnnot, ParseError> {
        let name = p.ident()?;
        p.expect_sym("(")?;
        let mut args = Vec::new();
        if !p.is_sym(")") {
            loop {
                let neg = p.eat_sym("-");
                if let Tok::Int(n) = p.peek().clone() {
                    p.pos += 1;
                    args.push(if neg { format!("-{n}") } else { n.to_string() });
                } else if neg {
                    return p.err("an integer");
                } else {
                    let a = if p.eat_kw("nil") { "nil".to_string() } else { p.ident()? };
                    if !pointers.contains(&a) && !data_vars.contains(&a) && a != "nil" {
                        return p.undeclared(&a);
                    }
                    args.push(a);
                }
                if !p.eat_sym(",") {
                    break;
                }
            }
        }
        p.expect_sym(")")?;
        Ok(PropAnnot { name, args })
    };
    match kind.as_str() {
        "pre" => {
            let a = prop(&mut p)?;
            program.pre.push(a);
        }
        "assert" => {
            let at = match p.peek().clone() {
                Tok::Int(n) => {
                    p.pos += 1;
                    AssertAt::Pc(n as usize)
                }
                Tok::Ident(s) if s == "exit" => {
                    p.pos += 1;
                    AssertAt::Exit
                }
                _ => return p.err("a program counter or `exit`"),
            };
            let a = prop(&mut p)?;
            program.asserts.push(Assertion { at, prop: a });
        }
        "universals" | "prologue" => {
            let n = match p.peek().clone() {
                Tok::Int(n) => n as usize,
                _ => return p.err("integer"),
            };
            p.pos += 1;
            if kind == "universals" {
                program.universals = Some(n);
            } else {
                program.prologue = n;
            }
        }
        _ => {
            p.pos = 0;
            return p.err("`pre`, `assert`, `universals` or `prologue`");
        }
    }
    if p.pos < p.toks.len() {
        return p.err("end of annotation");
    }
    Ok(())
}

/// Parses a program with its annotations.
pub fn parse(text: &str) -> Result<Program, ParseError> {
    let mut body_src = String::new();
    let mut annots = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim_start();
        if let Some(rest) = t.strip_prefix('@') {
            annots.push((i + 1, rest.to_string()));
            body_src.push('\n');
        } else {
            body_src.push_str(line);
            body_src.push('\n');
        }
    }
    let toks = lex(&body_src, 1)?;
    let eof_line = text.lines().count().max(1);
    let mut p = Parser { toks, pos: 0, pointers: vec!["nil".into()], data_vars: Vec::new(), next_pc: 1, eof_line };
    p.decls()?;
    let body = p.block(&[])?;
    if *p.peek() != Tok::Eof {
        return p.err("end of input");
    }
    let mut program = Program {
        pointers: p.pointers.clone(),
        data_vars: p.data_vars.clone(),
        body,
        pre: Vec::new(),
        asserts: Vec::new(),
        universals: None,
        prologue: 0,
    };
    for (line, a) in annots {
        annotation(&a, line, &p.pointers, &p.data_vars, &mut program)?;
    }
    let pcs = program.num_pcs();
    for a in &program.asserts {
        if let AssertAt::Pc(pc) = a.at {
            if pc == 0 || pc > pcs {
                return Err(ParseError::SyntaxError {
                    line: 1,
                    col: 1,
                    expected: format!("an assertion pc in 1..={pcs}"),
                    found: pc.to_string(),
                });
            }
        }
    }
    Ok(program)
}
