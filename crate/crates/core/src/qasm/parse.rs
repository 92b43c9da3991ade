//! OpenQASM 2.0 parser and static checker.
//!
//! Accepts the full 2.0 surface (gate and opaque declarations, `if`,
//! `reset`, `barrier`, broadcasting) and resolves `include "qelib1.inc"`
//! against the bundled copy of the standard library.

use std::collections::HashMap;
use std::fmt;

/// The standard gate library, as distributed with OpenQASM 2.0.
pub const QELIB1: &str = include_str!("qelib1.inc");

#[derive(Debug, Clone, PartialEq)]
pub struct QasmError {
    pub line: u32,
    pub column: u32,
    pub message: String,
}

impl fmt::Display for QasmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for QasmError {}

/// Parameter expression.
#[derive(Debug, Clone, PartialEq)]
pub enum PExpr {
    Num(f64),
    Pi,
    Param(String),
    Neg(Box<PExpr>),
    Bin(char, Box<PExpr>, Box<PExpr>),
    Call(String, Box<PExpr>),
}

impl PExpr {
    pub fn eval(&self, env: &HashMap<String, f64>) -> Result<f64, String> {
        Ok(match self {
            PExpr::Num(x) => *x,
            PExpr::Pi => std::f64::consts::PI,
            PExpr::Param(p) => *env.get(p).ok_or_else(|| format!("unknown parameter `{p}`"))?,
            PExpr::Neg(e) => -e.eval(env)?,
            PExpr::Bin(op, a, b) => {
                let (a, b) = (a.eval(env)?, b.eval(env)?);
                match op {
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    '/' => a / b,
                    _ => a.powf(b),
                }
            }
            PExpr::Call(f, e) => {
                let x = e.eval(env)?;
                match f.as_str() {
                    "sin" => x.sin(),
                    "cos" => x.cos(),
                    "tan" => x.tan(),
                    "exp" => x.exp(),
                    "ln" => x.ln(),
                    _ => x.sqrt(),
                }
            }
        })
    }
}

/// A register operand: whole register or one element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Arg {
    Reg(String),
    Bit(String, u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateCall {
    pub name: String,
    pub params: Vec<PExpr>,
    pub args: Vec<Arg>,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateDef {
    pub params: Vec<String>,
    pub args: Vec<String>,
    /// `None` for opaque gates.
    pub body: Option<Vec<GateCall>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QStmt {
    Gate(GateCall),
    Measure(Arg, Arg),
    Reset(Arg),
    Barrier(Vec<Arg>),
    If(String, u64, Box<QStmt>),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QasmProgram {
    pub qregs: Vec<(String, u32)>,
    pub cregs: Vec<(String, u32)>,
    pub gates: HashMap<String, GateDef>,
    pub stmts: Vec<QStmt>,
}

const KEYWORDS: [&str; 13] = [
    "OPENQASM", "include", "qreg", "creg", "gate", "opaque", "measure", "reset", "barrier", "if",
    "pi", "U", "CX",
];
const FUNCTIONS: [&str; 6] = ["sin", "cos", "tan", "exp", "ln", "sqrt"];
const QELIB1_GATES: [&str; 23] = [
    "u3", "u2", "u1", "cx", "id", "u0", "x", "y", "z", "h", "s", "sdg", "t", "tdg", "rx", "ry",
    "rz", "cz", "cy", "ch", "ccx", "crz", "cu1",
];

/// Names that cannot be used for registers in emitted programs.
pub fn is_reserved(name: &str) -> bool {
    KEYWORDS.contains(&name)
        || FUNCTIONS.contains(&name)
        || QELIB1_GATES.contains(&name)
        || name == "cu3"
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Id(String),
    Int(u64),
    Real(f64),
    Str(String),
    Sym(&'static str),
    Eof,
}

struct Lexed {
    tok: Tok,
    line: u32,
    col: u32,
}

fn lex(src: &str) -> Result<Vec<Lexed>, QasmError> {
    const SYMS: [&str; 14] = ["->", "==", ";", ",", "(", ")", "[", "]", "{", "}", "+", "-", "*", "/"];
    let b = src.as_bytes();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let mut out = Vec::new();
    let err = |line, col, m: String| QasmError { line, column: col, message: m };
    while i < b.len() {
        let ch = b[i];
        let (l0, c0) = (line, col);
        if ch == b'\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if ch.is_ascii_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if src[i..].starts_with("//") {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = if ch.is_ascii_alphabetic() {
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            Tok::Id(src[start..i].to_string())
        } else if ch.is_ascii_digit() || (ch == b'.' && b.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            let mut real = false;
            if i < b.len() && b[i] == b'.' {
                real = true;
                i += 1;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                real = true;
                i += 1;
                if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
                    i += 1;
                }
                let d = i;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                if d == i {
                    return Err(err(l0, c0, "malformed exponent".into()));
                }
            }
            let text = &src[start..i];
            if real {
                Tok::Real(text.parse().map_err(|_| err(l0, c0, format!("bad number `{text}`")))?)
            } else {
                Tok::Int(text.parse().map_err(|_| err(l0, c0, format!("bad integer `{text}`")))?)
            }
        } else if ch == b'"' {
            i += 1;
            while i < b.len() && b[i] != b'"' && b[i] != b'\n' {
                i += 1;
            }
            if i >= b.len() || b[i] != b'"' {
                return Err(err(l0, c0, "unterminated string".into()));
            }
            i += 1;
            Tok::Str(src[start + 1..i - 1].to_string())
        } else if ch == b'^' {
            i += 1;
            Tok::Sym("^")
        } else if let Some(s) = SYMS.iter().find(|s| src[i..].starts_with(**s)) {
            i += s.len();
            Tok::Sym(s)
        } else {
            return Err(err(l0, c0, format!("unexpected character `{}`", ch as char)));
        };
        col += (i - start) as u32;
        out.push(Lexed { tok, line: l0, col: c0 });
    }
    out.push(Lexed { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
    prog: QasmProgram,
}

type R<T> = Result<T, QasmError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn err<T>(&self, msg: impl Into<String>) -> R<T> {
        let t = &self.toks[self.pos];
        Err(QasmError {
            line: t.line,
            column: t.col,
            message: msg.into(),
        })
    }

    fn line(&self) -> u32 {
        self.toks[self.pos].line
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if t != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn sym(&mut self, s: &str) -> R<()> {
        match self.peek() {
            Tok::Sym(x) if *x == s => {
                self.bump();
                Ok(())
            }
            other => self.err(format!("expected `{s}`, found {other:?}")),
        }
    }

    fn eat(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(x) if *x == s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> R<String> {
        match self.peek().clone() {
            Tok::Id(s) if !KEYWORDS.contains(&s.as_str()) || s == "U" || s == "CX" => {
                self.bump();
                Ok(s)
            }
            other => self.err(format!("expected an identifier, found {other:?}")),
        }
    }

    fn int(&mut self) -> R<u64> {
        match self.bump() {
            Tok::Int(n) => Ok(n),
            other => {
                self.pos -= 1;
                self.err(format!("expected an integer, found {other:?}"))
            }
        }
    }

    fn program(&mut self, top: bool) -> R<()> {
        if top {
            match self.peek() {
                Tok::Id(s) if s == "OPENQASM" => {
                    self.bump();
                }
                _ => return self.err("program must start with `OPENQASM 2.0;`"),
            }
            match self.bump() {
                Tok::Real(2.0) => {}
                _ => {
                    self.pos -= 1;
                    return self.err("only OpenQASM version 2.0 is supported");
                }
            }
            self.sym(";")?;
        }
        while *self.peek() != Tok::Eof {
            self.statement()?;
        }
        Ok(())
    }

    fn declared(&self, name: &str) -> bool {
        self.prog.qregs.iter().chain(&self.prog.cregs).any(|(n, _)| n == name)
            || self.prog.gates.contains_key(name)
    }

    fn statement(&mut self) -> R<()> {
        let Tok::Id(kw) = self.peek().clone() else {
            return self.err(format!("expected a statement, found {:?}", self.peek()));
        };
        match kw.as_str() {
            "include" => {
                self.bump();
                let Tok::Str(file) = self.bump() else {
                    self.pos -= 1;
                    return self.err("expected a file name string");
                };
                self.sym(";")?;
                if file != "qelib1.inc" {
                    return self.err(format!("cannot include `{file}`; only qelib1.inc is bundled"));
                }
                let inner = lex(QELIB1)?;
                let mut sub = Parser {
                    toks: inner,
                    pos: 0,
                    prog: std::mem::take(&mut self.prog),
                };
                sub.program(false)?;
                self.prog = sub.prog;
                Ok(())
            }
            "qreg" | "creg" => {
                self.bump();
                let name = self.ident()?;
                if self.declared(&name) {
                    return self.err(format!("`{name}` is already declared"));
                }
                self.sym("[")?;
                let n = self.int()?;
                if n == 0 || n > u64::from(u32::MAX) {
                    return self.err("register size must be positive");
                }
                self.sym("]")?;
                self.sym(";")?;
                if kw == "qreg" {
                    self.prog.qregs.push((name, n as u32));
                } else {
                    self.prog.cregs.push((name, n as u32));
                }
                Ok(())
            }
            "gate" | "opaque" => self.gate_decl(kw == "opaque"),
            "if" => {
                self.bump();
                self.sym("(")?;
                let c = self.ident()?;
                if !self.prog.cregs.iter().any(|(n, _)| *n == c) {
                    return self.err(format!("`{c}` is not a classical register"));
                }
                self.sym("==")?;
                let v = self.int()?;
                self.sym(")")?;
                let inner = self.qop()?;
                self.prog.stmts.push(QStmt::If(c, v, Box::new(inner)));
                Ok(())
            }
            "barrier" => {
                self.bump();
                let args = self.arg_list()?;
                for a in &args {
                    self.check_arg(a, true)?;
                }
                self.sym(";")?;
                self.prog.stmts.push(QStmt::Barrier(args));
                Ok(())
            }
            _ => {
                let q = self.qop()?;
                self.prog.stmts.push(q);
                Ok(())
            }
        }
    }

    fn gate_decl(&mut self, opaque: bool) -> R<()> {
        self.bump();
        let name = self.ident()?;
        if self.declared(&name) || name == "U" || name == "CX" {
            return self.err(format!("`{name}` is already declared"));
        }
        let mut params = Vec::new();
        if self.eat("(") && !self.eat(")") {
            loop {
                params.push(self.ident()?);
                if self.eat(")") {
                    break;
                }
                self.sym(",")?;
            }
        }
        let mut args = vec![self.ident()?];
        while self.eat(",") {
            args.push(self.ident()?);
        }
        for (i, a) in args.iter().enumerate() {
            if args[..i].contains(a) {
                return self.err(format!("duplicate gate argument `{a}`"));
            }
        }
        let body = if opaque {
            self.sym(";")?;
            None
        } else {
            self.sym("{")?;
            let mut body = Vec::new();
            while !self.eat("}") {
                if matches!(self.peek(), Tok::Id(s) if s == "barrier") {
                    self.bump();
                    self.arg_list()?;
                    self.sym(";")?;
                    continue;
                }
                let call = self.gate_call(Some((&params, &args)))?;
                body.push(call);
            }
            Some(body)
        };
        self.prog.gates.insert(name, GateDef { params, args, body });
        Ok(())
    }

    fn qop(&mut self) -> R<QStmt> {
        match self.peek() {
            Tok::Id(s) if s == "measure" => {
                self.bump();
                let q = self.arg()?;
                self.sym("->")?;
                let c = self.arg()?;
                self.sym(";")?;
                let qn = self.check_arg(&q, true)?;
                let cn = self.check_arg(&c, false)?;
                if qn != cn {
                    return self.err("measure operands have different sizes");
                }
                Ok(QStmt::Measure(q, c))
            }
            Tok::Id(s) if s == "reset" => {
                self.bump();
                let q = self.arg()?;
                self.sym(";")?;
                self.check_arg(&q, true)?;
                Ok(QStmt::Reset(q))
            }
            _ => {
                let call = self.gate_call(None)?;
                Ok(QStmt::Gate(call))
            }
        }
    }

    fn gate_call(&mut self, scope: Option<(&[String], &[String])>) -> R<GateCall> {
        let line = self.line();
        let name = self.ident()?;
        let (np, na) = match name.as_str() {
            "U" => (3, 1),
            "CX" => (0, 2),
            _ => match self.prog.gates.get(&name) {
                Some(g) => (g.params.len(), g.args.len()),
                None => return self.err(format!("unknown gate `{name}`")),
            },
        };
        let mut params = Vec::new();
        if self.eat("(") && !self.eat(")") {
            loop {
                params.push(self.expr(scope.map(|s| s.0))?);
                if self.eat(")") {
                    break;
                }
                self.sym(",")?;
            }
        }
        if params.len() != np {
            return self.err(format!("gate `{name}` takes {np} parameter(s), got {}", params.len()));
        }
        let args = match scope {
            Some((_, gargs)) => {
                let mut v = vec![self.ident()?];
                while self.eat(",") {
                    v.push(self.ident()?);
                }
                for a in &v {
                    if !gargs.contains(a) {
                        return self.err(format!("`{a}` is not an argument of the enclosing gate"));
                    }
                }
                v.into_iter().map(Arg::Reg).collect()
            }
            None => self.arg_list()?,
        };
        self.sym(";")?;
        if args.len() != na {
            return self.err(format!("gate `{name}` takes {na} qubit argument(s), got {}", args.len()));
        }
        if scope.is_none() {
            let mut size = None;
            for a in &args {
                let n = self.check_arg(a, true)?;
                if let Arg::Reg(_) = a {
                    match size {
                        None => size = Some(n),
                        Some(s) if s != n => return self.err("broadcast registers differ in size"),
                        _ => {}
                    }
                }
            }
        }
        for (i, a) in args.iter().enumerate() {
            if args[..i].contains(a) {
                return self.err(format!("gate `{name}` repeats an operand"));
            }
        }
        Ok(GateCall {
            name,
            params,
            args,
            line,
        })
    }

    fn arg(&mut self) -> R<Arg> {
        let name = self.ident()?;
        if self.eat("[") {
            let i = self.int()?;
            self.sym("]")?;
            Ok(Arg::Bit(name, i as u32))
        } else {
            Ok(Arg::Reg(name))
        }
    }

    fn arg_list(&mut self) -> R<Vec<Arg>> {
        let mut v = vec![self.arg()?];
        while self.eat(",") {
            v.push(self.arg()?);
        }
        Ok(v)
    }

    /// Checks that `a` names a declared register (quantum or classical)
    /// and returns its size (1 for an element).
    fn check_arg(&self, a: &Arg, quantum: bool) -> R<u32> {
        let regs = if quantum { &self.prog.qregs } else { &self.prog.cregs };
        let kind = if quantum { "quantum" } else { "classical" };
        let (name, idx) = match a {
            Arg::Reg(n) => (n, None),
            Arg::Bit(n, i) => (n, Some(*i)),
        };
        let Some((_, size)) = regs.iter().find(|(n, _)| n == name) else {
            return self.err(format!("`{name}` is not a {kind} register"));
        };
        match idx {
            Some(i) if i >= *size => self.err(format!("index {i} out of range for `{name}[{size}]`")),
            Some(_) => Ok(1),
            None => Ok(*size),
        }
    }

    fn expr(&mut self, params: Option<&[String]>) -> R<PExpr> {
        let mut lhs = self.term(params)?;
        loop {
            let op = match self.peek() {
                Tok::Sym("+") => '+',
                Tok::Sym("-") => '-',
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term(params)?;
            lhs = PExpr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self, params: Option<&[String]>) -> R<PExpr> {
        let mut lhs = self.power(params)?;
        loop {
            let op = match self.peek() {
                Tok::Sym("*") => '*',
                Tok::Sym("/") => '/',
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.power(params)?;
            lhs = PExpr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn power(&mut self, params: Option<&[String]>) -> R<PExpr> {
        let base = self.unary(params)?;
        if self.eat("^") {
            let exp = self.power(params)?;
            return Ok(PExpr::Bin('^', Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn unary(&mut self, params: Option<&[String]>) -> R<PExpr> {
        if self.eat("-") {
            return Ok(PExpr::Neg(Box::new(self.unary(params)?)));
        }
        if self.eat("+") {
            return self.unary(params);
        }
        match self.bump() {
            Tok::Int(n) => Ok(PExpr::Num(n as f64)),
            Tok::Real(x) => Ok(PExpr::Num(x)),
            Tok::Sym("(") => {
                let e = self.expr(params)?;
                self.sym(")")?;
                Ok(e)
            }
            Tok::Id(s) if s == "pi" => Ok(PExpr::Pi),
            Tok::Id(s) if FUNCTIONS.contains(&s.as_str()) => {
                self.sym("(")?;
                let e = self.expr(params)?;
                self.sym(")")?;
                Ok(PExpr::Call(s, Box::new(e)))
            }
            Tok::Id(s) if params.is_some_and(|p| p.contains(&s)) => Ok(PExpr::Param(s)),
            other => {
                self.pos -= 1;
                self.err(format!("unexpected {other:?} in expression"))
            }
        }
    }
}

/// Parses and checks an OpenQASM 2.0 program.
pub fn parse(src: &str) -> Result<QasmProgram, QasmError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        prog: QasmProgram::default(),
    };
    p.program(true)?;
    Ok(p.prog)
}
