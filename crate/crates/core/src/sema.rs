//! Static checking: name resolution, typing, the quantum/classical
//! boundary, and the restrictions on quantum-conditioned blocks.

use std::collections::{HashMap, HashSet};

use crate::frontend::ast::*;
use crate::frontend::{has_errors, parse_source, Diagnostic, Span};
use crate::semantics::classical::{
    assignable, binary_type, math_arity, math_result_type, PureEvaluator,
};
use crate::semantics::tables;
use crate::types::{encode, Address, ClassicalValue, RhymeType, TypeConfig};

/// Largest register width for which the checker enumerates split/pair.
const STATIC_TABLE_BITS: u32 = 16;

/// Built-in quantum methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    AddPhase,
    ApplyOracle,
    Bipartite,
    InvertAboutMean,
    Increment,
    Decrement,
    H,
    X,
    Z,
    Cnot,
    Ccnot,
}

impl Builtin {
    pub fn from_name(name: &str) -> Option<Builtin> {
        Some(match name {
            "addPhase" => Builtin::AddPhase,
            "applyOracle" => Builtin::ApplyOracle,
            "applyBipartiteInterference" => Builtin::Bipartite,
            "invertAboutMean" => Builtin::InvertAboutMean,
            "increment" => Builtin::Increment,
            "decrement" => Builtin::Decrement,
            "H" => Builtin::H,
            "X" => Builtin::X,
            "Z" => Builtin::Z,
            "CNOT" => Builtin::Cnot,
            "CCNOT" => Builtin::Ccnot,
            _ => return None,
        })
    }

    /// Names that `def native` may bind.
    pub fn native_allowed(name: &str) -> bool {
        matches!(name, "invertAboutMean" | "increment" | "decrement")
    }

    pub fn is_gate(self) -> bool {
        matches!(
            self,
            Builtin::H | Builtin::X | Builtin::Z | Builtin::Cnot | Builtin::Ccnot
        )
    }
}

/// Whether an argument of type `arg` binds to a parameter of type `param`.
/// Any quantum value binds to `qbit[]` as a view of its qubits.
pub fn param_accepts(param: RhymeType, arg: RhymeType) -> bool {
    match (param.is_quantum(), arg.is_quantum()) {
        (true, true) => {
            param == arg
                || matches!(param, RhymeType::QBitArray(None))
                || (param.is_array() && arg.is_array())
        }
        (false, false) => assignable(arg, param),
        _ => false,
    }
}

pub enum MethodTarget<'a> {
    User(&'a FnDef),
    Builtin(Builtin),
}

/// Function tables shared by the checker and the interpreter.
#[derive(Debug, Clone, Default)]
pub struct FunctionTable {
    /// Functions with only classical parameters.
    pub pure: HashMap<String, FnDef>,
    /// Functions with at least one quantum parameter.
    pub procedures: HashMap<String, FnDef>,
    /// `def native` declarations.
    pub natives: HashMap<String, FnDef>,
}

impl FunctionTable {
    fn first_accepts(f: &FnDef, recv: RhymeType) -> bool {
        f.params.first().is_some_and(|p| param_accepts(p.ty.ty, recv))
    }

    /// Resolves `recv.name(...)`: user functions whose first parameter
    /// accepts the receiver win over built-in methods.
    pub fn resolve_method(&self, name: &str, recv: RhymeType) -> Option<MethodTarget<'_>> {
        if let Some(f) = self.procedures.get(name).or_else(|| self.pure.get(name)) {
            if Self::first_accepts(f, recv) {
                return Some(MethodTarget::User(f));
            }
        }
        if let Some(f) = self.natives.get(name) {
            if Self::first_accepts(f, recv) {
                return Builtin::from_name(name).map(MethodTarget::Builtin);
            }
        }
        if recv.is_quantum() {
            return Builtin::from_name(name).map(MethodTarget::Builtin);
        }
        None
    }

    pub fn get(&self, name: &str) -> Option<&FnDef> {
        self.pure
            .get(name)
            .or_else(|| self.procedures.get(name))
            .or_else(|| self.natives.get(name))
    }
}

/// A program that passed checking.
#[derive(Debug, Clone)]
pub struct CheckedProgram {
    pub program: Program,
    pub config: TypeConfig,
    pub warnings: Vec<Diagnostic>,
    pub functions: FunctionTable,
    /// Global quantum variables in address order.
    pub quantum_globals: Vec<String>,
    /// Global classical variables in address order.
    pub classical_globals: Vec<String>,
}

/// Parses and checks `source`. On failure, returns every diagnostic
/// (errors and warnings).
pub fn check_source(source: &str, cfg: &TypeConfig) -> Result<CheckedProgram, Vec<Diagnostic>> {
    check(parse_source(source)?, cfg)
}

pub fn check(program: Program, cfg: &TypeConfig) -> Result<CheckedProgram, Vec<Diagnostic>> {
    let mut c = Checker::new(cfg);
    c.collect_functions(&program);
    c.collect_globals(&program);
    for f in program.functions() {
        c.function(f);
    }
    c.pure_ok = !has_errors(&c.diags);
    c.begin_frame(Frame::Top);
    for s in program.statements() {
        c.stmt(s);
    }
    c.end_frame();
    if has_errors(&c.diags) {
        return Err(c.diags);
    }
    Ok(CheckedProgram {
        program,
        config: *cfg,
        warnings: c.diags,
        functions: c.fns,
        quantum_globals: c.quantum_globals,
        classical_globals: c.classical_globals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Ty {
    V(RhymeType),
    /// Determined at run time (dereference of a `ref`).
    Any,
    Void,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Quantum operands are rejected.
    Classical,
    /// Quantum variables read as their classical counterparts.
    Condition,
    /// Quantum values may be named (receivers, measurement sources).
    Place,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Frame {
    Top,
    Pure,
    Procedure,
}

#[derive(Debug, Clone, Copy)]
struct VarInfo {
    ty: RhymeType,
    global: bool,
}

struct Checker<'c> {
    cfg: &'c TypeConfig,
    diags: Vec<Diagnostic>,
    fns: FunctionTable,
    scopes: Vec<HashMap<String, VarInfo>>,
    frame: Frame,
    ret: Option<RhymeType>,
    /// Variables of enclosing quantum conditions, innermost last.
    conditions: Vec<Vec<String>>,
    quantum_globals: Vec<String>,
    classical_globals: Vec<String>,
    pure_ok: bool,
}

fn is_addr_of_var(e: &Expr) -> Option<&str> {
    match &e.kind {
        ExprKind::Unary(UnOp::AddrOf, inner) => inner.as_var(),
        _ => None,
    }
}

impl<'c> Checker<'c> {
    fn new(cfg: &'c TypeConfig) -> Self {
        Checker {
            cfg,
            diags: Vec::new(),
            fns: FunctionTable::default(),
            scopes: Vec::new(),
            frame: Frame::Top,
            ret: None,
            conditions: Vec::new(),
            quantum_globals: Vec::new(),
            classical_globals: Vec::new(),
            pure_ok: false,
        }
    }

    fn error(&mut self, msg: impl Into<String>, span: Span) {
        self.diags.push(Diagnostic::error(msg, span));
    }

    fn warn(&mut self, msg: impl Into<String>, span: Span) {
        self.diags.push(Diagnostic::warning(msg, span));
    }

    fn collect_functions(&mut self, program: &Program) {
        for f in program.functions() {
            if self.fns.get(&f.name).is_some() {
                self.error(format!("function `{}` is defined twice", f.name), f.span);
                continue;
            }
            let quantum = f.params.iter().any(|p| p.ty.ty.is_quantum());
            if f.native {
                if !Builtin::native_allowed(&f.name) {
                    self.error(
                        format!(
                            "no native implementation of `{}`; natives exist for invertAboutMean, increment and decrement",
                            f.name
                        ),
                        f.span,
                    );
                } else if f.params.len() != 1 || !quantum || f.ret.is_some() {
                    self.error(
                        format!("native `{}` takes exactly one quantum parameter and returns nothing", f.name),
                        f.span,
                    );
                }
                self.fns.natives.insert(f.name.clone(), f.clone());
            } else if quantum {
                self.fns.procedures.insert(f.name.clone(), f.clone());
            } else {
                self.fns.pure.insert(f.name.clone(), f.clone());
            }
        }
    }

    fn collect_globals(&mut self, program: &Program) {
        for s in program.statements() {
            if let StmtKind::Decl { ty, name, .. } = &s.kind {
                let list = if ty.ty.is_quantum() {
                    &mut self.quantum_globals
                } else {
                    &mut self.classical_globals
                };
                if !list.contains(name) {
                    list.push(name.clone());
                }
            }
        }
    }

    fn begin_frame(&mut self, frame: Frame) {
        self.frame = frame;
        self.scopes = vec![HashMap::new()];
    }

    fn end_frame(&mut self) {
        self.scopes.clear();
        self.frame = Frame::Top;
        self.ret = None;
    }

    fn lookup(&self, name: &str) -> Option<VarInfo> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn declare(&mut self, name: &str, ty: RhymeType, span: Span) {
        if self.lookup(name).is_some() {
            self.error(format!("`{name}` is already declared"), span);
            return;
        }
        let global = self.frame == Frame::Top && self.scopes.len() == 1;
        self.scopes
            .last_mut()
            .expect("a scope is open")
            .insert(name.to_string(), VarInfo { ty, global });
    }

    fn function(&mut self, f: &FnDef) {
        let quantum = f.params.iter().any(|p| p.ty.ty.is_quantum());
        let mut seen = HashSet::new();
        for p in &f.params {
            if !seen.insert(p.name.as_str()) {
                self.error(format!("parameter `{}` is declared twice", p.name), p.span);
            }
        }
        if f.native {
            return;
        }
        if quantum && f.ret.is_some() {
            self.error(
                format!(
                    "function `{}` has quantum parameters and cannot return a value",
                    f.name
                ),
                f.span,
            );
        }
        if let Some(r) = &f.ret {
            if r.ty.is_quantum() {
                self.error("functions cannot return quantum values", r.span);
            }
        }
        let Some(body) = &f.body else {
            self.error(format!("function `{}` has no body", f.name), f.span);
            return;
        };
        self.begin_frame(if quantum { Frame::Procedure } else { Frame::Pure });
        self.ret = f.ret.as_ref().map(|r| r.ty);
        for p in &f.params {
            self.declare(&p.name, p.ty.ty, p.span);
        }
        self.block_stmts(body);
        self.end_frame();
    }

    fn block(&mut self, b: &Block) {
        self.scopes.push(HashMap::new());
        self.block_stmts(b);
        self.scopes.pop();
    }

    fn block_stmts(&mut self, b: &Block) {
        for s in &b.stmts {
            self.stmt(s);
        }
    }

    fn in_condition(&self) -> bool {
        !self.conditions.is_empty()
    }

    fn stmt(&mut self, s: &Stmt) {
        if self.in_condition() {
            return self.conditioned_stmt(s);
        }
        match &s.kind {
            StmtKind::Decl { ty, name, init } => self.decl(ty, name, init.as_ref(), s.span),
            StmtKind::Assign { target, value } => self.assign(target, value),
            StmtKind::Step { target, .. } => {
                if let Some(Ty::V(t)) = self.expr(target, Mode::Classical) {
                    if !matches!(t, RhymeType::Int | RhymeType::Float) {
                        self.error(format!("`++`/`--` need an int or float, found {t}"), target.span);
                    }
                }
                self.check_lvalue(target);
            }
            StmtKind::Expr(e) => {
                if !matches!(
                    e.kind,
                    ExprKind::Call { .. } | ExprKind::Method { .. }
                ) {
                    self.warn("expression result is unused", e.span);
                }
                self.expr(e, Mode::Classical);
            }
            StmtKind::If {
                cond,
                then_block,
                else_branch,
            } => self.if_stmt(cond, then_block, else_branch.as_ref()),
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                self.scopes.push(HashMap::new());
                if let Some(i) = init {
                    self.stmt(i);
                }
                if let Some(c) = cond {
                    self.expect_bool(c, Mode::Classical);
                }
                if let Some(st) = step {
                    self.stmt(st);
                }
                self.block(body);
                self.scopes.pop();
            }
            StmtKind::Return(value) => match (self.frame, value) {
                (Frame::Top, _) => self.error("`return` outside of a function", s.span),
                (Frame::Procedure, Some(v)) => {
                    self.error("functions with quantum parameters cannot return a value", v.span)
                }
                (Frame::Procedure, None) => {}
                (Frame::Pure, Some(v)) => {
                    let got = self.expr(v, Mode::Classical);
                    match (self.ret, got) {
                        (None, _) => self.error("function has no return type", v.span),
                        (Some(r), Some(Ty::V(t))) if !assignable(t, r) => {
                            self.error(format!("cannot return {t} from a function returning {r}"), v.span)
                        }
                        _ => {}
                    }
                }
                (Frame::Pure, None) => {
                    if let Some(r) = self.ret {
                        self.error(format!("missing return value of type {r}"), s.span);
                    }
                }
            },
        }
    }

    fn check_lvalue(&mut self, target: &Expr) {
        match &target.kind {
            ExprKind::Var(name) => {
                if let Some(v) = self.lookup(name) {
                    if v.ty.is_quantum() {
                        self.error(
                            format!("quantum variable `{name}` cannot be reassigned"),
                            target.span,
                        );
                    }
                }
            }
            ExprKind::Index(base, _) if base.as_var().is_some() => {}
            _ => self.error("invalid assignment target", target.span),
        }
    }

    fn assign(&mut self, target: &Expr, value: &Expr) {
        self.check_lvalue(target);
        let to = match self.expr(target, Mode::Place) {
            Some(Ty::V(t)) if !t.is_quantum() => t,
            _ => return,
        };
        self.classical_store(to, value);
    }

    /// Checks `value` flowing into classical storage of type `to`; a
    /// quantum source is a measurement.
    fn classical_store(&mut self, to: RhymeType, value: &Expr) {
        let got = self.expr(value, Mode::Place);
        match got {
            Some(Ty::V(t)) if t.is_quantum() => {
                if self.frame == Frame::Pure {
                    self.error("pure functions cannot measure", value.span);
                }
                if !matches!(value.kind, ExprKind::Var(_) | ExprKind::Unary(UnOp::Deref, _)) {
                    self.error(
                        "only whole quantum variables can be measured",
                        value.span,
                    );
                }
                let counterpart = t.classical_counterpart();
                if !(counterpart == to || (counterpart.is_array() && to.is_array())) {
                    self.error(
                        format!("measuring {t} yields {counterpart}, which cannot be stored as {to}"),
                        value.span,
                    );
                }
            }
            Some(Ty::V(t)) => {
                if !assignable(t, to) {
                    self.error(format!("cannot assign {t} to {to}"), value.span);
                }
            }
            Some(Ty::Void) => self.error("expression has no value", value.span),
            Some(Ty::Any) | None => {}
        }
    }

    fn decl(&mut self, ty: &TypeRef, name: &str, init: Option<&Expr>, span: Span) {
        let t = ty.ty;
        if t.is_quantum() {
            if self.frame == Frame::Pure {
                self.error("pure functions cannot declare quantum variables", span);
            }
            match init {
                None => self.error(
                    format!("quantum variable `{name}` requires an initializer"),
                    span,
                ),
                Some(e) => self.quantum_init(t, e),
            }
        } else if let Some(e) = init {
            self.classical_store(t, e);
        }
        self.declare(name, t, span);
    }

    fn quantum_init(&mut self, t: RhymeType, e: &Expr) {
        match &e.kind {
            ExprKind::Static { ty, name, args } if name == "all" => {
                if *ty != t || t.is_array() || !args.is_empty() {
                    self.error(format!("`{}.all()` cannot initialize {t}", ty.keyword()), e.span);
                }
            }
            ExprKind::Static { ty, name, args } if name == "zeros" => {
                if !(*ty == RhymeType::QBit && t.is_array()) {
                    self.error("`qbit.zeros(n)` initializes qbit[] variables", e.span);
                }
                match args.as_slice() {
                    [n] => self.expect_classical(n, RhymeType::Int),
                    _ => self.error("`qbit.zeros` takes one argument", e.span),
                }
            }
            ExprKind::Superpose(items) => {
                let operands: Vec<&Expr> = items.iter().collect();
                self.superposition(t, &operands);
            }
            _ => self.superposition(t, &[e]),
        }
    }

    /// Checks superposition operands; constants are encoded now so range
    /// errors, rounding and duplicates are reported before running.
    fn superposition(&mut self, t: RhymeType, operands: &[&Expr]) {
        if t.is_array() {
            self.error(
                "qbit[] variables are initialized with `qbit.zeros(n)`",
                operands[0].span,
            );
            return;
        }
        let mut seen: Vec<u64> = Vec::new();
        for op in operands {
            let value = if let Some(target) = is_addr_of_var(op) {
                if t != RhymeType::QRef {
                    self.error(format!("an address cannot initialize {t}"), op.span);
                    continue;
                }
                self.address_of(target, op.span).map(ClassicalValue::Ref)
            } else {
                match self.expr(op, Mode::Classical) {
                    Some(Ty::V(got)) => {
                        let want = t.classical_counterpart();
                        if !assignable(got, want) {
                            self.error(format!("{got} value cannot initialize {t}"), op.span);
                            continue;
                        }
                    }
                    Some(Ty::Void) => {
                        self.error("expression has no value", op.span);
                        continue;
                    }
                    _ => continue,
                }
                self.constant(op)
            };
            let Some(value) = value else { continue };
            let value = match crate::semantics::classical::coerce(value, t) {
                Ok(v) => v,
                Err(m) => {
                    self.error(m, op.span);
                    continue;
                }
            };
            match encode(&value, t, self.cfg) {
                Ok(enc) => {
                    if enc.rounded {
                        let shown = crate::types::decode(enc.index, t, self.cfg);
                        self.warn(
                            format!("{value} is not representable as {t}; rounded to {shown}"),
                            op.span,
                        );
                    }
                    if seen.contains(&enc.index.0) {
                        self.error(
                            format!("duplicate superposition value {value}"),
                            op.span,
                        );
                    }
                    seen.push(enc.index.0);
                }
                Err(err) => self.error(err.to_string(), op.span),
            }
        }
    }

    /// Value of `e` if it is a compile-time constant.
    fn constant(&mut self, e: &Expr) -> Option<ClassicalValue> {
        let mut constant = true;
        e.walk(&mut |x| match &x.kind {
            ExprKind::Var(n) if n == "pi" => {}
            ExprKind::Var(_)
            | ExprKind::Method { .. }
            | ExprKind::Static { .. }
            | ExprKind::Unary(UnOp::AddrOf | UnOp::Deref, _) => constant = false,
            ExprKind::Call { name, .. } if math_arity(name).is_none() => constant = false,
            _ => {}
        });
        if !constant || self.lookup("pi").is_some() || self.fns.get("pi").is_some() {
            return None;
        }
        let empty = HashMap::new();
        match PureEvaluator::new(&empty).expr(e) {
            Ok(v) => Some(v),
            Err(err) => {
                self.error(err.message, e.span);
                None
            }
        }
    }

    fn address_of(&mut self, name: &str, span: Span) -> Option<Address> {
        let Some(info) = self.lookup(name) else {
            self.error(format!("undefined variable `{name}`"), span);
            return None;
        };
        if !info.global {
            self.error("`&` is only available for global variables", span);
            return None;
        }
        if info.ty.is_quantum() {
            let idx = self.quantum_globals.iter().position(|n| n == name)? as u64;
            if idx >> self.cfg.ref_bits != 0 {
                self.error(
                    format!(
                        "address of `{name}` does not fit {} ref bits; too many quantum variables",
                        self.cfg.ref_bits
                    ),
                    span,
                );
                return None;
            }
            Some(Address::Quantum(idx))
        } else {
            let idx = self.classical_globals.iter().position(|n| n == name)? as u64;
            Some(Address::Classical(idx))
        }
    }

    fn quantum_vars_in(&self, e: &Expr) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        e.walk(&mut |x| {
            if let ExprKind::Var(n) = &x.kind {
                if self.lookup(n).is_some_and(|v| v.ty.is_quantum()) && !out.contains(n) {
                    out.push(n.clone());
                }
            }
        });
        out
    }

    fn if_stmt(&mut self, cond: &Expr, then_block: &Block, else_branch: Option<&Else>) {
        let qvars = self.quantum_vars_in(cond);
        if qvars.is_empty() {
            self.expect_bool(cond, Mode::Classical);
            self.block(then_block);
            match else_branch {
                Some(Else::Block(b)) => self.block(b),
                Some(Else::If(s)) => self.stmt(s),
                None => {}
            }
            return;
        }
        if self.frame == Frame::Pure {
            self.error("pure functions cannot branch on quantum values", cond.span);
        }
        self.expect_bool(cond, Mode::Condition);
        self.conditions.push(qvars);
        self.block(then_block);
        match else_branch {
            Some(Else::Block(b)) => self.block(b),
            Some(Else::If(s)) => self.stmt(s),
            None => {}
        }
        self.conditions.pop();
    }

    fn conditioned_stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::If {
                cond,
                then_block,
                else_branch,
            } => {
                self.no_overlap(cond);
                self.if_stmt(cond, then_block, else_branch.as_ref());
            }
            StmtKind::Expr(e @ Expr {
                kind: ExprKind::Method { receiver, name, .. },
                ..
            }) => {
                let user = self
                    .expr_type_quiet(receiver)
                    .and_then(|t| match self.fns.resolve_method(name, t) {
                        Some(MethodTarget::User(_)) => Some(()),
                        _ => None,
                    })
                    .is_some();
                if user {
                    self.error(
                        format!("`{name}` is a user function; only built-in reversible operations are allowed inside a quantum condition"),
                        e.span,
                    );
                    return;
                }
                self.no_overlap(e);
                self.expr(e, Mode::Classical);
            }
            _ => self.error(
                "only reversible operations (increment, decrement, X, H, Z, CNOT, CCNOT, addPhase, applyOracle, applyBipartiteInterference, invertAboutMean) and nested `if` are allowed inside a quantum condition",
                s.span,
            ),
        }
    }

    /// Rejects body statements that touch a variable of an enclosing
    /// quantum condition.
    fn no_overlap(&mut self, e: &Expr) {
        let used = self.quantum_vars_in(e);
        let is_if_cond = !matches!(e.kind, ExprKind::Method { .. });
        for v in used {
            if is_if_cond {
                continue;
            }
            if self.conditions.iter().any(|c| c.contains(&v)) {
                self.error(
                    format!("condition/body overlap: `{v}` is used in the enclosing condition"),
                    e.span,
                );
            }
        }
    }

    fn expr_type_quiet(&self, e: &Expr) -> Option<RhymeType> {
        match &e.kind {
            ExprKind::Var(n) => self.lookup(n).map(|v| v.ty),
            ExprKind::Index(b, _) => match self.expr_type_quiet(b)? {
                RhymeType::QBitArray(_) => Some(RhymeType::QBit),
                _ => None,
            },
            _ => None,
        }
    }

    fn expect_bool(&mut self, e: &Expr, mode: Mode) {
        match self.expr(e, mode) {
            Some(Ty::V(RhymeType::Bool)) | Some(Ty::Any) | None => {}
            Some(Ty::V(t)) => self.error(format!("condition must be bool, found {t}"), e.span),
            Some(Ty::Void) => self.error("condition has no value", e.span),
        }
    }

    fn expect_classical(&mut self, e: &Expr, want: RhymeType) {
        match self.expr(e, Mode::Classical) {
            Some(Ty::V(t)) if !assignable(t, want) => {
                self.error(format!("expected {want}, found {t}"), e.span)
            }
            Some(Ty::Void) => self.error("expression has no value", e.span),
            _ => {}
        }
    }

    fn expr(&mut self, e: &Expr, mode: Mode) -> Option<Ty> {
        use RhymeType as T;
        let lit = |t| Some(Ty::V(t));
        match &e.kind {
            ExprKind::Int(_) => lit(T::Int),
            ExprKind::Float(_) => lit(T::Float),
            ExprKind::Imag(_) => lit(T::Complex),
            ExprKind::Char(c) => {
                if *c >= 128 {
                    self.error("character outside 7-bit ASCII", e.span);
                }
                lit(T::Char)
            }
            ExprKind::Str(_) => lit(T::Str),
            ExprKind::Bool(_) => lit(T::Bool),
            ExprKind::Var(name) => self.var(name, e.span, mode),
            ExprKind::Superpose(items) => {
                let mut ok = true;
                for item in items {
                    match self.expr(item, mode) {
                        Some(Ty::V(T::Bool)) | Some(Ty::Any) => {}
                        None => ok = false,
                        Some(_) => {
                            self.error(
                                "a `||` superposition is only allowed as the initializer of a quantum variable",
                                e.span,
                            );
                            return None;
                        }
                    }
                }
                ok.then_some(Ty::V(T::Bool))
            }
            ExprKind::Binary(op, l, r) => {
                let inner = if mode == Mode::Place {
                    Mode::Classical
                } else {
                    mode
                };
                let a = self.expr(l, inner);
                let b = self.expr(r, inner);
                match (a?, b?) {
                    (Ty::V(a), Ty::V(b)) => match binary_type(*op, a, b) {
                        Some(t) => Some(Ty::V(t)),
                        None => {
                            self.error(
                                format!("operator `{}` is not defined for {a} and {b}", op.symbol()),
                                e.span,
                            );
                            None
                        }
                    },
                    (Ty::Void, _) | (_, Ty::Void) => {
                        self.error("expression has no value", e.span);
                        None
                    }
                    _ => Some(Ty::Any),
                }
            }
            ExprKind::Unary(UnOp::Neg, inner) => {
                let m = if mode == Mode::Place { Mode::Classical } else { mode };
                match self.expr(inner, m)? {
                    Ty::V(t @ (T::Bit | T::Int)) => Some(Ty::V(if t == T::Bit { T::Int } else { t })),
                    Ty::V(t @ (T::Float | T::Complex)) => Some(Ty::V(t)),
                    Ty::Any => Some(Ty::Any),
                    Ty::V(t) => {
                        self.error(format!("cannot negate {t}"), e.span);
                        None
                    }
                    Ty::Void => None,
                }
            }
            ExprKind::Unary(UnOp::Not, inner) => {
                let m = if mode == Mode::Place { Mode::Classical } else { mode };
                match self.expr(inner, m)? {
                    Ty::V(T::Bool) | Ty::Any => Some(Ty::V(T::Bool)),
                    _ => {
                        self.error("`!` needs a bool", e.span);
                        None
                    }
                }
            }
            ExprKind::Unary(UnOp::AddrOf, inner) => match inner.as_var() {
                Some(name) => {
                    self.address_of(name, e.span)?;
                    Some(Ty::V(T::Ref))
                }
                None => {
                    self.error("`&` needs a variable name", e.span);
                    None
                }
            },
            ExprKind::Unary(UnOp::Deref, inner) => {
                if self.frame != Frame::Top {
                    self.error("`*` is only available at the top level", e.span);
                }
                match self.expr(inner, Mode::Place)? {
                    Ty::V(T::Ref) | Ty::Any => Some(Ty::Any),
                    Ty::V(T::QRef) if mode == Mode::Place => Some(Ty::Any),
                    Ty::V(t) => {
                        self.error(format!("cannot dereference {t}"), e.span);
                        None
                    }
                    Ty::Void => None,
                }
            }
            ExprKind::ImagMul(inner) => {
                let m = if mode == Mode::Place { Mode::Classical } else { mode };
                match self.expr(inner, m)? {
                    Ty::V(T::Bit | T::Int | T::Float | T::Complex) => Some(Ty::V(T::Complex)),
                    Ty::Any => Some(Ty::Any),
                    _ => {
                        self.error("only numbers can be multiplied by i", e.span);
                        None
                    }
                }
            }
            ExprKind::Index(base, idx) => {
                self.expect_classical(idx, T::Int);
                let m = if mode == Mode::Condition { Mode::Place } else { mode };
                match self.expr(base, m)? {
                    Ty::V(T::Str) => Some(Ty::V(T::Char)),
                    Ty::V(T::BitArray(_)) => Some(Ty::V(T::Bit)),
                    Ty::V(T::QBitArray(_)) => {
                        if mode == Mode::Condition {
                            self.error("quantum conditions must use whole variables", e.span);
                            None
                        } else {
                            Some(Ty::V(T::QBit))
                        }
                    }
                    Ty::Any => Some(Ty::Any),
                    Ty::V(t) => {
                        self.error(format!("cannot index {t}"), e.span);
                        None
                    }
                    Ty::Void => None,
                }
            }
            ExprKind::Length(base) => match self.expr(base, Mode::Place)? {
                Ty::V(T::Str | T::BitArray(_) | T::QBitArray(_)) | Ty::Any => Some(Ty::V(T::Int)),
                Ty::V(t) => {
                    self.error(format!("{t} has no length"), e.span);
                    None
                }
                Ty::Void => None,
            },
            ExprKind::Call { name, args } => self.call(name, args, e.span),
            ExprKind::Method {
                receiver,
                name,
                args,
            } => self.method(receiver, name, args, e.span),
            ExprKind::Static { ty, name, args } => match name.as_str() {
                "dimension" => {
                    if self.frame == Frame::Pure {
                        self.error("`dimension()` is not available in pure functions", e.span);
                    }
                    if !args.is_empty() {
                        self.error("`dimension()` takes no arguments", e.span);
                    }
                    if !ty.is_quantum() || ty.is_array() {
                        self.error(
                            format!("`dimension()` needs a fixed-width quantum type, found {}", ty.keyword()),
                            e.span,
                        );
                    }
                    Some(Ty::V(T::Int))
                }
                "all" | "zeros" => {
                    self.error(
                        format!("`{}.{name}()` is only allowed as a quantum initializer", ty.keyword()),
                        e.span,
                    );
                    None
                }
                _ => {
                    self.error(format!("unknown static method `{}.{name}`", ty.keyword()), e.span);
                    None
                }
            },
        }
    }

    fn var(&mut self, name: &str, span: Span, mode: Mode) -> Option<Ty> {
        let Some(info) = self.lookup(name) else {
            if name == "pi" {
                return Some(Ty::V(RhymeType::Float));
            }
            if self.fns.get(name).is_some() {
                self.error(format!("`{name}` is a function, not a value"), span);
            } else {
                self.error(format!("undefined variable `{name}`"), span);
            }
            return None;
        };
        if !info.ty.is_quantum() {
            return Some(Ty::V(info.ty));
        }
        match mode {
            Mode::Place => Some(Ty::V(info.ty)),
            Mode::Condition => Some(Ty::V(info.ty.classical_counterpart())),
            Mode::Classical => {
                self.error(
                    format!("quantum variable `{name}` used in a classical expression; assign it to a classical variable to measure it"),
                    span,
                );
                None
            }
        }
    }

    fn call(&mut self, name: &str, args: &[Expr], span: Span) -> Option<Ty> {
        if name == "print" {
            if self.frame == Frame::Pure {
                self.error("pure functions cannot print", span);
            }
            if args.len() != 1 {
                self.error("`print` takes one argument", span);
                return Some(Ty::Void);
            }
            if let Some(Ty::Void) = self.expr(&args[0], Mode::Classical) {
                self.error("expression has no value", args[0].span);
            }
            return Some(Ty::Void);
        }
        if self.fns.get(name).is_none() {
            if let Some(arity) = math_arity(name) {
                if args.len() != arity {
                    self.error(format!("`{name}` takes {arity} argument(s)"), span);
                    return None;
                }
                let mut types = Vec::new();
                for a in args {
                    match self.expr(a, Mode::Classical)? {
                        Ty::V(t @ (RhymeType::Bit | RhymeType::Int | RhymeType::Float)) => types.push(t),
                        Ty::V(RhymeType::Complex) if name == "abs" => types.push(RhymeType::Complex),
                        Ty::Any => types.push(RhymeType::Float),
                        Ty::V(t) => {
                            self.error(format!("`{name}` expects a real number, found {t}"), a.span);
                            return None;
                        }
                        Ty::Void => return None,
                    }
                }
                return Some(Ty::V(math_result_type(name, &types)));
            }
            self.error(format!("unknown function `{name}`"), span);
            return None;
        }
        if let Some(f) = self.fns.natives.get(name).cloned() {
            // `invertAboutMean(s)` with a native binding: same as the method form
            let [recv, rest @ ..] = args else {
                self.error(format!("`{name}` takes one argument"), span);
                return None;
            };
            if !rest.is_empty() {
                self.error(format!("`{name}` takes one argument"), span);
            }
            let _ = f;
            return self.method(recv, name, &[], span);
        }
        let f = self.fns.get(name).cloned().expect("checked above");
        let is_proc = self.fns.procedures.contains_key(name);
        if is_proc && self.frame == Frame::Pure {
            self.error(format!("pure functions cannot call `{name}`, which has quantum parameters"), span);
        }
        self.arguments(&f, args, span);
        Some(match f.ret {
            Some(r) => Ty::V(r.ty),
            None => Ty::Void,
        })
    }

    fn arguments(&mut self, f: &FnDef, args: &[Expr], span: Span) {
        if args.len() != f.params.len() {
            self.error(
                format!("`{}` expects {} argument(s), got {}", f.name, f.params.len(), args.len()),
                span,
            );
            return;
        }
        for (p, a) in f.params.iter().zip(args) {
            let mode = if p.ty.ty.is_quantum() {
                Mode::Place
            } else {
                Mode::Classical
            };
            match self.expr(a, mode) {
                Some(Ty::V(t)) if !param_accepts(p.ty.ty, t) => self.error(
                    format!("argument `{}` of `{}` expects {}, found {t}", p.name, f.name, p.ty.ty),
                    a.span,
                ),
                Some(Ty::Void) => self.error("expression has no value", a.span),
                _ => {}
            }
        }
    }

    fn method(&mut self, receiver: &Expr, name: &str, args: &[Expr], span: Span) -> Option<Ty> {
        let recv = match self.expr(receiver, Mode::Place)? {
            Ty::V(t) => t,
            Ty::Any => {
                self.error("methods cannot be called on a dereferenced value", receiver.span);
                return None;
            }
            Ty::Void => {
                self.error("expression has no value", receiver.span);
                return None;
            }
        };
        match self.fns.resolve_method(name, recv) {
            Some(MethodTarget::User(f)) => {
                let f = f.clone();
                if self.frame == Frame::Pure && self.fns.procedures.contains_key(name) {
                    self.error(format!("pure functions cannot call `{name}`"), span);
                }
                self.arguments(&f, &std::iter::once(receiver.clone()).chain(args.iter().cloned()).collect::<Vec<_>>(), span);
                Some(match f.ret {
                    Some(r) => Ty::V(r.ty),
                    None => Ty::Void,
                })
            }
            Some(MethodTarget::Builtin(b)) => {
                if self.frame == Frame::Pure {
                    self.error("pure functions cannot operate on quantum values", span);
                }
                self.builtin(b, receiver, recv, args, span);
                Some(Ty::Void)
            }
            None => {
                self.error(format!("no method `{name}` for {recv}"), span);
                None
            }
        }
    }

    fn builtin(&mut self, b: Builtin, receiver: &Expr, recv: RhymeType, args: &[Expr], span: Span) {
        let arity_ok = |n: &[usize]| n.contains(&args.len());
        let expected: &[usize] = match b {
            Builtin::AddPhase => &[2],
            Builtin::ApplyOracle | Builtin::Cnot => &[1],
            Builtin::Bipartite => &[2, 6],
            Builtin::Ccnot => &[2],
            _ => &[0],
        };
        if !arity_ok(expected) {
            let list: Vec<String> = expected.iter().map(|n| n.to_string()).collect();
            self.error(
                format!("wrong number of arguments: expected {}", list.join(" or ")),
                span,
            );
            return;
        }
        if b.is_gate() {
            if recv != RhymeType::QBit {
                self.error(format!("gates act on single qubits, found {recv}"), receiver.span);
            }
            for a in args {
                if let Some(Ty::V(t)) = self.expr(a, Mode::Place) {
                    if t != RhymeType::QBit {
                        self.error(format!("gate operands must be qubits, found {t}"), a.span);
                    }
                }
            }
            return;
        }
        if receiver.as_var().is_none() {
            self.error("this operation needs a whole quantum variable", receiver.span);
            return;
        }
        let arg_ty = recv.classical_counterpart();
        match b {
            Builtin::AddPhase => {
                self.function_arg(&args[0], arg_ty, &[RhymeType::Int, RhymeType::Bit, RhymeType::Bool]);
                self.expect_classical(&args[1], RhymeType::Int);
                if let ExprKind::Int(n) = args[1].kind {
                    if n < 1 {
                        self.error("the phase modulus must be a positive integer", args[1].span);
                    }
                }
            }
            Builtin::ApplyOracle => {
                self.function_arg(&args[0], arg_ty, &[RhymeType::Bool]);
            }
            Builtin::Bipartite => {
                let split_ok = self.function_arg(&args[0], arg_ty, &[RhymeType::Bool]);
                let pair_ok = self.function_arg(&args[1], arg_ty, &[arg_ty]);
                for u in &args[2..] {
                    self.expect_classical(u, RhymeType::Complex);
                }
                if split_ok && pair_ok {
                    self.static_bipartition(&args[0], &args[1], recv, span);
                }
            }
            _ => {}
        }
    }

    /// Checks that `arg` names a pure function taking `param` and returning
    /// one of `returns`.
    fn function_arg(&mut self, arg: &Expr, param: RhymeType, returns: &[RhymeType]) -> bool {
        let Some(name) = arg.as_var() else {
            self.error("expected a function name", arg.span);
            return false;
        };
        if self.lookup(name).is_some() {
            self.error(format!("`{name}` is a variable, expected a function name"), arg.span);
            return false;
        }
        let Some(f) = self.fns.pure.get(name) else {
            if self.fns.get(name).is_some() {
                self.error(format!("`{name}` must be a pure classical function"), arg.span);
            } else {
                self.error(format!("unknown function `{name}`"), arg.span);
            }
            return false;
        };
        let ok_param = f.params.len() == 1 && param_accepts(f.params[0].ty.ty, param);
        let ok_ret = f
            .ret
            .as_ref()
            .is_some_and(|r| returns.iter().any(|t| *t == r.ty || (t.is_array() && r.ty.is_array())));
        if !ok_param || !ok_ret {
            let rets: Vec<String> = returns.iter().map(|t| t.to_string()).collect();
            self.error(
                format!(
                    "`{name}` must take one {param} and return {}",
                    rets.join(" or ")
                ),
                arg.span,
            );
            return false;
        }
        true
    }

    fn static_bipartition(&mut self, split: &Expr, pair: &Expr, recv: RhymeType, span: Span) {
        if !self.pure_ok {
            return;
        }
        let Some(width) = recv.width(self.cfg) else {
            return;
        };
        if width > STATIC_TABLE_BITS {
            return;
        }
        let (Some(split), Some(pair)) = (split.as_var(), pair.as_var()) else {
            return;
        };
        let mut ev = PureEvaluator::new(&self.fns.pure);
        match tables::bipartition(&mut ev, split, pair, recv, width, self.cfg) {
            Ok(b) => {
                if let Some(w) = b.wrapped {
                    self.warn(format!("integer result wrapped: {w}"), span);
                }
            }
            Err(e) => self.error(e.message, span),
        }
    }
}
