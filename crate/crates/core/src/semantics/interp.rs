use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::engine::{Control, Gate, RegId};
use crate::frontend::ast::*;
use crate::frontend::{Diagnostic, Span};
use crate::sema::{Builtin, CheckedProgram, MethodTarget};
use crate::types::{decode, encode, Address, BasisIndex, ClassicalValue as CV, RhymeType};

use super::classical::{
    binary, call_math, coerce, index, length, literal, math_arity, negate, times_i, truth,
    PureEvaluator,
};
use super::tables::{self, PhaseTable};
use super::{
    ExecutionResult, MeasureOutcome, MeasurementRecord, QuantumBackend, RuntimeError,
    RuntimeErrorKind,
};

/// Statement budget for one execution.
const STEP_LIMIT: u64 = 200_000_000;
const MAX_CALL_DEPTH: usize = 256;

/// A quantum variable, a view of one as `qbit[]`, or one of its qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
struct QHandle {
    ty: RhymeType,
    reg: RegId,
    width: u32,
    elem: Option<u32>,
}

impl QHandle {
    /// Type used to decode the register's patterns.
    fn decoding_type(&self) -> RhymeType {
        match self.ty {
            RhymeType::QBitArray(_) => RhymeType::BitArray(Some(self.width)),
            t => t,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    C(CV),
    Q(QHandle),
    /// Outcome of a measurement that only exists when the circuit runs.
    Measured(String),
}

struct Slot {
    name: String,
    ty: RhymeType,
    value: Option<Value>,
}

#[derive(Default)]
struct Scope {
    slots: Vec<Slot>,
    regs: Vec<RegId>,
}

enum Flow {
    Normal,
    Return,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum TableKey {
    Phase(String, RhymeType, u32, i64),
    Oracle(String, RhymeType, u32),
    Pairs(String, String, RhymeType, u32),
}

enum Table {
    Phase(Arc<PhaseTable>),
    Pairs(Arc<Vec<(u64, u64)>>),
}

fn eval_err(msg: impl Into<String>, span: Span) -> RuntimeError {
    RuntimeError::new(RuntimeErrorKind::Evaluation, msg).at(span)
}

fn not_expressible(name: &str, span: Span) -> RuntimeError {
    RuntimeError::new(
        RuntimeErrorKind::NotGateExpressible,
        format!("measured value `{name}` is used classically; this cannot be expressed as a gate-level circuit"),
    )
    .at(span)
}

/// Runs a checked program once on `backend`.
pub fn execute(
    program: &CheckedProgram,
    backend: &mut dyn QuantumBackend,
) -> Result<ExecutionResult, RuntimeError> {
    Interpreter::new(program, backend).run()
}

/// Tree-walking interpreter over a [`QuantumBackend`].
pub struct Interpreter<'a> {
    prog: &'a CheckedProgram,
    backend: &'a mut dyn QuantumBackend,
    frames: Vec<Vec<Scope>>,
    next_reg: u32,
    result: ExecutionResult,
    tables: HashMap<TableKey, Table>,
    /// Decoded values of quantum variables while a condition table is built.
    overrides: Vec<(String, CV)>,
    steps: u64,
}

impl<'a> Interpreter<'a> {
    pub fn new(prog: &'a CheckedProgram, backend: &'a mut dyn QuantumBackend) -> Self {
        Interpreter {
            prog,
            backend,
            frames: Vec::new(),
            next_reg: 0,
            result: ExecutionResult::default(),
            tables: HashMap::new(),
            overrides: Vec::new(),
            steps: 0,
        }
    }

    pub fn run(mut self) -> Result<ExecutionResult, RuntimeError> {
        self.frames.push(vec![Scope::default()]);
        let prog = self.prog;
        for s in prog.program.statements() {
            if let Flow::Return = self.stmt(s)? {
                break;
            }
        }
        Ok(self.result)
    }

    fn cfg(&self) -> &'a crate::types::TypeConfig {
        &self.prog.config
    }

    fn scopes(&mut self) -> &mut Vec<Scope> {
        self.frames.last_mut().expect("a frame is active")
    }

    fn lookup(&self, name: &str) -> Option<&Slot> {
        self.frames
            .last()?
            .iter()
            .rev()
            .find_map(|s| s.slots.iter().rev().find(|v| v.name == name))
    }

    fn lookup_mut(&mut self, name: &str) -> Option<&mut Slot> {
        self.frames
            .last_mut()?
            .iter_mut()
            .rev()
            .find_map(|s| s.slots.iter_mut().rev().find(|v| v.name == name))
    }

    fn global(&self, name: &str) -> Option<&Slot> {
        self.frames.first()?.first()?.slots.iter().find(|v| v.name == name)
    }

    fn declare(&mut self, name: &str, ty: RhymeType, value: Option<Value>) {
        self.scopes().last_mut().expect("a scope is open").slots.push(Slot {
            name: name.to_string(),
            ty,
            value,
        });
    }

    fn push_scope(&mut self) {
        self.scopes().push(Scope::default());
    }

    fn pop_scope(&mut self) -> Result<(), RuntimeError> {
        let scope = self.scopes().pop().expect("a scope is open");
        for r in scope.regs.into_iter().rev() {
            self.backend.release_if_clean(r)?;
        }
        Ok(())
    }

    fn block(&mut self, b: &'a Block) -> Result<Flow, RuntimeError> {
        self.push_scope();
        let mut flow = Flow::Normal;
        for s in &b.stmts {
            if let Flow::Return = self.stmt(s)? {
                flow = Flow::Return;
                break;
            }
        }
        self.pop_scope()?;
        Ok(flow)
    }

    fn tick(&mut self, span: Span) -> Result<(), RuntimeError> {
        self.steps += 1;
        if self.steps > STEP_LIMIT {
            return Err(eval_err("program did not terminate within the step budget", span));
        }
        Ok(())
    }

    fn stmt(&mut self, s: &'a Stmt) -> Result<Flow, RuntimeError> {
        self.tick(s.span)?;
        match &s.kind {
            StmtKind::Decl { ty, name, init } => {
                if ty.ty.is_quantum() {
                    let init = init.as_ref().ok_or_else(|| {
                        eval_err(format!("`{name}` needs an initializer"), s.span)
                    })?;
                    let h = self.quantum_decl(ty.ty, name, init)?;
                    self.declare(name, h.ty, Some(Value::Q(h)));
                } else {
                    let v = match init {
                        Some(e) => Some(self.store_value(ty.ty, name, e)?),
                        None => None,
                    };
                    self.declare(name, ty.ty, v);
                }
            }
            StmtKind::Assign { target, value } => {
                let name = match &target.kind {
                    ExprKind::Var(n) => n.clone(),
                    ExprKind::Index(base, _) => base.as_var().unwrap_or_default().to_string(),
                    _ => return Err(eval_err("invalid assignment target", target.span)),
                };
                let ty = self
                    .lookup(&name)
                    .map(|s| s.ty)
                    .ok_or_else(|| eval_err(format!("undefined variable `{name}`"), target.span))?;
                match &target.kind {
                    ExprKind::Var(_) => {
                        let v = self.store_value(ty, &name, value)?;
                        self.lookup_mut(&name).expect("looked up").value = Some(v);
                    }
                    ExprKind::Index(_, idx) => {
                        let v = self.eval(value)?;
                        let i = self.eval(idx)?;
                        self.set_element(&name, i, v, target.span)?;
                    }
                    _ => unreachable!(),
                }
            }
            StmtKind::Step { target, delta } => {
                let cur = self.eval(target)?;
                let next = binary(BinOp::Add, &cur, &CV::Int(*delta))
                    .map_err(|m| eval_err(m, target.span))?;
                match &target.kind {
                    ExprKind::Var(name) => {
                        let slot = self.lookup_mut(name).expect("evaluated above");
                        let v = coerce(next, slot.ty).map_err(|m| eval_err(m, target.span))?;
                        slot.value = Some(Value::C(v));
                    }
                    _ => return Err(eval_err("`++`/`--` need a variable", target.span)),
                }
            }
            StmtKind::Expr(e) => {
                self.effect(e)?;
            }
            StmtKind::If {
                cond,
                then_block,
                else_branch,
            } => {
                let qvars = self.quantum_names(cond);
                if !qvars.is_empty() {
                    return self.quantum_if(cond, &qvars, then_block, else_branch.as_ref());
                }
                let c = self.eval(cond)?;
                if truth(&c).map_err(|m| eval_err(m, cond.span))? {
                    return self.block(then_block);
                }
                match else_branch {
                    Some(Else::Block(b)) => return self.block(b),
                    Some(Else::If(s)) => return self.stmt(s),
                    None => {}
                }
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                self.push_scope();
                let flow = self.for_loop(init.as_deref(), cond.as_ref(), step.as_deref(), body);
                let popped = self.pop_scope();
                let flow = flow?;
                popped?;
                return Ok(flow);
            }
            StmtKind::Return(v) => {
                if let Some(e) = v {
                    return Err(eval_err("procedures cannot return values", e.span));
                }
                return Ok(Flow::Return);
            }
        }
        Ok(Flow::Normal)
    }

    fn for_loop(
        &mut self,
        init: Option<&'a Stmt>,
        cond: Option<&'a Expr>,
        step: Option<&'a Stmt>,
        body: &'a Block,
    ) -> Result<Flow, RuntimeError> {
        if let Some(i) = init {
            self.stmt(i)?;
        }
        loop {
            if let Some(c) = cond {
                let v = self.eval(c)?;
                if !truth(&v).map_err(|m| eval_err(m, c.span))? {
                    return Ok(Flow::Normal);
                }
            }
            if let Flow::Return = self.block(body)? {
                return Ok(Flow::Return);
            }
            if let Some(st) = step {
                self.stmt(st)?;
            }
            self.tick(body.span)?;
        }
    }

    fn set_element(&mut self, name: &str, i: CV, v: CV, span: Span) -> Result<(), RuntimeError> {
        let bit = coerce(v, RhymeType::Bit).map_err(|m| eval_err(m, span))?;
        let slot = self
            .lookup_mut(name)
            .ok_or_else(|| eval_err(format!("undefined variable `{name}`"), span))?;
        match (&mut slot.value, i, bit) {
            (Some(Value::C(CV::Bits(bits))), CV::Int(i), CV::Bit(b)) => {
                let len = bits.len();
                let cell = usize::try_from(i)
                    .ok()
                    .and_then(|i| bits.get_mut(i))
                    .ok_or_else(|| eval_err(format!("index {i} out of bounds for length {len}"), span))?;
                *cell = b;
                Ok(())
            }
            _ => Err(eval_err(
                "indexed assignment needs an initialized bit array and an int index",
                span,
            )),
        }
    }

    /// Value stored into a classical variable; quantum sources are measured.
    fn store_value(&mut self, ty: RhymeType, dest: &str, e: &'a Expr) -> Result<Value, RuntimeError> {
        match self.place(e)? {
            Value::Q(h) => {
                if h.elem.is_some() {
                    return Err(eval_err("only whole quantum variables can be measured", e.span));
                }
                match self.backend.measure(h.reg, dest).map_err(|err| err.at(e.span))? {
                    MeasureOutcome::Known(idx) => {
                        let v = decode(idx, h.decoding_type(), self.cfg());
                        self.result.measurements.push(MeasurementRecord {
                            variable: dest.to_string(),
                            value: v.clone(),
                        });
                        let v = coerce(v, ty).map_err(|m| eval_err(m, e.span))?;
                        Ok(Value::C(v))
                    }
                    MeasureOutcome::Deferred => Ok(Value::Measured(dest.to_string())),
                }
            }
            Value::C(v) => Ok(Value::C(coerce(v, ty).map_err(|m| eval_err(m, e.span))?)),
            Value::Measured(n) => Err(not_expressible(&n, e.span)),
        }
    }

    fn quantum_decl(&mut self, ty: RhymeType, name: &str, init: &'a Expr) -> Result<QHandle, RuntimeError> {
        let width = match (&init.kind, ty) {
            (ExprKind::Static { name: m, args, .. }, RhymeType::QBitArray(_)) if m == "zeros" => {
                match self.eval(&args[0])? {
                    CV::Int(n) if (1..=i64::from(u32::MAX)).contains(&n) => n as u32,
                    other => {
                        return Err(eval_err(
                            format!("`qbit.zeros` needs a positive length, got {other}"),
                            init.span,
                        ))
                    }
                }
            }
            _ => ty
                .width(self.cfg())
                .ok_or_else(|| eval_err("qbit[] variables are initialized with `qbit.zeros(n)`", init.span))?,
        };
        let ty = match ty {
            RhymeType::QBitArray(_) => RhymeType::QBitArray(Some(width)),
            t => t,
        };
        let reg = RegId(self.next_reg);
        self.next_reg += 1;
        self.backend
            .allocate(reg, width, name)
            .map_err(|e| e.at(init.span))?;
        let global = self.frames.len() == 1 && self.frames[0].len() == 1;
        if !global {
            self.scopes().last_mut().expect("scope").regs.push(reg);
        }
        let h = QHandle {
            ty,
            reg,
            width,
            elem: None,
        };
        match &init.kind {
            ExprKind::Static { name: m, .. } if m == "all" => {
                self.backend.prepare_all(reg).map_err(|e| e.at(init.span))?;
            }
            ExprKind::Static { name: m, .. } if m == "zeros" => {}
            ExprKind::Superpose(items) => {
                let values = items
                    .iter()
                    .map(|op| self.basis_value(ty, op))
                    .collect::<Result<Vec<_>, _>>()?;
                self.backend.prepare(reg, &values).map_err(|e| e.at(init.span))?;
            }
            _ => {
                let v = self.basis_value(ty, init)?;
                self.backend.prepare(reg, &[v]).map_err(|e| e.at(init.span))?;
            }
        }
        Ok(h)
    }

    fn basis_value(&mut self, ty: RhymeType, e: &'a Expr) -> Result<BasisIndex, RuntimeError> {
        let v = self.eval(e)?;
        let v = coerce(v, ty).map_err(|m| eval_err(m, e.span))?;
        let enc = encode(&v, ty, self.cfg()).map_err(|err| eval_err(err.to_string(), e.span))?;
        Ok(enc.index)
    }

    /// Names of quantum variables mentioned by `e`, in order of appearance.
    fn quantum_names(&self, e: &Expr) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        e.walk(&mut |x| {
            if let ExprKind::Var(n) = &x.kind {
                if let Some(Slot {
                    value: Some(Value::Q(_)),
                    ..
                }) = self.lookup(n)
                {
                    if !out.contains(n) {
                        out.push(n.clone());
                    }
                }
            }
        });
        out
    }

    fn quantum_if(
        &mut self,
        cond: &'a Expr,
        names: &[String],
        then_block: &'a Block,
        else_branch: Option<&'a Else>,
    ) -> Result<Flow, RuntimeError> {
        let mut handles = Vec::new();
        for n in names {
            match self.lookup(n).and_then(|s| s.value.clone()) {
                Some(Value::Q(h)) if h.elem.is_none() => {
                    if handles.iter().any(|o: &QHandle| o.reg == h.reg) {
                        return Err(eval_err(
                            format!("`{n}` aliases another variable of the condition"),
                            cond.span,
                        ));
                    }
                    handles.push(h)
                }
                _ => return Err(eval_err("quantum conditions must use whole variables", cond.span)),
            }
        }
        let total: u32 = handles.iter().map(|h| h.width).sum();
        if total > self.backend.table_cap() {
            return Err(self.table_too_large(total, cond.span));
        }
        let regs: Vec<RegId> = handles.iter().map(|h| h.reg).collect();
        let table = if self.backend.skipping() {
            Vec::new()
        } else {
            self.condition_table(cond, names, &handles, total)?
        };
        let negated: Vec<bool> = table.iter().map(|b| !b).collect();
        self.backend
            .push_control(Control {
                regs: regs.clone(),
                table: Arc::new(table),
            })
            .map_err(|e| e.at(cond.span))?;
        let flow = self.block(then_block);
        self.backend.pop_control();
        flow?;
        if let Some(else_branch) = else_branch {
            self.backend
                .push_control(Control {
                    regs,
                    table: Arc::new(negated),
                })
                .map_err(|e| e.at(cond.span))?;
            let flow = match else_branch {
                Else::Block(b) => self.block(b),
                Else::If(s) => self.stmt(s),
            };
            self.backend.pop_control();
            flow?;
        }
        Ok(Flow::Normal)
    }

    fn condition_table(
        &mut self,
        cond: &'a Expr,
        names: &[String],
        handles: &[QHandle],
        total: u32,
    ) -> Result<Vec<bool>, RuntimeError> {
        let mut table = Vec::with_capacity(1 << total);
        let base = self.overrides.len();
        for p in 0..1u64 << total {
            self.overrides.truncate(base);
            let mut shift = 0;
            for (n, h) in names.iter().zip(handles) {
                let bits = (p >> shift) & ((1u64 << h.width) - 1);
                shift += h.width;
                let v = decode(BasisIndex(bits), h.decoding_type(), self.cfg());
                self.overrides.push((n.clone(), v));
            }
            let v = self.eval(cond);
            let v = match v {
                Ok(v) => v,
                Err(e) => {
                    self.overrides.truncate(base);
                    return Err(e);
                }
            };
            match truth(&v) {
                Ok(b) => table.push(b),
                Err(m) => {
                    self.overrides.truncate(base);
                    return Err(eval_err(m, cond.span));
                }
            }
        }
        self.overrides.truncate(base);
        Ok(table)
    }

    /// Evaluates an expression statement.
    fn effect(&mut self, e: &'a Expr) -> Result<(), RuntimeError> {
        match &e.kind {
            ExprKind::Call { .. } | ExprKind::Method { .. } => {
                self.invoke(e)?;
            }
            _ => {
                self.eval(e)?;
            }
        }
        Ok(())
    }

    /// A quantum handle or classical value for `e`.
    fn place(&mut self, e: &'a Expr) -> Result<Value, RuntimeError> {
        match &e.kind {
            ExprKind::Var(name) => {
                if let Some(v) = self.override_value(name) {
                    return Ok(Value::C(v));
                }
                match self.lookup(name) {
                    Some(Slot { value: Some(v), .. }) => Ok(v.clone()),
                    Some(_) => Err(eval_err(format!("variable `{name}` is used before initialization"), e.span)),
                    None if name == "pi" => Ok(Value::C(CV::Float(std::f64::consts::PI))),
                    None => Err(eval_err(format!("undefined variable `{name}`"), e.span)),
                }
            }
            ExprKind::Index(base, idx) => match self.place(base)? {
                Value::Q(h) => {
                    let i = self.eval(idx)?;
                    match (i, h.elem) {
                        (CV::Int(i), None) if i >= 0 && (i as u64) < u64::from(h.width) => {
                            Ok(Value::Q(QHandle {
                                ty: RhymeType::QBit,
                                reg: h.reg,
                                width: 1,
                                elem: Some(i as u32),
                            }))
                        }
                        (CV::Int(i), None) => Err(eval_err(
                            format!("index {i} out of bounds for length {}", h.width),
                            e.span,
                        )),
                        _ => Err(eval_err("cannot index this quantum value", e.span)),
                    }
                }
                Value::C(b) => {
                    let i = self.eval(idx)?;
                    Ok(Value::C(index(&b, &i).map_err(|m| eval_err(m, e.span))?))
                }
                Value::Measured(n) => Err(not_expressible(&n, e.span)),
            },
            ExprKind::Unary(UnOp::Deref, inner) => {
                let target = match self.place(inner)? {
                    Value::C(CV::Ref(a)) => a,
                    Value::Q(h) if h.ty == RhymeType::QRef => {
                        let p = self
                            .backend
                            .definite_pattern(h.reg)
                            .map_err(|err| err.at(e.span))?
                            .ok_or_else(|| {
                                RuntimeError::new(
                                    RuntimeErrorKind::Quantum,
                                    "dereference requires collapsed qref",
                                )
                                .at(e.span)
                            })?;
                        match decode(p, RhymeType::QRef, self.cfg()) {
                            CV::Ref(a) => a,
                            _ => unreachable!("qref decodes to ref"),
                        }
                    }
                    Value::Measured(n) => return Err(not_expressible(&n, e.span)),
                    _ => return Err(eval_err("only references can be dereferenced", e.span)),
                };
                self.resolve_address(target, e.span)
            }
            _ => Ok(Value::C(self.eval(e)?)),
        }
    }

    fn resolve_address(&self, a: Address, span: Span) -> Result<Value, RuntimeError> {
        let (list, i) = match a {
            Address::Quantum(i) => (&self.prog.quantum_globals, i),
            Address::Classical(i) => (&self.prog.classical_globals, i),
        };
        let name = usize::try_from(i)
            .ok()
            .and_then(|i| list.get(i))
            .ok_or_else(|| eval_err(format!("dangling reference {}", CV::Ref(a)), span))?;
        match self.global(name) {
            Some(Slot { value: Some(v), .. }) => Ok(v.clone()),
            _ => Err(eval_err(
                format!("reference to `{name}`, which is not initialized yet"),
                span,
            )),
        }
    }

    fn override_value(&self, name: &str) -> Option<CV> {
        self.overrides
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.clone())
    }

    fn address_of(&self, name: &str, span: Span) -> Result<Address, RuntimeError> {
        if let Some(i) = self.prog.quantum_globals.iter().position(|n| n == name) {
            if matches!(self.global(name), Some(Slot { ty, .. }) if ty.is_quantum()) {
                return Ok(Address::Quantum(i as u64));
            }
        }
        if let Some(i) = self.prog.classical_globals.iter().position(|n| n == name) {
            return Ok(Address::Classical(i as u64));
        }
        Err(eval_err(format!("`{name}` has no address"), span))
    }

    /// Classical value of `e`.
    fn eval(&mut self, e: &'a Expr) -> Result<CV, RuntimeError> {
        if let Some(v) = literal(e) {
            return Ok(v);
        }
        let wrap = |m: String| eval_err(m, e.span);
        match &e.kind {
            ExprKind::Var(_) | ExprKind::Unary(UnOp::Deref, _) | ExprKind::Index(..) => {
                match self.place(e)? {
                    Value::C(v) => Ok(v),
                    Value::Q(_) => Err(wrap(
                        "quantum value used in a classical expression; assign it to a classical variable to measure it".into(),
                    )),
                    Value::Measured(n) => Err(not_expressible(&n, e.span)),
                }
            }
            ExprKind::Superpose(items) => {
                for item in items {
                    let v = self.eval(item)?;
                    if truth(&v).map_err(wrap)? {
                        return Ok(CV::Bool(true));
                    }
                }
                Ok(CV::Bool(false))
            }
            ExprKind::Binary(BinOp::And, l, r) => {
                if !truth(&self.eval(l)?).map_err(wrap)? {
                    return Ok(CV::Bool(false));
                }
                Ok(CV::Bool(truth(&self.eval(r)?).map_err(wrap)?))
            }
            ExprKind::Binary(op, l, r) => {
                let a = self.eval(l)?;
                let b = self.eval(r)?;
                binary(*op, &a, &b).map_err(wrap)
            }
            ExprKind::Unary(UnOp::Neg, inner) => negate(&self.eval(inner)?).map_err(wrap),
            ExprKind::Unary(UnOp::Not, inner) => Ok(CV::Bool(!truth(&self.eval(inner)?).map_err(wrap)?)),
            ExprKind::Unary(UnOp::AddrOf, inner) => {
                let name = inner.as_var().ok_or_else(|| wrap("`&` needs a variable".into()))?;
                Ok(CV::Ref(self.address_of(name, e.span)?))
            }
            ExprKind::ImagMul(inner) => times_i(&self.eval(inner)?).map_err(wrap),
            ExprKind::Length(base) => match self.place(base)? {
                Value::Q(h) => Ok(CV::Int(i64::from(h.width))),
                Value::C(v) => length(&v).map_err(wrap),
                Value::Measured(n) => Err(not_expressible(&n, e.span)),
            },
            ExprKind::Call { .. } | ExprKind::Method { .. } => self
                .invoke(e)?
                .ok_or_else(|| wrap("expression has no value".into())),
            ExprKind::Static { ty, name, .. } if name == "dimension" => {
                let w = ty
                    .width(self.cfg())
                    .ok_or_else(|| wrap("dimension of a qbit[] type is unknown".into()))?;
                if w >= 63 {
                    return Err(wrap(format!("dimension 2^{w} does not fit an int")));
                }
                Ok(CV::Int(1i64 << w))
            }
            ExprKind::Static { ty, name, .. } => Err(wrap(format!(
                "`{}.{name}()` is only allowed as a quantum initializer",
                ty.keyword()
            ))),
            _ => unreachable!("literals handled above"),
        }
    }

    /// Calls and method calls; returns the result of pure functions.
    fn invoke(&mut self, e: &'a Expr) -> Result<Option<CV>, RuntimeError> {
        let prog = self.prog;
        match &e.kind {
            ExprKind::Call { name, args } => {
                if name == "print" {
                    if self.backend.is_compiler() {
                        return Ok(None);
                    }
                    let v = self.eval(&args[0])?;
                    self.result.printed.push(v.to_string());
                    return Ok(None);
                }
                if let Some(f) = prog.functions.pure.get(name) {
                    let vals = args.iter().map(|a| self.eval(a)).collect::<Result<Vec<_>, _>>()?;
                    return self.call_pure(&f.name, vals, e.span).map(Some);
                }
                if let Some(f) = prog.functions.procedures.get(name) {
                    let args: Vec<&'a Expr> = args.iter().collect();
                    self.call_procedure(f, &args, e.span)?;
                    return Ok(None);
                }
                if prog.functions.natives.contains_key(name) {
                    let b = Builtin::from_name(name).expect("natives are builtins");
                    self.builtin(b, &args[0], &[], e.span)?;
                    return Ok(None);
                }
                if math_arity(name).is_some() {
                    let vals = args.iter().map(|a| self.eval(a)).collect::<Result<Vec<_>, _>>()?;
                    return call_math(name, &vals)
                        .map(Some)
                        .map_err(|m| eval_err(m, e.span));
                }
                Err(eval_err(format!("unknown function `{name}`"), e.span))
            }
            ExprKind::Method {
                receiver,
                name,
                args,
            } => {
                let recv_ty = match self.place(receiver)? {
                    Value::Q(h) => h.ty,
                    Value::C(v) => v.type_of(),
                    Value::Measured(n) => return Err(not_expressible(&n, receiver.span)),
                };
                match prog.functions.resolve_method(name, recv_ty) {
                    Some(MethodTarget::User(f)) => {
                        if prog.functions.procedures.contains_key(&f.name) {
                            let mut all: Vec<&'a Expr> = vec![&**receiver];
                            all.extend(args.iter());
                            self.call_procedure(f, &all, e.span)?;
                            Ok(None)
                        } else {
                            let mut vals = vec![self.eval(receiver)?];
                            for a in args {
                                vals.push(self.eval(a)?);
                            }
                            self.call_pure(&f.name, vals, e.span).map(Some)
                        }
                    }
                    Some(MethodTarget::Builtin(b)) => {
                        self.builtin(b, receiver, args, e.span)?;
                        Ok(None)
                    }
                    None => Err(eval_err(format!("no method `{name}` for {recv_ty}"), e.span)),
                }
            }
            _ => unreachable!("invoke on a call"),
        }
    }

    fn call_pure(&mut self, name: &str, args: Vec<CV>, span: Span) -> Result<CV, RuntimeError> {
        PureEvaluator::new(&self.prog.functions.pure)
            .call(name, args)
            .map_err(|e| e.at(span))
    }

    fn call_procedure(&mut self, f: &'a FnDef, args: &[&'a Expr], span: Span) -> Result<(), RuntimeError> {
        if self.frames.len() > MAX_CALL_DEPTH {
            return Err(eval_err(format!("recursion too deep in `{}`", f.name), span));
        }
        if args.len() != f.params.len() {
            return Err(eval_err(
                format!("`{}` expects {} argument(s), got {}", f.name, f.params.len(), args.len()),
                span,
            ));
        }
        let mut bound = Vec::new();
        for (p, a) in f.params.iter().zip(args) {
            let v = if p.ty.ty.is_quantum() {
                match self.place(a)? {
                    Value::Q(mut h) => {
                        if let RhymeType::QBitArray(_) = p.ty.ty {
                            if h.elem.is_some() {
                                return Err(eval_err("a single qubit cannot be passed as qbit[]", a.span));
                            }
                            h.ty = RhymeType::QBitArray(Some(h.width));
                        } else if p.ty.ty != h.ty {
                            return Err(eval_err(
                                format!("argument `{}` expects {}, found {}", p.name, p.ty.ty, h.ty),
                                a.span,
                            ));
                        }
                        Value::Q(h)
                    }
                    _ => {
                        return Err(eval_err(
                            format!("argument `{}` expects a quantum value", p.name),
                            a.span,
                        ))
                    }
                }
            } else {
                let v = self.eval(a)?;
                Value::C(coerce(v, p.ty.ty).map_err(|m| eval_err(m, a.span))?)
            };
            bound.push((p, v));
        }
        let mut scope = Scope::default();
        for (p, v) in bound {
            let ty = match &v {
                Value::Q(h) => h.ty,
                _ => p.ty.ty,
            };
            scope.slots.push(Slot {
                name: p.name.clone(),
                ty,
                value: Some(v),
            });
        }
        self.frames.push(vec![scope]);
        let body = f.body.as_ref().expect("procedures have bodies");
        let flow = self.block(body);
        let frame = self.frames.pop().expect("pushed above");
        debug_assert!(frame.iter().all(|s| s.regs.is_empty()));
        flow.map(|_| ())
    }

    fn register(&mut self, receiver: &'a Expr) -> Result<QHandle, RuntimeError> {
        match self.place(receiver)? {
            Value::Q(h) if h.elem.is_none() => Ok(h),
            Value::Q(_) => Err(eval_err("this operation needs a whole quantum variable", receiver.span)),
            _ => Err(eval_err("expected a quantum variable", receiver.span)),
        }
    }

    fn qubit(&mut self, e: &'a Expr) -> Result<(RegId, u32), RuntimeError> {
        match self.place(e)? {
            Value::Q(QHandle { reg, elem: Some(b), .. }) => Ok((reg, b)),
            Value::Q(QHandle { reg, width: 1, .. }) => Ok((reg, 0)),
            _ => Err(eval_err("gate operands must be qubits", e.span)),
        }
    }

    fn table_width(&self, h: &QHandle, span: Span) -> Result<(), RuntimeError> {
        let cap = self.backend.table_cap();
        if h.width > cap {
            return Err(self.table_too_large(h.width, span));
        }
        Ok(())
    }

    fn table_too_large(&self, width: u32, span: Span) -> RuntimeError {
        let cap = self.backend.table_cap();
        let (kind, what) = if self.backend.is_compiler() {
            (RuntimeErrorKind::Synthesis, "synthesis")
        } else {
            (RuntimeErrorKind::Capacity, "enumeration")
        };
        RuntimeError::new(
            kind,
            format!("{what} table too large: a {width}-qubit classical function table exceeds the {cap}-qubit cap"),
        )
        .at(span)
    }

    fn fn_name(e: &Expr) -> Result<&str, RuntimeError> {
        e.as_var().ok_or_else(|| eval_err("expected a function name", e.span))
    }

    fn builtin(&mut self, b: Builtin, receiver: &'a Expr, args: &'a [Expr], span: Span) -> Result<(), RuntimeError> {
        if b.is_gate() {
            let mut qs = Vec::new();
            for a in args {
                qs.push(self.qubit(a)?);
            }
            qs.push(self.qubit(receiver)?);
            let gate = match b {
                Builtin::H => Gate::H,
                Builtin::X => Gate::X,
                Builtin::Z => Gate::Z,
                Builtin::Cnot => Gate::Cnot,
                _ => Gate::Ccnot,
            };
            return self.backend.gate(gate, &qs).map_err(|e| e.at(span));
        }
        let h = self.register(receiver)?;
        let r = match b {
            Builtin::AddPhase => {
                let f = Self::fn_name(&args[0])?;
                let n = match self.eval(&args[1])? {
                    CV::Int(n) if n >= 1 => n,
                    other => return Err(eval_err(format!("phase modulus must be a positive int, got {other}"), args[1].span)),
                };
                let t = self.phase(TableKey::Phase(f.to_string(), h.decoding_type(), h.width, n), &h, span)?;
                self.backend.phase(h.reg, &t)
            }
            Builtin::ApplyOracle => {
                let f = Self::fn_name(&args[0])?;
                let t = self.phase(TableKey::Oracle(f.to_string(), h.decoding_type(), h.width), &h, span)?;
                self.backend.phase(h.reg, &t)
            }
            Builtin::Bipartite => {
                let split = Self::fn_name(&args[0])?;
                let pair = Self::fn_name(&args[1])?;
                let matrix = if args.len() == 6 {
                    let mut u = [Complex64::new(0.0, 0.0); 4];
                    for (slot, a) in u.iter_mut().zip(&args[2..]) {
                        *slot = match coerce(self.eval(a)?, RhymeType::Complex).map_err(|m| eval_err(m, a.span))? {
                            CV::Complex(re, im) => Complex64::new(re, im),
                            _ => unreachable!("coerced to complex"),
                        };
                    }
                    [[u[0], u[1]], [u[2], u[3]]]
                } else {
                    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                    [[s, s], [s, -s]]
                };
                let key = TableKey::Pairs(split.to_string(), pair.to_string(), h.decoding_type(), h.width);
                let pairs = self.pairs(key, &h, span)?;
                self.backend.bipartite(h.reg, &pairs, matrix)
            }
            Builtin::InvertAboutMean => self.backend.invert_about_mean(h.reg),
            Builtin::Increment => self.backend.add_constant(h.reg, 1),
            Builtin::Decrement => self.backend.add_constant(h.reg, -1),
            _ => unreachable!("gates handled above"),
        };
        r.map_err(|e| e.at(span))
    }

    fn phase(&mut self, key: TableKey, h: &QHandle, span: Span) -> Result<Arc<PhaseTable>, RuntimeError> {
        if self.backend.skipping() {
            return Ok(Arc::new(PhaseTable::oracle(Vec::new())));
        }
        if let Some(Table::Phase(t)) = self.tables.get(&key) {
            return Ok(t.clone());
        }
        self.table_width(h, span)?;
        let cfg = self.cfg();
        let mut ev = PureEvaluator::new(&self.prog.functions.pure);
        let t = match &key {
            TableKey::Phase(f, ty, w, n) => tables::phase_table(&mut ev, f, *ty, *w, cfg, *n),
            TableKey::Oracle(f, ty, w) => {
                tables::true_patterns(&mut ev, f, *ty, *w, cfg).map(PhaseTable::oracle)
            }
            TableKey::Pairs(..) => unreachable!("pair tables use `pairs`"),
        }
        .map_err(|e| e.at(span))?;
        let t = Arc::new(t);
        self.tables.insert(key, Table::Phase(t.clone()));
        Ok(t)
    }

    fn pairs(&mut self, key: TableKey, h: &QHandle, span: Span) -> Result<Arc<Vec<(u64, u64)>>, RuntimeError> {
        if self.backend.skipping() {
            return Ok(Arc::new(Vec::new()));
        }
        if let Some(Table::Pairs(t)) = self.tables.get(&key) {
            return Ok(t.clone());
        }
        self.table_width(h, span)?;
        let TableKey::Pairs(split, pair, ty, w) = &key else {
            unreachable!("pair key")
        };
        let mut ev = PureEvaluator::new(&self.prog.functions.pure);
        let b = tables::bipartition(&mut ev, split, pair, *ty, *w, self.cfg()).map_err(|e| e.at(span))?;
        if let Some(w) = &b.wrapped {
            self.result
                .warnings
                .push(Diagnostic::warning(format!("integer result wrapped: {w}"), span));
        }
        let t = Arc::new(b.pairs);
        self.tables.insert(key, Table::Pairs(t.clone()));
        Ok(t)
    }
}
