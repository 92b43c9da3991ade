//! Classical values in motion: operators, math builtins, coercions, and an
//! evaluator for pure (classical-only) functions.

use std::collections::HashMap;

use crate::frontend::ast::{BinOp, Block, Else, Expr, ExprKind, FnDef, Stmt, StmtKind, UnOp};
use crate::types::{ClassicalValue as CV, RhymeType};

use super::{RuntimeError, RuntimeErrorKind};

/// Step budget for one top-level call of a pure function.
pub const DEFAULT_FUEL: u64 = 1_000_000;

/// Math functions callable from any classical expression, with arity.
pub const MATH_BUILTINS: &[(&str, usize)] = &[
    ("sqrt", 1),
    ("sin", 1),
    ("cos", 1),
    ("tan", 1),
    ("exp", 1),
    ("log", 1),
    ("abs", 1),
    ("floor", 1),
    ("ceil", 1),
    ("round", 1),
    ("pow", 2),
];

pub fn math_arity(name: &str) -> Option<usize> {
    MATH_BUILTINS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, a)| *a)
}

/// Result type of a math builtin given its argument types.
pub fn math_result_type(name: &str, args: &[RhymeType]) -> RhymeType {
    match name {
        "floor" | "ceil" | "round" => RhymeType::Int,
        "abs" if args.first() == Some(&RhymeType::Int) => RhymeType::Int,
        _ => RhymeType::Float,
    }
}

fn real(v: &CV) -> Option<f64> {
    match v {
        CV::Bit(b) => Some(f64::from(*b)),
        CV::Int(i) => Some(*i as f64),
        CV::Float(x) => Some(*x),
        _ => None,
    }
}

fn to_int(x: f64) -> Result<CV, String> {
    if x.is_finite() && x.abs() < 9.0e18 {
        Ok(CV::Int(x as i64))
    } else {
        Err(format!("{x} does not fit an integer"))
    }
}

fn finite(x: f64, what: &str) -> Result<CV, String> {
    if x.is_finite() {
        Ok(CV::Float(x))
    } else {
        Err(format!("{what} produced a non-finite result"))
    }
}

pub fn call_math(name: &str, args: &[CV]) -> Result<CV, String> {
    if let ("abs", [CV::Complex(re, im)]) = (name, args) {
        return Ok(CV::Float(re.hypot(*im)));
    }
    if let ("abs", [CV::Int(i)]) = (name, args) {
        return i
            .checked_abs()
            .map(CV::Int)
            .ok_or_else(|| "integer overflow in abs".to_string());
    }
    let xs: Vec<f64> = args
        .iter()
        .map(|a| real(a).ok_or_else(|| format!("{name} expects a real number, found {}", a.type_of())))
        .collect::<Result<_, _>>()?;
    match (name, xs.as_slice()) {
        ("sqrt", [x]) if *x < 0.0 => Err(format!("sqrt of negative number {x}")),
        ("sqrt", [x]) => finite(x.sqrt(), name),
        ("sin", [x]) => finite(x.sin(), name),
        ("cos", [x]) => finite(x.cos(), name),
        ("tan", [x]) => finite(x.tan(), name),
        ("exp", [x]) => finite(x.exp(), name),
        ("log", [x]) if *x <= 0.0 => Err(format!("log of non-positive number {x}")),
        ("log", [x]) => finite(x.ln(), name),
        ("abs", [x]) => finite(x.abs(), name),
        ("floor", [x]) => to_int(x.floor()),
        ("ceil", [x]) => to_int(x.ceil()),
        ("round", [x]) => to_int(x.round()),
        ("pow", [x, y]) => finite(x.powf(*y), name),
        _ => Err(format!("unknown function `{name}`")),
    }
}

/// Converts `v` for storage in a variable of type `ty`.
pub fn coerce(v: CV, ty: RhymeType) -> Result<CV, String> {
    let target = ty.classical_counterpart();
    let mismatch = |v: &CV| format!("expected {target}, found {}", v.type_of());
    Ok(match (target, v) {
        (RhymeType::Bit, CV::Bit(b)) => CV::Bit(b),
        (RhymeType::Bit, CV::Int(i)) if i == 0 || i == 1 => CV::Bit(i as u8),
        (RhymeType::Bit, CV::Int(i)) => return Err(format!("{i} is not a bit value")),
        (RhymeType::Int, CV::Int(i)) => CV::Int(i),
        (RhymeType::Int, CV::Bit(b)) => CV::Int(i64::from(b)),
        (RhymeType::Float, v) => match real(&v) {
            Some(x) => CV::Float(x),
            None => return Err(mismatch(&v)),
        },
        (RhymeType::Complex, CV::Complex(re, im)) => CV::Complex(re, im),
        (RhymeType::Complex, v) => match real(&v) {
            Some(x) => CV::Complex(x, 0.0),
            None => return Err(mismatch(&v)),
        },
        (RhymeType::BitArray(n), CV::Bits(bits)) => {
            if let Some(n) = n {
                if bits.len() != n as usize {
                    return Err(format!(
                        "expected bit[{n}], found bit array of length {}",
                        bits.len()
                    ));
                }
            }
            CV::Bits(bits)
        }
        (RhymeType::Char, CV::Char(c)) => CV::Char(c),
        (RhymeType::Str, CV::Str(s)) => CV::Str(s),
        (RhymeType::Bool, CV::Bool(b)) => CV::Bool(b),
        (RhymeType::Ref, CV::Ref(a)) => CV::Ref(a),
        (_, v) => return Err(mismatch(&v)),
    })
}

/// Whether a value of static type `from` may be stored as `to` (both classical).
pub fn assignable(from: RhymeType, to: RhymeType) -> bool {
    use RhymeType::*;
    match (from, to) {
        (a, b) if a == b => true,
        (Int, Bit) | (Bit, Int) => true,
        (Bit | Int, Float) => true,
        (Bit | Int | Float, Complex) => true,
        (BitArray(_), BitArray(_)) => true,
        _ => false,
    }
}

enum Num {
    I(i64),
    F(f64),
    C(f64, f64),
}

fn num(v: &CV) -> Option<Num> {
    Some(match v {
        CV::Bit(b) => Num::I(i64::from(*b)),
        CV::Int(i) => Num::I(*i),
        CV::Float(x) => Num::F(*x),
        CV::Complex(re, im) => Num::C(*re, *im),
        _ => return None,
    })
}

fn as_complex(n: &Num) -> (f64, f64) {
    match n {
        Num::I(i) => (*i as f64, 0.0),
        Num::F(x) => (*x, 0.0),
        Num::C(re, im) => (*re, *im),
    }
}

fn as_real(n: &Num) -> Option<f64> {
    match n {
        Num::I(i) => Some(*i as f64),
        Num::F(x) => Some(*x),
        Num::C(..) => None,
    }
}

fn complex_result(re: f64, im: f64) -> Result<CV, String> {
    if re.is_finite() && im.is_finite() {
        Ok(CV::Complex(re, im))
    } else {
        Err("complex arithmetic produced a non-finite result".into())
    }
}

fn numeric(op: BinOp, a: Num, b: Num) -> Result<CV, String> {
    use BinOp::*;
    match (&a, &b) {
        (Num::I(x), Num::I(y)) => {
            let (x, y) = (*x, *y);
            return match op {
                Add => Ok(CV::Int(x.wrapping_add(y))),
                Sub => Ok(CV::Int(x.wrapping_sub(y))),
                Mul => Ok(CV::Int(x.wrapping_mul(y))),
                Div if y == 0 => Err("division by zero".into()),
                Div => Ok(CV::Float(x as f64 / y as f64)),
                Rem if y == 0 => Err("division by zero".into()),
                Rem => Ok(CV::Int(x.wrapping_rem(y))),
                Eq => Ok(CV::Bool(x == y)),
                Ne => Ok(CV::Bool(x != y)),
                Lt => Ok(CV::Bool(x < y)),
                Gt => Ok(CV::Bool(x > y)),
                Le => Ok(CV::Bool(x <= y)),
                Ge => Ok(CV::Bool(x >= y)),
                And => Err("operator `&&` needs bool operands".into()),
            };
        }
        (Num::C(..), _) | (_, Num::C(..)) => {}
        _ => {
            let (x, y) = (as_real(&a).unwrap(), as_real(&b).unwrap());
            return match op {
                Add => finite(x + y, "addition"),
                Sub => finite(x - y, "subtraction"),
                Mul => finite(x * y, "multiplication"),
                Div | Rem if y == 0.0 => Err("division by zero".into()),
                Div => finite(x / y, "division"),
                Rem => finite(x % y, "remainder"),
                Eq => Ok(CV::Bool(x == y)),
                Ne => Ok(CV::Bool(x != y)),
                Lt => Ok(CV::Bool(x < y)),
                Gt => Ok(CV::Bool(x > y)),
                Le => Ok(CV::Bool(x <= y)),
                Ge => Ok(CV::Bool(x >= y)),
                And => Err("operator `&&` needs bool operands".into()),
            };
        }
    }
    let ((ar, ai), (br, bi)) = (as_complex(&a), as_complex(&b));
    match op {
        Add => complex_result(ar + br, ai + bi),
        Sub => complex_result(ar - br, ai - bi),
        Mul => complex_result(ar * br - ai * bi, ar * bi + ai * br),
        Div => {
            let d = br * br + bi * bi;
            if d == 0.0 {
                return Err("division by zero".into());
            }
            complex_result((ar * br + ai * bi) / d, (ai * br - ar * bi) / d)
        }
        Eq => Ok(CV::Bool(ar == br && ai == bi)),
        Ne => Ok(CV::Bool(ar != br || ai != bi)),
        _ => Err(format!("operator `{}` is not defined for complex numbers", op.symbol())),
    }
}

fn ordering(op: BinOp, o: std::cmp::Ordering) -> Option<CV> {
    use std::cmp::Ordering::*;
    Some(CV::Bool(match op {
        BinOp::Eq => o == Equal,
        BinOp::Ne => o != Equal,
        BinOp::Lt => o == Less,
        BinOp::Gt => o == Greater,
        BinOp::Le => o != Greater,
        BinOp::Ge => o != Less,
        _ => return None,
    }))
}

/// Applies a binary operator other than `&&` (which short-circuits).
pub fn binary(op: BinOp, l: &CV, r: &CV) -> Result<CV, String> {
    if let (Some(a), Some(b)) = (num(l), num(r)) {
        return numeric(op, a, b);
    }
    let undefined = || {
        format!(
            "operator `{}` is not defined for {} and {}",
            op.symbol(),
            l.type_of(),
            r.type_of()
        )
    };
    match (l, r) {
        (CV::Char(a), CV::Char(b)) => ordering(op, a.cmp(b)).ok_or_else(undefined),
        (CV::Str(a), CV::Str(b)) if op == BinOp::Add => Ok(CV::Str(format!("{a}{b}"))),
        (CV::Str(a), CV::Str(b)) => ordering(op, a.cmp(b)).ok_or_else(undefined),
        (CV::Str(a), CV::Char(c)) if op == BinOp::Add => {
            Ok(CV::Str(format!("{a}{}", *c as char)))
        }
        (CV::Char(c), CV::Int(d)) if matches!(op, BinOp::Add | BinOp::Sub) => {
            let code = if op == BinOp::Add {
                i64::from(*c) + d
            } else {
                i64::from(*c) - d
            };
            if (0..128).contains(&code) {
                Ok(CV::Char(code as u8))
            } else {
                Err(format!("character code {code} is outside 7-bit ASCII"))
            }
        }
        (CV::Bool(a), CV::Bool(b)) if matches!(op, BinOp::Eq | BinOp::Ne) => {
            Ok(CV::Bool((a == b) == (op == BinOp::Eq)))
        }
        (CV::Ref(a), CV::Ref(b)) if matches!(op, BinOp::Eq | BinOp::Ne) => {
            Ok(CV::Bool((a == b) == (op == BinOp::Eq)))
        }
        (CV::Bits(a), CV::Bits(b)) if matches!(op, BinOp::Eq | BinOp::Ne) => {
            Ok(CV::Bool((a == b) == (op == BinOp::Eq)))
        }
        _ => Err(undefined()),
    }
}

/// Static result type of a binary operator, or `None` if undefined.
pub fn binary_type(op: BinOp, l: RhymeType, r: RhymeType) -> Option<RhymeType> {
    use RhymeType::*;
    let rank = |t: RhymeType| match t {
        Bit | Int => Some(0),
        Float => Some(1),
        Complex => Some(2),
        _ => None,
    };
    if let (Some(a), Some(b)) = (rank(l), rank(r)) {
        let top = a.max(b);
        return match op {
            BinOp::And => None,
            _ if op.is_comparison() => {
                if top == 2 && !matches!(op, BinOp::Eq | BinOp::Ne) {
                    None
                } else {
                    Some(Bool)
                }
            }
            BinOp::Div => Some(if top == 2 { Complex } else { Float }),
            BinOp::Rem if top == 2 => None,
            _ => Some([Int, Float, Complex][top]),
        };
    }
    match (op, l, r) {
        (BinOp::And, Bool, Bool) => Some(Bool),
        (o, Char, Char) | (o, Str, Str) if o.is_comparison() => Some(Bool),
        (BinOp::Add, Str, Str | Char) => Some(Str),
        (BinOp::Add | BinOp::Sub, Char, Int) => Some(Char),
        (BinOp::Eq | BinOp::Ne, Bool, Bool)
        | (BinOp::Eq | BinOp::Ne, Ref, Ref)
        | (BinOp::Eq | BinOp::Ne, BitArray(_), BitArray(_)) => Some(Bool),
        _ => None,
    }
}

pub fn negate(v: &CV) -> Result<CV, String> {
    match v {
        CV::Bit(b) => Ok(CV::Int(-i64::from(*b))),
        CV::Int(i) => Ok(CV::Int(i.wrapping_neg())),
        CV::Float(x) => Ok(CV::Float(-x)),
        CV::Complex(re, im) => Ok(CV::Complex(-re, -im)),
        other => Err(format!("cannot negate {}", other.type_of())),
    }
}

pub fn truth(v: &CV) -> Result<bool, String> {
    match v {
        CV::Bool(b) => Ok(*b),
        other => Err(format!("expected bool, found {}", other.type_of())),
    }
}

/// Value of a literal or `pi`; `None` for anything else.
pub fn literal(e: &Expr) -> Option<CV> {
    Some(match &e.kind {
        ExprKind::Int(i) => CV::Int(*i),
        ExprKind::Float(x) => CV::Float(*x),
        ExprKind::Imag(x) => CV::Complex(0.0, *x),
        ExprKind::Char(c) => CV::Char(*c),
        ExprKind::Str(s) => CV::Str(s.clone()),
        ExprKind::Bool(b) => CV::Bool(*b),
        _ => return None,
    })
}

pub fn times_i(v: &CV) -> Result<CV, String> {
    match v {
        CV::Bit(_) | CV::Int(_) | CV::Float(_) => Ok(CV::Complex(0.0, real(v).unwrap())),
        CV::Complex(re, im) => Ok(CV::Complex(-im, *re)),
        other => Err(format!("cannot multiply {} by i", other.type_of())),
    }
}

pub fn index(base: &CV, i: &CV) -> Result<CV, String> {
    let i = match i {
        CV::Int(i) => *i,
        CV::Bit(b) => i64::from(*b),
        other => return Err(format!("index must be int, found {}", other.type_of())),
    };
    let oob = |len: usize| format!("index {i} out of bounds for length {len}");
    match base {
        CV::Bits(bits) => usize::try_from(i)
            .ok()
            .and_then(|i| bits.get(i))
            .map(|b| CV::Bit(*b))
            .ok_or_else(|| oob(bits.len())),
        CV::Str(s) => usize::try_from(i)
            .ok()
            .and_then(|i| s.as_bytes().get(i))
            .map(|c| CV::Char(*c))
            .ok_or_else(|| oob(s.len())),
        other => Err(format!("cannot index {}", other.type_of())),
    }
}

pub fn length(v: &CV) -> Result<CV, String> {
    match v {
        CV::Bits(b) => Ok(CV::Int(b.len() as i64)),
        CV::Str(s) => Ok(CV::Int(s.len() as i64)),
        other => Err(format!("{} has no length", other.type_of())),
    }
}

enum Flow {
    Normal,
    Return(Option<CV>),
}

/// Executes pure functions over classical values with a step budget.
pub struct PureEvaluator<'p> {
    functions: &'p HashMap<String, FnDef>,
    fuel: u64,
    budget: u64,
    depth: u32,
    env: Vec<(&'p str, RhymeType, Option<CV>)>,
}

const MAX_DEPTH: u32 = 256;

impl<'p> PureEvaluator<'p> {
    pub fn new(functions: &'p HashMap<String, FnDef>) -> Self {
        Self::with_budget(functions, DEFAULT_FUEL)
    }

    pub fn with_budget(functions: &'p HashMap<String, FnDef>, budget: u64) -> Self {
        PureEvaluator {
            functions,
            fuel: budget,
            budget,
            depth: 0,
            env: Vec::new(),
        }
    }

    fn err(&self, msg: impl Into<String>, e: &Expr) -> RuntimeError {
        RuntimeError::new(RuntimeErrorKind::Evaluation, msg).at(e.span)
    }

    fn tick(&mut self, span: crate::frontend::Span) -> Result<(), RuntimeError> {
        if self.fuel == 0 {
            return Err(RuntimeError::new(
                RuntimeErrorKind::Evaluation,
                "classical function did not terminate within budget",
            )
            .at(span));
        }
        self.fuel -= 1;
        Ok(())
    }

    /// Calls function `name` with a fresh budget.
    pub fn call(&mut self, name: &str, args: Vec<CV>) -> Result<CV, RuntimeError> {
        self.fuel = self.budget;
        self.invoke(name, args, None)
    }

    fn invoke(
        &mut self,
        name: &str,
        args: Vec<CV>,
        site: Option<&Expr>,
    ) -> Result<CV, RuntimeError> {
        let functions = self.functions;
        let f = functions.get(name).ok_or_else(|| {
            let e = RuntimeError::new(RuntimeErrorKind::Evaluation, format!("unknown function `{name}`"));
            match site {
                Some(s) => e.at(s.span),
                None => e,
            }
        })?;
        if args.len() != f.params.len() {
            return Err(RuntimeError::new(
                RuntimeErrorKind::Evaluation,
                format!("`{name}` expects {} arguments, got {}", f.params.len(), args.len()),
            )
            .at(f.span));
        }
        if self.depth >= MAX_DEPTH {
            return Err(RuntimeError::new(
                RuntimeErrorKind::Evaluation,
                format!("recursion too deep in `{name}`"),
            )
            .at(f.span));
        }
        let base = self.env.len();
        for (p, a) in f.params.iter().zip(args) {
            let v = coerce(a, p.ty.ty).map_err(|m| {
                RuntimeError::new(RuntimeErrorKind::Evaluation, format!("argument `{}`: {m}", p.name))
                    .at(p.span)
            })?;
            self.env.push((&p.name, p.ty.ty, Some(v)));
        }
        self.depth += 1;
        let body = f.body.as_ref().expect("pure functions have bodies");
        let flow = self.block(body);
        self.depth -= 1;
        self.env.truncate(base);
        match (flow?, &f.ret) {
            (Flow::Return(Some(v)), Some(ret)) => coerce(v, ret.ty).map_err(|m| {
                RuntimeError::new(
                    RuntimeErrorKind::Evaluation,
                    format!("`{name}` returned a bad value: {m}"),
                )
                .at(ret.span)
            }),
            (_, Some(_)) => Err(RuntimeError::new(
                RuntimeErrorKind::Evaluation,
                format!("function `{name}` ended without returning a value"),
            )
            .at(f.span)),
            (_, None) => Ok(CV::Bool(false)),
        }
    }

    fn block(&mut self, b: &'p Block) -> Result<Flow, RuntimeError> {
        let mark = self.env.len();
        let mut flow = Flow::Normal;
        for s in &b.stmts {
            flow = self.stmt(s)?;
            if matches!(flow, Flow::Return(_)) {
                break;
            }
        }
        self.env.truncate(mark);
        Ok(flow)
    }

    fn lookup(&mut self, name: &str) -> Option<&mut (&'p str, RhymeType, Option<CV>)> {
        self.env.iter_mut().rev().find(|(n, _, _)| *n == name)
    }

    fn stmt(&mut self, s: &'p Stmt) -> Result<Flow, RuntimeError> {
        self.tick(s.span)?;
        match &s.kind {
            StmtKind::Decl { ty, name, init } => {
                let v = match init {
                    Some(e) => {
                        let v = self.expr(e)?;
                        Some(coerce(v, ty.ty).map_err(|m| self.err(m, e))?)
                    }
                    None => None,
                };
                self.env.push((name, ty.ty, v));
            }
            StmtKind::Assign { target, value } => {
                let v = self.expr(value)?;
                self.assign(target, v)?;
            }
            StmtKind::Step { target, delta } => {
                let cur = self.expr(target)?;
                let next = binary(BinOp::Add, &cur, &CV::Int(*delta)).map_err(|m| self.err(m, target))?;
                self.assign(target, next)?;
            }
            StmtKind::Expr(e) => {
                self.expr(e)?;
            }
            StmtKind::If {
                cond,
                then_block,
                else_branch,
            } => {
                let c = self.expr(cond)?;
                if truth(&c).map_err(|m| self.err(m, cond))? {
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
                let mark = self.env.len();
                if let Some(i) = init {
                    self.stmt(i)?;
                }
                loop {
                    if let Some(c) = cond {
                        let v = self.expr(c)?;
                        if !truth(&v).map_err(|m| self.err(m, c))? {
                            break;
                        }
                    }
                    if let Flow::Return(v) = self.block(body)? {
                        self.env.truncate(mark);
                        return Ok(Flow::Return(v));
                    }
                    if let Some(st) = step {
                        self.stmt(st)?;
                    }
                    self.tick(s.span)?;
                }
                self.env.truncate(mark);
            }
            StmtKind::Return(v) => {
                let v = match v {
                    Some(e) => Some(self.expr(e)?),
                    None => None,
                };
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn assign(&mut self, target: &'p Expr, v: CV) -> Result<(), RuntimeError> {
        match &target.kind {
            ExprKind::Var(name) => {
                let err = |m: String| RuntimeError::new(RuntimeErrorKind::Evaluation, m).at(target.span);
                let slot = self
                    .lookup(name)
                    .ok_or_else(|| err(format!("undefined variable `{name}`")))?;
                let v = coerce(v, slot.1).map_err(err)?;
                slot.2 = Some(v);
                Ok(())
            }
            ExprKind::Index(base, idx) => {
                let i = self.expr(idx)?;
                let name = base
                    .as_var()
                    .ok_or_else(|| self.err("only variables can be indexed for assignment", target))?;
                let bit = coerce(v, RhymeType::Bit).map_err(|m| self.err(m, target))?;
                let err = |m: String| RuntimeError::new(RuntimeErrorKind::Evaluation, m).at(target.span);
                let slot = self
                    .lookup(name)
                    .ok_or_else(|| err(format!("undefined variable `{name}`")))?;
                match (&mut slot.2, i, bit) {
                    (Some(CV::Bits(bits)), CV::Int(i), CV::Bit(b)) => {
                        let len = bits.len();
                        let cell = usize::try_from(i)
                            .ok()
                            .and_then(|i| bits.get_mut(i))
                            .ok_or_else(|| err(format!("index {i} out of bounds for length {len}")))?;
                        *cell = b;
                        Ok(())
                    }
                    _ => Err(err("indexed assignment needs an initialized bit array and int index".into())),
                }
            }
            _ => Err(self.err("invalid assignment target", target)),
        }
    }

    pub fn expr(&mut self, e: &'p Expr) -> Result<CV, RuntimeError> {
        if let Some(v) = literal(e) {
            return Ok(v);
        }
        let wrap = |m: String| RuntimeError::new(RuntimeErrorKind::Evaluation, m).at(e.span);
        match &e.kind {
            ExprKind::Var(name) => match self.lookup(name) {
                Some((_, _, Some(v))) => Ok(v.clone()),
                Some((_, _, None)) => Err(wrap(format!("variable `{name}` is used before initialization"))),
                None if name == "pi" => Ok(CV::Float(std::f64::consts::PI)),
                None => Err(wrap(format!("undefined variable `{name}`"))),
            },
            ExprKind::Superpose(items) => {
                for item in items {
                    let v = self.expr(item)?;
                    if truth(&v).map_err(wrap)? {
                        return Ok(CV::Bool(true));
                    }
                }
                Ok(CV::Bool(false))
            }
            ExprKind::Binary(BinOp::And, l, r) => {
                let a = self.expr(l)?;
                if !truth(&a).map_err(wrap)? {
                    return Ok(CV::Bool(false));
                }
                let b = self.expr(r)?;
                Ok(CV::Bool(truth(&b).map_err(wrap)?))
            }
            ExprKind::Binary(op, l, r) => {
                let a = self.expr(l)?;
                let b = self.expr(r)?;
                binary(*op, &a, &b).map_err(wrap)
            }
            ExprKind::Unary(UnOp::Neg, inner) => negate(&self.expr(inner)?).map_err(wrap),
            ExprKind::Unary(UnOp::Not, inner) => {
                Ok(CV::Bool(!truth(&self.expr(inner)?).map_err(wrap)?))
            }
            ExprKind::Unary(op, _) => Err(wrap(format!(
                "operator `{}` is not allowed in a pure function",
                op.symbol()
            ))),
            ExprKind::ImagMul(inner) => times_i(&self.expr(inner)?).map_err(wrap),
            ExprKind::Call { name, args } => {
                self.tick(e.span)?;
                let vals = args
                    .iter()
                    .map(|a| self.expr(a))
                    .collect::<Result<Vec<_>, _>>()?;
                if math_arity(name).is_some() && !self.functions.contains_key(name) {
                    return call_math(name, &vals).map_err(wrap);
                }
                self.invoke(name, vals, Some(e))
            }
            ExprKind::Index(base, idx) => {
                let b = self.expr(base)?;
                let i = self.expr(idx)?;
                index(&b, &i).map_err(wrap)
            }
            ExprKind::Length(base) => length(&self.expr(base)?).map_err(wrap),
            ExprKind::Method { name, .. } => Err(wrap(format!(
                "method `{name}` is not available in a pure function"
            ))),
            ExprKind::Static { ty, name, .. } => Err(wrap(format!(
                "`{}.{name}` is not available in a pure function",
                ty.keyword()
            ))),
            _ => unreachable!("literals handled above"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;

    fn functions(src: &str) -> HashMap<String, FnDef> {
        parse_source(src)
            .unwrap()
            .functions()
            .map(|f| (f.name.clone(), f.clone()))
            .collect()
    }

    const SHIFT: &str = "def shift(bit b) -> bit {\n  if (b == 1) {\n    return 1;\n  } else {\n    return 0;\n  }\n}\n";
    const PAIR: &str = "def pair(int i) -> int {\n  if (i % 2 == 0) {\n    return i + 1;\n  } else {\n    return i - 1;\n  }\n}\n";
    const ORACLE: &str = "def oracle(string s) -> bool {\n  if (s == \"ABC\") {\n    return true;\n  } else {\n    return false;\n  }\n}\n";

    #[test]
    fn example_functions_evaluate() {
        let fs = functions(&format!("{SHIFT}{PAIR}{ORACLE}"));
        let mut ev = PureEvaluator::new(&fs);
        assert_eq!(ev.call("shift", vec![CV::Bit(1)]).unwrap(), CV::Bit(1));
        assert_eq!(ev.call("shift", vec![CV::Bit(0)]).unwrap(), CV::Bit(0));
        assert_eq!(ev.call("pair", vec![CV::Int(80)]).unwrap(), CV::Int(81));
        assert_eq!(ev.call("pair", vec![CV::Int(81)]).unwrap(), CV::Int(80));
        assert_eq!(ev.call("oracle", vec![CV::Str("ABC".into())]).unwrap(), CV::Bool(true));
        assert_eq!(ev.call("oracle", vec![CV::Str(String::new())]).unwrap(), CV::Bool(false));
    }

    #[test]
    fn fuel_stops_runaway_loops() {
        let fs = functions("def spin(int n) -> int { for (int i = 0; i < 1; i = 0) { n++; } return n; }");
        let err = PureEvaluator::new(&fs).call("spin", vec![CV::Int(0)]).unwrap_err();
        assert!(err.message.contains("did not terminate within budget"), "{err}");
    }

    #[test]
    fn loops_and_recursion() {
        let fs = functions(
            "def fact(int n) -> int { if (n <= 1) { return 1; } else { return n * fact(n - 1); } }\n\
             def sum(int n) -> int { int s = 0; for (int i = 1; i <= n; i++) { s = s + i; } return s; }",
        );
        let mut ev = PureEvaluator::new(&fs);
        assert_eq!(ev.call("fact", vec![CV::Int(10)]).unwrap(), CV::Int(3_628_800));
        assert_eq!(ev.call("sum", vec![CV::Int(100)]).unwrap(), CV::Int(5050));
    }

    #[test]
    fn missing_return_and_division_errors() {
        let fs = functions("def f(int n) -> int { if (n > 0) { return 1; } }\ndef g(int n) -> float { return 1 / n; }");
        let mut ev = PureEvaluator::new(&fs);
        assert!(ev.call("f", vec![CV::Int(0)]).unwrap_err().message.contains("without returning"));
        assert_eq!(ev.call("g", vec![CV::Int(4)]).unwrap(), CV::Float(0.25));
        assert!(ev.call("g", vec![CV::Int(0)]).unwrap_err().message.contains("division by zero"));
    }

    #[test]
    fn operator_semantics() {
        assert_eq!(binary(BinOp::Div, &CV::Int(1), &CV::Int(2)).unwrap(), CV::Float(0.5));
        assert_eq!(binary(BinOp::Rem, &CV::Int(-3), &CV::Int(2)).unwrap(), CV::Int(-1));
        assert_eq!(
            binary(BinOp::Add, &CV::Float(0.6), &CV::Complex(0.0, 0.8)).unwrap(),
            CV::Complex(0.6, 0.8)
        );
        assert_eq!(binary(BinOp::Eq, &CV::Bit(1), &CV::Int(1)).unwrap(), CV::Bool(true));
        assert_eq!(binary(BinOp::Add, &CV::Char(b'A'), &CV::Int(1)).unwrap(), CV::Char(b'B'));
        assert!(binary(BinOp::Lt, &CV::Complex(1.0, 0.0), &CV::Int(2)).is_err());
        assert_eq!(call_math("ceil", &[CV::Float(1137.2)]).unwrap(), CV::Int(1138));
        assert_eq!(coerce(CV::Int(1), RhymeType::Bit).unwrap(), CV::Bit(1));
        assert!(coerce(CV::Int(2), RhymeType::Bit).is_err());
        assert_eq!(binary_type(BinOp::Div, RhymeType::Int, RhymeType::Int), Some(RhymeType::Float));
        assert_eq!(binary_type(BinOp::Lt, RhymeType::Complex, RhymeType::Int), None);
    }
}
