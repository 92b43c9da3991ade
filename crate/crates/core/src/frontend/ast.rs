//! Surface syntax tree. Every node carries the span of the source it came from.

use super::diagnostic::Span;
use crate::types::RhymeType;

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Stmt(Stmt),
    Fn(FnDef),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeRef {
    pub ty: RhymeType,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub ty: TypeRef,
    pub name: String,
    pub span: Span,
}

/// `def name(params) -> ret { body }` or `def native name(params);`
#[derive(Debug, Clone, PartialEq)]
pub struct FnDef {
    pub name: String,
    pub native: bool,
    pub params: Vec<Param>,
    pub ret: Option<TypeRef>,
    pub body: Option<Block>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Else {
    Block(Block),
    If(Box<Stmt>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Decl {
        ty: TypeRef,
        name: String,
        init: Option<Expr>,
    },
    Assign {
        target: Expr,
        value: Expr,
    },
    /// `x++` (delta 1) or `x--` (delta -1).
    Step {
        target: Expr,
        delta: i64,
    },
    Expr(Expr),
    If {
        cond: Expr,
        then_block: Block,
        else_branch: Option<Else>,
    },
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        step: Option<Box<Stmt>>,
        body: Block,
    },
    Return(Option<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    And,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::And => "&&",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
        }
    }

    /// Binding strength; `||` sits below all of these at 1.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
    AddrOf,
    Deref,
}

impl UnOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnOp::Neg => "-",
            UnOp::Not => "!",
            UnOp::AddrOf => "&",
            UnOp::Deref => "*",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Float(f64),
    /// `0.8i`
    Imag(f64),
    Char(u8),
    Str(String),
    Bool(bool),
    Var(String),
    /// Flattened `a || b || c`, n >= 2. Superposition literal or logical or,
    /// decided by the checker.
    Superpose(Vec<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    /// `(expr)i`: an expression scaled by the imaginary unit.
    ImagMul(Box<Expr>),
    Call {
        name: String,
        args: Vec<Expr>,
    },
    Method {
        receiver: Box<Expr>,
        name: String,
        args: Vec<Expr>,
    },
    /// `qstring.all()`, `qbit.zeros(4)`, `qchar.dimension()`
    Static {
        ty: RhymeType,
        name: String,
        args: Vec<Expr>,
    },
    Index(Box<Expr>, Box<Expr>),
    Length(Box<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    pub fn as_var(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Var(name) => Some(name),
            _ => None,
        }
    }

    /// Visits this expression and all sub-expressions, parents first.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Superpose(items) => items.iter().for_each(|e| e.walk(f)),
            ExprKind::Binary(_, l, r) | ExprKind::Index(l, r) => {
                l.walk(f);
                r.walk(f);
            }
            ExprKind::Unary(_, e) | ExprKind::ImagMul(e) | ExprKind::Length(e) => e.walk(f),
            ExprKind::Call { args, .. } | ExprKind::Static { args, .. } => {
                args.iter().for_each(|e| e.walk(f))
            }
            ExprKind::Method { receiver, args, .. } => {
                receiver.walk(f);
                args.iter().for_each(|e| e.walk(f));
            }
            _ => {}
        }
    }
}

// Span erasure, used to compare trees structurally.

impl Program {
    pub fn clear_spans(&mut self) {
        for item in &mut self.items {
            match item {
                Item::Stmt(s) => s.clear_spans(),
                Item::Fn(f) => {
                    f.span = Span::default();
                    for p in &mut f.params {
                        p.span = Span::default();
                        p.ty.span = Span::default();
                    }
                    if let Some(r) = &mut f.ret {
                        r.span = Span::default();
                    }
                    if let Some(b) = &mut f.body {
                        b.clear_spans();
                    }
                }
            }
        }
    }

    pub fn functions(&self) -> impl Iterator<Item = &FnDef> {
        self.items.iter().filter_map(|i| match i {
            Item::Fn(f) => Some(f),
            Item::Stmt(_) => None,
        })
    }

    pub fn statements(&self) -> impl Iterator<Item = &Stmt> {
        self.items.iter().filter_map(|i| match i {
            Item::Stmt(s) => Some(s),
            Item::Fn(_) => None,
        })
    }
}

impl Block {
    fn clear_spans(&mut self) {
        self.span = Span::default();
        self.stmts.iter_mut().for_each(Stmt::clear_spans);
    }
}

impl Stmt {
    fn clear_spans(&mut self) {
        self.span = Span::default();
        match &mut self.kind {
            StmtKind::Decl { ty, init, .. } => {
                ty.span = Span::default();
                if let Some(e) = init {
                    e.clear_spans();
                }
            }
            StmtKind::Assign { target, value } => {
                target.clear_spans();
                value.clear_spans();
            }
            StmtKind::Step { target, .. } => target.clear_spans(),
            StmtKind::Expr(e) => e.clear_spans(),
            StmtKind::If {
                cond,
                then_block,
                else_branch,
            } => {
                cond.clear_spans();
                then_block.clear_spans();
                match else_branch {
                    Some(Else::Block(b)) => b.clear_spans(),
                    Some(Else::If(s)) => s.clear_spans(),
                    None => {}
                }
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                if let Some(s) = init {
                    s.clear_spans();
                }
                if let Some(c) = cond {
                    c.clear_spans();
                }
                if let Some(s) = step {
                    s.clear_spans();
                }
                body.clear_spans();
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    e.clear_spans();
                }
            }
        }
    }
}

impl Expr {
    fn clear_spans(&mut self) {
        self.span = Span::default();
        match &mut self.kind {
            ExprKind::Superpose(items) => items.iter_mut().for_each(Expr::clear_spans),
            ExprKind::Binary(_, l, r) | ExprKind::Index(l, r) => {
                l.clear_spans();
                r.clear_spans();
            }
            ExprKind::Unary(_, e) | ExprKind::ImagMul(e) | ExprKind::Length(e) => e.clear_spans(),
            ExprKind::Call { args, .. } | ExprKind::Static { args, .. } => {
                args.iter_mut().for_each(Expr::clear_spans)
            }
            ExprKind::Method { receiver, args, .. } => {
                receiver.clear_spans();
                args.iter_mut().for_each(Expr::clear_spans);
            }
            _ => {}
        }
    }
}
