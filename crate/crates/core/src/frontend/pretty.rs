//! Renders a syntax tree back to source text that re-parses to the same tree.

use std::fmt::Write;

use super::ast::*;

const PREC_OR: u8 = 1;
const PREC_UNARY: u8 = 7;
const PREC_POSTFIX: u8 = 8;
const PREC_ATOM: u8 = 9;

fn precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Superpose(_) => PREC_OR,
        ExprKind::Binary(op, _, _) => op.precedence(),
        ExprKind::Unary(..) => PREC_UNARY,
        ExprKind::ImagMul(_)
        | ExprKind::Method { .. }
        | ExprKind::Index(..)
        | ExprKind::Length(_) => PREC_POSTFIX,
        _ => PREC_ATOM,
    }
}

fn escape(byte: u8, quote: char) -> String {
    match byte {
        b'\n' => "\\n".into(),
        b'\t' => "\\t".into(),
        b'\r' => "\\r".into(),
        0 => "\\0".into(),
        b'\\' => "\\\\".into(),
        b if b as char == quote => format!("\\{quote}"),
        b => (b as char).to_string(),
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, 0);
    out
}

fn write_args(out: &mut String, args: &[Expr]) {
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, a, 0);
    }
    out.push(')');
}

fn write_expr(out: &mut String, e: &Expr, min_prec: u8) {
    let prec = precedence(e);
    let paren = prec < min_prec;
    if paren {
        out.push('(');
    }
    match &e.kind {
        ExprKind::Int(v) => write!(out, "{v}").unwrap(),
        ExprKind::Float(v) => write!(out, "{v:?}").unwrap(),
        ExprKind::Imag(v) => write!(out, "{v:?}i").unwrap(),
        ExprKind::Char(c) => write!(out, "'{}'", escape(*c, '\'')).unwrap(),
        ExprKind::Str(s) => {
            out.push('"');
            for b in s.bytes() {
                out.push_str(&escape(b, '"'));
            }
            out.push('"');
        }
        ExprKind::Bool(b) => write!(out, "{b}").unwrap(),
        ExprKind::Var(name) => out.push_str(name),
        ExprKind::Superpose(items) => {
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(" || ");
                }
                write_expr(out, item, PREC_OR + 1);
            }
        }
        ExprKind::Binary(op, l, r) => {
            let p = op.precedence();
            write_expr(out, l, p);
            write!(out, " {} ", op.symbol()).unwrap();
            write_expr(out, r, p + 1);
        }
        ExprKind::Unary(op, inner) => {
            out.push_str(op.symbol());
            // `- -x` must not fuse into `--`, so nested unary operators get parentheses
            let min = if matches!(inner.kind, ExprKind::Unary(..)) {
                PREC_ATOM
            } else {
                PREC_UNARY
            };
            write_expr(out, inner, min);
        }
        ExprKind::ImagMul(inner) => {
            let ends_with_paren = matches!(
                inner.kind,
                ExprKind::Call { .. } | ExprKind::Method { .. } | ExprKind::Static { .. }
            );
            if ends_with_paren {
                write_expr(out, inner, 0);
            } else {
                out.push('(');
                write_expr(out, inner, 0);
                out.push(')');
            }
            out.push('i');
        }
        ExprKind::Call { name, args } => {
            out.push_str(name);
            write_args(out, args);
        }
        ExprKind::Method {
            receiver,
            name,
            args,
        } => {
            write_expr(out, receiver, PREC_POSTFIX);
            write!(out, ".{name}").unwrap();
            write_args(out, args);
        }
        ExprKind::Static { ty, name, args } => {
            write!(out, "{}.{name}", ty.keyword()).unwrap();
            write_args(out, args);
        }
        ExprKind::Index(base, index) => {
            write_expr(out, base, PREC_POSTFIX);
            out.push('[');
            write_expr(out, index, 0);
            out.push(']');
        }
        ExprKind::Length(base) => {
            write_expr(out, base, PREC_POSTFIX);
            out.push_str(".length");
        }
    }
    if paren {
        out.push(')');
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn write_simple(out: &mut String, s: &Stmt) {
    match &s.kind {
        StmtKind::Decl { ty, name, init } => {
            write!(out, "{} {name}", ty.ty).unwrap();
            if let Some(e) = init {
                out.push_str(" = ");
                write_expr(out, e, 0);
            }
        }
        StmtKind::Assign { target, value } => {
            write_expr(out, target, 0);
            out.push_str(" = ");
            write_expr(out, value, 0);
        }
        StmtKind::Step { target, delta } => {
            write_expr(out, target, PREC_POSTFIX);
            out.push_str(if *delta > 0 { "++" } else { "--" });
        }
        StmtKind::Expr(e) => write_expr(out, e, 0),
        _ => unreachable!("not a simple statement"),
    }
}

fn write_block(out: &mut String, b: &Block, depth: usize) {
    out.push_str("{\n");
    for s in &b.stmts {
        write_stmt(out, s, depth + 1);
    }
    indent(out, depth);
    out.push('}');
}

fn write_if(out: &mut String, s: &Stmt, depth: usize) {
    let StmtKind::If {
        cond,
        then_block,
        else_branch,
    } = &s.kind
    else {
        unreachable!()
    };
    out.push_str("if (");
    write_expr(out, cond, 0);
    out.push_str(") ");
    write_block(out, then_block, depth);
    match else_branch {
        Some(Else::Block(b)) => {
            out.push_str(" else ");
            write_block(out, b, depth);
        }
        Some(Else::If(nested)) => {
            out.push_str(" else ");
            write_if(out, nested, depth);
        }
        None => {}
    }
}

fn write_stmt(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    match &s.kind {
        StmtKind::If { .. } => write_if(out, s, depth),
        StmtKind::For {
            init,
            cond,
            step,
            body,
        } => {
            out.push_str("for (");
            if let Some(i) = init {
                write_simple(out, i);
            }
            out.push_str("; ");
            if let Some(c) = cond {
                write_expr(out, c, 0);
            }
            out.push_str("; ");
            if let Some(st) = step {
                write_simple(out, st);
            }
            out.push_str(") ");
            write_block(out, body, depth);
        }
        StmtKind::Return(value) => {
            out.push_str("return");
            if let Some(v) = value {
                out.push(' ');
                write_expr(out, v, 0);
            }
            out.push(';');
        }
        _ => {
            write_simple(out, s);
            out.push(';');
        }
    }
    out.push('\n');
}

fn write_fn(out: &mut String, f: &FnDef) {
    out.push_str("def ");
    if f.native {
        out.push_str("native ");
    }
    write!(out, "{}(", f.name).unwrap();
    for (i, p) in f.params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write!(out, "{} {}", p.ty.ty, p.name).unwrap();
    }
    out.push(')');
    if let Some(r) = &f.ret {
        write!(out, " -> {}", r.ty).unwrap();
    }
    match &f.body {
        Some(b) => {
            out.push(' ');
            write_block(out, b, 0);
            out.push('\n');
        }
        None => out.push_str(";\n"),
    }
}

pub fn program_to_string(p: &Program) -> String {
    let mut out = String::new();
    for item in &p.items {
        match item {
            Item::Stmt(s) => write_stmt(&mut out, s, 0),
            Item::Fn(f) => write_fn(&mut out, f),
        }
    }
    out
}
