use super::ast::*;
use super::diagnostic::{Diagnostic, Span};
use super::lexer::{unescape, Token, TokenKind};
use crate::types::RhymeType;

type PResult<T> = Result<T, Diagnostic>;

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    errors: Vec<Diagnostic>,
}

fn is_type_keyword(t: &Token) -> bool {
    t.kind == TokenKind::Keyword && RhymeType::from_keyword(&t.lexeme).is_some()
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&'t Token> {
        self.tokens.get(self.pos + n)
    }

    fn previous(&self) -> Option<&'t Token> {
        self.pos.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    fn eof_span(&self) -> Span {
        match self.tokens.last() {
            Some(t) => Span::new(t.span.line, t.span.column + t.span.len as u32, t.span.end(), 0),
            None => Span::new(1, 1, 0, 0),
        }
    }

    fn here(&self) -> Span {
        self.peek().map(|t| t.span).unwrap_or_else(|| self.eof_span())
    }

    fn at(&self, kind: TokenKind, lexeme: &str) -> bool {
        self.peek().is_some_and(|t| t.is(kind, lexeme))
    }

    fn at_op(&self, op: &str) -> bool {
        self.at(TokenKind::Operator, op)
    }

    fn at_punct(&self, p: &str) -> bool {
        self.at(TokenKind::Punctuation, p)
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.at(TokenKind::Keyword, kw)
    }

    fn bump(&mut self) -> &'t Token {
        let t = &self.tokens[self.pos];
        self.pos += 1;
        t
    }

    fn error_here(&self, expected: &str) -> Diagnostic {
        match self.peek() {
            Some(t) => Diagnostic::error(format!("expected {expected}, found `{}`", t.lexeme), t.span),
            None => Diagnostic::error(format!("expected {expected}, found end of input"), self.eof_span()),
        }
    }

    fn expect(&mut self, kind: TokenKind, lexeme: &str) -> PResult<&'t Token> {
        if self.at(kind, lexeme) {
            Ok(self.bump())
        } else {
            Err(self.error_here(&format!("`{lexeme}`")))
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<&'t Token> {
        self.expect(TokenKind::Punctuation, p)
    }

    fn expect_ident(&mut self) -> PResult<&'t Token> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => Ok(self.bump()),
            _ => Err(self.error_here("identifier")),
        }
    }

    /// Skips to just past the next `;` or to the next `}`.
    fn synchronize(&mut self) {
        while let Some(t) = self.peek() {
            if t.is(TokenKind::Punctuation, ";") {
                self.bump();
                return;
            }
            if t.is(TokenKind::Punctuation, "}") {
                return;
            }
            self.bump();
        }
    }

    fn program(&mut self) -> Program {
        let mut items = Vec::new();
        while self.peek().is_some() {
            let start = self.pos;
            let item = if self.at_kw("def") {
                self.function().map(Item::Fn)
            } else {
                self.statement().map(Item::Stmt)
            };
            match item {
                Ok(item) => items.push(item),
                Err(d) => {
                    self.errors.push(d);
                    self.synchronize();
                    if self.at_punct("}") {
                        self.bump();
                    }
                    if self.pos == start {
                        self.bump();
                    }
                }
            }
        }
        Program { items }
    }

    fn type_ref(&mut self) -> PResult<TypeRef> {
        let t = match self.peek() {
            Some(t) if is_type_keyword(t) => self.bump(),
            _ => return Err(self.error_here("type")),
        };
        let mut ty = RhymeType::from_keyword(&t.lexeme).expect("type keyword");
        let mut span = t.span;
        if self.at_punct("[") {
            self.bump();
            let close = self.expect_punct("]")?;
            ty = ty.array_of().ok_or_else(|| {
                Diagnostic::error(format!("arrays of `{}` are not supported", t.lexeme), t.span)
            })?;
            span = span.to(close.span);
        }
        Ok(TypeRef { ty, span })
    }

    fn function(&mut self) -> PResult<FnDef> {
        let def = self.expect(TokenKind::Keyword, "def")?;
        let native = if self.at_kw("native") {
            self.bump();
            true
        } else {
            false
        };
        let name = self.expect_ident()?;
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.at_punct(")") {
            loop {
                let ty = self.type_ref()?;
                let pname = self.expect_ident()?;
                params.push(Param {
                    span: ty.span.to(pname.span),
                    ty,
                    name: pname.lexeme.clone(),
                });
                if self.at_punct(",") {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        let ret = if self.at_op("->") {
            self.bump();
            Some(self.type_ref()?)
        } else {
            None
        };
        let (body, end) = if native {
            let semi = self.expect_punct(";")?;
            (None, semi.span)
        } else {
            let block = self.block()?;
            let end = block.span;
            (Some(block), end)
        };
        Ok(FnDef {
            name: name.lexeme.clone(),
            native,
            params,
            ret,
            body,
            span: def.span.to(end),
        })
    }

    fn block(&mut self) -> PResult<Block> {
        let open = self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.at_punct("}") {
            if self.peek().is_none() {
                return Err(self.error_here("`}`"));
            }
            if self.at_kw("def") {
                return Err(Diagnostic::error(
                    "function definitions are only allowed at top level",
                    self.here(),
                ));
            }
            let start = self.pos;
            match self.statement() {
                Ok(s) => stmts.push(s),
                Err(d) => {
                    self.errors.push(d);
                    self.synchronize();
                    if self.pos == start {
                        self.bump();
                    }
                }
            }
        }
        let close = self.bump();
        Ok(Block {
            stmts,
            span: open.span.to(close.span),
        })
    }

    fn statement(&mut self) -> PResult<Stmt> {
        let start = self.here();
        if self.at_kw("if") {
            return self.if_statement();
        }
        if self.at_kw("for") {
            self.bump();
            self.expect_punct("(")?;
            let init = if self.at_punct(";") {
                None
            } else {
                Some(Box::new(self.simple()?))
            };
            self.expect_punct(";")?;
            let cond = if self.at_punct(";") {
                None
            } else {
                Some(self.expr()?)
            };
            self.expect_punct(";")?;
            let step = if self.at_punct(")") {
                None
            } else {
                Some(Box::new(self.simple()?))
            };
            self.expect_punct(")")?;
            let body = self.block()?;
            return Ok(Stmt {
                span: start.to(body.span),
                kind: StmtKind::For {
                    init,
                    cond,
                    step,
                    body,
                },
            });
        }
        if self.at_kw("return") {
            self.bump();
            let value = if self.at_punct(";") {
                None
            } else {
                Some(self.expr()?)
            };
            let semi = self.expect_punct(";")?;
            return Ok(Stmt {
                kind: StmtKind::Return(value),
                span: start.to(semi.span),
            });
        }
        let mut stmt = self.simple()?;
        let semi = self.expect_punct(";")?;
        stmt.span = stmt.span.to(semi.span);
        Ok(stmt)
    }

    fn if_statement(&mut self) -> PResult<Stmt> {
        let kw = self.expect(TokenKind::Keyword, "if")?;
        self.expect_punct("(")?;
        let cond = self.expr()?;
        self.expect_punct(")")?;
        let then_block = self.block()?;
        let mut end = then_block.span;
        let else_branch = if self.at_kw("else") {
            self.bump();
            if self.at_kw("if") {
                let nested = self.if_statement()?;
                end = nested.span;
                Some(Else::If(Box::new(nested)))
            } else {
                let b = self.block()?;
                end = b.span;
                Some(Else::Block(b))
            }
        } else {
            None
        };
        Ok(Stmt {
            kind: StmtKind::If {
                cond,
                then_block,
                else_branch,
            },
            span: kw.span.to(end),
        })
    }

    /// Declaration, assignment, `x++`/`x--`, or expression; no trailing `;`.
    fn simple(&mut self) -> PResult<Stmt> {
        let start = self.here();
        let is_decl = self.peek().is_some_and(is_type_keyword)
            && !self
                .peek_at(1)
                .is_some_and(|t| t.is(TokenKind::Punctuation, "."));
        if is_decl {
            let ty = self.type_ref()?;
            let name = self.expect_ident()?;
            let mut span = start.to(name.span);
            let init = if self.at_op("=") {
                self.bump();
                let e = self.expr()?;
                span = span.to(e.span);
                Some(e)
            } else {
                None
            };
            return Ok(Stmt {
                kind: StmtKind::Decl {
                    ty,
                    name: name.lexeme.clone(),
                    init,
                },
                span,
            });
        }
        let target = self.expr()?;
        if self.at_op("=") {
            self.bump();
            let value = self.expr()?;
            return Ok(Stmt {
                span: start.to(value.span),
                kind: StmtKind::Assign { target, value },
            });
        }
        if self.at_op("++") || self.at_op("--") {
            let op = self.bump();
            return Ok(Stmt {
                span: start.to(op.span),
                kind: StmtKind::Step {
                    target,
                    delta: if op.lexeme == "++" { 1 } else { -1 },
                },
            });
        }
        Ok(Stmt {
            span: target.span,
            kind: StmtKind::Expr(target),
        })
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        let first = self.and_expr()?;
        if !self.at_op("||") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.at_op("||") {
            self.bump();
            items.push(self.and_expr()?);
        }
        let span = items[0].span.to(items[items.len() - 1].span);
        Ok(Expr::new(ExprKind::Superpose(items), span))
    }

    fn binary_level(
        &mut self,
        ops: &[(&str, BinOp)],
        next: fn(&mut Self) -> PResult<Expr>,
    ) -> PResult<Expr> {
        let mut lhs = next(self)?;
        'outer: loop {
            for (sym, op) in ops {
                if self.at_op(sym) {
                    self.bump();
                    let rhs = next(self)?;
                    let span = lhs.span.to(rhs.span);
                    lhs = Expr::new(ExprKind::Binary(*op, Box::new(lhs), Box::new(rhs)), span);
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        self.binary_level(&[("&&", BinOp::And)], Self::eq_expr)
    }

    fn eq_expr(&mut self) -> PResult<Expr> {
        self.binary_level(&[("==", BinOp::Eq), ("!=", BinOp::Ne)], Self::rel_expr)
    }

    fn rel_expr(&mut self) -> PResult<Expr> {
        self.binary_level(
            &[
                ("<=", BinOp::Le),
                (">=", BinOp::Ge),
                ("<", BinOp::Lt),
                (">", BinOp::Gt),
            ],
            Self::add_expr,
        )
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        self.binary_level(&[("+", BinOp::Add), ("-", BinOp::Sub)], Self::mul_expr)
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        self.binary_level(
            &[("*", BinOp::Mul), ("/", BinOp::Div), ("%", BinOp::Rem)],
            Self::unary,
        )
    }

    fn unary(&mut self) -> PResult<Expr> {
        let op = match self.peek() {
            Some(t) if t.kind == TokenKind::Operator => match t.lexeme.as_str() {
                "-" => Some(UnOp::Neg),
                "!" => Some(UnOp::Not),
                "&" => Some(UnOp::AddrOf),
                "*" => Some(UnOp::Deref),
                _ => None,
            },
            _ => None,
        };
        if let Some(op) = op {
            let t = self.bump();
            let inner = self.unary()?;
            let span = t.span.to(inner.span);
            return Ok(Expr::new(ExprKind::Unary(op, Box::new(inner)), span));
        }
        self.postfix()
    }

    fn args(&mut self) -> PResult<(Vec<Expr>, Span)> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.at_punct(")") {
            loop {
                args.push(self.expr()?);
                if self.at_punct(",") {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        let close = self.expect_punct(")")?;
        Ok((args, close.span))
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            if self.at_punct(".") {
                self.bump();
                let name = self.expect_ident()?;
                if self.at_punct("(") {
                    let (args, end) = self.args()?;
                    let span = e.span.to(end);
                    e = Expr::new(
                        ExprKind::Method {
                            receiver: Box::new(e),
                            name: name.lexeme.clone(),
                            args,
                        },
                        span,
                    );
                } else if name.lexeme == "length" {
                    let span = e.span.to(name.span);
                    e = Expr::new(ExprKind::Length(Box::new(e)), span);
                } else {
                    return Err(Diagnostic::error(
                        format!("unknown field `{}` (only `.length` is supported)", name.lexeme),
                        name.span,
                    ));
                }
            } else if self.at_punct("[") {
                self.bump();
                let index = self.expr()?;
                let close = self.expect_punct("]")?;
                let span = e.span.to(close.span);
                e = Expr::new(ExprKind::Index(Box::new(e), Box::new(index)), span);
            } else if self.imaginary_suffix() {
                let i = self.bump();
                let span = e.span.to(i.span);
                e = Expr::new(ExprKind::ImagMul(Box::new(e)), span);
            } else {
                return Ok(e);
            }
        }
    }

    /// `sqrt(1/2)i`: an `i` glued to a closing parenthesis.
    fn imaginary_suffix(&self) -> bool {
        match (self.previous(), self.peek()) {
            (Some(prev), Some(next)) => {
                prev.is(TokenKind::Punctuation, ")")
                    && next.is(TokenKind::Identifier, "i")
                    && next.span.offset == prev.span.end()
            }
            _ => false,
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let t = match self.peek() {
            Some(t) => t,
            None => return Err(self.error_here("expression")),
        };
        let span = t.span;
        let kind = match t.kind {
            TokenKind::IntLiteral => {
                self.bump();
                let v = t
                    .lexeme
                    .parse()
                    .map_err(|_| Diagnostic::error("integer literal is too large", span))?;
                ExprKind::Int(v)
            }
            TokenKind::FloatLiteral | TokenKind::ImaginaryLiteral => {
                self.bump();
                let text = t.lexeme.trim_end_matches('i');
                let v: f64 = text
                    .parse()
                    .map_err(|_| Diagnostic::error("malformed number", span))?;
                if !v.is_finite() {
                    return Err(Diagnostic::error("number literal is out of range", span));
                }
                if t.kind == TokenKind::FloatLiteral {
                    ExprKind::Float(v)
                } else {
                    ExprKind::Imag(v)
                }
            }
            TokenKind::CharLiteral => {
                self.bump();
                let bytes = unescape(&t.lexeme);
                if bytes.len() != 1 {
                    return Err(Diagnostic::error(
                        "char literal must contain exactly one character",
                        span,
                    ));
                }
                ExprKind::Char(bytes[0])
            }
            TokenKind::StringLiteral => {
                self.bump();
                ExprKind::Str(unescape(&t.lexeme).into_iter().map(char::from).collect())
            }
            TokenKind::Keyword if t.lexeme == "true" || t.lexeme == "false" => {
                self.bump();
                ExprKind::Bool(t.lexeme == "true")
            }
            TokenKind::Keyword if is_type_keyword(t) => {
                self.bump();
                let ty = RhymeType::from_keyword(&t.lexeme).expect("type keyword");
                self.expect_punct(".")?;
                let name = self.expect_ident()?;
                let (args, end) = self.args()?;
                return Ok(Expr::new(
                    ExprKind::Static {
                        ty,
                        name: name.lexeme.clone(),
                        args,
                    },
                    span.to(end),
                ));
            }
            TokenKind::Identifier => {
                self.bump();
                if self.at_punct("(") {
                    let (args, end) = self.args()?;
                    return Ok(Expr::new(
                        ExprKind::Call {
                            name: t.lexeme.clone(),
                            args,
                        },
                        span.to(end),
                    ));
                }
                ExprKind::Var(t.lexeme.clone())
            }
            TokenKind::Punctuation if t.lexeme == "(" => {
                self.bump();
                let inner = self.expr()?;
                let close = self.expect_punct(")")?;
                return Ok(Expr::new(inner.kind, span.to(close.span)));
            }
            _ => return Err(self.error_here("expression")),
        };
        Ok(Expr::new(kind, span))
    }
}

/// Builds the syntax tree for a token stream.
pub fn parse(tokens: &[Token]) -> Result<Program, Vec<Diagnostic>> {
    let mut p = Parser {
        tokens,
        pos: 0,
        errors: Vec::new(),
    };
    let program = p.program();
    if p.errors.is_empty() {
        Ok(program)
    } else {
        Err(p.errors)
    }
}
