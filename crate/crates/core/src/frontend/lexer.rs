use super::diagnostic::{Diagnostic, Span};

pub const KEYWORDS: &[&str] = &[
    "bit", "int", "float", "complex", "char", "string", "bool", "ref", "qbit", "qint", "qfloat",
    "qcomplex", "qchar", "qstring", "qbool", "qref", "def", "native", "if", "else", "for",
    "return", "true", "false",
];

const OPERATORS: &[&str] = &[
    "||", "&&", "==", "!=", "<=", ">=", "->", "++", "--", "+", "-", "*", "/", "%", "<", ">", "=",
    "!", "&",
];

const PUNCTUATION: &[char] = &['(', ')', '{', '}', '[', ']', ';', ',', '.'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Keyword,
    Identifier,
    IntLiteral,
    FloatLiteral,
    ImaginaryLiteral,
    CharLiteral,
    StringLiteral,
    Operator,
    Punctuation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub span: Span,
}

impl Token {
    pub fn is(&self, kind: TokenKind, lexeme: &str) -> bool {
        self.kind == kind && self.lexeme == lexeme
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    column: u32,
    tokens: Vec<Token>,
    errors: Vec<Diagnostic>,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn here(&self) -> Span {
        Span::new(self.line, self.column, self.pos, 0)
    }

    fn push(&mut self, kind: TokenKind, start: Span) {
        let lexeme = self.src[start.offset..self.pos].to_string();
        let span = Span {
            len: self.pos - start.offset,
            ..start
        };
        self.tokens.push(Token { kind, lexeme, span });
    }

    fn run(mut self) -> Result<Vec<Token>, Vec<Diagnostic>> {
        while let Some(c) = self.peek() {
            let start = self.here();
            if c.is_whitespace() {
                self.bump();
            } else if c == '/' && self.peek_at(1) == Some('/') {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c.is_ascii_digit() {
                self.number(start);
            } else if c.is_ascii_alphabetic() || c == '_' {
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                    self.bump();
                }
                let word = &self.src[start.offset..self.pos];
                let kind = if KEYWORDS.contains(&word) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Identifier
                };
                self.push(kind, start);
            } else if c == '"' || c == '\'' {
                self.quoted(c, start);
            } else if let Some(op) = OPERATORS
                .iter()
                .find(|op| self.src[self.pos..].starts_with(**op))
            {
                for _ in 0..op.len() {
                    self.bump();
                }
                self.push(TokenKind::Operator, start);
            } else if PUNCTUATION.contains(&c) {
                self.bump();
                self.push(TokenKind::Punctuation, start);
            } else {
                self.bump();
                self.errors.push(Diagnostic::error(
                    format!("unknown character `{c}`"),
                    Span {
                        len: c.len_utf8(),
                        ..start
                    },
                ));
            }
        }
        if self.errors.is_empty() {
            Ok(self.tokens)
        } else {
            Err(self.errors)
        }
    }

    fn digits(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
    }

    fn number(&mut self, start: Span) {
        self.digits();
        let mut is_float = false;
        if self.peek() == Some('.') && matches!(self.peek_at(1), Some(c) if c.is_ascii_digit()) {
            is_float = true;
            self.bump();
            self.digits();
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let sign = matches!(self.peek_at(1), Some('+' | '-'));
            let digit_at = if sign { 2 } else { 1 };
            if matches!(self.peek_at(digit_at), Some(c) if c.is_ascii_digit()) {
                is_float = true;
                for _ in 0..digit_at {
                    self.bump();
                }
                self.digits();
            }
        }
        let imaginary = self.peek() == Some('i')
            && !matches!(self.peek_at(1), Some(c) if c.is_ascii_alphanumeric() || c == '_');
        if imaginary {
            self.bump();
            self.push(TokenKind::ImaginaryLiteral, start);
        } else if is_float {
            self.push(TokenKind::FloatLiteral, start);
        } else {
            let text = &self.src[start.offset..self.pos];
            if text.parse::<i64>().is_err() {
                self.errors.push(Diagnostic::error(
                    "integer literal is too large",
                    Span {
                        len: self.pos - start.offset,
                        ..start
                    },
                ));
            }
            self.push(TokenKind::IntLiteral, start);
        }
    }

    fn quoted(&mut self, quote: char, start: Span) {
        let what = if quote == '"' { "string" } else { "char" };
        self.bump();
        loop {
            match self.peek() {
                None | Some('\n') => {
                    self.errors.push(Diagnostic::error(
                        format!("unterminated {what} literal"),
                        Span { len: 1, ..start },
                    ));
                    return;
                }
                Some(c) if c == quote => {
                    self.bump();
                    break;
                }
                Some('\\') => {
                    self.bump();
                    if matches!(self.peek(), None | Some('\n')) {
                        continue;
                    }
                    let esc_at = self.here();
                    let e = self.bump().unwrap_or('\\');
                    if !matches!(e, 'n' | 't' | 'r' | '0' | '\\' | '\'' | '"') {
                        self.errors.push(Diagnostic::error(
                            format!("unknown escape sequence `\\{e}`"),
                            Span { len: 1, ..esc_at },
                        ));
                    }
                }
                Some(c) => {
                    let at = self.here();
                    self.bump();
                    if !c.is_ascii() {
                        self.errors.push(Diagnostic::error(
                            format!("character `{c}` is outside 7-bit ASCII"),
                            Span {
                                len: c.len_utf8(),
                                ..at
                            },
                        ));
                    }
                }
            }
        }
        let kind = if quote == '"' {
            TokenKind::StringLiteral
        } else {
            TokenKind::CharLiteral
        };
        self.push(kind, start);
        if kind == TokenKind::CharLiteral {
            let token = self.tokens.last().expect("just pushed");
            if unescape(&token.lexeme).len() != 1 {
                self.errors.push(Diagnostic::error(
                    "char literal must contain exactly one character",
                    token.span,
                ));
            }
        }
    }
}

/// Strips the quotes of a string/char literal lexeme and resolves escapes.
pub fn unescape(lexeme: &str) -> Vec<u8> {
    let inner = &lexeme[1..lexeme.len().saturating_sub(1).max(1)];
    let mut out = Vec::with_capacity(inner.len());
    let mut bytes = inner.bytes();
    while let Some(b) = bytes.next() {
        if b != b'\\' {
            out.push(b);
            continue;
        }
        match bytes.next() {
            Some(b'n') => out.push(b'\n'),
            Some(b't') => out.push(b'\t'),
            Some(b'r') => out.push(b'\r'),
            Some(b'0') => out.push(0),
            Some(other) => out.push(other),
            None => {}
        }
    }
    out
}

/// Splits source text into tokens, skipping whitespace and `//` comments.
pub fn tokenize(source: &str) -> Result<Vec<Token>, Vec<Diagnostic>> {
    Lexer {
        src: source,
        pos: 0,
        line: 1,
        column: 1,
        tokens: Vec::new(),
        errors: Vec::new(),
    }
    .run()
}
