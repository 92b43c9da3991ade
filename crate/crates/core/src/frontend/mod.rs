//! Lexing, parsing and pretty-printing of Rhyme source.

pub mod ast;
pub mod diagnostic;
pub mod lexer;
pub mod parser;
pub mod pretty;

pub use ast::Program;
pub use diagnostic::{has_errors, Diagnostic, Severity, Span};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse;
pub use pretty::program_to_string;

/// Tokenizes and parses `source` in one step.
pub fn parse_source(source: &str) -> Result<Program, Vec<Diagnostic>> {
    let tokens = tokenize(source)?;
    parse(&tokens)
}
