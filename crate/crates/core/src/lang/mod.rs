//! The norm modelling language: lexer, parser, printer and static checks.

mod ast;
mod diagnostic;
mod flatten;
mod lexer;
mod parser;
mod printer;
mod validate;

pub use ast::*;
pub use diagnostic::{render, Diagnostic, Position, Severity, Span};
pub use flatten::flatten_extensions;
pub use lexer::{is_reserved, tokenize, Keyword, Token, TokenKind};
pub use parser::{parse, parse_expr};
pub use validate::{validate, ValidationReport};
