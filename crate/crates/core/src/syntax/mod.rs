//! The `.gka` model language: syntax tree, parser and canonical printer.

pub mod ast;
mod lexer;
mod parser;
mod unparse;

pub use ast::*;
pub use lexer::{lex, Tok, Token};
pub use parser::parse_model;
pub use unparse::{pattern_text, rule_line, unparse};

#[cfg(test)]
mod proptests;
