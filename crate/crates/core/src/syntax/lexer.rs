//! Tokenizer for `.gka` text.

use crate::diag::{Diagnostic, Span};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    /// Numeric literal, kept as written so integers and reals can be told apart.
    Number(String),
    /// `'quoted name'`
    Label(String),
    /// `%name:`
    Directive(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Tilde,
    Bang,
    Question,
    Eq,
    Plus,
    Minus,
    Arrow,
    BiArrow,
    At,
    Backslash,
    Pipe,
    Newline,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Label(s) => format!("label '{s}'"),
            Tok::Directive(s) => format!("directive `%{s}:`"),
            Tok::Newline => "end of line".into(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::Tilde => "~",
            Tok::Bang => "!",
            Tok::Question => "?",
            Tok::Eq => "=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Arrow => "->",
            Tok::BiArrow => "<->",
            Tok::At => "@",
            Tok::Backslash => "\\",
            Tok::Pipe => "|",
            _ => "?",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits `text` into tokens. Lexical errors are collected and the offending
/// character skipped, so lexing always terminates.
pub fn lex(text: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut toks = Vec::new();
    let mut diags = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    macro_rules! push {
        ($t:expr, $sp:expr) => {
            toks.push(Token { tok: $t, span: $sp })
        };
    }

    while i < chars.len() {
        let c = chars[i];
        let span = Span::new(line, col);
        let advance = |n: usize, i: &mut usize, col: &mut u32| {
            *i += n;
            *col += n as u32;
        };
        match c {
            '\n' => {
                push!(Tok::Newline, span);
                i += 1;
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => advance(1, &mut i, &mut col),
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => {
                push!(Tok::LParen, span);
                advance(1, &mut i, &mut col)
            }
            ')' => {
                push!(Tok::RParen, span);
                advance(1, &mut i, &mut col)
            }
            '[' => {
                push!(Tok::LBracket, span);
                advance(1, &mut i, &mut col)
            }
            ']' => {
                push!(Tok::RBracket, span);
                advance(1, &mut i, &mut col)
            }
            '{' => {
                push!(Tok::LBrace, span);
                advance(1, &mut i, &mut col)
            }
            '}' => {
                push!(Tok::RBrace, span);
                advance(1, &mut i, &mut col)
            }
            ',' => {
                push!(Tok::Comma, span);
                advance(1, &mut i, &mut col)
            }
            '~' => {
                push!(Tok::Tilde, span);
                advance(1, &mut i, &mut col)
            }
            '!' => {
                push!(Tok::Bang, span);
                advance(1, &mut i, &mut col)
            }
            '?' => {
                push!(Tok::Question, span);
                advance(1, &mut i, &mut col)
            }
            '=' => {
                push!(Tok::Eq, span);
                advance(1, &mut i, &mut col)
            }
            '+' => {
                push!(Tok::Plus, span);
                advance(1, &mut i, &mut col)
            }
            '@' => {
                push!(Tok::At, span);
                advance(1, &mut i, &mut col)
            }
            '\\' => {
                push!(Tok::Backslash, span);
                advance(1, &mut i, &mut col)
            }
            '|' => {
                push!(Tok::Pipe, span);
                advance(1, &mut i, &mut col)
            }
            '-' => {
                if chars.get(i + 1) == Some(&'>') {
                    push!(Tok::Arrow, span);
                    advance(2, &mut i, &mut col)
                } else {
                    push!(Tok::Minus, span);
                    advance(1, &mut i, &mut col)
                }
            }
            '<' => {
                if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') {
                    push!(Tok::BiArrow, span);
                    advance(3, &mut i, &mut col)
                } else {
                    diags.push(Diagnostic::error(span, "unexpected character `<`"));
                    advance(1, &mut i, &mut col)
                }
            }
            '\'' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '\'' && chars[j] != '\n' {
                    j += 1;
                }
                if j < chars.len() && chars[j] == '\'' {
                    let s: String = chars[start..j].iter().collect();
                    if s.is_empty() {
                        diags.push(Diagnostic::error(span, "empty label"));
                    } else {
                        push!(Tok::Label(s), span);
                    }
                    let n = j + 1 - i;
                    advance(n, &mut i, &mut col);
                } else {
                    diags.push(Diagnostic::error(span, "unterminated label"));
                    let n = j - i;
                    advance(n, &mut i, &mut col);
                }
            }
            '%' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && is_ident_char(chars[j]) {
                    j += 1;
                }
                if j > start && chars.get(j) == Some(&':') {
                    let s: String = chars[start..j].iter().collect();
                    push!(Tok::Directive(s), span);
                    let n = j + 1 - i;
                    advance(n, &mut i, &mut col);
                } else {
                    diags.push(Diagnostic::error(span, "malformed directive; expected `%name:`"));
                    let n = (j - i).max(1);
                    advance(n, &mut i, &mut col);
                }
            }
            c if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let start = i;
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j < chars.len() && chars[j] == '.' {
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let s: String = chars[start..j].iter().collect();
                push!(Tok::Number(s), span);
                let n = j - i;
                advance(n, &mut i, &mut col);
            }
            c if is_ident_start(c) => {
                let start = i;
                let mut j = i;
                while j < chars.len() && is_ident_char(chars[j]) {
                    j += 1;
                }
                let s: String = chars[start..j].iter().collect();
                push!(Tok::Ident(s), span);
                let n = j - i;
                advance(n, &mut i, &mut col);
            }
            other => {
                diags.push(Diagnostic::error(span, format!("unexpected character `{}`", other.escape_debug())));
                advance(1, &mut i, &mut col)
            }
        }
    }
    (toks, diags)
}
