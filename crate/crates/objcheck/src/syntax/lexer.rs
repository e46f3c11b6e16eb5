//! Hand-rolled lexer. Identifiers may contain `-`, so `dev-refactored` is a
//! single token; there is no arithmetic to conflict with.

use crate::diag::{Diagnostic, DiagnosticKind};
use crate::source::{FileId, Pos, Span};

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TokenKind {
    KwSystem,
    KwUsing,
    KwObj,
    KwBehaviour,
    /// Lowercase-initial identifier: participants, message labels, variables.
    LIdent(String),
    /// Uppercase-initial identifier: behaviour names.
    UIdent(String),
    Int(i64),
    Str(String),
    Bang,
    Query,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Colon,
    Dot,
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::KwSystem => "`system`".into(),
            TokenKind::KwUsing => "`using`".into(),
            TokenKind::KwObj => "`obj`".into(),
            TokenKind::KwBehaviour => "`behaviour`".into(),
            TokenKind::LIdent(s) => format!("`{s}`"),
            TokenKind::UIdent(s) => format!("`{s}`"),
            TokenKind::Int(n) => format!("`{n}`"),
            TokenKind::Str(s) => format!("{s:?}"),
            TokenKind::Bang => "`!`".into(),
            TokenKind::Query => "`?`".into(),
            TokenKind::LBrace => "`{`".into(),
            TokenKind::RBrace => "`}`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Colon => "`:`".into(),
            TokenKind::Dot => "`.`".into(),
            TokenKind::Eof => "end of file".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn here(&self) -> Pos {
        Pos { line: self.line, col: self.col, byte: self.pos as u32 }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic()
}

fn is_ident_continue(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'-'
}

/// Tokenise a source file. Stops at the first lexical error.
pub fn lex(src: &str, file: FileId) -> Result<Vec<Token>, Diagnostic> {
    let mut lx = Lexer { src, bytes: src.as_bytes(), pos: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    loop {
        while matches!(lx.peek(), Some(b) if b.is_ascii_whitespace()) {
            lx.bump();
        }
        let start = lx.here();
        let Some(b) = lx.peek() else {
            out.push(Token {
                kind: TokenKind::Eof,
                span: Span::new(file, start, start),
            });
            return Ok(out);
        };
        let kind = match b {
            b'!' => { lx.bump(); TokenKind::Bang }
            b'?' => { lx.bump(); TokenKind::Query }
            b'{' => { lx.bump(); TokenKind::LBrace }
            b'}' => { lx.bump(); TokenKind::RBrace }
            b'(' => { lx.bump(); TokenKind::LParen }
            b')' => { lx.bump(); TokenKind::RParen }
            b',' => { lx.bump(); TokenKind::Comma }
            b':' => { lx.bump(); TokenKind::Colon }
            b'.' => { lx.bump(); TokenKind::Dot }
            b'"' => {
                lx.bump();
                let text_start = lx.pos;
                loop {
                    match lx.peek() {
                        Some(b'"') => break,
                        Some(b'\n') | None => {
                            let span = Span::new(file, start, lx.here());
                            return Err(Diagnostic::new(
                                DiagnosticKind::UnterminatedString,
                                span,
                                "",
                                "unterminated string literal",
                            ));
                        }
                        Some(_) => { lx.bump(); }
                    }
                }
                let text = lx.src[text_start..lx.pos].to_string();
                lx.bump(); // closing quote
                TokenKind::Str(text)
            }
            b if b.is_ascii_digit() => {
                let num_start = lx.pos;
                while matches!(lx.peek(), Some(b) if b.is_ascii_digit()) {
                    lx.bump();
                }
                let text = &lx.src[num_start..lx.pos];
                match text.parse::<i64>() {
                    Ok(n) => TokenKind::Int(n),
                    Err(_) => {
                        let span = Span::new(file, start, lx.here());
                        return Err(Diagnostic::new(
                            DiagnosticKind::UnexpectedToken,
                            span,
                            "",
                            format!("integer literal `{text}` is out of range"),
                        ));
                    }
                }
            }
            b if is_ident_start(b) => {
                let id_start = lx.pos;
                while matches!(lx.peek(), Some(b) if is_ident_continue(b)) {
                    lx.bump();
                }
                let text = &lx.src[id_start..lx.pos];
                match text {
                    "system" => TokenKind::KwSystem,
                    "using" => TokenKind::KwUsing,
                    "obj" => TokenKind::KwObj,
                    "behaviour" => TokenKind::KwBehaviour,
                    _ if b.is_ascii_uppercase() => TokenKind::UIdent(text.to_string()),
                    _ => TokenKind::LIdent(text.to_string()),
                }
            }
            other => {
                lx.bump();
                let span = Span::new(file, start, lx.here());
                return Err(Diagnostic::new(
                    DiagnosticKind::UnexpectedToken,
                    span,
                    "",
                    format!("unexpected character `{}`", other as char),
                ));
            }
        };
        let span = Span::new(file, start, lx.here());
        out.push(Token { kind, span });
    }
}
