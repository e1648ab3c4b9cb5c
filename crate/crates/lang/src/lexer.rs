use crate::{DiagKind, Diagnostic, Span};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    Dot,
    DotDot,
    Eq,
    EqEq,
    NotEq,
    Arrow,
    Bar,
    BarBar,
    Turnstile,
    AndAnd,
    Bang,
    Lt,
    Le,
    Gt,
    Ge,
    Box,
    Diamond,
    Plus,
    Minus,
    Backslash,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Str(s) => format!("{s:?}"),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Dot => ".",
            Tok::DotDot => "..",
            Tok::Eq => "=",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Arrow => "->",
            Tok::Bar => "|",
            Tok::BarBar => "||",
            Tok::Turnstile => "|-",
            Tok::AndAnd => "&&",
            Tok::Bang => "!",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Box => "[]",
            Tok::Diamond => "<>",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Backslash => "\\",
            _ => "",
        }
    }
}

fn ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

fn ident_cont(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'?'
}

pub fn lex(src: &str) -> Result<Vec<(Tok, Span)>, Diagnostic> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let span = |s: usize, e: usize, line: u32, col: u32| Span { start: s, end: e, line, col };
    while i < b.len() {
        let c = b[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == b'/' && b.get(i + 1) == Some(&b'/') {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c == b'/' && b.get(i + 1) == Some(&b'*') {
            let (sl, sc) = (line, col);
            let start = i;
            i += 2;
            col += 2;
            loop {
                if i >= b.len() {
                    return Err(Diagnostic::new(DiagKind::Syntax, "unterminated comment", span(start, i, sl, sc)));
                }
                if b[i] == b'*' && b.get(i + 1) == Some(&b'/') {
                    i += 2;
                    col += 2;
                    break;
                }
                if b[i] == b'\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
            continue;
        }
        let start = i;
        let (sl, sc) = (line, col);
        let tok = if ident_start(c) {
            while i < b.len() && (ident_cont(b[i]) || (b[i] == b'.' && i + 1 < b.len() && ident_cont(b[i + 1]))) {
                i += 1;
            }
            Tok::Ident(src[start..i].to_string())
        } else if c.is_ascii_digit() {
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            match src[start..i].parse::<i64>() {
                Ok(v) => Tok::Int(v),
                Err(_) => return Err(Diagnostic::new(DiagKind::Syntax, "integer literal too large", span(start, i, sl, sc))),
            }
        } else if c == b'"' {
            i += 1;
            while i < b.len() && b[i] != b'"' && b[i] != b'\n' {
                i += 1;
            }
            if i >= b.len() || b[i] != b'"' {
                return Err(Diagnostic::new(DiagKind::Syntax, "unterminated string", span(start, i, sl, sc)));
            }
            i += 1;
            Tok::Str(src[start + 1..i - 1].to_string())
        } else {
            let two = if i + 1 < b.len() { &b[i..i + 2] } else { &b[i..i + 1] };
            let (t, n) = match two {
                b".." => (Tok::DotDot, 2),
                b"==" => (Tok::EqEq, 2),
                b"!=" => (Tok::NotEq, 2),
                b"->" => (Tok::Arrow, 2),
                b"||" => (Tok::BarBar, 2),
                b"|-" => (Tok::Turnstile, 2),
                b"&&" => (Tok::AndAnd, 2),
                b"<=" => (Tok::Le, 2),
                b">=" => (Tok::Ge, 2),
                b"[]" => (Tok::Box, 2),
                b"<>" => (Tok::Diamond, 2),
                _ => {
                    let t = match c {
                        b'(' => Tok::LParen,
                        b')' => Tok::RParen,
                        b'{' => Tok::LBrace,
                        b'}' => Tok::RBrace,
                        b'[' => Tok::LBracket,
                        b']' => Tok::RBracket,
                        b',' => Tok::Comma,
                        b';' => Tok::Semi,
                        b':' => Tok::Colon,
                        b'.' => Tok::Dot,
                        b'=' => Tok::Eq,
                        b'|' => Tok::Bar,
                        b'!' => Tok::Bang,
                        b'<' => Tok::Lt,
                        b'>' => Tok::Gt,
                        b'+' => Tok::Plus,
                        b'-' => Tok::Minus,
                        b'\\' => Tok::Backslash,
                        _ => {
                            let ch = src[i..].chars().next().unwrap_or('?');
                            return Err(Diagnostic::new(
                                DiagKind::Syntax,
                                format!("unexpected character {ch:?}"),
                                span(i, i + ch.len_utf8(), sl, sc),
                            ));
                        }
                    };
                    (t, 1)
                }
            };
            i += n;
            t
        };
        col += (i - start) as u32;
        out.push((tok, span(start, i, sl, sc)));
    }
    out.push((Tok::Eof, span(b.len(), b.len(), line, col)));
    Ok(out)
}
