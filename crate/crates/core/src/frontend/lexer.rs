// SPDX-License-Identifier: Apache-2.0

use super::ast::Span;
use super::diag::{Code, Diagnostic};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i128),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

// Longest first so that `<<=` wins over `<<` and `<`.
const PUNCT: &[&str] = &[
    "<<=", ">>=", "->", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "<=", ">=", "==", "!=",
    "&&", "||", "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", "<", ">", "=", "(", ")", "{", "}", "[", "]", ";",
    ",", "?", ":", ".",
];

pub fn lex(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let advance = |i: &mut usize, line: &mut u32, col: &mut u32, n: usize| {
        for &b in &bytes[*i..*i + n] {
            if b == b'\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        }
        *i += n;
    };
    while i < bytes.len() {
        let c = bytes[i];
        let span = Span { line, col };
        if c.is_ascii_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
        } else if bytes[i..].starts_with(b"//") {
            let n = bytes[i..].iter().position(|&b| b == b'\n').unwrap_or(bytes.len() - i);
            advance(&mut i, &mut line, &mut col, n);
        } else if bytes[i..].starts_with(b"/*") {
            let n =
                src[i + 2..].find("*/").ok_or_else(|| Diagnostic::error(Code::Syntax, span, "unterminated comment"))?;
            advance(&mut i, &mut line, &mut col, n + 4);
        } else if c == b'#' {
            return Err(Diagnostic::error(Code::Syntax, span, "preprocessor directives are not supported"));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let n =
                bytes[i..].iter().position(|b| !(b.is_ascii_alphanumeric() || *b == b'_')).unwrap_or(bytes.len() - i);
            out.push(Token { tok: Tok::Ident(src[i..i + n].to_string()), span });
            advance(&mut i, &mut line, &mut col, n);
        } else if c.is_ascii_digit() {
            let n =
                bytes[i..].iter().position(|b| !(b.is_ascii_alphanumeric() || *b == b'_')).unwrap_or(bytes.len() - i);
            let text = src[i..i + n].replace('_', "");
            let text = text.trim_end_matches(['u', 'U', 'l', 'L']);
            let value = if let Some(h) = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
                i128::from_str_radix(h, 16)
            } else if let Some(b) = text.strip_prefix("0b").or_else(|| text.strip_prefix("0B")) {
                i128::from_str_radix(b, 2)
            } else {
                text.parse()
            };
            let value = value.ok().filter(|v| *v < 1i128 << 64).ok_or_else(|| {
                Diagnostic::error(Code::Syntax, span, format!("bad integer literal `{}`", &src[i..i + n]))
            })?;
            out.push(Token { tok: Tok::Int(value), span });
            advance(&mut i, &mut line, &mut col, n);
        } else if c == b'\'' {
            match bytes.get(i + 1..i + 3) {
                Some([ch, b'\'']) if ch.is_ascii() && *ch != b'\\' => {
                    out.push(Token { tok: Tok::Int(i128::from(*ch)), span });
                    advance(&mut i, &mut line, &mut col, 3);
                }
                _ => return Err(Diagnostic::error(Code::Syntax, span, "bad character literal")),
            }
        } else if let Some(p) = PUNCT.iter().find(|p| bytes[i..].starts_with(p.as_bytes())) {
            out.push(Token { tok: Tok::Punct(p), span });
            advance(&mut i, &mut line, &mut col, p.len());
        } else {
            let ch = src[i..].chars().next().unwrap();
            return Err(Diagnostic::error(Code::Syntax, span, format!("unexpected character `{ch}`")));
        }
    }
    out.push(Token { tok: Tok::Eof, span: Span { line, col } });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_positions() {
        let toks = lex("u8 f(u8 a) {\n  a <<= 0x10; // c\n}").unwrap();
        let kinds: Vec<&Tok> = toks.iter().map(|t| &t.tok).collect();
        assert_eq!(kinds[0], &Tok::Ident("u8".into()));
        assert!(kinds.contains(&&Tok::Punct("<<=")));
        assert!(kinds.contains(&&Tok::Int(16)));
        let shl = toks.iter().find(|t| t.tok == Tok::Punct("<<=")).unwrap();
        assert_eq!(shl.span, Span { line: 2, col: 5 });
        assert_eq!(toks.last().unwrap().tok, Tok::Eof);
    }

    #[test]
    fn errors() {
        assert_eq!(lex("a $ b").unwrap_err().span, Span { line: 1, col: 3 });
        assert!(lex("/* open").is_err());
        assert!(lex("0xzz").is_err());
        assert_eq!(lex("'a'").unwrap()[0].tok, Tok::Int(97));
    }
}
