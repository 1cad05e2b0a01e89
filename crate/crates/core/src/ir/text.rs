// SPDX-License-Identifier: Apache-2.0

//! Line-oriented `.ir` text format.
//!
//! ```text
//! fn sum
//! in a %0:u8
//! in b %1:u8
//! %2:8 = add(%0, %1)
//! out ret %2:u8
//! ```
//!
//! Nodes appear one per line in topological order as
//! `%id:width = kind(operands..., payload)`. Payload-carrying kinds put the
//! constant last: `literal(200)`, `shl_const(%3, 2)`, `slice(%3, 4)`.
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;

use thiserror::Error;

use super::{BitWidth, IrFunction, IrInput, IrNode, IrOutput, NodeId, NodeKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct IrParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

pub fn serialize(f: &IrFunction) -> String {
    let mut out = String::new();
    writeln!(out, "fn {}", f.name).unwrap();
    for i in &f.inputs {
        writeln!(out, "in {} {}:{}", i.name, i.id, i.ty).unwrap();
    }
    for n in &f.nodes {
        write!(out, "{}:{} = {}(", n.id, n.width, n.kind.name()).unwrap();
        let mut args: Vec<String> = n.operands.iter().map(|o| o.to_string()).collect();
        match n.kind {
            NodeKind::Literal(v) => args.push(v.to_string()),
            NodeKind::ShlConst(s) | NodeKind::ShrConst(s) | NodeKind::Slice(s) => args.push(s.to_string()),
            _ => {}
        }
        out.push_str(&args.join(", "));
        out.push_str(")\n");
    }
    for o in &f.outputs {
        writeln!(out, "out {} {}:{}", o.name, o.source, o.ty).unwrap();
    }
    out
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> IrParseError {
        IrParseError { line: self.line, column: self.pos + 1, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.text[self.pos..].starts_with([' ', '\t']) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, s: &str) -> Result<(), IrParseError> {
        self.skip_ws();
        if self.text[self.pos..].starts_with(s) {
            self.pos += s.len();
            Ok(())
        } else {
            Err(self.err(format!("expected `{s}`")))
        }
    }

    fn peek_is(&mut self, s: &str) -> bool {
        self.skip_ws();
        self.text[self.pos..].starts_with(s)
    }

    /// A run of characters up to whitespace or one of `stops`.
    fn word(&mut self, stops: &[char]) -> Result<&'a str, IrParseError> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len = rest.find(|c: char| c.is_whitespace() || stops.contains(&c)).unwrap_or(rest.len());
        if len == 0 {
            return Err(self.err("expected a token"));
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    fn number<T: std::str::FromStr>(&mut self, stops: &[char]) -> Result<T, IrParseError> {
        let start = self.pos;
        let w = self.word(stops)?;
        w.parse().map_err(|_| {
            let mut e = self.err(format!("expected a number, found `{w}`"));
            e.column = start + 1;
            e
        })
    }

    fn node_id(&mut self) -> Result<NodeId, IrParseError> {
        self.eat("%")?;
        Ok(NodeId(self.number(&[':', ',', ')'])?))
    }

    fn end(&mut self) -> Result<(), IrParseError> {
        self.skip_ws();
        if self.pos < self.text.len() {
            Err(self.err("unexpected trailing text"))
        } else {
            Ok(())
        }
    }
}

fn kind_from_name(name: &str, v: u64) -> Option<NodeKind> {
    Some(match name {
        "literal" => NodeKind::Literal(v),
        "add" => NodeKind::Add,
        "sub" => NodeKind::Sub,
        "mul" => NodeKind::Mul,
        "udiv" => NodeKind::UDiv,
        "umod" => NodeKind::UMod,
        "sdiv" => NodeKind::SDiv,
        "smod" => NodeKind::SMod,
        "and" => NodeKind::And,
        "or" => NodeKind::Or,
        "xor" => NodeKind::Xor,
        "not" => NodeKind::Not,
        "neg" => NodeKind::Neg,
        "shl_const" => NodeKind::ShlConst(v as u32),
        "shr_const" => NodeKind::ShrConst(v as u32),
        "eq" => NodeKind::Eq,
        "ne" => NodeKind::Ne,
        "ult" => NodeKind::Ult,
        "ule" => NodeKind::Ule,
        "slt" => NodeKind::Slt,
        "sle" => NodeKind::Sle,
        "select" => NodeKind::Select,
        "concat" => NodeKind::Concat,
        "slice" => NodeKind::Slice(v as u32),
        "zext" => NodeKind::Zext,
        "sext" => NodeKind::Sext,
        _ => return None,
    })
}

fn has_payload(name: &str) -> bool {
    matches!(name, "literal" | "shl_const" | "shr_const" | "slice")
}

/// Parses the `.ir` text format. The result is not validated.
pub fn parse_ir(text: &str) -> Result<IrFunction, IrParseError> {
    let mut f: Option<IrFunction> = None;
    for (idx, raw) in text.lines().enumerate() {
        let mut c = Cursor { text: raw, pos: 0, line: idx + 1 };
        c.skip_ws();
        if c.pos == raw.len() || raw[c.pos..].starts_with('#') {
            continue;
        }
        if f.is_none() {
            c.eat("fn")?;
            let name = c.word(&[])?;
            c.end()?;
            f = Some(IrFunction::new(name));
            continue;
        }
        let func = f.as_mut().expect("header parsed");
        if c.peek_is("in ") {
            c.eat("in")?;
            let name = c.word(&[])?.to_string();
            let id = c.node_id()?;
            c.eat(":")?;
            let ty = parse_ty(&mut c)?;
            c.end()?;
            func.inputs.push(IrInput { id, name, ty });
        } else if c.peek_is("out ") {
            c.eat("out")?;
            let name = c.word(&[])?.to_string();
            let source = c.node_id()?;
            c.eat(":")?;
            let ty = parse_ty(&mut c)?;
            c.end()?;
            func.outputs.push(IrOutput { name, source, ty });
        } else {
            func.nodes.push(parse_node(&mut c)?);
        }
    }
    f.ok_or(IrParseError { line: 1, column: 1, message: "missing `fn` header".into() })
}

fn parse_ty(c: &mut Cursor<'_>) -> Result<BitWidth, IrParseError> {
    let start = c.pos;
    let w = c.word(&[])?;
    w.parse().map_err(|m: String| IrParseError { line: c.line, column: start + 1, message: m })
}

fn parse_node(c: &mut Cursor<'_>) -> Result<IrNode, IrParseError> {
    let id = c.node_id()?;
    c.eat(":")?;
    let width: u32 = c.number(&['='])?;
    c.eat("=")?;
    c.skip_ws();
    let kind_col = c.pos;
    let name = c.word(&['('])?;
    if kind_from_name(name, 0).is_none() {
        return Err(IrParseError {
            line: c.line,
            column: kind_col + 1,
            message: format!("unknown node kind `{name}`"),
        });
    }
    c.eat("(")?;
    let mut operands = Vec::new();
    let mut payload = 0u64;
    let mut first = true;
    while !c.peek_is(")") {
        if !first {
            c.eat(",")?;
        }
        first = false;
        if c.peek_is("%") {
            operands.push(c.node_id()?);
        } else if has_payload(name) {
            payload = c.number(&[',', ')'])?;
        } else {
            return Err(c.err("expected an operand"));
        }
    }
    c.eat(")")?;
    c.end()?;
    let kind = kind_from_name(name, payload).expect("checked above");
    Ok(IrNode { id, kind, operands, width })
}

#[cfg(test)]
mod tests {
    use super::super::tests::sum_ir;
    use super::*;

    #[test]
    fn sum_round_trips() {
        let f = sum_ir();
        let text = serialize(&f);
        assert_eq!(text, "fn sum\nin a %0:u8\nin b %1:u8\n%2:8 = add(%0, %1)\nout ret %2:u8\n");
        assert_eq!(parse_ir(&text).unwrap(), f);
    }

    #[test]
    fn forwarded_input_round_trips() {
        let text = "fn id\nin x %0:i5\nout ret %0:i5\n";
        let f = parse_ir(text).unwrap();
        assert!(f.nodes.is_empty());
        assert_eq!(serialize(&f), text);
    }

    #[test]
    fn payload_kinds_round_trip() {
        let text = "fn p\nin x %0:u8\n%1:8 = literal(200)\n%2:8 = shl_const(%0, 3)\n\
                    %3:4 = slice(%2, 4)\n%4:8 = select(%5, %1, %2)\nout r %3:u4\n";
        let f = parse_ir(text).unwrap();
        assert_eq!(f.nodes[0].kind, NodeKind::Literal(200));
        assert_eq!(f.nodes[2].kind, NodeKind::Slice(4));
        assert_eq!(serialize(&f), text);
    }

    #[test]
    fn unknown_kind_is_named() {
        let err = parse_ir("fn f\nin a %0:u8\n%1:8 = FOO(%0)\n").unwrap_err();
        assert_eq!(err.line, 3);
        assert_eq!(err.column, 8);
        assert!(err.message.contains("`FOO`"), "{err}");
    }

    #[test]
    fn malformed_lines_are_positioned() {
        let err = parse_ir("fn f\nin a %0:q8\n").unwrap_err();
        assert_eq!((err.line, err.column), (2, 9));
        let err = parse_ir("fn f\n%1:x = add(%0, %0)\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(parse_ir("").is_err());
    }
}
