// SPDX-License-Identifier: Apache-2.0

//! The `.gates` text format.
//!
//! ```text
//! circuit sum
//! inputs a:8 b:8
//! outputs ret:8
//! w16 = CONST0()
//! w17 = XOR(w0, w8)
//! ...
//! out ret = w17 w21 w26 w31 w36 w41 w46 w51
//! ```
//!
//! Input wires are implicit: the header's groups occupy `w0..` in order,
//! LSB first. Signed groups write their width as `s8`. Gate lines follow in
//! topological order with MUX as `MUX(sel, then, else)`. Each `out` line
//! lists one output group's wires LSB first.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::ir::BitWidth;

use super::{Gate, GateCircuit, GateKind, WireGroup, WireId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct GateParseError {
    pub line: usize,
    pub message: String,
}

fn group_decl(g: &WireGroup) -> String {
    let s = if g.ty.is_signed() { "s" } else { "" };
    format!("{}:{s}{}", g.name, g.ty.bits())
}

pub fn serialize_gates(c: &GateCircuit) -> String {
    let mut out = String::new();
    writeln!(out, "circuit {}", c.name).unwrap();
    let decls = |gs: &[WireGroup]| gs.iter().map(group_decl).collect::<Vec<_>>().join(" ");
    writeln!(out, "{}", format!("inputs {}", decls(&c.inputs)).trim_end()).unwrap();
    writeln!(out, "{}", format!("outputs {}", decls(&c.outputs)).trim_end()).unwrap();
    for g in &c.gates {
        writeln!(out, "{g}").unwrap();
    }
    for g in &c.outputs {
        let wires: Vec<String> = g.wires.iter().map(|w| w.to_string()).collect();
        writeln!(out, "out {} = {}", g.name, wires.join(" ")).unwrap();
    }
    out
}

fn parse_decl(tok: &str) -> Result<(String, BitWidth), String> {
    let (name, width) = tok.rsplit_once(':').ok_or_else(|| format!("expected `name:width`, found `{tok}`"))?;
    let (signed, digits) = match width.strip_prefix('s') {
        Some(d) => (true, d),
        None => (false, width),
    };
    let bits: u32 = digits.parse().map_err(|_| format!("bad width in `{tok}`"))?;
    let ty = BitWidth::new(bits, signed).map_err(|e| e.to_string())?;
    if name.is_empty() {
        return Err(format!("missing name in `{tok}`"));
    }
    Ok((name.to_string(), ty))
}

/// Parses a `.gates` file. Wire names may use any numbering; the result is
/// renumbered densely and validated.
pub fn parse_gates(text: &str) -> Result<GateCircuit, GateParseError> {
    let mut lines =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let err = |line: usize, message: String| GateParseError { line, message };

    let mut header = |key: &str| -> Result<(usize, String), GateParseError> {
        let (n, l) = lines.next().ok_or_else(|| err(0, format!("missing `{key}` line")))?;
        let rest = l
            .strip_prefix(key)
            .filter(|r| r.is_empty() || r.starts_with(' '))
            .ok_or_else(|| err(n, format!("expected `{key}`")))?;
        Ok((n, rest.trim().to_string()))
    };
    let (_, name) = header("circuit")?;
    let (in_line, in_decls) = header("inputs")?;
    let (out_line, out_decls) = header("outputs")?;

    let mut names: HashMap<String, WireId> = HashMap::new();
    let mut next = 0u32;
    let mut inputs = Vec::new();
    for tok in in_decls.split_whitespace() {
        let (gname, ty) = parse_decl(tok).map_err(|m| err(in_line, m))?;
        let wires: Vec<WireId> = (0..ty.bits()).map(|i| WireId(next + i)).collect();
        for w in &wires {
            names.insert(w.to_string(), *w);
        }
        next += ty.bits();
        inputs.push(WireGroup { name: gname, ty, wires });
    }
    let mut outputs: Vec<WireGroup> = Vec::new();
    for tok in out_decls.split_whitespace() {
        let (gname, ty) = parse_decl(tok).map_err(|m| err(out_line, m))?;
        outputs.push(WireGroup { name: gname, ty, wires: Vec::new() });
    }

    let mut gates = Vec::new();
    let lookup = |names: &HashMap<String, WireId>, n: usize, w: &str| {
        names.get(w).copied().ok_or_else(|| err(n, format!("undefined wire `{w}`")))
    };
    for (n, line) in lines {
        if let Some(rest) = line.strip_prefix("out ") {
            let (gname, wires) = rest.split_once('=').ok_or_else(|| err(n, "expected `out name = wires`".into()))?;
            let gname = gname.trim();
            let group = outputs
                .iter_mut()
                .find(|g| g.name == gname)
                .ok_or_else(|| err(n, format!("undeclared output `{gname}`")))?;
            if !group.wires.is_empty() {
                return Err(err(n, format!("output `{gname}` assigned twice")));
            }
            group.wires = wires.split_whitespace().map(|w| lookup(&names, n, w)).collect::<Result<_, _>>()?;
            if group.wires.len() != group.ty.bits() as usize {
                return Err(err(
                    n,
                    format!("output `{gname}` needs {} wires, found {}", group.ty.bits(), group.wires.len()),
                ));
            }
            continue;
        }
        let (lhs, rhs) = line.split_once('=').ok_or_else(|| err(n, "expected `wire = KIND(...)`".into()))?;
        let lhs = lhs.trim();
        let rhs = rhs.trim();
        let open = rhs.find('(').ok_or_else(|| err(n, "expected `(`".into()))?;
        let kind_name = rhs[..open].trim();
        let kind = GateKind::from_name(kind_name).ok_or_else(|| err(n, format!("unknown gate kind `{kind_name}`")))?;
        let args = rhs[open + 1..].strip_suffix(')').ok_or_else(|| err(n, "expected `)`".into()))?;
        let ins: Vec<WireId> = args
            .split(',')
            .map(str::trim)
            .filter(|a| !a.is_empty())
            .map(|a| lookup(&names, n, a))
            .collect::<Result<_, _>>()?;
        if ins.len() != kind.arity() {
            return Err(err(n, format!("{kind} takes {} operands, found {}", kind.arity(), ins.len())));
        }
        if names.contains_key(lhs) {
            return Err(err(n, format!("wire `{lhs}` defined twice")));
        }
        let out = WireId(next);
        next += 1;
        names.insert(lhs.to_string(), out);
        gates.push(Gate::new(out, kind, &ins));
    }
    if let Some(g) = outputs.iter().find(|g| g.wires.is_empty()) {
        return Err(err(0, format!("output `{}` has no `out` line", g.name)));
    }
    let c = GateCircuit { name, inputs, outputs, gates };
    c.validate().map_err(|e| err(0, e.to_string()))?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::booleanifier::{booleanify, evaluate_words};
    use crate::ir::parse_ir;

    fn sum_circuit() -> GateCircuit {
        let f = parse_ir("fn sum\nin a %0:u8\nin b %1:u8\n%2:8 = add(%0, %1)\nout ret %2:u8\n").unwrap();
        booleanify(&f).unwrap()
    }

    #[test]
    fn header_and_round_trip() {
        let c = sum_circuit();
        let text = serialize_gates(&c);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("circuit sum"));
        assert_eq!(lines.next(), Some("inputs a:8 b:8"));
        assert_eq!(lines.next(), Some("outputs ret:8"));
        assert_eq!(lines.next(), Some("w16 = CONST0()"));
        assert_eq!(lines.next(), Some("w17 = XOR(w0, w8)"));
        assert_eq!(parse_gates(&text).unwrap(), c);
    }

    #[test]
    fn renames_arbitrary_wire_names() {
        let text = "circuit t\ninputs x:s2\noutputs y:1\nw9 = AND(w0, w1)\nw4 = NOT(w9)\nout y = w4\n";
        let c = parse_gates(text).unwrap();
        assert_eq!(c.inputs[0].ty, BitWidth::signed(2));
        assert_eq!(evaluate_words(&c, &[3]).unwrap(), vec![0]);
        assert_eq!(evaluate_words(&c, &[1]).unwrap(), vec![1]);
        assert!(serialize_gates(&c).contains("w3 = NOT(w2)"));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_gates("circuit t\ninputs a:1\noutputs y:1\nw1 = NAND(w0, w0)\n").unwrap_err();
        assert_eq!(e.line, 4);
        assert!(e.message.contains("NAND"));
        let e = parse_gates("circuit t\ninputs a:1\noutputs y:1\nw1 = AND(w0, w7)\n").unwrap_err();
        assert!(e.message.contains("undefined wire `w7`"));
        let e = parse_gates("circuit t\ninputs a:1\noutputs y:1\n").unwrap_err();
        assert!(e.message.contains("no `out` line"));
    }
}
