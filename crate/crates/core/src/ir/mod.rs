// SPDX-License-Identifier: Apache-2.0

//! Multi-bit dataflow IR.
//!
//! An [`IrFunction`] is a straight-line list of [`IrNode`]s in topological
//! order. Inputs live in the same id space as nodes so that an output may
//! forward an input directly. Every value is at most 64 bits wide and all
//! arithmetic wraps modulo `2^width`.

mod eval;
mod text;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use eval::{eval_node, evaluate, evaluate_positional, EvalError, Evaluator};
pub use text::{parse_ir, serialize, IrParseError};

/// Widest value the IR can carry.
pub const MAX_WIDTH: u32 = 64;

/// Bit count plus signedness of a scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitWidth {
    bits: u32,
    signed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bit width {0} outside 1..=64")]
pub struct WidthError(pub u32);

impl BitWidth {
    pub fn new(bits: u32, signed: bool) -> Result<Self, WidthError> {
        if bits == 0 || bits > MAX_WIDTH {
            return Err(WidthError(bits));
        }
        Ok(Self { bits, signed })
    }

    /// Panics on an out-of-range width; meant for literals in code.
    pub fn unsigned(bits: u32) -> Self {
        Self::new(bits, false).expect("valid width")
    }

    pub fn signed(bits: u32) -> Self {
        Self::new(bits, true).expect("valid width")
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn is_signed(self) -> bool {
        self.signed
    }

    pub fn mask(self) -> u64 {
        mask(self.bits)
    }
}

impl fmt::Display for BitWidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = if self.signed { 'i' } else { 'u' };
        write!(f, "{prefix}{}", self.bits)
    }
}

impl FromStr for BitWidth {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (signed, digits) = match s.as_bytes().first() {
            Some(b'u') => (false, &s[1..]),
            Some(b'i') => (true, &s[1..]),
            _ => return Err(format!("bad scalar type `{s}`")),
        };
        let bits: u32 = digits.parse().map_err(|_| format!("bad scalar type `{s}`"))?;
        BitWidth::new(bits, signed).map_err(|e| e.to_string())
    }
}

/// All-ones mask of `bits` low bits (`bits` in 0..=64).
pub fn mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Sign-extends the low `bits` of `value` to an `i64`.
pub fn sign_extend(value: u64, bits: u32) -> i64 {
    let shift = 64 - bits;
    ((value << shift) as i64) >> shift
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "%{}", self.0)
    }
}

/// Operation performed by a node. Payloads that must be compile-time
/// constants (literal values, shift amounts, slice offsets) live here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Literal(u64),
    Add,
    Sub,
    Mul,
    UDiv,
    UMod,
    SDiv,
    SMod,
    And,
    Or,
    Xor,
    Not,
    Neg,
    ShlConst(u32),
    ShrConst(u32),
    Eq,
    Ne,
    Ult,
    Ule,
    Slt,
    Sle,
    /// `select(cond, then, else)`.
    Select,
    /// `concat(lo, hi)`: the first operand lands in the low bits.
    Concat,
    /// `slice(x, start)`: result width bits of `x` starting at `start`.
    Slice(u32),
    Zext,
    Sext,
}

impl NodeKind {
    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Literal(_) => "literal",
            NodeKind::Add => "add",
            NodeKind::Sub => "sub",
            NodeKind::Mul => "mul",
            NodeKind::UDiv => "udiv",
            NodeKind::UMod => "umod",
            NodeKind::SDiv => "sdiv",
            NodeKind::SMod => "smod",
            NodeKind::And => "and",
            NodeKind::Or => "or",
            NodeKind::Xor => "xor",
            NodeKind::Not => "not",
            NodeKind::Neg => "neg",
            NodeKind::ShlConst(_) => "shl_const",
            NodeKind::ShrConst(_) => "shr_const",
            NodeKind::Eq => "eq",
            NodeKind::Ne => "ne",
            NodeKind::Ult => "ult",
            NodeKind::Ule => "ule",
            NodeKind::Slt => "slt",
            NodeKind::Sle => "sle",
            NodeKind::Select => "select",
            NodeKind::Concat => "concat",
            NodeKind::Slice(_) => "slice",
            NodeKind::Zext => "zext",
            NodeKind::Sext => "sext",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            NodeKind::Literal(_) => 0,
            NodeKind::Not
            | NodeKind::Neg
            | NodeKind::ShlConst(_)
            | NodeKind::ShrConst(_)
            | NodeKind::Slice(_)
            | NodeKind::Zext
            | NodeKind::Sext => 1,
            NodeKind::Select => 3,
            _ => 2,
        }
    }

    pub fn is_literal(self) -> bool {
        matches!(self, NodeKind::Literal(_))
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, NodeKind::Eq | NodeKind::Ne | NodeKind::Ult | NodeKind::Ule | NodeKind::Slt | NodeKind::Sle)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub operands: Vec<NodeId>,
    pub width: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrInput {
    pub id: NodeId,
    pub name: String,
    pub ty: BitWidth,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrOutput {
    pub name: String,
    pub source: NodeId,
    pub ty: BitWidth,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrFunction {
    pub name: String,
    pub inputs: Vec<IrInput>,
    pub nodes: Vec<IrNode>,
    pub outputs: Vec<IrOutput>,
}

/// A structural problem found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub node: Option<NodeId>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Some(id) => write!(f, "{} at node {}", self.message, id),
            None => f.write_str(&self.message),
        }
    }
}

impl IrFunction {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), inputs: Vec::new(), nodes: Vec::new(), outputs: Vec::new() }
    }

    /// Sum of input widths; used to pick exhaustive vs sampled testing.
    pub fn input_bits(&self) -> u32 {
        self.inputs.iter().map(|i| i.ty.bits()).sum()
    }

    pub fn next_id(&self) -> NodeId {
        let max = self.inputs.iter().map(|i| i.id.0).chain(self.nodes.iter().map(|n| n.id.0)).max();
        NodeId(max.map_or(0, |m| m + 1))
    }

    /// Width of every defined value, keyed by id.
    pub fn widths(&self) -> HashMap<NodeId, u32> {
        self.inputs.iter().map(|i| (i.id, i.ty.bits())).chain(self.nodes.iter().map(|n| (n.id, n.width))).collect()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes that are not literals.
    pub fn op_count(&self) -> usize {
        self.nodes.iter().filter(|n| !n.kind.is_literal()).count()
    }

    /// Renumbers ids densely: inputs first, then nodes in list order.
    pub fn renumbered(&self) -> IrFunction {
        let mut map = HashMap::new();
        let mut next = 0u32;
        let mut fresh = |old: NodeId, map: &mut HashMap<NodeId, NodeId>| {
            let id = NodeId(next);
            next += 1;
            map.insert(old, id);
            id
        };
        let inputs =
            self.inputs.iter().map(|i| IrInput { id: fresh(i.id, &mut map), name: i.name.clone(), ty: i.ty }).collect();
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            let operands = n.operands.iter().map(|o| map[o]).collect();
            let id = fresh(n.id, &mut map);
            nodes.push(IrNode { id, kind: n.kind, operands, width: n.width });
        }
        let outputs =
            self.outputs.iter().map(|o| IrOutput { name: o.name.clone(), source: map[&o.source], ty: o.ty }).collect();
        IrFunction { name: self.name.clone(), inputs, nodes, outputs }
    }
}

/// Checks every structural invariant and returns all violations found.
pub fn validate(f: &IrFunction) -> Result<(), Vec<Violation>> {
    let mut errs = Vec::new();
    let mut err = |node: Option<NodeId>, message: String| errs.push(Violation { node, message });

    let mut defined: HashMap<NodeId, u32> = HashMap::new();
    let mut all_ids: HashMap<NodeId, usize> = HashMap::new();
    for (pos, n) in f.nodes.iter().enumerate() {
        all_ids.entry(n.id).or_insert(pos);
    }

    for input in &f.inputs {
        if defined.insert(input.id, input.ty.bits()).is_some() {
            err(Some(input.id), format!("duplicate id for input `{}`", input.name));
        }
    }

    for n in &f.nodes {
        let id = Some(n.id);
        if n.width == 0 || n.width > MAX_WIDTH {
            err(id, format!("width {} outside 1..=64", n.width));
        }
        if n.operands.len() != n.kind.arity() {
            err(id, format!("{} expects {} operands, found {}", n.kind.name(), n.kind.arity(), n.operands.len()));
        }
        let mut ow = Vec::with_capacity(n.operands.len());
        let mut operands_ok = true;
        for &op in &n.operands {
            match defined.get(&op) {
                Some(&w) => ow.push(w),
                None => {
                    operands_ok = false;
                    if op == n.id || all_ids.contains_key(&op) {
                        err(id, format!("use before definition of {op}"));
                    } else {
                        err(id, format!("dangling operand {op}"));
                    }
                }
            }
        }
        if operands_ok && n.operands.len() == n.kind.arity() {
            if let Some(msg) = width_rule(n.kind, n.width, &ow) {
                err(id, msg);
            }
        }
        if defined.insert(n.id, n.width).is_some() {
            err(id, "duplicate node id".to_string());
        }
    }

    for o in &f.outputs {
        match defined.get(&o.source) {
            None => err(Some(o.source), format!("output `{}` references undefined id", o.name)),
            Some(&w) if w != o.ty.bits() => {
                err(Some(o.source), format!("output `{}` declared {} but node is {} bits", o.name, o.ty, w))
            }
            _ => {}
        }
    }

    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

fn width_rule(kind: NodeKind, width: u32, ow: &[u32]) -> Option<String> {
    let mismatch = || Some("width mismatch".to_string());
    match kind {
        NodeKind::Literal(v) => (v & !mask(width) != 0).then(|| format!("literal {v} does not fit in {width} bits")),
        NodeKind::Add
        | NodeKind::Sub
        | NodeKind::Mul
        | NodeKind::UDiv
        | NodeKind::UMod
        | NodeKind::SDiv
        | NodeKind::SMod
        | NodeKind::And
        | NodeKind::Or
        | NodeKind::Xor => {
            if ow[0] != width || ow[1] != width {
                mismatch()
            } else {
                None
            }
        }
        NodeKind::Not | NodeKind::Neg | NodeKind::ShlConst(_) | NodeKind::ShrConst(_) => {
            (ow[0] != width).then(|| "width mismatch".to_string())
        }
        NodeKind::Eq | NodeKind::Ne | NodeKind::Ult | NodeKind::Ule | NodeKind::Slt | NodeKind::Sle => {
            if ow[0] != ow[1] {
                mismatch()
            } else if width != 1 {
                Some("comparison result must be 1 bit".to_string())
            } else {
                None
            }
        }
        NodeKind::Select => {
            if ow[0] != 1 {
                Some("select condition must be 1 bit".to_string())
            } else if ow[1] != width || ow[2] != width {
                mismatch()
            } else {
                None
            }
        }
        NodeKind::Concat => (ow[0] + ow[1] != width).then(|| "width mismatch".to_string()),
        NodeKind::Slice(start) => (start as u64 + width as u64 > ow[0] as u64)
            .then(|| format!("slice [{start}, {}) exceeds operand width {}", start + width, ow[0])),
        NodeKind::Zext | NodeKind::Sext => (width < ow[0]).then(|| "extension narrower than operand".to_string()),
    }
}
