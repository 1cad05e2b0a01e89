// SPDX-License-Identifier: Apache-2.0

//! Single-bit gate circuits and the lowering from multi-bit IR.
//!
//! Wires are dense: input wires come first (grouped per input, LSB-first),
//! then one wire per gate in list order. Every stage that builds or
//! rewrites a circuit keeps that numbering.

mod lower;
mod opt;
mod text;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::ir::BitWidth;

pub use lower::booleanify;
pub use opt::gate_optimize;
pub use text::{parse_gates, serialize_gates, GateParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WireId(pub u32);

impl fmt::Display for WireId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GateKind {
    And,
    Or,
    Xor,
    Not,
    /// `MUX(sel, then, else)`.
    Mux,
    Const0,
    Const1,
    Copy,
}

impl GateKind {
    pub const ALL: [GateKind; 8] = [
        GateKind::And,
        GateKind::Or,
        GateKind::Xor,
        GateKind::Not,
        GateKind::Mux,
        GateKind::Const0,
        GateKind::Const1,
        GateKind::Copy,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::Const0 | GateKind::Const1 => 0,
            GateKind::Not | GateKind::Copy => 1,
            GateKind::And | GateKind::Or | GateKind::Xor => 2,
            GateKind::Mux => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Xor => "XOR",
            GateKind::Not => "NOT",
            GateKind::Mux => "MUX",
            GateKind::Const0 => "CONST0",
            GateKind::Const1 => "CONST1",
            GateKind::Copy => "COPY",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn is_const(self) -> bool {
        matches!(self, GateKind::Const0 | GateKind::Const1)
    }

    /// Plain boolean semantics; `ins` holds at least `arity` bits.
    pub fn apply(self, ins: &[bool]) -> bool {
        match self {
            GateKind::And => ins[0] & ins[1],
            GateKind::Or => ins[0] | ins[1],
            GateKind::Xor => ins[0] ^ ins[1],
            GateKind::Not => !ins[0],
            GateKind::Mux => {
                if ins[0] {
                    ins[1]
                } else {
                    ins[2]
                }
            }
            GateKind::Const0 => false,
            GateKind::Const1 => true,
            GateKind::Copy => ins[0],
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Gate {
    pub out: WireId,
    pub kind: GateKind,
    inputs: [WireId; 3],
}

impl Gate {
    /// Panics if `operands.len()` does not match the kind's arity.
    pub fn new(out: WireId, kind: GateKind, operands: &[WireId]) -> Self {
        assert_eq!(operands.len(), kind.arity(), "{kind} arity");
        let mut inputs = [WireId(0); 3];
        inputs[..operands.len()].copy_from_slice(operands);
        Self { out, kind, inputs }
    }

    pub fn operands(&self) -> &[WireId] {
        &self.inputs[..self.kind.arity()]
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}(", self.out, self.kind)?;
        for (i, w) in self.operands().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{w}")?;
        }
        f.write_str(")")
    }
}

/// Named bundle of wires carrying one scalar, LSB first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireGroup {
    pub name: String,
    pub ty: BitWidth,
    pub wires: Vec<WireId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateCircuit {
    pub name: String,
    pub inputs: Vec<WireGroup>,
    pub outputs: Vec<WireGroup>,
    pub gates: Vec<Gate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GateError {
    #[error("malformed circuit: {0}")]
    Malformed(String),
    #[error("expected {expected} input bits, got {got}")]
    BitCount { expected: usize, got: usize },
}

impl GateCircuit {
    pub fn input_wire_count(&self) -> usize {
        self.inputs.iter().map(|g| g.wires.len()).sum()
    }

    pub fn output_wire_count(&self) -> usize {
        self.outputs.iter().map(|g| g.wires.len()).sum()
    }

    pub fn wire_count(&self) -> usize {
        self.input_wire_count() + self.gates.len()
    }

    /// Gates other than constants.
    pub fn logic_gate_count(&self) -> usize {
        self.gates.iter().filter(|g| !g.kind.is_const()).count()
    }

    pub fn counts_by_kind(&self) -> BTreeMap<GateKind, usize> {
        let mut m = BTreeMap::new();
        for g in &self.gates {
            *m.entry(g.kind).or_insert(0) += 1;
        }
        m
    }

    /// Checks dense numbering, arity, operand ordering and output groups.
    pub fn validate(&self) -> Result<(), GateError> {
        let bad = |m: String| Err(GateError::Malformed(m));
        let mut next = 0u32;
        for g in &self.inputs {
            if g.wires.len() != g.ty.bits() as usize {
                return bad(format!("input `{}` has {} wires for {}", g.name, g.wires.len(), g.ty));
            }
            for w in &g.wires {
                if w.0 != next {
                    return bad(format!("input `{}` wire {} out of sequence", g.name, w));
                }
                next += 1;
            }
        }
        for g in &self.gates {
            if g.out.0 != next {
                return bad(format!("gate {g} out of sequence (expected w{next})"));
            }
            if let Some(w) = g.operands().iter().find(|w| w.0 >= next) {
                return bad(format!("gate {g} reads {w} before it is defined"));
            }
            next += 1;
        }
        for g in &self.outputs {
            if g.wires.len() != g.ty.bits() as usize {
                return bad(format!("output `{}` has {} wires for {}", g.name, g.wires.len(), g.ty));
            }
            if let Some(w) = g.wires.iter().find(|w| w.0 >= next) {
                return bad(format!("output `{}` references missing wire {w}", g.name));
            }
        }
        Ok(())
    }

    /// Longest chain of gates from any input to any wire.
    pub fn depth(&self) -> usize {
        let mut level = vec![0usize; self.wire_count()];
        let mut depth = 0;
        for g in &self.gates {
            let l = 1 + g.operands().iter().map(|w| level[w.0 as usize]).max().unwrap_or(0);
            level[g.out.0 as usize] = l;
            depth = depth.max(l);
        }
        depth
    }
}

/// Evaluates the circuit over plaintext bits. Inputs and outputs are the
/// concatenation of their groups, each LSB first.
pub fn evaluate_gates(c: &GateCircuit, input_bits: &[bool]) -> Result<Vec<bool>, GateError> {
    let n_in = c.input_wire_count();
    if input_bits.len() != n_in {
        return Err(GateError::BitCount { expected: n_in, got: input_bits.len() });
    }
    let mut wires = Vec::with_capacity(c.wire_count());
    wires.extend_from_slice(input_bits);
    let mut ins = [false; 3];
    for g in &c.gates {
        for (slot, w) in ins.iter_mut().zip(g.operands()) {
            *slot = wires[w.0 as usize];
        }
        wires.push(g.kind.apply(&ins));
    }
    Ok(c.outputs.iter().flat_map(|g| g.wires.iter().map(|w| wires[w.0 as usize])).collect())
}

/// Splits `value` into `bits` booleans, LSB first.
pub fn to_bits(value: u64, bits: u32) -> impl Iterator<Item = bool> {
    (0..bits).map(move |i| (value >> i) & 1 == 1)
}

pub fn from_bits(bits: &[bool]) -> u64 {
    bits.iter().enumerate().fold(0, |acc, (i, &b)| acc | ((b as u64) << i))
}

/// Word-level convenience over [`evaluate_gates`]: one value per group.
pub fn evaluate_words(c: &GateCircuit, inputs: &[u64]) -> Result<Vec<u64>, GateError> {
    if inputs.len() != c.inputs.len() {
        return Err(GateError::BitCount { expected: c.inputs.len(), got: inputs.len() });
    }
    let bits: Vec<bool> = c.inputs.iter().zip(inputs).flat_map(|(g, &v)| to_bits(v, g.wires.len() as u32)).collect();
    let out = evaluate_gates(c, &bits)?;
    let mut pos = 0;
    Ok(c.outputs
        .iter()
        .map(|g| {
            let v = from_bits(&out[pos..pos + g.wires.len()]);
            pos += g.wires.len();
            v
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// One Fig.-1-style full adder slice with explicit carry-in.
    fn full_adder() -> GateCircuit {
        let w = WireId;
        let u1 = BitWidth::unsigned(1);
        let group = |name: &str, id: u32| WireGroup { name: name.into(), ty: u1, wires: vec![w(id)] };
        GateCircuit {
            name: "fa".into(),
            inputs: vec![group("a", 0), group("b", 1), group("cin", 2)],
            outputs: vec![group("s", 4), group("cout", 7)],
            gates: vec![
                Gate::new(w(3), GateKind::Xor, &[w(0), w(1)]),
                Gate::new(w(4), GateKind::Xor, &[w(3), w(2)]),
                Gate::new(w(5), GateKind::And, &[w(2), w(3)]),
                Gate::new(w(6), GateKind::And, &[w(0), w(1)]),
                Gate::new(w(7), GateKind::Or, &[w(6), w(5)]),
            ],
        }
    }

    #[test]
    fn full_adder_slice_carries() {
        let c = full_adder();
        c.validate().unwrap();
        assert_eq!(evaluate_gates(&c, &[true, true, false]).unwrap(), vec![false, true]);
        for v in 0..8u64 {
            let bits: Vec<bool> = to_bits(v, 3).collect();
            let sum = bits.iter().filter(|&&b| b).count();
            let out = evaluate_gates(&c, &bits).unwrap();
            assert_eq!(out, vec![sum & 1 == 1, sum >= 2]);
        }
    }

    #[test]
    fn bit_count_mismatch() {
        assert_eq!(evaluate_gates(&full_adder(), &[true]), Err(GateError::BitCount { expected: 3, got: 1 }));
    }

    #[test]
    fn validate_rejects_forward_reads() {
        let mut c = full_adder();
        c.gates[0] = Gate::new(WireId(3), GateKind::Xor, &[WireId(0), WireId(5)]);
        assert!(c.validate().is_err());
        let mut c = full_adder();
        c.outputs[0].wires[0] = WireId(99);
        assert!(c.validate().is_err());
    }

    #[test]
    fn depth_is_longest_chain() {
        assert_eq!(full_adder().depth(), 3);
    }

    #[test]
    fn gate_truth_tables() {
        let t = |k: GateKind, ins: &[bool]| k.apply(ins);
        for a in [false, true] {
            assert_eq!(t(GateKind::Not, &[a]), !a);
            assert_eq!(t(GateKind::Copy, &[a]), a);
            for b in [false, true] {
                assert_eq!(t(GateKind::And, &[a, b]), a && b);
                assert_eq!(t(GateKind::Or, &[a, b]), a || b);
                assert_eq!(t(GateKind::Xor, &[a, b]), a != b);
                for s in [false, true] {
                    assert_eq!(t(GateKind::Mux, &[s, a, b]), if s { a } else { b });
                }
            }
        }
    }
}
