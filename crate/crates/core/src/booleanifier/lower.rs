// SPDX-License-Identifier: Apache-2.0

//! IR to gate lowering.
//!
//! ADD is the ripple-carry full adder: per bit
//! `t = XOR(a, b); s = XOR(t, c); c1 = AND(c, t); c2 = AND(a, b); c = OR(c2, c1)`
//! with the carry starting at CONST0. Everything else is built from it:
//! SUB is `a + NOT(b) + 1`, MUL is shift-and-add, UDIV/UMOD is restoring
//! division and the signed variants wrap the unsigned ones in sign fixups.

use std::collections::HashMap;

use crate::ir::{validate, EvalError, IrFunction, NodeId, NodeKind};

use super::{Gate, GateCircuit, GateKind, WireGroup, WireId};

type Bits = Vec<WireId>;

struct Builder {
    next: u32,
    gates: Vec<Gate>,
    const0: Option<WireId>,
    const1: Option<WireId>,
}

impl Builder {
    fn gate(&mut self, kind: GateKind, ins: &[WireId]) -> WireId {
        let out = WireId(self.next);
        self.next += 1;
        self.gates.push(Gate::new(out, kind, ins));
        out
    }

    fn zero(&mut self) -> WireId {
        match self.const0 {
            Some(w) => w,
            None => {
                let w = self.gate(GateKind::Const0, &[]);
                self.const0 = Some(w);
                w
            }
        }
    }

    fn one(&mut self) -> WireId {
        match self.const1 {
            Some(w) => w,
            None => {
                let w = self.gate(GateKind::Const1, &[]);
                self.const1 = Some(w);
                w
            }
        }
    }

    fn constant(&mut self, value: u64, width: u32) -> Bits {
        (0..width).map(|i| if (value >> i) & 1 == 1 { self.one() } else { self.zero() }).collect()
    }

    fn and(&mut self, a: WireId, b: WireId) -> WireId {
        self.gate(GateKind::And, &[a, b])
    }

    fn or(&mut self, a: WireId, b: WireId) -> WireId {
        self.gate(GateKind::Or, &[a, b])
    }

    fn xor(&mut self, a: WireId, b: WireId) -> WireId {
        self.gate(GateKind::Xor, &[a, b])
    }

    fn not(&mut self, a: WireId) -> WireId {
        self.gate(GateKind::Not, &[a])
    }

    fn mux(&mut self, s: WireId, t: WireId, e: WireId) -> WireId {
        self.gate(GateKind::Mux, &[s, t, e])
    }

    fn not_all(&mut self, a: &[WireId]) -> Bits {
        a.iter().map(|&w| self.not(w)).collect()
    }

    fn mux_all(&mut self, s: WireId, t: &[WireId], e: &[WireId]) -> Bits {
        t.iter().zip(e).map(|(&t, &e)| self.mux(s, t, e)).collect()
    }

    /// Ripple-carry adder; returns the sum bits and the final carry.
    fn ripple_add(&mut self, a: &[WireId], b: &[WireId], carry_in: WireId) -> (Bits, WireId) {
        let mut carry = carry_in;
        let mut sum = Vec::with_capacity(a.len());
        for (&ai, &bi) in a.iter().zip(b) {
            let t = self.xor(ai, bi);
            sum.push(self.xor(t, carry));
            let c1 = self.and(carry, t);
            let c2 = self.and(ai, bi);
            carry = self.or(c2, c1);
        }
        (sum, carry)
    }

    fn add(&mut self, a: &[WireId], b: &[WireId]) -> Bits {
        let zero = self.zero();
        self.ripple_add(a, b, zero).0
    }

    /// `a - b` as `a + NOT(b) + 1`; the carry is set iff `a >= b` unsigned.
    fn sub_with_carry(&mut self, a: &[WireId], b: &[WireId]) -> (Bits, WireId) {
        let nb = self.not_all(b);
        let one = self.one();
        self.ripple_add(a, &nb, one)
    }

    /// Carry chain of `a + NOT(b) + 1` without the sum bits: set iff `a >= b`.
    fn uge(&mut self, a: &[WireId], b: &[WireId]) -> WireId {
        let mut carry = self.one();
        for (&ai, &bi) in a.iter().zip(b) {
            let nb = self.not(bi);
            let t = self.xor(ai, nb);
            let c1 = self.and(carry, t);
            let c2 = self.and(ai, nb);
            carry = self.or(c2, c1);
        }
        carry
    }

    fn increment(&mut self, a: &[WireId]) -> Bits {
        let mut carry = self.one();
        let mut out = Vec::with_capacity(a.len());
        for &ai in a {
            out.push(self.xor(ai, carry));
            carry = self.and(ai, carry);
        }
        out
    }

    fn neg(&mut self, a: &[WireId]) -> Bits {
        let inv = self.not_all(a);
        self.increment(&inv)
    }

    fn mul(&mut self, a: &[WireId], b: &[WireId]) -> Bits {
        let w = a.len();
        let mut acc: Bits = a.iter().map(|&aj| self.and(aj, b[0])).collect();
        for i in 1..w {
            let row: Bits = a[..w - i].iter().map(|&aj| self.and(aj, b[i])).collect();
            let upper = self.add(&acc[i..], &row);
            acc[i..].copy_from_slice(&upper);
        }
        acc
    }

    /// Restoring division. Returns `(quotient, remainder)`; a zero divisor
    /// yields an all-ones quotient and the dividend as remainder.
    fn udivmod(&mut self, a: &[WireId], b: &[WireId]) -> (Bits, Bits) {
        let w = a.len();
        let zero = self.zero();
        let mut rem: Bits = vec![zero; w];
        let mut quot: Bits = vec![zero; w];
        let mut divisor = b.to_vec();
        divisor.push(zero);
        for i in (0..w).rev() {
            let mut shifted = Vec::with_capacity(w + 1);
            shifted.push(a[i]);
            shifted.extend_from_slice(&rem);
            let (diff, fits) = self.sub_with_carry(&shifted, &divisor);
            quot[i] = fits;
            rem = self.mux_all(fits, &diff[..w], &shifted[..w]);
        }
        (quot, rem)
    }

    fn or_reduce(&mut self, bits: &[WireId]) -> WireId {
        let mut layer = bits.to_vec();
        while layer.len() > 1 {
            let mut next = Vec::with_capacity(layer.len().div_ceil(2));
            for pair in layer.chunks(2) {
                next.push(match *pair {
                    [x, y] => self.or(x, y),
                    [x] => x,
                    _ => unreachable!(),
                });
            }
            layer = next;
        }
        layer[0]
    }

    fn ne(&mut self, a: &[WireId], b: &[WireId]) -> WireId {
        let diffs: Bits = a.iter().zip(b).map(|(&x, &y)| self.xor(x, y)).collect();
        self.or_reduce(&diffs)
    }

    fn flip_msb(&mut self, a: &[WireId]) -> Bits {
        let mut v = a.to_vec();
        let last = v.len() - 1;
        v[last] = self.not(v[last]);
        v
    }

    fn abs(&mut self, a: &[WireId]) -> Bits {
        let sign = *a.last().expect("nonempty");
        let negated = self.neg(a);
        self.mux_all(sign, &negated, a)
    }

    fn sdivmod(&mut self, a: &[WireId], b: &[WireId]) -> (Bits, Bits) {
        let sa = *a.last().expect("nonempty");
        let sb = *b.last().expect("nonempty");
        let abs_a = self.abs(a);
        let abs_b = self.abs(b);
        let (q, r) = self.udivmod(&abs_a, &abs_b);
        let q_neg = self.xor(sa, sb);
        let nq = self.neg(&q);
        let q = self.mux_all(q_neg, &nq, &q);
        let b_nonzero = self.or_reduce(b);
        let ones = vec![self.one(); a.len()];
        let q = self.mux_all(b_nonzero, &q, &ones);
        let nr = self.neg(&r);
        let r = self.mux_all(sa, &nr, &r);
        (q, r)
    }
}

/// Flattens a validated IR function into a gate circuit computing the same
/// function bit for bit.
pub fn booleanify(f: &IrFunction) -> Result<GateCircuit, EvalError> {
    validate(f).map_err(EvalError::Invalid)?;
    let mut values: HashMap<NodeId, Bits> = HashMap::new();
    let mut next = 0u32;
    let mut inputs = Vec::with_capacity(f.inputs.len());
    for input in &f.inputs {
        let wires: Bits = (0..input.ty.bits()).map(|i| WireId(next + i)).collect();
        next += input.ty.bits();
        values.insert(input.id, wires.clone());
        inputs.push(WireGroup { name: input.name.clone(), ty: input.ty, wires });
    }
    let mut b = Builder { next, gates: Vec::new(), const0: None, const1: None };

    for n in &f.nodes {
        let ops: Vec<&Bits> = n.operands.iter().map(|o| &values[o]).collect();
        let w = n.width as usize;
        let bits: Bits = match n.kind {
            NodeKind::Literal(v) => b.constant(v, n.width),
            NodeKind::Add => b.add(ops[0], ops[1]),
            NodeKind::Sub => b.sub_with_carry(ops[0], ops[1]).0,
            NodeKind::Mul => b.mul(ops[0], ops[1]),
            NodeKind::UDiv => b.udivmod(ops[0], ops[1]).0,
            NodeKind::UMod => b.udivmod(ops[0], ops[1]).1,
            NodeKind::SDiv => b.sdivmod(ops[0], ops[1]).0,
            NodeKind::SMod => b.sdivmod(ops[0], ops[1]).1,
            NodeKind::And => ops[0].iter().zip(ops[1]).map(|(&x, &y)| b.and(x, y)).collect(),
            NodeKind::Or => ops[0].iter().zip(ops[1]).map(|(&x, &y)| b.or(x, y)).collect(),
            NodeKind::Xor => ops[0].iter().zip(ops[1]).map(|(&x, &y)| b.xor(x, y)).collect(),
            NodeKind::Not => b.not_all(ops[0]),
            NodeKind::Neg => b.neg(ops[0]),
            NodeKind::ShlConst(s) => {
                let s = s as usize;
                (0..w).map(|i| if i < s { b.zero() } else { ops[0][i - s] }).collect()
            }
            NodeKind::ShrConst(s) => {
                let s = s as usize;
                (0..w).map(|i| if i + s < w { ops[0][i + s] } else { b.zero() }).collect()
            }
            NodeKind::Eq => {
                let ne = b.ne(ops[0], ops[1]);
                vec![b.not(ne)]
            }
            NodeKind::Ne => vec![b.ne(ops[0], ops[1])],
            NodeKind::Ult => {
                let ge = b.uge(ops[0], ops[1]);
                vec![b.not(ge)]
            }
            NodeKind::Ule => vec![b.uge(ops[1], ops[0])],
            NodeKind::Slt => {
                let x = b.flip_msb(ops[0]);
                let y = b.flip_msb(ops[1]);
                let ge = b.uge(&x, &y);
                vec![b.not(ge)]
            }
            NodeKind::Sle => {
                let x = b.flip_msb(ops[0]);
                let y = b.flip_msb(ops[1]);
                vec![b.uge(&y, &x)]
            }
            NodeKind::Select => b.mux_all(ops[0][0], ops[1], ops[2]),
            NodeKind::Concat => ops[0].iter().chain(ops[1]).copied().collect(),
            NodeKind::Slice(start) => ops[0][start as usize..start as usize + w].to_vec(),
            NodeKind::Zext => {
                let mut v = ops[0].clone();
                v.resize(w, b.zero());
                v
            }
            NodeKind::Sext => {
                let mut v = ops[0].clone();
                let sign = *v.last().expect("nonempty");
                v.resize(w, sign);
                v
            }
        };
        debug_assert_eq!(bits.len(), w);
        values.insert(n.id, bits);
    }

    let outputs = f
        .outputs
        .iter()
        .map(|o| WireGroup { name: o.name.clone(), ty: o.ty, wires: values[&o.source].clone() })
        .collect();
    Ok(GateCircuit { name: f.name.clone(), inputs, outputs, gates: b.gates })
}
