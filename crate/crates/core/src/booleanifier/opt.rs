// SPDX-License-Identifier: Apache-2.0

//! Local gate-level rewrites: constant propagation, NOT(NOT x) removal,
//! copy forwarding and dead-gate removal.

use std::collections::HashMap;

use super::{Gate, GateCircuit, GateKind, WireGroup, WireId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Val {
    Const(bool),
    Wire(WireId),
}

struct Rewriter {
    next: u32,
    gates: Vec<Gate>,
    consts: [Option<WireId>; 2],
    /// For wires produced by NOT in the new circuit: the negated operand.
    negation_of: HashMap<WireId, WireId>,
}

impl Rewriter {
    fn emit(&mut self, kind: GateKind, ins: &[WireId]) -> WireId {
        let out = WireId(self.next);
        self.next += 1;
        self.gates.push(Gate::new(out, kind, ins));
        out
    }

    fn materialize(&mut self, v: Val) -> WireId {
        match v {
            Val::Wire(w) => w,
            Val::Const(b) => match self.consts[b as usize] {
                Some(w) => w,
                None => {
                    let kind = if b { GateKind::Const1 } else { GateKind::Const0 };
                    let w = self.emit(kind, &[]);
                    self.consts[b as usize] = Some(w);
                    w
                }
            },
        }
    }

    fn not(&mut self, v: Val) -> Val {
        match v {
            Val::Const(b) => Val::Const(!b),
            Val::Wire(w) => match self.negation_of.get(&w) {
                Some(&inner) => Val::Wire(inner),
                None => {
                    let out = self.emit(GateKind::Not, &[w]);
                    self.negation_of.insert(out, w);
                    Val::Wire(out)
                }
            },
        }
    }

    fn binary(&mut self, kind: GateKind, a: Val, b: Val) -> Val {
        use Val::*;
        match (kind, a, b) {
            (GateKind::And, Const(false), _) | (GateKind::And, _, Const(false)) => Const(false),
            (GateKind::And, Const(true), x) | (GateKind::And, x, Const(true)) => x,
            (GateKind::Or, Const(true), _) | (GateKind::Or, _, Const(true)) => Const(true),
            (GateKind::Or, Const(false), x) | (GateKind::Or, x, Const(false)) => x,
            (GateKind::Xor, Const(false), x) | (GateKind::Xor, x, Const(false)) => x,
            (GateKind::Xor, Const(true), x) | (GateKind::Xor, x, Const(true)) => self.not(x),
            (GateKind::Xor, x, y) if x == y => Const(false),
            (GateKind::And | GateKind::Or, x, y) if x == y => x,
            (_, Wire(x), Wire(y)) => Wire(self.emit(kind, &[x, y])),
            _ => unreachable!("constants handled above"),
        }
    }

    fn mux(&mut self, s: Val, t: Val, e: Val) -> Val {
        match (s, t, e) {
            (Val::Const(true), t, _) => t,
            (Val::Const(false), _, e) => e,
            (_, t, e) if t == e => t,
            (s, Val::Const(true), Val::Const(false)) => s,
            (s, Val::Const(false), Val::Const(true)) => self.not(s),
            (s, t, e) => {
                let ins = [s, t, e].map(|v| self.materialize(v));
                Val::Wire(self.emit(GateKind::Mux, &ins))
            }
        }
    }
}

/// Applies the local rewrites and drops gates no output depends on.
/// The result computes the same function and never has more gates.
pub fn gate_optimize(c: &GateCircuit) -> GateCircuit {
    let n_in = c.input_wire_count() as u32;
    let mut rw = Rewriter {
        next: n_in,
        gates: Vec::with_capacity(c.gates.len()),
        consts: [None, None],
        negation_of: HashMap::new(),
    };
    let mut val: Vec<Val> = (0..n_in).map(|i| Val::Wire(WireId(i))).collect();
    val.reserve(c.gates.len());
    // Whether each original wire is still computed by a gate of its own.
    let mut own: Vec<bool> = vec![true; n_in as usize];
    own.reserve(c.gates.len());

    for g in &c.gates {
        let before = rw.next;
        let ops: Vec<Val> = g.operands().iter().map(|w| val[w.0 as usize]).collect();
        let v = match g.kind {
            GateKind::Const0 => Val::Const(false),
            GateKind::Const1 => Val::Const(true),
            GateKind::Copy => ops[0],
            GateKind::Not => rw.not(ops[0]),
            GateKind::And | GateKind::Or | GateKind::Xor => rw.binary(g.kind, ops[0], ops[1]),
            GateKind::Mux => rw.mux(ops[0], ops[1], ops[2]),
        };
        own.push(matches!(v, Val::Wire(w) if w.0 >= before));
        val.push(v);
    }

    // Output bits whose gate collapsed onto some other wire get one COPY per
    // original wire so outputs stay distinct from the wires they mirror.
    let mut copies: HashMap<WireId, WireId> = HashMap::new();
    let outputs: Vec<WireGroup> = c
        .outputs
        .iter()
        .map(|group| {
            let wires = group
                .wires
                .iter()
                .map(|&orig| match val[orig.0 as usize] {
                    Val::Const(b) => rw.materialize(Val::Const(b)),
                    Val::Wire(w) if !own[orig.0 as usize] => {
                        *copies.entry(orig).or_insert_with(|| rw.emit(GateKind::Copy, &[w]))
                    }
                    Val::Wire(w) => w,
                })
                .collect();
            WireGroup { name: group.name.clone(), ty: group.ty, wires }
        })
        .collect();

    compact(GateCircuit { name: c.name.clone(), inputs: c.inputs.clone(), outputs, gates: rw.gates })
}

/// Removes gates unreachable from outputs and renumbers wires densely.
pub(crate) fn compact(c: GateCircuit) -> GateCircuit {
    let n_in = c.input_wire_count();
    let total = n_in + c.gates.len();
    let mut live = vec![false; total];
    for g in &c.outputs {
        for w in &g.wires {
            live[w.0 as usize] = true;
        }
    }
    for g in c.gates.iter().rev() {
        if live[g.out.0 as usize] {
            for w in g.operands() {
                live[w.0 as usize] = true;
            }
        }
    }
    let mut remap: Vec<WireId> = (0..total as u32).map(WireId).collect();
    let mut next = n_in as u32;
    let mut gates = Vec::new();
    for g in &c.gates {
        if !live[g.out.0 as usize] {
            continue;
        }
        let ins: Vec<WireId> = g.operands().iter().map(|w| remap[w.0 as usize]).collect();
        let out = WireId(next);
        next += 1;
        remap[g.out.0 as usize] = out;
        gates.push(Gate::new(out, g.kind, &ins));
    }
    let outputs = c
        .outputs
        .into_iter()
        .map(|g| WireGroup { wires: g.wires.iter().map(|w| remap[w.0 as usize]).collect(), ..g })
        .collect();
    GateCircuit { name: c.name, inputs: c.inputs, outputs, gates }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::booleanifier::{booleanify, evaluate_gates, evaluate_words, to_bits};
    use crate::ir::{parse_ir, BitWidth};
    use crate::testing::random_circuit;
    use proptest::prelude::*;

    fn one_bit(name: &str, wire: u32) -> WireGroup {
        WireGroup { name: name.into(), ty: BitWidth::unsigned(1), wires: vec![WireId(wire)] }
    }

    #[test]
    fn double_not_becomes_copy() {
        let c = GateCircuit {
            name: "nn".into(),
            inputs: vec![one_bit("x", 0)],
            outputs: vec![one_bit("y", 2)],
            gates: vec![
                Gate::new(WireId(1), GateKind::Not, &[WireId(0)]),
                Gate::new(WireId(2), GateKind::Not, &[WireId(1)]),
            ],
        };
        let o = gate_optimize(&c);
        assert_eq!(o.gates, vec![Gate::new(WireId(1), GateKind::Copy, &[WireId(0)])]);
        assert_eq!(o.outputs[0].wires, vec![WireId(1)]);
    }

    #[test]
    fn and_with_const0_folds_and_rewires() {
        let c = GateCircuit {
            name: "z".into(),
            inputs: vec![one_bit("x", 0)],
            outputs: vec![one_bit("y", 3)],
            gates: vec![
                Gate::new(WireId(1), GateKind::Const0, &[]),
                Gate::new(WireId(2), GateKind::And, &[WireId(0), WireId(1)]),
                Gate::new(WireId(3), GateKind::Xor, &[WireId(2), WireId(0)]),
            ],
        };
        let o = gate_optimize(&c);
        // XOR(CONST0, x) forwards x, so the output becomes a COPY of the input.
        assert_eq!(o.gates, vec![Gate::new(WireId(1), GateKind::Copy, &[WireId(0)])]);
        let c2 = GateCircuit { outputs: vec![one_bit("y", 2)], ..c };
        let o2 = gate_optimize(&c2);
        assert_eq!(o2.gates, vec![Gate::new(WireId(1), GateKind::Const0, &[])]);
    }

    #[test]
    fn adder_with_zero_operand_collapses_to_copies() {
        let f = parse_ir("fn inc\nin a %0:u8\n%1:8 = literal(0)\n%2:8 = add(%0, %1)\nout r %2:u8\n").unwrap();
        let c = booleanify(&f).unwrap();
        let o = gate_optimize(&c);
        assert!(o.gates.iter().all(|g| g.kind == GateKind::Copy), "{:?}", o.gates);
        assert_eq!(o.gates.len(), 8);
        for a in 0..256u64 {
            assert_eq!(evaluate_words(&o, &[a]).unwrap(), vec![a]);
        }
    }

    proptest! {
        #[test]
        fn preserves_function_and_never_grows(seed in any::<u64>(), n_in in 1usize..8, n_gates in 1usize..80) {
            let c = random_circuit(seed, n_in, n_gates);
            let o = gate_optimize(&c);
            o.validate().unwrap();
            prop_assert!(o.gates.len() <= c.gates.len());
            for v in 0..(1u64 << n_in) {
                let bits: Vec<bool> = to_bits(v, n_in as u32).collect();
                prop_assert_eq!(evaluate_gates(&o, &bits).unwrap(), evaluate_gates(&c, &bits).unwrap());
            }
        }
    }
}
