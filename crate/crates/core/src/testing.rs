// SPDX-License-Identifier: Apache-2.0

//! Seeded generators for random IR functions and gate circuits, plus an
//! input enumerator that switches from exhaustive to sampled inputs. Used by
//! the property tests and the acceptance suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::booleanifier::{Gate, GateCircuit, GateKind, WireGroup, WireId};
use crate::ir::{mask, BitWidth, Evaluator, IrFunction, IrInput, IrNode, IrOutput, NodeId, NodeKind};

/// Random circuit with one `n_inputs`-bit input group and a handful of
/// outputs drawn from the last gates.
pub fn random_circuit(seed: u64, n_inputs: usize, n_gates: usize) -> GateCircuit {
    assert!((1..=64).contains(&n_inputs) && n_gates >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gates = Vec::with_capacity(n_gates);
    for i in 0..n_gates {
        let avail = (n_inputs + i) as u32;
        let kind = GateKind::ALL[rng.gen_range(0..GateKind::ALL.len())];
        let ins: Vec<WireId> = (0..kind.arity()).map(|_| WireId(rng.gen_range(0..avail))).collect();
        gates.push(Gate::new(WireId(avail), kind, &ins));
    }
    let total = (n_inputs + n_gates) as u32;
    let n_out = rng.gen_range(1..=8usize.min(n_gates));
    let wires: Vec<WireId> = (0..n_out).map(|_| WireId(rng.gen_range(total.saturating_sub(8)..total))).collect();
    GateCircuit {
        name: format!("random{seed}"),
        inputs: vec![WireGroup {
            name: "x".into(),
            ty: BitWidth::unsigned(n_inputs as u32),
            wires: (0..n_inputs as u32).map(WireId).collect(),
        }],
        outputs: vec![WireGroup { name: "y".into(), ty: BitWidth::unsigned(n_out as u32), wires }],
        gates,
    }
}

struct IrGen {
    rng: ChaCha8Rng,
    f: IrFunction,
    pool: Vec<(NodeId, u32)>,
    next: u32,
}

impl IrGen {
    fn push(&mut self, kind: NodeKind, operands: Vec<NodeId>, width: u32) -> NodeId {
        let id = NodeId(self.next);
        self.next += 1;
        self.f.nodes.push(IrNode { id, kind, operands, width });
        self.pool.push((id, width));
        id
    }

    fn pick(&mut self) -> (NodeId, u32) {
        self.pool[self.rng.gen_range(0..self.pool.len())]
    }

    /// Another value of width `w`: an existing one or a fresh literal.
    fn partner(&mut self, w: u32) -> NodeId {
        let same: Vec<NodeId> = self.pool.iter().filter(|p| p.1 == w).map(|p| p.0).collect();
        if self.rng.gen_bool(0.8) {
            return same[self.rng.gen_range(0..same.len())];
        }
        let v = match self.rng.gen_range(0..4) {
            0 => 0,
            1 => 1,
            2 => mask(w),
            _ => self.rng.gen::<u64>() & mask(w),
        };
        self.push(NodeKind::Literal(v), vec![], w)
    }
}

/// Random validated IR function over the given input widths. Node widths
/// stay at or below `max_width`.
pub fn random_ir(seed: u64, input_widths: &[u32], n_nodes: usize, max_width: u32) -> IrFunction {
    let mut g = IrGen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        f: IrFunction::new(format!("random{seed}")),
        pool: Vec::new(),
        next: input_widths.len() as u32,
    };
    for (i, &w) in input_widths.iter().enumerate() {
        let id = NodeId(i as u32);
        g.f.inputs.push(IrInput { id, name: format!("in{i}"), ty: BitWidth::unsigned(w) });
        g.pool.push((id, w));
    }

    const BINARY: [NodeKind; 10] = [
        NodeKind::Add,
        NodeKind::Sub,
        NodeKind::Mul,
        NodeKind::UDiv,
        NodeKind::UMod,
        NodeKind::SDiv,
        NodeKind::SMod,
        NodeKind::And,
        NodeKind::Or,
        NodeKind::Xor,
    ];
    const COMPARE: [NodeKind; 6] =
        [NodeKind::Eq, NodeKind::Ne, NodeKind::Ult, NodeKind::Ule, NodeKind::Slt, NodeKind::Sle];
    for _ in 0..n_nodes {
        let (a, wa) = g.pick();
        match g.rng.gen_range(0..10) {
            0..=3 => {
                let kind = BINARY[g.rng.gen_range(0..BINARY.len())];
                let b = g.partner(wa);
                g.push(kind, vec![a, b], wa);
            }
            4 => {
                let kind = COMPARE[g.rng.gen_range(0..COMPARE.len())];
                let b = g.partner(wa);
                g.push(kind, vec![a, b], 1);
            }
            5 => {
                let conds: Vec<NodeId> = g.pool.iter().filter(|p| p.1 == 1).map(|p| p.0).collect();
                let c = if conds.is_empty() || g.rng.gen_bool(0.3) {
                    let bit = g.rng.gen_range(0..wa);
                    g.push(NodeKind::Slice(bit), vec![a], 1)
                } else {
                    conds[g.rng.gen_range(0..conds.len())]
                };
                let b = g.partner(wa);
                g.push(NodeKind::Select, vec![c, a, b], wa);
            }
            6 => {
                let kind = if g.rng.gen_bool(0.5) { NodeKind::Not } else { NodeKind::Neg };
                g.push(kind, vec![a], wa);
            }
            7 => {
                let s = g.rng.gen_range(0..=wa);
                let kind = if g.rng.gen_bool(0.5) { NodeKind::ShlConst(s) } else { NodeKind::ShrConst(s) };
                g.push(kind, vec![a], wa);
            }
            8 => {
                let start = g.rng.gen_range(0..wa);
                let width = g.rng.gen_range(1..=wa - start);
                g.push(NodeKind::Slice(start), vec![a], width);
            }
            _ => {
                if wa < max_width && g.rng.gen_bool(0.6) {
                    let kind = if g.rng.gen_bool(0.5) { NodeKind::Zext } else { NodeKind::Sext };
                    let width = g.rng.gen_range(wa + 1..=max_width);
                    g.push(kind, vec![a], width);
                } else {
                    let (b, wb) = g.pick();
                    if wa + wb <= max_width {
                        g.push(NodeKind::Concat, vec![a, b], wa + wb);
                    } else {
                        g.push(NodeKind::Not, vec![a], wa);
                    }
                }
            }
        }
    }
    let n_out = g.rng.gen_range(1..=3usize);
    for k in 0..n_out {
        let back = g.rng.gen_range(0..g.pool.len().min(6));
        let (id, w) = g.pool[g.pool.len() - 1 - back];
        g.f.outputs.push(IrOutput { name: format!("out{k}"), source: id, ty: BitWidth::unsigned(w) });
    }
    g.f
}

/// Input assignments for a function whose inputs have the given widths:
/// every assignment when the total width is at most `exhaustive_bits`,
/// otherwise `samples` seeded random ones (plus all-zero and all-ones).
pub fn input_vectors(widths: &[u32], exhaustive_bits: u32, samples: usize, seed: u64) -> Vec<Vec<u64>> {
    let total: u32 = widths.iter().sum();
    if total <= exhaustive_bits {
        return (0..1u64 << total)
            .map(|mut v| {
                widths
                    .iter()
                    .map(|&w| {
                        let x = v & mask(w);
                        v >>= w;
                        x
                    })
                    .collect()
            })
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![widths.iter().map(|_| 0).collect(), widths.iter().map(|&w| mask(w)).collect()];
    out.extend((0..samples).map(|_| widths.iter().map(|&w| rng.gen::<u64>() & mask(w)).collect()));
    out
}

/// First input vector on which `a` and `b` disagree, if any.
pub fn first_mismatch(a: &IrFunction, b: &IrFunction, vectors: &[Vec<u64>]) -> Option<Vec<u64>> {
    let (ea, eb) = (Evaluator::new(a).expect("a validates"), Evaluator::new(b).expect("b validates"));
    vectors.iter().find(|v| ea.run(v).unwrap() != eb.run(v).unwrap()).cloned()
}

/// Random well-typed source program whose entry `f` takes two scalars, a
/// `u3[3]` array and a read-only `u2` that keeps computed indices dynamic. Exercises branches, bounded loops, early returns,
/// dynamic indexing and a helper call.
pub fn random_program(seed: u64) -> String {
    const TYPES: [&str; 9] = ["u1", "u3", "u4", "i4", "u5", "i5", "u6", "i3", "bool"];
    let mut g = ProgramGen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        vars: vec!["a".into(), "b".into()],
        counters: Vec::new(),
        out: String::new(),
    };
    let ta = TYPES[g.rng.gen_range(0..TYPES.len())];
    let tb = TYPES[g.rng.gen_range(0..TYPES.len())];
    let tr = TYPES[g.rng.gen_range(0..TYPES.len())];
    g.out.push_str("u4 h(u4 p, i3 q){ if (p > q) return p - q; return p ^ (u4)q; }\n");
    g.out.push_str(&format!("{tr} f({ta} a, {tb} b, u3 xs[3], u2 s){{\n"));
    for k in 0..g.rng.gen_range(1..=2) {
        let t = TYPES[g.rng.gen_range(0..TYPES.len())];
        let e = g.expr(2);
        g.out.push_str(&format!("  {t} v{k} = {e};\n"));
        g.vars.push(format!("v{k}"));
    }
    let n = g.rng.gen_range(2..=5);
    g.block(n, 0);
    let e = g.expr(3);
    g.out.push_str(&format!("  return {e};\n}}\n"));
    g.out
}

struct ProgramGen {
    rng: ChaCha8Rng,
    vars: Vec<String>,
    counters: Vec<String>,
    out: String,
}

impl ProgramGen {
    fn block(&mut self, n: usize, depth: usize) {
        for _ in 0..n {
            self.stmt(depth);
        }
    }

    fn indent(&mut self, depth: usize) {
        self.out.push_str(&"  ".repeat(depth + 1));
    }

    fn stmt(&mut self, depth: usize) {
        let pick = if depth >= 2 { self.rng.gen_range(0..3) } else { self.rng.gen_range(0..6) };
        self.indent(depth);
        match pick {
            0 => {
                let v = self.vars[self.rng.gen_range(0..self.vars.len())].clone();
                let op = ["=", "+=", "-=", "^=", "|=", "&=", "*="][self.rng.gen_range(0..7)];
                let e = self.expr(3);
                self.out.push_str(&format!("{v} {op} {e};\n"));
            }
            1 => {
                let (i, e) = (self.index(1), self.expr(2));
                self.out.push_str(&format!("xs[{i}] = {e};\n"));
            }
            2 => {
                let (c, e) = (self.expr(2), self.expr(2));
                self.out.push_str(&format!("if ({c}) return {e};\n"));
            }
            3 | 4 => {
                let c = self.expr(2);
                self.out.push_str(&format!("if ({c}) {{\n"));
                let n = self.rng.gen_range(1..=2);
                self.block(n, depth + 1);
                if pick == 4 {
                    self.indent(depth);
                    self.out.push_str("} else {\n");
                    let n = self.rng.gen_range(1..=2);
                    self.block(n, depth + 1);
                }
                self.indent(depth);
                self.out.push_str("}\n");
            }
            _ => {
                let i = format!("k{depth}");
                let hi = self.rng.gen_range(1..=3);
                self.out.push_str(&format!("for (int {i} = 0; {i} < {hi}; {i}++) {{\n"));
                self.counters.push(i);
                let n = self.rng.gen_range(1..=2);
                self.block(n, depth + 1);
                self.counters.pop();
                self.indent(depth);
                self.out.push_str("}\n");
            }
        }
    }

    fn index(&mut self, depth: u32) -> String {
        if self.rng.gen_bool(0.3) {
            return self.rng.gen_range(0..3).to_string();
        }
        format!("({}) ^ s", self.expr(depth))
    }

    fn leaf(&mut self) -> String {
        match self.rng.gen_range(0..6) {
            0 => format!("{}", self.rng.gen_range(-4i32..20)),
            1 if self.rng.gen_bool(0.3) => "s".to_string(),
            1 if !self.counters.is_empty() => self.counters[self.rng.gen_range(0..self.counters.len())].clone(),
            2 => format!("xs[{}]", self.rng.gen_range(0..3)),
            _ => self.vars[self.rng.gen_range(0..self.vars.len())].clone(),
        }
    }

    fn expr(&mut self, depth: u32) -> String {
        if depth == 0 {
            return self.leaf();
        }
        match self.rng.gen_range(0..10) {
            0 => self.leaf(),
            1 => {
                let op = ["-", "~", "!"][self.rng.gen_range(0..3)];
                format!("{op}({})", self.expr(depth - 1))
            }
            2 => {
                let (c, x, y) = (self.expr(depth - 1), self.expr(depth - 1), self.expr(depth - 1));
                format!("({c} ? {x} : {y})")
            }
            3 => {
                let t = ["u2", "i4", "u6", "bool", "i7"][self.rng.gen_range(0..5)];
                format!("({t})({})", self.expr(depth - 1))
            }
            4 => format!("xs[{}]", self.index(depth - 1)),
            5 => format!("h({}, {})", self.expr(depth - 1), self.expr(depth - 1)),
            _ => {
                const OPS: [&str; 18] =
                    ["+", "-", "*", "/", "%", "&", "|", "^", "<<", ">>", "==", "!=", "<", "<=", ">", ">=", "&&", "||"];
                let op = OPS[self.rng.gen_range(0..OPS.len())];
                let (x, y) = (self.expr(depth - 1), self.expr(depth - 1));
                if op == "<<" || op == ">>" {
                    return format!("({x} {op} (({y}) & 7))");
                }
                if op == "/" || op == "%" {
                    return format!("({x} {op} (({y}) ^ s))");
                }
                format!("({x} {op} {y})")
            }
        }
    }
}
