// SPDX-License-Identifier: Apache-2.0

//! Reference evaluator for the IR. Every later stage is checked against it.

use std::collections::HashMap;

use thiserror::Error;

use super::{mask, sign_extend, validate, IrFunction, NodeId, NodeKind, Violation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("function does not validate: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("missing input `{0}`")]
    MissingInput(String),
    #[error("unknown input `{0}`")]
    UnknownInput(String),
    #[error("value {value} out of range for {bits}-bit input `{name}`")]
    OutOfRange { name: String, value: u64, bits: u32 },
    #[error("expected {expected} inputs, got {got}")]
    Arity { expected: usize, got: usize },
}

/// Computes one node from its operand values and widths.
///
/// Division by zero is total: quotients become all-ones and remainders
/// return the dividend.
pub fn eval_node(kind: NodeKind, width: u32, operands: &[(u64, u32)]) -> u64 {
    let m = mask(width);
    let a = operands.first().map_or(0, |o| o.0);
    let b = operands.get(1).map_or(0, |o| o.0);
    let sa = || sign_extend(a, operands[0].1);
    let sb = || sign_extend(b, operands[1].1);
    let v = match kind {
        NodeKind::Literal(v) => v,
        NodeKind::Add => a.wrapping_add(b),
        NodeKind::Sub => a.wrapping_sub(b),
        NodeKind::Mul => a.wrapping_mul(b),
        NodeKind::UDiv => a.checked_div(b).unwrap_or(m),
        NodeKind::UMod => a.checked_rem(b).unwrap_or(a),
        NodeKind::SDiv => {
            if b == 0 {
                m
            } else {
                sa().wrapping_div(sb()) as u64
            }
        }
        NodeKind::SMod => {
            if b == 0 {
                a
            } else {
                sa().wrapping_rem(sb()) as u64
            }
        }
        NodeKind::And => a & b,
        NodeKind::Or => a | b,
        NodeKind::Xor => a ^ b,
        NodeKind::Not => !a,
        NodeKind::Neg => a.wrapping_neg(),
        NodeKind::ShlConst(s) => {
            if s >= width {
                0
            } else {
                a << s
            }
        }
        NodeKind::ShrConst(s) => {
            if s >= width {
                0
            } else {
                a >> s
            }
        }
        NodeKind::Eq => (a == b) as u64,
        NodeKind::Ne => (a != b) as u64,
        NodeKind::Ult => (a < b) as u64,
        NodeKind::Ule => (a <= b) as u64,
        NodeKind::Slt => (sa() < sb()) as u64,
        NodeKind::Sle => (sa() <= sb()) as u64,
        NodeKind::Select => {
            if a & 1 == 1 {
                b
            } else {
                operands[2].0
            }
        }
        NodeKind::Concat => a | (b << operands[0].1),
        NodeKind::Slice(start) => a >> start,
        NodeKind::Zext => a,
        NodeKind::Sext => sa() as u64,
    };
    v & m
}

/// Pre-resolved form of a validated function for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Evaluator {
    input_widths: Vec<u32>,
    input_names: Vec<String>,
    steps: Vec<Step>,
    outputs: Vec<usize>,
    slots: usize,
}

#[derive(Debug, Clone)]
struct Step {
    kind: NodeKind,
    width: u32,
    operands: Vec<(usize, u32)>,
}

impl Evaluator {
    pub fn new(f: &IrFunction) -> Result<Self, EvalError> {
        validate(f).map_err(EvalError::Invalid)?;
        let mut slot: HashMap<NodeId, (usize, u32)> = HashMap::new();
        for (i, input) in f.inputs.iter().enumerate() {
            slot.insert(input.id, (i, input.ty.bits()));
        }
        let base = f.inputs.len();
        let mut steps = Vec::with_capacity(f.nodes.len());
        for (i, n) in f.nodes.iter().enumerate() {
            steps.push(Step { kind: n.kind, width: n.width, operands: n.operands.iter().map(|o| slot[o]).collect() });
            slot.insert(n.id, (base + i, n.width));
        }
        Ok(Self {
            input_widths: f.inputs.iter().map(|i| i.ty.bits()).collect(),
            input_names: f.inputs.iter().map(|i| i.name.clone()).collect(),
            outputs: f.outputs.iter().map(|o| slot[&o.source].0).collect(),
            slots: base + steps.len(),
            steps,
        })
    }

    /// Evaluates with inputs given in declaration order.
    pub fn run(&self, inputs: &[u64]) -> Result<Vec<u64>, EvalError> {
        if inputs.len() != self.input_widths.len() {
            return Err(EvalError::Arity { expected: self.input_widths.len(), got: inputs.len() });
        }
        let mut values = Vec::with_capacity(self.slots);
        for (i, (&v, &w)) in inputs.iter().zip(&self.input_widths).enumerate() {
            if v & !mask(w) != 0 {
                return Err(EvalError::OutOfRange { name: self.input_names[i].clone(), value: v, bits: w });
            }
            values.push(v);
        }
        let mut buf = Vec::with_capacity(3);
        for step in &self.steps {
            buf.clear();
            buf.extend(step.operands.iter().map(|&(s, w)| (values[s], w)));
            values.push(eval_node(step.kind, step.width, &buf));
        }
        Ok(self.outputs.iter().map(|&s| values[s]).collect())
    }
}

/// Evaluates `f` with named inputs; returns output values in order.
pub fn evaluate(f: &IrFunction, inputs: &HashMap<String, u64>) -> Result<Vec<u64>, EvalError> {
    for name in inputs.keys() {
        if !f.inputs.iter().any(|i| &i.name == name) {
            return Err(EvalError::UnknownInput(name.clone()));
        }
    }
    let ordered = f
        .inputs
        .iter()
        .map(|i| inputs.get(&i.name).copied().ok_or_else(|| EvalError::MissingInput(i.name.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    evaluate_positional(f, &ordered)
}

pub fn evaluate_positional(f: &IrFunction, inputs: &[u64]) -> Result<Vec<u64>, EvalError> {
    Evaluator::new(f)?.run(inputs)
}

#[cfg(test)]
mod tests {
    use super::super::tests::sum_ir;
    use super::super::{BitWidth, IrInput, IrOutput};
    use super::*;
    use proptest::prelude::*;

    fn named(pairs: &[(&str, u64)]) -> HashMap<String, u64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn sum_examples() {
        let f = sum_ir();
        assert_eq!(evaluate(&f, &named(&[("a", 3), ("b", 5)])).unwrap(), vec![8]);
        assert_eq!(evaluate(&f, &named(&[("a", 255), ("b", 1)])).unwrap(), vec![0]);
    }

    #[test]
    fn input_errors() {
        let f = sum_ir();
        assert_eq!(evaluate(&f, &named(&[("a", 3)])), Err(EvalError::MissingInput("b".into())));
        assert!(matches!(evaluate(&f, &named(&[("a", 256), ("b", 0)])), Err(EvalError::OutOfRange { .. })));
    }

    #[test]
    fn udiv_by_zero_is_all_ones() {
        assert_eq!(eval_node(NodeKind::UDiv, 8, &[(7, 8), (0, 8)]), 255);
        assert_eq!(eval_node(NodeKind::UMod, 8, &[(7, 8), (0, 8)]), 7);
        assert_eq!(eval_node(NodeKind::SDiv, 8, &[(0x80, 8), (0xFF, 8)]), 0x80);
        assert_eq!(eval_node(NodeKind::SMod, 8, &[(0x80, 8), (0xFF, 8)]), 0);
        assert_eq!(eval_node(NodeKind::SDiv, 4, &[(0xF9 & 0xF, 4), (2, 4)]), 0xD);
    }

    #[test]
    fn forwarded_input_function() {
        let f = IrFunction {
            name: "id".into(),
            inputs: vec![IrInput { id: NodeId(0), name: "x".into(), ty: BitWidth::unsigned(3) }],
            nodes: vec![],
            outputs: vec![IrOutput { name: "ret".into(), source: NodeId(0), ty: BitWidth::unsigned(3) }],
        };
        assert_eq!(evaluate_positional(&f, &[5]).unwrap(), vec![5]);
    }

    #[test]
    fn concat_slice_ext() {
        assert_eq!(eval_node(NodeKind::Concat, 8, &[(0x3, 4), (0xA, 4)]), 0xA3);
        assert_eq!(eval_node(NodeKind::Slice(2), 3, &[(0b1011_0100, 8)]), 0b101);
        assert_eq!(eval_node(NodeKind::Sext, 8, &[(0b100, 3)]), 0xFC);
        assert_eq!(eval_node(NodeKind::Zext, 8, &[(0b100, 3)]), 0x04);
    }

    fn big_model(kind: NodeKind, w: u32, a: u64, b: u64) -> u64 {
        let m = (1i128 << w) - 1;
        let (a, b) = (a as i128, b as i128);
        let s = |x: i128| if x >> (w - 1) & 1 == 1 { x - (1i128 << w) } else { x };
        let r: i128 = match kind {
            NodeKind::Add => a + b,
            NodeKind::Sub => a - b,
            NodeKind::Mul => a.wrapping_mul(b),
            NodeKind::UDiv => {
                if b == 0 {
                    m
                } else {
                    a / b
                }
            }
            NodeKind::UMod => {
                if b == 0 {
                    a
                } else {
                    a % b
                }
            }
            NodeKind::SDiv => {
                if b == 0 {
                    m
                } else {
                    s(a) / s(b)
                }
            }
            NodeKind::SMod => {
                if b == 0 {
                    a
                } else {
                    s(a) % s(b)
                }
            }
            NodeKind::Neg => -a,
            NodeKind::Ult => (a < b) as i128,
            NodeKind::Slt => (s(a) < s(b)) as i128,
            NodeKind::Sle => (s(a) <= s(b)) as i128,
            _ => unreachable!(),
        };
        let rm = if kind.is_comparison() { 1 } else { m };
        (r & rm) as u64
    }

    proptest! {
        #[test]
        fn arithmetic_matches_wide_integer_model(
            w in 1u32..=64,
            a in any::<u64>(),
            b in any::<u64>(),
            k in 0usize..11,
        ) {
            let kinds = [
                NodeKind::Add, NodeKind::Sub, NodeKind::Mul, NodeKind::UDiv, NodeKind::UMod,
                NodeKind::SDiv, NodeKind::SMod, NodeKind::Neg, NodeKind::Ult, NodeKind::Slt,
                NodeKind::Sle,
            ];
            let kind = kinds[k];
            let (a, b) = (a & mask(w), b & mask(w));
            let rw = if kind.is_comparison() { 1 } else { w };
            prop_assert_eq!(eval_node(kind, rw, &[(a, w), (b, w)]), big_model(kind, w, a, b));
        }
    }
}
