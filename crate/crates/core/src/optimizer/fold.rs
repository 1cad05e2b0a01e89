// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use crate::ir::{eval_node, mask, IrFunction, IrNode, NodeId, NodeKind};

enum Action {
    Keep,
    Alias(NodeId),
    Literal(u64),
    Rewrite(NodeKind, Vec<NodeId>),
}

struct Folder {
    width: HashMap<NodeId, u32>,
    def: HashMap<NodeId, (NodeKind, Vec<NodeId>)>,
    alias: HashMap<NodeId, NodeId>,
}

impl Folder {
    fn resolve(&self, mut id: NodeId) -> NodeId {
        while let Some(&next) = self.alias.get(&id) {
            id = next;
        }
        id
    }

    fn lit(&self, id: NodeId) -> Option<u64> {
        match self.def.get(&id) {
            Some((NodeKind::Literal(v), _)) => Some(*v),
            _ => None,
        }
    }

    fn w(&self, id: NodeId) -> u32 {
        self.width[&id]
    }

    fn simplify(&self, kind: NodeKind, ops: &[NodeId], width: u32) -> Action {
        use Action::*;
        if !kind.is_literal() && ops.iter().all(|o| self.lit(*o).is_some()) {
            let vals: Vec<(u64, u32)> = ops.iter().map(|o| (self.lit(*o).unwrap(), self.w(*o))).collect();
            return Literal(eval_node(kind, width, &vals));
        }
        let ones = mask(width);
        let l = |i: usize| ops.get(i).and_then(|o| self.lit(*o));
        let same = ops.len() >= 2 && ops[0] == ops[1];
        match kind {
            NodeKind::Add | NodeKind::Or | NodeKind::Xor if l(1) == Some(0) => Alias(ops[0]),
            NodeKind::Add | NodeKind::Or | NodeKind::Xor if l(0) == Some(0) => Alias(ops[1]),
            NodeKind::Sub if l(1) == Some(0) => Alias(ops[0]),
            NodeKind::Sub | NodeKind::Xor if same => Literal(0),
            NodeKind::Mul | NodeKind::And if l(0) == Some(0) || l(1) == Some(0) => Literal(0),
            NodeKind::Mul if l(1) == Some(1) => Alias(ops[0]),
            NodeKind::Mul if l(0) == Some(1) => Alias(ops[1]),
            NodeKind::And if l(1) == Some(ones) => Alias(ops[0]),
            NodeKind::And if l(0) == Some(ones) => Alias(ops[1]),
            NodeKind::Or if l(0) == Some(ones) || l(1) == Some(ones) => Literal(ones),
            NodeKind::And | NodeKind::Or if same => Alias(ops[0]),
            NodeKind::UDiv if l(1) == Some(1) => Alias(ops[0]),
            NodeKind::UMod if l(1) == Some(1) => Literal(0),
            NodeKind::Eq | NodeKind::Ule | NodeKind::Sle if same => Literal(1),
            NodeKind::Ne | NodeKind::Ult | NodeKind::Slt if same => Literal(0),
            NodeKind::Select => match l(0) {
                Some(1) => Alias(ops[1]),
                Some(_) => Alias(ops[2]),
                None if ops[1] == ops[2] => Alias(ops[1]),
                None => Keep,
            },
            NodeKind::Not | NodeKind::Neg => match self.def.get(&ops[0]) {
                Some((k, inner)) if *k == kind => Alias(inner[0]),
                _ => Keep,
            },
            NodeKind::ShlConst(0) | NodeKind::ShrConst(0) => Alias(ops[0]),
            NodeKind::ShlConst(s) | NodeKind::ShrConst(s) if s >= width => Literal(0),
            NodeKind::Zext | NodeKind::Sext if self.w(ops[0]) == width => Alias(ops[0]),
            NodeKind::Zext | NodeKind::Sext => match self.def.get(&ops[0]) {
                Some((k, inner)) if *k == kind || (*k == NodeKind::Zext && kind == NodeKind::Sext) => {
                    // sext of a zext sees a zero sign bit, so it is a zext.
                    Rewrite(*k, inner.clone())
                }
                _ => Keep,
            },
            NodeKind::Slice(start) => self.simplify_slice(ops[0], start, width),
            _ => Keep,
        }
    }

    fn simplify_slice(&self, x: NodeId, start: u32, width: u32) -> Action {
        use Action::*;
        let wx = self.w(x);
        if start == 0 && width == wx {
            return Alias(x);
        }
        let Some((kind, inner)) = self.def.get(&x) else {
            return Keep;
        };
        match *kind {
            NodeKind::Slice(s0) => Rewrite(NodeKind::Slice(s0 + start), inner.clone()),
            NodeKind::Zext | NodeKind::Sext => {
                let y = inner[0];
                let wy = self.w(y);
                if start + width <= wy {
                    Rewrite(NodeKind::Slice(start), vec![y])
                } else if *kind == NodeKind::Zext && start >= wy {
                    Literal(0)
                } else if start == 0 {
                    Rewrite(*kind, vec![y])
                } else {
                    Keep
                }
            }
            NodeKind::Concat => {
                let (lo, hi) = (inner[0], inner[1]);
                let wl = self.w(lo);
                if start + width <= wl {
                    Rewrite(NodeKind::Slice(start), vec![lo])
                } else if start >= wl {
                    Rewrite(NodeKind::Slice(start - wl), vec![hi])
                } else {
                    Keep
                }
            }
            _ => Keep,
        }
    }
}

/// Folds constant subexpressions and applies local algebraic identities.
/// Replaced nodes stay in place (as literals) or become unused aliases;
/// run dead-node elimination afterwards to drop them.
pub fn constant_fold(f: &IrFunction) -> IrFunction {
    let mut folder = Folder { width: f.widths(), def: HashMap::new(), alias: HashMap::new() };
    let mut nodes = Vec::with_capacity(f.nodes.len());
    for n in &f.nodes {
        let mut kind = n.kind;
        let mut ops: Vec<NodeId> = n.operands.iter().map(|o| folder.resolve(*o)).collect();
        // A rewrite may enable another; the chain is short in practice.
        let mut aliased = false;
        for _ in 0..8 {
            match folder.simplify(kind, &ops, n.width) {
                Action::Keep => break,
                Action::Alias(to) => {
                    folder.alias.insert(n.id, folder.resolve(to));
                    aliased = true;
                    break;
                }
                Action::Literal(v) => {
                    kind = NodeKind::Literal(v);
                    ops.clear();
                    break;
                }
                Action::Rewrite(k, o) => {
                    kind = k;
                    ops = o;
                }
            }
        }
        if aliased {
            // Keep the node so ids stay valid; it has no users anymore.
            nodes.push(n.clone());
            continue;
        }
        folder.def.insert(n.id, (kind, ops.clone()));
        nodes.push(IrNode { id: n.id, kind, operands: ops, width: n.width });
    }
    let mut out = IrFunction { name: f.name.clone(), inputs: f.inputs.clone(), nodes, outputs: f.outputs.clone() };
    for o in &mut out.outputs {
        o.source = folder.resolve(o.source);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{parse_ir, serialize};
    use crate::optimizer::dead_node_elimination;

    fn fold_dce(text: &str) -> String {
        let f = parse_ir(text).unwrap();
        serialize(&dead_node_elimination(&constant_fold(&f)))
    }

    #[test]
    fn literal_add_folds() {
        let out = fold_dce("fn f\n%0:8 = literal(3)\n%1:8 = literal(5)\n%2:8 = add(%0, %1)\nout r %2:u8\n");
        assert_eq!(out, "fn f\n%0:8 = literal(8)\nout r %0:u8\n");
    }

    #[test]
    fn mul_by_zero_is_zero() {
        let out = fold_dce("fn f\nin x %0:u8\n%1:8 = literal(0)\n%2:8 = mul(%0, %1)\nout r %2:u8\n");
        assert_eq!(out, "fn f\nin x %0:u8\n%1:8 = literal(0)\nout r %1:u8\n");
    }

    #[test]
    fn constant_select_picks_arm() {
        let out = fold_dce("fn f\nin a %0:u8\nin b %1:u8\n%2:1 = literal(1)\n%3:8 = select(%2, %0, %1)\nout r %3:u8\n");
        assert_eq!(out, "fn f\nin a %0:u8\nin b %1:u8\nout r %0:u8\n");
    }

    #[test]
    fn identities() {
        let cases = [
            ("add(%0, %1)", "literal(0)", "%0"),
            ("mul(%0, %1)", "literal(1)", "%0"),
            ("and(%0, %1)", "literal(0)", "lit0"),
            ("and(%0, %1)", "literal(255)", "%0"),
            ("xor(%0, %0)", "literal(9)", "lit0"),
            ("sub(%0, %0)", "literal(9)", "lit0"),
            ("or(%0, %1)", "literal(255)", "lit255"),
        ];
        for (expr, lit, want) in cases {
            let text = format!("fn f\nin x %0:u8\n%1:8 = {lit}\n%2:8 = {expr}\nout r %2:u8\n");
            let f = dead_node_elimination(&constant_fold(&parse_ir(&text).unwrap()));
            let got = match want {
                "%0" => f.outputs[0].source == NodeId(0) && f.nodes.is_empty(),
                "lit0" => f.nodes.len() == 1 && f.nodes[0].kind == NodeKind::Literal(0),
                "lit255" => f.nodes.len() == 1 && f.nodes[0].kind == NodeKind::Literal(255),
                _ => unreachable!(),
            };
            assert!(got, "{expr} with {lit}: {}", serialize(&f));
        }
    }

    #[test]
    fn slice_of_zext_collapses() {
        let out = fold_dce(
            "fn f\nin x %0:u4\n%1:8 = zext(%0)\n%2:4 = slice(%1, 0)\n%3:6 = slice(%1, 0)\n%4:2 = slice(%1, 5)\n\
             out a %2:u4\nout b %3:u6\nout c %4:u2\n",
        );
        assert_eq!(
            out,
            "fn f\nin x %0:u4\n%1:6 = zext(%0)\n%2:2 = literal(0)\nout a %0:u4\nout b %1:u6\nout c %2:u2\n"
        );
    }

    #[test]
    fn non_literal_count_never_grows() {
        use crate::testing::random_ir;
        for seed in 0..300 {
            let f = random_ir(seed, &[5, 4], 30, 16);
            let g = constant_fold(&f);
            assert!(g.op_count() <= f.op_count(), "seed {seed}");
        }
    }
}
