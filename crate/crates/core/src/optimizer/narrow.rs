// SPDX-License-Identifier: Apache-2.0

//! Width narrowing from forward known bits and backward demanded bits.

use std::collections::HashMap;

use crate::ir::{mask, IrFunction, IrNode, NodeId, NodeKind};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Known {
    zero: u64,
    one: u64,
}

impl Known {
    fn literal(v: u64, w: u32) -> Self {
        Known { zero: !v & mask(w), one: v & mask(w) }
    }

    fn is_full(self, w: u32) -> bool {
        (self.zero | self.one) == mask(w)
    }

    /// Low bits needed to hold the value: `w` minus leading known zeros.
    fn need(self, w: u32) -> u32 {
        let mut n = w;
        while n > 0 && self.zero >> (n - 1) & 1 == 1 {
            n -= 1;
        }
        n
    }

    fn fits(n: u32, w: u32) -> Self {
        Known { zero: mask(w) & !mask(n.min(w)), one: 0 }
    }
}

fn low_fill(d: u64) -> u64 {
    if d == 0 {
        0
    } else {
        mask(64 - d.leading_zeros())
    }
}

fn known_bits(f: &IrFunction) -> HashMap<NodeId, Known> {
    let mut k: HashMap<NodeId, Known> = f.inputs.iter().map(|i| (i.id, Known::default())).collect();
    let widths = f.widths();
    for n in &f.nodes {
        let w = n.width;
        let m = mask(w);
        let op = |i: usize| k[&n.operands[i]];
        let ow = |i: usize| widths[&n.operands[i]];
        let r = match n.kind {
            NodeKind::Literal(v) => Known::literal(v, w),
            NodeKind::And => {
                let (a, b) = (op(0), op(1));
                Known { zero: a.zero | b.zero, one: a.one & b.one }
            }
            NodeKind::Or => {
                let (a, b) = (op(0), op(1));
                Known { zero: a.zero & b.zero, one: a.one | b.one }
            }
            NodeKind::Xor => {
                let (a, b) = (op(0), op(1));
                Known { zero: (a.zero & b.zero) | (a.one & b.one), one: (a.zero & b.one) | (a.one & b.zero) }
            }
            NodeKind::Not => {
                let a = op(0);
                Known { zero: a.one, one: a.zero }
            }
            NodeKind::ShlConst(s) if s < w => {
                let a = op(0);
                Known { zero: ((a.zero << s) | mask(s)) & m, one: (a.one << s) & m }
            }
            NodeKind::ShrConst(s) if s < w => {
                let a = op(0);
                Known { zero: (a.zero >> s) | (m & !mask(w - s)), one: a.one >> s }
            }
            NodeKind::ShlConst(_) | NodeKind::ShrConst(_) => Known::literal(0, w),
            NodeKind::Slice(s) => {
                let a = op(0);
                Known { zero: (a.zero >> s) & m, one: (a.one >> s) & m }
            }
            NodeKind::Zext => {
                let a = op(0);
                Known { zero: a.zero | (m & !mask(ow(0))), one: a.one }
            }
            NodeKind::Sext => {
                let (a, wa) = (op(0), ow(0));
                let upper = m & !mask(wa);
                let sign = 1u64 << (wa - 1);
                Known {
                    zero: a.zero | if a.zero & sign != 0 { upper } else { 0 },
                    one: a.one | if a.one & sign != 0 { upper } else { 0 },
                }
            }
            NodeKind::Concat => {
                let (lo, hi, wl) = (op(0), op(1), ow(0));
                Known { zero: lo.zero | (hi.zero << wl), one: lo.one | (hi.one << wl) }
            }
            NodeKind::Select => {
                let (c, t, e) = (op(0), op(1), op(2));
                if c.one & 1 == 1 {
                    t
                } else if c.zero & 1 == 1 {
                    e
                } else {
                    Known { zero: t.zero & e.zero, one: t.one & e.one }
                }
            }
            NodeKind::Add => {
                let (na, nb) = (op(0).need(w), op(1).need(w));
                Known::fits(na.max(nb) + 1, w)
            }
            NodeKind::Mul => {
                let (na, nb) = (op(0).need(w), op(1).need(w));
                if na == 0 || nb == 0 {
                    Known::literal(0, w)
                } else {
                    Known::fits(na + nb, w)
                }
            }
            NodeKind::UDiv if op(1).one != 0 => Known::fits(op(0).need(w), w),
            NodeKind::UMod => {
                let (na, nb) = (op(0).need(w), op(1).need(w));
                if op(1).one != 0 {
                    Known::fits(na.min(nb), w)
                } else {
                    Known::fits(na.max(nb), w)
                }
            }
            _ => Known::default(),
        };
        k.insert(n.id, r);
    }
    k
}

fn demanded_bits(f: &IrFunction) -> HashMap<NodeId, u64> {
    let widths = f.widths();
    let mut d: HashMap<NodeId, u64> = HashMap::new();
    for o in &f.outputs {
        *d.entry(o.source).or_default() |= mask(widths[&o.source]);
    }
    for n in f.nodes.iter().rev() {
        let dn = d.get(&n.id).copied().unwrap_or(0);
        if dn == 0 {
            continue;
        }
        let ow = |i: usize| widths[&n.operands[i]];
        let demands: Vec<u64> = match n.kind {
            NodeKind::Literal(_) => vec![],
            NodeKind::Add | NodeKind::Sub | NodeKind::Mul | NodeKind::Neg => {
                vec![low_fill(dn); n.operands.len()]
            }
            NodeKind::And | NodeKind::Or | NodeKind::Xor | NodeKind::Not => vec![dn; n.operands.len()],
            NodeKind::Select => vec![1, dn, dn],
            NodeKind::ShlConst(s) => vec![dn >> s],
            NodeKind::ShrConst(s) => vec![(dn << s) & mask(ow(0))],
            NodeKind::Slice(s) => vec![(dn << s) & mask(ow(0))],
            NodeKind::Zext => vec![dn & mask(ow(0))],
            NodeKind::Sext => {
                let wa = ow(0);
                let sign = if dn >> (wa - 1) != 0 { 1u64 << (wa - 1) } else { 0 };
                vec![(dn & mask(wa)) | sign]
            }
            NodeKind::Concat => vec![dn & mask(ow(0)), dn >> ow(0)],
            _ => (0..n.operands.len()).map(|i| mask(ow(i))).collect(),
        };
        for (o, dm) in n.operands.iter().zip(demands) {
            *d.entry(*o).or_default() |= dm;
        }
    }
    d
}

/// Replaces fully known nodes by literals, computes low-bit-only operations
/// at the narrowest sufficient width (re-extended with ZEXT), and compares
/// operands whose upper bits are known zero at a smaller width.
pub fn width_narrowing(f: &IrFunction) -> IrFunction {
    let known = known_bits(f);
    let demand = demanded_bits(f);
    let widths = f.widths();
    let mut next = f.next_id().0;
    let mut nodes: Vec<IrNode> = Vec::with_capacity(f.nodes.len());
    let mut fresh = |nodes: &mut Vec<IrNode>, kind: NodeKind, operands: Vec<NodeId>, width: u32| {
        let id = NodeId(next);
        next += 1;
        nodes.push(IrNode { id, kind, operands, width });
        id
    };

    for n in &f.nodes {
        let w = n.width;
        let kn = known[&n.id];
        let dn = demand.get(&n.id).copied().unwrap_or(0);
        if n.kind.is_literal() {
            nodes.push(n.clone());
            continue;
        }
        if kn.is_full(w) || dn == 0 {
            let v = if dn == 0 { 0 } else { kn.one };
            nodes.push(IrNode { id: n.id, kind: NodeKind::Literal(v), operands: vec![], width: w });
            continue;
        }

        let by_demand = matches!(
            n.kind,
            NodeKind::Add
                | NodeKind::Sub
                | NodeKind::Mul
                | NodeKind::Neg
                | NodeKind::And
                | NodeKind::Or
                | NodeKind::Xor
                | NodeKind::Not
                | NodeKind::Select
                | NodeKind::ShlConst(_)
        );
        let by_fit = matches!(
            n.kind,
            NodeKind::Add
                | NodeKind::Mul
                | NodeKind::And
                | NodeKind::Or
                | NodeKind::Xor
                | NodeKind::Not
                | NodeKind::Select
        );
        let mut k = w;
        if by_demand {
            k = k.min(64 - dn.leading_zeros());
        }
        if by_fit {
            k = k.min(kn.need(w));
        }
        if k < w {
            let data_from = usize::from(n.kind == NodeKind::Select);
            let mut ops = n.operands.clone();
            for o in ops.iter_mut().skip(data_from) {
                *o = fresh(&mut nodes, NodeKind::Slice(0), vec![*o], k);
            }
            let narrow = fresh(&mut nodes, n.kind, ops, k);
            nodes.push(IrNode { id: n.id, kind: NodeKind::Zext, operands: vec![narrow], width: w });
            continue;
        }

        if matches!(n.kind, NodeKind::Eq | NodeKind::Ne | NodeKind::Ult | NodeKind::Ule) {
            let (a, b) = (n.operands[0], n.operands[1]);
            let wa = widths[&a];
            let m = known[&a].need(wa).max(known[&b].need(wa));
            if m == 0 {
                let v = u64::from(matches!(n.kind, NodeKind::Eq | NodeKind::Ule));
                nodes.push(IrNode { id: n.id, kind: NodeKind::Literal(v), operands: vec![], width: 1 });
                continue;
            }
            if m < wa {
                let sa = fresh(&mut nodes, NodeKind::Slice(0), vec![a], m);
                let sb = fresh(&mut nodes, NodeKind::Slice(0), vec![b], m);
                nodes.push(IrNode { id: n.id, kind: n.kind, operands: vec![sa, sb], width: 1 });
                continue;
            }
        }
        nodes.push(n.clone());
    }
    IrFunction { name: f.name.clone(), inputs: f.inputs.clone(), nodes, outputs: f.outputs.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{evaluate_positional, parse_ir, validate};
    use crate::optimizer::{constant_fold, dead_node_elimination};
    use crate::testing::{first_mismatch, input_vectors, random_ir};

    #[test]
    fn known_bits_of_masked_value() {
        let f = parse_ir("fn f\nin x %0:u8\n%1:8 = literal(15)\n%2:8 = and(%0, %1)\nout r %2:u8\n").unwrap();
        let k = known_bits(&f)[&NodeId(2)];
        assert_eq!(k.zero, 0xf0);
        assert_eq!(k.need(8), 4);
    }

    #[test]
    fn add_of_small_values_narrows() {
        let f = parse_ir(
            "fn f\nin a %0:u4\nin b %1:u4\n%2:16 = zext(%0)\n%3:16 = zext(%1)\n%4:16 = add(%2, %3)\nout r %4:u16\n",
        )
        .unwrap();
        let g = dead_node_elimination(&constant_fold(&width_narrowing(&f)));
        validate(&g).unwrap();
        let add = g.nodes.iter().find(|n| n.kind == NodeKind::Add).unwrap();
        assert_eq!(add.width, 5);
        for v in input_vectors(&[4, 4], 8, 0, 0) {
            assert_eq!(evaluate_positional(&g, &v).unwrap(), evaluate_positional(&f, &v).unwrap());
        }
    }

    #[test]
    fn add_feeding_low_nibble_narrows() {
        let f = parse_ir(
            "fn f\nin a %0:u4\nin b %1:u4\n%2:8 = zext(%0)\n%3:8 = zext(%1)\n%4:8 = add(%2, %3)\n%5:4 = slice(%4, 0)\nout r %5:u4\n",
        )
        .unwrap();
        let g = dead_node_elimination(&constant_fold(&width_narrowing(&f)));
        let add = g.nodes.iter().find(|n| n.kind == NodeKind::Add).unwrap();
        assert!(add.width == 4 || add.width == 5);
        for v in input_vectors(&[4, 4], 8, 0, 0) {
            assert_eq!(evaluate_positional(&g, &v).unwrap(), evaluate_positional(&f, &v).unwrap());
        }
    }

    #[test]
    fn high_nibble_of_masked_byte_is_zero() {
        let f =
            parse_ir("fn f\nin x %0:u8\n%1:8 = literal(15)\n%2:8 = and(%0, %1)\n%3:4 = slice(%2, 4)\nout r %3:u4\n")
                .unwrap();
        let g = dead_node_elimination(&width_narrowing(&f));
        assert_eq!(g.nodes.len(), 1);
        assert_eq!(g.nodes[0].kind, NodeKind::Literal(0));
        for x in 0..256 {
            assert_eq!(evaluate_positional(&g, &[x]).unwrap(), vec![0]);
        }
    }

    #[test]
    fn fully_demanded_node_is_unchanged() {
        let f = parse_ir("fn f\nin a %0:u8\nin b %1:u8\n%2:8 = mul(%0, %1)\nout r %2:u8\n").unwrap();
        assert_eq!(width_narrowing(&f), f);
    }

    #[test]
    fn low_byte_of_wide_product_narrows() {
        let f = parse_ir("fn f\nin a %0:u32\nin b %1:u32\n%2:32 = mul(%0, %1)\n%3:8 = slice(%2, 0)\nout r %3:u8\n")
            .unwrap();
        let g = dead_node_elimination(&constant_fold(&width_narrowing(&f)));
        let mul = g.nodes.iter().find(|n| n.kind == NodeKind::Mul).unwrap();
        assert_eq!(mul.width, 8);
    }

    #[test]
    fn preserves_semantics_on_random_functions() {
        for seed in 0..300 {
            let f = random_ir(seed, &[4, 3, 3], 30, 16);
            let g = width_narrowing(&f);
            validate(&g).unwrap_or_else(|e| panic!("seed {seed}: {e:?}"));
            assert_eq!(first_mismatch(&f, &g, &input_vectors(&[4, 3, 3], 10, 0, 0)), None, "seed {seed}");
        }
    }
}
