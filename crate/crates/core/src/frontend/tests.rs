// SPDX-License-Identifier: Apache-2.0

use super::*;
use crate::codec::Value;
use crate::ir::{validate, Evaluator, NodeKind};
use crate::testing::input_vectors;

fn compile_ok(src: &str) -> Compiled {
    compile(src, None).unwrap_or_else(|d| panic!("{src}\n{d:?}"))
}

/// Interpreter and IR evaluator agree on every input (exhaustive up to 12
/// input bits, sampled above).
fn agree(src: &str) -> Compiled {
    let c = compile_ok(src);
    validate(&c.ir).unwrap();
    let ev = Evaluator::new(&c.ir).unwrap();
    let widths: Vec<u32> = c.ir.inputs.iter().map(|i| i.ty.bits()).collect();
    for v in input_vectors(&widths, 12, 1000, 7) {
        let want = interpret_leaves(&c.program, &c.entry, &v).unwrap();
        assert_eq!(ev.run(&v).unwrap(), want, "{src}\ninputs {v:?}");
    }
    c
}

fn first_error(src: &str) -> Code {
    match compile(src, None) {
        Ok(_) => panic!("accepted: {src}"),
        Err(d) => d[0].code,
    }
}

#[test]
fn sum_lowers_to_one_add() {
    let c = agree("u8 sum(u8 a, u8 b){ return a + b; }");
    let names: Vec<_> = c.ir.inputs.iter().map(|i| (i.name.as_str(), i.ty.bits())).collect();
    assert_eq!(names, [("a", 8), ("b", 8)]);
    assert_eq!(c.ir.outputs.len(), 1);
    assert_eq!(c.ir.outputs[0].ty.bits(), 8);
    let ops: Vec<_> = c.ir.nodes.iter().filter(|n| !n.kind.is_literal()).map(|n| n.kind).collect();
    assert_eq!(ops, [NodeKind::Add]);
}

#[test]
fn if_else_becomes_select() {
    let c = agree("u4 f(bool c, u4 a, u4 b){ u4 r; if (c) r = a; else r = b; return r; }");
    let sel = c.ir.nodes.iter().find(|n| n.kind == NodeKind::Select).expect("select node");
    let ids: Vec<_> = c.ir.inputs.iter().map(|i| i.id).collect();
    assert_eq!(sel.operands, ids);
}

#[test]
fn unrolled_loop_is_an_add_chain() {
    let c = agree("u4 f(u4 x[4]){ u4 acc = 0; for (u8 i = 0; i < 4; i++) acc += x[i]; return acc; }");
    let adds = c.ir.nodes.iter().filter(|n| n.kind == NodeKind::Add && n.width == 4).count();
    assert_eq!(adds, 4);
    assert!(c.program.warnings.is_empty(), "{:?}", c.program.warnings);
}

#[test]
fn early_returns_merge() {
    agree("i4 f(i4 a, i4 b){ if (a < 0) return -a; if (b == 0) return 7; for (int i = 0; i < 3; i++) { if (a == i) return b; } return a - b; }");
}

#[test]
fn return_inside_nested_calls() {
    agree("u3 g(u3 x){ if (x > 4) return 1; return x + 2; }\nu3 h(u3 a, u3 b){ return g(a) * g(b); }");
}

#[test]
fn dynamic_index_read_and_write() {
    let c = agree("u3 f(u3 xs[5], u3 i, u3 v){ u3 ys[5] = xs; ys[i] = v; return ys[i + 1] ^ xs[i]; }");
    assert!(c.program.warnings.iter().all(|w| w.code == Code::DynamicIndex && !w.is_error()));
    assert!(!c.program.warnings.is_empty());
    agree("u2 f(u2 m[2][3], i3 i, u2 j){ m[j][1] = 3; return m[1][j] + m[j][0] + (u2)i; }");
}

#[test]
fn signed_index_out_of_range_reads_zero() {
    agree("u4 f(u4 xs[3], i3 i){ return xs[i]; }");
}

#[test]
fn structs_and_nested_aggregates() {
    let src = "struct P { u3 x; i3 y; };\nstruct S { P p[2]; bool on; };\nu4 f(S s, u1 k){ S t = s; t.p[k].x = t.p[k].x + 1; if (t.on) return t.p[0].x + t.p[1].y; return (u4)t.p[k].y; }";
    agree(src);
}

#[test]
fn struct_return_and_params() {
    let src = "struct Q { u4 lo; u4 hi; };\nQ f(u4 a, u4 b){ Q q = {a, b}; q.lo = q.lo ^ b; return q; }";
    let c = agree(src);
    let names: Vec<_> = c.ir.outputs.iter().map(|o| o.name.as_str()).collect();
    assert_eq!(names, ["ret.lo", "ret.hi"]);
    let v = interpret(&c.program, "f", &[Value::Int(3), Value::Int(5)]).unwrap();
    assert_eq!(v.to_string(), "{lo: 6, hi: 5}");
}

#[test]
fn arithmetic_corners() {
    agree("u4 f(u4 a, u4 b){ return a / b + a % b; }");
    agree("i4 f(i4 a, i4 b){ return a / b; }");
    agree("i4 f(i4 a, i4 b){ return a % b; }");
    agree("i6 f(i6 a, u3 s){ return a >> s; }");
    agree("u6 f(u6 a, u3 s){ return (a << s) | (a >> s); }");
    agree("i5 f(i5 a, i3 s){ return a << s; }");
    agree("bool f(u4 a, i4 b){ return a < b && !(a == 3) || a >= 12; }");
    agree("i8 f(u4 a, i4 b){ return a - b + (a * b) - ~a; }");
    agree("u6 f(u6 a){ return (a + 300) * 3 - (a > 40 ? a : 1); }");
    agree("u8 f(u4 a){ u8 m = 0; for (int i = 0; i < 4; i++) m |= (1 << i) & a; return m; }");
    agree("i5 f(i5 a){ return a >> 7; }");
    agree("u3 f(bool b, u3 a){ return b + a + true; }");
}

#[test]
fn consts_and_loop_nesting() {
    let src = "const u8 N = 3;\nconst u4 T[3] = {5, 9, 1};\nu4 f(u4 x){ u4 s = 0; for (int i = 0; i < N; i++) for (int j = i; j < N; j += 1) s += T[j] * x; return s; }";
    agree(src);
}

#[test]
fn lowered_ir_has_only_dataflow_kinds() {
    let c =
        agree("u4 f(u4 a, u4 b){ u4 r = 0; for (u8 i = 0; i < 2; i++) { if (a > b) r += a; else r -= b; } return r; }");
    for n in &c.ir.nodes {
        assert!(!matches!(n.kind.name(), "loop" | "call" | "branch" | "jump"));
    }
}

#[test]
fn parse_errors_have_spans() {
    let d = parse("int f(").unwrap_err();
    assert_eq!(d[0].code, Code::Syntax);
    assert_eq!((d[0].span.line, d[0].span.col), (1, 7));
    let d = parse("u8 f(u8* p){ return 0; }").unwrap_err();
    assert_eq!(d[0].code, Code::Pointer);
    assert!(d[0].render("x.fhe.c").starts_with("x.fhe.c:1:8: error[POINTER]: "), "{}", d[0].render("x.fhe.c"));
}

#[test]
fn type_errors() {
    let cases = [
        ("u8 f(u8 a){ return b; }", Code::Undefined),
        ("u8 f(u8 a){ return g(a); }", Code::Undefined),
        ("u8 f(u8 a, u8 a){ return a; }", Code::Duplicate),
        ("u8 f(u8 a){ u8 x; u8 x; return a; }", Code::Duplicate),
        ("struct P { u8 x; };\nu8 f(P p){ return p.z; }", Code::Undefined),
        ("u8 f(u8 xs[2]){ return xs; }", Code::Type),
        ("u8 f(u8 a){ return a[0]; }", Code::Type),
        ("const u8 K = 1;\nu8 f(u8 a){ K = a; return K; }", Code::Type),
        ("u8 f(u8 xs[2]){ return xs[2]; }", Code::IndexBounds),
        ("u8 g(u8 a){ return a; }\nu8 f(u8 a){ return g(a, a); }", Code::Type),
    ];
    for (src, code) in cases {
        assert_eq!(first_error(src), code, "{src}");
    }
}

#[test]
fn restriction_codes() {
    let cases = [
        ("u8 f(u8 n){ u8 s = 0; for (u8 i = 0; i < n; i++) s += i; return s; }", Code::LoopBound),
        ("u8 f(u8 n){ u8 s = 0; for (u8 i = n; i < 4; i++) s += i; return s; }", Code::LoopBound),
        ("u8 f(u8 n){ u8 s = 0; for (u8 i = 0; i < 4; i += n) s += i; return s; }", Code::LoopBound),
        ("u8 f(u8 x){ return f(x); }", Code::Recursion),
        ("u8 g(u8 x);", Code::Syntax),
        ("u8 h(u8 x){ return k(x); }\nu8 k(u8 x){ return h(x); }", Code::Recursion),
        ("u8 f(u8 x){ while (x > 0) x -= 1; return x; }", Code::UnboundedLoop),
        ("u8 f(u8 x){ do { x -= 1; } while (x > 0); return x; }", Code::UnboundedLoop),
        ("u8 f(u8 x){ for (u8 i = 0; i < 4; i++) { if (x == i) break; } return x; }", Code::EarlyExit),
        ("u8 f(u8 x){ for (u8 i = 0; i < 4; i++) { i = x; } return x; }", Code::LoopVarMutated),
        ("u8 f(u8 x){ for (;;) { x += 1; } return x; }", Code::LoopForm),
        ("u8 f(u8 x){ for (u8 i = 0; x < 4; i++) x += 1; return x; }", Code::LoopForm),
    ];
    for (src, code) in cases {
        assert_eq!(first_error(src), code, "{src}");
    }
}

#[test]
fn constant_loop_bound_is_fine() {
    let p = parse("u8 f(u8 x){ for (u8 i = 0; i < 4; i++) x += i; return x; }").unwrap();
    assert!(check_restrictions(&p).is_empty());
}

#[test]
fn node_limit_is_enforced() {
    let p = parse("u8 f(u8 x){ for (int i = 0; i < 1000; i++) x = x * x + 1; return x; }").unwrap();
    let d = lower_with(&p, "f", LowerOptions { node_limit: 500, ..LowerOptions::default() }).unwrap_err();
    assert_eq!(d.code, Code::NodeLimit);
    let stuck = parse("u8 f(u8 x){ for (u8 i = 0; i < 4; i = i) x += 1; return x; }").unwrap();
    assert_eq!(lower_to_ir(&stuck, "f").unwrap_err().code, Code::NodeLimit);
    let d = lower_to_ir(&p, "nope").unwrap_err();
    assert_eq!(d.code, Code::Entry);
}

#[test]
fn entry_layouts_match_codec() {
    let p = parse("struct P { u4 x; bool b; };\nP f(P p, i3 xs[2]){ return p; }").unwrap();
    let (params, ret) = p.entry_layouts("f").unwrap();
    assert_eq!(params[0].1.dump("p"), "p.x bits 0..4 u4\np.b bits 4..5 u1\n");
    assert_eq!(params[1].1.to_string(), "i3[2]");
    assert_eq!(ret, params[0].1);
}
