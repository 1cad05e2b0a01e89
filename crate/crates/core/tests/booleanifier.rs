// SPDX-License-Identifier: Apache-2.0

use fhec::backend::CleartextBackend;
use fhec::booleanifier::{booleanify, evaluate_gates, from_bits, gate_optimize, to_bits, GateCircuit, GateKind};
use fhec::ir::parse_ir;
use fhec::runtime::{execute, ExecOptions};

fn adder(n: u32) -> GateCircuit {
    let text = format!("fn add\nin a %0:u{n}\nin b %1:u{n}\n%2:{n} = add(%0, %1)\nout r %2:u{n}\n");
    booleanify(&parse_ir(&text).unwrap()).unwrap()
}

#[test]
fn u8_add_is_exhaustively_correct_on_the_cleartext_backend() {
    let c = adder(8);
    assert_eq!(c.logic_gate_count(), 40);
    assert_eq!(c.counts_by_kind()[&GateKind::Const0], 1);
    for a in 0..256u64 {
        for b in 0..256u64 {
            let ins = vec![to_bits(a, 8).collect(), to_bits(b, 8).collect()];
            let (out, _) = execute(&c, &ins, &CleartextBackend, ExecOptions::default()).unwrap();
            assert_eq!(from_bits(&out[0]), (a + b) & 0xff, "{a}+{b}");
        }
    }
}

#[test]
fn adder_depth_grows_with_width() {
    let depths: Vec<usize> = [4, 8, 16, 32].iter().map(|&n| adder(n).depth()).collect();
    assert!(depths.windows(2).all(|w| w[0] < w[1]), "{depths:?}");
    // Carry chain: each extra bit adds the AND/OR pair on the carry path.
    assert_eq!(depths[1] - depths[0], 2 * 4);
}

#[test]
fn zero_inputs_give_zero_and_wraparound_drops_carry() {
    let c = adder(8);
    assert_eq!(evaluate_gates(&c, &[false; 16]).unwrap(), vec![false; 8]);
    let mut bits: Vec<bool> = to_bits(255, 8).collect();
    bits.extend(to_bits(1, 8));
    assert_eq!(evaluate_gates(&c, &bits).unwrap(), vec![false; 8]);
}

#[test]
fn adding_literal_zero_collapses_to_copies() {
    let text = "fn addz\nin a %0:u8\n%1:8 = literal(0)\n%2:8 = add(%0, %1)\nout r %2:u8\n";
    let c = booleanify(&parse_ir(text).unwrap()).unwrap();
    let o = gate_optimize(&c);
    assert!(o.gates.iter().all(|g| g.kind == GateKind::Copy), "{:?}", o.counts_by_kind());
    for a in 0..256u64 {
        let out = evaluate_gates(&o, &to_bits(a, 8).collect::<Vec<_>>()).unwrap();
        assert_eq!(from_bits(&out), a);
    }
}
