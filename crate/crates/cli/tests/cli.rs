// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fhec::booleanifier::parse_gates;
use fhec::frontend::compile;
use fhec::ir::serialize;
use tempfile::TempDir;

const SUM: &str = "u8 sum(u8 a, u8 b){ return a + b; }\n";

fn fhec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fhec")).args(args).output().expect("spawn fhec")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn file(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn transpile_sum_writes_ir_and_gates() {
    let dir = TempDir::new().unwrap();
    let src = file(&dir, "sum.c", SUM);
    let (ir, gates) = (dir.path().join("sum.ir"), dir.path().join("sum.gates"));
    let o = fhec(&["transpile", s(&src), "--emit-ir", s(&ir), "--emit-gates", s(&gates)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    for stage in ["ir nodes (lowered)", "ir nodes (optimized)", "gates (booleanified)", "gates (final)"] {
        assert!(out.contains(stage), "{out}");
    }
    let c = parse_gates(&fs::read_to_string(&gates).unwrap()).unwrap();
    assert_eq!(c.input_wire_count(), 16);
    assert_eq!(c.output_wire_count(), 8);
    assert!(fs::read_to_string(&ir).unwrap().starts_with("fn sum\n"));
}

#[test]
fn recursion_is_a_compile_error() {
    let dir = TempDir::new().unwrap();
    let src = file(&dir, "rec.c", "u8 f(u8 x){ if (x == 0) return 0; return f(x - 1); }\n");
    let o = fhec(&["transpile", s(&src)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("error[RECURSION]"), "{}", stderr(&o));
}

#[test]
fn empty_pass_list_emits_lowered_ir_verbatim() {
    let dir = TempDir::new().unwrap();
    let text = "u8 f(u8 a){ u8 k = 3 * 4; return a + k - 0; }\n";
    let src = file(&dir, "f.c", text);
    let ir = dir.path().join("f.ir");
    let o = fhec(&["transpile", s(&src), "--passes", "", "--emit-ir", s(&ir)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&ir).unwrap(), serialize(&compile(text, None).unwrap().ir));
}

#[test]
fn run_on_both_backends() {
    let dir = TempDir::new().unwrap();
    let src = file(&dir, "sum.c", SUM);
    for backend in ["cleartext", "fhe"] {
        let o = fhec(&["run", s(&src), "--backend", backend, "--in", "a=100", "--in", "b=55"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(stdout(&o).starts_with("ret = 155\n"), "{}", stdout(&o));
    }
    let o = fhec(&["run", s(&src), "--backend", "fhe", "--in", "a=1", "--in", "b=2"]);
    assert!(stdout(&o).contains("max noise 10 of budget 100"), "{}", stdout(&o));
}

#[test]
fn run_accepts_a_gates_file() {
    let dir = TempDir::new().unwrap();
    let src = file(&dir, "sum.c", SUM);
    let gates = dir.path().join("sum.gates");
    assert_eq!(code(&fhec(&["transpile", s(&src), "--emit-gates", s(&gates)])), 0);
    let o = fhec(&["run", s(&gates), "--backend", "fhe", "--jobs", "4", "--in", "b=250", "--in", "a=9"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("ret = 3\n"));
}

#[test]
fn aggregate_inputs() {
    let dir = TempDir::new().unwrap();
    let text = "struct P { u4 x; u4 y; };\nu8 f(P p, u4 xs[4]){ u8 t = 0; for (int i = 0; i < 4; i++) t += xs[i]; return t * p.x + p.y; }\n";
    let src = file(&dir, "agg.c", text);
    let o = fhec(&["run", s(&src), "--in", "p={x:3,y:10}", "--in", "xs=[1,2,3,4]"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("ret = 40\n"), "{}", stdout(&o));
    let o = fhec(&["run", s(&src), "--in", "p={x:3,y:10}"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("missing input `xs`"));
}

#[test]
fn noise_overflow_exits_2_with_hint() {
    let dir = TempDir::new().unwrap();
    let src = file(&dir, "cube.c", "u8 f(u8 a){ return a * a * a; }\n");
    let args = ["run", s(&src), "--backend", "fhe", "--params", "leveled_small", "--in", "a=7"];
    let o = fhec(&args);
    assert_eq!(code(&o), 2, "{}", stdout(&o));
    let err = stderr(&o);
    assert!(err.contains("noise overflow") && err.contains("bit") && err.contains("hint:"), "{err}");
    let o = fhec(&["run", s(&src), "--backend", "fhe", "--params", "tfhe_like", "--in", "a=7"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("ret = 87\n"));
}

#[test]
fn params_file_is_read() {
    let dir = TempDir::new().unwrap();
    let src = file(&dir, "sum.c", SUM);
    let params = file(&dir, "p.txt", "preset=leveled_small\nbudget=5000\n");
    let o = fhec(&["run", s(&src), "--backend", "fhe", "--params", s(&params), "--in", "a=3", "--in", "b=4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("of budget 5000"));
    let o = fhec(&["run", s(&src), "--backend", "fhe", "--params", "nope", "--in", "a=3", "--in", "b=4"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn same_seed_gives_identical_stats() {
    let dir = TempDir::new().unwrap();
    let src = file(&dir, "sum.c", SUM);
    let stats = |name: &str| {
        let p = dir.path().join(name);
        let o = fhec(&[
            "run",
            s(&src),
            "--backend",
            "fhe",
            "--seed",
            "42",
            "--shuffle",
            "--jobs",
            "2",
            "--in",
            "a=7",
            "--in",
            "b=9",
            "--stats",
            s(&p),
        ]);
        assert_eq!(code(&o), 0);
        fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("wall_time"))
            .map(str::to_string)
            .collect::<Vec<_>>()
    };
    let (a, b) = (stats("a.kv"), stats("b.kv"));
    assert_eq!(a, b);
    assert!(a.iter().any(|l| l == "backend=fhe") && a.iter().any(|l| l == "max_noise=10"));
}

#[test]
fn testbench_pass_and_fail() {
    let dir = TempDir::new().unwrap();
    let src = file(&dir, "sum.c", SUM);
    let o = fhec(&["testbench", s(&src), "--in", "a=3", "--in", "b=5", "--expect", "8"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).starts_with("PASS case 1"));
    let o = fhec(&["testbench", s(&src), "--in", "a=3", "--in", "b=5", "--expect", "9"]);
    assert_eq!(code(&o), 3);
    let out = stdout(&o);
    assert!(out.contains("FAIL") && out.contains("expected 9 but got 8"), "{out}");
}

#[test]
fn testbench_batch_of_random_adds() {
    let dir = TempDir::new().unwrap();
    let src = file(&dir, "sum.c", SUM);
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state % 256
    };
    let mut batch = String::from("# a b => a + b mod 256\n");
    for _ in 0..100 {
        let (a, b) = (next(), next());
        batch.push_str(&format!("a={a} b={b} => {}\n", (a + b) % 256));
    }
    let batch = file(&dir, "cases.txt", &batch);
    let o = fhec(&["testbench", s(&src), "--batch", s(&batch), "--jobs", "2"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 100);
    assert!(out.contains("100/100 passed"));
}

#[test]
fn stats_formats() {
    let dir = TempDir::new().unwrap();
    let src = file(&dir, "sum.c", SUM);
    let o = fhec(&["stats", s(&src), "--format", "kv"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("input_wires=16\n") && out.contains("output_wires=8\n"), "{out}");
    assert!(out.contains("gates_XOR="), "{out}");
    let o = fhec(&["stats", s(&src)]);
    assert!(stdout(&o).contains("depth"));
}

#[test]
fn missing_file_and_bad_pass() {
    assert_eq!(code(&fhec(&["transpile", "/nonexistent/x.c"])), 1);
    let dir = TempDir::new().unwrap();
    let src = file(&dir, "sum.c", SUM);
    let o = fhec(&["transpile", s(&src), "--passes", "fold,inline"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("unknown pass `inline`"));
}
