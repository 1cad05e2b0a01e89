// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fhec::backend::{keygen, FheBackend, SchemeParams, PRESETS};
use fhec::booleanifier::{parse_gates, serialize_gates, GateCircuit};
use fhec::codec::{parse_value, Value};
use fhec::frontend::interpret;
use fhec::ir::serialize;
use fhec::optimizer::PassPipeline;
use fhec::pipeline::{build, run_cleartext, run_fhe, signature, Build, BuildError, RunError, Signature};
use fhec::runtime::{ExecOptions, ExecStats};
use thiserror::Error;

use crate::inputs::{bind, parse_batch, split_top_level, Case};
use crate::{BackendName, BuildOpts, ExecOpts, Format, RunArgs, StatsArgs, TestbenchArgs, TranspileArgs};

/// Like `print!`, but a closed stdout (e.g. piping into `head`) ends the
/// process quietly instead of panicking.
macro_rules! out {
    ($($t:tt)*) => {
        if let Err(e) = std::io::Write::write_fmt(&mut std::io::stdout(), format_args!($($t)*)) {
            stdout_failed(e);
        }
    };
}

macro_rules! outln {
    () => { out!("\n") };
    ($($t:tt)*) => {{ out!($($t)*); out!("\n"); }};
}

fn stdout_failed(e: std::io::Error) -> ! {
    if e.kind() == std::io::ErrorKind::BrokenPipe {
        std::process::exit(0);
    }
    eprintln!("writing to stdout: {e}");
    std::process::exit(1);
}

#[derive(Debug, Error)]
pub enum CliError {
    /// Rendered diagnostics, one per line.
    #[error("{0}")]
    Compile(String),
    #[error("error: {0}")]
    Input(String),
    #[error("error: {0}")]
    Runtime(String),
    #[error("{failed} of {total} case(s) failed")]
    Mismatch { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Compile(_) | CliError::Input(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Mismatch { .. } => 3,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

enum Loaded {
    Source(Box<Build>),
    Gates(GateCircuit),
}

impl Loaded {
    fn circuit(&self) -> &GateCircuit {
        match self {
            Loaded::Source(b) => &b.circuit,
            Loaded::Gates(c) => c,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load(opts: &BuildOpts) -> Result<Loaded> {
    let text = read(&opts.input)?;
    let name = opts.input.display().to_string();
    if opts.input.extension().is_some_and(|e| e == "gates") {
        return parse_gates(&text).map(Loaded::Gates).map_err(|e| CliError::Input(format!("{name}: {e}")));
    }
    let passes = PassPipeline::parse(&opts.passes)
        .and_then(|p| p.with_max_iterations(opts.max_iterations))
        .map_err(|e| CliError::Input(e.to_string()))?;
    match build(&text, opts.entry.as_deref(), &passes) {
        Ok(b) => {
            for w in &b.compiled.program.warnings {
                eprintln!("{}", w.render(&name));
            }
            Ok(Loaded::Source(Box::new(b)))
        }
        Err(BuildError::Compile(diags)) => {
            let lines: Vec<String> = diags.iter().map(|d| d.render(&name)).collect();
            Err(CliError::Compile(lines.join("\n")))
        }
        Err(e) => Err(CliError::Compile(format!("{name}: {e}"))),
    }
}

fn emit(loaded: &Loaded, ir: Option<&Path>, gates: Option<&Path>) -> Result<()> {
    if let Some(path) = ir {
        match loaded {
            Loaded::Source(b) => write(path, &serialize(&b.optimized))?,
            Loaded::Gates(_) => return Err(CliError::Input("--emit-ir needs a source file".into())),
        }
    }
    if let Some(path) = gates {
        write(path, &serialize_gates(loaded.circuit()))?;
    }
    Ok(())
}

fn sig_of(c: &GateCircuit) -> Result<Signature> {
    signature(c).map_err(|e| CliError::Input(format!("circuit interface: {e}")))
}

fn load_params(spec: &str) -> Result<SchemeParams> {
    if PRESETS.contains(&spec) {
        return Ok(SchemeParams::preset(spec).expect("listed preset"));
    }
    if !Path::new(spec).exists() {
        return Err(CliError::Input(format!(
            "`{spec}` is neither a preset ({}) nor a readable file",
            PRESETS.join(", ")
        )));
    }
    let params: SchemeParams = read(Path::new(spec))?.parse().map_err(|e| CliError::Input(format!("{spec}: {e}")))?;
    params.validate().map_err(|e| CliError::Input(format!("{spec}: {e}")))?;
    Ok(params)
}

struct Exec {
    params: SchemeParams,
    seed: u64,
    opts: ExecOptions,
}

fn exec_setup(e: &ExecOpts) -> Result<Exec> {
    let params = load_params(&e.params)?;
    if e.jobs == 0 {
        return Err(CliError::Input("--jobs must be at least 1".into()));
    }
    let seed = e.seed.unwrap_or(params.key_seed);
    let opts = ExecOptions { parallelism: e.jobs, shuffle_seed: e.shuffle.then_some(seed) };
    Ok(Exec { params, seed, opts })
}

fn fhe_backend(x: &Exec) -> Result<FheBackend> {
    FheBackend::new(keygen(x.seed), x.params.clone()).map_err(|e| CliError::Input(e.to_string()))
}

fn run_error(e: RunError) -> CliError {
    let mut msg = e.to_string();
    if e.is_noise_overflow() {
        msg.push_str(
            "\nhint: the circuit is deeper than this parameter set's noise budget allows; \
             try --params tfhe_like (bootstraps every gate) or leveled_large",
        );
    }
    CliError::Runtime(msg)
}

fn show(sig: &Signature, values: &[Value]) -> String {
    sig.results.iter().zip(values).map(|((n, _), v)| format!("{n} = {v}")).collect::<Vec<_>>().join("\n")
}

pub fn transpile(a: &TranspileArgs) -> Result<()> {
    let loaded = load(&a.build)?;
    let Loaded::Source(b) = &loaded else {
        return Err(CliError::Input("transpile needs a source file, not a .gates circuit".into()));
    };
    out!("{}", stage_table(b));
    outln!();
    out!("{}", b.report.to_table());
    emit(&loaded, a.emit_ir.as_deref(), a.emit_gates.as_deref())?;
    if let Some(path) = &a.report {
        write(path, &b.report.to_kv())?;
    }
    Ok(())
}

fn stage_table(b: &Build) -> String {
    let mut out = String::from("stage                        count\n");
    for (name, n) in b.stage_counts() {
        writeln!(out, "{name:<27}  {n:>6}").unwrap();
    }
    out
}

pub fn run(a: &RunArgs) -> Result<()> {
    let loaded = load(&a.build)?;
    emit(&loaded, a.emit_ir.as_deref(), a.emit_gates.as_deref())?;
    let c = loaded.circuit();
    let sig = sig_of(c)?;
    let tokens: Vec<&str> = a.exec.inputs.iter().map(String::as_str).collect();
    let args = bind(&tokens, &sig.params).map_err(CliError::Input)?;
    let x = exec_setup(&a.exec)?;
    let (values, stats, noise) = match a.backend {
        BackendName::Cleartext => {
            let (v, s) = run_cleartext(c, &args, x.opts).map_err(run_error)?;
            (v, s, None)
        }
        BackendName::Fhe => {
            let r = run_fhe(c, &args, &fhe_backend(&x)?, x.opts).map_err(run_error)?;
            (r.values, r.stats, Some(r.max_noise))
        }
    };
    outln!("{}", show(&sig, &values));
    if let Some(n) = noise {
        outln!("max noise {n} of budget {}", x.params.noise_budget);
    }
    out!("{}", stats.to_table());
    if let Some(path) = &a.stats {
        write(path, &stats_kv(&stats, a.backend, noise))?;
    }
    Ok(())
}

fn stats_kv(stats: &ExecStats, backend: BackendName, noise: Option<u64>) -> String {
    let mut out = format!("backend={}\n", if backend == BackendName::Fhe { "fhe" } else { "cleartext" });
    out.push_str(&stats.to_kv());
    if let Some(n) = noise {
        writeln!(out, "max_noise={n}").unwrap();
    }
    out
}

pub fn testbench(a: &TestbenchArgs) -> Result<()> {
    let loaded = load(&a.build)?;
    let c = loaded.circuit();
    let sig = sig_of(c)?;
    let x = exec_setup(&a.exec)?;
    let fhe = fhe_backend(&x)?;
    let reference = |args: &[Value]| -> Option<Vec<Value>> {
        let Loaded::Source(b) = &loaded else { return None };
        interpret(&b.compiled.program, &b.compiled.entry, args).ok().map(|v| vec![v])
    };

    let cases: Vec<Case> = match &a.batch {
        Some(path) => parse_batch(&read(path)?, &sig.params, &sig.results).map_err(CliError::Input)?,
        None => {
            let tokens: Vec<&str> = a.exec.inputs.iter().map(String::as_str).collect();
            let args = bind(&tokens, &sig.params).map_err(CliError::Input)?;
            let expected = match &a.expect {
                Some(text) => expected_values(text, &sig)?,
                None => reference(&args).unwrap_or_default(),
            };
            vec![Case { line: 0, text: a.exec.inputs.join(" "), args, expected }]
        }
    };

    let mut failed = 0;
    let mut max_noise = 0;
    for (i, case) in cases.iter().enumerate() {
        let label = if case.line > 0 { format!("line {}", case.line) } else { format!("case {}", i + 1) };
        let (clear, _) = run_cleartext(c, &case.args, x.opts).map_err(run_error)?;
        let enc = run_fhe(c, &case.args, &fhe, x.opts).map_err(run_error)?;
        max_noise = max_noise.max(enc.max_noise);
        let mut problems = Vec::new();
        if clear != enc.values {
            problems.push(format!("cleartext {} but fhe {}", join(&clear), join(&enc.values)));
        }
        if !case.expected.is_empty() && clear != case.expected {
            problems.push(format!("expected {} but got {}", join(&case.expected), join(&clear)));
        }
        if let Some(r) = reference(&case.args) {
            if r != clear {
                problems.push(format!("reference interpreter gives {} but circuit {}", join(&r), join(&clear)));
            }
        }
        if problems.is_empty() {
            outln!("PASS {label}: {} => {}", case.text, join(&clear));
        } else {
            failed += 1;
            outln!("FAIL {label}: {}: {}", case.text, problems.join("; "));
        }
    }
    outln!(
        "{}/{} passed; gates {} depth {} max noise {} of {}",
        cases.len() - failed,
        cases.len(),
        c.gates.len(),
        c.depth(),
        max_noise,
        x.params.noise_budget
    );
    if failed > 0 {
        return Err(CliError::Mismatch { failed, total: cases.len() });
    }
    Ok(())
}

fn expected_values(text: &str, sig: &Signature) -> Result<Vec<Value>> {
    if sig.results.len() == 1 {
        let t = text.trim();
        let t = t.strip_prefix(&format!("{}=", sig.results[0].0)).unwrap_or(t);
        return parse_value(t, &sig.results[0].1)
            .map(|v| vec![v])
            .map_err(|e| CliError::Input(format!("--expect: {e}")));
    }
    bind(&split_top_level(text), &sig.results).map_err(|e| CliError::Input(format!("--expect: {e}")))
}

fn join(values: &[Value]) -> String {
    values.iter().map(Value::to_string).collect::<Vec<_>>().join(", ")
}

pub fn stats(a: &StatsArgs) -> Result<()> {
    let loaded = load(&a.build)?;
    let c = loaded.circuit();
    let mut rows: Vec<(String, usize)> = Vec::new();
    if let Loaded::Source(b) = &loaded {
        rows.extend(b.stage_counts().into_iter().map(|(k, v)| (k.to_string(), v)));
        rows.push(("optimizer iterations".into(), b.report.iterations));
    }
    rows.push(("input wires".into(), c.input_wire_count()));
    rows.push(("output wires".into(), c.output_wire_count()));
    rows.push(("logic gates".into(), c.logic_gate_count()));
    rows.push(("depth".into(), c.depth()));
    for (k, n) in c.counts_by_kind() {
        rows.push((format!("gates {}", k.name()), n));
    }
    for (k, v) in rows {
        match a.format {
            Format::Table => outln!("{k:<28}  {v:>8}"),
            Format::Kv => outln!("{}={v}", k.replace(['(', ')'], "").replace(' ', "_")),
        }
    }
    Ok(())
}
