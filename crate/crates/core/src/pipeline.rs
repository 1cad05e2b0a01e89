// SPDX-License-Identifier: Apache-2.0

//! End-to-end flow: source to gate circuit, and typed values in and out of
//! a circuit on either backend.

use thiserror::Error;

use crate::backend::{BackendError, CleartextBackend, FheBackend};
use crate::booleanifier::{booleanify, gate_optimize, GateCircuit, WireGroup};
use crate::codec::{
    decode, decrypt_value, encode, encrypt_value, leaf_words, CodecError, EncodedValue, FheValue, Layout, Value,
};
use crate::frontend::{compile, Compiled, Diagnostic};
use crate::ir::{EvalError, IrFunction};
use crate::optimizer::{PassPipeline, PassReport};
use crate::runtime::{execute, ExecOptions, ExecStats, RuntimeError};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("{} diagnostic(s)", .0.len())]
    Compile(Vec<Diagnostic>),
    #[error("booleanify: {0}")]
    Booleanify(#[from] EvalError),
}

/// Every intermediate artifact of one transpiler invocation.
#[derive(Debug, Clone)]
pub struct Build {
    pub compiled: Compiled,
    pub optimized: IrFunction,
    pub report: PassReport,
    /// Straight out of the booleanifier.
    pub raw_circuit: GateCircuit,
    /// After gate-level cleanup when the pipeline asks for it, otherwise a
    /// copy of `raw_circuit`.
    pub circuit: GateCircuit,
}

pub fn build(src: &str, entry: Option<&str>, passes: &PassPipeline) -> Result<Build, BuildError> {
    let compiled = compile(src, entry).map_err(BuildError::Compile)?;
    let (optimized, report) = passes.run(&compiled.ir);
    let raw_circuit = booleanify(&optimized)?;
    let circuit = if passes.gate_level { gate_optimize(&raw_circuit) } else { raw_circuit.clone() };
    Ok(Build { compiled, optimized, report, raw_circuit, circuit })
}

impl Build {
    /// Size after each stage, in pipeline order.
    pub fn stage_counts(&self) -> Vec<(&'static str, usize)> {
        let stmts: usize = self.compiled.program.functions.iter().map(|f| f.body.len()).sum();
        vec![
            ("source functions", self.compiled.program.functions.len()),
            ("source top-level statements", stmts),
            ("ir nodes (lowered)", self.compiled.ir.node_count()),
            ("ir nodes (optimized)", self.optimized.node_count()),
            ("gates (booleanified)", self.raw_circuit.gates.len()),
            ("gates (final)", self.circuit.gates.len()),
            ("gate depth", self.circuit.depth()),
        ]
    }
}

/// Typed view of a circuit's interface, rebuilt from its wire-group names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub params: Vec<(String, Layout)>,
    pub results: Vec<(String, Layout)>,
}

pub fn signature(c: &GateCircuit) -> Result<Signature, CodecError> {
    fn layouts(groups: &[WireGroup]) -> Result<Vec<(String, Layout)>, CodecError> {
        Layout::from_leaves(groups.iter().map(|g| (g.name.as_str(), g.ty)))
    }
    Ok(Signature { params: layouts(&c.inputs)?, results: layouts(&c.outputs)? })
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("expected {expected} arguments, got {got}")]
    Arity { expected: usize, got: usize },
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error("decrypting `{output}` bit {bit}: {source}")]
    Decrypt { output: String, bit: usize, source: BackendError },
}

impl RunError {
    pub fn is_noise_overflow(&self) -> bool {
        matches!(self, RunError::Decrypt { source: BackendError::NoiseOverflow { .. }, .. })
    }
}

fn encode_args(sig: &Signature, args: &[Value]) -> Result<Vec<EncodedValue>, RunError> {
    if args.len() != sig.params.len() {
        return Err(RunError::Arity { expected: sig.params.len(), got: args.len() });
    }
    Ok(sig.params.iter().zip(args).map(|((_, l), v)| encode(v, l)).collect::<Result<_, _>>()?)
}

/// Splits flat output groups into one bit run per result value.
fn group_results<T: Clone>(sig: &Signature, groups: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut it = groups.iter();
    sig.results
        .iter()
        .map(|(_, l)| {
            let n = l.leaves("").len();
            it.by_ref().take(n).flatten().cloned().collect()
        })
        .collect()
}

/// Runs `c` on plaintext values with the cleartext backend.
pub fn run_cleartext(c: &GateCircuit, args: &[Value], opts: ExecOptions) -> Result<(Vec<Value>, ExecStats), RunError> {
    let sig = signature(c)?;
    let groups: Vec<Vec<bool>> = encode_args(&sig, args)?.iter().flat_map(EncodedValue::leaf_bits).collect();
    let (out, stats) = execute(c, &groups, &CleartextBackend, opts)?;
    let values = sig
        .results
        .iter()
        .zip(group_results(&sig, &out))
        .map(|((_, l), bits)| decode(&EncodedValue::new(l.clone(), bits)?))
        .collect::<Result<_, CodecError>>()?;
    Ok((values, stats))
}

/// Result of [`run_fhe`].
#[derive(Debug, Clone)]
pub struct FheRun {
    pub values: Vec<Value>,
    pub stats: ExecStats,
    /// Highest noise seen on any gate output or result bit.
    pub max_noise: u64,
}

/// Client and server roles in one call: encode, encrypt, execute on
/// ciphertexts, decrypt, decode.
pub fn run_fhe(c: &GateCircuit, args: &[Value], backend: &FheBackend, opts: ExecOptions) -> Result<FheRun, RunError> {
    let (key, params) = (backend.key(), backend.params());
    let sig = signature(c)?;
    let groups: Vec<_> =
        encode_args(&sig, args)?.iter().flat_map(|e| encrypt_value(key, e, params).leaf_bits()).collect();
    let (out, stats) = execute(c, &groups, backend, opts)?;
    let mut max_noise = stats.level_max_noise.iter().copied().max().unwrap_or(0);
    let mut values = Vec::with_capacity(sig.results.len());
    for ((name, layout), bits) in sig.results.iter().zip(group_results(&sig, &out)) {
        max_noise = bits.iter().map(|b| b.noise()).fold(max_noise, u64::max);
        let fv = FheValue { layout: layout.clone(), bits };
        let e = decrypt_value(key, &fv, params).map_err(|e| match e {
            CodecError::Decrypt { bit, source } => RunError::Decrypt { output: name.clone(), bit, source },
            other => other.into(),
        })?;
        values.push(decode(&e)?);
    }
    Ok(FheRun { values, stats, max_noise })
}

/// Flat leaf words of `args`, in the order of the circuit's input groups.
pub fn arg_words(c: &GateCircuit, args: &[Value]) -> Result<Vec<u64>, RunError> {
    let sig = signature(c)?;
    Ok(encode_args(&sig, args)?.iter().flat_map(leaf_words).collect())
}
