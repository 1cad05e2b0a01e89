// SPDX-License-Identifier: Apache-2.0

//! Level-scheduled circuit interpreter over any [`GateBackend`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::backend::{BackendError, GateBackend};
use crate::booleanifier::{GateCircuit, GateError, GateKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuntimeError {
    #[error(transparent)]
    Malformed(#[from] GateError),
    #[error("expected {expected} input groups, got {got}")]
    GroupCount { expected: usize, got: usize },
    #[error("input `{name}` needs {expected} bits, got {got}")]
    GroupWidth { name: String, expected: usize, got: usize },
    #[error("parallelism must be at least 1")]
    ZeroParallelism,
    #[error("gate {gate}: {source}")]
    Backend { gate: usize, source: BackendError },
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Gates grouped by dependency level. Gates in one level only read
/// inputs and outputs of earlier levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    /// Gate indices into `GateCircuit::gates`, per level.
    pub levels: Vec<Vec<usize>>,
}

impl Schedule {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Checks that every gate appears once and reads only earlier levels.
    pub fn check(&self, c: &GateCircuit) -> Result<(), String> {
        let n_in = c.input_wire_count();
        let mut level_of: Vec<Option<usize>> = vec![None; n_in + c.gates.len()];
        level_of[..n_in].fill(Some(0));
        for (lvl, gates) in self.levels.iter().enumerate() {
            for &g in gates {
                let out = c.gates.get(g).ok_or_else(|| format!("gate {g} out of range"))?.out.0 as usize;
                if level_of[out].is_some() {
                    return Err(format!("gate {g} scheduled twice"));
                }
                for w in c.gates[g].operands() {
                    match level_of[w.0 as usize] {
                        Some(l) if l <= lvl => {}
                        _ => return Err(format!("gate {g} at level {} reads {w} too early", lvl + 1)),
                    }
                }
            }
            for &g in gates {
                level_of[c.gates[g].out.0 as usize] = Some(lvl + 1);
            }
        }
        match level_of.iter().position(Option::is_none) {
            Some(w) => Err(format!("wire w{w} never scheduled")),
            None => Ok(()),
        }
    }
}

/// ASAP levels: inputs are level 0, a gate sits one above its deepest
/// operand. The level count equals the circuit depth.
pub fn schedule_levels(c: &GateCircuit) -> Result<Schedule, RuntimeError> {
    c.validate()?;
    let n_in = c.input_wire_count();
    let mut level = vec![0usize; n_in + c.gates.len()];
    let mut levels: Vec<Vec<usize>> = Vec::new();
    for (i, g) in c.gates.iter().enumerate() {
        let l = 1 + g.operands().iter().map(|w| level[w.0 as usize]).max().unwrap_or(0);
        level[g.out.0 as usize] = l;
        if levels.len() < l {
            levels.resize(l, Vec::new());
        }
        levels[l - 1].push(i);
    }
    Ok(Schedule { levels })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecOptions {
    pub parallelism: usize,
    /// Shuffle each level's gate order with this seed before dispatch.
    pub shuffle_seed: Option<u64>,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions { parallelism: 1, shuffle_seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecStats {
    pub counts: BTreeMap<GateKind, usize>,
    pub depth: usize,
    pub parallelism: usize,
    pub wall_time: Duration,
    /// Highest noise among each level's outputs; empty for backends
    /// without noise tracking.
    pub level_max_noise: Vec<u64>,
}

impl ExecStats {
    pub fn total_gates(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn to_table(&self) -> String {
        let mut out = String::from("gate    count\n");
        for (k, n) in &self.counts {
            writeln!(out, "{:<6}  {n:>5}", k.name()).unwrap();
        }
        writeln!(out, "total   {:>5}", self.total_gates()).unwrap();
        writeln!(out, "depth   {:>5}", self.depth).unwrap();
        writeln!(out, "jobs    {:>5}", self.parallelism).unwrap();
        writeln!(out, "time    {:>5.3}s", self.wall_time.as_secs_f64()).unwrap();
        if let Some(max) = self.level_max_noise.iter().max() {
            writeln!(out, "noise   {max:>5} (max over levels)").unwrap();
        }
        out
    }

    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for (k, n) in &self.counts {
            writeln!(out, "gates.{}={n}", k.name()).unwrap();
        }
        writeln!(out, "gates.total={}", self.total_gates()).unwrap();
        writeln!(out, "depth={}", self.depth).unwrap();
        writeln!(out, "jobs={}", self.parallelism).unwrap();
        writeln!(out, "wall_time_ms={:.3}", self.wall_time.as_secs_f64() * 1000.0).unwrap();
        if !self.level_max_noise.is_empty() {
            let v: Vec<String> = self.level_max_noise.iter().map(u64::to_string).collect();
            writeln!(out, "level_max_noise={}", v.join(",")).unwrap();
        }
        out
    }
}

/// Runs `c` on `backend`. `inputs` holds one bit vector per input group,
/// LSB first. Levels run one after another; gates within a level run on
/// up to `parallelism` threads.
#[allow(clippy::type_complexity)]
pub fn execute<B: GateBackend>(
    c: &GateCircuit,
    inputs: &[Vec<B::Bit>],
    backend: &B,
    opts: ExecOptions,
) -> Result<(Vec<Vec<B::Bit>>, ExecStats), RuntimeError> {
    if opts.parallelism == 0 {
        return Err(RuntimeError::ZeroParallelism);
    }
    if inputs.len() != c.inputs.len() {
        return Err(RuntimeError::GroupCount { expected: c.inputs.len(), got: inputs.len() });
    }
    for (g, bits) in c.inputs.iter().zip(inputs) {
        if bits.len() != g.wires.len() {
            return Err(RuntimeError::GroupWidth { name: g.name.clone(), expected: g.wires.len(), got: bits.len() });
        }
    }
    let start = Instant::now();
    let schedule = schedule_levels(c)?;
    // A single worker runs on the calling thread.
    let pool = match opts.parallelism {
        1 => None,
        n => Some(
            rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| RuntimeError::Pool(e.to_string()))?,
        ),
    };

    let mut wires: Vec<Option<B::Bit>> = vec![None; c.wire_count()];
    for (g, bits) in c.inputs.iter().zip(inputs) {
        for (w, b) in g.wires.iter().zip(bits) {
            wires[w.0 as usize] = Some(b.clone());
        }
    }
    let mut rng = opts.shuffle_seed.map(ChaCha8Rng::seed_from_u64);
    let mut level_max_noise = Vec::new();
    for level in &schedule.levels {
        let mut order = level.clone();
        if let Some(r) = rng.as_mut() {
            order.shuffle(r);
        }
        let run_gate = |&gi: &usize| {
            let g = &c.gates[gi];
            let ins: Vec<&B::Bit> =
                g.operands().iter().map(|w| wires[w.0 as usize].as_ref().expect("scheduled after operands")).collect();
            backend
                .gate(g.kind, &ins)
                .map(|b| (g.out.0 as usize, b))
                .map_err(|source| RuntimeError::Backend { gate: gi, source })
        };
        let results: Vec<(usize, B::Bit)> = match &pool {
            Some(pool) => pool.install(|| order.par_iter().map(run_gate).collect::<Result<_, _>>())?,
            None => order.iter().map(run_gate).collect::<Result<_, _>>()?,
        };
        let noise = results.iter().filter_map(|(_, b)| backend.noise_of(b)).max();
        if let Some(n) = noise {
            level_max_noise.push(n);
        }
        for (w, b) in results {
            wires[w] = Some(b);
        }
    }
    let outputs = c
        .outputs
        .iter()
        .map(|g| g.wires.iter().map(|w| wires[w.0 as usize].clone().expect("output wire computed")).collect())
        .collect();
    let stats = ExecStats {
        counts: c.counts_by_kind(),
        depth: schedule.depth(),
        parallelism: opts.parallelism,
        wall_time: start.elapsed(),
        level_max_noise,
    };
    Ok((outputs, stats))
}
