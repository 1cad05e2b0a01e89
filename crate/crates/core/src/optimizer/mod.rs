// SPDX-License-Identifier: Apache-2.0

//! IR-to-IR passes and the pipeline that iterates them to a fixpoint.

mod fold;
mod narrow;

use std::collections::HashSet;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::ir::IrFunction;

pub use fold::constant_fold;
pub use narrow::width_narrowing;

/// Drops nodes that no output depends on and renumbers ids densely.
/// Inputs are kept even when unused.
pub fn dead_node_elimination(f: &IrFunction) -> IrFunction {
    let mut live: HashSet<_> = f.outputs.iter().map(|o| o.source).collect();
    for n in f.nodes.iter().rev() {
        if live.contains(&n.id) {
            live.extend(n.operands.iter().copied());
        }
    }
    IrFunction {
        name: f.name.clone(),
        inputs: f.inputs.clone(),
        nodes: f.nodes.iter().filter(|n| live.contains(&n.id)).cloned().collect(),
        outputs: f.outputs.clone(),
    }
    .renumbered()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pass {
    Fold,
    Dce,
    Narrow,
}

impl Pass {
    pub fn name(self) -> &'static str {
        match self {
            Pass::Fold => "fold",
            Pass::Dce => "dce",
            Pass::Narrow => "narrow",
        }
    }

    pub fn apply(self, f: &IrFunction) -> IrFunction {
        let out = match self {
            Pass::Fold => constant_fold(f),
            Pass::Dce => dead_node_elimination(f),
            Pass::Narrow => width_narrowing(f),
        };
        out.renumbered()
    }
}

impl fmt::Display for Pass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("unknown pass `{0}` (expected fold, dce, narrow or gate)")]
    UnknownPass(String),
    #[error("iteration cap must be at least 1")]
    ZeroCap,
}

/// Ordered list of passes. `gate` in a pass list is not an IR pass: it
/// requests gate-level cleanup after booleanification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassPipeline {
    pub passes: Vec<Pass>,
    /// Per-pass enable flags, parallel to `passes`.
    pub enabled: Vec<bool>,
    pub max_iterations: usize,
    pub gate_level: bool,
}

pub const DEFAULT_MAX_ITERATIONS: usize = 10;

impl Default for PassPipeline {
    fn default() -> Self {
        PassPipeline {
            passes: vec![Pass::Fold, Pass::Dce, Pass::Narrow, Pass::Dce],
            enabled: vec![true; 4],
            max_iterations: DEFAULT_MAX_ITERATIONS,
            gate_level: false,
        }
    }
}

impl PassPipeline {
    pub fn empty() -> Self {
        PassPipeline {
            passes: Vec::new(),
            enabled: Vec::new(),
            max_iterations: DEFAULT_MAX_ITERATIONS,
            gate_level: false,
        }
    }

    /// Parses a comma-separated list such as `fold,dce,narrow,dce,gate`.
    /// The empty string gives an empty pipeline.
    pub fn parse(list: &str) -> Result<Self, PipelineError> {
        let mut p = Self::empty();
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let pass = match name {
                "fold" => Pass::Fold,
                "dce" => Pass::Dce,
                "narrow" => Pass::Narrow,
                "gate" => {
                    p.gate_level = true;
                    continue;
                }
                other => return Err(PipelineError::UnknownPass(other.to_string())),
            };
            p.passes.push(pass);
            p.enabled.push(true);
        }
        Ok(p)
    }

    pub fn with_max_iterations(mut self, cap: usize) -> Result<Self, PipelineError> {
        if cap == 0 {
            return Err(PipelineError::ZeroCap);
        }
        self.max_iterations = cap;
        Ok(self)
    }

    /// Enables or disables every occurrence of `pass`.
    pub fn set_enabled(&mut self, pass: Pass, on: bool) {
        for (p, e) in self.passes.iter().zip(self.enabled.iter_mut()) {
            if *p == pass {
                *e = on;
            }
        }
    }

    fn active(&self) -> impl Iterator<Item = Pass> + '_ {
        self.passes.iter().zip(&self.enabled).filter(|(_, e)| **e).map(|(p, _)| *p)
    }

    /// Runs the passes in order, repeating the sequence until one round
    /// changes nothing or the iteration cap is reached.
    pub fn run(&self, f: &IrFunction) -> (IrFunction, PassReport) {
        let mut report = PassReport { nodes_before: f.node_count(), ops_before: f.op_count(), ..PassReport::default() };
        let mut cur = f.renumbered();
        if self.active().next().is_none() {
            report.fixpoint = true;
            report.nodes_after = cur.node_count();
            report.ops_after = cur.op_count();
            return (cur, report);
        }
        for iteration in 1..=self.max_iterations {
            report.iterations = iteration;
            let start = cur.clone();
            for pass in self.active() {
                let next = pass.apply(&cur);
                debug_assert!(crate::ir::validate(&next).is_ok(), "{pass} broke the IR");
                report.steps.push(PassStep {
                    iteration,
                    pass,
                    nodes_before: cur.node_count(),
                    nodes_after: next.node_count(),
                    changed: next != cur,
                });
                cur = next;
            }
            if cur == start {
                report.fixpoint = true;
                break;
            }
        }
        report.cap_reached = !report.fixpoint;
        report.nodes_after = cur.node_count();
        report.ops_after = cur.op_count();
        (cur, report)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassStep {
    pub iteration: usize,
    pub pass: Pass,
    pub nodes_before: usize,
    pub nodes_after: usize,
    pub changed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PassReport {
    pub steps: Vec<PassStep>,
    pub iterations: usize,
    pub fixpoint: bool,
    /// The cap stopped iteration before a fixpoint.
    pub cap_reached: bool,
    pub nodes_before: usize,
    pub nodes_after: usize,
    pub ops_before: usize,
    pub ops_after: usize,
}

impl PassReport {
    pub fn to_table(&self) -> String {
        let mut out = String::from("iter  pass    before  after  changed\n");
        for s in &self.steps {
            writeln!(
                out,
                "{:<4}  {:<6}  {:>6}  {:>5}  {}",
                s.iteration,
                s.pass,
                s.nodes_before,
                s.nodes_after,
                if s.changed { "yes" } else { "no" }
            )
            .unwrap();
        }
        out
    }

    pub fn to_kv(&self) -> String {
        format!(
            "iterations={}\nfixpoint={}\ncap_reached={}\nnodes_before={}\nnodes_after={}\nops_before={}\nops_after={}\n",
            self.iterations,
            self.fixpoint,
            self.cap_reached,
            self.nodes_before,
            self.nodes_after,
            self.ops_before,
            self.ops_after
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{parse_ir, validate};
    use crate::testing::{first_mismatch, input_vectors, random_ir};
    use proptest::prelude::*;

    #[test]
    fn parse_pass_lists() {
        let p = PassPipeline::parse("fold, dce,gate").unwrap();
        assert_eq!(p.passes, vec![Pass::Fold, Pass::Dce]);
        assert!(p.gate_level);
        assert!(PassPipeline::parse("").unwrap().passes.is_empty());
        assert_eq!(PassPipeline::parse("fold,cse").unwrap_err(), PipelineError::UnknownPass("cse".into()));
        assert!(PassPipeline::default().with_max_iterations(0).is_err());
        let mut d = PassPipeline::default();
        d.set_enabled(Pass::Dce, false);
        assert_eq!(d.active().collect::<Vec<_>>(), vec![Pass::Fold, Pass::Narrow]);
    }

    #[test]
    fn dce_keeps_inputs_and_drops_unused() {
        let f = parse_ir("fn f\nin a %0:u8\nin b %1:u8\n%2:8 = add(%0, %1)\n%3:8 = not(%0)\nout r %3:u8\n").unwrap();
        let g = dead_node_elimination(&f);
        assert_eq!(g.inputs.len(), 2);
        assert_eq!(g.nodes.len(), 1);
        assert_eq!(g.nodes[0].id.0, 2);
    }

    #[test]
    fn dce_removes_dangling_chain() {
        let f = parse_ir(
            "fn f\nin a %0:u8\n%1:8 = not(%0)\n%2:8 = neg(%1)\n%3:8 = mul(%0, %0)\n%4:8 = add(%3, %3)\nout r %2:u8\n",
        )
        .unwrap();
        let g = dead_node_elimination(&f);
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(dead_node_elimination(&g), g);
    }

    #[test]
    fn sum_is_unchanged() {
        let f = parse_ir("fn sum\nin a %0:u8\nin b %1:u8\n%2:8 = add(%0, %1)\nout ret %2:u8\n").unwrap();
        let (g, r) = PassPipeline::default().run(&f);
        assert_eq!(g, f);
        assert!(r.steps.iter().all(|s| s.nodes_before == s.nodes_after && !s.changed));
    }

    #[test]
    fn report_reaches_fixpoint() {
        let f = parse_ir("fn f\nin a %0:u8\n%1:8 = literal(0)\n%2:8 = add(%0, %1)\nout r %2:u8\n").unwrap();
        let (g, r) = PassPipeline::default().run(&f);
        assert!(r.fixpoint && !r.cap_reached);
        assert_eq!(g.nodes.len(), 0);
        assert!(r.to_table().starts_with("iter  pass"));
        assert!(r.to_kv().contains("fixpoint=true"));
    }

    #[test]
    fn cap_is_reported() {
        let f = parse_ir("fn f\nin a %0:u8\n%1:8 = literal(0)\n%2:8 = add(%0, %1)\nout r %2:u8\n").unwrap();
        let p = PassPipeline::parse("fold,dce").unwrap().with_max_iterations(1).unwrap();
        let (_, r) = p.run(&f);
        assert!(r.cap_reached && !r.fixpoint);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn pipeline_is_sound_monotone_and_idempotent(seed in any::<u64>()) {
            let widths = [4, 4, 3];
            let f = random_ir(seed, &widths, 30, 16);
            let (g, report) = PassPipeline::default().run(&f);
            prop_assert!(validate(&g).is_ok());
            prop_assert!(report.fixpoint);
            let vectors = input_vectors(&widths, 11, 0, 0);
            prop_assert_eq!(first_mismatch(&f, &g, &vectors), None);
            let (h, _) = PassPipeline::default().run(&g);
            prop_assert_eq!(h, g.clone());
            prop_assert!(constant_fold(&f).op_count() <= f.op_count());
            prop_assert!(dead_node_elimination(&f).node_count() <= f.node_count());
            for pass in [Pass::Fold, Pass::Dce, Pass::Narrow] {
                let once = pass.apply(&f);
                prop_assert_eq!(first_mismatch(&f, &once, &vectors), None, "{}", pass);
            }
        }
    }
}
