// SPDX-License-Identifier: Apache-2.0

use fhec::backend::CleartextBackend;
use fhec::booleanifier::{booleanify, evaluate_words, from_bits, gate_optimize, to_bits};
use fhec::frontend::{compile, interpret_leaves};
use fhec::ir::Evaluator;
use fhec::optimizer::PassPipeline;
use fhec::runtime::{execute, ExecOptions};
use fhec::testing::{input_vectors, random_program};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    /// Every stage computes the reference interpreter's function.
    #[test]
    fn all_stages_agree(seed in any::<u64>()) {
        let src = random_program(seed);
        let c = compile(&src, None).map_err(|d| TestCaseError::fail(format!("{src}\n{d:?}")))?;
        let (opt, report) = PassPipeline::default().run(&c.ir);
        prop_assert!(report.fixpoint);
        let gates = booleanify(&opt).unwrap();
        let cleaned = gate_optimize(&gates);
        let (raw, ev) = (Evaluator::new(&c.ir).unwrap(), Evaluator::new(&opt).unwrap());
        let widths: Vec<u32> = c.ir.inputs.iter().map(|i| i.ty.bits()).collect();
        for (k, v) in input_vectors(&widths, 0, 48, seed).iter().enumerate() {
            let want = interpret_leaves(&c.program, &c.entry, v).unwrap();
            prop_assert_eq!(&raw.run(v).unwrap(), &want, "lowered IR\n{}\n{:?}", src, v);
            prop_assert_eq!(&ev.run(v).unwrap(), &want, "optimized IR\n{}\n{:?}", src, v);
            prop_assert_eq!(&evaluate_words(&gates, v).unwrap(), &want, "gates\n{}\n{:?}", src, v);
            prop_assert_eq!(&evaluate_words(&cleaned, v).unwrap(), &want, "gate cleanup\n{}\n{:?}", src, v);
            if k < 2 {
                let groups: Vec<Vec<bool>> =
                    cleaned.inputs.iter().zip(v).map(|(g, &w)| to_bits(w, g.ty.bits()).collect()).collect();
                let (out, _) = execute(&cleaned, &groups, &CleartextBackend, ExecOptions::default()).unwrap();
                let words: Vec<u64> = out.iter().map(|b| from_bits(b)).collect();
                prop_assert_eq!(&words, &want, "cleartext runtime\n{}", src);
            }
        }
    }
}
