// SPDX-License-Identifier: Apache-2.0

//! Gate backends. Everything above this module sees gates only through
//! [`GateBackend`], so backends are interchangeable.

mod fhe;
mod params;

use thiserror::Error;

use crate::booleanifier::GateKind;

pub use fhe::{keygen, CiphertextBit, FheBackend, SecretKey};
pub use params::{BootstrapMode, ParamsError, SchemeParams, PRESETS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("noise overflow: noise {noise} exceeds budget {budget}")]
    NoiseOverflow { noise: u64, budget: u64 },
    #[error("operands were encrypted under different keys")]
    KeyMismatch,
    #[error("operands were produced under different parameters")]
    ParamsMismatch,
}

pub trait GateBackend: Sync {
    type Bit: Clone + Send + Sync;

    fn name(&self) -> &'static str;
    fn constant(&self, value: bool) -> Result<Self::Bit, BackendError>;
    fn not(&self, a: &Self::Bit) -> Result<Self::Bit, BackendError>;
    fn and(&self, a: &Self::Bit, b: &Self::Bit) -> Result<Self::Bit, BackendError>;
    fn or(&self, a: &Self::Bit, b: &Self::Bit) -> Result<Self::Bit, BackendError>;
    fn xor(&self, a: &Self::Bit, b: &Self::Bit) -> Result<Self::Bit, BackendError>;
    fn copy(&self, a: &Self::Bit) -> Result<Self::Bit, BackendError>;

    /// `s ? t : e`. Backends without a native MUX get `(s & t) | (!s & e)`.
    fn mux(&self, s: &Self::Bit, t: &Self::Bit, e: &Self::Bit) -> Result<Self::Bit, BackendError> {
        let st = self.and(s, t)?;
        let ns = self.not(s)?;
        let ne = self.and(&ns, e)?;
        self.or(&st, &ne)
    }

    /// Current noise of a bit, for backends that track it.
    fn noise_of(&self, _bit: &Self::Bit) -> Option<u64> {
        None
    }

    fn gate(&self, kind: GateKind, ins: &[&Self::Bit]) -> Result<Self::Bit, BackendError> {
        match kind {
            GateKind::Const0 => self.constant(false),
            GateKind::Const1 => self.constant(true),
            GateKind::Not => self.not(ins[0]),
            GateKind::Copy => self.copy(ins[0]),
            GateKind::And => self.and(ins[0], ins[1]),
            GateKind::Or => self.or(ins[0], ins[1]),
            GateKind::Xor => self.xor(ins[0], ins[1]),
            GateKind::Mux => self.mux(ins[0], ins[1], ins[2]),
        }
    }
}

/// Plaintext bits; for debugging circuits without encryption.
#[derive(Debug, Clone, Copy, Default)]
pub struct CleartextBackend;

impl GateBackend for CleartextBackend {
    type Bit = bool;

    fn name(&self) -> &'static str {
        "cleartext"
    }
    fn constant(&self, value: bool) -> Result<bool, BackendError> {
        Ok(value)
    }
    fn not(&self, a: &bool) -> Result<bool, BackendError> {
        Ok(!a)
    }
    fn and(&self, a: &bool, b: &bool) -> Result<bool, BackendError> {
        Ok(*a && *b)
    }
    fn or(&self, a: &bool, b: &bool) -> Result<bool, BackendError> {
        Ok(*a || *b)
    }
    fn xor(&self, a: &bool, b: &bool) -> Result<bool, BackendError> {
        Ok(a ^ b)
    }
    fn copy(&self, a: &bool) -> Result<bool, BackendError> {
        Ok(*a)
    }
    fn mux(&self, s: &bool, t: &bool, e: &bool) -> Result<bool, BackendError> {
        Ok(if *s { *t } else { *e })
    }
}
