// SPDX-License-Identifier: Apache-2.0

//! Noise-model simulator of a bootstrapped boolean-gate FHE API.
//!
//! Not cryptography. A ciphertext is the plaintext bit XORed with a keyed
//! pseudorandom mask plus an integer noise ledger. Gates never look at a
//! plaintext operand: they build the gate's truth table under the operand
//! and result masks and index it with the masked payloads.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::booleanifier::GateKind;

use super::params::{BootstrapMode, ParamsError, SchemeParams};
use super::{BackendError, GateBackend};

#[derive(Debug)]
struct KeyInner {
    seed: u64,
    id: u64,
    prf: ChaCha8Rng,
    next_nonce: AtomicU64,
    plaintext_touches: AtomicU64,
}

/// Secret key material. Cheap to clone; clones share the nonce counter.
#[derive(Debug, Clone)]
pub struct SecretKey(Arc<KeyInner>);

pub fn keygen(seed: u64) -> SecretKey {
    let prf = ChaCha8Rng::seed_from_u64(seed);
    let mut tag = prf.clone();
    tag.set_stream(u64::MAX);
    SecretKey(Arc::new(KeyInner {
        seed,
        id: tag.next_u64(),
        prf,
        next_nonce: AtomicU64::new(0),
        plaintext_touches: AtomicU64::new(0),
    }))
}

fn params_id(p: &SchemeParams) -> u64 {
    let mut h = DefaultHasher::new();
    p.hash(&mut h);
    h.finish()
}

impl SecretKey {
    pub fn seed(&self) -> u64 {
        self.0.seed
    }

    pub fn id(&self) -> u64 {
        self.0.id
    }

    /// Mask bit for a nonce.
    pub fn mask(&self, nonce: u64) -> bool {
        let mut r = self.0.prf.clone();
        r.set_stream(nonce);
        r.next_u32() & 1 == 1
    }

    fn fresh_nonce(&self) -> u64 {
        self.0.next_nonce.fetch_add(1, Ordering::Relaxed)
    }

    /// Number of encrypt/decrypt calls so far. Gate evaluation never
    /// touches plaintext, so it never moves this counter.
    pub fn plaintext_touches(&self) -> u64 {
        self.0.plaintext_touches.load(Ordering::Relaxed)
    }

    pub fn encrypt_bit(&self, bit: bool, params: &SchemeParams) -> CiphertextBit {
        self.0.plaintext_touches.fetch_add(1, Ordering::Relaxed);
        let nonce = self.fresh_nonce();
        CiphertextBit {
            payload: bit ^ self.mask(nonce),
            nonce,
            noise: params.fresh_noise,
            key_id: self.id(),
            params_id: params_id(params),
        }
    }

    pub fn decrypt_bit(&self, c: &CiphertextBit, params: &SchemeParams) -> Result<bool, BackendError> {
        self.0.plaintext_touches.fetch_add(1, Ordering::Relaxed);
        if c.key_id != self.id() {
            return Err(BackendError::KeyMismatch);
        }
        if c.params_id != params_id(params) {
            return Err(BackendError::ParamsMismatch);
        }
        if c.noise > params.noise_budget {
            return Err(BackendError::NoiseOverflow { noise: c.noise, budget: params.noise_budget });
        }
        Ok(c.payload ^ self.mask(c.nonce))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CiphertextBit {
    payload: bool,
    nonce: u64,
    noise: u64,
    key_id: u64,
    params_id: u64,
}

impl CiphertextBit {
    pub fn masked_payload(&self) -> bool {
        self.payload
    }

    pub fn nonce(&self) -> u64 {
        self.nonce
    }

    pub fn noise(&self) -> u64 {
        self.noise
    }

    /// Same ciphertext with its noise ledger overwritten; for exercising
    /// budget boundaries.
    pub fn with_noise(mut self, noise: u64) -> Self {
        self.noise = noise;
        self
    }
}

/// The simulated FHE backend.
#[derive(Debug, Clone)]
pub struct FheBackend {
    key: SecretKey,
    params: SchemeParams,
    params_id: u64,
}

impl FheBackend {
    pub fn new(key: SecretKey, params: SchemeParams) -> Result<Self, ParamsError> {
        params.validate()?;
        let params_id = params_id(&params);
        Ok(FheBackend { key, params, params_id })
    }

    pub fn key(&self) -> &SecretKey {
        &self.key
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    fn apply(&self, kind: GateKind, ins: &[&CiphertextBit]) -> Result<CiphertextBit, BackendError> {
        for c in ins {
            if c.key_id != self.key.id() {
                return Err(BackendError::KeyMismatch);
            }
            if c.params_id != self.params_id {
                return Err(BackendError::ParamsMismatch);
            }
        }
        let noise = if kind.is_const() {
            0
        } else {
            match self.params.bootstrap {
                BootstrapMode::PerGate => self.params.refresh_noise,
                BootstrapMode::Off => ins.iter().map(|c| c.noise).max().unwrap_or(0) + self.params.gate_noise(kind),
            }
        };
        let nonce = self.key.fresh_nonce();
        let out_mask = self.key.mask(nonce);
        let masks: Vec<bool> = ins.iter().map(|c| self.key.mask(c.nonce)).collect();
        // Row r of the table holds the masked result for masked payloads r.
        let mut table = [false; 8];
        let mut x = [false; 3];
        for (r, slot) in table.iter_mut().enumerate().take(1 << ins.len()) {
            for (i, m) in masks.iter().enumerate() {
                x[i] = (r >> i & 1 == 1) ^ m;
            }
            *slot = kind.apply(&x[..ins.len()]) ^ out_mask;
        }
        let row = ins.iter().enumerate().fold(0, |acc, (i, c)| acc | (usize::from(c.payload) << i));
        Ok(CiphertextBit { payload: table[row], nonce, noise, key_id: self.key.id(), params_id: self.params_id })
    }
}

impl GateBackend for FheBackend {
    type Bit = CiphertextBit;

    fn name(&self) -> &'static str {
        "fhe"
    }
    fn constant(&self, value: bool) -> Result<CiphertextBit, BackendError> {
        self.apply(if value { GateKind::Const1 } else { GateKind::Const0 }, &[])
    }
    fn not(&self, a: &CiphertextBit) -> Result<CiphertextBit, BackendError> {
        self.apply(GateKind::Not, &[a])
    }
    fn and(&self, a: &CiphertextBit, b: &CiphertextBit) -> Result<CiphertextBit, BackendError> {
        self.apply(GateKind::And, &[a, b])
    }
    fn or(&self, a: &CiphertextBit, b: &CiphertextBit) -> Result<CiphertextBit, BackendError> {
        self.apply(GateKind::Or, &[a, b])
    }
    fn xor(&self, a: &CiphertextBit, b: &CiphertextBit) -> Result<CiphertextBit, BackendError> {
        self.apply(GateKind::Xor, &[a, b])
    }
    fn copy(&self, a: &CiphertextBit) -> Result<CiphertextBit, BackendError> {
        self.apply(GateKind::Copy, &[a])
    }
    fn mux(&self, s: &CiphertextBit, t: &CiphertextBit, e: &CiphertextBit) -> Result<CiphertextBit, BackendError> {
        self.apply(GateKind::Mux, &[s, t, e])
    }
    fn noise_of(&self, bit: &CiphertextBit) -> Option<u64> {
        Some(bit.noise)
    }
    fn gate(&self, kind: GateKind, ins: &[&CiphertextBit]) -> Result<CiphertextBit, BackendError> {
        self.apply(kind, ins)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn backend(params: SchemeParams) -> FheBackend {
        FheBackend::new(keygen(params.key_seed), params).unwrap()
    }

    #[test]
    fn keygen_is_deterministic_and_seed_dependent() {
        let (a, b, c) = (keygen(1), keygen(1), keygen(2));
        assert_eq!(a.id(), b.id());
        assert_ne!(a.id(), c.id());
        let differ = (0..1000).filter(|&n| a.mask(n) != c.mask(n)).count();
        assert!((0..1000).all(|n| a.mask(n) == b.mask(n)));
        // Binomial(1000, 1/2): 6 sigma is about 95.
        assert!((405..=595).contains(&differ), "{differ}");
        let z = keygen(0);
        assert_eq!(
            z.decrypt_bit(&z.encrypt_bit(true, &SchemeParams::tfhe_like()), &SchemeParams::tfhe_like()),
            Ok(true)
        );
    }

    #[test]
    fn round_trip_and_budget_boundary() {
        let p = SchemeParams::tfhe_like();
        let k = keygen(3);
        for bit in [false, true] {
            let c = k.encrypt_bit(bit, &p);
            assert_eq!(c.noise(), p.fresh_noise);
            assert_eq!(k.decrypt_bit(&c, &p), Ok(bit));
            assert_eq!(k.decrypt_bit(&c.clone().with_noise(p.noise_budget), &p), Ok(bit));
            assert_eq!(
                k.decrypt_bit(&c.with_noise(p.noise_budget + 1), &p),
                Err(BackendError::NoiseOverflow { noise: 101, budget: 100 })
            );
        }
    }

    #[test]
    fn truth_tables_in_both_modes() {
        for params in [SchemeParams::tfhe_like(), SchemeParams::leveled_small()] {
            let b = backend(params.clone());
            let k = b.key().clone();
            for kind in GateKind::ALL {
                let n = kind.arity();
                for v in 0..1u32 << n {
                    let bits: Vec<bool> = (0..n).map(|i| v >> i & 1 == 1).collect();
                    let cts: Vec<CiphertextBit> = bits.iter().map(|&x| k.encrypt_bit(x, &params)).collect();
                    let refs: Vec<&CiphertextBit> = cts.iter().collect();
                    let out = b.gate(kind, &refs).unwrap();
                    assert_eq!(k.decrypt_bit(&out, &params), Ok(kind.apply(&bits)), "{kind} {bits:?}");
                }
            }
        }
    }

    #[test]
    fn noise_rules() {
        let p = SchemeParams::tfhe_like();
        let b = backend(p.clone());
        let k = b.key().clone();
        let one = k.encrypt_bit(true, &p).with_noise(95);
        let r = b.and(&one, &k.encrypt_bit(true, &p)).unwrap();
        assert_eq!(r.noise(), p.refresh_noise);
        assert_eq!(k.decrypt_bit(&r, &p), Ok(true));
        assert_eq!(b.constant(true).unwrap().noise(), 0);

        let mut p = SchemeParams::leveled_small();
        p.gate_noise.insert(GateKind::And, 10);
        let b = backend(p.clone());
        let k = b.key().clone();
        let x = k.encrypt_bit(true, &p).with_noise(20);
        let y = k.encrypt_bit(false, &p).with_noise(30);
        assert_eq!(b.and(&x, &y).unwrap().noise(), 40);
        assert_eq!(b.not(&x).unwrap().noise(), 20);
    }

    #[test]
    fn mux_selects() {
        let p = SchemeParams::tfhe_like();
        let b = backend(p.clone());
        let k = b.key().clone();
        for s in [false, true] {
            for t in [false, true] {
                for e in [false, true] {
                    let c = [s, t, e].map(|x| k.encrypt_bit(x, &p));
                    let out = b.mux(&c[0], &c[1], &c[2]).unwrap();
                    assert_eq!(k.decrypt_bit(&out, &p), Ok(if s { t } else { e }));
                }
            }
        }
    }

    #[test]
    fn mismatched_operands_are_rejected() {
        let p = SchemeParams::tfhe_like();
        let b = backend(p.clone());
        let other = keygen(99).encrypt_bit(true, &p);
        let mine = b.key().encrypt_bit(true, &p);
        assert_eq!(b.and(&mine, &other), Err(BackendError::KeyMismatch));
        let q = SchemeParams::leveled_small();
        let foreign = b.key().encrypt_bit(true, &q);
        assert_eq!(b.xor(&mine, &foreign), Err(BackendError::ParamsMismatch));
        assert_eq!(b.key().decrypt_bit(&mine, &q), Err(BackendError::ParamsMismatch));
    }

    #[test]
    fn gates_never_touch_plaintext() {
        let p = SchemeParams::tfhe_like();
        let b = backend(p.clone());
        let k = b.key().clone();
        let mut acc = k.encrypt_bit(true, &p);
        let x = k.encrypt_bit(false, &p);
        let before = k.plaintext_touches();
        for _ in 0..100 {
            acc = b.xor(&acc, &x).unwrap();
            acc = b.mux(&x, &acc, &acc).unwrap();
        }
        assert_eq!(k.plaintext_touches(), before);
        assert_eq!(k.decrypt_bit(&acc, &p), Ok(true));
    }

    #[test]
    fn depth_law_off_mode() {
        let p = SchemeParams::leveled_small();
        let b = backend(p.clone());
        let k = b.key().clone();
        let depth = p.max_depth(60).unwrap();
        let mut c = k.encrypt_bit(true, &p);
        let one = k.encrypt_bit(true, &p);
        for d in 1..=depth + 1 {
            c = b.and(&c, &one).unwrap();
            assert_eq!(c.noise(), p.fresh_noise + d * 60);
            let r = k.decrypt_bit(&c, &p);
            if d <= depth {
                assert_eq!(r, Ok(true), "depth {d}");
            } else {
                assert!(matches!(r, Err(BackendError::NoiseOverflow { .. })));
            }
        }
    }

    #[test]
    fn unbounded_depth_per_gate() {
        let p = SchemeParams::tfhe_like();
        let b = backend(p.clone());
        let k = b.key().clone();
        let one = k.encrypt_bit(true, &p);
        let mut c = k.encrypt_bit(false, &p);
        for _ in 0..10_000 {
            c = b.xor(&c, &one).unwrap();
            assert_eq!(c.noise(), p.refresh_noise);
        }
        assert_eq!(k.decrypt_bit(&c, &p), Ok(false));
    }

    #[test]
    fn nonces_unique_across_threads() {
        let k = keygen(5);
        let p = SchemeParams::tfhe_like();
        let nonces: Vec<u64> = std::thread::scope(|s| {
            let hs: Vec<_> = (0..4)
                .map(|_| s.spawn(|| (0..500).map(|_| k.encrypt_bit(true, &p).nonce()).collect::<Vec<_>>()))
                .collect();
            hs.into_iter().flat_map(|h| h.join().unwrap()).collect()
        });
        let set: std::collections::HashSet<_> = nonces.iter().collect();
        assert_eq!(set.len(), 2000);
    }
}
