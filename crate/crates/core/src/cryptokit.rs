//! A seeded pseudorandom generator and a small public-key encryption scheme.
//!
//! Neither is production cryptography. The PRG is the ChaCha20 keystream; the
//! PKE is Diffie-Hellman over a prime-order multiplicative group with the PRG
//! as a stream cipher for the payload, which gives CPA-style semantics at toy
//! key sizes.

use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::gf::Field;

pub const SEED_LEN: usize = 32;

/// Deterministic, incrementally expandable stream of bytes and field symbols.
#[derive(Clone, Debug)]
pub struct PrgStream {
    rng: ChaCha20Rng,
}

impl PrgStream {
    pub fn new(seed: [u8; SEED_LEN]) -> Self {
        Self { rng: ChaCha20Rng::from_seed(seed) }
    }

    pub fn next_bytes(&mut self, count: usize) -> Vec<u8> {
        let mut out = vec![0u8; count];
        self.rng.fill_bytes(&mut out);
        out
    }

    /// `count` uniform symbols of `field`, by rejection sampling 32-bit words.
    pub fn next_symbols(&mut self, field: Field, count: usize) -> Vec<u32> {
        let q = field.q() as u64;
        let limit = (1u64 << 32) / q * q;
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let w = self.rng.next_u32() as u64;
            if w < limit {
                out.push((w % q) as u32);
            }
        }
        out
    }

    /// Position in the keystream, in 32-bit words.
    pub fn word_position(&self) -> u128 {
        self.rng.get_word_pos()
    }
}

/// Shorthand used by the session layer.
pub fn prg_next(stream: &mut PrgStream, field: Field, count: usize) -> Vec<u32> {
    stream.next_symbols(field, count)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("ciphertext truncated: {0} bytes, at least 8 required")]
    Truncated(usize),
    #[error("malformed ciphertext header")]
    Malformed,
    #[error("unsupported security parameter k = {0} (supported: 8..=61)")]
    UnsupportedK(u32),
    #[error("key file: {0}")]
    KeyFile(String),
}

/// Multiplicative group `Z_p^*` with a primitive root.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Group {
    p: u64,
    g: u64,
}

const MERSENNE_31: Group = Group { p: (1 << 31) - 1, g: 7 };
const MERSENNE_61: Group = Group { p: (1 << 61) - 1, g: 37 };

impl Group {
    fn for_k(k: u32) -> Result<Self, CryptoError> {
        match k {
            8..=31 => Ok(MERSENNE_31),
            32..=61 => Ok(MERSENNE_61),
            _ => Err(CryptoError::UnsupportedK(k)),
        }
    }

    fn mul(self, a: u64, b: u64) -> u64 {
        (a as u128 * b as u128 % self.p as u128) as u64
    }

    fn pow(self, mut base: u64, mut e: u64) -> u64 {
        let mut acc = 1;
        base %= self.p;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }
}

const SCHEME_NAME: &str = "rnc-dh-stream";

#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey {
    k: u32,
    x: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicKey {
    k: u32,
    y: u64,
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecretKey(k={}, ..)", self.k)
    }
}

pub fn pke_keygen(k: u32, rng: &mut impl Rng) -> Result<(SecretKey, PublicKey), CryptoError> {
    let group = Group::for_k(k)?;
    let x = rng.gen_range(2..group.p - 1);
    Ok((SecretKey { k, x }, PublicKey { k, y: group.pow(group.g, x) }))
}

fn keystream_seed(shared: u64, c1: u64) -> [u8; SEED_LEN] {
    let mut seed = [0u8; SEED_LEN];
    seed[..8].copy_from_slice(&shared.to_be_bytes());
    seed[8..16].copy_from_slice(&c1.to_be_bytes());
    seed[16..16 + SCHEME_NAME.len()].copy_from_slice(SCHEME_NAME.as_bytes());
    seed
}

fn xor_keystream(seed: [u8; SEED_LEN], data: &[u8]) -> Vec<u8> {
    let pad = PrgStream::new(seed).next_bytes(data.len());
    data.iter().zip(pad).map(|(a, b)| a ^ b).collect()
}

/// Ciphertext: 8-byte big-endian ephemeral key, then the masked plaintext.
pub fn pke_encrypt(pk: &PublicKey, plaintext: &[u8], rng: &mut impl Rng) -> Vec<u8> {
    let group = Group::for_k(pk.k).expect("public key built with a supported k");
    let r = rng.gen_range(2..group.p - 1);
    let c1 = group.pow(group.g, r);
    let shared = group.pow(pk.y, r);
    let mut out = c1.to_be_bytes().to_vec();
    out.extend(xor_keystream(keystream_seed(shared, c1), plaintext));
    out
}

pub fn pke_decrypt(sk: &SecretKey, ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError> {
    let group = Group::for_k(sk.k)?;
    if ciphertext.len() < 8 {
        return Err(CryptoError::Truncated(ciphertext.len()));
    }
    let c1 = u64::from_be_bytes(ciphertext[..8].try_into().expect("8 bytes"));
    if c1 == 0 || c1 >= group.p {
        return Err(CryptoError::Malformed);
    }
    let shared = group.pow(c1, sk.x);
    Ok(xor_keystream(keystream_seed(shared, c1), &ciphertext[8..]))
}

/// Ciphertext size for a plaintext of `len` bytes.
pub fn ciphertext_len(len: usize) -> usize {
    len + 8
}

impl SecretKey {
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn public_key(&self) -> PublicKey {
        let group = Group::for_k(self.k).expect("valid k");
        PublicKey { k: self.k, y: group.pow(group.g, self.x) }
    }

    pub fn to_file_string(&self) -> String {
        format!("{SCHEME_NAME} secret k={}\n{:016x}\n", self.k, self.x)
    }

    pub fn from_file_str(s: &str) -> Result<Self, CryptoError> {
        let (k, x) = parse_key_file(s, "secret")?;
        Ok(Self { k, x })
    }
}

impl PublicKey {
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn to_bytes(&self) -> [u8; 8] {
        self.y.to_be_bytes()
    }

    pub fn to_file_string(&self) -> String {
        format!("{SCHEME_NAME} public k={}\n{:016x}\n", self.k, self.y)
    }

    pub fn from_file_str(s: &str) -> Result<Self, CryptoError> {
        let (k, y) = parse_key_file(s, "public")?;
        Ok(Self { k, y })
    }
}

fn parse_key_file(s: &str, kind: &str) -> Result<(u32, u64), CryptoError> {
    let bad = |m: &str| CryptoError::KeyFile(m.to_string());
    let mut lines = s.lines();
    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    let mut words = header.split_whitespace();
    if words.next() != Some(SCHEME_NAME) {
        return Err(bad("unknown scheme in header"));
    }
    if words.next() != Some(kind) {
        return Err(bad(&format!("expected a {kind} key")));
    }
    let k = words
        .next()
        .and_then(|w| w.strip_prefix("k="))
        .and_then(|w| w.parse().ok())
        .ok_or_else(|| bad("missing k= in header"))?;
    let group = Group::for_k(k)?;
    let body = lines.next().ok_or_else(|| bad("missing key body"))?.trim();
    let v = u64::from_str_radix(body, 16).map_err(|_| bad("key body is not hex"))?;
    if v == 0 || v >= group.p {
        return Err(bad("key value out of range"));
    }
    Ok((k, v))
}
