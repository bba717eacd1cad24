//! The three composite schemes and their multicast extensions.
//!
//! * [`rs`]: a uniformly random secret `(R, H)` known to Alice and Bob.
//! * [`co`]: no shared secret; the adversary is causal, so Alice can send
//!   the secret after the message through the omniscient channel.
//! * [`pk`]: the secret travels encrypted under Bob's public key.
//! * [`session`]: many executions of [`rs`] from one short PRG seed.

pub mod co;
pub mod pk;
pub mod rs;
pub mod session;

use std::fmt;

use thiserror::Error;

use crate::blocks::{BlockError, DecodeFailure};
use crate::gf::Field;
use crate::linalg::{FieldMatrix, LinalgError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Block(#[from] BlockError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Which decoding stage gave up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Omn,
    Decrypt,
    Sc,
    Authenticate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Omn => "omn",
            Self::Decrypt => "decrypt",
            Self::Sc => "sc",
            Self::Authenticate => "authenticate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("{stage} stage: {failure}")]
pub struct StagedFailure {
    pub stage: Stage,
    pub failure: DecodeFailure,
}

impl StagedFailure {
    pub fn at(stage: Stage) -> impl Fn(DecodeFailure) -> Self {
        move |failure| Self { stage, failure }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Omn,
    Sc,
    Rs,
    Co,
    Pk,
    Session,
}

impl SchemeKind {
    pub const ALL: [Self; 6] = [Self::Omn, Self::Sc, Self::Rs, Self::Co, Self::Pk, Self::Session];

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Omn => "omn",
            Self::Sc => "sc",
            Self::Rs => "rs",
            Self::Co => "co",
            Self::Pk => "pk",
            Self::Session => "session",
        }
    }

    /// Asymptotic rate the scheme promises against `z` corrupted links.
    pub fn rate_contract(self, capacity: usize, z: usize) -> usize {
        match self {
            Self::Omn => capacity.saturating_sub(2 * z),
            _ => capacity.saturating_sub(z),
        }
    }

    /// Smallest capacity the scheme accepts for a given `z`.
    pub fn min_capacity(self, z: usize) -> usize {
        match self {
            Self::Omn | Self::Co | Self::Pk => 2 * z + 1,
            Self::Sc | Self::Rs | Self::Session => z + 1,
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Packets of the omniscient sub-block when `X` has `b` rows: at most `C - z`.
pub(crate) fn omn_packets(capacity: usize, z: usize, b: usize) -> Result<usize, SchemeError> {
    if capacity <= 2 * z {
        return Err(SchemeError::Config(format!("needs C > 2z (C = {capacity}, z = {z})")));
    }
    if b == 0 || b > capacity {
        return Err(SchemeError::Config(format!("b = {b} must lie in 1..={capacity}")));
    }
    let packets = b.min(capacity - z);
    if packets <= z {
        return Err(SchemeError::Config(format!("b = {b} leaves no room for z = {z} errors")));
    }
    Ok(packets)
}

/// `m` with zero rows appended up to `rows`.
pub fn pad_rows(m: FieldMatrix, rows: usize) -> FieldMatrix {
    if m.rows() >= rows {
        return m;
    }
    let zeros = FieldMatrix::zeros(m.field(), rows - m.rows(), m.cols());
    FieldMatrix::vstack(&[&m, &zeros]).expect("same columns")
}

/// Top `rows` rows of the columns `range` as seen through an adversary view.
pub(crate) fn view_block(
    view: &crate::adversary::AdversaryView<'_>,
    range: std::ops::Range<usize>,
    rows: usize,
) -> Option<FieldMatrix> {
    let cols = range.map(|j| view.column(j).ok()).collect::<Option<Vec<_>>>()?;
    Some(FieldMatrix::from_fn(view.field(), rows, cols.len(), |r, c| cols[c][r] as u64))
}

/// Base-`q` digits needed per byte.
pub fn digits_per_byte(field: Field) -> usize {
    let q = field.q() as u64;
    let mut d = 1;
    let mut span = q;
    while span < 256 {
        span *= q;
        d += 1;
    }
    d
}

/// Each byte becomes [`digits_per_byte`] big-endian base-`q` digits.
pub fn bytes_to_symbols(field: Field, bytes: &[u8]) -> Vec<u32> {
    let d = digits_per_byte(field);
    let q = field.q();
    let mut out = Vec::with_capacity(bytes.len() * d);
    for &byte in bytes {
        let mut digits = vec![0u32; d];
        let mut v = byte as u32;
        for slot in digits.iter_mut().rev() {
            *slot = v % q;
            v /= q;
        }
        out.extend(digits);
    }
    out
}

/// Inverse of [`bytes_to_symbols`]; `None` if the digits do not encode bytes.
pub fn symbols_to_bytes(field: Field, symbols: &[u32]) -> Option<Vec<u8>> {
    let d = digits_per_byte(field);
    if !symbols.len().is_multiple_of(d) {
        return None;
    }
    symbols
        .chunks(d)
        .map(|chunk| {
            let v = chunk.iter().try_fold(0u64, |acc, &s| (s < field.q()).then(|| acc * field.q() as u64 + s as u64))?;
            u8::try_from(v).ok()
        })
        .collect()
}

/// Bytes per field symbol in fixed-width big-endian form.
pub fn bytes_per_symbol(field: Field) -> usize {
    let bits = 32 - (field.q() - 1).leading_zeros() as usize;
    bits.div_ceil(8).max(1)
}

pub fn symbols_to_be_bytes(field: Field, symbols: &[u32]) -> Vec<u8> {
    let w = bytes_per_symbol(field);
    symbols.iter().flat_map(|s| s.to_be_bytes()[4 - w..].to_vec()).collect()
}

pub fn be_bytes_to_symbols(field: Field, bytes: &[u8]) -> Option<Vec<u32>> {
    let w = bytes_per_symbol(field);
    if !bytes.len().is_multiple_of(w) {
        return None;
    }
    bytes
        .chunks(w)
        .map(|chunk| {
            let v = chunk.iter().fold(0u32, |acc, &b| (acc << 8) | b as u32);
            (v < field.q()).then_some(v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn digit_widths() {
        let cases = [(2, 8), (3, 6), (5, 4), (7, 3), (251, 2), (257, 1), (65_537, 1)];
        for (q, d) in cases {
            assert_eq!(digits_per_byte(Field::new(q).unwrap()), d, "q={q}");
        }
        assert_eq!(bytes_per_symbol(Field::new(251).unwrap()), 1);
        assert_eq!(bytes_per_symbol(Field::new(257).unwrap()), 2);
        assert_eq!(bytes_per_symbol(Field::new(2).unwrap()), 1);
        assert_eq!(bytes_per_symbol(Field::new(2_147_483_629).unwrap()), 4);
    }

    #[test]
    fn invalid_digits_are_rejected() {
        let f = Field::new(251).unwrap();
        // 250 * 251 + 250 > 255
        assert_eq!(symbols_to_bytes(f, &[250, 250]), None);
        assert_eq!(symbols_to_bytes(f, &[1]), None);
        assert_eq!(be_bytes_to_symbols(f, &[251]), None);
    }

    proptest! {
        #[test]
        fn byte_digit_round_trip(bytes in proptest::collection::vec(any::<u8>(), 0..64), qi in 0usize..4) {
            let f = Field::new([2, 5, 251, 65_537][qi]).unwrap();
            let s = bytes_to_symbols(f, &bytes);
            prop_assert!(s.iter().all(|&v| v < f.q()));
            prop_assert_eq!(symbols_to_bytes(f, &s), Some(bytes));
        }

        #[test]
        fn fixed_width_round_trip(raw in proptest::collection::vec(any::<u32>(), 0..32), qi in 0usize..3) {
            let f = Field::new([5, 251, 65_537][qi]).unwrap();
            let s: Vec<u32> = raw.iter().map(|v| v % f.q()).collect();
            prop_assert_eq!(be_bytes_to_symbols(f, &symbols_to_be_bytes(f, &s)), Some(s));
        }
    }
}
