//! Public-key scheme: `X = [X_M X_S]`, with `X_S` carrying `Y = Enc(pk, S)`
//! through the omniscient channel.
//!
//! Multicast carries one `(pk_i, Y_i)` pair per receiver in the same block;
//! each receiver picks the pair matching its own public key.

use std::ops::Range;

use rand::Rng;

use super::co::cube_root_width;
use super::{
    be_bytes_to_symbols, omn_packets, pad_rows, view_block, bytes_per_symbol, bytes_to_symbols, digits_per_byte, symbols_to_be_bytes,
    symbols_to_bytes, SchemeError, Stage, StagedFailure,
};
use crate::adversary::{AdversaryView, ParityLeak};
use crate::blocks::{sc_compose_secret, sc_decode, sc_encode, DecodeFailure, OmnCode, SecretPackage};
use crate::cryptokit::{ciphertext_len, pke_decrypt, pke_encrypt, PublicKey, SecretKey};
use crate::gf::Field;
use crate::linalg::FieldMatrix;

const PK_BYTES: usize = 8;

#[derive(Clone, Debug)]
pub struct PkLayout {
    pub n: usize,
    pub b: usize,
    pub capacity: usize,
    pub z: usize,
    pub receivers: usize,
    pub n_m: usize,
    pub n_s: usize,
    /// Bytes of one `(pk, Y)` record.
    pub record_bytes: usize,
    field: Field,
    code: OmnCode,
}

impl PkLayout {
    /// `X` has `b` rows; the ciphertext block uses the top `min(b, C - z)` of them.
    pub fn new(
        field: Field,
        n: usize,
        capacity: usize,
        z: usize,
        receivers: usize,
        b: usize,
    ) -> Result<Self, SchemeError> {
        let packets = omn_packets(capacity, z, b)?;
        if receivers == 0 {
            return Err(SchemeError::Config("at least one receiver is required".into()));
        }
        let secret_bytes = (capacity + b * capacity) * bytes_per_symbol(field);
        let record_bytes = PK_BYTES + ciphertext_len(secret_bytes);
        let payload = receivers * record_bytes * digits_per_byte(field);
        let n_s = cube_root_width(n, capacity).max(OmnCode::min_width_packets(packets, z, payload)?);
        let n_m = n.checked_sub(n_s).filter(|&w| w > b).ok_or_else(|| {
            SchemeError::Config(format!("n = {n} leaves no room for the message next to {n_s} ciphertext columns"))
        })?;
        let code = OmnCode::with_packets(field, packets, z, n_s)?;
        Ok(Self { n, b, capacity, z, receivers, n_m, n_s, record_bytes, field, code })
    }

    pub fn x_m(&self) -> Range<usize> {
        0..self.n_m
    }

    pub fn x_s(&self) -> Range<usize> {
        self.n_m..self.n
    }

    pub fn message_cols(&self) -> usize {
        self.n_m - self.b
    }

    pub fn omn(&self) -> &OmnCode {
        &self.code
    }

    fn payload_len(&self) -> usize {
        self.receivers * self.record_bytes * digits_per_byte(self.field)
    }

    /// Splits decoded payload symbols into `(pk bytes, ciphertext)` records.
    fn records(&self, payload: &[u32]) -> Option<Vec<(Vec<u8>, Vec<u8>)>> {
        let bytes = symbols_to_bytes(self.field, payload.get(..self.payload_len())?)?;
        Some(
            bytes
                .chunks(self.record_bytes)
                .map(|r| (r[..PK_BYTES].to_vec(), r[PK_BYTES..].to_vec()))
                .collect(),
        )
    }

    fn open(&self, payload: &[u32], sk: &SecretKey) -> Result<SecretPackage, StagedFailure> {
        let decrypt = StagedFailure::at(Stage::Decrypt);
        let records = self.records(payload).ok_or(decrypt(DecodeFailure::BadSecret))?;
        let own = sk.public_key().to_bytes();
        let (_, ct) = records
            .iter()
            .find(|(pk, _)| pk.as_slice() == own)
            .ok_or(decrypt(DecodeFailure::BadSecret))?;
        let plain = pke_decrypt(sk, ct).map_err(|_| decrypt(DecodeFailure::Decrypt))?;
        let symbols = be_bytes_to_symbols(self.field, &plain).ok_or(decrypt(DecodeFailure::BadSecret))?;
        SecretPackage::deserialize(self.field, self.capacity, self.b, &symbols).map_err(decrypt)
    }
}

/// `X = [X_M X_S]` with one encrypted copy of the secret per public key.
pub fn pk_encode(
    m: &FieldMatrix,
    pks: &[PublicKey],
    layout: &PkLayout,
    rng: &mut impl Rng,
) -> Result<(FieldMatrix, SecretPackage), SchemeError> {
    if pks.len() != layout.receivers {
        return Err(SchemeError::Config(format!(
            "layout sized for {} receivers, got {} keys",
            layout.receivers,
            pks.len()
        )));
    }
    if m.rows() != layout.b || m.cols() != layout.message_cols() {
        return Err(SchemeError::Config(format!(
            "message must be {}x{}, got {}x{}",
            layout.b,
            layout.message_cols(),
            m.rows(),
            m.cols()
        )));
    }
    let field = m.field();
    let x_m = sc_encode(m);
    let secret = sc_compose_secret(&x_m, layout.capacity, rng)?;
    let plain = symbols_to_be_bytes(field, &secret.serialize());
    let mut bytes = Vec::with_capacity(layout.receivers * layout.record_bytes);
    for pk in pks {
        bytes.extend_from_slice(&pk.to_bytes());
        bytes.extend(pke_encrypt(pk, &plain, rng));
    }
    let x_s = pad_rows(layout.code.encode(&bytes_to_symbols(field, &bytes))?, layout.b);
    Ok((FieldMatrix::hstack(&[&x_m, &x_s])?, secret))
}

/// Omniscient decoding, decryption, then hash-checked decoding.
pub fn pk_decode(y: &FieldMatrix, sk: &SecretKey, layout: &PkLayout) -> Result<FieldMatrix, StagedFailure> {
    let payload = layout.code.decode(&y.columns(layout.x_s())).map_err(StagedFailure::at(Stage::Omn))?;
    let secret = layout.open(&payload, sk)?;
    sc_decode(&y.columns(layout.x_m()), &secret, layout.b, layout.z).map_err(StagedFailure::at(Stage::Sc))
}

/// Reads `X_S` off the view and decrypts it with a secret key the view exposes.
pub fn parity_leak(layout: PkLayout) -> ParityLeak {
    Box::new(move |view: &AdversaryView<'_>| {
        let sk = view.secret()?.secret_key.clone()?;
        let range = layout.x_s();
        if view.visible_through()? + 1 < range.end {
            return None;
        }
        let x_s = view_block(view, range, layout.code.packets())?;
        let payload = layout.code.read_systematic(&x_s);
        layout.open(&payload, &sk).ok().map(|s| s.parity)
    })
}
