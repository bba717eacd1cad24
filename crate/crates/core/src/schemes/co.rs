//! Causal-omniscient scheme: `X = [X_M 0_Δ X_S]`.
//!
//! `X_M = [M I]` is hashed with a fresh secret `S = (R, H)`, and `S` itself is
//! sent afterwards through the omniscient channel as `X_S`. The `Δ` zero
//! columns guarantee that while any symbol of `X_M` is in flight, a causal
//! adversary cannot yet have seen `X_S`.

use std::ops::Range;

use rand::Rng;

use super::{omn_packets, pad_rows, view_block, SchemeError, Stage, StagedFailure};
use crate::adversary::{AdversaryView, ParityLeak};
use crate::blocks::{sc_compose_secret, sc_decode, sc_encode, OmnCode, SecretPackage};
use crate::gf::Field;
use crate::linalg::FieldMatrix;

/// Largest integer `s` with `s^3 <= n / c`.
pub fn cube_root_width(n: usize, c: usize) -> usize {
    let mut s = 0;
    while (s + 1) * (s + 1) * (s + 1) * c <= n {
        s += 1;
    }
    s
}

#[derive(Clone, Debug)]
pub struct CoLayout {
    pub n: usize,
    pub b: usize,
    pub capacity: usize,
    pub z: usize,
    pub delta: usize,
    pub n_m: usize,
    pub n_s: usize,
    code: OmnCode,
}

impl CoLayout {
    /// `X` has `b` rows; `X_S` uses the top `min(b, C - z)` of them. Its width is the
    /// larger of the cube-root rule and the smallest omniscient block that fits the
    /// serialized secret.
    pub fn new(field: Field, n: usize, capacity: usize, z: usize, delta: usize, b: usize) -> Result<Self, SchemeError> {
        let packets = omn_packets(capacity, z, b)?;
        let secret_len = capacity + b * capacity;
        let n_s = cube_root_width(n, capacity).max(OmnCode::min_width_packets(packets, z, secret_len)?);
        let n_m = n
            .checked_sub(delta + n_s)
            .filter(|&w| w > b)
            .ok_or_else(|| {
                SchemeError::Config(format!(
                    "n = {n} leaves no room for the message: {delta} latency columns and {n_s} secret columns"
                ))
            })?;
        let code = OmnCode::with_packets(field, packets, z, n_s)?;
        Ok(Self { n, b, capacity, z, delta, n_m, n_s, code })
    }

    pub fn x_m(&self) -> Range<usize> {
        0..self.n_m
    }

    pub fn zeros(&self) -> Range<usize> {
        self.n_m..self.n_m + self.delta
    }

    pub fn x_s(&self) -> Range<usize> {
        self.n_m + self.delta..self.n
    }

    /// Columns of `M`.
    pub fn message_cols(&self) -> usize {
        self.n_m - self.b
    }

    pub fn omn(&self) -> &OmnCode {
        &self.code
    }
}

pub fn co_encode(
    m: &FieldMatrix,
    layout: &CoLayout,
    rng: &mut impl Rng,
) -> Result<(FieldMatrix, SecretPackage), SchemeError> {
    if m.rows() != layout.b || m.cols() != layout.message_cols() {
        return Err(SchemeError::Config(format!(
            "message must be {}x{}, got {}x{}",
            layout.b,
            layout.message_cols(),
            m.rows(),
            m.cols()
        )));
    }
    let x_m = sc_encode(m);
    let secret = sc_compose_secret(&x_m, layout.capacity, rng)?;
    let x_s = pad_rows(layout.code.encode(&secret.serialize())?, layout.b);
    let zeros = FieldMatrix::zeros(m.field(), layout.b, layout.delta);
    Ok((FieldMatrix::hstack(&[&x_m, &zeros, &x_s])?, secret))
}

/// Omniscient decoding of the suffix, then hash-checked decoding of the prefix.
pub fn co_decode(y: &FieldMatrix, layout: &CoLayout) -> Result<FieldMatrix, StagedFailure> {
    let field = y.field();
    let payload = layout.code.decode(&y.columns(layout.x_s())).map_err(StagedFailure::at(Stage::Omn))?;
    let secret = SecretPackage::deserialize(field, layout.capacity, layout.b, &payload)
        .map_err(StagedFailure::at(Stage::Omn))?;
    sc_decode(&y.columns(layout.x_m()), &secret, layout.b, layout.z).map_err(StagedFailure::at(Stage::Sc))
}

/// Reads the parity symbols straight out of `X_S` once the view reaches its last column.
pub fn parity_leak(layout: CoLayout) -> ParityLeak {
    Box::new(move |view: &AdversaryView<'_>| {
        let range = layout.x_s();
        if view.visible_through()? + 1 < range.end {
            return None;
        }
        let x_s = view_block(view, range, layout.code.packets())?;
        Some(layout.code.read_systematic(&x_s)[..layout.capacity].to_vec())
    })
}
