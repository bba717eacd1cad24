//! Building blocks: a secret-channel scheme and an omniscient-adversary scheme.
//!
//! Secret channel: Alice sends `X = [M I]` through the network and, out of
//! band, the parity symbols `R` and the hash `H = X P` where `P` is the
//! Vandermonde matrix of `R`. Bob computes `D = Y P - Y_I H`. Corruption shows
//! up as the column space of `D`; projecting `Y` onto the left null space of
//! `D` removes it, after which `[M̂ I]` is a plain linear solve. Any output
//! satisfies `X̂ P = H`, so the decoder only errs on a hash collision.
//!
//! Omniscient channel: Alice sends `[I U]` where `U` is a codeword of a
//! public random linear code over `F_q^(b x N)` whose nonzero codewords all
//! have rank above `z`. Bob lifts the received row space back to `[I U]`; the
//! ambiguity is a `b x z'` coefficient matrix fixed by the code's checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gf::Field;
use crate::linalg::{vandermonde, FieldMatrix, LinalgError, Solution};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlockError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Why a decoder declined to produce a message. A normal outcome, counted in metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DecodeFailure {
    #[error("identity block has rank {rank}, need {needed}")]
    RankDeficient { rank: usize, needed: usize },
    #[error("error space has dimension {rank}, more than z = {z}")]
    TooManyErrors { rank: usize, z: usize },
    #[error("no reconstruction passes the check")]
    Inconsistent,
    #[error("more than one reconstruction passes the check")]
    Ambiguous,
    #[error("received matrix has the wrong shape")]
    Shape,
    #[error("recovered secret is malformed")]
    BadSecret,
    #[error("decryption failed")]
    Decrypt,
}

/// Parity symbols and hash shared over the secret channel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecretPackage {
    pub parity: Vec<u32>,
    pub hash: FieldMatrix,
}

impl SecretPackage {
    pub fn symbol_count(&self) -> usize {
        self.parity.len() + self.hash.rows() * self.hash.cols()
    }

    /// `R` followed by `H` in row-major order.
    pub fn serialize(&self) -> Vec<u32> {
        let mut out = self.parity.clone();
        out.extend_from_slice(self.hash.data());
        out
    }

    pub fn deserialize(field: Field, c: usize, b: usize, symbols: &[u32]) -> Result<Self, DecodeFailure> {
        if symbols.len() < c + b * c || symbols.iter().any(|&s| s >= field.q()) {
            return Err(DecodeFailure::BadSecret);
        }
        let hash = FieldMatrix::from_vec(field, b, c, symbols[c..c + b * c].to_vec())
            .map_err(|_| DecodeFailure::BadSecret)?;
        Ok(Self { parity: symbols[..c].to_vec(), hash })
    }
}

/// `X = [M I]`.
pub fn sc_encode(m: &FieldMatrix) -> FieldMatrix {
    let id = FieldMatrix::identity(m.field(), m.rows());
    FieldMatrix::hstack(&[m, &id]).expect("equal row counts")
}

/// Draws `C` uniform parity symbols and hashes `X` under them.
pub fn sc_compose_secret(x: &FieldMatrix, c: usize, rng: &mut impl Rng) -> Result<SecretPackage, BlockError> {
    let field = x.field();
    let parity: Vec<u32> = (0..c).map(|_| rng.gen_range(0..field.q())).collect();
    let p = vandermonde(field, &parity, x.cols())?;
    Ok(SecretPackage { hash: x.mat_mul(&p)?, parity })
}

/// Recovers `M̂` (`b x (n-b)`) from one sink's `m x n` received matrix.
pub fn sc_decode(y: &FieldMatrix, secret: &SecretPackage, b: usize, z: usize) -> Result<FieldMatrix, DecodeFailure> {
    let field = y.field();
    let n = y.cols();
    if n <= b || secret.hash.rows() != b || secret.hash.cols() != secret.parity.len() {
        return Err(DecodeFailure::Shape);
    }
    let p = vandermonde(field, &secret.parity, n).map_err(|_| DecodeFailure::Shape)?;
    let y_i = y.columns(n - b..n);
    let d = y
        .mat_mul(&p)
        .and_then(|yp| yp.sub(&y_i.mat_mul(&secret.hash)?))
        .map_err(|_| DecodeFailure::Shape)?;
    let rank = d.rank();
    if rank > z {
        return Err(DecodeFailure::TooManyErrors { rank, z });
    }
    let pi = d.left_null_space();
    let a = pi.mat_mul(&y_i).map_err(|_| DecodeFailure::Shape)?;
    let a_rank = a.rank();
    if a_rank < b {
        return Err(DecodeFailure::RankDeficient { rank: a_rank, needed: b });
    }
    let rhs = pi.mat_mul(&y.columns(0..n - b)).map_err(|_| DecodeFailure::Shape)?;
    match a.solve(&rhs).map_err(|_| DecodeFailure::Shape)? {
        Solution::Unique(m) => Ok(m),
        Solution::NoSolution => Err(DecodeFailure::Inconsistent),
        Solution::NonUnique => Err(DecodeFailure::Ambiguous),
    }
}

/// Extra checks beyond the rank-`z` ball; a random code collides with probability about `q^-SLACK`.
const SLACK: usize = 4;

/// Public code for the omniscient channel.
#[derive(Clone, Debug)]
pub struct OmnCode {
    field: Field,
    b: usize,
    z: usize,
    data_cols: usize,
    k: usize,
    /// `k x rho` generator of the parity part.
    parity_gen: FieldMatrix,
}

fn omn_dims(b: usize, z: usize, data_cols: usize) -> Option<(usize, usize)> {
    let rho = if z == 0 { 0 } else { z * (b + data_cols - z) + SLACK };
    let k = (b * data_cols).checked_sub(rho)?;
    Some((k, rho))
}

impl OmnCode {
    /// Code of total width `width` for a network of capacity `capacity`, sending `capacity - z` packets.
    pub fn new(field: Field, capacity: usize, z: usize, width: usize) -> Result<Self, BlockError> {
        if capacity <= 2 * z {
            return Err(BlockError::Config(format!(
                "the omniscient channel needs C > 2z (C = {capacity}, z = {z})"
            )));
        }
        Self::with_packets(field, capacity - z, z, width)
    }

    pub fn with_packets(field: Field, b: usize, z: usize, width: usize) -> Result<Self, BlockError> {
        if b <= z {
            return Err(BlockError::Config(format!("b = {b} packets leave no room for z = {z} errors")));
        }
        let data_cols = width.checked_sub(b).filter(|&c| c > 0).ok_or_else(|| {
            BlockError::Config(format!("block width {width} must exceed b = {b}"))
        })?;
        let (k, rho) = omn_dims(b, z, data_cols)
            .ok_or_else(|| BlockError::Config(format!("block width {width} is too small for z = {z}")))?;
        let seed = 0x6f6d_6e00_0000_0000
            ^ (field.q() as u64) << 24
            ^ (b as u64) << 16
            ^ (data_cols as u64) << 4
            ^ z as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let parity_gen = FieldMatrix::from_fn(field, k, rho, |_, _| rng.gen_range(0..field.q()) as u64);
        Ok(Self { field, b, z, data_cols, k, parity_gen })
    }

    /// Smallest width whose payload capacity is at least `payload_len`.
    pub fn min_width(capacity: usize, z: usize, payload_len: usize) -> Result<usize, BlockError> {
        if capacity <= 2 * z {
            return Err(BlockError::Config(format!(
                "the omniscient channel needs C > 2z (C = {capacity}, z = {z})"
            )));
        }
        Self::min_width_packets(capacity - z, z, payload_len)
    }

    /// [`min_width`](Self::min_width) for an explicit packet count.
    pub fn min_width_packets(b: usize, z: usize, payload_len: usize) -> Result<usize, BlockError> {
        if b <= z {
            return Err(BlockError::Config(format!("b = {b} packets leave no room for z = {z} errors")));
        }
        let mut cols = 1;
        loop {
            if omn_dims(b, z, cols).is_some_and(|(k, _)| k >= payload_len.max(1)) {
                return Ok(b + cols);
            }
            cols += 1;
        }
    }

    pub fn packets(&self) -> usize {
        self.b
    }

    pub fn width(&self) -> usize {
        self.b + self.data_cols
    }

    /// Payload symbols per block.
    pub fn capacity(&self) -> usize {
        self.k
    }

    pub fn redundancy(&self) -> usize {
        self.b * self.data_cols - self.k
    }

    /// `[I U]`; `payload` is zero-padded to the code capacity.
    pub fn encode(&self, payload: &[u32]) -> Result<FieldMatrix, BlockError> {
        if payload.len() > self.k {
            return Err(BlockError::Config(format!(
                "payload of {} symbols exceeds the block capacity {} (rate C - 2z)",
                payload.len(),
                self.k
            )));
        }
        if let Some(&v) = payload.iter().find(|&&v| v >= self.field.q()) {
            return Err(LinalgError::OutOfRange { value: v, q: self.field.q() }.into());
        }
        let mut data = payload.to_vec();
        data.resize(self.k, 0);
        let d = FieldMatrix::from_vec(self.field, 1, self.k, data.clone())?;
        data.extend_from_slice(d.mat_mul(&self.parity_gen)?.data());
        let u = FieldMatrix::from_vec(self.field, self.b, self.data_cols, data)?;
        Ok(FieldMatrix::hstack(&[&FieldMatrix::identity(self.field, self.b), &u])?)
    }

    /// Payload of an uncorrupted `[I U]` block, read straight off `U`.
    pub fn read_systematic(&self, x_s: &FieldMatrix) -> Vec<u32> {
        let u = x_s.columns(self.b..self.width());
        u.data()[..self.k].to_vec()
    }

    /// `vec(U) * [G; -I]`, one entry per check.
    fn syndrome(&self, vec_u: &[u32]) -> Vec<u32> {
        let f = self.field;
        (0..self.parity_gen.cols())
            .map(|c| {
                let acc = (0..self.k).fold(0, |acc, i| f.mul_add(acc, vec_u[i], self.parity_gen.get(i, c)));
                f.sub(acc, vec_u[self.k + c])
            })
            .collect()
    }

    /// Recovers the zero-padded payload (length [`capacity`](Self::capacity)).
    pub fn decode(&self, y: &FieldMatrix) -> Result<Vec<u32>, DecodeFailure> {
        let f = self.field;
        let (b, n_u) = (self.b, self.data_cols);
        if y.cols() != self.width() {
            return Err(DecodeFailure::Shape);
        }
        let (v, pivots) = y.rref();
        let lead = pivots.iter().take_while(|&&p| p < b).count();
        if lead < b {
            return Err(DecodeFailure::RankDeficient { rank: lead, needed: b });
        }
        let extra = pivots.len() - b;
        if extra > self.z {
            return Err(DecodeFailure::TooManyErrors { rank: extra, z: self.z });
        }
        // RREF puts [I U0] on top and [0 W] below
        let u0: Vec<u32> = (0..b).flat_map(|r| v.row(r)[b..].to_vec()).collect();
        let w: Vec<&[u32]> = (b..b + extra).map(|r| &v.row(r)[b..]).collect();
        let base = self.syndrome(&u0);
        let vec_u = if extra == 0 {
            if base.iter().any(|&s| s != 0) {
                return Err(DecodeFailure::Inconsistent);
            }
            u0
        } else {
            // unknown kappa[i][j] adds w[j] to row i of U0
            let rho = self.parity_gen.cols();
            let unknowns = b * extra;
            let mut sys = FieldMatrix::zeros(f, rho, unknowns);
            for i in 0..b {
                for (j, wj) in w.iter().enumerate() {
                    let mut contrib = vec![0u32; b * n_u];
                    contrib[i * n_u..(i + 1) * n_u].copy_from_slice(wj);
                    for (c, s) in self.syndrome(&contrib).into_iter().enumerate() {
                        sys.set(c, i * extra + j, s);
                    }
                }
            }
            let rhs = FieldMatrix::from_fn(f, rho, 1, |c, _| f.neg(base[c]) as u64);
            let kappa = match sys.solve(&rhs).map_err(|_| DecodeFailure::Shape)? {
                Solution::Unique(k) => k,
                Solution::NoSolution => return Err(DecodeFailure::Inconsistent),
                Solution::NonUnique => return Err(DecodeFailure::Ambiguous),
            };
            let mut vec_u = u0;
            for i in 0..b {
                for (j, wj) in w.iter().enumerate() {
                    let coef = kappa.get(i * extra + j, 0);
                    for (l, &wv) in wj.iter().enumerate() {
                        let cell = &mut vec_u[i * n_u + l];
                        *cell = f.mul_add(*cell, coef, wv);
                    }
                }
            }
            vec_u
        };
        Ok(vec_u[..self.k].to_vec())
    }
}
