//! Many random-secret executions from one short shared seed.
//!
//! The PRG stream is expanded on demand: execution `i` consumes the next
//! `C + b C` symbols, so no bound on the number of executions is needed and
//! no two executions share stream material.

use std::ops::Range;

use super::rs::RsSecret;
use crate::cryptokit::{PrgStream, SEED_LEN};
use crate::gf::Field;
use crate::linalg::FieldMatrix;

pub struct SessionKeys {
    stream: PrgStream,
    field: Field,
    c: usize,
    b: usize,
    issued: usize,
}

impl SessionKeys {
    pub fn new(seed: [u8; SEED_LEN], field: Field, c: usize, b: usize) -> Self {
        Self { stream: PrgStream::new(seed), field, c, b, issued: 0 }
    }

    /// Secret of the next execution and the keystream word range it came from.
    pub fn next_secret(&mut self) -> (RsSecret, Range<u128>) {
        let start = self.stream.word_position();
        let parity = self.stream.next_symbols(self.field, self.c);
        let hash_data = self.stream.next_symbols(self.field, self.b * self.c);
        let hash = FieldMatrix::from_vec(self.field, self.b, self.c, hash_data).expect("sized");
        self.issued += 1;
        (RsSecret { parity, hash }, start..self.stream.word_position())
    }

    pub fn issued(&self) -> usize {
        self.issued
    }
}
