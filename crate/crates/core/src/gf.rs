//! Prime-field arithmetic.
//!
//! Every coding operation in this crate works over a prime field `F_q`. A
//! [`Field`] is a small `Copy` handle carrying the modulus; raw symbols are
//! plain `u32` values in `[0, q)` and the hot paths (matrix code, network
//! simulation) use the `Field` methods directly on them. [`FieldElement`]
//! pairs a value with its field for the public element-level API, where
//! mixing two fields is reported instead of silently producing garbage.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Default modulus used by experiments.
pub const DEFAULT_Q: u32 = 251;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GfError {
    #[error("modulus {0} is not prime")]
    NotPrime(u32),
    #[error("modulus {0} is too large (must be below 2^31)")]
    TooLarge(u32),
    #[error("field mismatch: F_{left} vs F_{right}")]
    Mismatch { left: u32, right: u32 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
}

/// A prime field `F_q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Field {
    q: u32,
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n as u64 {
        if (n as u64).is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

impl Field {
    pub fn new(q: u32) -> Result<Self, GfError> {
        if q >= 1 << 31 {
            return Err(GfError::TooLarge(q));
        }
        if !is_prime(q) {
            return Err(GfError::NotPrime(q));
        }
        Ok(Self { q })
    }

    #[inline]
    pub fn q(self) -> u32 {
        self.q
    }

    /// Wraps an arbitrary integer into the field.
    pub fn elem(self, v: u64) -> FieldElement {
        FieldElement { value: (v % self.q as u64) as u32, field: self }
    }

    pub fn zero(self) -> FieldElement {
        FieldElement { value: 0, field: self }
    }

    pub fn one(self) -> FieldElement {
        FieldElement { value: 1 % self.q, field: self }
    }

    /// All elements in increasing order.
    pub fn elements(self) -> impl Iterator<Item = FieldElement> {
        (0..self.q).map(move |value| FieldElement { value, field: self })
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        let s = a as u64 + b as u64;
        let q = self.q as u64;
        (if s >= q { s - q } else { s }) as u32
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.q as u64) as u32
    }

    /// `a + b * c`, the inner step of every dot product.
    #[inline]
    pub fn mul_add(self, a: u32, b: u32, c: u32) -> u32 {
        ((a as u64 + b as u64 * c as u64) % self.q as u64) as u32
    }

    pub fn pow(self, a: u32, mut e: u64) -> u32 {
        let q = self.q as u64;
        let mut base = a as u64 % q;
        let mut acc = 1 % q;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % q;
            }
            base = base * base % q;
            e >>= 1;
        }
        acc as u32
    }

    /// Inverse via `a^(q-2)`.
    pub fn inv(self, a: u32) -> Result<u32, GfError> {
        if a.is_multiple_of(self.q) {
            return Err(GfError::ZeroInverse);
        }
        Ok(self.pow(a, self.q as u64 - 2))
    }
}

impl Default for Field {
    fn default() -> Self {
        Self { q: DEFAULT_Q }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.q)
    }
}

/// A value tagged with the field it lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u32,
    field: Field,
}

impl FieldElement {
    #[inline]
    pub fn value(self) -> u32 {
        self.value
    }

    #[inline]
    pub fn field(self) -> Field {
        self.field
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    fn same_field(self, other: Self) -> Result<Field, GfError> {
        if self.field != other.field {
            return Err(GfError::Mismatch { left: self.field.q, right: other.field.q });
        }
        Ok(self.field)
    }

    pub fn checked_add(self, rhs: Self) -> Result<Self, GfError> {
        let f = self.same_field(rhs)?;
        Ok(Self { value: f.add(self.value, rhs.value), field: f })
    }

    pub fn checked_sub(self, rhs: Self) -> Result<Self, GfError> {
        let f = self.same_field(rhs)?;
        Ok(Self { value: f.sub(self.value, rhs.value), field: f })
    }

    pub fn checked_mul(self, rhs: Self) -> Result<Self, GfError> {
        let f = self.same_field(rhs)?;
        Ok(Self { value: f.mul(self.value, rhs.value), field: f })
    }

    pub fn inv(self) -> Result<Self, GfError> {
        Ok(Self { value: self.field.inv(self.value)?, field: self.field })
    }

    pub fn pow(self, e: u64) -> Self {
        Self { value: self.field.pow(self.value, e), field: self.field }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

// Operator forms panic on a field mismatch; use the `checked_*` methods when
// the operands may come from different fields.
impl Add for FieldElement {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.checked_add(rhs).expect("field mismatch in +")
    }
}

impl Sub for FieldElement {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.checked_sub(rhs).expect("field mismatch in -")
    }
}

impl Mul for FieldElement {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.checked_mul(rhs).expect("field mismatch in *")
    }
}

impl Neg for FieldElement {
    type Output = Self;
    fn neg(self) -> Self {
        Self { value: self.field.neg(self.value), field: self.field }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(q: u32) -> Field {
        Field::new(q).unwrap()
    }

    #[test]
    fn add_examples() {
        let f7 = f(7);
        assert_eq!((f7.elem(3) + f7.elem(5)).value(), 1);
        for x in f7.elements() {
            assert_eq!(x + f7.zero(), x);
        }
        let f5 = f(5);
        assert_eq!((f5.elem(4) + f5.elem(4)).value(), 3);
    }

    #[test]
    fn mul_inv_pow_examples() {
        let f7 = f(7);
        // repeated multiplication oracle
        let mut acc = 1u32;
        for _ in 0..5 {
            acc = acc * 3 % 7;
        }
        assert_eq!(acc, 5);
        assert_eq!(f7.elem(3).pow(5).value(), acc);
        // exhaustive inverse search
        let brute = (1..7).find(|y| 2 * y % 7 == 1).unwrap();
        assert_eq!(brute, 4);
        assert_eq!(f7.elem(2).inv().unwrap().value(), brute);
        let f11 = f(11);
        for x in f11.elements() {
            assert_eq!(x * f11.one(), x);
        }
        assert_eq!(f7.elem(6).pow(0), f7.one());
        assert_eq!(f7.zero().pow(0), f7.one());
    }

    #[test]
    fn inverse_of_zero_is_an_error() {
        assert_eq!(f(7).zero().inv(), Err(GfError::ZeroInverse));
    }

    #[test]
    fn mismatched_fields_are_rejected() {
        let a = f(5).elem(1);
        let b = f(7).elem(1);
        assert_eq!(a.checked_add(b), Err(GfError::Mismatch { left: 5, right: 7 }));
        assert!(a.checked_mul(b).is_err());
    }

    #[test]
    fn non_primes_are_rejected() {
        for q in [0, 1, 4, 9, 15, 255, 256] {
            assert_eq!(Field::new(q), Err(GfError::NotPrime(q)));
        }
        assert!(Field::new(1 << 31).is_err());
        assert!(Field::new(2_147_483_647).is_ok());
        assert!(Field::new(2).is_ok());
    }

    #[test]
    fn every_nonzero_element_has_inverse_up_to_257() {
        for q in (2..=257).filter(|&q| is_prime(q)) {
            let fq = f(q);
            for a in fq.elements().filter(|a| !a.is_zero()) {
                assert_eq!(a * a.inv().unwrap(), fq.one(), "q={q} a={a}");
            }
        }
    }

    #[test]
    fn field_axioms_exhaustive_small() {
        for q in [2, 3, 5, 7] {
            let fq = f(q);
            for a in fq.elements() {
                for b in fq.elements() {
                    assert_eq!(a + b, b + a);
                    assert_eq!(a * b, b * a);
                    assert_eq!((a - b) + b, a);
                    for c in fq.elements() {
                        assert_eq!((a + b) + c, a + (b + c));
                        assert_eq!((a * b) * c, a * (b * c));
                        assert_eq!(a * (b + c), a * b + a * c);
                    }
                }
            }
        }
    }

    #[test]
    fn raw_ops_agree_with_u64_reference_at_large_modulus() {
        let fq = f(2_147_483_629);
        let q = fq.q() as u64;
        let samples = [0u32, 1, 2, 12345, 2_000_000_000, 2_147_483_628];
        for &a in &samples {
            for &b in &samples {
                assert_eq!(fq.add(a, b) as u64, (a as u64 + b as u64) % q);
                assert_eq!(fq.mul(a, b) as u64, a as u64 * b as u64 % q);
                assert_eq!(fq.add(fq.sub(a, b), b), a);
            }
        }
    }
}
