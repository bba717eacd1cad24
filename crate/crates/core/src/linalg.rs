//! Dense matrices over a prime field.

use std::fmt;
use std::ops::Range;

use thiserror::Error;

use crate::gf::{Field, GfError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("entry {value} out of range for F_{q}")]
    OutOfRange { value: u32, q: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Field(#[from] GfError),
}

/// Row-major matrix over `F_q`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FieldMatrix {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

/// Outcome of [`FieldMatrix::solve`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Solution {
    Unique(FieldMatrix),
    NoSolution,
    NonUnique,
}

/// Outcome of [`vandermonde_invert`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Inversion {
    Inverse(FieldMatrix),
    Singular,
}

impl FieldMatrix {
    pub fn zeros(field: Field, rows: usize, cols: usize) -> Self {
        Self { field, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(field: Field, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn from_vec(field: Field, rows: usize, cols: usize, data: Vec<u32>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(&value) = data.iter().find(|&&v| v >= field.q()) {
            return Err(LinalgError::OutOfRange { value, q: field.q() });
        }
        Ok(Self { field, rows, cols, data })
    }

    pub fn from_rows(field: Field, rows: &[Vec<u32>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LinalgError::Dimension("ragged rows".into()));
        }
        Self::from_vec(field, rows.len(), cols, rows.concat())
    }

    /// Builds a matrix entry by entry; values are reduced mod `q`.
    pub fn from_fn(field: Field, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> u64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push((f(r, c) % field.q() as u64) as u32);
            }
        }
        Self { field, rows, cols, data }
    }

    #[inline]
    pub fn field(&self) -> Field {
        self.field
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u32> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u32) {
        debug_assert!(v < self.field.q());
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<u32> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    fn check_field(&self, other: &Self) -> Result<(), LinalgError> {
        if self.field != other.field {
            return Err(GfError::Mismatch { left: self.field.q(), right: other.field.q() }.into());
        }
        Ok(())
    }

    pub fn mat_mul(&self, other: &Self) -> Result<Self, LinalgError> {
        self.check_field(other)?;
        if self.cols != other.rows {
            return Err(LinalgError::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = self.field;
        let q = f.q() as u64;
        let mut out = Self::zeros(f, self.rows, other.cols);
        // Accumulate in u64 and reduce lazily; q < 2^31 so each product is < 2^62
        // and we can add a couple of them before reducing.
        let mut acc = vec![0u64; other.cols];
        for r in 0..self.rows {
            acc.iter_mut().for_each(|a| *a = 0);
            for k in 0..self.cols {
                let a = self.get(r, k) as u64;
                if a == 0 {
                    continue;
                }
                for (slot, &b) in acc.iter_mut().zip(other.row(k)) {
                    *slot = (*slot + a * b as u64) % q;
                }
            }
            for (c, &v) in acc.iter().enumerate() {
                out.data[r * other.cols + c] = v as u32;
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        self.zip_with(other, |f, a, b| f.add(a, b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        self.zip_with(other, |f, a, b| f.sub(a, b))
    }

    fn zip_with(&self, other: &Self, op: impl Fn(Field, u32, u32) -> u32) -> Result<Self, LinalgError> {
        self.check_field(other)?;
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(LinalgError::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = self.field;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| op(f, a, b)).collect();
        Ok(Self { field: f, rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, s: u32) -> Self {
        let f = self.field;
        Self { data: self.data.iter().map(|&v| f.mul(v, s)).collect(), ..self.clone() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.field, self.cols, self.rows, |r, c| self.get(c, r) as u64)
    }

    /// Columns `range` as a new matrix.
    pub fn columns(&self, range: Range<usize>) -> Self {
        assert!(range.end <= self.cols, "column range out of bounds");
        let width = range.len();
        let mut data = Vec::with_capacity(self.rows * width);
        for r in 0..self.rows {
            data.extend_from_slice(&self.row(r)[range.clone()]);
        }
        Self { field: self.field, rows: self.rows, cols: width, data }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &r in idx {
            data.extend_from_slice(self.row(r));
        }
        Self { field: self.field, rows: idx.len(), cols: self.cols, data }
    }

    /// Horizontal concatenation.
    pub fn hstack(parts: &[&Self]) -> Result<Self, LinalgError> {
        let first = parts
            .first()
            .ok_or_else(|| LinalgError::InvalidParameter("hstack of nothing".into()))?;
        let rows = first.rows;
        for p in parts {
            first.check_field(p)?;
            if p.rows != rows {
                return Err(LinalgError::Dimension(format!("hstack rows {} vs {}", p.rows, rows)));
            }
        }
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for p in parts {
                data.extend_from_slice(p.row(r));
            }
        }
        Ok(Self { field: first.field, rows, cols, data })
    }

    /// Vertical concatenation.
    pub fn vstack(parts: &[&Self]) -> Result<Self, LinalgError> {
        let first = parts
            .first()
            .ok_or_else(|| LinalgError::InvalidParameter("vstack of nothing".into()))?;
        for p in parts {
            first.check_field(p)?;
            if p.cols != first.cols {
                return Err(LinalgError::Dimension(format!("vstack cols {} vs {}", p.cols, first.cols)));
            }
        }
        let rows = parts.iter().map(|p| p.rows).sum();
        let data = parts.iter().flat_map(|p| p.data.iter().copied()).collect();
        Ok(Self { field: first.field, rows, cols: first.cols, data })
    }

    /// Gauss-Jordan elimination in place, choosing pivots only among the first
    /// `pivot_cols` columns; row operations still apply to every column.
    /// Returns the pivot column of each of the leading `rank` rows.
    fn reduce(&mut self, pivot_cols: usize) -> Vec<usize> {
        let f = self.field;
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..pivot_cols.min(self.cols) {
            if row == self.rows {
                break;
            }
            let Some(p) = (row..self.rows).find(|&r| self.get(r, col) != 0) else {
                continue;
            };
            if p != row {
                for c in 0..self.cols {
                    self.data.swap(p * self.cols + c, row * self.cols + c);
                }
            }
            let inv = f.inv(self.get(row, col)).expect("pivot is nonzero");
            for c in 0..self.cols {
                let v = f.mul(self.get(row, c), inv);
                self.set(row, c, v);
            }
            for r in 0..self.rows {
                if r == row {
                    continue;
                }
                let factor = self.get(r, col);
                if factor == 0 {
                    continue;
                }
                let neg = f.neg(factor);
                for c in col..self.cols {
                    let v = f.mul_add(self.get(r, c), neg, self.get(row, c));
                    self.set(r, c, v);
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    /// Reduced row echelon form and its pivot columns.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let pivots = m.reduce(m.cols);
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the row space, as the nonzero rows of the RREF.
    pub fn row_space_basis(&self) -> Self {
        let (m, pivots) = self.rref();
        let idx: Vec<usize> = (0..pivots.len()).collect();
        m.select_rows(&idx)
    }

    /// Basis (as rows) of `{ x : x * self = 0 }`.
    pub fn left_null_space(&self) -> Self {
        let id = Self::identity(self.field, self.rows);
        let mut aug = Self::hstack(&[self, &id]).expect("same rows");
        let rank = aug.reduce(self.cols).len();
        let idx: Vec<usize> = (rank..self.rows).collect();
        aug.select_rows(&idx).columns(self.cols..self.cols + self.rows)
    }

    /// Solves `self * X = rhs`, tagging inconsistent and underdetermined systems.
    pub fn solve(&self, rhs: &Self) -> Result<Solution, LinalgError> {
        self.check_field(rhs)?;
        if self.rows != rhs.rows {
            return Err(LinalgError::Dimension(format!(
                "system has {} rows, right-hand side {}",
                self.rows, rhs.rows
            )));
        }
        let mut aug = Self::hstack(&[self, rhs])?;
        let pivots = aug.reduce(self.cols);
        let rank = pivots.len();
        let inconsistent = (rank..aug.rows).any(|r| aug.row(r)[self.cols..].iter().any(|&v| v != 0));
        if inconsistent {
            return Ok(Solution::NoSolution);
        }
        if rank < self.cols {
            return Ok(Solution::NonUnique);
        }
        let idx: Vec<usize> = (0..rank).collect();
        Ok(Solution::Unique(aug.select_rows(&idx).columns(self.cols..aug.cols)))
    }

    /// Inverse of a square matrix, `None` when singular.
    pub fn inverse(&self) -> Result<Option<Self>, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::Dimension(format!("inverse of {}x{}", self.rows, self.cols)));
        }
        match self.solve(&Self::identity(self.field, self.rows))? {
            Solution::Unique(inv) => Ok(Some(inv)),
            _ => Ok(None),
        }
    }
}

impl fmt::Debug for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FieldMatrix<{}> {}x{} [", self.field, self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

/// Parity-check matrix with entry `(i, j) = r_j^(i+1)`; the first row is `parity` itself.
pub fn vandermonde(field: Field, parity: &[u32], num_rows: usize) -> Result<FieldMatrix, LinalgError> {
    if parity.is_empty() || num_rows == 0 {
        return Err(LinalgError::InvalidParameter(format!(
            "vandermonde needs at least one parity symbol and one row (got {} and {num_rows})",
            parity.len()
        )));
    }
    if let Some(&value) = parity.iter().find(|&&v| v >= field.q()) {
        return Err(LinalgError::OutOfRange { value, q: field.q() });
    }
    let cols = parity.len();
    let mut data = Vec::with_capacity(num_rows * cols);
    let mut power = parity.to_vec();
    for _ in 0..num_rows {
        data.extend_from_slice(&power);
        for (p, &r) in power.iter_mut().zip(parity) {
            *p = field.mul(*p, r);
        }
    }
    Ok(FieldMatrix { field, rows: num_rows, cols, data })
}

/// Inverts the square block `V`; singular blocks come back as [`Inversion::Singular`].
pub fn vandermonde_invert(v: &FieldMatrix) -> Result<Inversion, LinalgError> {
    match v.inverse()? {
        Some(inv) => {
            debug_assert_eq!(v.mat_mul(&inv)?, FieldMatrix::identity(v.field(), v.rows()));
            Ok(Inversion::Inverse(inv))
        }
        None => Ok(Inversion::Singular),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f(q: u32) -> Field {
        Field::new(q).unwrap()
    }

    fn m(q: u32, rows: &[&[u32]]) -> FieldMatrix {
        FieldMatrix::from_rows(f(q), &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn random(field: Field, rows: usize, cols: usize, rng: &mut impl Rng) -> FieldMatrix {
        FieldMatrix::from_fn(field, rows, cols, |_, _| rng.gen_range(0..field.q()) as u64)
    }

    #[test]
    fn mat_mul_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random(f(7), 3, 4, &mut rng);
        assert_eq!(FieldMatrix::identity(f(7), 3).mat_mul(&a).unwrap(), a);
        assert!(FieldMatrix::zeros(f(7), 2, 3).mat_mul(&a).unwrap().is_zero());
        // hand multiplication: [[3,5],[2,4]]·[[2,1],[6,5]] = [[36,28],[28,22]] mod 7
        let p = m(7, &[&[3, 5], &[2, 4]]).mat_mul(&m(7, &[&[2, 1], &[6, 5]])).unwrap();
        assert_eq!(p, m(7, &[&[1, 0], &[0, 1]]));
    }

    #[test]
    fn mat_mul_dimension_mismatch() {
        let a = FieldMatrix::zeros(f(7), 2, 3);
        assert!(matches!(a.mat_mul(&a), Err(LinalgError::Dimension(_))));
        let b = FieldMatrix::zeros(f(5), 3, 2);
        assert!(matches!(a.mat_mul(&b), Err(LinalgError::Field(_))));
    }

    #[test]
    fn rank_and_solve_examples() {
        assert_eq!(m(5, &[&[1, 1], &[1, 1]]).rank(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = random(f(7), 3, 2, &mut rng);
        assert_eq!(FieldMatrix::identity(f(7), 3).solve(&b).unwrap(), Solution::Unique(b.clone()));
        let mut nonzero = FieldMatrix::zeros(f(7), 3, 2);
        nonzero.set(1, 1, 4);
        assert_eq!(FieldMatrix::zeros(f(7), 3, 3).solve(&nonzero).unwrap(), Solution::NoSolution);
        assert_eq!(
            FieldMatrix::zeros(f(7), 3, 3).solve(&FieldMatrix::zeros(f(7), 3, 1)).unwrap(),
            Solution::NonUnique
        );
        assert!(matches!(
            FieldMatrix::identity(f(7), 3).solve(&FieldMatrix::zeros(f(7), 2, 1)),
            Err(LinalgError::Dimension(_))
        ));
    }

    #[test]
    fn solve_round_trip_exhaustive_small() {
        // every invertible 2x2 over F_5, against a handful of right-hand sides
        let fq = f(5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for entries in 0..625u32 {
            let a = FieldMatrix::from_fn(fq, 2, 2, |r, c| ((entries / 5u32.pow((2 * r + c) as u32)) % 5) as u64);
            if a.rank() < 2 {
                continue;
            }
            for _ in 0..4 {
                let x = random(fq, 2, 3, &mut rng);
                let b = a.mat_mul(&x).unwrap();
                assert_eq!(a.solve(&b).unwrap(), Solution::Unique(x));
            }
        }
        // random full-rank systems up to 3x3, overdetermined included
        for _ in 0..500 {
            let rows = rng.gen_range(1..=3);
            let cols = rng.gen_range(1..=rows);
            let a = random(fq, rows, cols, &mut rng);
            if a.rank() < cols {
                continue;
            }
            let x = random(fq, cols, 2, &mut rng);
            assert_eq!(a.solve(&a.mat_mul(&x).unwrap()).unwrap(), Solution::Unique(x));
        }
    }

    #[test]
    fn left_null_space_annihilates() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let a = random(f(11), 5, 2, &mut rng);
            let n = a.left_null_space();
            assert_eq!(n.rows(), 5 - a.rank());
            assert!(n.mat_mul(&a).unwrap().is_zero());
            assert_eq!(n.rank(), n.rows());
        }
    }

    #[test]
    fn vandermonde_examples() {
        let fq = f(7);
        assert_eq!(vandermonde(fq, &[3, 5], 3).unwrap(), m(7, &[&[3, 5], &[2, 4], &[6, 6]]));
        assert_eq!(vandermonde(fq, &[1], 6).unwrap(), FieldMatrix::from_fn(fq, 6, 1, |_, _| 1));
        // 2^1..2^4 mod 5
        let col: Vec<u32> = (1..=4).map(|i| 2u32.pow(i) % 5).collect();
        assert_eq!(col, vec![2, 4, 3, 1]);
        assert_eq!(vandermonde(f(5), &[2], 4).unwrap().column(0), col);
        assert!(vandermonde(fq, &[], 3).is_err());
        assert!(vandermonde(fq, &[2], 0).is_err());
    }

    #[test]
    fn vandermonde_invert_examples() {
        let fq = f(7);
        let v = vandermonde(fq, &[3, 5], 2).unwrap();
        let expected = m(7, &[&[2, 1], &[6, 5]]);
        assert_eq!(v.mat_mul(&expected).unwrap(), FieldMatrix::identity(fq, 2));
        assert_eq!(vandermonde_invert(&v).unwrap(), Inversion::Inverse(expected));
        let rep = vandermonde(fq, &[4, 4], 2).unwrap();
        assert_eq!(vandermonde_invert(&rep).unwrap(), Inversion::Singular);
        let single = vandermonde(fq, &[3], 1).unwrap();
        assert_eq!(vandermonde_invert(&single).unwrap(), Inversion::Inverse(m(7, &[&[5]])));
        assert!(vandermonde_invert(&FieldMatrix::zeros(fq, 2, 3)).is_err());
    }

    #[test]
    fn vandermonde_invertible_iff_distinct_nonzero_exhaustive_f5() {
        let fq = f(5);
        for r0 in 0..5 {
            for r1 in 0..5 {
                let v = vandermonde(fq, &[r0, r1], 2).unwrap();
                let good = r0 != 0 && r1 != 0 && r0 != r1;
                match vandermonde_invert(&v).unwrap() {
                    Inversion::Inverse(inv) => {
                        assert!(good, "R=({r0},{r1}) should be singular");
                        assert_eq!(v.mat_mul(&inv).unwrap(), FieldMatrix::identity(fq, 2));
                    }
                    Inversion::Singular => assert!(!good, "R=({r0},{r1}) should invert"),
                }
            }
        }
    }

    #[test]
    fn stacking_and_slicing() {
        let a = m(7, &[&[1, 2], &[3, 4]]);
        let b = m(7, &[&[5], &[6]]);
        let h = FieldMatrix::hstack(&[&a, &b]).unwrap();
        assert_eq!(h, m(7, &[&[1, 2, 5], &[3, 4, 6]]));
        assert_eq!(h.columns(0..2), a);
        assert_eq!(h.columns(2..3), b);
        assert_eq!(FieldMatrix::vstack(&[&a, &a]).unwrap().rows(), 4);
        assert!(FieldMatrix::hstack(&[&a, &FieldMatrix::zeros(f(7), 3, 1)]).is_err());
        assert_eq!(a.transpose(), m(7, &[&[1, 3], &[2, 4]]));
    }

    #[test]
    fn from_vec_validates() {
        assert!(matches!(
            FieldMatrix::from_vec(f(5), 1, 2, vec![1, 5]),
            Err(LinalgError::OutOfRange { value: 5, q: 5 })
        ));
        assert!(FieldMatrix::from_vec(f(5), 2, 2, vec![1]).is_err());
    }
}
