//! Bit-packed linear algebra over F2.
//!
//! Vectors are stored as little-endian `u64` words; dot products reduce to
//! AND + popcount parity. Row reduction always picks the lowest-index pivot
//! column and the lowest-index candidate row, so echelon forms are
//! deterministic across platforms.

use std::fmt;

use crate::error::Error;

/// Default cap on coset enumeration work (number of spanned vectors visited).
pub const DEFAULT_ENUM_BUDGET: u64 = 1 << 24;

/// Environment variable overriding enumeration budgets.
pub const BUDGET_ENV: &str = "DISTILLERY_BUDGET";

/// Effective enumeration budget: `DISTILLERY_BUDGET` if set and parseable,
/// otherwise [`DEFAULT_ENUM_BUDGET`].
pub fn enum_budget() -> u64 {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_ENUM_BUDGET)
}

/// A fixed-length vector over F2.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        BitVector {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    /// Parses a string of `0`/`1` characters, most significant bit first in
    /// reading order: `"1100"` has bits 0 and 1 set.
    pub fn from_str01(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        let mut v = BitVector::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                _ => return Err(Error::Parse(format!("invalid bit character {c:?}"))),
            }
        }
        Ok(v)
    }

    /// Builds a vector of length `len` with the listed positions set.
    pub fn from_support(len: usize, support: &[usize]) -> Self {
        let mut v = BitVector::zeros(len);
        for &i in support {
            v.set(i, true);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    #[inline]
    pub fn xor_assign(&mut self, other: &BitVector) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitVector) -> BitVector {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    pub fn and(&self, other: &BitVector) -> BitVector {
        debug_assert_eq!(self.len, other.len);
        BitVector {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    /// Inner product over F2: parity of the overlap.
    #[inline]
    pub fn dot(&self, other: &BitVector) -> bool {
        debug_assert_eq!(self.len, other.len);
        let mut acc = 0u64;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= a & b;
        }
        acc.count_ones() % 2 == 1
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    /// Index of the lowest set bit, if any.
    pub fn first_set(&self) -> Option<usize> {
        for (wi, w) in self.words.iter().enumerate() {
            if *w != 0 {
                return Some(wi * 64 + w.trailing_zeros() as usize);
            }
        }
        None
    }

    /// Indices of set bits, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i)).collect()
    }

    /// Restricts to the listed coordinate positions, in order.
    pub fn select(&self, positions: &[usize]) -> BitVector {
        let mut out = BitVector::zeros(positions.len());
        for (j, &i) in positions.iter().enumerate() {
            if self.get(i) {
                out.set(j, true);
            }
        }
        out
    }

    /// Removes coordinate `i`, shortening the vector by one.
    pub fn delete(&self, i: usize) -> BitVector {
        debug_assert!(i < self.len);
        let mut out = BitVector::zeros(self.len - 1);
        for j in 0..self.len - 1 {
            let src = if j < i { j } else { j + 1 };
            if self.get(src) {
                out.set(j, true);
            }
        }
        out
    }

    /// Interprets the low bits of `bits` as coefficients over `basis` and
    /// returns the combination.
    pub fn combine(basis: &[BitVector], bits: u64) -> BitVector {
        let len = basis.first().map_or(0, |v| v.len());
        let mut out = BitVector::zeros(len);
        for (i, b) in basis.iter().enumerate() {
            if (bits >> i) & 1 == 1 {
                out.xor_assign(b);
            }
        }
        out
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

/// A matrix over F2 stored as a list of equal-length rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<BitVector>,
}

impl BitMatrix {
    pub fn new(cols: usize) -> Self {
        BitMatrix { cols, rows: Vec::new() }
    }

    /// Builds from rows, keeping the column count even when empty.
    pub fn from_rows_cols(rows: Vec<BitVector>, cols: usize) -> Self {
        if rows.is_empty() {
            BitMatrix::new(cols)
        } else {
            BitMatrix::from_rows(rows)
        }
    }

    pub fn from_rows(rows: Vec<BitVector>) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        BitMatrix { cols, rows }
    }

    /// Parses one `0`/`1` string per line.
    pub fn from_str01(lines: &str) -> Result<Self, Error> {
        let rows: Vec<BitVector> = lines
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(BitVector::from_str01)
            .collect::<Result<_, _>>()?;
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Parse("rows of unequal length".into()));
        }
        Ok(BitMatrix { cols, rows })
    }

    pub fn identity(n: usize) -> Self {
        BitMatrix {
            cols: n,
            rows: (0..n).map(|i| BitVector::from_support(n, &[i])).collect(),
        }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BitVector {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[BitVector] {
        &self.rows
    }

    pub fn push_row(&mut self, row: BitVector) {
        assert_eq!(row.len(), self.cols);
        self.rows.push(row);
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.rows[r].set(c, v);
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut out = BitMatrix {
            cols: self.rows.len(),
            rows: vec![BitVector::zeros(self.rows.len()); self.cols],
        };
        for (r, row) in self.rows.iter().enumerate() {
            for c in 0..self.cols {
                if row.get(c) {
                    out.rows[c].set(r, true);
                }
            }
        }
        out
    }

    /// Matrix-vector product `M v`.
    pub fn mul_vec(&self, v: &BitVector) -> BitVector {
        let mut out = BitVector::zeros(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            if row.dot(v) {
                out.set(i, true);
            }
        }
        out
    }

    /// In-place row echelon reduction. Pivot search scans columns left to
    /// right and takes the lowest-index unused row; returns the pivot column
    /// of each echelon row.
    pub fn echelonize(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut next_row = 0;
        for col in 0..self.cols {
            let Some(r) = (next_row..self.rows.len()).find(|&r| self.rows[r].get(col)) else {
                continue;
            };
            self.rows.swap(next_row, r);
            let pivot_row = self.rows[next_row].clone();
            for (r, row) in self.rows.iter_mut().enumerate() {
                if r != next_row && row.get(col) {
                    row.xor_assign(&pivot_row);
                }
            }
            pivots.push(col);
            next_row += 1;
        }
        self.rows.truncate(next_row);
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.echelonize();
        m.num_rows()
    }

    /// Row space membership test.
    pub fn row_space_contains(&self, v: &BitVector) -> bool {
        Echelon::new(self).contains(v)
    }

    /// Basis for the kernel `{v : M v = 0}`.
    pub fn kernel(&self) -> BitMatrix {
        let mut m = self.clone();
        let pivots = m.echelonize();
        let mut basis = Vec::new();
        let pivot_set: Vec<bool> = {
            let mut s = vec![false; self.cols];
            for &p in &pivots {
                s[p] = true;
            }
            s
        };
        for free in 0..self.cols {
            if pivot_set[free] {
                continue;
            }
            let mut v = BitVector::zeros(self.cols);
            v.set(free, true);
            for (r, &p) in pivots.iter().enumerate() {
                if m.rows[r].get(free) {
                    v.set(p, true);
                }
            }
            basis.push(v);
        }
        BitMatrix { cols: self.cols, rows: basis }
    }

    /// Basis for the orthogonal complement of the row space under the
    /// standard inner product.
    pub fn orthogonal_complement(&self) -> BitMatrix {
        self.kernel()
    }

    /// Deletes column `i` from every row.
    pub fn delete_col(&self, i: usize) -> BitMatrix {
        BitMatrix {
            cols: self.cols - 1,
            rows: self.rows.iter().map(|r| r.delete(i)).collect(),
        }
    }

    /// True when every pair of rows (including each row with itself) has even
    /// overlap.
    pub fn is_self_orthogonal(&self) -> bool {
        self.rows
            .iter()
            .enumerate()
            .all(|(i, a)| self.rows[i..].iter().all(|b| !a.dot(b)))
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows.len(), self.cols)?;
        for r in &self.rows {
            writeln!(f, "  {r}")?;
        }
        write!(f, "]")
    }
}

/// Reduced echelon form with pivot bookkeeping, for repeated membership
/// tests and canonical coset representatives.
pub struct Echelon {
    rows: Vec<BitVector>,
    pivots: Vec<usize>,
}

impl Echelon {
    pub fn new(m: &BitMatrix) -> Self {
        let mut m = m.clone();
        let pivots = m.echelonize();
        Echelon { rows: m.rows, pivots }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `v` by the stored rows; the result is the canonical coset
    /// representative of `v` modulo the row space.
    pub fn reduce(&self, v: &BitVector) -> BitVector {
        let mut v = v.clone();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if v.get(p) {
                v.xor_assign(row);
            }
        }
        v
    }

    pub fn contains(&self, v: &BitVector) -> bool {
        self.reduce(v).is_zero()
    }
}

/// Minimum weight over `span(big) \ span(small)`, with the witness vector.
///
/// Walks the span of `big`'s row basis in Gray-code order so each step is a
/// single row XOR. Returns an error if the span exceeds the enumeration
/// budget (see [`enum_budget`]); `None` if the set difference is empty.
pub fn min_weight_coset(
    big: &BitMatrix,
    small: &BitMatrix,
    budget: u64,
) -> Result<Option<(usize, BitVector)>, Error> {
    let mut basis = big.clone();
    basis.echelonize();
    let dim = basis.num_rows();
    if dim >= 63 || (1u64 << dim) > budget {
        return Err(Error::BudgetExceeded {
            needed: if dim >= 63 { u64::MAX } else { 1 << dim },
            budget,
        });
    }
    let small_ech = Echelon::new(small);
    let mut current = BitVector::zeros(big.num_cols());
    let mut best: Option<(usize, BitVector)> = None;
    for g in 1u64..(1 << dim) {
        // Gray code: flip the basis row indexed by the lowest set bit of g.
        let bit = g.trailing_zeros() as usize;
        current.xor_assign(basis.row(bit));
        let w = current.weight();
        if best.as_ref().is_none_or(|(bw, _)| w < *bw) && !small_ech.contains(&current) {
            best = Some((w, current.clone()));
        }
    }
    Ok(best)
}

/// All vectors of the row space of `m`, in Gray-code enumeration order.
pub fn span_vectors(m: &BitMatrix, budget: u64) -> Result<Vec<BitVector>, Error> {
    let mut basis = m.clone();
    basis.echelonize();
    let dim = basis.num_rows();
    if dim >= 63 || (1u64 << dim) > budget {
        return Err(Error::BudgetExceeded {
            needed: if dim >= 63 { u64::MAX } else { 1 << dim },
            budget,
        });
    }
    let mut out = Vec::with_capacity(1 << dim);
    let mut current = BitVector::zeros(m.num_cols());
    out.push(current.clone());
    for g in 1u64..(1 << dim) {
        current.xor_assign(basis.row(g.trailing_zeros() as usize));
        out.push(current.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_and_weight() {
        let a = BitVector::from_str01("1100").unwrap();
        let b = BitVector::from_str01("0110").unwrap();
        assert!(a.dot(&b));
        assert!(!a.dot(&a));
        assert_eq!(a.weight(), 2);
        assert_eq!(a.xor(&b), BitVector::from_str01("1010").unwrap());
        assert_eq!(a.to_string(), "1100");
    }

    #[test]
    fn long_vectors_cross_word_boundaries() {
        let mut v = BitVector::zeros(130);
        v.set(0, true);
        v.set(64, true);
        v.set(129, true);
        assert_eq!(v.weight(), 3);
        assert_eq!(v.support(), vec![0, 64, 129]);
        let w = BitVector::from_support(130, &[64, 65]);
        assert!(v.dot(&w));
    }

    #[test]
    fn echelon_rank_kernel() {
        let m = BitMatrix::from_str01("1100\n0110\n1010").unwrap();
        assert_eq!(m.rank(), 2);
        let k = m.kernel();
        assert_eq!(k.num_rows(), 2);
        for kv in k.rows() {
            assert!(m.mul_vec(kv).is_zero());
        }
    }

    #[test]
    fn complement_dimension_and_orthogonality() {
        let m = BitMatrix::from_str01("1111").unwrap();
        let c = m.orthogonal_complement();
        assert_eq!(c.num_rows(), 3);
        for v in c.rows() {
            assert!(!v.dot(m.row(0)));
        }
    }

    #[test]
    fn coset_minimum_finds_distance_of_422() {
        let s = BitMatrix::from_str01("1111").unwrap();
        let sperp = s.orthogonal_complement();
        let (w, v) = min_weight_coset(&sperp, &s, 1 << 20).unwrap().unwrap();
        assert_eq!(w, 2);
        assert_eq!(v.weight(), 2);
    }

    #[test]
    fn coset_budget_enforced() {
        let m = BitMatrix::identity(30);
        assert!(min_weight_coset(&m, &BitMatrix::new(30), 1 << 10).is_err());
    }

    #[test]
    fn canonical_reduction_is_stable() {
        let m = BitMatrix::from_str01("1111\n0011").unwrap();
        let e = Echelon::new(&m);
        let v = BitVector::from_str01("1100").unwrap();
        assert!(e.contains(&v));
        let u = BitVector::from_str01("0111").unwrap();
        assert_eq!(e.reduce(&u), e.reduce(&BitVector::from_str01("1011").unwrap()));
    }
}
