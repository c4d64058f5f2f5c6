//! Arithmetic in a prime field `F_q` and points of `F_q^d`.
//!
//! Residues are stored as `u32` but always fit in 16 bits (`q < 2^16`), so a
//! product of two residues never overflows a `u32`.

use std::fmt;

use crate::error::{Error, Result};

/// Largest admissible modulus (exclusive upper bound on residues is `q`).
pub const MAX_MODULUS: u32 = 1 << 16;

fn is_prime(q: u32) -> bool {
    if q < 2 {
        return false;
    }
    let mut f = 2u32;
    while f * f <= q {
        if q.is_multiple_of(f) {
            return false;
        }
        f += 1;
    }
    true
}

/// The prime field `F_q`. Construction checks primality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrimeField {
    q: u32,
}

impl PrimeField {
    pub fn new(q: u32) -> Result<Self> {
        if q > MAX_MODULUS {
            return Err(Error::ModulusTooLarge(q));
        }
        if !is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        Ok(Self { q })
    }

    #[inline]
    pub fn order(self) -> u32 {
        self.q
    }

    /// Wraps an arbitrary integer into a field element.
    pub fn element(self, value: u64) -> FieldElement {
        FieldElement {
            value: (value % self.q as u64) as u32,
            modulus: self.q,
        }
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
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
        a * b % self.q
    }

    pub fn pow(self, mut base: u32, mut exp: u64) -> u32 {
        let mut acc = 1 % self.q;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via the extended Euclidean algorithm.
    pub fn inv(self, a: u32) -> Result<u32> {
        if a.is_multiple_of(self.q) {
            return Err(Error::ZeroInverse);
        }
        let (mut r0, mut r1) = (self.q as i64, (a % self.q) as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let k = r0 / r1;
            (r0, r1) = (r1, r0 - k * r1);
            (t0, t1) = (t1, t0 - k * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(t0.rem_euclid(self.q as i64) as u32)
    }
}

/// A residue together with its modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement {
    value: u32,
    modulus: u32,
}

impl FieldElement {
    pub fn new(field: PrimeField, value: u32) -> Result<Self> {
        if value >= field.q {
            return Err(Error::ResidueOutOfRange {
                value,
                modulus: field.q,
            });
        }
        Ok(Self {
            value,
            modulus: field.q,
        })
    }

    pub fn value(self) -> u32 {
        self.value
    }

    pub fn modulus(self) -> u32 {
        self.modulus
    }

    fn field(self) -> PrimeField {
        PrimeField { q: self.modulus }
    }

    fn check(self, other: Self) -> Result<PrimeField> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch(self.modulus, other.modulus));
        }
        Ok(self.field())
    }

    fn with(self, value: u32) -> Self {
        Self {
            value,
            modulus: self.modulus,
        }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

pub fn field_add(a: FieldElement, b: FieldElement) -> Result<FieldElement> {
    let f = a.check(b)?;
    Ok(a.with(f.add(a.value, b.value)))
}

pub fn field_sub(a: FieldElement, b: FieldElement) -> Result<FieldElement> {
    let f = a.check(b)?;
    Ok(a.with(f.sub(a.value, b.value)))
}

pub fn field_mul(a: FieldElement, b: FieldElement) -> Result<FieldElement> {
    let f = a.check(b)?;
    Ok(a.with(f.mul(a.value, b.value)))
}

pub fn field_inv(a: FieldElement) -> Result<FieldElement> {
    Ok(a.with(a.field().inv(a.value)?))
}

/// A point of `F_q^d` for `d` in `{2, 3}`.
///
/// Only the residues are stored; the modulus lives with the ambient space.
/// Derived ordering is lexicographic on residues, which is the single
/// tie-breaking order used throughout the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    coords: [u16; 3],
    dim: u8,
}

impl Point {
    pub fn new(field: PrimeField, coords: &[u32]) -> Result<Self> {
        let dim = coords.len();
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidDimension(dim));
        }
        let mut c = [0u16; 3];
        for (slot, &v) in c.iter_mut().zip(coords) {
            if v >= field.order() {
                return Err(Error::ResidueOutOfRange {
                    value: v,
                    modulus: field.order(),
                });
            }
            *slot = v as u16;
        }
        Ok(Self {
            coords: c,
            dim: dim as u8,
        })
    }

    /// Builds a point from residues already known to be reduced.
    pub(crate) fn from_reduced(coords: &[u32]) -> Self {
        let mut c = [0u16; 3];
        for (slot, &v) in c.iter_mut().zip(coords) {
            *slot = v as u16;
        }
        Self {
            coords: c,
            dim: coords.len() as u8,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coord(&self, i: usize) -> u32 {
        self.coords[i] as u32
    }

    pub fn coords(&self) -> Vec<u32> {
        (0..self.dim()).map(|i| self.coord(i)).collect()
    }

    pub fn element(&self, field: PrimeField, i: usize) -> FieldElement {
        FieldElement {
            value: self.coord(i),
            modulus: field.order(),
        }
    }

    /// Lexicographic rank of the point among all `q^d` points.
    #[inline]
    pub fn index(&self, q: u32) -> usize {
        let mut idx = 0usize;
        for i in 0..self.dim() {
            idx = idx * q as usize + self.coords[i] as usize;
        }
        idx
    }

    pub fn from_index(q: u32, dim: usize, mut index: usize) -> Self {
        let mut c = [0u16; 3];
        for i in (0..dim).rev() {
            c[i] = (index % q as usize) as u16;
            index /= q as usize;
        }
        Self {
            coords: c,
            dim: dim as u8,
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}", self.coords[i])?;
        }
        Ok(())
    }
}

/// Reduces `rows` in place to reduced row echelon form and returns the pivot
/// columns. Zero rows are dropped, so on return `rows.len()` is the rank.
pub fn row_reduce(field: PrimeField, rows: &mut Vec<Vec<u32>>) -> Vec<usize> {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        let Some(sel) = (r..rows.len()).find(|&i| rows[i][col] != 0) else {
            continue;
        };
        rows.swap(r, sel);
        let inv = field.inv(rows[r][col]).expect("pivot is nonzero");
        for v in rows[r].iter_mut() {
            *v = field.mul(*v, inv);
        }
        for i in 0..rows.len() {
            if i != r && rows[i][col] != 0 {
                let factor = rows[i][col];
                for j in 0..ncols {
                    let t = field.mul(factor, rows[r][j]);
                    rows[i][j] = field.sub(rows[i][j], t);
                }
            }
        }
        pivots.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    pivots
}

/// Description of the solution set of `A x = b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearSolution {
    pub rank: usize,
    /// `None` when the system is inconsistent.
    pub particular: Option<Vec<u32>>,
    /// One basis vector per free column, in increasing column order. Each has
    /// a 1 in its free column and zeros in the other free columns.
    pub kernel: Vec<Vec<u32>>,
}

/// Solves `A x = b` over `F_q` through the reduced row echelon form.
pub fn solve_linear(field: PrimeField, matrix: &[Vec<u32>], rhs: &[u32]) -> Result<LinearSolution> {
    if matrix.len() != rhs.len() {
        return Err(Error::DimensionMismatch {
            expected: matrix.len(),
            found: rhs.len(),
        });
    }
    let ncols = matrix.first().map_or(0, Vec::len);
    if let Some(bad) = matrix.iter().find(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch {
            expected: ncols,
            found: bad.len(),
        });
    }
    let mut aug: Vec<Vec<u32>> = matrix
        .iter()
        .zip(rhs)
        .map(|(row, &b)| {
            let mut r: Vec<u32> = row.iter().map(|&v| v % field.order()).collect();
            r.push(b % field.order());
            r
        })
        .collect();
    let pivots = row_reduce(field, &mut aug);
    let inconsistent = pivots.last() == Some(&ncols);
    let coeff_pivots: Vec<usize> = pivots.iter().copied().filter(|&c| c < ncols).collect();
    let rank = coeff_pivots.len();

    let particular = (!inconsistent).then(|| {
        let mut x = vec![0u32; ncols];
        for (row, &pc) in aug.iter().zip(&coeff_pivots) {
            x[pc] = row[ncols];
        }
        x
    });

    let free: Vec<usize> = (0..ncols).filter(|c| !coeff_pivots.contains(c)).collect();
    let kernel = free
        .iter()
        .map(|&fc| {
            let mut v = vec![0u32; ncols];
            v[fc] = 1;
            for (row, &pc) in aug.iter().zip(&coeff_pivots) {
                v[pc] = field.neg(row[fc]);
            }
            v
        })
        .collect();

    Ok(LinearSolution {
        rank,
        particular,
        kernel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fe(q: u32, v: u32) -> FieldElement {
        FieldElement::new(PrimeField::new(q).unwrap(), v).unwrap()
    }

    #[test]
    fn rejects_composite_and_oversized_moduli() {
        assert!(matches!(PrimeField::new(4), Err(Error::NotPrime(4))));
        assert!(matches!(PrimeField::new(1), Err(Error::NotPrime(1))));
        assert!(PrimeField::new(65521).is_ok());
        assert!(matches!(
            PrimeField::new(70001),
            Err(Error::ModulusTooLarge(_))
        ));
    }

    #[test]
    fn add_examples() {
        assert_eq!(field_add(fe(5, 3), fe(5, 4)).unwrap().value(), 2);
        assert_eq!(field_add(fe(7, 0), fe(7, 5)).unwrap().value(), 5);
        assert_eq!(field_add(fe(11, 10), fe(11, 1)).unwrap().value(), 0);
        assert!(matches!(
            field_add(fe(5, 1), fe(7, 1)),
            Err(Error::ModulusMismatch(5, 7))
        ));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(field_inv(fe(5, 2)).unwrap().value(), 3);
        assert_eq!(field_inv(fe(5, 1)).unwrap().value(), 1);
        assert_eq!(field_inv(fe(7, 4)).unwrap().value(), 2);
        assert!(matches!(field_inv(fe(7, 0)), Err(Error::ZeroInverse)));
    }

    #[test]
    fn inverse_table_matches_exhaustive_search() {
        for q in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31] {
            let f = PrimeField::new(q).unwrap();
            for a in 1..q {
                let brute = (1..q).find(|&b| a * b % q == 1).unwrap();
                assert_eq!(f.inv(a).unwrap(), brute, "q={q} a={a}");
            }
        }
    }

    #[test]
    fn field_axioms_exhaustive_small_q() {
        for q in [2u32, 3, 5, 7, 11, 13] {
            let f = PrimeField::new(q).unwrap();
            for a in 0..q {
                for b in 0..q {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    assert_eq!(f.sub(f.add(a, b), b), a);
                    for c in 0..q {
                        assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                }
            }
        }
    }

    #[test]
    fn point_index_roundtrip_is_lexicographic() {
        let f = PrimeField::new(5).unwrap();
        let mut prev: Option<Point> = None;
        for idx in 0..125 {
            let p = Point::from_index(5, 3, idx);
            assert_eq!(p.index(5), idx);
            assert_eq!(Point::new(f, &p.coords()).unwrap(), p);
            if let Some(pp) = prev {
                assert!(pp < p);
            }
            prev = Some(p);
        }
        assert!(Point::new(f, &[1, 5, 0]).is_err());
        assert!(Point::new(f, &[1]).is_err());
    }

    #[test]
    fn solve_identity_system() {
        let f = PrimeField::new(5).unwrap();
        let id = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
        let s = solve_linear(f, &id, &[1, 2, 3]).unwrap();
        assert_eq!(s.rank, 3);
        assert_eq!(s.particular, Some(vec![1, 2, 3]));
        assert!(s.kernel.is_empty());
    }

    #[test]
    fn solve_zero_system() {
        let f = PrimeField::new(3).unwrap();
        let z = vec![vec![0, 0], vec![0, 0]];
        let s = solve_linear(f, &z, &[0, 0]).unwrap();
        assert_eq!(s.rank, 0);
        assert_eq!(s.kernel, vec![vec![1, 0], vec![0, 1]]);
        let s = solve_linear(f, &z, &[1, 0]).unwrap();
        assert_eq!(s.particular, None);
    }

    #[test]
    fn kernel_vectors_are_annihilated() {
        let f = PrimeField::new(7).unwrap();
        let a = vec![vec![1, 2, 3, 4], vec![2, 5, 6, 1]];
        let s = solve_linear(f, &a, &[0, 0]).unwrap();
        assert_eq!(s.rank, 2);
        for v in &s.kernel {
            for row in &a {
                let dot = row.iter().zip(v).fold(0, |acc, (&x, &y)| f.add(acc, f.mul(x, y)));
                assert_eq!(dot, 0);
            }
        }
    }

    /// Determinant by cofactor expansion; independent of row reduction.
    fn det(f: PrimeField, m: &[Vec<u32>]) -> u32 {
        if m.len() == 1 {
            return m[0][0];
        }
        let mut acc = 0;
        for j in 0..m.len() {
            let minor: Vec<Vec<u32>> = m[1..]
                .iter()
                .map(|r| r.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &v)| v).collect())
                .collect();
            let term = f.mul(m[0][j], det(f, &minor));
            acc = if j % 2 == 0 { f.add(acc, term) } else { f.sub(acc, term) };
        }
        acc
    }

    #[test]
    fn vandermonde_rows_have_full_rank() {
        let f = PrimeField::new(7).unwrap();
        for a in 0..7u32 {
            for b in a + 1..7 {
                for c in b + 1..7 {
                    for d in c + 1..7 {
                        let m: Vec<Vec<u32>> = [a, b, c, d]
                            .iter()
                            .map(|&x| (0..4).map(|k| f.pow(x, k)).collect())
                            .collect();
                        let prod = [(a, b), (a, c), (a, d), (b, c), (b, d), (c, d)]
                            .iter()
                            .fold(1, |acc, &(x, y)| f.mul(acc, f.sub(y, x)));
                        assert_eq!(det(f, &m), prod);
                        assert_ne!(prod, 0);
                        let s = solve_linear(f, &m, &[0; 4]).unwrap();
                        assert_eq!(s.rank, 4);
                    }
                }
            }
        }
    }

    #[test]
    fn row_reduction_is_idempotent() {
        let f = PrimeField::new(11).unwrap();
        let mut m = vec![vec![3, 1, 4, 1], vec![5, 9, 2, 6], vec![8, 10, 6, 7]];
        row_reduce(f, &mut m);
        let once = m.clone();
        row_reduce(f, &mut m);
        assert_eq!(m, once);
    }
}
