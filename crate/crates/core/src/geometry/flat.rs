use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::ffield::{row_reduce, Point, PrimeField};

/// The affine space `F_q^d`, `d` in `{2, 3}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ambient {
    field: PrimeField,
    dim: u8,
}

impl Ambient {
    pub fn new(q: u32, d: usize) -> Result<Self> {
        let field = PrimeField::new(q)?;
        if !(2..=3).contains(&d) {
            return Err(Error::InvalidDimension(d));
        }
        Ok(Self {
            field,
            dim: d as u8,
        })
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }

    #[inline]
    pub fn q(&self) -> u32 {
        self.field.order()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    /// Number of points, `q^d`.
    pub fn size(&self) -> usize {
        (self.q() as usize).pow(self.dim as u32)
    }

    pub fn point(&self, coords: &[u32]) -> Result<Point> {
        if coords.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: coords.len(),
            });
        }
        Point::new(self.field, coords)
    }

    #[inline]
    pub fn point_at(&self, index: usize) -> Point {
        Point::from_index(self.q(), self.dim(), index)
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.size()).map(move |i| self.point_at(i))
    }

    pub(crate) fn check(&self, p: &Point) -> Result<()> {
        if p.dim() != self.dim() || (0..p.dim()).any(|i| p.coord(i) >= self.q()) {
            return Err(Error::AmbientMismatch);
        }
        Ok(())
    }
}

/// An affine subspace in canonical form: the lexicographically least point
/// as base, and the direction space as a reduced row echelon basis.
///
/// Two `Flat`s compare equal exactly when they contain the same points.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Flat {
    ambient: Ambient,
    dim: u8,
    base: Point,
    dirs: [[u16; 3]; 3],
}

impl fmt::Debug for Flat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Flat{{dim {}, base ({})", self.dim, self.base)?;
        for r in 0..self.dim() {
            write!(f, ", dir {:?}", &self.dirs[r][..self.ambient.dim()])?;
        }
        f.write_str("}")
    }
}

impl Flat {
    /// Builds the canonical flat `base + span(directions)`.
    pub fn from_parts(ambient: Ambient, base: Point, directions: Vec<Vec<u32>>) -> Self {
        let field = ambient.field();
        let d = ambient.dim();
        let mut rows = directions;
        let pivots = if rows.is_empty() {
            Vec::new()
        } else {
            row_reduce(field, &mut rows)
        };
        let mut b: Vec<u32> = base.coords();
        for (row, &pc) in rows.iter().zip(&pivots) {
            let t = b[pc];
            if t != 0 {
                for j in 0..d {
                    b[j] = field.sub(b[j], field.mul(t, row[j]));
                }
            }
        }
        let mut dirs = [[0u16; 3]; 3];
        for (slot, row) in dirs.iter_mut().zip(&rows) {
            for j in 0..d {
                slot[j] = row[j] as u16;
            }
        }
        Self {
            ambient,
            dim: rows.len() as u8,
            base: Point::from_reduced(&b),
            dirs,
        }
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn base(&self) -> Point {
        self.base
    }

    pub fn directions(&self) -> Vec<Vec<u32>> {
        (0..self.dim())
            .map(|r| (0..self.ambient.dim()).map(|j| self.dirs[r][j] as u32).collect())
            .collect()
    }

    /// `q^dim`.
    pub fn size(&self) -> usize {
        (self.ambient.q() as usize).pow(self.dim as u32)
    }

    fn pivot(&self, r: usize) -> usize {
        (0..self.ambient.dim())
            .find(|&j| self.dirs[r][j] != 0)
            .expect("echelon rows are nonzero")
    }

    pub fn contains(&self, p: &Point) -> bool {
        let field = self.ambient.field();
        let d = self.ambient.dim();
        if p.dim() != d {
            return false;
        }
        let mut v: Vec<u32> = (0..d).map(|j| field.sub(p.coord(j), self.base.coord(j))).collect();
        for r in 0..self.dim() {
            let t = v[self.pivot(r)];
            if t != 0 {
                for j in 0..d {
                    v[j] = field.sub(v[j], field.mul(t, self.dirs[r][j] as u32));
                }
            }
        }
        v.iter().all(|&x| x == 0)
    }

    /// All points of the flat, in lexicographic order.
    pub fn points(&self) -> Vec<Point> {
        let field = self.ambient.field();
        let q = self.ambient.q();
        let d = self.ambient.dim();
        let k = self.dim();
        let total = self.size();
        let mut out = Vec::with_capacity(total);
        let mut coeffs = vec![0u32; k];
        for _ in 0..total {
            let mut c: Vec<u32> = self.base.coords();
            for (r, &t) in coeffs.iter().enumerate() {
                for j in 0..d {
                    c[j] = field.add(c[j], field.mul(t, self.dirs[r][j] as u32));
                }
            }
            out.push(Point::from_reduced(&c));
            for t in coeffs.iter_mut().rev() {
                *t += 1;
                if *t < q {
                    break;
                }
                *t = 0;
            }
        }
        out
    }
}

/// The smallest flat containing every point of `points`.
pub fn affine_span(ambient: Ambient, points: &[Point]) -> Result<Flat> {
    let (first, rest) = points.split_first().ok_or(Error::EmptyInput)?;
    ambient.check(first)?;
    let field = ambient.field();
    let mut rows = Vec::with_capacity(rest.len());
    for p in rest {
        ambient.check(p)?;
        rows.push(
            (0..ambient.dim())
                .map(|j| field.sub(p.coord(j), first.coord(j)))
                .collect(),
        );
    }
    Ok(Flat::from_parts(ambient, *first, rows))
}

/// Dimension of the affine span of `points` (which must be nonempty).
pub(crate) fn span_dim(ambient: Ambient, points: &[Point]) -> usize {
    let field = ambient.field();
    let first = points[0];
    let mut rows: Vec<Vec<u32>> = points[1..]
        .iter()
        .map(|p| {
            (0..ambient.dim())
                .map(|j| field.sub(p.coord(j), first.coord(j)))
                .collect()
        })
        .collect();
    if rows.is_empty() {
        return 0;
    }
    row_reduce(field, &mut rows);
    rows.len()
}

/// Every `i`-flat containing `k`, where `dim(k) = i - 1`, in canonical order.
pub fn flats_through(k: &Flat, i: usize) -> Result<Vec<Flat>> {
    let ambient = k.ambient();
    if i != k.dim() + 1 || i > ambient.dim() {
        return Err(Error::FlatDimension(i));
    }
    let mut out = BTreeSet::new();
    let dirs = k.directions();
    for v in projective_vectors(ambient) {
        let mut rows = dirs.clone();
        rows.push(v);
        let f = Flat::from_parts(ambient, k.base(), rows);
        if f.dim() == i {
            out.insert(f);
        }
    }
    Ok(out.into_iter().collect())
}

/// Nonzero vectors of `F_q^d` normalized so the first nonzero entry is 1.
fn projective_vectors(ambient: Ambient) -> impl Iterator<Item = Vec<u32>> {
    let q = ambient.q();
    let d = ambient.dim();
    (1..ambient.size()).filter_map(move |idx| {
        let p = Point::from_index(q, d, idx);
        let c = p.coords();
        (c.iter().find(|&&x| x != 0) == Some(&1)).then_some(c)
    })
}

/// `K_A` minus the spans of all proper nonempty subsets of `A`, for `A` with
/// two or three points in general position.
pub fn punctured_flat(ambient: Ambient, a: &[Point]) -> Result<Vec<Point>> {
    if !(2..=3).contains(&a.len()) {
        return Err(Error::SubsetSize(a.len()));
    }
    let span = affine_span(ambient, a)?;
    if span.dim() != a.len() - 1 {
        return Err(Error::Degenerate {
            expected: a.len() - 1,
            found: span.dim(),
        });
    }
    let mut removed: Vec<Flat> = Vec::new();
    for mask in 1..(1u32 << a.len()) - 1 {
        let sub: Vec<Point> = (0..a.len())
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| a[i])
            .collect();
        removed.push(affine_span(ambient, &sub)?);
    }
    Ok(span
        .points()
        .into_iter()
        .filter(|p| !removed.iter().any(|f| f.contains(p)))
        .collect())
}

/// Every `i`-flat of the ambient space exactly once, in canonical order.
pub fn enumerate_flats(ambient: Ambient, i: usize) -> Result<Vec<Flat>> {
    let d = ambient.dim();
    if i > d {
        return Err(Error::FlatDimension(i));
    }
    let q = ambient.q();
    let mut out = Vec::new();
    for pivots in combinations(d, i) {
        // Free entries: row r, columns after pivot r that are not pivots.
        let free: Vec<(usize, usize)> = (0..i)
            .flat_map(|r| {
                let pv = &pivots;
                (pivots[r] + 1..d)
                    .filter(move |c| !pv.contains(c))
                    .map(move |c| (r, c))
            })
            .collect();
        let non_pivot: Vec<usize> = (0..d).filter(|c| !pivots.contains(c)).collect();
        let n_sub = (q as usize).pow(free.len() as u32);
        let n_base = (q as usize).pow(non_pivot.len() as u32);
        for s in 0..n_sub {
            let mut dirs = [[0u16; 3]; 3];
            for (r, &pc) in pivots.iter().enumerate() {
                dirs[r][pc] = 1;
            }
            let mut code = s;
            for &(r, c) in free.iter().rev() {
                dirs[r][c] = (code % q as usize) as u16;
                code /= q as usize;
            }
            for b in 0..n_base {
                let mut base = [0u32; 3];
                let mut code = b;
                for &c in non_pivot.iter().rev() {
                    base[c] = (code % q as usize) as u32;
                    code /= q as usize;
                }
                out.push(Flat {
                    ambient,
                    dim: i as u8,
                    base: Point::from_reduced(&base[..d]),
                    dirs,
                });
            }
        }
    }
    out.sort();
    Ok(out)
}

pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// For a line `k` of `F_q^3`: the `q + 1` planes through it, each paired with
/// its points off the line. The point sets partition `F_q^3 \ k`.
pub fn partition_complement_by_planes(k: &Flat) -> Result<Vec<(Flat, Vec<Point>)>> {
    if k.dim() != 1 || k.ambient().dim() != 3 {
        return Err(Error::FlatDimension(k.dim()));
    }
    Ok(flats_through(k, 2)?
        .into_iter()
        .map(|p| {
            let pts = p.points().into_iter().filter(|x| !k.contains(x)).collect();
            (p, pts)
        })
        .collect())
}
