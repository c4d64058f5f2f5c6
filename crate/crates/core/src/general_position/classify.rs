use crate::error::{Error, Result};
use crate::ffield::{Point, PrimeField};
use crate::geometry::{combinations, incidence, Ambient, PointSet};

/// Largest number of subsets the exhaustive routines will enumerate.
const MAX_SUBSETS: u64 = 50_000_000;

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u128;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc.min(u64::MAX as u128) as u64
}

/// Determinant of a square matrix over `F_q` by elimination on a copy.
fn det(field: PrimeField, m: &mut [[u32; 3]], k: usize) -> u32 {
    let mut acc = 1;
    for col in 0..k {
        let Some(piv) = (col..k).find(|&r| m[r][col] != 0) else {
            return 0;
        };
        if piv != col {
            m.swap(piv, col);
            acc = field.neg(acc);
        }
        acc = field.mul(acc, m[col][col]);
        let inv = field.inv(m[col][col]).expect("nonzero pivot");
        for r in col + 1..k {
            let f = field.mul(m[r][col], inv);
            if f != 0 {
                for c in col..k {
                    m[r][c] = field.sub(m[r][c], field.mul(f, m[col][c]));
                }
            }
        }
    }
    acc
}

/// True when `pts` (exactly `d + 1` points of `F_q^d`) lie in a hyperplane.
pub fn is_degenerate_simplex(field: PrimeField, pts: &[Point]) -> bool {
    let d = pts.len() - 1;
    let mut m = [[0u32; 3]; 3];
    for r in 0..d {
        for c in 0..d {
            m[r][c] = field.sub(pts[r + 1].coord(c), pts[0].coord(c));
        }
    }
    det(field, &mut m, d) == 0
}

/// Checks every `(d+1)`-subset directly.
pub fn is_general_position_exhaustive(set: &PointSet) -> bool {
    let field = set.ambient().field();
    let d = set.ambient().dim();
    let pts = set.points();
    let n = pts.len();
    if n <= d {
        return true;
    }
    let mut idx: Vec<usize> = (0..=d).collect();
    let mut buf = vec![pts[0]; d + 1];
    loop {
        for (b, &i) in buf.iter_mut().zip(&idx) {
            *b = pts[i];
        }
        if is_degenerate_simplex(field, &buf) {
            return false;
        }
        if !next_combination(&mut idx, n) {
            return true;
        }
    }
}

/// Advances `idx` to the next increasing tuple below `n`, lexicographically.
pub(crate) fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Counts members on each hyperplane; fails as soon as one holds `d + 1`.
pub fn is_general_position_by_hyperplanes(set: &PointSet) -> Result<bool> {
    let ambient = set.ambient();
    let d = ambient.dim();
    let inc = incidence(ambient)?;
    let mut count = vec![0u8; inc.num_hyperplanes()];
    for p in set.points() {
        for &h in inc.point_hyperplanes(p.index(ambient.q())) {
            let c = &mut count[h as usize];
            *c += 1;
            if *c as usize > d {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// No `d + 1` members in a common hyperplane.
pub fn is_general_position(set: &PointSet) -> bool {
    let d = set.ambient().dim() as u64;
    if binomial(set.len() as u64, d + 1) > 2_000_000 {
        if let Ok(v) = is_general_position_by_hyperplanes(set) {
            return v;
        }
    }
    is_general_position_exhaustive(set)
}

/// The `i`-subsets of a point set split by whether they span an
/// `(i-1)`-flat. Subsets are increasing position lists into the set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsetClassification {
    pub i: usize,
    pub general: Vec<Vec<usize>>,
    pub degenerate: Vec<Vec<usize>>,
}

pub fn classify_subsets(set: &PointSet, i: usize) -> Result<SubsetClassification> {
    let d = set.ambient().dim();
    if i == 0 || i > d + 1 {
        return Err(Error::SubsetSize(i));
    }
    let n = set.len();
    let total = binomial(n as u64, i as u64);
    if total > MAX_SUBSETS {
        return Err(Error::TooLarge(format!("{total} subsets of size {i}")));
    }
    let ambient = set.ambient();
    let mut out = SubsetClassification {
        i,
        general: Vec::new(),
        degenerate: Vec::new(),
    };
    if n < i {
        return Ok(out);
    }
    let mut idx: Vec<usize> = (0..i).collect();
    let mut buf = Vec::with_capacity(i);
    loop {
        buf.clear();
        buf.extend(idx.iter().map(|&k| set.get(k)));
        if crate::geometry::span_dim(ambient, &buf) == i - 1 {
            out.general.push(idx.clone());
        } else {
            out.degenerate.push(idx.clone());
        }
        if !next_combination(&mut idx, n) {
            return Ok(out);
        }
    }
}

/// `{(x, x^2, ..., x^d) : x in F_q}`. For `q = d` the curve has only `d`
/// points, which is trivially in general position; smaller `q` is an error.
pub fn moment_curve(q: u32, d: usize) -> Result<PointSet> {
    let ambient = Ambient::new(q, d)?;
    if q < d as u32 {
        return Err(Error::FieldTooSmall { q, min: d as u32 });
    }
    let f = ambient.field();
    let pts = (0..q)
        .map(|x| {
            let c: Vec<u32> = (1..=d as u64).map(|k| f.pow(x, k)).collect();
            ambient.point(&c)
        })
        .collect::<Result<Vec<_>>>()?;
    PointSet::new(ambient, pts)
}

/// Rank of the `(d+1) x (d+1)` Vandermonde-type matrix for every choice of
/// `d + 1` curve parameters; cheaper than span computations for large `q`.
pub fn moment_curve_is_general_by_rank(q: u32, d: usize) -> Result<bool> {
    let field = PrimeField::new(q)?;
    for combo in combinations(q as usize, d + 1) {
        let rows: Vec<Vec<u32>> = combo
            .iter()
            .map(|&x| (0..=d as u64).map(|k| field.pow(x as u32, k)).collect())
            .collect();
        let sol = crate::ffield::solve_linear(field, &rows, &vec![0; d + 1])?;
        if sol.rank != d + 1 {
            return Ok(false);
        }
    }
    Ok(true)
}
