use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::geometry::{parse_numbers, Ambient, PointSet};

/// A 4-uniform hypergraph on a point set. Edges are sorted quadruples of
/// positions into the base set, stored sorted and without repeats.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupersatHypergraph {
    base: PointSet,
    edges: Vec<[u32; 4]>,
}

impl SupersatHypergraph {
    /// Sorts each edge and the edge list and drops repeats. Fails on an
    /// out-of-range position or an edge with a repeated vertex.
    pub fn new(base: PointSet, mut edges: Vec<[u32; 4]>) -> Result<Self> {
        for e in &mut edges {
            e.sort_unstable();
            if e[3] as usize >= base.len() {
                return Err(Error::SubsetSize(e[3] as usize));
            }
            if e.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::DuplicatePoint(format!("{e:?}")));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self { base, edges })
    }

    pub(crate) fn from_sorted(base: PointSet, edges: Vec<[u32; 4]>) -> Self {
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        Self { base, edges }
    }

    pub fn base(&self) -> &PointSet {
        &self.base
    }

    pub fn edges(&self) -> &[[u32; 4]] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// `d_H(S)` for every nonempty `S` of size at most 3 inside an edge.
    pub fn degree_index(&self) -> DegreeIndex {
        let mut by_size: [HashMap<Vec<u32>, u64>; 3] = Default::default();
        for e in &self.edges {
            for mask in 1u8..15 {
                let s: Vec<u32> = (0..4).filter(|k| mask >> k & 1 == 1).map(|k| e[k]).collect();
                *by_size[s.len() - 1].entry(s).or_default() += 1;
            }
        }
        DegreeIndex { by_size }
    }

    /// Text dump: header `q d n |H|`, `n` coordinate lines, then one edge
    /// per line as four positions into the point table. Trailing lines
    /// starting with `#` carry `key value` metadata.
    pub fn write_dump<W: Write>(&self, mut w: W, meta: &[(&str, String)]) -> Result<()> {
        let a = self.base.ambient();
        writeln!(w, "{} {} {} {}", a.q(), a.dim(), self.base.len(), self.edges.len())?;
        for p in self.base.points() {
            writeln!(w, "{p}")?;
        }
        for e in &self.edges {
            writeln!(w, "{} {} {} {}", e[0], e[1], e[2], e[3])?;
        }
        for (k, v) in meta {
            writeln!(w, "# {k} {v}")?;
        }
        Ok(())
    }

    /// Parses a dump, returning the hypergraph and its metadata lines.
    pub fn read_dump<R: BufRead>(r: R) -> Result<(Self, Vec<(String, String)>)> {
        let mut header = None;
        let mut points = Vec::new();
        let mut edges = Vec::new();
        let mut meta = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(rest) = t.strip_prefix('#') {
                let mut kv = rest.trim().splitn(2, char::is_whitespace);
                let k = kv.next().unwrap_or_default().to_string();
                meta.push((k, kv.next().unwrap_or_default().trim().to_string()));
                continue;
            }
            let nums = parse_numbers(t, i + 1)?;
            let Some((ambient, n, m)) = header else {
                if nums.len() != 4 {
                    return Err(Error::Parse {
                        line: i + 1,
                        msg: "header must be `q d n |H|`".into(),
                    });
                }
                let ambient = Ambient::new(nums[0], nums[1] as usize)?;
                header = Some((ambient, nums[2] as usize, nums[3] as usize));
                continue;
            };
            let bad = |msg: &str| Error::Parse {
                line: i + 1,
                msg: msg.into(),
            };
            if points.len() < n {
                let p = ambient.point(&nums).map_err(|e| bad(&e.to_string()))?;
                points.push(p);
            } else if edges.len() < m {
                if nums.len() != 4 {
                    return Err(bad("edge must have four positions"));
                }
                if nums.iter().any(|&x| x as usize >= n) {
                    return Err(bad("edge position out of range"));
                }
                edges.push([nums[0], nums[1], nums[2], nums[3]]);
            } else {
                return Err(bad("more lines than the header announces"));
            }
        }
        let Some((ambient, n, m)) = header else {
            return Err(Error::Parse {
                line: 1,
                msg: "missing header".into(),
            });
        };
        if points.len() != n || edges.len() != m {
            return Err(Error::Parse {
                line: 0,
                msg: format!(
                    "expected {n} points and {m} edges, found {} and {}",
                    points.len(),
                    edges.len()
                ),
            });
        }
        let base = PointSet::new(ambient, points)?;
        let h = Self::new(base, edges)?;
        if h.len() != m {
            return Err(Error::Parse {
                line: 0,
                msg: "repeated edges".into(),
            });
        }
        Ok((h, meta))
    }
}

/// Edge counts of the subsets of edges, by size.
#[derive(Clone, Debug, Default)]
pub struct DegreeIndex {
    by_size: [HashMap<Vec<u32>, u64>; 3],
}

impl DegreeIndex {
    /// `d_H(S)` for a sorted position list of size 1 to 3.
    pub fn degree(&self, s: &[u32]) -> u64 {
        match s.len() {
            1..=3 => self.by_size[s.len() - 1].get(s).copied().unwrap_or(0),
            _ => 0,
        }
    }

    /// Sum of `d_H(S)` over the `i`-subsets.
    pub fn total(&self, i: usize) -> u64 {
        self.by_size[i - 1].values().sum()
    }

    pub fn iter(&self, i: usize) -> impl Iterator<Item = (&Vec<u32>, u64)> {
        self.by_size[i - 1].iter().map(|(k, &v)| (k, v))
    }
}

const SUBSETS: [&[&[usize]]; 3] = [
    &[&[0], &[1], &[2], &[3]],
    &[&[0, 1], &[0, 2], &[0, 3], &[1, 2], &[1, 3], &[2, 3]],
    &[&[0, 1, 2], &[0, 1, 3], &[0, 2, 3], &[1, 2, 3]],
];

/// `Δ_i(H)` and the lexicographically least `i`-subset attaining it, by
/// sorting all `i`-subsets of all edges and counting runs. Returns `(0, [])`
/// for an empty hypergraph.
pub fn degree_profile(h: &SupersatHypergraph, i: usize) -> Result<(u64, Vec<u32>)> {
    if !(1..=3).contains(&i) {
        return Err(Error::SubsetSize(i));
    }
    let n = h.base.len() as u64;
    let bits = 64 - n.max(1).leading_zeros();
    if bits as usize * i > 64 {
        return Err(Error::TooLarge(format!("{n} points")));
    }
    let pack = |e: &[u32; 4], s: &[usize]| s.iter().fold(0u64, |acc, &k| acc << bits | e[k] as u64);
    let mut keys: Vec<u64> = Vec::with_capacity(h.edges.len() * SUBSETS[i - 1].len());
    for e in &h.edges {
        keys.extend(SUBSETS[i - 1].iter().map(|s| pack(e, s)));
    }
    keys.sort_unstable();
    let mut best = (0u64, 0u64);
    let mut k = 0;
    while k < keys.len() {
        let mut j = k;
        while j < keys.len() && keys[j] == keys[k] {
            j += 1;
        }
        if (j - k) as u64 > best.0 {
            best = ((j - k) as u64, keys[k]);
        }
        k = j;
    }
    if best.0 == 0 {
        return Ok((0, Vec::new()));
    }
    let mask = (1u64 << bits) - 1;
    let witness = (0..i)
        .rev()
        .map(|s| (best.1 >> (bits as usize * s) & mask) as u32)
        .collect();
    Ok((best.0, witness))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng as _, SeedableRng};

    fn base() -> PointSet {
        PointSet::full(Ambient::new(5, 3).unwrap())
    }

    #[test]
    fn shared_triple_has_degree_two() {
        let h = SupersatHypergraph::new(base(), vec![[0, 1, 2, 3], [0, 1, 2, 7]]).unwrap();
        assert_eq!(degree_profile(&h, 3).unwrap(), (2, vec![0, 1, 2]));
        assert_eq!(degree_profile(&h, 2).unwrap(), (2, vec![0, 1]));
        assert_eq!(degree_profile(&h, 1).unwrap(), (2, vec![0]));
    }

    #[test]
    fn single_edge_has_unit_degrees() {
        let h = SupersatHypergraph::new(base(), vec![[9, 4, 6, 1]]).unwrap();
        assert_eq!(h.edges(), &[[1, 4, 6, 9]]);
        for i in 1..=3 {
            assert_eq!(degree_profile(&h, i).unwrap().0, 1);
        }
        let empty = SupersatHypergraph::new(base(), vec![]).unwrap();
        assert_eq!(degree_profile(&empty, 2).unwrap(), (0, vec![]));
        assert!(degree_profile(&h, 4).is_err());
    }

    #[test]
    fn index_totals_match_edge_count() {
        let mut r = crate::rng::Rng::seed_from_u64(1);
        let edges: Vec<[u32; 4]> = (0..300)
            .map(|_| {
                let mut e = [0u32; 4];
                let mut k = 0;
                while k < 4 {
                    let x = r.random_range(0..125);
                    if !e[..k].contains(&x) {
                        e[k] = x;
                        k += 1;
                    }
                }
                e
            })
            .collect();
        let h = SupersatHypergraph::new(base(), edges).unwrap();
        let idx = h.degree_index();
        assert_eq!(idx.total(1), 4 * h.len() as u64);
        assert_eq!(idx.total(2), 6 * h.len() as u64);
        assert_eq!(idx.total(3), 4 * h.len() as u64);
        for i in 1..=3 {
            let (max, w) = degree_profile(&h, i).unwrap();
            assert_eq!(idx.degree(&w), max);
            assert_eq!(idx.iter(i).map(|(_, v)| v).max().unwrap(), max);
        }
    }

    #[test]
    fn dump_roundtrip() {
        let h = SupersatHypergraph::new(base(), vec![[0, 1, 2, 3], [5, 6, 7, 8]]).unwrap();
        let mut buf = Vec::new();
        h.write_dump(&mut buf, &[("seed", "17".into())]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("5 3 125 2\n0 0 0\n"));
        let (back, meta) = SupersatHypergraph::read_dump(&buf[..]).unwrap();
        assert_eq!(back, h);
        assert_eq!(meta, vec![("seed".to_string(), "17".to_string())]);
    }

    #[test]
    fn malformed_dumps_rejected() {
        let bad = ["5 3 1 1\n0 0 0\n0 0 0 0\n", "5 3 2 1\n0 0 0\n", "5 3\n", "5 3 2 1\n0 0 0\n0 0 1\n0 1 2\n"];
        for s in bad {
            assert!(SupersatHypergraph::read_dump(s.as_bytes()).is_err(), "{s:?}");
        }
    }
}
