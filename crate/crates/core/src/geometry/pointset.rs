use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::ffield::Point;

use super::flat::{Ambient, Flat};

/// Something points can be tested against.
pub trait Region {
    fn contains_point(&self, p: &Point) -> bool;
}

impl Region for Flat {
    fn contains_point(&self, p: &Point) -> bool {
        self.contains(p)
    }
}

impl Region for PointSet {
    fn contains_point(&self, p: &Point) -> bool {
        self.contains(p)
    }
}

impl Region for [Point] {
    fn contains_point(&self, p: &Point) -> bool {
        self.contains(p)
    }
}

/// Ambient spaces up to this many points get a direct lookup table.
const DENSE_LOOKUP_LIMIT: usize = 1 << 22;
const ABSENT: u32 = u32::MAX;

#[derive(Clone, Debug)]
enum Lookup {
    Dense(Vec<u32>),
    Sparse(HashMap<Point, u32>),
}

/// A finite subset of an ambient space, kept in lexicographic order.
#[derive(Clone, Debug)]
pub struct PointSet {
    ambient: Ambient,
    points: Vec<Point>,
    lookup: Lookup,
}

impl PartialEq for PointSet {
    fn eq(&self, other: &Self) -> bool {
        self.ambient == other.ambient && self.points == other.points
    }
}

impl Eq for PointSet {}

impl PointSet {
    /// Sorts `points`; duplicates and foreign points are errors.
    pub fn new(ambient: Ambient, mut points: Vec<Point>) -> Result<Self> {
        for p in &points {
            ambient.check(p)?;
        }
        points.sort_unstable();
        if let Some(w) = points.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicatePoint(w[0].to_string()));
        }
        Ok(Self::from_sorted(ambient, points))
    }

    fn from_sorted(ambient: Ambient, points: Vec<Point>) -> Self {
        let q = ambient.q();
        let lookup = if ambient.size() <= DENSE_LOOKUP_LIMIT {
            let mut table = vec![ABSENT; ambient.size()];
            for (i, p) in points.iter().enumerate() {
                table[p.index(q)] = i as u32;
            }
            Lookup::Dense(table)
        } else {
            Lookup::Sparse(points.iter().enumerate().map(|(i, p)| (*p, i as u32)).collect())
        };
        Self {
            ambient,
            points,
            lookup,
        }
    }

    pub fn empty(ambient: Ambient) -> Self {
        Self::from_sorted(ambient, Vec::new())
    }

    /// Every point of the ambient space.
    pub fn full(ambient: Ambient) -> Self {
        Self::from_sorted(ambient, ambient.points().collect())
    }

    /// Builds a set from ambient indices (any order, no duplicates).
    pub fn from_indices(ambient: Ambient, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.last().is_some_and(|&i| i >= ambient.size()) {
            return Err(Error::AmbientMismatch);
        }
        Ok(Self::from_sorted(
            ambient,
            indices.into_iter().map(|i| ambient.point_at(i)).collect(),
        ))
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn get(&self, i: usize) -> Point {
        self.points[i]
    }

    /// Position of `p` in the sorted member list.
    pub fn position(&self, p: &Point) -> Option<usize> {
        match &self.lookup {
            Lookup::Dense(t) => {
                if self.ambient.check(p).is_err() {
                    return None;
                }
                let i = t[p.index(self.ambient.q())];
                (i != ABSENT).then_some(i as usize)
            }
            Lookup::Sparse(m) => m.get(p).map(|&i| i as usize),
        }
    }

    /// Position of the point with ambient index `idx`, if it is a member.
    #[inline]
    pub fn position_of_index(&self, idx: usize) -> Option<usize> {
        match &self.lookup {
            Lookup::Dense(t) => {
                let i = t[idx];
                (i != ABSENT).then_some(i as usize)
            }
            Lookup::Sparse(m) => m
                .get(&self.ambient.point_at(idx))
                .map(|&i| i as usize),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.position(p).is_some()
    }

    /// `|U ∩ region|`.
    pub fn count_in<R: Region + ?Sized>(&self, region: &R) -> usize {
        self.points.iter().filter(|p| region.contains_point(p)).count()
    }

    pub fn subset(&self, positions: &[usize]) -> PointSet {
        let mut pts: Vec<Point> = positions.iter().map(|&i| self.points[i]).collect();
        pts.sort_unstable();
        pts.dedup();
        Self::from_sorted(self.ambient, pts)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.ambient.q(), self.ambient.dim());
        for p in &self.points {
            let _ = writeln!(s, "{p}");
        }
        s
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (ambient, _) = loop {
            let Some((i, line)) = lines.next() else {
                return Err(Error::Parse {
                    line: 1,
                    msg: "missing `q d` header".into(),
                });
            };
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let nums = parse_numbers(&line, i + 1)?;
            if nums.len() != 2 {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "header must be `q d`".into(),
                });
            }
            break (Ambient::new(nums[0], nums[1] as usize)?, i);
        };
        let mut points = Vec::new();
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let nums = parse_numbers(&line, i + 1)?;
            let p = ambient.point(&nums).map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
            points.push(p);
        }
        Self::new(ambient, points)
    }

    pub fn parse_text(s: &str) -> Result<Self> {
        Self::read_text(s.as_bytes())
    }
}

pub(crate) fn parse_numbers(line: &str, lineno: usize) -> Result<Vec<u32>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<u32>().map_err(|e| Error::Parse {
                line: lineno,
                msg: format!("`{t}`: {e}"),
            })
        })
        .collect()
}
