//! Per-plane views of a point set. Every 4-set the construction produces
//! lies in a plane, so generation and counting are organized plane by plane
//! in plane-local indices (ascending, hence lexicographic).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{incidence, Incidence, PointSet};

/// `C(x, k)` tables for `k = 2, 3, 4` and the pair `[a, b]` at each colex
/// rank `C(b, 2) + a`.
pub(crate) struct Binom {
    pub c2: Vec<u32>,
    pub c3: Vec<u32>,
    pub c4: Vec<u64>,
    pub pairs: Vec<[u16; 2]>,
}

impl Binom {
    pub fn new(max: usize) -> Self {
        let x = |k: usize| k as u64;
        Self {
            c2: (0..=max).map(|k| (x(k) * x(k).saturating_sub(1) / 2) as u32).collect(),
            c3: (0..=max)
                .map(|k| (x(k) * x(k).saturating_sub(1) * x(k).saturating_sub(2) / 6) as u32)
                .collect(),
            c4: (0..=max)
                .map(|k| {
                    x(k) * x(k).saturating_sub(1) * x(k).saturating_sub(2) * x(k).saturating_sub(3)
                        / 24
                })
                .collect(),
            pairs: (1..max as u16)
                .flat_map(|b| (0..b).map(move |a| [a, b]))
                .collect(),
        }
    }
}

pub(crate) struct Layout<'a> {
    pub u: &'a PointSet,
    pub inc: Arc<Incidence>,
    pub q: u32,
    pub n: usize,
    pub line_n: Vec<u32>,
    pub plane_n: Vec<u32>,
    /// Offset of each line's block of `C(n_L, 3)` collinear triples.
    pub line_tri_off: Vec<u64>,
    pub binom: Binom,
}

impl<'a> Layout<'a> {
    pub fn new(u: &'a PointSet) -> Result<Self> {
        let ambient = u.ambient();
        if ambient.dim() != 3 {
            return Err(Error::InvalidDimension(ambient.dim()));
        }
        let inc = incidence(ambient)?;
        let q = ambient.q();
        let mut line_n = vec![0u32; inc.lines().len()];
        let mut plane_n = vec![0u32; inc.planes().len()];
        for p in u.points() {
            let i = p.index(q);
            for &l in inc.point_lines(i) {
                line_n[l as usize] += 1;
            }
            for &pl in inc.point_planes(i) {
                plane_n[pl as usize] += 1;
            }
        }
        let max = (q as usize * q as usize).max(4);
        let mut line_tri_off = Vec::with_capacity(line_n.len() + 1);
        let mut acc = 0u64;
        for &k in &line_n {
            line_tri_off.push(acc);
            let k = k as u64;
            acc += k * k.saturating_sub(1) * k.saturating_sub(2) / 6;
        }
        line_tri_off.push(acc);
        Ok(Self {
            u,
            inc,
            q,
            n: u.len(),
            line_n,
            plane_n,
            line_tri_off,
            binom: Binom::new(max),
        })
    }

    pub fn num_planes(&self) -> usize {
        self.plane_n.len()
    }

    pub fn plane(&self, plane: usize) -> PlaneCtx {
        PlaneCtx::new(self, plane)
    }
}

pub(crate) struct LocalLine {
    pub id: u32,
    /// Plane-local indices of the members, ascending.
    pub members: Vec<u16>,
    /// This plane is the lowest-numbered plane through the line.
    pub designated: bool,
}

pub(crate) struct PlaneCtx {
    pub id: usize,
    /// Positions in `U` of the plane's members, ascending.
    pub global: Vec<u32>,
    pub m: usize,
    pub lines: Vec<LocalLine>,
    /// Local line of each local pair, at colex index `C(b, 2) + a`.
    pub pair_line: Vec<u16>,
}

impl PlaneCtx {
    fn new(lay: &Layout, plane: usize) -> Self {
        let inc = &lay.inc;
        let amb = inc.plane_points(plane);
        let mut local_of = std::collections::HashMap::with_capacity(amb.len());
        let mut global = Vec::with_capacity(lay.plane_n[plane] as usize);
        for &a in amb {
            if let Some(pos) = lay.u.position_of_index(a as usize) {
                local_of.insert(a, global.len() as u16);
                global.push(pos as u32);
            }
        }
        let m = global.len();
        let mut lines = Vec::new();
        let mut pair_line = vec![u16::MAX; lay.binom.c2[m] as usize];
        for &l in inc.plane_lines(plane) {
            let pts = inc.line_points(l as usize);
            // Line and plane point lists are both ascending, so the k-th
            // member is also the k-th point of `U` on the line.
            let members: Vec<u16> = pts.iter().filter_map(|a| local_of.get(a).copied()).collect();
            if members.len() < 2 {
                continue;
            }
            let li = lines.len() as u16;
            for j in 1..members.len() {
                for i in 0..j {
                    let idx = lay.binom.c2[members[j] as usize] + members[i] as u32;
                    pair_line[idx as usize] = li;
                }
            }
            lines.push(LocalLine {
                id: l,
                members,
                designated: inc.line_planes(l as usize)[0] as usize == plane,
            });
        }
        Self {
            id: plane,
            global,
            m,
            lines,
            pair_line,
        }
    }

    /// Local line through local points `a < b`.
    #[inline]
    pub fn line(&self, c2: &[u32], a: usize, b: usize) -> usize {
        self.pair_line[c2[b] as usize + a] as usize
    }

    #[inline]
    pub fn line_of(&self, c2: &[u32], a: usize, b: usize) -> usize {
        if a < b {
            self.line(c2, a, b)
        } else {
            self.line(c2, b, a)
        }
    }
}
