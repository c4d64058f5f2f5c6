//! Sinks turning generated planes into edge lists or degree maxima.

use super::generate::EdgeSink;
use super::layout::{Layout, PlaneCtx};

/// Edge count and `Δ_1, Δ_2, Δ_3`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DegreeStats {
    pub edges: u64,
    pub delta: [u64; 3],
}

/// Collects edges as sorted position quadruples into `U`.
#[derive(Default)]
pub(crate) struct EdgeList {
    map: Vec<u32>,
    pub edges: Vec<[u32; 4]>,
}

impl EdgeSink for EdgeList {
    fn begin_plane(&mut self, _: &Layout, ctx: &PlaneCtx) {
        self.map.clear();
        self.map.extend_from_slice(&ctx.global);
    }

    #[inline]
    fn edge(&mut self, a: usize, b: usize, c: usize, d: usize) {
        let m = &self.map;
        self.edges.push([m[a], m[b], m[c], m[d]]);
    }

    fn end_plane(&mut self, _: &Layout, _: &PlaneCtx) {}

    fn merge(&mut self, mut other: Self) {
        self.edges.append(&mut other.edges);
    }
}

impl EdgeList {
    pub fn into_sorted(mut self) -> Vec<[u32; 4]> {
        self.edges.sort_unstable();
        self.edges
    }
}

/// Plane-local triple counter cell.
pub(crate) trait Cell: Copy + Default + Send + 'static {
    fn bump(&mut self);
    fn get(self) -> u32;
}

impl Cell for u8 {
    #[inline]
    fn bump(&mut self) {
        *self += 1;
    }
    #[inline]
    fn get(self) -> u32 {
        self as u32
    }
}

impl Cell for u16 {
    #[inline]
    fn bump(&mut self) {
        *self += 1;
    }
    #[inline]
    fn get(self) -> u32 {
        self as u32
    }
}

/// Streaming degree counter. A non-collinear triple lies in one plane, so
/// its degree is complete once that plane is done. Pair degrees and
/// collinear triple degrees are summed over planes into global tables.
pub(crate) struct Degrees<T: Cell> {
    c2: Vec<u32>,
    c3: Vec<u32>,
    tri: Vec<T>,
    local_pairs: Vec<u32>,
    /// Global pair degrees at `C(j, 2) + i` for positions `i < j`.
    pairs: Vec<u32>,
    /// Collinear triple degrees per line block.
    collinear: Vec<u32>,
    edges: u64,
    max3: u32,
}

impl<T: Cell> Degrees<T> {
    pub fn new(lay: &Layout) -> Self {
        let n = lay.n as u64;
        let max_m = lay.plane_n.iter().copied().max().unwrap_or(0) as usize;
        Self {
            c2: lay.binom.c2.clone(),
            c3: lay.binom.c3.clone(),
            tri: vec![T::default(); lay.binom.c3[max_m] as usize],
            local_pairs: vec![0; lay.binom.c2[max_m] as usize],
            pairs: vec![0; (n * n.saturating_sub(1) / 2) as usize],
            collinear: vec![0; *lay.line_tri_off.last().unwrap_or(&0) as usize],
            edges: 0,
            max3: 0,
        }
    }

    pub fn finish(self, n: usize) -> DegreeStats {
        let mut point = vec![0u64; n];
        let mut max2 = 0u32;
        let mut idx = 0;
        for j in 0..n {
            for i in 0..j {
                let v = self.pairs[idx];
                idx += 1;
                max2 = max2.max(v);
                point[i] += v as u64;
                point[j] += v as u64;
            }
        }
        let max1 = point.iter().map(|&s| s / 3).max().unwrap_or(0);
        let max3 = self
            .collinear
            .iter()
            .copied()
            .max()
            .unwrap_or(0)
            .max(self.max3);
        DegreeStats {
            edges: self.edges,
            delta: [max1, max2 as u64, max3 as u64],
        }
    }
}

/// Largest `m` for which `u8` plane counters cannot overflow.
pub(crate) const U8_PLANE_LIMIT: usize = 255 + 3;

impl<T: Cell> EdgeSink for Degrees<T> {
    fn begin_plane(&mut self, _: &Layout, _: &PlaneCtx) {}

    #[inline]
    fn edge(&mut self, a: usize, b: usize, c: usize, d: usize) {
        let (c2, c3) = (&self.c2, &self.c3);
        let (ab, ac, bc) = (c2[b] + a as u32, c2[c] + a as u32, c2[c] + b as u32);
        let (c3c, c3d) = (c3[c], c3[d]);
        let t = &mut self.tri;
        t[(c3c + ab) as usize].bump();
        t[(c3d + ab) as usize].bump();
        t[(c3d + ac) as usize].bump();
        t[(c3d + bc) as usize].bump();
        self.edges += 1;
    }

    #[inline]
    fn block(&mut self, c: usize, d: usize, ranks: &[u32], pairs: &[[u16; 2]]) {
        let c3c = self.c3[c] as usize;
        let c3d = self.c3[d] as usize;
        let cd = c3d + self.c2[c] as usize;
        let t = &mut self.tri;
        for &p in ranks {
            let [a, b] = pairs[p as usize];
            t[c3c + p as usize].bump();
            t[c3d + p as usize].bump();
            t[cd + a as usize].bump();
            t[cd + b as usize].bump();
        }
        self.edges += ranks.len() as u64;
    }

    fn end_plane(&mut self, lay: &Layout, ctx: &PlaneCtx) {
        let m = ctx.m;
        let (c2, c3) = (&self.c2, &self.c3);
        let lp = &mut self.local_pairs[..c2[m] as usize];
        lp.fill(0);
        let mut max = 0u32;
        for c in 2..m {
            let c2c = c2[c] as usize;
            for b in 1..c {
                let c2b = c2[b] as usize;
                let base = (c3[c] + c2[b]) as usize;
                let mut sum_bc = 0;
                for a in 0..b {
                    let t = self.tri[base + a].get();
                    lp[c2b + a] += t;
                    lp[c2c + a] += t;
                    sum_bc += t;
                    max = max.max(t);
                }
                lp[c2c + b] += sum_bc;
            }
        }
        self.max3 = self.max3.max(max);

        // Triples on one line may also sit in edges of other planes.
        for line in &ctx.lines {
            let k = line.members.len();
            if k < 3 {
                continue;
            }
            let off = lay.line_tri_off[line.id as usize] as usize;
            let mem = &line.members;
            for z in 2..k {
                for y in 1..z {
                    for x in 0..y {
                        let local = c3[mem[z] as usize] + c2[mem[y] as usize] + mem[x] as u32;
                        let rank = c3[z] + c2[y] + x as u32;
                        self.collinear[off + rank as usize] += self.tri[local as usize].get();
                    }
                }
            }
        }

        let g = &ctx.global;
        for j in 1..m {
            let gj = g[j] as u64;
            let row = gj * (gj - 1) / 2;
            for i in 0..j {
                let v = lp[c2[j] as usize + i];
                if v != 0 {
                    self.pairs[(row + g[i] as u64) as usize] += v / 2;
                }
            }
        }
        self.tri[..c3[m] as usize].fill(T::default());
    }

    fn merge(&mut self, other: Self) {
        self.edges += other.edges;
        self.max3 = self.max3.max(other.max3);
        for (a, b) in self.pairs.iter_mut().zip(&other.pairs) {
            *a += b;
        }
        for (a, b) in self.collinear.iter_mut().zip(&other.collinear) {
            *a += b;
        }
    }
}

/// Feeds two sinks at once.
pub(crate) struct Tee<A, B>(pub A, pub B);

impl<A: EdgeSink, B: EdgeSink> EdgeSink for Tee<A, B> {
    fn begin_plane(&mut self, lay: &Layout, ctx: &PlaneCtx) {
        self.0.begin_plane(lay, ctx);
        self.1.begin_plane(lay, ctx);
    }

    #[inline]
    fn edge(&mut self, a: usize, b: usize, c: usize, d: usize) {
        self.0.edge(a, b, c, d);
        self.1.edge(a, b, c, d);
    }

    #[inline]
    fn block(&mut self, c: usize, d: usize, ranks: &[u32], pairs: &[[u16; 2]]) {
        self.0.block(c, d, ranks, pairs);
        self.1.block(c, d, ranks, pairs);
    }

    fn end_plane(&mut self, lay: &Layout, ctx: &PlaneCtx) {
        self.0.end_plane(lay, ctx);
        self.1.end_plane(lay, ctx);
    }

    fn merge(&mut self, other: Self) {
        self.0.merge(other.0);
        self.1.merge(other.1);
    }
}
