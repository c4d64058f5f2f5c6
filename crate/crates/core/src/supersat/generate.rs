//! Per-plane edge generation. Each plane draws from its own stream keyed by
//! `(attempt seed, plane id)` and hands sorted local quadruples to a sink.

use rand::Rng as _;
use rand::RngCore;

use crate::par;
use crate::rng::{self, Rng};

use super::layout::{Layout, PlaneCtx};
use super::plan::{for_each_triangle, Case, CasePlan};

/// Receives the edges of one plane at a time, in plane-local indices.
pub(crate) trait EdgeSink: Send + Sized {
    fn begin_plane(&mut self, lay: &Layout, ctx: &PlaneCtx);
    fn edge(&mut self, a: usize, b: usize, c: usize, d: usize);
    /// Edges `{a, b, c, d}` for each colex pair rank in `ranks`, all below
    /// `C(c, 2)`; `pairs` decodes a rank into `[a, b]`.
    #[inline]
    fn block(&mut self, c: usize, d: usize, ranks: &[u32], pairs: &[[u16; 2]]) {
        for &p in ranks {
            let [a, b] = pairs[p as usize];
            self.edge(a as usize, b as usize, c, d);
        }
    }
    fn end_plane(&mut self, lay: &Layout, ctx: &PlaneCtx);
    fn merge(&mut self, other: Self);
}

/// Gap sampler for Bernoulli(p) trials: the number of failures before the
/// next success.
#[derive(Clone, Copy)]
pub(crate) struct Skip {
    log_fail: f64,
    always: bool,
}

impl Skip {
    pub fn new(p: f64) -> Self {
        debug_assert!(p > 0.0 && p <= 1.0);
        Self {
            log_fail: (-p).ln_1p(),
            always: p >= 1.0,
        }
    }

    #[inline]
    pub fn gap(&self, r: &mut Rng) -> u64 {
        if self.always {
            return 0;
        }
        let u = 1.0 - r.random::<f64>();
        (u.ln() / self.log_fail) as u64
    }

    /// Successes among `0..total`, in increasing order.
    #[inline]
    pub fn each(&self, r: &mut Rng, total: u64, mut f: impl FnMut(u64)) {
        let mut pos = self.gap(r);
        while pos < total {
            f(pos);
            pos = pos.saturating_add(1 + self.gap(r));
        }
    }
}

/// Gap sampler for a fixed probability bounded away from 0: a 256-way
/// alias table over gaps `0..255` plus one bucket for `>= 255`, which
/// recurses by memorylessness. One 64-bit draw per lookup: the top byte
/// picks the column, the low 56 bits decide between it and its alias.
pub(crate) struct TableSkip {
    threshold: [u64; 256],
    alias: [u8; 256],
}

impl TableSkip {
    const K: u64 = 255;
    const LOW: u64 = (1 << 56) - 1;

    /// `None` when the tail bucket would be too likely to pay off.
    pub fn new(p: f64) -> Option<Self> {
        let fail = 1.0 - p;
        let tail = fail.powi(Self::K as i32);
        if !(p > 0.0 && p < 1.0) || tail > 0.25 {
            return None;
        }
        let mut w: Vec<f64> = (0..Self::K as i32).map(|k| 256.0 * p * fail.powi(k)).collect();
        w.push(256.0 * tail);
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..256).partition(|&i| w[i] < 1.0);
        let mut t = Self {
            threshold: [Self::LOW + 1; 256],
            alias: [0; 256],
        };
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            t.threshold[s] = (w[s] * (Self::LOW + 1) as f64) as u64;
            t.alias[s] = l as u8;
            w[l] -= 1.0 - w[s];
            if w[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        Some(t)
    }

    #[inline]
    pub fn gap(&self, r: &mut Rng) -> u64 {
        let mut acc = 0;
        loop {
            let x = r.next_u64();
            let col = (x >> 56) as usize;
            // Branch-free select; the comparison is a coin flip.
            let keep = ((x & Self::LOW) < self.threshold[col]) as u64;
            let alias = self.alias[col] as u64;
            let g = alias ^ ((col as u64 ^ alias) & keep.wrapping_neg());
            if g < Self::K {
                return acc + g;
            }
            acc += Self::K;
        }
    }
}

enum Gaps {
    Table(TableSkip),
    Log(Skip),
}

impl Gaps {
    fn new(p: f64) -> Self {
        TableSkip::new(p).map_or(Gaps::Log(Skip::new(p)), Gaps::Table)
    }
}

/// Gaps drawn ahead in batches from four interleaved streams, so the
/// sampler's latency overlaps and consuming a gap does not wait on it.
struct GapBuffer<'a> {
    gaps: &'a Gaps,
    lanes: [Rng; 4],
    buf: [u64; 128],
    next: usize,
}

impl<'a> GapBuffer<'a> {
    fn new(gaps: &'a Gaps, r: &mut Rng) -> Self {
        Self {
            gaps,
            lanes: std::array::from_fn(|_| rng::stream(r.next_u64())),
            buf: [0; 128],
            next: 128,
        }
    }

    #[inline]
    fn gap(&mut self) -> u64 {
        if self.next == self.buf.len() {
            self.refill();
        }
        let g = self.buf[self.next];
        self.next += 1;
        g
    }

    #[inline(never)]
    fn refill(&mut self) {
        let [l0, l1, l2, l3] = &mut self.lanes;
        match self.gaps {
            Gaps::Table(t) => {
                for g in self.buf.chunks_exact_mut(4) {
                    g[0] = t.gap(l0);
                    g[1] = t.gap(l1);
                    g[2] = t.gap(l2);
                    g[3] = t.gap(l3);
                }
            }
            Gaps::Log(s) => {
                for g in self.buf.chunks_exact_mut(4) {
                    g[0] = s.gap(l0);
                    g[1] = s.gap(l1);
                    g[2] = s.gap(l2);
                    g[3] = s.gap(l3);
                }
            }
        }
        self.next = 0;
    }
}

#[inline]
pub(crate) fn sort4(mut e: [usize; 4]) -> [usize; 4] {
    macro_rules! cs {
        ($i:expr, $j:expr) => {
            if e[$i] > e[$j] {
                e.swap($i, $j);
            }
        };
    }
    cs!(0, 1);
    cs!(2, 3);
    cs!(0, 2);
    cs!(1, 3);
    cs!(1, 2);
    e
}

/// Every coplanar 4-set of the plane with probability `1/q`. A 4-set on a
/// line is emitted only from the line's designated plane.
///
/// Walks the colex order in blocks fixing `c < d`; a block holds the
/// `C(c, 2)` pairs `a < b < c` at their colex ranks. The gap left over at
/// the end of a block carries into the next one.
fn dense_plane<S: EdgeSink>(lay: &Layout, ctx: &PlaneCtx, gaps: &Gaps, r: &mut Rng, sink: &mut S) -> u64 {
    let m = ctx.m;
    let c2 = &lay.binom.c2[..];
    let pairs = &lay.binom.pairs[..];
    let pl = &ctx.pair_line[..];
    let mut gb = GapBuffer::new(gaps, r);
    // A block never holds more hits than pairs.
    let mut buf = vec![0u32; c2[m.max(2) - 1] as usize + 1];
    let mut pos = gb.gap();
    let mut raw = 0;
    for d in 3..m {
        let row_d = c2[d] as usize;
        for c in 2..d {
            let size = c2[c] as u64;
            if pos >= size {
                pos -= size;
                continue;
            }
            let mut len = 0;
            while pos < size {
                buf[len] = pos as u32;
                len += 1;
                pos = pos.saturating_add(1 + gb.gap());
            }
            pos -= size;
            // `{a, b, c, d}` is on a line exactly when the lines `ab` and
            // `cd` coincide; such 4-sets stay only in the designated plane.
            let lcd = pl[row_d + c];
            let line = &ctx.lines[lcd as usize];
            if !line.designated && line.members.len() >= 4 {
                let mut kept = 0;
                for k in 0..len {
                    let p = buf[k];
                    buf[kept] = p;
                    kept += (pl[p as usize] != lcd) as usize;
                }
                len = kept;
            }
            raw += len as u64;
            sink.block(c, d, &buf[..len], pairs);
        }
    }
    raw
}

/// Triples of `A_3` in this plane, each extended by sampled points of its
/// punctured plane.
fn case1_plane(lay: &Layout, plan: &CasePlan, ctx: &PlaneCtx, r: &mut Rng, out: &mut Vec<[u16; 4]>) -> u64 {
    let np = ctx.m;
    let c2 = &lay.binom.c2[..];
    let mut raw = 0;
    for_each_triangle(ctx, c2, |a, b, c, nab, nac, nbc| {
        if !plan.case1_seed(np, nab, nac, nbc) {
            return;
        }
        let (lab, lac, lbc) = (ctx.line(c2, a, b), ctx.line(c2, a, c), ctx.line(c2, b, c));
        let punctured = np + 3 - nab - nac - nbc;
        let skip = Skip::new(plan.probability(punctured));
        skip.each(r, np as u64, |x| {
            let x = x as usize;
            if x == a || x == b || x == c {
                return;
            }
            let lax = ctx.line_of(c2, a, x);
            if lax == lab || lax == lac || ctx.line_of(c2, b, x) == lbc {
                return;
            }
            raw += 1;
            let e = sort4([a, b, c, x]);
            out.push(e.map(|v| v as u16));
        });
    });
    raw
}

fn off_line(ctx: &PlaneCtx, li: usize) -> Vec<u16> {
    let mut on = vec![false; ctx.m];
    for &x in &ctx.lines[li].members {
        on[x as usize] = true;
    }
    (0..ctx.m as u16).filter(|&x| !on[x as usize]).collect()
}

/// Pairs on heavy lines, each with one more point of the line and one point
/// of this plane off the line.
fn case22_plane(plan: &CasePlan, ctx: &PlaneCtx, r: &mut Rng, out: &mut Vec<[u16; 4]>) -> u64 {
    let mut raw = 0;
    for (li, line) in ctx.lines.iter().enumerate() {
        let nk = line.members.len();
        if !plan.case22_line(nk) || nk == ctx.m {
            continue;
        }
        let others = off_line(ctx, li);
        let ny = others.len() as u64;
        let skip = Skip::new(plan.probability(nk - 2));
        let mem = &line.members;
        let mut rest = Vec::with_capacity(nk - 2);
        for j in 1..nk {
            for i in 0..j {
                rest.clear();
                rest.extend((0..nk).filter(|&k| k != i && k != j).map(|k| mem[k]));
                skip.each(r, (nk as u64 - 2) * ny, |pos| {
                    let x = rest[(pos / ny) as usize] as usize;
                    let y = others[(pos % ny) as usize] as usize;
                    raw += 1;
                    let e = sort4([mem[i] as usize, mem[j] as usize, x, y]);
                    out.push(e.map(|v| v as u16));
                });
            }
        }
    }
    raw
}

/// Pairs on light lines, each with two points of this plane off the line,
/// rejecting 4-sets with a collinear triple.
fn case21_plane(lay: &Layout, plan: &CasePlan, ctx: &PlaneCtx, r: &mut Rng, out: &mut Vec<[u16; 4]>) -> u64 {
    let c2 = &lay.binom.c2[..];
    let mut raw = 0;
    for (li, line) in ctx.lines.iter().enumerate() {
        let nk = line.members.len();
        let s = ctx.m - nk;
        if !plan.case21_line(nk) || (s as f64) < plan.rich || s < 2 {
            continue;
        }
        let others = off_line(ctx, li);
        let skip = Skip::new(plan.probability(s));
        let total = c2[s] as u64;
        let mem = &line.members;
        for j in 1..nk {
            for i in 0..j {
                let (a1, a2) = (mem[i] as usize, mem[j] as usize);
                let (mut xi, mut yi, mut at) = (0usize, 1usize, 0u64);
                skip.each(r, total, |pos| {
                    let mut k = pos - at;
                    at = pos;
                    while k > 0 {
                        let step = k.min((yi - xi) as u64);
                        xi += step as usize;
                        k -= step;
                        if xi == yi {
                            xi = 0;
                            yi += 1;
                        }
                    }
                    let (x, y) = (others[xi] as usize, others[yi] as usize);
                    let lxy = ctx.line(c2, x, y);
                    if ctx.line_of(c2, a1, x) == lxy || ctx.line_of(c2, a2, x) == lxy {
                        return;
                    }
                    raw += 1;
                    let e = sort4([a1, a2, x, y]);
                    out.push(e.map(|v| v as u16));
                });
            }
        }
    }
    raw
}

/// Stream of plane `plane` under attempt seed `seed`.
pub(crate) fn plane_stream(seed: u64, plane: usize) -> Rng {
    rng::stream(rng::derive(seed, plane as u64))
}

/// Generates one plane into `sink`; returns the number of draws before
/// deduplication.
fn generate_plane<S: EdgeSink>(
    lay: &Layout,
    plan: &CasePlan,
    dense: &Gaps,
    ctx: &PlaneCtx,
    seed: u64,
    scratch: &mut Vec<[u16; 4]>,
    sink: &mut S,
) -> u64 {
    let mut r = plane_stream(seed, ctx.id);
    sink.begin_plane(lay, ctx);
    let raw = if plan.case == Case::Dense {
        dense_plane(lay, ctx, dense, &mut r, sink)
    } else {
        scratch.clear();
        let raw = match plan.case {
            Case::Case1 => case1_plane(lay, plan, ctx, &mut r, scratch),
            Case::Case21 => case21_plane(lay, plan, ctx, &mut r, scratch),
            Case::Case22 => case22_plane(plan, ctx, &mut r, scratch),
            Case::Dense => unreachable!(),
        };
        scratch.sort_unstable();
        scratch.dedup();
        for e in scratch.iter() {
            sink.edge(e[0] as usize, e[1] as usize, e[2] as usize, e[3] as usize);
        }
        raw
    };
    sink.end_plane(lay, ctx);
    raw
}

/// One attempt over all planes, spread over the available workers with
/// planes dealt round-robin. Sinks are merged in worker order.
pub(crate) fn run_attempt<S, F>(lay: &Layout, plan: &CasePlan, seed: u64, make: F) -> (S, u64)
where
    S: EdgeSink,
    F: Fn() -> S + Sync + Send,
{
    let planes = lay.num_planes();
    let w = par::workers().clamp(1, planes.max(1));
    let dense = Gaps::new(plan.probability(0));
    let parts = par::map_collect(w, |k| {
        let mut sink = make();
        let mut scratch = Vec::new();
        let mut raw = 0;
        for p in (k..planes).step_by(w) {
            if lay.plane_n[p] < 4 {
                continue;
            }
            let ctx = lay.plane(p);
            raw += generate_plane(lay, plan, &dense, &ctx, seed, &mut scratch, &mut sink);
        }
        (sink, raw)
    });
    let mut it = parts.into_iter();
    let (mut sink, mut raw) = it.next().expect("at least one worker");
    for (s, r) in it {
        sink.merge(s);
        raw += r;
    }
    (sink, raw)
}

/// Expected number of draws before deduplication, `sum_A |F_A| p_A`.
pub fn expected_draws(u: &crate::geometry::PointSet, plan: &CasePlan) -> crate::Result<f64> {
    let lay = Layout::new(u)?;
    let c2 = &lay.binom.c2[..];
    let total = par::fold_reduce(
        lay.num_planes(),
        || 0.0f64,
        |acc, p| {
            let np = lay.plane_n[p] as usize;
            if np < 4 {
                return acc;
            }
            let ctx = lay.plane(p);
            let mut sum = 0.0;
            match plan.case {
                Case::Dense => {
                    let mut family = lay.binom.c4[np] as f64;
                    for l in &ctx.lines {
                        if !l.designated {
                            family -= lay.binom.c4[l.members.len()] as f64;
                        }
                    }
                    sum += family * plan.probability(0);
                }
                Case::Case1 => for_each_triangle(&ctx, c2, |_, _, _, nab, nac, nbc| {
                    if plan.case1_seed(np, nab, nac, nbc) {
                        let punctured = np + 3 - nab - nac - nbc;
                        sum += punctured as f64 * plan.probability(punctured);
                    }
                }),
                Case::Case22 => {
                    for l in &ctx.lines {
                        let nk = l.members.len();
                        if plan.case22_line(nk) {
                            let family = ((nk - 2) * (np - nk)) as f64;
                            sum += c2[nk] as f64 * family * plan.probability(nk - 2);
                        }
                    }
                }
                Case::Case21 => {
                    for (li, l) in ctx.lines.iter().enumerate() {
                        let nk = l.members.len();
                        let s = np - nk;
                        if !plan.case21_line(nk) || (s as f64) < plan.rich || s < 2 {
                            continue;
                        }
                        let others = off_line(&ctx, li);
                        let p = plan.probability(s);
                        for &a1 in &l.members {
                            for &a2 in &l.members {
                                if a1 >= a2 {
                                    continue;
                                }
                                let mut family = 0u64;
                                for (yi, &y) in others.iter().enumerate() {
                                    for &x in &others[..yi] {
                                        let lxy = ctx.line(c2, x as usize, y as usize);
                                        if ctx.line_of(c2, a1 as usize, x as usize) != lxy
                                            && ctx.line_of(c2, a2 as usize, x as usize) != lxy
                                        {
                                            family += 1;
                                        }
                                    }
                                }
                                sum += family as f64 * p;
                            }
                        }
                    }
                }
            }
            acc + sum
        },
        |a, b| a + b,
    );
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn sort4_sorts_every_permutation() {
        let base = [3usize, 9, 11, 40];
        let mut perm = base;
        for _ in 0..24 {
            assert_eq!(sort4(perm), base);
            // Cycle through permutations by rotating prefixes.
            perm.rotate_left(1);
            perm[..3].rotate_left(1);
        }
        assert_eq!(sort4([4, 3, 2, 1]), [1, 2, 3, 4]);
        assert_eq!(sort4([2, 4, 1, 3]), [1, 2, 3, 4]);
    }

    #[test]
    fn table_gaps_follow_the_geometric_law() {
        let p = 1.0 / 7.0;
        let t = TableSkip::new(p).unwrap();
        let mut r = Rng::seed_from_u64(8);
        let trials = 400_000;
        let mut hist = [0u64; 8];
        let mut sum = 0u64;
        for _ in 0..trials {
            let g = t.gap(&mut r);
            sum += g;
            if g < 8 {
                hist[g as usize] += 1;
            }
        }
        let mean = sum as f64 / trials as f64;
        let sd = ((1.0 - p) / (p * p) / trials as f64).sqrt();
        assert!((mean - (1.0 - p) / p).abs() < 4.0 * sd, "{mean}");
        for (k, &h) in hist.iter().enumerate() {
            let e = trials as f64 * p * (1.0 - p).powi(k as i32);
            assert!((h as f64 - e).abs() < 4.0 * e.sqrt() + 1.0, "k = {k}");
        }
        assert!(TableSkip::new(1e-4).is_none());
        assert!(TableSkip::new(1.0).is_none());
    }

    #[test]
    fn skip_hits_expected_rate() {
        let mut r = Rng::seed_from_u64(5);
        let skip = Skip::new(0.1);
        let mut hits = 0u64;
        skip.each(&mut r, 1_000_000, |_| hits += 1);
        assert!((hits as f64 - 100_000.0).abs() < 5.0 * 300.0, "{hits}");
        let mut all = 0;
        Skip::new(1.0).each(&mut r, 50, |_| all += 1);
        assert_eq!(all, 50);
    }
}
