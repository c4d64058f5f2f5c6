use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::Result;
use crate::ffield::Point;
use crate::geometry::{incidence, PointSet};
use crate::rng;

use super::classify::{is_general_position, moment_curve};

/// Outcome of a maximum general-position search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchResult {
    pub size: usize,
    pub witness: PointSet,
    /// The search finished, so `size` is the maximum.
    pub optimal: bool,
    pub nodes: u64,
}

/// Hyperplanes holding more than `d` members of a point set, with
/// member/hyperplane incidences in compressed rows.
struct Board {
    d: usize,
    n: usize,
    pt_start: Vec<u32>,
    pt_hyp: Vec<u32>,
    hyp_start: Vec<u32>,
    hyp_pts: Vec<u32>,
    /// Parallel class of each hyperplane.
    class: Vec<u32>,
    classes: usize,
}

impl Board {
    fn new(set: &PointSet) -> Result<Self> {
        let ambient = set.ambient();
        let d = ambient.dim();
        let q = ambient.q();
        let inc = incidence(ambient)?;
        let n = set.len();
        let mut members: HashMap<u32, Vec<u32>> = HashMap::new();
        for (i, p) in set.points().iter().enumerate() {
            for &h in inc.point_hyperplanes(p.index(q)) {
                members.entry(h).or_default().push(i as u32);
            }
        }
        let mut rich: Vec<(u32, Vec<u32>)> =
            members.into_iter().filter(|(_, m)| m.len() > d).collect();
        rich.sort_unstable_by_key(|(h, _)| *h);

        let mut class_ids: HashMap<Vec<Vec<u32>>, u32> = HashMap::new();
        let mut class = Vec::with_capacity(rich.len());
        let mut hyp_start = vec![0u32];
        let mut hyp_pts = Vec::new();
        let mut per_point: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (k, (h, m)) in rich.iter().enumerate() {
            let flat = if d == 3 {
                inc.planes()[*h as usize]
            } else {
                inc.lines()[*h as usize]
            };
            let next = class_ids.len() as u32;
            class.push(*class_ids.entry(flat.directions()).or_insert(next));
            hyp_pts.extend_from_slice(m);
            hyp_start.push(hyp_pts.len() as u32);
            for &x in m {
                per_point[x as usize].push(k as u32);
            }
        }
        let mut pt_start = vec![0u32];
        let mut pt_hyp = Vec::new();
        for l in per_point {
            pt_hyp.extend(l);
            pt_start.push(pt_hyp.len() as u32);
        }
        Ok(Self {
            d,
            n,
            pt_start,
            pt_hyp,
            hyp_start,
            hyp_pts,
            class,
            classes: class_ids.len(),
        })
    }

    #[inline]
    fn hyps(&self, x: usize) -> &[u32] {
        &self.pt_hyp[self.pt_start[x] as usize..self.pt_start[x + 1] as usize]
    }

    #[inline]
    fn members(&self, h: usize) -> &[u32] {
        &self.hyp_pts[self.hyp_start[h] as usize..self.hyp_start[h + 1] as usize]
    }

    fn num_hyps(&self) -> usize {
        self.class.len()
    }
}

fn witness(set: &PointSet, chosen: &[usize]) -> PointSet {
    set.subset(chosen)
}

/// Inputs of at most `d + 1` points need one span test.
fn tiny(set: &PointSet) -> Option<Vec<usize>> {
    let d = set.ambient().dim();
    let n = set.len();
    if n <= d {
        return Some((0..n).collect());
    }
    if n == d + 1 {
        return Some(if is_general_position(set) {
            (0..n).collect()
        } else {
            (0..d).collect()
        });
    }
    None
}

/// Exact maximum general-position subset by branch and bound, exploring
/// members in sorted order. Stops after `budget` nodes.
pub fn max_general_position_exact(set: &PointSet, budget: u64) -> Result<SearchResult> {
    let order: Vec<usize> = (0..set.len()).collect();
    max_general_position_exact_ordered(set, &order, budget)
}

/// As [`max_general_position_exact`], branching on members in `order`.
pub fn max_general_position_exact_ordered(
    set: &PointSet,
    order: &[usize],
    budget: u64,
) -> Result<SearchResult> {
    if let Some(w) = tiny(set) {
        return Ok(SearchResult {
            size: w.len(),
            witness: witness(set, &w),
            optimal: true,
            nodes: 1,
        });
    }
    let board = Board::new(set)?;
    let mut s = Exact::new(&board, order.to_vec(), budget);
    s.greedy_incumbent();
    s.search(0);
    let best = std::mem::take(&mut s.best);
    Ok(SearchResult {
        size: best.len(),
        witness: witness(set, &best),
        optimal: !s.aborted,
        nodes: s.nodes,
    })
}

const CANDIDATE: u8 = 0;
const SELECTED: u8 = 1;
const REMOVED: u8 = 2;

struct Exact<'a> {
    b: &'a Board,
    order: Vec<usize>,
    status: Vec<u8>,
    count: Vec<u32>,
    /// Candidates remaining on each hyperplane.
    rem: Vec<u32>,
    /// Per class: sum over its hyperplanes of `max(0, count + rem - d)`.
    excess: Vec<u32>,
    remaining: usize,
    current: Vec<usize>,
    best: Vec<usize>,
    trail: Vec<u32>,
    nodes: u64,
    budget: u64,
    aborted: bool,
}

impl<'a> Exact<'a> {
    fn new(b: &'a Board, order: Vec<usize>, budget: u64) -> Self {
        let rem: Vec<u32> = (0..b.num_hyps()).map(|h| b.members(h).len() as u32).collect();
        let mut excess = vec![0u32; b.classes];
        for h in 0..b.num_hyps() {
            excess[b.class[h] as usize] += rem[h].saturating_sub(b.d as u32);
        }
        Self {
            b,
            order,
            status: vec![CANDIDATE; b.n],
            count: vec![0; b.num_hyps()],
            rem,
            excess,
            remaining: b.n,
            current: Vec::new(),
            best: Vec::new(),
            trail: Vec::new(),
            nodes: 0,
            budget,
            aborted: false,
        }
    }

    #[inline]
    fn over(&self, h: usize) -> u32 {
        (self.count[h] + self.rem[h]).saturating_sub(self.b.d as u32)
    }

    fn drop_candidate(&mut self, y: usize) {
        self.status[y] = REMOVED;
        self.remaining -= 1;
        for &h in self.b.hyps(y) {
            let h = h as usize;
            let before = self.over(h);
            self.rem[h] -= 1;
            self.excess[self.b.class[h] as usize] -= before - self.over(h);
        }
        self.trail.push(y as u32);
    }

    fn restore_candidate(&mut self, y: usize) {
        self.status[y] = CANDIDATE;
        self.remaining += 1;
        for &h in self.b.hyps(y) {
            let h = h as usize;
            let before = self.over(h);
            self.rem[h] += 1;
            self.excess[self.b.class[h] as usize] += self.over(h) - before;
        }
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let y = self.trail.pop().expect("nonempty") as usize;
            self.restore_candidate(y);
        }
    }

    /// Selects `x`; candidates on newly full hyperplanes are dropped.
    fn select(&mut self, x: usize) {
        self.status[x] = SELECTED;
        self.remaining -= 1;
        self.current.push(x);
        let d = self.b.d as u32;
        for i in 0..self.b.hyps(x).len() {
            let h = self.b.hyps(x)[i] as usize;
            self.count[h] += 1;
            self.rem[h] -= 1;
            if self.count[h] == d {
                for j in 0..self.b.members(h).len() {
                    let y = self.b.members(h)[j] as usize;
                    if self.status[y] == CANDIDATE {
                        self.drop_candidate(y);
                    }
                }
            }
        }
    }

    fn unselect(&mut self, x: usize) {
        for &h in self.b.hyps(x) {
            let h = h as usize;
            self.count[h] -= 1;
            self.rem[h] += 1;
        }
        self.current.pop();
        self.status[x] = CANDIDATE;
        self.remaining += 1;
    }

    fn bound(&self) -> usize {
        let worst = self.excess.iter().copied().max().unwrap_or(0) as usize;
        self.current.len() + self.remaining - worst
    }

    fn greedy_incumbent(&mut self) {
        for k in 0..self.order.len() {
            let x = self.order[k];
            if self.status[x] == CANDIDATE {
                self.select(x);
            }
        }
        self.best = self.current.clone();
        for &x in self.best.clone().iter().rev() {
            self.unselect(x);
        }
        self.undo_to(0);
    }

    fn search(&mut self, pos: usize) {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.aborted = true;
            return;
        }
        if self.current.len() > self.best.len() {
            self.best = self.current.clone();
        }
        if self.bound() <= self.best.len() {
            return;
        }
        let Some(k) = (pos..self.order.len()).find(|&k| self.status[self.order[k]] == CANDIDATE)
        else {
            return;
        };
        let x = self.order[k];

        let mark = self.trail.len();
        self.select(x);
        self.search(k + 1);
        self.undo_to(mark);
        self.unselect(x);
        if self.aborted {
            return;
        }

        self.drop_candidate(x);
        self.search(k + 1);
        self.undo_to(mark);
    }
}

/// Incremental hyperplane counters for local search.
struct Local<'a> {
    b: &'a Board,
    count: Vec<u32>,
    blocked: Vec<u32>,
    inside: Vec<bool>,
    size: usize,
}

impl<'a> Local<'a> {
    fn new(b: &'a Board) -> Self {
        Self {
            b,
            count: vec![0; b.num_hyps()],
            blocked: vec![0; b.n],
            inside: vec![false; b.n],
            size: 0,
        }
    }

    #[inline]
    fn addable(&self, x: usize) -> bool {
        !self.inside[x] && self.blocked[x] == 0
    }

    fn add(&mut self, x: usize) {
        debug_assert!(self.addable(x));
        self.inside[x] = true;
        self.size += 1;
        for &h in self.b.hyps(x) {
            let h = h as usize;
            self.count[h] += 1;
            if self.count[h] as usize == self.b.d {
                for &y in self.b.members(h) {
                    self.blocked[y as usize] += 1;
                }
            }
        }
    }

    /// Removes `x`, pushing members that became addable onto `freed`.
    fn remove(&mut self, x: usize, freed: &mut Vec<usize>) {
        self.inside[x] = false;
        self.size -= 1;
        for &h in self.b.hyps(x) {
            let h = h as usize;
            if self.count[h] as usize == self.b.d {
                for &y in self.b.members(h) {
                    let y = y as usize;
                    self.blocked[y] -= 1;
                    if self.blocked[y] == 0 && !self.inside[y] {
                        freed.push(y);
                    }
                }
            }
            self.count[h] -= 1;
        }
    }

    fn members(&self) -> Vec<usize> {
        (0..self.b.n).filter(|&x| self.inside[x]).collect()
    }
}

/// Randomized lower bound: `rounds` restarts, alternating between a seed
/// taken from a random affine image of the moment curve and a random greedy
/// order, each followed by greedy completion and 1-swap local search.
pub fn max_general_position_heuristic(
    set: &PointSet,
    seed: u64,
    rounds: usize,
) -> Result<SearchResult> {
    if let Some(w) = tiny(set) {
        return Ok(SearchResult {
            size: w.len(),
            witness: witness(set, &w),
            optimal: true,
            nodes: 1,
        });
    }
    let board = Board::new(set)?;
    let n = set.len();
    let ambient = set.ambient();
    let curve = moment_curve(ambient.q(), ambient.dim()).ok();
    let mut best: Vec<usize> = Vec::new();
    let mut steps = 0u64;
    for round in 0..rounds.max(1) {
        let mut r = rng::stream(rng::derive(seed, round as u64));
        let mut st = Local::new(&board);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut r);
        if round % 2 == 0 {
            if let Some(c) = &curve {
                for p in affine_image(c, &mut r) {
                    if let Some(i) = set.position(&p) {
                        if st.addable(i) {
                            st.add(i);
                        }
                    }
                }
            }
        }
        for &x in &order {
            if st.addable(x) {
                st.add(x);
            }
        }

        let mut freed = Vec::new();
        let tries = 4 * st.size + 16;
        for _ in 0..tries {
            steps += 1;
            let members = st.members();
            let out = members[r.random_range(0..members.len())];
            freed.clear();
            st.remove(out, &mut freed);
            freed.shuffle(&mut r);
            let mut added = Vec::new();
            for &y in &freed {
                if y != out && st.addable(y) {
                    st.add(y);
                    added.push(y);
                }
            }
            if added.is_empty() {
                st.add(out);
            } else if added.len() > 1 {
                for &x in &order {
                    if st.addable(x) {
                        st.add(x);
                    }
                }
            }
        }
        if st.size > best.len() {
            best = st.members();
        }
    }
    Ok(SearchResult {
        size: best.len(),
        witness: witness(set, &best),
        optimal: false,
        nodes: steps,
    })
}

/// `x -> M x + b` applied to `curve` for a random invertible `M`.
fn affine_image(curve: &PointSet, r: &mut rng::Rng) -> Vec<Point> {
    let ambient = curve.ambient();
    let f = ambient.field();
    let d = ambient.dim();
    let q = ambient.q();
    let m = loop {
        let rows: Vec<Vec<u32>> = (0..d)
            .map(|_| (0..d).map(|_| r.random_range(0..q)).collect())
            .collect();
        let mut copy = rows.clone();
        crate::ffield::row_reduce(f, &mut copy);
        if copy.len() == d {
            break rows;
        }
    };
    let b: Vec<u32> = (0..d).map(|_| r.random_range(0..q)).collect();
    curve
        .points()
        .iter()
        .map(|p| {
            let c: Vec<u32> = (0..d)
                .map(|i| (0..d).fold(b[i], |acc, j| f.add(acc, f.mul(m[i][j], p.coord(j)))))
                .collect();
            ambient.point(&c).expect("reduced")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{enumerate_flats, Ambient};
    use proptest::prelude::*;

    fn check(res: &SearchResult) {
        assert_eq!(res.witness.len(), res.size);
        assert!(is_general_position(&res.witness));
    }

    #[test]
    fn one_plane_gives_three() {
        let a = Ambient::new(5, 3).unwrap();
        let plane = enumerate_flats(a, 2).unwrap()[7];
        let u = PointSet::new(a, plane.points()).unwrap();
        let r = max_general_position_exact(&u, u64::MAX).unwrap();
        check(&r);
        assert_eq!(r.size, 3);
        assert!(r.optimal);
        let h = max_general_position_heuristic(&u, 1, 4).unwrap();
        check(&h);
        assert_eq!(h.size, 3);
    }

    #[test]
    fn moment_curve_is_kept_whole() {
        let m = moment_curve(7, 3).unwrap();
        let r = max_general_position_exact(&m, u64::MAX).unwrap();
        assert_eq!((r.size, r.optimal), (7, true));
        let h = max_general_position_heuristic(&m, 9, 3).unwrap();
        assert_eq!(h.size, 7);
    }

    #[test]
    fn empty_and_tiny_inputs() {
        let a = Ambient::new(5, 3).unwrap();
        let e = PointSet::empty(a);
        assert_eq!(max_general_position_heuristic(&e, 0, 20).unwrap().size, 0);
        assert_eq!(max_general_position_exact(&e, 10).unwrap().size, 0);
        let four = PointSet::from_indices(a, vec![0, 1, 5, 6]).unwrap();
        let r = max_general_position_exact(&four, 10).unwrap();
        assert_eq!((r.size, r.optimal), (3, true));
        check(&r);
    }

    #[test]
    fn full_plane_f7_d2() {
        // Arcs in the affine plane of order 7 have at most 8 points.
        let u = PointSet::full(Ambient::new(7, 2).unwrap());
        let r = max_general_position_exact(&u, u64::MAX).unwrap();
        check(&r);
        assert!(r.optimal);
        assert!((7..=8).contains(&r.size), "{}", r.size);
    }

    #[test]
    fn full_f3_optimum_is_five() {
        let u = PointSet::full(Ambient::new(3, 3).unwrap());
        let r = max_general_position_exact(&u, u64::MAX).unwrap();
        check(&r);
        assert_eq!((r.size, r.optimal), (5, true));
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let u = PointSet::full(Ambient::new(5, 3).unwrap());
        let r = max_general_position_exact(&u, 50).unwrap();
        assert!(!r.optimal);
        check(&r);
    }

    fn random_subset(q: u32, keep: &[bool]) -> PointSet {
        let a = Ambient::new(q, 3).unwrap();
        let idx = keep
            .iter()
            .enumerate()
            .filter(|(_, &k)| k)
            .map(|(i, _)| i)
            .collect();
        PointSet::from_indices(a, idx).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn exact_is_order_invariant_and_dominates_heuristic(
            keep in proptest::collection::vec(proptest::bool::weighted(0.6), 27),
            perm_seed in any::<u64>(),
        ) {
            let u = random_subset(3, &keep);
            let r = max_general_position_exact(&u, u64::MAX).unwrap();
            check(&r);
            prop_assert!(r.optimal);
            prop_assert!(r.size <= 9);
            let mut order: Vec<usize> = (0..u.len()).collect();
            order.shuffle(&mut rng::stream(perm_seed));
            let p = max_general_position_exact_ordered(&u, &order, u64::MAX).unwrap();
            prop_assert_eq!(p.size, r.size);
            let h = max_general_position_heuristic(&u, perm_seed, 5).unwrap();
            check(&h);
            prop_assert!(h.size <= r.size);
        }

        #[test]
        fn exact_on_sparse_f5_subsets(
            keep in proptest::collection::vec(proptest::bool::weighted(0.15), 125),
        ) {
            let u = random_subset(5, &keep);
            let r = max_general_position_exact(&u, 2_000_000).unwrap();
            check(&r);
            if r.optimal {
                prop_assert!(r.size <= 15);
                let h = max_general_position_heuristic(&u, 3, 8).unwrap();
                prop_assert!(h.size <= r.size);
            }
        }
    }
}
