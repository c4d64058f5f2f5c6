use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointSet;
use crate::par;

use super::constants::ConstructionConstants;
use super::layout::{Layout, PlaneCtx};

/// Which construction a point set is routed to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    /// Keep every coplanar 4-set with probability `1/q`.
    #[serde(rename = "DENSE")]
    Dense,
    /// Extend rich triples by one point of their punctured plane.
    #[serde(rename = "CASE1")]
    Case1,
    /// Extend pairs on light lines by two points of a rich plane.
    #[serde(rename = "CASE21")]
    Case21,
    /// Extend pairs on heavy lines by one point on the line and one off it.
    #[serde(rename = "CASE22")]
    Case22,
}

impl Case {
    pub const ALL: [Case; 4] = [Case::Dense, Case::Case1, Case::Case21, Case::Case22];

    pub fn name(self) -> &'static str {
        match self {
            Case::Dense => "DENSE",
            Case::Case1 => "CASE1",
            Case::Case21 => "CASE21",
            Case::Case22 => "CASE22",
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Case::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("unknown case `{s}`"),
            })
    }
}

/// The chosen case together with the thresholds and family sizes behind
/// the choice. Seed families are kept implicit: membership is decided from
/// line and plane counts while generating.
#[derive(Clone, Debug, PartialEq)]
pub struct CasePlan {
    pub case: Case,
    pub q: u32,
    pub n: usize,
    /// `tau_b * n / q`.
    pub rich: f64,
    /// `tau_split * n / q^(2/3)`.
    pub split: f64,
    pub c_samp: f64,
    /// `|S_4(U)|`.
    pub coplanar: u128,
    /// `|B|`, the rich non-collinear triples (0 when not computed).
    pub family_b: u64,
    /// Triples of `B` whose punctured plane is their largest part.
    pub case1_seeds: u64,
    /// Pairs on lines with `n_K >= rich`.
    pub rich_pairs: u64,
    /// Pairs on lines with `n_K >= rich` and `n_K >= split`.
    pub heavy_pairs: u64,
}

impl CasePlan {
    /// Probability used for a seed whose sampled family is indexed by a
    /// region holding `m` points of `U`.
    #[inline]
    pub fn probability(&self, m: usize) -> f64 {
        if self.case == Case::Dense {
            return 1.0 / self.q as f64;
        }
        (self.c_samp * self.n as f64 / (self.q as f64 * m as f64)).min(1.0)
    }

    /// Size of the seed family of the chosen case.
    pub fn seeds(&self) -> u128 {
        match self.case {
            Case::Dense => self.coplanar,
            Case::Case1 => self.case1_seeds as u128,
            Case::Case21 => (self.rich_pairs - self.heavy_pairs) as u128,
            Case::Case22 => self.heavy_pairs as u128,
        }
    }

    /// Membership in `B` for a non-collinear triple in a plane with `np`
    /// points of `U` whose pair lines hold `nab, nac, nbc` points. Planes
    /// holding more than half of `U` are skipped.
    #[inline]
    pub(crate) fn in_family_b(&self, np: usize, nab: usize, nac: usize, nbc: usize) -> bool {
        2 * np <= self.n
            && [nab, nac, nbc]
                .iter()
                .any(|&nk| (np - nk) as f64 >= self.rich)
    }

    /// Whether the punctured plane strictly beats every other part of
    /// `{x}, {y}, {z}, K°_xy, K°_xz, K°_yz, K°_B`.
    #[inline]
    pub(crate) fn punctured_wins(np: usize, nab: usize, nac: usize, nbc: usize) -> bool {
        let kb = np as i64 - (nab + nac + nbc) as i64 + 3;
        kb > 1 && [nab, nac, nbc].iter().all(|&nk| kb > nk as i64 - 2)
    }

    #[inline]
    pub(crate) fn case1_seed(&self, np: usize, nab: usize, nac: usize, nbc: usize) -> bool {
        self.in_family_b(np, nab, nac, nbc) && Self::punctured_wins(np, nab, nac, nbc)
    }

    #[inline]
    pub(crate) fn case22_line(&self, nk: usize) -> bool {
        nk >= 3 && nk as f64 >= self.rich && nk as f64 >= self.split
    }

    #[inline]
    pub(crate) fn case21_line(&self, nk: usize) -> bool {
        nk >= 3 && nk as f64 >= self.rich && (nk as f64) < self.split
    }
}

pub(crate) fn check_preconditions(u: &PointSet, consts: &ConstructionConstants) -> Result<()> {
    consts.validate()?;
    let d = u.ambient().dim();
    if d != 3 {
        return Err(Error::InvalidDimension(d));
    }
    let required = consts.t * u.ambient().q() as f64;
    if (u.len() as f64) < required {
        return Err(Error::BelowThreshold {
            n: u.len(),
            required,
        });
    }
    Ok(())
}

fn binom4(x: u64) -> u128 {
    if x < 4 {
        return 0;
    }
    let x = x as u128;
    x * (x - 1) * (x - 2) * (x - 3) / 24
}

/// `|S_4(U)|`: 4-sets inside a plane, counting 4-sets on a line once.
pub fn count_coplanar(u: &PointSet) -> Result<u128> {
    let lay = Layout::new(u)?;
    Ok(coplanar_from_layout(&lay))
}

fn coplanar_from_layout(lay: &Layout) -> u128 {
    let on_lines: u128 = lay.line_n.iter().map(|&k| binom4(k as u64)).sum();
    let mut in_planes = 0u128;
    for (p, &np) in lay.plane_n.iter().enumerate() {
        in_planes += binom4(np as u64);
        for &l in lay.inc.plane_lines(p) {
            in_planes -= binom4(lay.line_n[l as usize] as u64);
        }
    }
    in_planes + on_lines
}

fn base_plan(lay: &Layout, consts: &ConstructionConstants, case: Case) -> CasePlan {
    let n = lay.n as f64;
    let q = lay.q as f64;
    CasePlan {
        case,
        q: lay.q,
        n: lay.n,
        rich: consts.tau_b * n / q,
        split: consts.tau_split * n / q.powf(2.0 / 3.0),
        c_samp: consts.c_samp,
        coplanar: coplanar_from_layout(lay),
        family_b: 0,
        case1_seeds: 0,
        rich_pairs: 0,
        heavy_pairs: 0,
    }
}

/// Calls `f(a, b, c, nab, nac, nbc)` for every non-collinear local triple.
#[inline]
pub(crate) fn for_each_triangle(
    ctx: &PlaneCtx,
    c2: &[u32],
    mut f: impl FnMut(usize, usize, usize, usize, usize, usize),
) {
    let m = ctx.m;
    for c in 2..m {
        for b in 1..c {
            let lbc = ctx.line(c2, b, c);
            let nbc = ctx.lines[lbc].members.len();
            for a in 0..b {
                let lab = ctx.line(c2, a, b);
                let lac = ctx.line(c2, a, c);
                if lab == lac {
                    continue;
                }
                f(
                    a,
                    b,
                    c,
                    ctx.lines[lab].members.len(),
                    ctx.lines[lac].members.len(),
                    nbc,
                );
            }
        }
    }
}

fn fill_triple_counts(lay: &Layout, plan: &mut CasePlan) {
    let snapshot = plan.clone();
    let (b, a3) = par::fold_reduce(
        lay.num_planes(),
        || (0u64, 0u64),
        |(mut b, mut a3), p| {
            let np = lay.plane_n[p] as usize;
            if np < 3 || 2 * np > lay.n {
                return (b, a3);
            }
            let ctx = lay.plane(p);
            for_each_triangle(&ctx, &lay.binom.c2, |_, _, _, nab, nac, nbc| {
                if snapshot.in_family_b(np, nab, nac, nbc) {
                    b += 1;
                    if CasePlan::punctured_wins(np, nab, nac, nbc) {
                        a3 += 1;
                    }
                }
            });
            (b, a3)
        },
        |x, y| (x.0 + y.0, x.1 + y.1),
    );
    plan.family_b = b;
    plan.case1_seeds = a3;
}

fn fill_pair_counts(lay: &Layout, plan: &mut CasePlan) {
    for &nk in &lay.line_n {
        let nk = nk as f64;
        if nk >= plan.rich && nk >= 2.0 {
            let pairs = (nk * (nk - 1.0) / 2.0) as u64;
            plan.rich_pairs += pairs;
            if nk >= plan.split {
                plan.heavy_pairs += pairs;
            }
        }
    }
}

/// Routes `U` to one of the four constructions.
pub fn choose_case(u: &PointSet, consts: &ConstructionConstants) -> Result<CasePlan> {
    check_preconditions(u, consts)?;
    let lay = Layout::new(u)?;
    let mut plan = base_plan(&lay, consts, Case::Dense);
    let n4 = (lay.n as f64).powi(4);
    if plan.coplanar as f64 >= consts.eps_dense * n4 {
        return Ok(plan);
    }
    fill_triple_counts(&lay, &mut plan);
    if plan.family_b == 0 {
        return Err(Error::BelowRegime);
    }
    fill_pair_counts(&lay, &mut plan);
    plan.case = if 14 * plan.case1_seeds >= plan.family_b {
        Case::Case1
    } else if 2 * plan.heavy_pairs >= plan.rich_pairs {
        Case::Case22
    } else {
        Case::Case21
    };
    Ok(plan)
}

/// A plan for a fixed case, bypassing the selection rule.
pub fn plan_for_case(u: &PointSet, consts: &ConstructionConstants, case: Case) -> Result<CasePlan> {
    check_preconditions(u, consts)?;
    let lay = Layout::new(u)?;
    let mut plan = base_plan(&lay, consts, case);
    if case == Case::Case1 {
        fill_triple_counts(&lay, &mut plan);
    }
    fill_pair_counts(&lay, &mut plan);
    Ok(plan)
}

/// The family `B` as sorted triples of positions in `U`.
pub fn scan_family_b(u: &PointSet, consts: &ConstructionConstants) -> Result<Vec<[u32; 3]>> {
    check_preconditions(u, consts)?;
    let lay = Layout::new(u)?;
    let work: u64 = lay
        .plane_n
        .iter()
        .map(|&np| super::super::general_position::binomial(np as u64, 3))
        .sum();
    if work > 50_000_000 {
        return Err(Error::TooLarge(format!("{work} coplanar triples to scan")));
    }
    let plan = base_plan(&lay, consts, Case::Case1);
    let mut parts = par::map_collect(lay.num_planes(), |p| {
        let np = lay.plane_n[p] as usize;
        let mut out = Vec::new();
        if np < 3 {
            return out;
        }
        let ctx = lay.plane(p);
        for_each_triangle(&ctx, &lay.binom.c2, |a, b, c, nab, nac, nbc| {
            if plan.in_family_b(np, nab, nac, nbc) {
                out.push([ctx.global[a], ctx.global[b], ctx.global[c]]);
            }
        });
        out
    });
    let mut all: Vec<[u32; 3]> = parts.iter_mut().flat_map(std::mem::take).collect();
    all.sort_unstable();
    Ok(all)
}
