use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointSet;
use crate::rng;

use super::constants::ConstructionConstants;
use super::generate::{run_attempt, EdgeSink};
use super::hypergraph::{degree_profile, SupersatHypergraph};
use super::layout::Layout;
use super::plan::{check_preconditions, choose_case, Case, CasePlan};
use super::stats::{Degrees, DegreeStats, EdgeList, Tee, U8_PLANE_LIMIT};

/// Size, maximum degrees, their normalized ratios and the verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub q: u32,
    pub d: usize,
    pub n: usize,
    pub case: Case,
    pub edges: u64,
    pub delta1: u64,
    pub delta2: u64,
    pub delta3: u64,
    pub rho0: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub pass: bool,
    pub attempts: u32,
    pub seed: u64,
}

/// How a hypergraph came about, for the report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub case: Case,
    pub attempts: u32,
    pub seed: u64,
}

/// `rho0 = |H| q / n^4` and `rho_i = Δ_i q^(1 - (i-1)/3) / n^(4-i)`.
pub fn ratios(q: u32, n: usize, stats: &DegreeStats) -> [f64; 4] {
    if n == 0 {
        return [0.0; 4];
    }
    let (q, n) = (q as f64, n as f64);
    let mut out = [stats.edges as f64 * q / n.powi(4), 0.0, 0.0, 0.0];
    for i in 1..=3 {
        let scale = q.powf(1.0 - (i - 1) as f64 / 3.0) / n.powi(4 - i as i32);
        out[i] = stats.delta[i - 1] as f64 * scale;
    }
    out
}

impl Report {
    pub fn new(
        u: &PointSet,
        stats: &DegreeStats,
        consts: &ConstructionConstants,
        prov: Provenance,
    ) -> Self {
        let q = u.ambient().q();
        let rho = ratios(q, u.len(), stats);
        let pass = rho[0] >= consts.c1 && (1..=3).all(|i| rho[i] <= consts.c_deg[i - 1]);
        Self {
            q,
            d: u.ambient().dim(),
            n: u.len(),
            case: prov.case,
            edges: stats.edges,
            delta1: stats.delta[0],
            delta2: stats.delta[1],
            delta3: stats.delta[2],
            rho0: rho[0],
            rho1: rho[1],
            rho2: rho[2],
            rho3: rho[3],
            pass,
            attempts: prov.attempts,
            seed: prov.seed,
        }
    }

    pub fn stats(&self) -> DegreeStats {
        DegreeStats {
            edges: self.edges,
            delta: [self.delta1, self.delta2, self.delta3],
        }
    }
}

/// Degrees recounted from the edge list alone.
pub fn recount(h: &SupersatHypergraph) -> Result<DegreeStats> {
    let mut delta = [0; 3];
    for (i, slot) in delta.iter_mut().enumerate() {
        *slot = degree_profile(h, i + 1)?.0;
    }
    Ok(DegreeStats {
        edges: h.len() as u64,
        delta,
    })
}

/// Recounts every degree of `h` and checks the size and degree targets.
pub fn verify_bounds(
    h: &SupersatHypergraph,
    consts: &ConstructionConstants,
    prov: Provenance,
) -> Result<Report> {
    Ok(Report::new(h.base(), &recount(h)?, consts, prov))
}

/// One generated hypergraph with the number of draws before deduplication.
#[derive(Clone, Debug)]
pub struct Attempt {
    pub hypergraph: SupersatHypergraph,
    pub draws: u64,
}

fn check_plan(u: &PointSet, plan: &CasePlan) -> Result<()> {
    if plan.n != u.len() || plan.q != u.ambient().q() {
        return Err(Error::PlanMismatch {
            expected: format!("n = {}, q = {}", plan.n, plan.q),
            found: format!("n = {}, q = {}", u.len(), u.ambient().q()),
        });
    }
    Ok(())
}

/// A single sampling pass of the plan's construction.
pub fn build_case(u: &PointSet, plan: &CasePlan, seed: u64) -> Result<Attempt> {
    check_plan(u, plan)?;
    let lay = Layout::new(u)?;
    let (sink, draws) = run_attempt(&lay, plan, seed, EdgeList::default);
    Ok(Attempt {
        hypergraph: SupersatHypergraph::from_sorted(u.clone(), sink.into_sorted()),
        draws,
    })
}

fn build_named(u: &PointSet, plan: &CasePlan, seed: u64, case: Case) -> Result<SupersatHypergraph> {
    if plan.case != case {
        return Err(Error::PlanMismatch {
            expected: case.to_string(),
            found: plan.case.to_string(),
        });
    }
    Ok(build_case(u, plan, seed)?.hypergraph)
}

pub fn build_dense(u: &PointSet, plan: &CasePlan, seed: u64) -> Result<SupersatHypergraph> {
    build_named(u, plan, seed, Case::Dense)
}

pub fn build_case1(u: &PointSet, plan: &CasePlan, seed: u64) -> Result<SupersatHypergraph> {
    build_named(u, plan, seed, Case::Case1)
}

pub fn build_case21(u: &PointSet, plan: &CasePlan, seed: u64) -> Result<SupersatHypergraph> {
    build_named(u, plan, seed, Case::Case21)
}

pub fn build_case22(u: &PointSet, plan: &CasePlan, seed: u64) -> Result<SupersatHypergraph> {
    build_named(u, plan, seed, Case::Case22)
}

/// Runs one attempt into `make()`'s sink plus a degree counter.
fn attempt_with<S, F>(lay: &Layout, plan: &CasePlan, seed: u64, make: F) -> (S, DegreeStats)
where
    S: EdgeSink,
    F: Fn() -> S + Sync + Send,
{
    let max_m = lay.plane_n.iter().copied().max().unwrap_or(0) as usize;
    if max_m <= U8_PLANE_LIMIT {
        let (Tee(s, deg), _) = run_attempt(lay, plan, seed, || Tee(make(), Degrees::<u8>::new(lay)));
        (s, deg.finish(lay.n))
    } else {
        let (Tee(s, deg), _) = run_attempt(lay, plan, seed, || Tee(make(), Degrees::<u16>::new(lay)));
        (s, deg.finish(lay.n))
    }
}

struct Nothing;

impl EdgeSink for Nothing {
    fn begin_plane(&mut self, _: &Layout, _: &super::layout::PlaneCtx) {}
    #[inline]
    fn edge(&mut self, _: usize, _: usize, _: usize, _: usize) {}
    fn end_plane(&mut self, _: &Layout, _: &super::layout::PlaneCtx) {}
    fn merge(&mut self, _: Self) {}
}

/// Seed of attempt `k` under master seed `seed`.
pub fn attempt_seed(seed: u64, k: u32) -> u64 {
    rng::derive(seed, k as u64)
}

/// Retries until the targets are met, keeping the attempt with the largest
/// `rho0` otherwise.
fn retry<S, F>(
    u: &PointSet,
    plan: &CasePlan,
    consts: &ConstructionConstants,
    seed: u64,
    make: F,
) -> Result<(S, Report)>
where
    S: EdgeSink,
    F: Fn() -> S + Sync + Send,
{
    consts.validate()?;
    check_plan(u, plan)?;
    let lay = Layout::new(u)?;
    let mut best: Option<(S, Report)> = None;
    for k in 0..consts.retries {
        let (sink, stats) = attempt_with(&lay, plan, attempt_seed(seed, k), &make);
        let prov = Provenance {
            case: plan.case,
            attempts: k + 1,
            seed,
        };
        let report = Report::new(u, &stats, consts, prov);
        if report.pass {
            return Ok((sink, report));
        }
        if best.as_ref().is_none_or(|(_, b)| report.rho0 > b.rho0) {
            best = Some((sink, report));
        }
    }
    let (sink, mut report) = best.expect("at least one attempt");
    report.attempts = consts.retries;
    Ok((sink, report))
}

/// Builds with the plan's construction until the targets are met, up to
/// `consts.retries` attempts with seeds derived from `seed`.
pub fn build_with_plan(
    u: &PointSet,
    plan: &CasePlan,
    consts: &ConstructionConstants,
    seed: u64,
) -> Result<(SupersatHypergraph, Report)> {
    let (edges, report) = retry(u, plan, consts, seed, EdgeList::default)?;
    let h = SupersatHypergraph::from_sorted(u.clone(), edges.into_sorted());
    Ok((h, report))
}

/// Case selection followed by [`build_with_plan`].
pub fn build_supersat(
    u: &PointSet,
    consts: &ConstructionConstants,
    seed: u64,
) -> Result<(SupersatHypergraph, Report)> {
    check_preconditions(u, consts)?;
    let plan = choose_case(u, consts)?;
    build_with_plan(u, &plan, consts, seed)
}

/// As [`build_supersat`] but only the report is produced; edges are
/// counted as they are drawn and never stored.
pub fn build_supersat_report(
    u: &PointSet,
    consts: &ConstructionConstants,
    seed: u64,
) -> Result<Report> {
    check_preconditions(u, consts)?;
    let plan = choose_case(u, consts)?;
    Ok(retry(u, &plan, consts, seed, || Nothing)?.1)
}

/// Degree statistics of one attempt without storing edges.
pub fn attempt_stats(u: &PointSet, plan: &CasePlan, seed: u64) -> Result<DegreeStats> {
    check_plan(u, plan)?;
    let lay = Layout::new(u)?;
    Ok(attempt_with(&lay, plan, seed, || Nothing).1)
}
