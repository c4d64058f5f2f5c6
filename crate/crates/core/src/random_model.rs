//! p-random subsets of `F_q^d`, lower bounds on their largest
//! general-position subsets and the phase-diagram sweep.

use std::io::Write;
use std::time::Instant;

use rand::RngCore;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::general_position::{
    max_general_position_exact, max_general_position_heuristic, moment_curve,
};
use crate::geometry::{incidence, Ambient, PointSet};
use crate::par;
use crate::rng;
use crate::supersat::chernoff_tail_bound;

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}

/// One uniform draw in `[0, 1)` per point; a point is kept when its draw is
/// below `p`. Equal rng states give nested samples as `p` grows.
#[inline]
fn keep(r: &mut impl RngCore, p: f64) -> bool {
    ((r.next_u64() >> 11) as f64) * (1.0 / (1u64 << 53) as f64) < p
}

/// Keeps each point of `F_q^d` independently with probability `p`.
pub fn sample_p_random(q: u32, d: usize, p: f64, r: &mut impl RngCore) -> Result<PointSet> {
    check_probability(p)?;
    let ambient = Ambient::new(q, d)?;
    let kept = (0..ambient.size()).filter(|_| keep(r, p)).collect();
    PointSet::from_indices(ambient, kept)
}

/// Result of the deletion method.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeletionBound {
    pub bound: usize,
    pub witness: PointSet,
    pub deletions: usize,
}

/// Walks the degenerate `(d+1)`-subsets of `U` in lexicographic order and
/// deletes the last point of each one whose points all survive. The
/// survivors are in general position.
///
/// Subsets sharing their first `d` points are consecutive in that order, so
/// each surviving `d`-prefix removes every later survivor of its hyperplane
/// (or every later survivor at all when the prefix is itself degenerate).
pub fn deletion_bound(u: &PointSet) -> Result<DeletionBound> {
    let ambient = u.ambient();
    let d = ambient.dim();
    let n = u.len();
    if !(2..=3).contains(&d) {
        return Err(Error::InvalidDimension(d));
    }
    if n <= d {
        return Ok(DeletionBound {
            bound: n,
            witness: u.clone(),
            deletions: 0,
        });
    }
    let inc = incidence(ambient)?;
    let q = ambient.q();
    let idx: Vec<usize> = u.points().iter().map(|p| p.index(q)).collect();
    let mut alive = vec![true; n];
    let mut deletions = 0;
    let mut kill_after = |alive: &mut [bool], last: usize, region: Option<&[u32]>| {
        match region {
            Some(members) => {
                for &x in members {
                    if let Some(k) = u.position_of_index(x as usize) {
                        if k > last && alive[k] {
                            alive[k] = false;
                            deletions += 1;
                        }
                    }
                }
            }
            None => {
                for a in &mut alive[last + 1..] {
                    if *a {
                        *a = false;
                        deletions += 1;
                    }
                }
            }
        }
    };
    for a in 0..n {
        for b in a + 1..n {
            if !(alive[a] && alive[b]) {
                continue;
            }
            if d == 2 {
                let line = inc.line_of(idx[a], idx[b]);
                kill_after(&mut alive, b, Some(inc.line_points(line)));
                continue;
            }
            for c in b + 1..n {
                if !(alive[a] && alive[b] && alive[c]) {
                    continue;
                }
                match inc.plane_of(idx[a], idx[b], idx[c]) {
                    Some(plane) => kill_after(&mut alive, c, Some(inc.plane_points(plane))),
                    None => kill_after(&mut alive, c, None),
                }
            }
        }
    }
    let keep: Vec<usize> = (0..n).filter(|&k| alive[k]).collect();
    Ok(DeletionBound {
        bound: keep.len(),
        witness: u.subset(&keep),
        deletions,
    })
}

/// Number of moment-curve points surviving a p-random sample. The
/// survivors are in general position.
pub fn survival_lower_bound(q: u32, d: usize, p: f64, r: &mut impl RngCore) -> Result<usize> {
    check_probability(p)?;
    let curve = moment_curve(q, d)?;
    Ok(curve.points().iter().filter(|_| keep(r, p)).count())
}

/// One trial of the random model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub q: u32,
    pub d: usize,
    pub p: f64,
    pub trial: usize,
    /// Seed of the sample; replaying `sample_p_random` from
    /// `rng::stream(seed)` gives the same `U_p`.
    pub seed: u64,
    pub sample_size: usize,
    pub alpha_lower: usize,
    pub alpha_deletion: usize,
    /// The exact search finished, so `alpha_lower` is `α(U_p)`.
    pub exact: bool,
    pub elapsed_ms: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    ExactThenHeuristic,
    HeuristicOnly,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateOptions {
    pub method: Method,
    /// Largest sample handed to the exact search.
    pub exact_limit: usize,
    /// Node budget of the exact search.
    pub exact_budget: u64,
    /// Heuristic restarts.
    pub restarts: usize,
    /// Record wall time; off keeps output reproducible.
    pub timing: bool,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            method: Method::ExactThenHeuristic,
            exact_limit: 60,
            exact_budget: 100_000,
            restarts: 20,
            timing: false,
        }
    }
}

/// Lower bounds for one sample.
fn estimate_sample(u: &PointSet, search_seed: u64, opts: &EstimateOptions) -> Result<(usize, usize, bool)> {
    let deletion = deletion_bound(u)?.bound;
    let mut best = deletion;
    let mut exact = false;
    if opts.method == Method::ExactThenHeuristic && u.len() <= opts.exact_limit {
        let r = max_general_position_exact(u, opts.exact_budget)?;
        best = best.max(r.size);
        exact = r.optimal;
    }
    if !exact {
        let r = max_general_position_heuristic(u, search_seed, opts.restarts)?;
        best = best.max(r.size);
    }
    Ok((best, deletion, exact))
}

/// Seed of trial `trial` under `master`.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    rng::derive(master, trial as u64)
}

/// Runs one trial: samples `U_p` from `stream(seed)` and bounds `α(U_p)`.
pub fn run_trial(
    q: u32,
    d: usize,
    p: f64,
    trial: usize,
    seed: u64,
    opts: &EstimateOptions,
) -> Result<SweepRecord> {
    let start = Instant::now();
    let u = sample_p_random(q, d, p, &mut rng::stream(seed))?;
    let (alpha_lower, alpha_deletion, exact) = estimate_sample(&u, rng::derive(seed, p.to_bits()), opts)?;
    let elapsed_ms = if opts.timing {
        start.elapsed().as_millis() as u64
    } else {
        0
    };
    Ok(SweepRecord {
        q,
        d,
        p,
        trial,
        seed,
        sample_size: u.len(),
        alpha_lower,
        alpha_deletion,
        exact,
        elapsed_ms,
    })
}

/// `trials` independent trials at one `p`.
pub fn estimate_alpha(
    q: u32,
    d: usize,
    p: f64,
    trials: usize,
    opts: &EstimateOptions,
    master: u64,
) -> Result<Vec<SweepRecord>> {
    check_probability(p)?;
    Ambient::new(q, d)?;
    par::map_collect(trials, |t| run_trial(q, d, p, t, trial_seed(master, t), opts))
        .into_iter()
        .collect()
}

/// `steps` log-spaced probabilities from `min` to `max` inclusive.
pub fn log_grid(min: f64, max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::InvalidConstant {
            name: "p-steps",
            value: 0.0,
        });
    }
    for p in [min, max] {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidProbability(p));
        }
    }
    if min > max {
        return Err(Error::InvalidProbability(min));
    }
    if steps == 1 {
        return Ok(vec![max]);
    }
    let (lo, hi) = (min.ln(), max.ln());
    let mut grid: Vec<f64> = (0..steps)
        .map(|k| (lo + (hi - lo) * k as f64 / (steps - 1) as f64).exp())
        .collect();
    grid[0] = min;
    grid[steps - 1] = max;
    Ok(grid)
}

/// `40` points from `q^-d / 10` to `1`.
pub fn default_grid(q: u32, d: usize) -> Vec<f64> {
    let min = (q as f64).powi(-(d as i32)) / 10.0;
    log_grid(min, 1.0, 40).expect("valid default grid")
}

/// Per-`p` medians over trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub q: u32,
    pub d: usize,
    pub p: f64,
    pub seed: u64,
    pub sample_size: f64,
    pub alpha_lower: f64,
    pub alpha_deletion: f64,
    /// Every trial at this `p` was solved exactly.
    pub exact: bool,
    pub elapsed_ms: u64,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_unstable_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        (values[m - 1] + values[m]) / 2.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub records: Vec<SweepRecord>,
    pub summaries: Vec<SweepSummary>,
}

/// Every `(p, trial)` pair of the grid. Trial `t` samples from the same
/// seed at every `p`, so its samples are nested along the grid.
pub fn sweep_phase_diagram(
    q: u32,
    d: usize,
    grid: &[f64],
    trials: usize,
    opts: &EstimateOptions,
    master: u64,
) -> Result<Sweep> {
    if grid.is_empty() {
        return Err(Error::EmptyInput);
    }
    for w in grid.windows(2) {
        if w[0] > w[1] {
            return Err(Error::InvalidProbability(w[1]));
        }
    }
    for &p in grid {
        check_probability(p)?;
    }
    Ambient::new(q, d)?;
    let jobs = grid.len() * trials;
    let records = par::map_collect(jobs, |j| {
        let (k, t) = (j / trials.max(1), j % trials.max(1));
        run_trial(q, d, grid[k], t, trial_seed(master, t), opts)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let summaries = grid
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let rows = &records[k * trials..(k + 1) * trials];
            let col = |f: fn(&SweepRecord) -> usize| {
                median(&mut rows.iter().map(|r| f(r) as f64).collect::<Vec<_>>())
            };
            SweepSummary {
                q,
                d,
                p,
                seed: master,
                sample_size: col(|r| r.sample_size),
                alpha_lower: col(|r| r.alpha_lower),
                alpha_deletion: col(|r| r.alpha_deletion),
                exact: rows.iter().all(|r| r.exact),
                elapsed_ms: rows.iter().map(|r| r.elapsed_ms).sum(),
            }
        })
        .collect();
    Ok(Sweep { records, summaries })
}

pub const CSV_HEADER: &str = "q,d,p,trial,seed,sample_size,alpha_lower,alpha_deletion,exact,elapsed_ms";

impl Sweep {
    /// Records in `(p, trial)` order, then one `trial = -1` row of medians
    /// per `p`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{:e},{},{},{},{},{},{},{}",
                r.q, r.d, r.p, r.trial, r.seed, r.sample_size, r.alpha_lower, r.alpha_deletion, r.exact, r.elapsed_ms
            )?;
        }
        for s in &self.summaries {
            writeln!(
                w,
                "{},{},{:e},-1,{},{},{},{},{},{}",
                s.q, s.d, s.p, s.seed, s.sample_size, s.alpha_lower, s.alpha_deletion, s.exact, s.elapsed_ms
            )?;
        }
        Ok(())
    }
}

/// Empirical tail of a binomial sum against the Chernoff-type bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChernoffRow {
    pub mu: f64,
    pub h: f64,
    pub bound: f64,
    pub samples: u64,
    pub hits: u64,
    pub empirical: f64,
    pub holds: bool,
}

/// Number of indicators in each simulated sum.
pub const CHERNOFF_TERMS: u64 = 1000;

/// For each `(mu, h)`, draws `samples` sums of [`CHERNOFF_TERMS`]
/// independent indicators with total mean `mu` and counts sums reaching
/// `h`. With `samples = 0` the report is empty.
pub fn chernoff_empirical_check(points: &[(f64, f64)], samples: u64, seed: u64) -> Result<Vec<ChernoffRow>> {
    if samples == 0 {
        return Ok(Vec::new());
    }
    points
        .iter()
        .enumerate()
        .map(|(k, &(mu, h))| {
            let bound = chernoff_tail_bound(mu, h)?;
            let p = mu / CHERNOFF_TERMS as f64;
            let dist = Binomial::new(CHERNOFF_TERMS, p).map_err(|_| Error::InvalidProbability(p))?;
            let mut r = rng::stream(rng::derive(seed, k as u64));
            let hits = (0..samples).filter(|_| dist.sample(&mut r) as f64 >= h).count() as u64;
            let empirical = hits as f64 / samples as f64;
            Ok(ChernoffRow {
                mu,
                h,
                bound,
                samples,
                hits,
                empirical,
                holds: empirical <= bound,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::general_position::is_general_position;

    #[test]
    fn trivial_probabilities() {
        let mut r = rng::stream(1);
        assert!(sample_p_random(3, 3, 0.0, &mut r).unwrap().is_empty());
        assert_eq!(sample_p_random(3, 3, 1.0, &mut r).unwrap().len(), 27);
        assert!(sample_p_random(3, 3, 1.5, &mut r).is_err());
        assert_eq!(survival_lower_bound(11, 3, 1.0, &mut r).unwrap(), 11);
        assert_eq!(survival_lower_bound(11, 3, 0.0, &mut r).unwrap(), 0);
    }

    #[test]
    fn half_sample_mean() {
        let mut r = rng::stream(2);
        let trials = 10_000;
        let total: usize = (0..trials)
            .map(|_| sample_p_random(3, 3, 0.5, &mut r).unwrap().len())
            .sum();
        let mean = total as f64 / trials as f64;
        let sigma = (27.0f64 * 0.25).sqrt() / 100.0;
        assert!((mean - 13.5).abs() < 3.0 * sigma, "{mean}");

        let total: usize = (0..trials)
            .map(|_| survival_lower_bound(11, 3, 0.5, &mut r).unwrap())
            .sum();
        let mean = total as f64 / trials as f64;
        let sigma = (11.0f64 * 0.25).sqrt() / 100.0;
        assert!((mean - 5.5).abs() < 3.0 * sigma, "{mean}");
    }

    #[test]
    fn samples_are_nested_along_p() {
        let small = sample_p_random(7, 3, 0.1, &mut rng::stream(5)).unwrap();
        let large = sample_p_random(7, 3, 0.3, &mut rng::stream(5)).unwrap();
        assert!(small.points().iter().all(|p| large.contains(p)));
        assert!(small.len() < large.len());
    }

    #[test]
    fn deletion_on_small_sets() {
        let curve = moment_curve(7, 3).unwrap();
        let r = deletion_bound(&curve).unwrap();
        assert_eq!(r.bound, 7);
        assert_eq!(r.deletions, 0);
        let a = Ambient::new(5, 3).unwrap();
        let four = PointSet::from_indices(a, vec![0, 1, 5, 6]).unwrap();
        let r = deletion_bound(&four).unwrap();
        assert_eq!(r.bound, 3);
        // The lexicographically last point goes.
        assert_eq!(r.witness, four.subset(&[0, 1, 2]));
    }

    #[test]
    fn deletion_matches_quadruple_walk() {
        // Literal walk over quadruples in lexicographic order.
        let a = Ambient::new(5, 3).unwrap();
        for seed in 0..6 {
            let u = sample_p_random(5, 3, 0.2, &mut rng::stream(seed)).unwrap();
            let n = u.len();
            let mut alive = vec![true; n];
            for i in 0..n {
                for j in i + 1..n {
                    for k in j + 1..n {
                        for l in k + 1..n {
                            if [i, j, k, l].iter().all(|&x| alive[x])
                                && crate::general_position::is_degenerate_simplex(
                                    a.field(),
                                    &[u.get(i), u.get(j), u.get(k), u.get(l)],
                                )
                            {
                                alive[l] = false;
                            }
                        }
                    }
                }
            }
            let keep: Vec<usize> = (0..n).filter(|&x| alive[x]).collect();
            let r = deletion_bound(&u).unwrap();
            assert_eq!(r.witness, u.subset(&keep), "seed {seed}");
            assert!(is_general_position(&r.witness));
        }
    }

    #[test]
    fn deletion_in_the_plane() {
        let a = Ambient::new(5, 2).unwrap();
        let u = PointSet::full(a);
        let r = deletion_bound(&u).unwrap();
        assert!(is_general_position(&r.witness));
        assert_eq!(r.bound + r.deletions, 25);
    }

    #[test]
    fn full_space_of_order_three() {
        let opts = EstimateOptions::default();
        let recs = estimate_alpha(3, 3, 1.0, 2, &opts, 4).unwrap();
        for r in &recs {
            assert_eq!(r.sample_size, 27);
            assert_eq!(r.alpha_lower, 5);
            assert!(r.exact);
            assert!(r.alpha_deletion <= r.alpha_lower);
        }
    }

    #[test]
    fn tiny_samples_are_their_own_witness() {
        let opts = EstimateOptions::default();
        let recs = estimate_alpha(7, 3, 1e-3, 50, &opts, 9).unwrap();
        for r in recs {
            assert!(r.sample_size <= 3 || r.alpha_lower <= r.sample_size);
            if r.sample_size <= 3 {
                assert_eq!(r.alpha_lower, r.sample_size);
            }
        }
    }

    #[test]
    fn grid_endpoints_and_errors() {
        let g = default_grid(11, 3);
        assert_eq!(g.len(), 40);
        assert_eq!(g[39], 1.0);
        assert!((g[0] - 1.0 / 13_310.0).abs() < 1e-15);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(log_grid(0.5, 0.1, 3).is_err());
        assert!(log_grid(0.0, 1.0, 3).is_err());
        assert!(log_grid(0.1, 1.0, 0).is_err());
        assert!(sweep_phase_diagram(5, 3, &[], 1, &EstimateOptions::default(), 0).is_err());
    }

    #[test]
    fn csv_shape() {
        let grid = log_grid(0.01, 0.2, 3).unwrap();
        let s = sweep_phase_diagram(5, 3, &grid, 4, &EstimateOptions::default(), 3).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 1 + 12 + 3);
        assert!(lines[13].contains(",-1,"));
        let seq = par::sequential(|| sweep_phase_diagram(5, 3, &grid, 4, &EstimateOptions::default(), 3).unwrap());
        assert_eq!(s, seq);
    }

    #[test]
    fn chernoff_report() {
        assert!(chernoff_empirical_check(&[(1.0, 20.0)], 0, 1).unwrap().is_empty());
        let rows = chernoff_empirical_check(&[(1.0, 20.0), (5.0, 10.0)], 20_000, 1).unwrap();
        assert!(rows.iter().all(|r| r.holds));
        let c = crate::supersat::two_sided_constant(1.0);
        assert!((rows[1].bound - 2.0 * (-c * 5.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&mut []).is_nan());
    }
}
