//! End-to-end acceptance run. One line per criterion, then a single
//! assertion over all of them. Set `GPSAT_ACCEPTANCE=3,7` to run a subset.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use gpsat::general_position::{is_general_position_exhaustive, max_general_position_exact, moment_curve};
use gpsat::geometry::{affine_span, enumerate_flats, punctured_flat, Ambient};
use gpsat::random_model::{
    chernoff_empirical_check, default_grid, deletion_bound, median, sample_p_random, sweep_phase_diagram,
    EstimateOptions,
};
use gpsat::supersat::{
    build_supersat, build_supersat_report, build_with_plan, degree_profile, plan_for_case, verify_bounds, Case,
    ConstructionConstants, Provenance, Report, SupersatHypergraph,
};
use gpsat::{rng, Point, PointSet};
use rand::Rng as _;

const MOMENT_QS: [u32; 4] = [5, 7, 11, 13];
const MOMENT_LIMIT: Duration = Duration::from_secs(5);

const DQ_ORDER: u32 = 3;
/// Optimum found by the exhaustive search on `F_3^3`.
const DQ_OPTIMUM: usize = 5;
const DQ_LIMIT: Duration = Duration::from_secs(60);

const FLAT_QS: [u32; 3] = [3, 5, 7];
const PUNCTURED_QS: [u32; 4] = [3, 5, 7, 11];

const MEMBERSHIP_BUILDS: u64 = 50;
const MEMBERSHIP_LIMIT: Duration = Duration::from_secs(600);

const LADDER: [u32; 4] = [5, 7, 11, 13];
/// Above this order only the streamed report is produced.
const STORED_MAX_Q: u32 = 7;
const LADDER_SEEDS: u64 = 20;
const LADDER_PASS_RATE: f64 = 0.9;
const LADDER_SPREAD: f64 = 4.0;
const LADDER_LIMIT: Duration = Duration::from_secs(30 * 60);

const PROFILE_GRAPHS: u64 = 100;
const PROFILE_MAX_EDGES: usize = 10_000;

const CHERNOFF_POINTS: [(f64, f64); 3] = [(1.0, 20.0), (2.0, 40.0), (5.0, 100.0)];
const CHERNOFF_SAMPLES: u64 = 1_000_000;

const DELETION_QS: [u32; 2] = [7, 11];
const DELETION_EXPONENT: f64 = -2.8;
const DELETION_TRIALS: u64 = 200;
const DELETION_FRACTION: f64 = 0.4;
const DELETION_RATE: f64 = 0.9;
const DELETION_LIMIT: Duration = Duration::from_secs(120);

const SWEEP_Q: u32 = 11;
const SWEEP_TRIALS: usize = 50;
const SWEEP_SMALL_TOL: f64 = 2.0;
const SWEEP_INVERSIONS: usize = 1;
const SWEEP_LIMIT: Duration = Duration::from_secs(15 * 60);

const SEED: u64 = 20261016;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(limit: Duration, start: Instant) -> (bool, String) {
    let t = start.elapsed();
    (t < limit, format!("{:.1}s of {}s", t.as_secs_f64(), limit.as_secs()))
}

fn moment_curves() -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    for q in MOMENT_QS {
        let c = moment_curve(q, 3).unwrap();
        if c.len() != q as usize || !is_general_position_exhaustive(&c) {
            bad.push(q);
        }
    }
    let (fast, time) = within(MOMENT_LIMIT, start);
    outcome(bad.is_empty() && fast, format!("failing q {bad:?}, {time}"))
}

fn dq_bound() -> Outcome {
    let start = Instant::now();
    let u = PointSet::full(Ambient::new(DQ_ORDER, 3).unwrap());
    let r = max_general_position_exact(&u, u64::MAX).unwrap();
    let q = DQ_ORDER as usize;
    let ok = r.optimal && (q..=3 * q).contains(&r.size) && r.size == DQ_OPTIMUM;
    let (fast, time) = within(DQ_LIMIT, start);
    outcome(ok && fast, format!("alpha {} optimal {} nodes {}, {time}", r.size, r.optimal, r.nodes))
}

fn geometry_counts() -> Outcome {
    let mut bad = Vec::new();
    for q in FLAT_QS {
        let a = Ambient::new(q, 3).unwrap();
        let q = q as usize;
        let lines = enumerate_flats(a, 1).unwrap().len();
        let planes = enumerate_flats(a, 2).unwrap().len();
        if lines != q * q * (q * q + q + 1) || planes != q * (q * q + q + 1) {
            bad.push(format!("q={q} lines {lines} planes {planes}"));
        }
    }
    for q in PUNCTURED_QS {
        let a = Ambient::new(q, 3).unwrap();
        let mut r = rng::stream(rng::derive(SEED, q as u64));
        let mut checked = 0;
        while checked < 20 {
            let t: [Point; 3] = std::array::from_fn(|_| a.point_at(r.random_range(0..a.size())));
            if affine_span(a, &t).unwrap().dim() != 2 {
                continue;
            }
            checked += 1;
            let n = punctured_flat(a, &t).unwrap().len();
            let q = q as usize;
            if n != q * q - 3 * q + 3 {
                bad.push(format!("q={q} punctured {n}"));
            }
        }
    }
    outcome(bad.is_empty(), format!("mismatches {bad:?}"))
}

fn diff(q: i64, a: &Point, b: &Point) -> [i64; 3] {
    [0, 1, 2].map(|j| (b.coord(j) as i64 - a.coord(j) as i64).rem_euclid(q))
}

fn coplanar(q: i64, p: &[Point; 4]) -> bool {
    let [u, v, w] = [1, 2, 3].map(|k| diff(q, &p[0], &p[k]));
    let det = u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0]) + u[2] * (v[0] * w[1] - v[1] * w[0]);
    det.rem_euclid(q) == 0
}

fn collinear(q: i64, a: &Point, b: &Point, c: &Point) -> bool {
    let (u, v) = (diff(q, a, b), diff(q, a, c));
    [(1, 2), (2, 0), (0, 1)]
        .iter()
        .all(|&(i, j)| (u[i] * v[j] - u[j] * v[i]).rem_euclid(q) == 0)
}

fn has_collinear_triple(q: i64, p: &[Point; 4]) -> bool {
    [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]]
        .iter()
        .any(|t| collinear(q, &p[t[0]], &p[t[1]], &p[t[2]]))
}

/// Edges outside `S_4`, and for the no-collinear construction, edges with a
/// collinear triple.
fn membership_faults(h: &SupersatHypergraph, pure: bool) -> (u64, u64) {
    let q = h.base().ambient().q() as i64;
    let (mut outside, mut impure) = (0, 0);
    for e in h.edges() {
        let p = e.map(|i| h.base().get(i as usize));
        outside += !coplanar(q, &p) as u64;
        impure += (pure && has_collinear_triple(q, &p)) as u64;
    }
    (outside, impure)
}

fn membership() -> Outcome {
    let start = Instant::now();
    let forced = ConstructionConstants {
        tau_b: 1.0 / 16.0,
        tau_split: 0.2,
        c1: 1e-9,
        c_deg: [1e9; 3],
        c_samp: 0.02,
        ..Default::default()
    };
    let calibrated = ConstructionConstants::default();
    let (mut edges, mut outside, mut impure, mut pure_edges) = (0u64, 0u64, 0u64, 0u64);
    for k in 0..MEMBERSHIP_BUILDS {
        let q = [5, 7][(k % 2) as usize];
        let a = Ambient::new(q, 3).unwrap();
        let u = if (k / 2) % 2 == 0 {
            PointSet::full(a)
        } else {
            sample_p_random(q, 3, 0.5, &mut rng::stream(rng::derive(SEED, k))).unwrap()
        };
        let (h, _) = build_supersat(&u, &calibrated, rng::derive(SEED, 1000 + k)).unwrap();
        let (o, _) = membership_faults(&h, false);
        edges += h.len() as u64;
        outside += o;

        let plan = plan_for_case(&u, &forced, Case::Case21).unwrap();
        let (h, _) = build_with_plan(&u, &plan, &forced, rng::derive(SEED, 2000 + k)).unwrap();
        let (o, i) = membership_faults(&h, true);
        edges += h.len() as u64;
        pure_edges += h.len() as u64;
        outside += o;
        impure += i;
    }
    let ok = outside == 0 && impure == 0 && pure_edges > 0;
    let (fast, time) = within(MEMBERSHIP_LIMIT, start);
    outcome(
        ok && fast,
        format!("{edges} edges ({pure_edges} no-collinear), {outside} outside, {impure} impure, {time}"),
    )
}

fn rhos(r: &Report) -> [f64; 4] {
    [r.rho0, r.rho1, r.rho2, r.rho3]
}

fn ratio_ladder() -> Outcome {
    let start = Instant::now();
    let c = ConstructionConstants::default();
    let mut lines = Vec::new();
    let mut medians = Vec::new();
    let mut rates_ok = true;
    for q in LADDER {
        let u = PointSet::full(Ambient::new(q, 3).unwrap());
        let mut passes = 0;
        let mut per_rho: [Vec<f64>; 4] = Default::default();
        for s in 0..LADDER_SEEDS {
            let seed = rng::derive(SEED, 100 * q as u64 + s);
            let report = if q <= STORED_MAX_Q {
                let (h, report) = build_supersat(&u, &c, seed).unwrap();
                let prov = Provenance {
                    case: report.case,
                    attempts: report.attempts,
                    seed: report.seed,
                };
                let verified = verify_bounds(&h, &c, prov).unwrap();
                if verified != report {
                    rates_ok = false;
                }
                verified
            } else {
                build_supersat_report(&u, &c, seed).unwrap()
            };
            passes += report.pass as u64;
            for (i, v) in rhos(&report).into_iter().enumerate() {
                per_rho[i].push(v);
            }
        }
        let rate = passes as f64 / LADDER_SEEDS as f64;
        rates_ok &= rate >= LADDER_PASS_RATE;
        let m = per_rho.map(|mut v| median(&mut v));
        lines.push(format!("q={q} pass {rate:.2} rho {m:.4?}"));
        medians.push(m);
    }
    let spreads: Vec<f64> = (0..4)
        .map(|i| {
            let (lo, hi) = medians
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), m| (lo.min(m[i]), hi.max(m[i])));
            hi / lo
        })
        .collect();
    let spread_ok = spreads.iter().all(|&s| s <= LADDER_SPREAD);
    let (fast, time) = within(LADDER_LIMIT, start);
    outcome(
        rates_ok && spread_ok && fast,
        format!("{}; spreads {spreads:.2?}; {time}", lines.join("; ")),
    )
}

fn naive_profile(h: &SupersatHypergraph, i: usize) -> HashMap<Vec<u32>, u64> {
    let mut counts = HashMap::new();
    for e in h.edges() {
        for mask in 0u32..16 {
            if mask.count_ones() as usize == i {
                let s: Vec<u32> = (0..4).filter(|b| mask >> b & 1 == 1).map(|b| e[b]).collect();
                *counts.entry(s).or_insert(0) += 1;
            }
        }
    }
    counts
}

fn degree_oracle() -> Outcome {
    let a = Ambient::new(5, 3).unwrap();
    let mut bad = Vec::new();
    for g in 0..PROFILE_GRAPHS {
        let mut r = rng::stream(rng::derive(SEED, 3000 + g));
        let n = r.random_range(4..=a.size());
        let base = PointSet::from_indices(a, rand::seq::index::sample(&mut r, a.size(), n).into_vec()).unwrap();
        let m = r.random_range(0..=PROFILE_MAX_EDGES);
        let edges: Vec<[u32; 4]> = (0..m)
            .map(|_| {
                let v = rand::seq::index::sample(&mut r, n, 4).into_vec();
                [0, 1, 2, 3].map(|k| v[k] as u32)
            })
            .collect();
        let h = SupersatHypergraph::new(base, edges).unwrap();
        for i in 1..=3 {
            let naive = naive_profile(&h, i);
            let expected = naive.values().copied().max().unwrap_or(0);
            let (max, witness) = degree_profile(&h, i).unwrap();
            let mut w = witness.clone();
            w.sort_unstable();
            let at = naive.get(&w).copied().unwrap_or(0);
            if max != expected || (max > 0 && at != max) {
                bad.push(format!("graph {g} i={i}: {max} vs {expected}"));
            }
        }
    }
    outcome(bad.is_empty(), format!("{PROFILE_GRAPHS} graphs, mismatches {bad:?}"))
}

fn chernoff() -> Outcome {
    let rows = chernoff_empirical_check(&CHERNOFF_POINTS, CHERNOFF_SAMPLES, SEED).unwrap();
    let ok = rows.len() == CHERNOFF_POINTS.len() && rows.iter().all(|r| r.empirical <= r.bound);
    let detail: Vec<String> = rows
        .iter()
        .map(|r| format!("({}, {}) {} <= {:.3e}", r.mu, r.h, r.empirical, r.bound))
        .collect();
    outcome(ok, detail.join("; "))
}

fn deletion_regime() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for q in DELETION_QS {
        let p = (q as f64).powf(DELETION_EXPONENT);
        let mut good = 0;
        let mut total = 0;
        for t in 0..DELETION_TRIALS {
            let mut r = rng::stream(rng::derive(SEED, 10_000 * q as u64 + t));
            let u = sample_p_random(q, 3, p, &mut r).unwrap();
            let b = deletion_bound(&u).unwrap().bound;
            total += u.len();
            good += (b as f64 >= DELETION_FRACTION * u.len() as f64) as u64;
        }
        let rate = good as f64 / DELETION_TRIALS as f64;
        ok &= rate >= DELETION_RATE;
        detail.push(format!(
            "q={q} rate {rate:.3} mean |U| {:.2}",
            total as f64 / DELETION_TRIALS as f64
        ));
    }
    let (fast, time) = within(DELETION_LIMIT, start);
    outcome(ok && fast, format!("{}; {time}", detail.join("; ")))
}

fn phase_diagram() -> Outcome {
    let start = Instant::now();
    let grid = default_grid(SWEEP_Q, 3);
    let sweep = sweep_phase_diagram(SWEEP_Q, 3, &grid, SWEEP_TRIALS, &EstimateOptions::default(), SEED).unwrap();
    let s = &sweep.summaries;
    let small = s[..3]
        .iter()
        .all(|r| (r.alpha_lower - r.sample_size).abs() <= SWEEP_SMALL_TOL);
    let inversions = s.windows(2).filter(|w| w[1].alpha_lower < w[0].alpha_lower).count();
    let top = s.last().unwrap();
    let q = SWEEP_Q as f64;
    let plateau = top.p == 1.0 && (q..=3.0 * q).contains(&top.alpha_lower);
    let ok = grid.len() == 40 && small && inversions <= SWEEP_INVERSIONS && plateau;
    let (fast, time) = within(SWEEP_LIMIT, start);
    outcome(
        ok && fast,
        format!(
            "small-p ok {small}, inversions {inversions}, median at p=1 {}, {time}",
            top.alpha_lower
        ),
    )
}

fn run_cli(args: &[&str]) -> Vec<u8> {
    let o = Command::new(env!("CARGO_BIN_EXE_gpsat")).args(args).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    o.stdout
}

/// Stdout and every written file of a build and a sweep.
fn cli_outputs(dir: &Path, jobs: &str) -> Vec<Vec<u8>> {
    let dump = dir.join("h.txt");
    let csv = dir.join("s.csv");
    let build = run_cli(&[
        "build", "--q", "5", "--full-space", "--seed", "17", "--jobs", jobs, "--out", dump.to_str().unwrap(),
    ]);
    let sweep = run_cli(&[
        "sweep", "--q", "5", "--trials", "4", "--p-steps", "8", "--seed", "17", "--jobs", jobs, "--out",
        csv.to_str().unwrap(),
    ]);
    let sweep_stdout = run_cli(&["sweep", "--q", "5", "--trials", "3", "--p-steps", "5", "--seed", "4", "--jobs", jobs]);
    let read = |p: &Path| std::fs::read(p).unwrap();
    vec![
        build,
        read(&dump),
        read(&dir.join("h.txt.report.json")),
        sweep,
        read(&csv),
        sweep_stdout,
    ]
}

fn determinism() -> Outcome {
    let runs: Vec<Vec<Vec<u8>>> = ["1", "3", "1", "2"]
        .iter()
        .map(|jobs| {
            let dir = tempfile::tempdir().unwrap();
            cli_outputs(dir.path(), jobs)
        })
        .collect();
    let same = runs.iter().all(|r| r == &runs[0]);
    let bytes: usize = runs[0].iter().map(Vec::len).sum();
    outcome(same, format!("{} runs, {bytes} bytes each", runs.len()))
}

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 10] = [
    (1, "moment curve in general position", moment_curves),
    (2, "exact optimum within [q, dq]", dq_bound),
    (3, "flat counts and punctured planes", geometry_counts),
    (4, "edges coplanar, no-collinear case pure", membership),
    (5, "calibrated ratio ladder", ratio_ladder),
    (6, "degree profile against naive recount", degree_oracle),
    (7, "Chernoff tail dominance", chernoff),
    (8, "deletion bound at small p", deletion_regime),
    (9, "phase diagram shape", phase_diagram),
    (10, "deterministic CLI output", determinism),
];

fn selected() -> Option<Vec<u32>> {
    let v = std::env::var("GPSAT_ACCEPTANCE").ok()?;
    Some(v.split(',').filter_map(|s| s.trim().parse().ok()).collect())
}

#[test]
fn acceptance() {
    let only = selected();
    let mut failed = Vec::new();
    for (id, name, check) in CRITERIA {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let r = check();
        let tag = if r.pass { "PASS" } else { "FAIL" };
        // Written past the test harness capture so the lines always show.
        let mut out = std::io::stdout().lock();
        writeln!(
            out,
            "[{tag}] {id:>2} {name} ({:.1}s): {}",
            start.elapsed().as_secs_f64(),
            r.detail
        )
        .unwrap();
        out.flush().unwrap();
        if !r.pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria {failed:?}");
}
