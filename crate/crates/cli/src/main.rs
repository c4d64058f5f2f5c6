use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gpsat::general_position::{max_general_position_exact, max_general_position_heuristic};
use gpsat::random_model::{self, EstimateOptions, Method};
use gpsat::supersat::{self, Case, ConstructionConstants, Provenance, Report, SupersatHypergraph};
use gpsat::{rng, Ambient, PointSet};

#[derive(Parser)]
#[command(name = "gpsat", version, about = "General position and coplanar supersaturation in F_q^d")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a supersaturated coplanar hypergraph and check its degree targets.
    Build(BuildArgs),
    /// Sweep p-random subsets over a probability grid, writing CSV.
    Sweep(SweepArgs),
    /// Largest general-position subset of a point set.
    Alpha(AlphaArgs),
    /// Recount a hypergraph dump and rebuild its report.
    Verify(VerifyArgs),
    /// Compare empirical binomial tails with the Chernoff-type bound.
    Chernoff(ChernoffArgs),
    /// Measure size and degree ratios over seeds and suggest targets.
    Calibrate(CalibrateArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Master seed; drawn from the clock when absent.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Clone)]
struct Source {
    #[arg(long)]
    q: Option<u32>,
    #[arg(long, default_value_t = 3)]
    d: usize,
    /// Use every point of F_q^d.
    #[arg(long, conflicts_with_all = ["random", "input"])]
    full_space: bool,
    /// Keep each point of F_q^d with this probability.
    #[arg(long, value_name = "P", conflicts_with = "input")]
    random: Option<f64>,
    /// Point table: a `q d` header and one point per line.
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    #[arg(long)]
    tau_b: Option<f64>,
    #[arg(long)]
    eps_dense: Option<f64>,
    #[arg(long)]
    c_samp: Option<f64>,
    #[arg(long)]
    retries: Option<u32>,
}

impl Overrides {
    fn apply(&self, mut c: ConstructionConstants) -> ConstructionConstants {
        if let Some(v) = self.tau_b {
            c.tau_b = v;
        }
        if let Some(v) = self.eps_dense {
            c.eps_dense = v;
        }
        if let Some(v) = self.c_samp {
            c.c_samp = v;
        }
        if let Some(v) = self.retries {
            c.retries = v;
        }
        c
    }
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    overrides: Overrides,
    /// Hypergraph dump; the report goes next to it as `<PATH>.report.json`.
    /// Without it only the report is produced and edges are never stored.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    q: u32,
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    /// Smallest grid probability; defaults to q^-d / 10.
    #[arg(long)]
    p_min: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    p_max: f64,
    #[arg(long, default_value_t = 40)]
    p_steps: usize,
    /// A single probability instead of a grid.
    #[arg(long, conflicts_with_all = ["p_min", "p_max", "p_steps"])]
    p: Option<f64>,
    #[command(flatten)]
    search: SearchArgs,
    /// Fill the elapsed_ms column; output then varies between runs.
    #[arg(long)]
    timing: bool,
    /// CSV destination; stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SearchArgs {
    /// Largest sample solved by exact search.
    #[arg(long, default_value_t = 60)]
    exact_budget: usize,
    /// Node limit of each exact search.
    #[arg(long, default_value_t = 100_000)]
    exact_nodes: u64,
    /// Heuristic restarts.
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    /// Skip exact search.
    #[arg(long)]
    heuristic_only: bool,
}

impl SearchArgs {
    fn options(&self, timing: bool) -> EstimateOptions {
        EstimateOptions {
            method: if self.heuristic_only {
                Method::HeuristicOnly
            } else {
                Method::ExactThenHeuristic
            },
            exact_limit: self.exact_budget,
            exact_budget: self.exact_nodes,
            restarts: self.restarts,
            timing,
        }
    }
}

#[derive(Args)]
struct AlphaArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    source: Source,
    /// Exact branch and bound instead of the heuristic.
    #[arg(long)]
    exact: bool,
    /// Node limit of the exact search.
    #[arg(long, default_value_t = u64::MAX)]
    exact_nodes: u64,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    /// Witness destination as a point table.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    jobs: Option<usize>,
    /// Hypergraph dump written by `build`.
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    /// Report destination; stdout only when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ChernoffArgs {
    #[command(flatten)]
    common: Common,
    /// Means; paired with `--h` in order.
    #[arg(long, num_args = 1.., default_values_t = [1.0, 2.0, 5.0])]
    mu: Vec<f64>,
    #[arg(long, num_args = 1.., default_values_t = [20.0, 40.0, 100.0])]
    h: Vec<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    common: Common,
    /// Field orders of full spaces to measure.
    #[arg(long, num_args = 1.., default_values_t = [5, 7])]
    qs: Vec<u32>,
    /// Seeds per field order.
    #[arg(long, default_value_t = 10)]
    trials: u32,
    #[command(flatten)]
    overrides: Overrides,
}

/// Exit codes.
const USAGE: u8 = 1;
const FAILED_BOUNDS: u8 = 2;
const IO: u8 = 3;

#[derive(Debug)]
struct IoFailure;

impl std::fmt::Display for IoFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("i/o failure")
    }
}

impl std::error::Error for IoFailure {}

/// Tags file errors so they map to the I/O exit code.
trait IoContext<T> {
    fn io(self, path: &Path) -> Result<T>;
}

impl<T, E: Into<anyhow::Error>> IoContext<T> for std::result::Result<T, E> {
    fn io(self, path: &Path) -> Result<T> {
        self.map_err(|e| e.into().context(IoFailure).context(path.display().to_string()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let io = e.downcast_ref::<IoFailure>().is_some() || e.chain().any(|c| c.is::<io::Error>());
            ExitCode::from(if io { IO } else { USAGE })
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let jobs = match &cli.command {
        Command::Build(a) => a.common.jobs,
        Command::Sweep(a) => a.common.jobs,
        Command::Alpha(a) => a.common.jobs,
        Command::Verify(a) => a.jobs,
        Command::Chernoff(a) => a.common.jobs,
        Command::Calibrate(a) => a.common.jobs,
    };
    with_jobs(jobs, move || match cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Alpha(a) => cmd_alpha(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Chernoff(a) => cmd_chernoff(a),
        Command::Calibrate(a) => cmd_calibrate(a),
    })
}

#[cfg(feature = "parallel")]
fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<R> + Send) -> Result<R> {
    match jobs {
        Some(0) => bail!("--jobs must be positive"),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("starting worker pool")?
            .install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<R> + Send) -> Result<R> {
    if jobs == Some(0) {
        bail!("--jobs must be positive");
    }
    f()
}

fn master_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let t = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0);
        rng::derive(t, std::process::id() as u64)
    })
}

/// Stream index reserved for sampling the input set.
const SAMPLE_STREAM: u64 = u64::MAX;

fn load_source(src: &Source, seed: u64) -> Result<PointSet> {
    if let Some(path) = &src.input {
        let f = File::open(path).io(path)?;
        let u = PointSet::read_text(BufReader::new(f)).io(path)?;
        if src.q.is_some_and(|q| q != u.ambient().q()) {
            bail!("--q disagrees with the field order of {}", path.display());
        }
        return Ok(u);
    }
    let Some(q) = src.q else {
        bail!("--q is required unless --input is given");
    };
    let ambient = Ambient::new(q, src.d)?;
    if let Some(p) = src.random {
        let mut r = rng::stream(rng::derive(seed, SAMPLE_STREAM));
        return Ok(random_model::sample_p_random(q, src.d, p, &mut r)?);
    }
    if src.full_space {
        return Ok(PointSet::full(ambient));
    }
    bail!("one of --full-space, --random or --input is required")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).io(path)?))
}

fn report_json(r: &Report) -> Result<String> {
    Ok(serde_json::to_string_pretty(r)?)
}

fn write_report(report: &Report, path: Option<&Path>) -> Result<()> {
    let json = report_json(report)?;
    if let Some(path) = path {
        let mut w = create(path)?;
        writeln!(w, "{json}").io(path)?;
        w.flush().io(path)?;
    }
    println!("{json}");
    Ok(())
}

fn verdict(r: &Report) -> u8 {
    if r.pass {
        0
    } else {
        FAILED_BOUNDS
    }
}

fn report_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".report.json");
    PathBuf::from(s)
}

fn cmd_build(a: BuildArgs) -> Result<u8> {
    let seed = master_seed(a.common.seed);
    println!("seed {seed}");
    let u = load_source(&a.source, seed)?;
    let consts = a.overrides.apply(ConstructionConstants::default());
    let Some(out) = &a.out else {
        let report = supersat::build_supersat_report(&u, &consts, seed)?;
        write_report(&report, None)?;
        return Ok(verdict(&report));
    };
    let (h, report) = supersat::build_supersat(&u, &consts, seed)?;
    let meta = [
        ("seed", seed.to_string()),
        ("attempts", report.attempts.to_string()),
        ("case", report.case.to_string()),
        ("constants", serde_json::to_string(&consts)?),
    ];
    let mut w = create(out)?;
    h.write_dump(&mut w, &meta).io(out)?;
    w.flush().io(out)?;
    write_report(&report, Some(&report_path(out)))?;
    Ok(verdict(&report))
}

fn meta_value<'a>(meta: &'a [(String, String)], key: &str) -> Option<&'a str> {
    meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

fn cmd_verify(a: VerifyArgs) -> Result<u8> {
    let path = &a.input;
    let f = File::open(path).io(path)?;
    let (h, meta) = SupersatHypergraph::read_dump(BufReader::new(f)).io(path)?;
    let stored = match meta_value(&meta, "constants") {
        Some(s) => serde_json::from_str(s).context("bad constants metadata")?,
        None => ConstructionConstants::default(),
    };
    let consts = a.overrides.apply(stored);
    let parse = |key: &str| -> Result<u64> {
        meta_value(&meta, key)
            .with_context(|| format!("dump lacks `{key}` metadata"))?
            .parse()
            .with_context(|| format!("bad `{key}` metadata"))
    };
    let case = supersat::choose_case(h.base(), &consts)?.case;
    if let Some(c) = meta_value(&meta, "case") {
        let recorded: Case = c.parse()?;
        if recorded != case {
            bail!("dump says {recorded} but the point set routes to {case}");
        }
    }
    let prov = Provenance {
        case,
        attempts: parse("attempts")? as u32,
        seed: parse("seed")?,
    };
    let report = supersat::verify_bounds(&h, &consts, prov)?;
    write_report(&report, a.out.as_deref())?;
    Ok(verdict(&report))
}

fn cmd_sweep(a: SweepArgs) -> Result<u8> {
    let seed = master_seed(a.common.seed);
    let grid = match a.p {
        Some(p) => vec![p],
        None => {
            let min = a.p_min.unwrap_or((a.q as f64).powi(-(a.d as i32)) / 10.0);
            random_model::log_grid(min, a.p_max, a.p_steps)?
        }
    };
    if a.trials == 0 {
        bail!("--trials must be positive");
    }
    let opts = a.search.options(a.timing);
    let sweep = random_model::sweep_phase_diagram(a.q, a.d, &grid, a.trials, &opts, seed)?;
    match &a.out {
        Some(path) => {
            println!("seed {seed}");
            let mut w = create(path)?;
            sweep.write_csv(&mut w).io(path)?;
            w.flush().io(path)?;
        }
        None => {
            let mut w = io::stdout().lock();
            writeln!(w, "seed {seed}")?;
            sweep.write_csv(&mut w)?;
        }
    }
    Ok(0)
}

fn cmd_alpha(a: AlphaArgs) -> Result<u8> {
    let seed = master_seed(a.common.seed);
    println!("seed {seed}");
    let u = load_source(&a.source, seed)?;
    let r = if a.exact {
        max_general_position_exact(&u, a.exact_nodes)?
    } else {
        max_general_position_heuristic(&u, seed, a.restarts)?
    };
    println!(
        "{}",
        serde_json::json!({
            "q": u.ambient().q(),
            "d": u.ambient().dim(),
            "n": u.len(),
            "alpha": r.size,
            "optimal": r.optimal,
            "nodes": r.nodes,
        })
    );
    if let Some(path) = &a.out {
        let mut w = create(path)?;
        r.witness.write_text(&mut w).io(path)?;
        w.flush().io(path)?;
    }
    Ok(0)
}

fn cmd_chernoff(a: ChernoffArgs) -> Result<u8> {
    let seed = master_seed(a.common.seed);
    println!("seed {seed}");
    if a.mu.len() != a.h.len() {
        bail!("--mu and --h need the same number of values");
    }
    let points: Vec<(f64, f64)> = a.mu.iter().copied().zip(a.h.iter().copied()).collect();
    let rows = random_model::chernoff_empirical_check(&points, a.samples, seed)?;
    let mut ok = true;
    for r in &rows {
        println!("{}", serde_json::to_string(r)?);
        ok &= r.holds;
    }
    Ok(if ok { 0 } else { FAILED_BOUNDS })
}

fn cmd_calibrate(a: CalibrateArgs) -> Result<u8> {
    let seed = master_seed(a.common.seed);
    println!("seed {seed}");
    let consts = a.overrides.apply(ConstructionConstants {
        c1: f64::MIN_POSITIVE,
        c_deg: [f64::MAX; 3],
        retries: 1,
        ..Default::default()
    });
    let mut lo = [f64::INFINITY; 4];
    let mut hi = [0.0f64; 4];
    for &q in &a.qs {
        let u = PointSet::full(Ambient::new(q, 3)?);
        for t in 0..a.trials {
            let s = rng::derive(seed, ((q as u64) << 32) | t as u64);
            let r = supersat::build_supersat_report(&u, &consts, s)?;
            let rho = [r.rho0, r.rho1, r.rho2, r.rho3];
            println!(
                "{}",
                serde_json::json!({ "q": q, "seed": s, "case": r.case, "edges": r.edges, "rho": rho })
            );
            for i in 0..4 {
                lo[i] = lo[i].min(rho[i]);
                hi[i] = hi[i].max(rho[i]);
            }
        }
    }
    println!(
        "{}",
        serde_json::json!({
            "min": lo,
            "max": hi,
            "suggested_size": lo[0] / 2.0,
            "suggested_degree": [2.0 * hi[1], 2.0 * hi[2], 2.0 * hi[3]],
        })
    );
    Ok(0)
}
