use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use kfactor::balancing::{self, Lemma, PartSizes};
use kfactor::gadget::{gen_bottle, PackingCertJson};
use kfactor::partition::{find_partition, PartitionConstants};
use kfactor::solver::Mode;
use kfactor::threshold::{self, AlphaCase, BisectConfig};
use kfactor::tiling::{run_dichotomy, DichotomyConfig, MoveKind, SearchConfig};
use kfactor::{
    gen_complete_multipartite, gen_extremal_host, gen_gnp, parse_rational, FactorInstance, Graph, PackingCert,
    PackingMode, Piece, Probability, RParams, Seed, Status, TrialSpec, Variant,
};
use serde::Serialize;

/// Clique factors, tilings and thresholds on small graphs.
#[derive(Parser)]
#[command(name = "kfactor", version)]
struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a graph as JSON.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Decide, find or maximise a clique (or small graph) factor.
    Solve(SolveArgs),
    /// Local search tiling and the cover / independent-set dichotomy.
    Tile {
        #[command(subcommand)]
        cmd: TileCmd,
    },
    /// Plan size-adjustment moves.
    Balance(BalanceArgs),
    /// Search for an h-partition and report its properties.
    Partition(PartitionArgs),
    /// Check epsilon-regularity of a vertex pair.
    Regcheck(RegcheckArgs),
    /// Success probabilities over a grid of p.
    Sweep(SweepArgs),
    /// Locate the 50% crossing in p.
    Bisect(BisectArgs),
    /// Estimate one column of the K_4 threshold table.
    Table(TableArgs),
}

#[derive(Subcommand)]
enum GenKind {
    Gnp {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: String,
    },
    Extremal {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: String,
    },
    Complete {
        #[arg(long)]
        n: usize,
    },
    Empty {
        #[arg(long)]
        n: usize,
    },
    Multipartite {
        /// Class sizes, e.g. "3,3,4".
        #[arg(long)]
        classes: String,
    },
    Bottle {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        t: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Decide,
    Find,
    Maximize,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    host: PathBuf,
    /// Clique size.
    #[arg(long, conflicts_with = "piece_file")]
    r: Option<usize>,
    /// Piece graph as JSON instead of a clique.
    #[arg(long)]
    piece_file: Option<PathBuf>,
    /// JSON array of vertices; each piece may contain at most one of them.
    #[arg(long)]
    z_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "find")]
    mode: ModeArg,
    #[arg(long, default_value_t = kfactor::solver::DEFAULT_BUDGET)]
    budget: u64,
}

#[derive(Subcommand)]
enum TileCmd {
    Run(TileRunArgs),
    Verify {
        #[arg(long)]
        cert: PathBuf,
        #[arg(long, value_enum, default_value = "packing")]
        mode: PackingArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PackingArg {
    Packing,
    Factor,
}

#[derive(Args)]
struct TileRunArgs {
    #[arg(long)]
    host: PathBuf,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    s: usize,
    #[arg(long)]
    t: usize,
    #[arg(long, default_value_t = 0.05)]
    beta: f64,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(long)]
    c_cap: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    step_limit: usize,
    /// Comma-separated move order.
    #[arg(long)]
    moves: Option<String>,
    /// Write the move trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the packing certificate of the final tiling here.
    #[arg(long)]
    cert: Option<PathBuf>,
}

#[derive(Args)]
struct BalanceArgs {
    #[arg(long)]
    lemma: String,
    /// Part sizes, e.g. "39,40,21".
    #[arg(long)]
    sizes: String,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    s: usize,
    #[arg(long)]
    t: usize,
    /// Window as "p/q" or decimal; lemma default when absent.
    #[arg(long)]
    eps: Option<String>,
}

#[derive(Args)]
struct PartitionArgs {
    #[arg(long)]
    host: PathBuf,
    #[arg(long)]
    r: usize,
    #[arg(long)]
    s: usize,
    #[arg(long)]
    beta: Option<f64>,
    /// Comma-separated gamma_1..gamma_m.
    #[arg(long)]
    gammas: Option<String>,
    #[arg(long)]
    with_absorber: bool,
    /// Absorber clique size is m + k.
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    absorber_target: usize,
}

#[derive(Args)]
struct RegcheckArgs {
    #[arg(long)]
    host: PathBuf,
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
    #[arg(long)]
    eps: String,
    /// Reference density; the pair density when absent.
    #[arg(long)]
    d: Option<String>,
    /// Sample subsets when the parts are too large for the exhaustive check.
    #[arg(long)]
    sampled: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum HostKind {
    Empty,
    Complete,
    Extremal,
    File,
}

#[derive(Args)]
struct HostArgs {
    #[arg(long, value_enum, default_value = "empty")]
    host_kind: HostKind,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    host: Option<PathBuf>,
    #[arg(long)]
    r: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = kfactor::solver::DEFAULT_BUDGET)]
    budget: u64,
    /// Allow n beyond the desk-scale cap for this r.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    host: HostArgs,
    /// Comma-separated p values.
    #[arg(long)]
    grid: String,
    /// Also write the JSON summary here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct BisectArgs {
    #[command(flatten)]
    host: HostArgs,
    #[arg(long, default_value_t = 1e-3)]
    lo: f64,
    #[arg(long, default_value_t = 1.0)]
    hi: f64,
    #[arg(long, default_value_t = 0.5)]
    target: f64,
    #[arg(long, default_value_t = 0.05)]
    tolerance: f64,
}

#[derive(Args)]
struct TableArgs {
    /// One of 0, (0,1/4), 1/4, (1/4,1/2), 1/2, (1/2,3/4), [3/4,1], matching.
    #[arg(long)]
    case: String,
    #[arg(long, default_value = "24,36,48")]
    ns: String,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0.25)]
    tolerance: f64,
}

fn read_graph(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Graph::parse_json(&text)?)
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',').map(|w| w.trim().parse::<T>().map_err(|e| anyhow!("bad list entry {w:?}: {e}"))).collect()
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

fn params_from_ms(m: usize, s: usize, t: usize) -> Result<RParams> {
    RParams::variant_a(m, s, t).or_else(|_| RParams::variant_b(m, s, t)).map_err(Into::into)
}

fn gen(kind: &GenKind, seed: u64) -> Result<Graph> {
    Ok(match kind {
        GenKind::Gnp { n, p } => gen_gnp(*n, Probability::parse(p)?, &Seed::new(seed)),
        GenKind::Extremal { n, alpha } => gen_extremal_host(*n, &parse_rational(alpha)?)?,
        GenKind::Complete { n } => Graph::complete(*n),
        GenKind::Empty { n } => Graph::empty(*n),
        GenKind::Multipartite { classes } => gen_complete_multipartite(&parse_list(classes)?)?,
        GenKind::Bottle { m, r, t } => gen_bottle(*m, *r, *t)?.graph,
    })
}

fn solve(a: &SolveArgs, out: Option<&Path>) -> Result<u8> {
    let host = read_graph(&a.host)?;
    let piece = match (a.r, &a.piece_file) {
        (Some(r), None) => Piece::Clique(r),
        (None, Some(f)) => Piece::Graph(read_graph(f)?),
        _ => bail!("give exactly one of --r and --piece-file"),
    };
    let z: Vec<usize> = match &a.z_file {
        Some(f) => serde_json::from_str(&fs::read_to_string(f)?)?,
        None => Vec::new(),
    };
    let mode = match a.mode {
        ModeArg::Decide => Mode::Decide,
        ModeArg::Find => Mode::Find,
        ModeArg::Maximize => Mode::Maximize,
    };
    let inst = FactorInstance { host, piece, z, mode };
    let res = kfactor::solve_factor(&inst, a.budget)?;
    emit(out, &json(&res)?)?;
    Ok(match res.status {
        Status::Found => 0,
        Status::None => 1,
        Status::Timeout => 2,
    })
}

#[derive(Serialize)]
struct TileReport<'a> {
    params: RParams,
    steps: usize,
    step_limit_hit: bool,
    final_index: Vec<usize>,
    pieces: &'a [kfactor::TilePiece],
    result: &'a kfactor::tiling::Dichotomy,
}

fn tile_run(a: &TileRunArgs, out: Option<&Path>) -> Result<u8> {
    let host = read_graph(&a.host)?;
    let params = RParams::variant_a(a.m, a.s, a.t)?;
    let moves = match &a.moves {
        Some(list) => MoveKind::parse_list(list)?,
        None => kfactor::tiling::DEFAULT_MOVE_ORDER.to_vec(),
    };
    let cfg = DichotomyConfig {
        gamma: a.gamma,
        beta: a.beta,
        c_cap: a.c_cap,
        search: SearchConfig { moves, step_limit: a.step_limit, validate_each_step: true },
    };
    let outcome = run_dichotomy(&host, &params, &cfg)?;
    let f = &outcome.search.factor;
    if let Some(path) = &a.trace {
        fs::write(path, json(&outcome.search.trace)?)?;
    }
    if let Some(path) = &a.cert {
        fs::write(path, json(&f.packing_certificate()?.to_json())?)?;
    }
    let report = TileReport {
        params,
        steps: outcome.search.trace.len(),
        step_limit_hit: outcome.search.step_limit_hit,
        final_index: f.compute_index(),
        pieces: &f.pieces,
        result: &outcome.result,
    };
    emit(out, &json(&report)?)?;
    Ok(if outcome.search.step_limit_hit { 2 } else { 0 })
}

fn tile_verify(cert: &Path, mode: PackingArg, out: Option<&Path>) -> Result<u8> {
    let j: PackingCertJson = serde_json::from_str(&fs::read_to_string(cert)?)?;
    let c = PackingCert::from_json(&j)?;
    let mode = match mode {
        PackingArg::Packing => PackingMode::Packing,
        PackingArg::Factor => PackingMode::Factor,
    };
    match c.verify(mode) {
        Ok(()) => {
            emit(out, "{\"ok\": true}")?;
            Ok(0)
        }
        Err(v) => {
            emit(out, &json(&serde_json::json!({ "ok": false, "violation": v }))?)?;
            Ok(2)
        }
    }
}

fn balance(a: &BalanceArgs, out: Option<&Path>) -> Result<u8> {
    let lemma = Lemma::parse(&a.lemma)?;
    let params = params_from_ms(a.m, a.s, a.t)?;
    let sizes = PartSizes { sizes: parse_list(&a.sizes)?, params };
    let eps = match &a.eps {
        Some(e) => parse_rational(e)?,
        None => lemma.default_eps(&params),
    };
    let text = if lemma == Lemma::SingPart {
        let table = balancing::plan_singular_partition(&sizes, &eps)?;
        balancing::check_partition_table(&sizes, &table)?;
        json(&table)?
    } else {
        let plan = balancing::plan(lemma, &sizes, &eps)?;
        balancing::apply_plan(&sizes, &plan)?;
        json(&plan)?
    };
    emit(out, &text)?;
    Ok(0)
}

fn partition(a: &PartitionArgs, seed: u64, out: Option<&Path>) -> Result<u8> {
    let host = read_graph(&a.host)?;
    let params = RParams::from_r_s(a.r, a.s, Variant::B)?;
    let mut constants = PartitionConstants::defaults(&params);
    if let Some(b) = a.beta {
        constants.beta = b;
    }
    if let Some(g) = &a.gammas {
        constants.gammas = parse_list(g)?;
    }
    let outcome = find_partition(&host, &params, constants, &Seed::new(seed))?;
    let mut value = serde_json::to_value(&outcome)?;
    let mut flagged = !outcome.report.all_hold() || !outcome.min_degree_ok;
    if a.with_absorber {
        let fam = kfactor::absorber::build_pair_families(&host, params.m, a.k)?;
        let cfg = kfactor::absorber::AbsorberConfig { target: a.absorber_target, ..Default::default() };
        let absorber = match kfactor::absorber::sample_absorber(&host, &fam, &cfg, &Seed::new(seed).child(1)) {
            Ok(abs) => serde_json::to_value(&abs)?,
            Err(e) => {
                flagged = true;
                serde_json::json!({ "failure": e.to_string() })
            }
        };
        value["absorber"] = absorber;
    }
    emit(out, &serde_json::to_string_pretty(&value)?)?;
    Ok(if flagged { 2 } else { 0 })
}

fn regcheck(a: &RegcheckArgs, seed: u64, out: Option<&Path>) -> Result<u8> {
    let host = read_graph(&a.host)?;
    let x: Vec<usize> = parse_list(&a.x)?;
    let y: Vec<usize> = parse_list(&a.y)?;
    let eps = parse_rational(&a.eps)?;
    let d = a.d.as_deref().map(parse_rational).transpose()?;
    let s = Seed::new(seed);
    let stats = kfactor::regularity::check_eps_regular(&host, &x, &y, &eps, d.as_ref(), a.sampled.then_some(&s))?;
    emit(out, &json(&stats)?)?;
    Ok(0)
}

fn trial_spec(h: &HostArgs, seed: u64) -> Result<TrialSpec> {
    let (graph, label) = match h.host_kind {
        HostKind::File => {
            let path = h.host.as_ref().ok_or_else(|| anyhow!("--host-kind file needs --host"))?;
            (read_graph(path)?, path.display().to_string())
        }
        kind => {
            let n = h.n.ok_or_else(|| anyhow!("--n is required for generated hosts"))?;
            match kind {
                HostKind::Empty => (Graph::empty(n), "empty".to_string()),
                HostKind::Complete => (Graph::complete(n), "complete".to_string()),
                _ => {
                    let alpha = h.alpha.as_deref().ok_or_else(|| anyhow!("--alpha is required for extremal hosts"))?;
                    (gen_extremal_host(n, &parse_rational(alpha)?)?, format!("extremal alpha={alpha}"))
                }
            }
        }
    };
    if !h.force && graph.n() > threshold::desk_cap(h.r) {
        bail!("n={} exceeds the desk-scale cap {} for r={} (use --force)", graph.n(), threshold::desk_cap(h.r), h.r);
    }
    let mut spec = TrialSpec::new(graph, label, h.r, h.trials, seed)?;
    spec.budget = h.budget;
    Ok(spec)
}

fn sweep_cmd(a: &SweepArgs, seed: u64, out: Option<&Path>) -> Result<u8> {
    let spec = trial_spec(&a.host, seed)?;
    let grid: Vec<Probability> = a.grid.split(',').map(|p| Probability::parse(p.trim())).collect::<Result<_, _>>()?;
    let start = Instant::now();
    let res = threshold::sweep(&spec, &grid)?;
    eprintln!("sweep: {} points x {} trials in {:.2?}", grid.len(), spec.trials, start.elapsed());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(threshold::SWEEP_CSV_HEADER)?;
    for row in threshold::sweep_csv_rows(&res) {
        w.write_record(&row)?;
    }
    emit(out, &String::from_utf8(w.into_inner()?)?)?;
    if let Some(path) = &a.json {
        fs::write(path, json(&res)?)?;
    }
    for pt in res.points.iter().filter(|p| p.indeterminate > 0) {
        eprintln!("warning: {} indeterminate trials at p={}", pt.indeterminate, pt.p);
    }
    Ok(if res.flagged { 2 } else { 0 })
}

fn bisect_cmd(a: &BisectArgs, seed: u64, out: Option<&Path>) -> Result<u8> {
    let spec = trial_spec(&a.host, seed)?;
    let cfg = BisectConfig { lo: a.lo, hi: a.hi, target: a.target, tolerance: a.tolerance, ..BisectConfig::default() };
    let start = Instant::now();
    let b = threshold::bisect_threshold(&spec, &cfg)?;
    eprintln!("bisect: {} probes in {:.2?}", b.probes.len(), start.elapsed());
    emit(out, &json(&b)?)?;
    Ok(if b.probes.iter().any(|p| p.indeterminate > 0) { 2 } else { 0 })
}

fn table_cmd(a: &TableArgs, seed: u64, out: Option<&Path>) -> Result<u8> {
    let case = AlphaCase::parse(&a.case)?;
    let ns: Vec<usize> = parse_list(&a.ns)?;
    let start = Instant::now();
    let row = threshold::reproduce_table_row(case, &ns, a.trials, seed, a.tolerance)?;
    eprintln!("table: {} sizes in {:.2?}", ns.len(), start.elapsed());
    emit(out, &json(&row)?)?;
    Ok(if row.verdict == "consistent" { 0 } else { 2 })
}

fn run(cli: Cli) -> Result<u8> {
    let out = cli.out.as_deref();
    let seed = cli.seed;
    let cmd = cli.cmd;
    threshold::in_pool(cli.threads, move || -> Result<u8> {
        match &cmd {
            Cmd::Gen { kind } => {
                emit(out, &gen(kind, seed)?.to_json_string())?;
                Ok(0)
            }
            Cmd::Solve(a) => solve(a, out),
            Cmd::Tile { cmd: TileCmd::Run(a) } => tile_run(a, out),
            Cmd::Tile { cmd: TileCmd::Verify { cert, mode } } => tile_verify(cert, *mode, out),
            Cmd::Balance(a) => balance(a, out),
            Cmd::Partition(a) => partition(a, seed, out),
            Cmd::Regcheck(a) => regcheck(a, seed, out),
            Cmd::Sweep(a) => sweep_cmd(a, seed, out),
            Cmd::Bisect(a) => bisect_cmd(a, seed, out),
            Cmd::Table(a) => table_cmd(a, seed, out),
        }
    })?
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
