//! Monte Carlo trials on `G ∪ G(n, p)`: success curves, the 50% crossing and power-law fits.

use crate::error::{param, Error, Result};
use crate::graph::{gen_extremal_host, gen_gnp, graph_union, Graph};
use crate::ratio::{format_rational, q, Probability, Q};
use crate::rng::Seed;
use crate::solver::{solve_factor, validate_pieces, FactorInstance, Piece, Status};
use rayon::prelude::*;
use serde::Serialize;

/// `φ(s) = 2s / ((s−1)(s+2))`.
pub fn phi(s: usize) -> Result<Q> {
    if s < 2 {
        return param("phi needs s >= 2");
    }
    let s = s as i64;
    Ok(q(2 * s, (s - 1) * (s + 2)))
}

/// `log n / n` for `s = 2`, `n^{−φ(s)}` otherwise.
pub fn p_s(n: usize, s: usize) -> Result<f64> {
    if n < 3 {
        return param("p_s needs n >= 3");
    }
    let nf = n as f64;
    if s == 2 {
        Ok(nf.ln() / nf)
    } else {
        Ok(nf.powf(-crate::ratio::to_f64(&phi(s)?)))
    }
}

/// Largest desk-scale `n` per clique size; beyond it exact refutations blow up.
pub fn desk_cap(r: usize) -> usize {
    match r {
        0..=2 => 200,
        3 => 60,
        4 => 48,
        _ => 36,
    }
}

#[derive(Debug, Clone)]
pub struct TrialSpec {
    pub host: Graph,
    pub host_label: String,
    pub r: usize,
    pub trials: usize,
    pub master: u64,
    pub budget: u64,
}

impl TrialSpec {
    pub fn new(host: Graph, host_label: impl Into<String>, r: usize, trials: usize, master: u64) -> Result<Self> {
        if r < 2 || host.n() % r != 0 {
            return param(format!("n={} must be divisible by r={r} >= 2", host.n()));
        }
        Ok(TrialSpec { host, host_label: host_label.into(), r, trials, master, budget: crate::solver::DEFAULT_BUDGET })
    }

    pub fn n(&self) -> usize {
        self.host.n()
    }

    fn seed(&self, p_idx: u64, trial: u64) -> Seed {
        Seed::new(self.master).child(p_idx).child(trial)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialOutcome {
    Success,
    Failure,
    Indeterminate,
}

/// One sample of `host ∪ G(n, p)` and an exact factor decision; found factors are re-validated.
pub fn run_trial(spec: &TrialSpec, p_idx: u64, p: Probability, trial: u64) -> Result<(TrialOutcome, u64)> {
    let noise = gen_gnp(spec.n(), p, &spec.seed(p_idx, trial));
    let g = graph_union(&spec.host, &noise)?;
    let res = solve_factor(&FactorInstance::cliques(g.clone(), spec.r), spec.budget)?;
    let outcome = match res.status {
        Status::Found => {
            validate_pieces(&g, &Piece::Clique(spec.r), &[], &res.cliques)?;
            TrialOutcome::Success
        }
        Status::None => TrialOutcome::Failure,
        Status::Timeout => TrialOutcome::Indeterminate,
    };
    Ok((outcome, res.nodes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub p_index: usize,
    pub p: f64,
    pub successes: usize,
    pub failures: usize,
    pub indeterminate: usize,
    pub trials: usize,
    /// `None` when every trial was indeterminate.
    pub probability: Option<f64>,
    pub nodes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub n: usize,
    pub r: usize,
    pub host: String,
    pub master_seed: u64,
    pub points: Vec<SweepPoint>,
    /// Isotonic (non-decreasing) fit of the raw probabilities.
    pub smoothed: Vec<f64>,
    /// Grid positions where the curve drops significantly (one-sided 99%).
    pub monotone_violations: Vec<usize>,
    pub flagged: bool,
}

fn probe_points(spec: &TrialSpec, probes: &[(u64, Probability)]) -> Result<Vec<SweepPoint>> {
    let jobs: Vec<(usize, u64)> = (0..probes.len()).flat_map(|i| (0..spec.trials as u64).map(move |t| (i, t))).collect();
    let results: Vec<Result<(TrialOutcome, u64)>> = jobs.par_iter().map(|&(i, t)| run_trial(spec, probes[i].0, probes[i].1, t)).collect();
    let mut points: Vec<SweepPoint> = probes
        .iter()
        .map(|&(idx, p)| SweepPoint {
            p_index: idx as usize,
            p: p.value(),
            successes: 0,
            failures: 0,
            indeterminate: 0,
            trials: spec.trials,
            probability: None,
            nodes: 0,
        })
        .collect();
    for (&(i, _), res) in jobs.iter().zip(results) {
        let (out, nodes) = res?;
        let pt = &mut points[i];
        pt.nodes += nodes;
        match out {
            TrialOutcome::Success => pt.successes += 1,
            TrialOutcome::Failure => pt.failures += 1,
            TrialOutcome::Indeterminate => pt.indeterminate += 1,
        }
    }
    for pt in &mut points {
        let decided = pt.successes + pt.failures;
        pt.probability = (decided > 0).then(|| pt.successes as f64 / decided as f64);
    }
    Ok(points)
}

/// Pool-adjacent-violators fit.
pub fn isotonic(values: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::new();
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (b, nb) = blocks[blocks.len() - 1];
            let (a, na) = blocks[blocks.len() - 2];
            if a <= b {
                break;
            }
            blocks.pop();
            let last = blocks.last_mut().expect("two blocks");
            *last = ((a * na as f64 + b * nb as f64) / (na + nb) as f64, na + nb);
        }
    }
    blocks.into_iter().flat_map(|(v, c)| std::iter::repeat_n(v, c)).collect()
}

fn significant_drop(a: &SweepPoint, b: &SweepPoint) -> bool {
    let (na, nb) = ((a.successes + a.failures) as f64, (b.successes + b.failures) as f64);
    let (Some(pa), Some(pb)) = (a.probability, b.probability) else { return false };
    if pb >= pa {
        return false;
    }
    let pool = (a.successes + b.successes) as f64 / (na + nb);
    let se = (pool * (1.0 - pool) * (1.0 / na + 1.0 / nb)).sqrt();
    se > 0.0 && (pa - pb) / se > 2.326
}

pub fn sweep(spec: &TrialSpec, grid: &[Probability]) -> Result<SweepResult> {
    if grid.is_empty() {
        return param("empty probability grid");
    }
    let probes: Vec<(u64, Probability)> = grid.iter().enumerate().map(|(i, &p)| (i as u64, p)).collect();
    let points = probe_points(spec, &probes)?;
    let raw: Vec<f64> = points.iter().map(|p| p.probability.unwrap_or(0.0)).collect();
    let smoothed = isotonic(&raw);
    let monotone_violations: Vec<usize> = (1..points.len()).filter(|&i| significant_drop(&points[i - 1], &points[i])).collect();
    let flagged = !monotone_violations.is_empty() || points.iter().any(|p| p.indeterminate > 0);
    Ok(SweepResult { n: spec.n(), r: spec.r, host: spec.host_label.clone(), master_seed: spec.master, points, smoothed, monotone_violations, flagged })
}

/// CSV rows `n,p,successes,trials,indeterminates`.
pub fn sweep_csv_rows(res: &SweepResult) -> Vec<[String; 5]> {
    res.points
        .iter()
        .map(|p| [res.n.to_string(), p.p.to_string(), p.successes.to_string(), p.trials.to_string(), p.indeterminate.to_string()])
        .collect()
}

pub const SWEEP_CSV_HEADER: [&str; 5] = ["n", "p", "successes", "trials", "indeterminates"];

/// Wilson score interval at 95%.
pub fn wilson(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959964f64;
    let nf = trials as f64;
    let ph = successes as f64 / nf;
    let den = 1.0 + z * z / nf;
    let mid = (ph + z * z / (2.0 * nf)) / den;
    let half = z * (ph * (1.0 - ph) / nf + z * z / (4.0 * nf * nf)).sqrt() / den;
    ((mid - half).max(0.0), (mid + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bisection {
    /// `0` when the lower end already succeeds.
    pub p_hat: f64,
    pub below_grid: bool,
    pub bracket: (f64, f64),
    pub probes: Vec<SweepPoint>,
    /// Wilson intervals of the success rates at the final bracket ends.
    pub lo_ci: (f64, f64),
    pub hi_ci: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct BisectConfig {
    pub lo: f64,
    pub hi: f64,
    pub target: f64,
    /// Stop when `hi/lo ≤ 1 + tolerance`.
    pub tolerance: f64,
    pub max_probes: usize,
}

impl Default for BisectConfig {
    fn default() -> Self {
        BisectConfig { lo: 1e-3, hi: 1.0, target: 0.5, tolerance: 0.05, max_probes: 40 }
    }
}

/// Geometric bisection on `p` with a fixed trial count per probe.
pub fn bisect_threshold(spec: &TrialSpec, cfg: &BisectConfig) -> Result<Bisection> {
    if !(cfg.lo > 0.0 && cfg.lo < cfg.hi && cfg.hi <= 1.0) {
        return param(format!("need 0 < lo < hi <= 1, got [{}, {}]", cfg.lo, cfg.hi));
    }
    let mut idx = 0u64;
    let mut probe = |p: f64| -> Result<SweepPoint> {
        let pt = probe_points(spec, &[(idx, Probability::from_f64(p)?)])?.remove(0);
        idx += 1;
        Ok(pt)
    };
    let mut probes = Vec::new();
    let lo_pt = probe(cfg.lo)?;
    let rate = |pt: &SweepPoint| pt.probability.unwrap_or(0.0);
    if rate(&lo_pt) >= cfg.target {
        let ci = wilson(lo_pt.successes, lo_pt.successes + lo_pt.failures);
        return Ok(Bisection { p_hat: 0.0, below_grid: true, bracket: (0.0, cfg.lo), probes: vec![lo_pt], lo_ci: (0.0, 1.0), hi_ci: ci });
    }
    let hi_pt = probe(cfg.hi)?;
    if rate(&hi_pt) < cfg.target {
        return Err(Error::Infeasible(format!(
            "no bracket: success rate {:.3} at p={} and {:.3} at p={}",
            rate(&lo_pt),
            cfg.lo,
            rate(&hi_pt),
            cfg.hi
        )));
    }
    let (mut lo, mut hi) = (cfg.lo, cfg.hi);
    let (mut lo_last, mut hi_last) = (lo_pt.clone(), hi_pt.clone());
    probes.push(lo_pt);
    probes.push(hi_pt);
    while hi / lo > 1.0 + cfg.tolerance && probes.len() < cfg.max_probes {
        let mid = (lo * hi).sqrt();
        let pt = probe(mid)?;
        if rate(&pt) >= cfg.target {
            hi = mid;
            hi_last = pt.clone();
        } else {
            lo = mid;
            lo_last = pt.clone();
        }
        probes.push(pt);
    }
    let ci = |pt: &SweepPoint| wilson(pt.successes, pt.successes + pt.failures);
    Ok(Bisection { p_hat: (lo * hi).sqrt(), below_grid: false, bracket: (lo, hi), lo_ci: ci(&lo_last), hi_ci: ci(&hi_last), probes })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
}

/// Least-squares slope of `ln p` against `ln n`.
pub fn exponent_fit(ns: &[f64], ps: &[f64]) -> Result<PowerFit> {
    if ns.len() != ps.len() || ns.len() < 3 {
        return param("exponent fit needs at least 3 paired points");
    }
    if ns.iter().chain(ps).any(|&v| v <= 0.0 || !v.is_finite()) {
        return param("exponent fit needs positive finite values");
    }
    let xs: Vec<f64> = ns.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = ps.iter().map(|v| v.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx < 1e-12 {
        return Err(Error::Parameter("degenerate spread in n".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = if xs.len() > 2 { (rss / (k - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(PowerFit { slope, intercept, stderr })
}

/// Columns of the `K_4` threshold table, plus the matching calibration row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaCase {
    Zero,
    Below14,
    At14,
    Between14And12,
    At12,
    Between12And34,
    Above34,
    Matching,
}

impl AlphaCase {
    pub const ALL: [AlphaCase; 8] = [
        AlphaCase::Zero,
        AlphaCase::Below14,
        AlphaCase::At14,
        AlphaCase::Between14And12,
        AlphaCase::At12,
        AlphaCase::Between12And34,
        AlphaCase::Above34,
        AlphaCase::Matching,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "0" => AlphaCase::Zero,
            "(0,1/4)" => AlphaCase::Below14,
            "1/4" => AlphaCase::At14,
            "(1/4,1/2)" => AlphaCase::Between14And12,
            "1/2" => AlphaCase::At12,
            "(1/2,3/4)" => AlphaCase::Between12And34,
            "[3/4,1]" => AlphaCase::Above34,
            "matching" => AlphaCase::Matching,
            _ => return param(format!("unknown alpha case {s:?}")),
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            AlphaCase::Zero => "0",
            AlphaCase::Below14 => "(0,1/4)",
            AlphaCase::At14 => "1/4",
            AlphaCase::Between14And12 => "(1/4,1/2)",
            AlphaCase::At12 => "1/2",
            AlphaCase::Between12And34 => "(1/2,3/4)",
            AlphaCase::Above34 => "[3/4,1]",
            AlphaCase::Matching => "matching",
        }
    }

    pub fn r(&self) -> usize {
        if *self == AlphaCase::Matching {
            2
        } else {
            4
        }
    }

    /// Host density used for the row.
    pub fn alpha(&self) -> Q {
        match self {
            AlphaCase::Zero | AlphaCase::Matching => q(0, 1),
            AlphaCase::Below14 => q(1, 8),
            AlphaCase::At14 => q(1, 4),
            AlphaCase::Between14And12 => q(3, 8),
            AlphaCase::At12 => q(1, 2),
            AlphaCase::Between12And34 => q(5, 8),
            AlphaCase::Above34 => q(3, 4),
        }
    }

    /// Polynomial exponent of the threshold; `None` when the host alone suffices.
    pub fn expected_exponent(&self) -> Option<f64> {
        match self {
            AlphaCase::Zero | AlphaCase::Below14 => Some(-0.5),
            AlphaCase::At14 => Some(-0.6),
            AlphaCase::Between14And12 => Some(-2.0 / 3.0),
            AlphaCase::At12 | AlphaCase::Between12And34 | AlphaCase::Matching => Some(-1.0),
            AlphaCase::Above34 => None,
        }
    }

    pub fn host(&self, n: usize) -> Result<Graph> {
        let a = self.alpha();
        if a == q(0, 1) {
            Ok(Graph::empty(n))
        } else {
            gen_extremal_host(n, &a)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub case: AlphaCase,
    pub alpha: String,
    pub r: usize,
    pub ns: Vec<usize>,
    pub p_hats: Vec<f64>,
    pub below_grid: Vec<bool>,
    pub fit: Option<PowerFit>,
    pub expected: Option<f64>,
    pub tolerance: f64,
    pub verdict: String,
}

pub fn reproduce_table_row(case: AlphaCase, ns: &[usize], trials: usize, master: u64, tolerance: f64) -> Result<TableRow> {
    let r = case.r();
    if let Some(&n) = ns.iter().find(|&&n| n > desk_cap(r)) {
        return Err(Error::Size { what: format!("n for r={r}"), got: n, limit: desk_cap(r) });
    }
    let mut p_hats = Vec::new();
    let mut below = Vec::new();
    for (i, &n) in ns.iter().enumerate() {
        let spec = TrialSpec::new(case.host(n)?, case.label(), r, trials, Seed::new(master).child(i as u64).digest())?;
        let b = bisect_threshold(&spec, &BisectConfig::default())?;
        p_hats.push(b.p_hat);
        below.push(b.below_grid);
    }
    let expected = case.expected_exponent();
    let fit = if below.iter().any(|&b| b) || ns.len() < 3 {
        None
    } else {
        Some(exponent_fit(&ns.iter().map(|&n| n as f64).collect::<Vec<_>>(), &p_hats)?)
    };
    let verdict = match (expected, fit) {
        (None, _) if below.iter().all(|&b| b) => "consistent",
        (Some(e), Some(f)) if (f.slope - e).abs() <= tolerance => "consistent",
        (Some(_), None) if ns.len() < 3 => "insufficient",
        _ => "inconsistent",
    };
    Ok(TableRow {
        case,
        alpha: format_rational(&case.alpha()),
        r,
        ns: ns.to_vec(),
        p_hats,
        below_grid: below,
        fit,
        expected,
        tolerance,
        verdict: verdict.into(),
    })
}

/// Runs `f` on a dedicated pool of `threads` workers (the global pool when `None`).
pub fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().map_err(|e| Error::Parameter(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}
