//! Command-line front end. Exit codes: 0 pass, 1 property failure, 2 usage
//! or domain error.

mod query;
mod sweep;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use query::{read_query_file, BallRecord, QueryArgs, QueryFile, QueryRecord, QUERY_FILE_VERSION};
pub use sweep::{sweep_records, sweep_rows, GridArgs, SweepRow, SWEEP_COLUMNS, SWEEP_VERSION};

use crate::error::{invalid, Error, Result};
use crate::estimates::{
    intersection_width_estimate, phi_all, predict_active_term, Branch, OrderEstimate, Prediction,
    Thresholds, WidthQuery,
};
use crate::extremal::{
    build_witness_with, verify_witness_detailed, Enumeration, VertexFamily, WitnessDocument,
    DEFAULT_SAMPLES, ENUMERATION_CAP,
};
use crate::mixed_norm::{BallSpec, ExponentPair, Shape};
use crate::numeric::{width_profile, Budget, PointSource, WidthRun};
use crate::suites::{run_suite, Suite, SuiteOptions};

pub const ESTIMATE_VERSION: u32 = 1;
pub const WIDTH_VERSION: u32 = 1;
/// Relative slack allowed when checking witness inclusions.
pub const WITNESS_TOL: f64 = 1e-9;

#[derive(Parser, Debug)]
#[command(name = "widthlab", version, about = "Kolmogorov widths of mixed-norm balls and their intersections")]
pub struct Cli {
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "WIDTHLAB_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Order estimate, all five candidate terms and the predicted case.
    Estimate(EstimateArgs),
    /// Candidate terms over a parameter grid as CSV.
    Sweep(SweepArgs),
    /// Runs a property suite and writes its JSON report.
    Verify(VerifyArgs),
    /// Builds and checks the lower-bound witness of a two-ball query.
    Witness(WitnessArgs),
    /// Numeric upper bound on the width of a vertex family or ball sample.
    Width(WidthArgs),
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub query: QueryArgs,
    #[arg(long)]
    pub json: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub query: QueryArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Accepted for symmetry with other commands; CSV is the only format.
    #[arg(long)]
    pub csv: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// holder, identity4, averaging, witnesses, sandwich, thresholds,
    /// octahedron or monotonicity.
    pub suite: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Restarts x iterations for numeric suites, e.g. `4x200`.
    #[arg(long)]
    pub budget: Option<Budget>,
    #[arg(long)]
    pub cases: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EnumerationMode {
    Auto,
    Full,
    Sampled,
}

#[derive(Args, Debug)]
pub struct WitnessArgs {
    #[command(flatten)]
    pub query: QueryArgs,
    #[arg(long, value_enum, default_value_t = EnumerationMode::Auto)]
    pub enumeration: EnumerationMode,
    /// Vertices drawn when the orbit is sampled.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Multiplies the witness scale before checking (negative controls).
    #[arg(long, default_value_t = 1.0, hide = true)]
    pub scale_factor: f64,
}

#[derive(Args, Debug)]
pub struct WidthArgs {
    #[arg(short = 'm')]
    pub m: usize,
    #[arg(short = 'k')]
    pub k: usize,
    #[arg(short = 'q', value_parser = query::parse_exponent)]
    pub q: crate::Exponent,
    #[arg(short = 's', long = "sigma", value_parser = query::parse_exponent)]
    pub sigma: crate::Exponent,
    /// Block pattern `r,l` of the vertex family.
    #[arg(long, conflicts_with = "ball", required_unless_present = "ball")]
    pub vertices: Option<String>,
    #[arg(long, default_value_t = 1.0, requires = "vertices")]
    pub scale: f64,
    /// Sample the boundary of this ball, `nu,p,theta`.
    #[arg(long, value_parser = query::parse_ball)]
    pub ball: Option<BallRecord>,
    /// Random boundary directions for --ball.
    #[arg(long, default_value_t = 64, requires = "ball")]
    pub samples: usize,
    #[arg(short = 'n', conflicts_with = "n_range", required_unless_present = "n_range")]
    pub n: Option<usize>,
    /// `lo:hi`; runs every n with warm starts.
    #[arg(long = "n-range")]
    pub n_range: Option<String>,
    #[arg(long, default_value_t = Budget::DEFAULT)]
    pub budget: Budget,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
    /// Per-iteration best values as CSV (n,restart,iteration,best).
    #[arg(long = "log-csv")]
    pub log_csv: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateRecord {
    pub query: QueryRecord,
    pub value: f64,
    pub argmin: Option<usize>,
    pub branch: Branch,
    /// `Φ_1..Φ_5`; `null` where a term is absent.
    pub phi: [f64; 5],
    pub thresholds: Thresholds,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prediction: Option<Prediction>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateDocument {
    pub version: u32,
    pub seed: u64,
    pub estimates: Vec<EstimateRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WidthDocument {
    pub version: u32,
    pub seed: u64,
    pub runs: Vec<WidthRun>,
}

pub fn estimate_record(query: &WidthQuery) -> Result<EstimateRecord> {
    let OrderEstimate { value, branch, thresholds } = intersection_width_estimate(query)?;
    let prediction = if query.is_two_ball() { Some(predict_active_term(query)?) } else { None };
    Ok(EstimateRecord {
        query: QueryRecord::from_query(query),
        value,
        argmin: branch.active,
        branch,
        phi: phi_all(query)?,
        thresholds,
        prediction,
    })
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence { .. } => 1,
        _ => 2,
    }
}

fn io_err(e: std::io::Error) -> Error {
    invalid(format!("i/o error: {e}"))
}

fn write_json<T: Serialize>(out: &mut dyn Write, v: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, v).map_err(|e| invalid(e.to_string()))?;
    writeln!(out).map_err(io_err)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| invalid(format!("cannot create {}: {e}", path.display())))
}

fn real(v: f64) -> String {
    if v.is_infinite() { "absent".into() } else { format!("{v:.6e}") }
}

fn branch_trace(b: &Branch) -> String {
    let mut s = format!("{} row {}", serde_json::to_value(b.display).unwrap_or_default().as_str().unwrap_or("?"), b.row);
    if let Some(j) = b.active {
        s += &format!(" [j={j}]");
    }
    if let Some(inner) = &b.inner {
        s += " -> ";
        s += &branch_trace(inner);
    }
    s
}

fn print_estimate(out: &mut dyn Write, r: &EstimateRecord, seed: u64) -> std::io::Result<()> {
    let q = &r.query;
    writeln!(out, "query m={} k={} n={} q={} sigma={}", q.m, q.k, q.n, q.q, q.sigma)?;
    for (i, b) in q.balls.iter().enumerate() {
        writeln!(out, "ball{} nu={} p={} theta={}", i + 1, b.nu, b.p, b.theta)?;
    }
    writeln!(out, "value {}", real(r.value))?;
    if let Some(j) = r.argmin {
        writeln!(out, "argmin {j}")?;
    }
    for (j, v) in r.phi.iter().enumerate() {
        writeln!(out, "phi{} {}", j + 1, real(*v))?;
    }
    let t = &r.thresholds;
    writeln!(out, "thresholds lower={} rows_full={} cols_full={}", real(t.lower), real(t.rows_full), real(t.cols_full))?;
    writeln!(out, "branch {}", branch_trace(&r.branch))?;
    if let Some(p) = &r.prediction {
        let boundary = if p.boundary { " (boundary)" } else { "" };
        writeln!(out, "predicted {}: {}{}", p.j, p.label, boundary)?;
    }
    writeln!(out, "seed {seed}")
}

fn cmd_estimate(a: &EstimateArgs, out: &mut dyn Write) -> Result<i32> {
    let records: Vec<EstimateRecord> =
        a.query.queries()?.iter().map(estimate_record).collect::<Result<_>>()?;
    if a.json {
        write_json(out, &EstimateDocument { version: ESTIMATE_VERSION, seed: a.seed, estimates: records })?;
    } else {
        for (i, r) in records.iter().enumerate() {
            if i > 0 {
                writeln!(out).map_err(io_err)?;
            }
            print_estimate(out, r, a.seed).map_err(io_err)?;
        }
    }
    Ok(0)
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<i32> {
    if a.query.file.is_some() {
        return Err(invalid("sweep takes its base query from flags"));
    }
    let rows = sweep_rows(&sweep_records(&a.query, &a.grid)?, a.seed)?;
    let write = |w: &mut dyn Write| -> Result<()> {
        let mut csv = csv::Writer::from_writer(w);
        for r in &rows {
            csv.serialize(r).map_err(|e| invalid(e.to_string()))?;
        }
        csv.flush().map_err(io_err)
    };
    match &a.out {
        Some(p) => write(&mut create(p)?)?,
        None => write(out)?,
    }
    Ok(0)
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let suite: Suite = a.suite.parse()?;
    let opts = SuiteOptions { seed: a.seed, budget: a.budget, cases: a.cases };
    let report = run_suite(suite, &opts)?;
    match &a.out {
        Some(p) => write_json(&mut create(p)?, &report)?,
        None => write_json(out, &report)?,
    }
    let status = if report.passed { "pass" } else { "FAIL" };
    writeln!(err, "{suite}: {status} ({} cases, {} failures)", report.cases, report.failures)
        .map_err(io_err)?;
    Ok(if report.passed { 0 } else { 1 })
}

fn cmd_witness(a: &WitnessArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    if !(a.scale_factor > 0.0 && a.scale_factor.is_finite()) {
        return Err(invalid("scale factor must be positive"));
    }
    let enumeration = match a.enumeration {
        EnumerationMode::Auto => Enumeration::Auto { cap: ENUMERATION_CAP, samples: a.samples, seed: a.seed },
        EnumerationMode::Full => Enumeration::Full,
        EnumerationMode::Sampled => Enumeration::Sampled { count: a.samples, seed: a.seed },
    };
    let mut code = 0;
    let mut docs = Vec::new();
    for query in a.query.queries()? {
        query.require_two_balls()?;
        let Some(w) = build_witness_with(&query, enumeration)? else {
            writeln!(err, "no witness: the predicted band has no lower-bound construction").map_err(io_err)?;
            code = 1;
            continue;
        };
        let w = w.with_scale(w.scale * a.scale_factor);
        let v = verify_witness_detailed(&w, &query.balls, WITNESS_TOL)?;
        if let Some(bad) = &v.offending {
            let json = serde_json::to_string(bad).unwrap_or_default();
            writeln!(err, "verification failed (worst ratio {:e}); offending vertex {json}", v.worst_ratio)
                .map_err(io_err)?;
            code = 1;
        }
        let mut doc = WitnessDocument::new(&w, &query, &v);
        doc.seed = Some(a.seed);
        docs.push(doc);
    }
    match docs.len() {
        0 => {}
        1 => write_json(out, &docs[0])?,
        _ => write_json(out, &docs)?,
    }
    Ok(code)
}

fn pair_arg(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s.split_once(',').ok_or_else(|| invalid(format!("expected r,l but got {s:?}")))?;
    let p = |t: &str| t.trim().parse::<usize>().map_err(|_| invalid(format!("bad block size {t:?}")));
    Ok((p(a)?, p(b)?))
}

fn n_range(s: &str) -> Result<std::ops::RangeInclusive<usize>> {
    let (a, b) = s.split_once(':').ok_or_else(|| invalid(format!("expected lo:hi but got {s:?}")))?;
    let p = |t: &str| t.trim().parse::<usize>().map_err(|_| invalid(format!("bad n {t:?}")));
    let (lo, hi) = (p(a)?, p(b)?);
    if lo > hi {
        return Err(invalid("empty n range"));
    }
    Ok(lo..=hi)
}

fn write_logs(w: &mut dyn Write, runs: &[WidthRun]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["n", "restart", "iteration", "best"]).map_err(|e| invalid(e.to_string()))?;
    for run in runs {
        let Some(res) = &run.result else { continue };
        for (r, trace) in res.logs.iter().enumerate() {
            for (i, v) in trace.iter().enumerate() {
                csv.serialize((run.n, r, i, v)).map_err(|e| invalid(e.to_string()))?;
            }
        }
    }
    csv.flush().map_err(io_err)
}

fn cmd_width(a: &WidthArgs, out: &mut dyn Write) -> Result<i32> {
    let shape = Shape::new(a.m, a.k)?;
    let target = ExponentPair::from_exponents(a.q, a.sigma);
    let source = match (&a.vertices, &a.ball) {
        (Some(v), _) => {
            if !(a.scale > 0.0 && a.scale.is_finite()) {
                return Err(invalid("scale must be positive"));
            }
            let (r, l) = pair_arg(v)?;
            let family = VertexFamily::new(shape, r, l, Enumeration::Auto {
                cap: ENUMERATION_CAP,
                samples: DEFAULT_SAMPLES,
                seed: a.seed,
            })?;
            PointSource::Vertices { family, scale: a.scale }
        }
        (None, Some(b)) => {
            let ball = BallSpec::new(b.nu, ExponentPair::from_exponents(b.p, b.theta), shape)?;
            PointSource::BallBoundary { ball, count: a.samples, seed: a.seed }
        }
        (None, None) => return Err(invalid("give --vertices or --ball")),
    };
    let ns = match (&a.n_range, a.n) {
        (Some(s), _) => n_range(s)?,
        (None, Some(n)) => n..=n,
        (None, None) => return Err(invalid("give -n or --n-range")),
    };
    if *ns.end() > shape.len() {
        return Err(invalid(format!("n = {} exceeds mk = {}", ns.end(), shape.len())));
    }
    let runs = width_profile(source, ns, target, a.budget, a.seed)?;
    if let Some(p) = &a.log_csv {
        write_logs(&mut create(p)?, &runs)?;
    }
    if a.json {
        write_json(out, &WidthDocument { version: WIDTH_VERSION, seed: a.seed, runs })?;
    } else {
        for run in &runs {
            let res = run.result.as_ref().expect("run finished");
            writeln!(out, "n={} width<={:.9} ({}, budget {}, seed {})", run.n, res.value, res.bound_kind, run.budget, run.seed)
                .map_err(io_err)?;
        }
    }
    Ok(0)
}

fn init_threads(n: Option<usize>) {
    if let Some(n) = n.filter(|&n| n > 0) {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    init_threads(cli.threads);
    let res = match &cli.command {
        Command::Estimate(a) => cmd_estimate(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Verify(a) => cmd_verify(a, out, err),
        Command::Witness(a) => cmd_witness(a, out, err),
        Command::Width(a) => cmd_width(a, out),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            error_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn block_and_range_syntax() {
        assert_eq!(pair_arg("2, 3").unwrap(), (2, 3));
        assert!(pair_arg("2").is_err());
        assert_eq!(n_range("1:4").unwrap(), 1..=4);
        assert!(n_range("4:1").is_err());
    }
}
