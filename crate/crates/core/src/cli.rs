//! The `sepcheck` command line.
//!
//! Exit codes: 0 when no violation is found (or a decomposition verifies),
//! 2 for an inseparable verdict (or a decomposition mismatch), 1 on errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::decomp::{fourier_decomposition, read_decomposition, verify_decomposition, FourierFamily};
use crate::error::{Error, Result};
use crate::sepcrit::{analyze, SamplingBudget, SeparabilityReport, Tolerances, Verdict};
use crate::statefab::{read_state, write_state, BipartiteState, Family};

pub const SCHEMA: u32 = 1;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FLAGGED: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "sepcheck", version, about = "Separability checks for bipartite density matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the partial-transpose test and the range criterion on one state.
    Analyze {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Analyze a parametrised family over a grid of parameter values.
    Sweep {
        #[command(flatten)]
        family: FamilyArgs,
        /// Comma-separated parameter values.
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["from", "to", "points"])]
        grid: Vec<f64>,
        #[arg(long, requires = "to")]
        from: Option<f64>,
        #[arg(long, requires = "from")]
        to: Option<f64>,
        /// Number of evenly spaced points between --from and --to.
        #[arg(long, default_value_t = 11)]
        points: usize,
        /// Worker threads; rows are reported in ascending order regardless.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Check a separable decomposition against a state.
    DecomposeVerify {
        /// State file.
        #[arg(long, requires = "decomposition", conflicts_with = "builtin")]
        input: Option<PathBuf>,
        /// Decomposition file.
        #[arg(long, requires = "input")]
        decomposition: Option<PathBuf>,
        /// Built-in Fourier decomposition: rho_symmetric or sigma_symmetric.
        #[arg(long)]
        builtin: Option<String>,
        /// Number of Fourier points (defaults to the smallest exact count).
        #[arg(long, requires = "builtin")]
        points: Option<usize>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        no_timestamp: bool,
    },
    /// Write a named family to a state file.
    DumpState {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct FamilyArgs {
    /// Family name, optionally with its parameter, e.g. `rho_a(0.5)` or
    /// `eps_mix(rho_a(0.5),0.05)`.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    param: Option<f64>,
    /// Base state for `--family eps_mix`; `--param` is then the mixing weight.
    #[arg(long)]
    base: Option<String>,
}

#[derive(Args, Debug)]
struct StateArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// State file (instead of --family).
    #[arg(long, conflicts_with_all = ["family", "param", "base"])]
    input: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, default_value_t = 1e-9)]
    tol_eig: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol_rank: f64,
    #[arg(long, default_value_t = 1e-7)]
    tol_member: f64,
    /// Random samples per free chart parameter.
    #[arg(long, default_value_t = 25)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Leave the generation time out of JSON output.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

/// Resolved settings shared by the analysing commands.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub tolerances: Tolerances,
    pub budget: SamplingBudget,
    pub json: bool,
    pub output: Option<PathBuf>,
    pub timestamp: bool,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        for (name, v) in [("tol-eig", self.tol_eig), ("tol-rank", self.tol_rank), ("tol-member", self.tol_member)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Precondition(format!("--{name} must be positive, got {v}")));
            }
        }
        Ok(RunConfig {
            tolerances: Tolerances { tol_eig: self.tol_eig, tol_rank: self.tol_rank, tol_member: self.tol_member },
            budget: SamplingBudget { samples_per_param: self.samples, seed: self.seed, ..SamplingBudget::default() },
            json: self.format == Format::Json,
            output: self.output.clone(),
            timestamp: !self.no_timestamp,
        })
    }
}

impl FamilyArgs {
    fn family(&self) -> Result<Family> {
        let name = self.family.as_deref().ok_or_else(|| Error::Precondition("--family is required".into()))?;
        if name == "eps_mix" {
            let base = self.base.as_deref().ok_or_else(|| Error::Precondition("eps_mix needs --base".into()))?;
            let eps = self.param.ok_or_else(|| Error::Precondition("eps_mix needs --param".into()))?;
            return Ok(Family::EpsMix(Box::new(base.parse()?), eps));
        }
        if self.base.is_some() {
            return Err(Error::Precondition("--base only applies to eps_mix".into()));
        }
        if name.contains('(') {
            if self.param.is_some() {
                return Err(Error::Precondition("give the parameter either inline or with --param".into()));
            }
            return name.parse();
        }
        if self.param.is_some() && !Family::has_param(name) {
            return Err(Error::Precondition(format!("family `{name}` takes no parameter")));
        }
        Family::from_name(name, self.param)
    }

    /// The family with its parameter replaced by `x`.
    fn at(&self, x: f64) -> Result<Family> {
        let name = self.family.as_deref().ok_or_else(|| Error::Precondition("--family is required".into()))?;
        if self.param.is_some() {
            return Err(Error::Precondition("sweep takes its parameters from the grid, not --param".into()));
        }
        if name == "eps_mix" {
            let base = self.base.as_deref().ok_or_else(|| Error::Precondition("eps_mix needs --base".into()))?;
            return Ok(Family::EpsMix(Box::new(base.parse()?), x));
        }
        if !Family::has_param(name) {
            return Err(Error::Precondition(format!("family `{name}` has no parameter to sweep")));
        }
        Family::from_name(name, Some(x))
    }
}

impl StateArgs {
    fn load(&self) -> Result<BipartiteState> {
        match &self.input {
            Some(path) => read_state(&read_file(path)?),
            None if self.family.family.is_some() => self.family.family()?.build(),
            None => Err(Error::Precondition("give exactly one of --family or --input".into())),
        }
    }
}

fn read_file(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: u32,
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_unix: Option<u64>,
    #[serde(flatten)]
    body: &'a T,
}

fn envelope<T: Serialize>(command: &'static str, timestamp: bool, body: &T) -> String {
    let generated_unix =
        timestamp.then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
    let e = Envelope { schema: SCHEMA, tool: "sepcheck", version: VERSION, command, generated_unix, body };
    let mut s = serde_json::to_string_pretty(&e).expect("report serialises");
    s.push('\n');
    s
}

fn emit(out: &mut dyn Write, path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(Error::from),
    }
}

/// Runs the CLI on `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Analyze { state, run } => cmd_analyze(&state.load()?, &run.config()?, out),
        Command::Sweep { family, grid, from, to, points, jobs, run } => {
            let grid = match (from, to) {
                (Some(a), Some(b)) => linspace(a, b, points)?,
                _ => grid,
            };
            cmd_sweep(&family, grid, jobs, &run.config()?, out)
        }
        Command::DecomposeVerify { input, decomposition, builtin, points, tol, format, output, no_timestamp } => {
            let (state, d) = match (builtin, input, decomposition) {
                (Some(name), None, None) => {
                    let which: FourierFamily = name.parse()?;
                    let n = points.unwrap_or(which.min_points());
                    let s = crate::statefab::state_family(which.name(), None)?;
                    (s, fourier_decomposition(which, n)?)
                }
                (None, Some(i), Some(d)) => (read_state(&read_file(&i)?)?, read_decomposition(&read_file(&d)?)?),
                _ => {
                    return Err(Error::Precondition(
                        "give --builtin NAME, or both --input and --decomposition".into(),
                    ))
                }
            };
            cmd_decompose_verify(&state, &d, tol, format == Format::Json, output.as_ref(), !no_timestamp, out)
        }
        Command::DumpState { family, output } => {
            let s = family.family()?.build()?;
            emit(out, output.as_ref(), &write_state(&s))?;
            Ok(EXIT_OK)
        }
    }
}

fn exit_for(v: Verdict) -> i32 {
    if v.is_inseparable() {
        EXIT_FLAGGED
    } else {
        EXIT_OK
    }
}

pub fn cmd_analyze(s: &BipartiteState, cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let report = analyze(s, &cfg.tolerances, &cfg.budget)?;
    let text = if cfg.json { envelope("analyze", cfg.timestamp, &report) } else { render_report(&report) };
    emit(out, cfg.output.as_ref(), &text)?;
    Ok(exit_for(report.verdict))
}

fn render_report(r: &SeparabilityReport) -> String {
    let mut s = String::new();
    let label = r.label.as_deref().unwrap_or("(unlabelled)");
    s += &format!("state              {label}  ({}x{})\n", r.dims[0], r.dims[1]);
    s += &format!("verdict            {}\n", r.verdict);
    s += &format!("min eig of rho^T2  {:.6e}\n", r.min_eig_pt);
    s += &format!("rank rho / rho^T2  {} / {}\n", r.rank_rho, r.rank_pt);
    if let Some(c) = &r.product_vector_counts {
        s += &format!(
            "product vectors    {} in Ran rho, {} in Ran rho^T2, {} admissible\n",
            c.range_rho, c.range_pt, c.admissible
        );
    }
    if let Some(w) = &r.witness {
        let place = match r.witness_range {
            Some(crate::sepcrit::WitnessRange::Rho) => "Ran rho",
            _ => "Ran rho^T2",
        };
        let kind = if r.verdict == Verdict::NptInseparable { "negative eigenvector" } else { "range witness" };
        s += &format!("{kind} in {place}:\n");
        let (_, db) = (r.dims[0], r.dims[1]);
        for (i, z) in w.iter().enumerate() {
            if z.norm() > 1e-9 {
                s += &format!("  e{}(x)e{}  {:+.9} {:+.9}i\n", i / db, i % db, z.re, z.im);
            }
        }
    }
    for n in &r.diagnostics.notes {
        s += &format!("note: {n}\n");
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub min_eig_pt: f64,
    pub rank_rho: usize,
    pub rank_pt: usize,
    pub verdict: Verdict,
}

#[derive(Serialize)]
struct SweepBody<'a> {
    family: &'a str,
    rows: &'a [SweepRow],
}

fn linspace(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Precondition("a sweep needs at least 2 points".into()));
    }
    Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect())
}

fn cmd_sweep(family: &FamilyArgs, mut grid: Vec<f64>, jobs: usize, cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.len() < 2 {
        return Err(Error::Precondition("a sweep needs at least 2 distinct grid points".into()));
    }
    // build every state up front so range errors surface before any work
    let states: Vec<BipartiteState> = grid.iter().map(|&x| family.at(x)?.build()).collect::<Result<_>>()?;
    let row = |(x, s): (&f64, &BipartiteState)| -> Result<SweepRow> {
        let r = analyze(s, &cfg.tolerances, &cfg.budget)?;
        Ok(SweepRow { param: *x, min_eig_pt: r.min_eig_pt, rank_rho: r.rank_rho, rank_pt: r.rank_pt, verdict: r.verdict })
    };
    let rows: Vec<SweepRow> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
        pool.install(|| grid.par_iter().zip(states.par_iter()).map(row).collect::<Result<_>>())?
    } else {
        grid.iter().zip(states.iter()).map(row).collect::<Result<_>>()?
    };

    let name = family.family.as_deref().unwrap_or_default();
    let text = if cfg.json {
        envelope("sweep", cfg.timestamp, &SweepBody { family: name, rows: &rows })
    } else {
        let mut s = format!("{:>10}  {:>14}  {:>4}  {:>7}  verdict\n", "param", "min_eig_pt", "rank", "rank_pt");
        for r in &rows {
            s += &format!(
                "{:>10.4}  {:>14.6e}  {:>4}  {:>7}  {}\n",
                r.param, r.min_eig_pt, r.rank_rho, r.rank_pt, r.verdict
            );
        }
        s
    };
    emit(out, cfg.output.as_ref(), &text)?;
    Ok(if rows.iter().any(|r| r.verdict.is_inseparable()) { EXIT_FLAGGED } else { EXIT_OK })
}

#[derive(Serialize)]
struct VerifyBody<'a> {
    state: Option<&'a str>,
    verified: bool,
    deviation: f64,
    tolerance: f64,
    terms: usize,
    term_bound: usize,
    violations: &'a [String],
}

fn cmd_decompose_verify(
    s: &BipartiteState,
    d: &crate::decomp::SeparableDecomposition,
    tol: f64,
    json: bool,
    output: Option<&PathBuf>,
    timestamp: bool,
    out: &mut dyn Write,
) -> Result<i32> {
    let v = verify_decomposition(s, d, tol)?;
    let text = if json {
        let body = VerifyBody {
            state: s.label(),
            verified: v.verified,
            deviation: v.deviation,
            tolerance: tol,
            terms: d.len(),
            term_bound: d.term_bound(),
            violations: &v.violations,
        };
        envelope("decompose-verify", timestamp, &body)
    } else {
        let mut t = format!(
            "{}: max deviation {:.3e} (tolerance {tol:.1e}), {} terms (bound {})\n",
            if v.verified { "verified" } else { "MISMATCH" },
            v.deviation,
            d.len(),
            d.term_bound()
        );
        for x in &v.violations {
            t += &format!("  {x}\n");
        }
        t
    };
    emit(out, output, &text)?;
    Ok(if v.verified { EXIT_OK } else { EXIT_FLAGGED })
}
