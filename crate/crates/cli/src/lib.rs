//! Command-line front-end for `svar-ident`.
//!
//! [`run`] parses arguments, executes one subcommand and returns the process
//! exit code, writing only to the supplied streams so it can be driven from
//! tests.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use svar_ident::numkernel::numerical_rank;
use svar_ident::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_IDENTIFIED: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Spec {
        path: PathBuf,
        #[source]
        source: SpecError,
    },
    #[error("{path}, line {line}: {message}")]
    MatrixFile {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Core(#[from] Error),
}

#[derive(Debug, Parser)]
#[command(
    name = "svar-ident",
    version,
    about = "Exact global identification checks for SVARs under zero restrictions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide whether a restriction spec exactly identifies the model.
    Check(CheckArgs),
    /// Build the rotation into the restricted set at one reduced-form point.
    Rotate(RotateArgs),
    /// Name the restrictions that are implied by the others.
    Explain(ExplainArgs),
    /// Walk through the built-in three-variable counterexample.
    Demo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct SpecArg {
    /// Restriction spec file.
    #[arg(value_name = "SPEC", required_unless_present = "spec_flag")]
    spec_pos: Option<PathBuf>,
    /// Restriction spec file (alternative to the positional argument).
    #[arg(long = "spec", value_name = "SPEC", conflicts_with = "spec_pos")]
    spec_flag: Option<PathBuf>,
}

impl SpecArg {
    fn path(&self) -> &Path {
        self.spec_pos
            .as_deref()
            .or(self.spec_flag.as_deref())
            .expect("clap enforces one spec source")
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// Base seed for the reduced-form sampler.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Relative rank cutoff: singular values at or below tol * sigma_max count as zero.
    #[arg(long, value_parser = parse_tol)]
    pub tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

impl Common {
    fn config(&self) -> IdentifierConfig {
        match self.tol {
            Some(t) => IdentifierConfig {
                tol: RankTolerance::Relative(t),
                ..IdentifierConfig::default()
            },
            None => IdentifierConfig::default(),
        }
    }
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    spec: SpecArg,
    /// Number of sampled reduced-form points (at least 2).
    #[arg(long, default_value_t = DEFAULT_DRAWS, value_parser = parse_draws)]
    draws: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
pub struct RotateArgs {
    #[command(flatten)]
    spec: SpecArg,
    /// Covariance matrix file (n rows of n numbers). Defaults to sampler draw 0.
    #[arg(long, value_name = "FILE")]
    sigma: Option<PathBuf>,
    /// Reduced-form coefficient file (np+1 rows of n numbers). Defaults to zeros with --sigma.
    #[arg(long = "b", value_name = "FILE", requires = "sigma")]
    b: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    spec: SpecArg,
    #[command(flatten)]
    common: Common,
}

fn parse_draws(s: &str) -> Result<usize, String> {
    let d: usize = s.parse().map_err(|e| format!("{e}"))?;
    if d < 2 {
        return Err("at least 2 draws are required".into());
    }
    Ok(d)
}

fn parse_tol(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !(t.is_finite() && t > 0.0 && t < 1.0) {
        return Err("tolerance must lie in (0, 1)".into());
    }
    Ok(t)
}

/// Parses a whitespace-separated numeric matrix; `#` starts a comment.
pub fn parse_matrix(text: &str) -> Result<Matrix, (usize, String)> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| (i + 1, format!("not a number: `{tok}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err((
                    i + 1,
                    format!("expected {} entries, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err((0, "matrix is empty".into()));
    }
    let cols = rows[0].len();
    Ok(Matrix::from_fn(rows.len(), cols, |r, c| rows[r][c]))
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_spec(path: &Path) -> Result<RestrictionSpec, CliError> {
    parse_spec(&read(path)?).map_err(|source| CliError::Spec {
        path: path.to_path_buf(),
        source,
    })
}

fn load_matrix(path: &Path) -> Result<Matrix, CliError> {
    parse_matrix(&read(path)?).map_err(|(line, message)| CliError::MatrixFile {
        path: path.to_path_buf(),
        line,
        message,
    })
}

fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Renders a matrix with fixed precision; negative zero prints as zero.
pub fn format_matrix(m: &Matrix, indent: &str) -> String {
    let mut out = String::new();
    for r in m.row_iter() {
        out.push_str(indent);
        for x in r.iter() {
            let x = if *x == 0.0 { 0.0 } else { *x };
            let _ = write!(out, "{x:>12.6}");
        }
        out.push('\n');
    }
    out
}

fn tuple<T: std::fmt::Display>(xs: &[T]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(", "))
}

fn column_line(d: &ColumnDiagnostic) -> String {
    format!(
        "    j={} (column {}): rank {} of {} rows, required {}, {}",
        d.j, d.column, d.rank, d.qtilde_rows, d.required, d.status
    )
}

/// JSON document emitted by `check --format json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckJson {
    pub command: String,
    pub spec: String,
    #[serde(flatten)]
    pub report: IdentificationReport,
}

/// JSON document emitted by `rotate --format json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotateJson {
    pub command: String,
    pub spec: String,
    /// `"file"` or `"draw"`.
    pub source: String,
    pub seed: u64,
    pub unique: bool,
    pub columns: Vec<ColumnDiagnostic>,
    pub sign_flips: Vec<i8>,
    pub p: Vec<Vec<f64>>,
    pub residual: f64,
    pub a0: Vec<Vec<f64>>,
    pub aplus: Vec<Vec<f64>>,
}

/// JSON document emitted by `explain --format json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainJson {
    pub command: String,
    pub spec: String,
    pub seed: u64,
    pub explanation: Option<RedundancyExplanation>,
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s
}

fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::ExactlyIdentified => EXIT_OK,
        Verdict::NotIdentifiedCountFailure | Verdict::NotIdentifiedRedundancy => {
            EXIT_NOT_IDENTIFIED
        }
        Verdict::InconclusiveDrawDisagreement => EXIT_INCONCLUSIVE,
    }
}

fn check(args: &CheckArgs, out: &mut String) -> Result<i32, CliError> {
    let path = args.spec.path();
    let spec = load_spec(path)?;
    let c = compile(&spec);
    let sampler = SamplerConfig::new(spec.dims(), args.common.seed);
    let report = check_exact_identification(&c, &sampler, args.draws, &args.common.config())?;
    let code = verdict_code(report.verdict);

    if args.common.format == Format::Json {
        out.push_str(&to_json(&CheckJson {
            command: "check".into(),
            spec: path.display().to_string(),
            report,
        }));
        return Ok(code);
    }

    let _ = writeln!(out, "spec: {}", path.display());
    let _ = writeln!(out, "n = {}, p = {}", report.n, report.p);
    let _ = writeln!(out, "column order: {}", tuple(&report.permutation));
    let _ = writeln!(out, "restrictions per column q = {}", tuple(&report.q));
    let cc = &report.count_condition;
    let _ = writeln!(
        out,
        "count condition (q_j = n - j): {} (total {}, required {})",
        if cc.overall { "pass" } else { "FAIL" },
        report.total_restrictions,
        report.required
    );
    if !cc.overall {
        for (j, ok) in cc.per_column.iter().enumerate() {
            if !ok {
                let _ = writeln!(
                    out,
                    "  j={}: q_j = {}, needs {}",
                    j + 1,
                    report.q[j],
                    report.n - j - 1
                );
            }
        }
        let _ = writeln!(out, "no draws taken: the count condition is necessary");
    }
    for d in &report.draws {
        let _ = writeln!(
            out,
            "draw {} (seed {}): {}",
            d.index,
            d.seed,
            if d.pass { "pass" } else { "FAIL" }
        );
        for col in &d.columns {
            let _ = writeln!(out, "{}", column_line(col));
        }
    }
    if let Some(rc) = &report.rank_check {
        let ranks: Vec<String> = rc
            .ranks
            .iter()
            .enumerate()
            .map(|(j, r)| format!("rank(M{}) = {r}", j + 1))
            .collect();
        let _ = writeln!(
            out,
            "rank cross-check at draw 0: {} -> {}",
            ranks.join(", "),
            if rc.pass { "pass" } else { "FAIL" }
        );
    }
    let _ = writeln!(out, "verdict: {}", report.verdict);
    Ok(code)
}

fn rotate(args: &RotateArgs, out: &mut String, err: &mut String) -> Result<i32, CliError> {
    let path = args.spec.path();
    let spec = load_spec(path)?;
    let dims = spec.dims();
    let c = compile(&spec);
    let (r, source) = match &args.sigma {
        Some(sp) => {
            let sigma = load_matrix(sp)?;
            let b = match &args.b {
                Some(bp) => load_matrix(bp)?,
                None => Matrix::zeros(dims.m(), dims.n),
            };
            (ReducedFormParams::new(dims, b, sigma)?, "file")
        }
        None => (
            draw_reduced_form(&SamplerConfig::new(dims, args.common.seed), 0)?,
            "draw",
        ),
    };
    let seed = args.common.seed;
    let res = match construct_rotation(
        &r,
        &c,
        OnRedundancy::PickArbitrary { seed },
        &args.common.config(),
    ) {
        Ok(res) => res,
        Err(e @ (Error::PreconditionCountFailure | Error::Infeasible { .. })) => {
            let _ = writeln!(err, "error: {e}");
            return Ok(EXIT_NOT_IDENTIFIED);
        }
        Err(e) => return Err(e.into()),
    };
    let p = res
        .p
        .clone()
        .expect("PickArbitrary completes when feasible");
    let rotated = res.rotated.clone().expect("present with p");
    let residual = c.residual(&rotated)?;

    if !res.unique {
        for d in res
            .per_column
            .iter()
            .filter(|d| d.status != ColumnStatus::Unique)
        {
            let _ = writeln!(
                err,
                "WARNING: rotation is NOT unique. Column j={} (column {}) has rank {} < {}; \
                 its null space has dimension {} and an arbitrary admissible vector was chosen (seed {seed}).",
                d.j,
                d.column,
                d.rank,
                d.required,
                match d.status {
                    ColumnStatus::Redundant(k) => k,
                    _ => 0,
                }
            );
        }
    }

    if args.common.format == Format::Json {
        out.push_str(&to_json(&RotateJson {
            command: "rotate".into(),
            spec: path.display().to_string(),
            source: source.into(),
            seed,
            unique: res.unique,
            columns: res.per_column,
            sign_flips: res.sign_flips,
            p: rows_of(&p),
            residual,
            a0: rows_of(rotated.a0()),
            aplus: rows_of(rotated.aplus()),
        }));
        return Ok(EXIT_OK);
    }

    let _ = writeln!(out, "spec: {}", path.display());
    match source {
        "file" => {
            let _ = writeln!(out, "reduced form: from file");
        }
        _ => {
            let _ = writeln!(out, "reduced form: sampler draw 0 (seed {seed})");
        }
    }
    let _ = writeln!(out, "columns:");
    for d in &res.per_column {
        let _ = writeln!(out, "{}", column_line(d));
    }
    let _ = writeln!(out, "unique: {}", if res.unique { "yes" } else { "NO" });
    let _ = writeln!(out, "P =\n{}", format_matrix(&p, "  "));
    let _ = writeln!(out, "restriction residual: {residual:.3e}");
    let _ = writeln!(out, "A0 P =\n{}", format_matrix(rotated.a0(), "  "));
    let _ = write!(out, "A+ P =\n{}", format_matrix(rotated.aplus(), "  "));
    Ok(EXIT_OK)
}

fn explain(args: &ExplainArgs, out: &mut String, err: &mut String) -> Result<i32, CliError> {
    let path = args.spec.path();
    let spec = load_spec(path)?;
    let c = compile(&spec);
    let seed = args.common.seed;
    if !count_condition(&c).overall {
        let _ = writeln!(
            err,
            "count condition fails, so there is no rank test to explain; run `svar-ident check` for the per-column counts"
        );
        return Ok(EXIT_NOT_IDENTIFIED);
    }
    let r = draw_reduced_form(&SamplerConfig::new(spec.dims(), seed), 0)?;
    let explanation = explain_redundancy(&r, &c, &args.common.config())?;
    let code = if explanation.is_some() {
        EXIT_OK
    } else {
        EXIT_NOT_IDENTIFIED
    };

    if args.common.format == Format::Json {
        out.push_str(&to_json(&ExplainJson {
            command: "explain".into(),
            spec: path.display().to_string(),
            seed,
            explanation,
        }));
        return Ok(code);
    }
    let Some(ex) = explanation else {
        let _ = writeln!(
            err,
            "no redundant restrictions found at draw 0 (seed {seed}); nothing to explain"
        );
        return Ok(code);
    };
    let _ = writeln!(out, "spec: {}", path.display());
    let _ = writeln!(
        out,
        "redundancy at j={} (column {}): rank {} < required {}",
        ex.j, ex.column, ex.rank, ex.required
    );
    for imp in &ex.implied {
        let name = imp
            .cell
            .map_or_else(|| format!("row {}", imp.row + 1), |c| c.to_string());
        let by: Vec<String> = imp.implied_by.iter().map(|c| c.to_string()).collect();
        if by.is_empty() {
            let _ = writeln!(out, "  {name} is implied by other restrictions");
        } else {
            let _ = writeln!(
                out,
                "  {name} is implied by other restrictions: {}",
                by.join(", ")
            );
        }
    }
    Ok(code)
}

/// The three-variable spec where the count condition holds but an impact
/// zero is implied by the contemporaneous zeros.
pub const DEMO_SPEC: &str = "\
n = 3
p = 1
block A0
  x x x
  0 x x
  0 x x
block IR0
  x 0 x
  x x x
  x x x
";

fn demo(out: &mut String) -> Result<i32, CliError> {
    let spec = parse_spec(DEMO_SPEC).map_err(Error::from)?;
    let c = compile(&spec);
    let cfg = IdentifierConfig::default();
    let dims = spec.dims();
    let n = dims.n;

    let _ = writeln!(out, "Restrictions (n = 3, p = 1):");
    for line in DEMO_SPEC.lines().skip(2) {
        let _ = writeln!(out, "  {line}");
    }
    let cc = count_condition(&c);
    let _ = writeln!(
        out,
        "q = {}, counting rule q_j = n - j: {}",
        tuple(c.q()),
        if cc.overall { "pass" } else { "FAIL" }
    );

    let r = ReducedFormParams::new(dims, Matrix::zeros(dims.m(), n), Matrix::identity(n, n))?;
    let s = baseline_structural(&r)?;
    let f = c.assemble_f(&s)?;
    let _ = writeln!(out, "\nAt Sigma = I, B = 0:");
    let q1 = q_tilde(0, &c, &f, &[]);
    let _ = write!(out, "Q~1 f =\n{}", format_matrix(&q1, "  "));
    let res = nonredundancy_at(&r, &c, &cfg)?;
    let d1 = &res.per_column[0];
    let _ = writeln!(
        out,
        "rank(Q~1 f) = {} (required {}): {}",
        d1.rank, d1.required, d1.status
    );
    let p1 = &res.accepted[0];
    let p1_entries: Vec<String> = p1
        .iter()
        .map(|x| format!("{}", if *x == 0.0 { 0.0 } else { *x }))
        .collect();
    let _ = writeln!(out, "p1 = ({})", p1_entries.join(", "));
    let q2 = q_tilde(1, &c, &f, &res.accepted[..1]);
    let _ = write!(out, "Q~2 f =\n{}", format_matrix(&q2, "  "));
    let d2 = &res.per_column[1];
    let _ = writeln!(
        out,
        "rank(Q~2 f) = {} < required {}: {}",
        numerical_rank(&q2, cfg.tol),
        d2.required,
        d2.status
    );
    let _ = writeln!(
        out,
        "The zero at IR0(1,2) is implied by A0(2,1) = A0(3,1) = 0, so p2 is not pinned down."
    );

    let picked = construct_rotation(&r, &c, OnRedundancy::PickArbitrary { seed: 0 }, &cfg)?;
    let point = picked.rotated.expect("feasible");
    let rc = rank_cross_check(&point, &c, &cfg)?;
    let ranks: Vec<String> = rc
        .ranks
        .iter()
        .enumerate()
        .map(|(j, r)| format!("rank(M{}) = {r}", j + 1))
        .collect();
    let _ = writeln!(
        out,
        "\nRank cross-check at a restricted point: {} (need {n} each)",
        ranks.join(", ")
    );

    let report = check_exact_identification(&c, &SamplerConfig::new(dims, 0), DEFAULT_DRAWS, &cfg)?;
    let failing: Vec<usize> = report.failing_columns();
    let _ = writeln!(
        out,
        "{} sampled draws: {} failed, at columns {}",
        report.draws.len(),
        failing.len(),
        tuple(&failing)
    );
    let _ = writeln!(out, "verdict: {}", report.verdict);
    Ok(EXIT_OK)
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    let mut o = String::new();
    let mut e = String::new();
    let result = match &cli.command {
        Command::Check(a) => check(a, &mut o),
        Command::Rotate(a) => rotate(a, &mut o, &mut e),
        Command::Explain(a) => explain(a, &mut o, &mut e),
        Command::Demo => demo(&mut o),
    };
    let code = match result {
        Ok(code) => code,
        Err(x) => {
            let _ = writeln!(e, "error: {x}");
            EXIT_USAGE
        }
    };
    let _ = out.write_all(o.as_bytes());
    let _ = err.write_all(e.as_bytes());
    code
}
