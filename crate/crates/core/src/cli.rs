//! Command-line front end.
//!
//! Every command writes its primary output to stdout: JSON by default for
//! single results, CSV for experiment tables. Both carry a manifest (under
//! a `"manifest"` key in JSON, as a leading `# manifest:` comment in CSV)
//! with a SHA-256 of the payload. Wall time goes to stderr so that reruns
//! with the same flags are byte-identical.
//!
//! CSV columns for estimate rows:
//! `run_id,method,seed,budget_flips,trials,censored,pi_hat,abs_error`.
//! Summary values follow the rows as `# summary:` comment lines.
//!
//! Exit codes: 0 success, 1 usage error, 2 failed invariant check.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analytics::{
    self, arcsin_tail_bound, fraction_tail_bound, inv_tau_tail_bound, SeriesState, SeriesTarget,
    TauTable,
};
use crate::error::Error;
use crate::oracle;
use crate::stats::{self, Budget, ExperimentConfig, RunRecord};
use crate::walk_sim::{Method, DEFAULT_CAP};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVARIANT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "coinpi", version, about = "Estimate pi by tossing a coin until heads lead")]
pub struct Cli {
    /// Worker threads (0 = one per core). Never changes the output.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the stopping rule and report the pi estimate.
    Simulate(SimulateArgs),
    /// Print the pmf or one of the series term by term.
    Exact(ExactArgs),
    /// Enumerate all short sequences and cross-check the closed forms.
    Oracle(OracleArgs),
    /// Error scaling with the flip budget.
    Converge(ConvergeArgs),
    /// Many 10,000-flip runs, placing the recorded 3.2266 among them.
    Parker(ParkerArgs),
    /// Buffon's needle baseline.
    Buffon(BuffonArgs),
    /// Empirical check that the estimate lies strictly between 3 and 4.
    Bounds(BoundsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("budget").required(true).args(["trials", "flips"])))]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Number of trials to attempt
    #[arg(long)]
    pub trials: Option<u64>,
    /// Total flip budget
    #[arg(long)]
    pub flips: Option<u64>,
    #[arg(long, value_enum, default_value_t = Method::Walk)]
    pub method: Method,
    /// Step cap per walk trial
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: u64,
    /// Trials per random substream
    #[arg(long, default_value_t = stats::ExperimentConfig::default().chunk_trials)]
    pub chunk_trials: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExactWhat {
    Pmf,
    FractionSeries,
    InvtauSeries,
    Arcsin,
}

#[derive(Debug, Args, Serialize)]
pub struct ExactArgs {
    #[arg(long, value_enum)]
    pub what: ExactWhat,
    /// Last index K to sum through
    #[arg(long)]
    pub terms: u64,
    /// Argument of the arcsine series
    #[arg(long, allow_hyphen_values = true, required_if_eq("what", "arcsin"))]
    pub x: Option<f64>,
    /// Print every n-th row (the last row is always printed)
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub stride: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args, Serialize)]
pub struct OracleArgs {
    /// Odd sequence length, at most 25
    #[arg(long)]
    pub max_len: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct ConvergeArgs {
    #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000,1000000")]
    pub budgets: Vec<u64>,
    #[arg(long, default_value_t = 50)]
    pub reps: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: u64,
    #[arg(long, value_enum, default_value_t = Method::Walk)]
    pub method: Method,
}

#[derive(Debug, Args, Serialize)]
pub struct ParkerArgs {
    #[arg(long, default_value_t = 1000)]
    pub reps: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct BuffonArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub drops: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub needle_len: f64,
    #[arg(long, default_value_t = 1.0)]
    pub spacing: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

/// Provenance block attached to every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub config: Value,
    pub seed: Option<u64>,
    pub output_sha256: String,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

struct Rendered {
    text: String,
    code: i32,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

fn manifest(subcommand: &'static str, config: &impl Serialize, seed: Option<u64>, payload: &[u8]) -> RunManifest {
    RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        subcommand,
        config: serde_json::to_value(config).expect("args serialize"),
        seed,
        output_sha256: sha256_hex(payload),
    }
}

fn render_json(
    subcommand: &'static str,
    config: &impl Serialize,
    seed: Option<u64>,
    payload: Value,
) -> String {
    let compact = serde_json::to_string(&payload).expect("json");
    let m = manifest(subcommand, config, seed, compact.as_bytes());
    let mut doc = match payload {
        Value::Object(map) => map,
        other => {
            let mut map = serde_json::Map::new();
            map.insert("result".into(), other);
            map
        }
    };
    doc.insert("manifest".into(), serde_json::to_value(m).expect("json"));
    let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("json");
    text.push('\n');
    text
}

fn render_csv(
    subcommand: &'static str,
    config: &impl Serialize,
    seed: Option<u64>,
    body: String,
) -> String {
    let m = manifest(subcommand, config, seed, body.as_bytes());
    format!(
        "# manifest: {}\n{body}",
        serde_json::to_string(&m).expect("json")
    )
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

const RUN_HEADER: &str = "run_id,method,seed,budget_flips,trials,censored,pi_hat,abs_error";

fn run_row(r: &RunRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{}\n",
        r.run_id,
        r.method,
        r.seed,
        r.budget_flips,
        r.trials,
        r.censored,
        cell(r.pi_hat),
        cell(r.abs_error)
    )
}

fn cmd_simulate(args: &SimulateArgs) -> Result<Rendered, Failure> {
    let budget = match (args.trials, args.flips) {
        (Some(t), None) => Budget::Trials(t),
        (None, Some(f)) => Budget::Flips(f),
        _ => return Err(Failure::Usage("give exactly one of --trials or --flips".into())),
    };
    let config = ExperimentConfig {
        seed: args.seed,
        method: args.method,
        cap: args.cap,
        budget,
        chunk_trials: args.chunk_trials,
        ..ExperimentConfig::default()
    };
    let summary = stats::run_estimate(&config)?;
    let status = if summary.is_empty() { "no_data" } else { "ok" };
    let text = match args.format {
        Format::Json => {
            let mut payload = serde_json::to_value(&summary).expect("json");
            payload["status"] = json!(status);
            payload["method"] = json!(args.method);
            payload["abs_error"] = json!(summary.pi_hat().map(|p| (p - PI).abs()));
            render_json("simulate", args, Some(args.seed), payload)
        }
        Format::Csv => {
            let budget_flips = match budget {
                Budget::Flips(f) => f,
                Budget::Trials(_) => summary.flips_used(),
            };
            let record = RunRecord {
                run_id: 0,
                method: args.method,
                seed: args.seed,
                budget_flips,
                trials: summary.trials(),
                censored: summary.censored_trials(),
                pi_hat: summary.pi_hat(),
                abs_error: summary.pi_hat().map(|p| (p - PI).abs()),
            };
            let mut body = format!("{RUN_HEADER}\n{}", run_row(&record));
            let _ = writeln!(
                body,
                "# summary: status={status},stderr_pi={},flips_used={}",
                cell(summary.stderr_pi()),
                summary.flips_used()
            );
            render_csv("simulate", args, Some(args.seed), body)
        }
    };
    Ok(Rendered { text, code: EXIT_OK })
}

#[derive(Serialize)]
struct ExactRow {
    k: u64,
    term: f64,
    partial_sum: f64,
    tail_bound: Option<f64>,
}

fn cmd_exact(args: &ExactArgs) -> Result<Rendered, Failure> {
    let keep = |k: u64| k.is_multiple_of(args.stride) || k == args.terms;
    let mut rows = Vec::new();
    let limit;
    match args.what {
        ExactWhat::Pmf => {
            let len = usize::try_from(args.terms)
                .ok()
                .and_then(|k| k.checked_add(1))
                .ok_or_else(|| Failure::Usage("--terms too large".into()))?;
            let table = TauTable::with_len(len);
            for k in (0..=args.terms).filter(|&k| keep(k)) {
                rows.push(ExactRow {
                    k,
                    term: table.pmf(k).unwrap(),
                    partial_sum: table.cdf(k).unwrap(),
                    tail_bound: table.tail(k),
                });
            }
            limit = 1.0;
        }
        what => {
            let (target, lim): (SeriesTarget, f64) = match what {
                ExactWhat::FractionSeries => (SeriesTarget::FractionMean, analytics::FRACTION_MEAN_LIMIT),
                ExactWhat::InvtauSeries => (SeriesTarget::InvTauMean, analytics::INV_TAU_MEAN_LIMIT),
                _ => {
                    let x = args.x.ok_or_else(|| Failure::Usage("--x is required for arcsin".into()))?;
                    (SeriesTarget::Arcsin(x), x.asin())
                }
            };
            limit = lim;
            let mut state = SeriesState::new(target)?;
            loop {
                let row = state.row();
                if keep(row.k) {
                    let tail_bound = match target {
                        SeriesTarget::FractionMean => fraction_tail_bound(row.k).ok(),
                        SeriesTarget::InvTauMean => inv_tau_tail_bound(row.k).ok(),
                        SeriesTarget::Arcsin(x) => arcsin_tail_bound(x, row.k).ok(),
                    };
                    rows.push(ExactRow {
                        k: row.k,
                        term: row.term,
                        partial_sum: row.partial_sum,
                        tail_bound,
                    });
                }
                if row.k >= args.terms {
                    break;
                }
                state.advance();
            }
        }
    }
    let text = match args.format {
        Format::Json => {
            let payload = json!({
                "what": args.what,
                "x": args.x,
                "terms": args.terms,
                "limit": limit,
                "rows": rows,
            });
            render_json("exact", args, None, payload)
        }
        Format::Csv => {
            let mut body = String::from("k,term,partial_sum,tail_bound\n");
            for r in &rows {
                let _ = writeln!(body, "{},{},{},{}", r.k, r.term, r.partial_sum, cell(r.tail_bound));
            }
            let _ = writeln!(body, "# summary: limit={limit}");
            render_csv("exact", args, None, body)
        }
    };
    Ok(Rendered { text, code: EXIT_OK })
}

fn cmd_oracle(args: &OracleArgs) -> Result<Rendered, Failure> {
    let (report, comparison) = oracle::oracle_vs_analytics(args.max_len)?;
    let code = if comparison.passed { EXIT_OK } else { EXIT_INVARIANT };
    let payload = json!({ "report": report, "comparison": comparison });
    Ok(Rendered {
        text: render_json("oracle", args, None, payload),
        code,
    })
}

fn cmd_converge(args: &ConvergeArgs) -> Result<Rendered, Failure> {
    let config = ExperimentConfig {
        seed: args.seed,
        method: args.method,
        cap: args.cap,
        reps: args.reps,
        budgets: args.budgets.clone(),
        ..ExperimentConfig::default()
    };
    let report = stats::convergence_experiment(&config)?;
    let mut body = format!("{RUN_HEADER}\n");
    for r in &report.runs {
        body.push_str(&run_row(r));
    }
    for row in &report.rows {
        let _ = writeln!(
            body,
            "# summary: budget_flips={},reps={},usable_reps={},median_abs_error={}",
            row.budget_flips,
            row.reps,
            row.usable_reps,
            cell(row.median_abs_error)
        );
    }
    let _ = writeln!(
        body,
        "# summary: fitted_slope={},intercept={}",
        report.slope, report.intercept
    );
    Ok(Rendered {
        text: render_csv("converge", args, Some(args.seed), body),
        code: EXIT_OK,
    })
}

fn cmd_parker(args: &ParkerArgs) -> Result<Rendered, Failure> {
    let report = stats::parker_replication(args.reps, args.seed)?;
    let mut body = format!("{RUN_HEADER}\n");
    for r in &report.runs {
        body.push_str(&run_row(r));
    }
    let _ = writeln!(
        body,
        "# summary: usable_reps={},median_abs_error={},abs_error_q25={},abs_error_q75={},abs_error_iqr={},observed_abs_error={},observed_quantile={}",
        report.usable_reps,
        report.median_abs_error,
        report.abs_error_q25,
        report.abs_error_q75,
        report.abs_error_iqr,
        report.observed_abs_error,
        report.observed_quantile
    );
    Ok(Rendered {
        text: render_csv("parker", args, Some(args.seed), body),
        code: EXIT_OK,
    })
}

fn cmd_buffon(args: &BuffonArgs) -> Result<Rendered, Failure> {
    let r = stats::buffon_experiment(args.drops, args.seed, args.needle_len, args.spacing)?;
    let mut body =
        String::from("drops,needle_len,spacing,crossings,frequency,expected,sigma,z_score,pi_hat\n");
    let _ = writeln!(
        body,
        "{},{},{},{},{},{},{},{},{}",
        r.drops,
        r.needle_len,
        r.spacing,
        r.crossings,
        r.frequency,
        r.expected,
        r.sigma,
        r.z_score,
        cell(r.pi_hat)
    );
    let _ = writeln!(
        body,
        "# summary: frequency={},expected={},within_4_sigma={}",
        r.frequency,
        r.expected,
        r.z_score.abs() <= 4.0
    );
    Ok(Rendered {
        text: render_csv("buffon", args, Some(args.seed), body),
        code: EXIT_OK,
    })
}

fn cmd_bounds(args: &BoundsArgs) -> Result<Rendered, Failure> {
    let r = stats::bounds_demonstration(args.trials, args.seed)?;
    let payload = serde_json::to_value(&r).expect("json");
    Ok(Rendered {
        text: render_json("bounds", args, Some(args.seed), payload),
        code: EXIT_OK,
    })
}

fn execute(command: &Command) -> Result<Rendered, Failure> {
    match command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Exact(a) => cmd_exact(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Converge(a) => cmd_converge(a),
        Command::Parker(a) => cmd_parker(a),
        Command::Buffon(a) => cmd_buffon(a),
        Command::Bounds(a) => cmd_bounds(a),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(rendered.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(rendered.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start {} threads: {e}", cli.threads);
            return EXIT_USAGE;
        }
    };
    let started = Instant::now();
    let result = pool.install(|| execute(&cli.command));
    let elapsed = started.elapsed();
    match result {
        Ok(rendered) => {
            let _ = out.write_all(rendered.text.as_bytes());
            let _ = writeln!(err, "# wall_time_ms={:.3}", elapsed.as_secs_f64() * 1e3);
            if rendered.code == EXIT_INVARIANT {
                let _ = writeln!(err, "error: oracle and analytics disagree");
            }
            rendered.code
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
    }
}
