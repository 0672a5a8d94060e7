//! Command-line front end.
//!
//! Exit statuses: 0 success, 1 usage error, 2 data error, 3 solver failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::config::{Tolerances, DEFAULT_EPS_LP, DEFAULT_TOL_B, DEFAULT_TOL_EQ};
use crate::dataset::{read_joint, read_pair_tables, read_pairlog};
use crate::error::{Error, EXIT_OK, EXIT_USAGE};
use crate::greechie::{enumerate_two_valued_states, find_state, validate, ContextHypergraph};
use crate::kolmo::{decide_feasibility, feasibility_from_dataset};
use crate::pers::{estimate_pers, SamplingMode, SamplingPlan};
use crate::prob::PairSource;
use crate::report::{to_stable_json, write_report, AnalysisReport, ReportFormat, RunMetadata};
use crate::synth::{
    gen_classical, gen_quantum, ClassicalDistribution, ClassicalModelSpec, QubitModelSpec,
};

/// Default worker count for triple evaluation when `--threads` is absent.
pub const THREADS_ENV: &str = "CTXPROB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "ctxprob", version, about = "Contextuality diagnostics for binary-observable data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the personalization rate over sampled triples.
    Pers(PersArgs),
    /// Analyse a single triple of observables.
    Triple(TripleArgs),
    /// Decide feasibility of explicit pair-marginal tables (JSON).
    Lp(LpArgs),
    /// Validate a context hypergraph and search for states.
    Greechie(GreechieArgs),
    /// Generate synthetic datasets.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InputFormat {
    Joint,
    Pairlog,
    /// Pair-marginal tables in JSON, evaluated without sampling noise.
    Exact,
}

impl InputFormat {
    fn name(self) -> &'static str {
        match self {
            InputFormat::Joint => "joint",
            InputFormat::Pairlog => "pairlog",
            InputFormat::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    #[value(name = "without_replacement", alias = "without-replacement")]
    WithoutReplacement,
    #[value(name = "with_replacement", alias = "with-replacement")]
    WithReplacement,
    Exhaustive,
}

impl From<ModeArg> for SamplingMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::WithoutReplacement => SamplingMode::WithoutReplacement,
            ModeArg::WithReplacement => SamplingMode::WithReplacement,
            ModeArg::Exhaustive => SamplingMode::Exhaustive,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "joint")]
    input_format: InputFormat,
}

#[derive(Debug, Args)]
struct ToleranceArgs {
    #[arg(long, default_value_t = 0.0)]
    smoothing: f64,
    #[arg(long, default_value_t = DEFAULT_TOL_B)]
    tol_b: f64,
    #[arg(long, default_value_t = DEFAULT_EPS_LP)]
    tol_lp: f64,
}

impl ToleranceArgs {
    fn tolerances(&self) -> Result<Tolerances, Error> {
        for (name, v) in [("smoothing", self.smoothing), ("tol-b", self.tol_b), ("tol-lp", self.tol_lp)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Usage(format!("--{name} must be a non-negative number")));
            }
        }
        Ok(Tolerances {
            smoothing: self.smoothing,
            tol_b: self.tol_b,
            tol_eq: DEFAULT_TOL_EQ,
            eps_lp: self.tol_lp,
        })
    }
}

#[derive(Debug, Args)]
struct PersArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Number of triples to sample (default: min(1000, C(T,3))).
    #[arg(long)]
    triples: Option<usize>,
    #[arg(long, value_enum, default_value = "without_replacement")]
    mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    tol: ToleranceArgs,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (overrides the CTXPROB_THREADS environment variable).
    #[arg(long)]
    threads: Option<usize>,
    /// Append a `run` block with timing and thread count (JSON only).
    #[arg(long)]
    run_meta: bool,
}

#[derive(Debug, Args)]
struct TripleArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Three comma-separated observable ids `A,B,C`.
    #[arg(long, value_delimiter = ',', required = true)]
    triple: Vec<String>,
    #[command(flatten)]
    tol: ToleranceArgs,
}

#[derive(Debug, Args)]
struct LpArgs {
    file: PathBuf,
    #[arg(long, default_value_t = DEFAULT_EPS_LP)]
    tol_lp: f64,
    /// Include the witness distribution in the output.
    #[arg(long)]
    witness: bool,
}

#[derive(Debug, Args)]
struct GreechieArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 1000)]
    enumerate_limit: usize,
}

#[derive(Debug, Subcommand)]
enum GenCommand {
    /// Joint records from one distribution over {0,1}^T.
    Classical(ClassicalArgs),
    /// Pairwise logs of in-plane qubit measurements.
    Quantum(QuantumArgs),
}

#[derive(Debug, Args)]
struct ClassicalArgs {
    #[arg(long)]
    observables: usize,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// File with 2^T whitespace- or comma-separated probabilities.
    #[arg(long, conflicts_with = "dist_seed")]
    table: Option<PathBuf>,
    /// Seed for a random table drawn from the flat simplex prior (default: --seed).
    #[arg(long)]
    dist_seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct QuantumArgs {
    /// Measurement directions in degrees.
    #[arg(long, value_delimiter = ',', required = true)]
    angles: Vec<f64>,
    /// Pairs to log as 1-based `i-j` (default: all pairs).
    #[arg(long, value_delimiter = ',')]
    pairs: Option<Vec<String>>,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

enum Loaded {
    Joint(crate::dataset::JointRecordDataset),
    PairLog(crate::dataset::PairLogDataset),
    Exact(crate::dataset::PairTables),
}

impl Loaded {
    fn read(input: &InputArgs) -> Result<Self, Error> {
        Ok(match input.input_format {
            InputFormat::Joint => Loaded::Joint(read_joint(&input.input)?),
            InputFormat::Pairlog => Loaded::PairLog(read_pairlog(&input.input)?),
            InputFormat::Exact => Loaded::Exact(read_pair_tables(&input.input)?),
        })
    }

    fn source(&self) -> &dyn PairSource {
        match self {
            Loaded::Joint(d) => d,
            Loaded::PairLog(d) => d,
            Loaded::Exact(d) => d,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    std::fs::write(path, contents).map_err(io_err(path))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Error> {
    out.write_all(text.as_bytes()).map_err(io_err(Path::new("<stdout>")))
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, Error> {
    if let Some(n) = flag {
        return if n == 0 {
            Err(Error::Usage("--threads must be at least 1".into()))
        } else {
            Ok(Some(n))
        };
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::Usage(format!("{THREADS_ENV} must be a positive integer"))),
        Err(_) => Ok(None),
    }
}

fn cmd_pers(args: &PersArgs, out: &mut dyn Write) -> Result<(), Error> {
    let started = Instant::now();
    let tolerances = args.tol.tolerances()?;
    let threads = thread_count(args.threads)?;
    let data = Loaded::read(&args.input)?;
    let plan = SamplingPlan {
        num_triples: args.triples,
        mode: args.mode.into(),
        seed: args.seed,
        tolerances,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
    let source = data.source();
    let analysis = pool.install(|| estimate_pers(source, source.observable_set(), &plan))?;
    let failures = analysis.skipped.iter().filter(|s| s.solver_failure).count();

    let report = AnalysisReport::new(
        &args.input.input.display().to_string(),
        args.input.input_format.name(),
        analysis,
    );
    let format = match args.format {
        FormatArg::Json => ReportFormat::Json,
        FormatArg::Csv => ReportFormat::Csv,
    };
    let meta = args.run_meta.then(|| RunMetadata {
        threads: pool.current_num_threads(),
        elapsed_ms: started.elapsed().as_millis(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    });
    let rendered = write_report(&report, format, meta.as_ref());
    match &args.out {
        Some(path) => write_file(path, &rendered)?,
        None => emit(out, &rendered)?,
    }
    if failures > 0 {
        return Err(Error::TripleSolverFailures(failures));
    }
    Ok(())
}

fn cmd_triple(args: &TripleArgs, out: &mut dyn Write) -> Result<(), Error> {
    let tolerances = args.tol.tolerances()?;
    let [a, b, c] = <[String; 3]>::try_from(args.triple.clone())
        .map_err(|_| Error::Usage("--triple needs exactly three ids".into()))?;
    let data = Loaded::read(&args.input)?;
    let analysis = feasibility_from_dataset(data.source(), [&a, &b, &c], &tolerances)?;
    let doc = json!({
        "params": analysis.params,
        "accardi": analysis.accardi,
        "lp": {
            "feasible": analysis.lp.feasible,
            "max_violation": analysis.lp.max_violation,
        },
    });
    emit(out, &to_stable_json(&doc))
}

fn cmd_lp(args: &LpArgs, out: &mut dyn Write) -> Result<(), Error> {
    if !args.tol_lp.is_finite() || args.tol_lp < 0.0 {
        return Err(Error::Usage("--tol-lp must be a non-negative number".into()));
    }
    let tables = read_pair_tables(&args.file)?;
    let problem = tables.to_problem(args.tol_lp)?;
    let result = decide_feasibility(&problem)?;
    let mut doc = json!({
        "observables": tables.observables,
        "values": tables.values,
        "constrained_pairs": problem.pair_marginals().len(),
        "feasible": result.feasible,
        "max_violation": result.max_violation,
    });
    if args.witness {
        doc["witness"] = json!(result.witness);
    }
    emit(out, &to_stable_json(&doc))
}

fn cmd_greechie(args: &GreechieArgs, out: &mut dyn Write) -> Result<(), Error> {
    let text = std::fs::read_to_string(&args.file).map_err(io_err(&args.file))?;
    let h = ContextHypergraph::parse(&text)?;
    let report = validate(&h);
    let mut lines = Vec::new();
    if !report.is_valid() {
        lines.push(format!("atoms: {}, contexts: {}", h.atoms().len(), h.contexts().len()));
        lines.push(format!("validation: {}", serde_json::to_string(&report).unwrap_or_default()));
        emit(out, &(lines.join("\n") + "\n"))?;
        return Err(crate::greechie::GreechieError::Invalid(
            "hypergraph failed validation".into(),
        )
        .into());
    }
    let state = find_state(&h)?;
    let two_valued = enumerate_two_valued_states(&h, args.enumerate_limit)?;
    let count = if two_valued.len() >= args.enumerate_limit && args.enumerate_limit > 0 {
        format!("{} (limit reached)", two_valued.len())
    } else {
        two_valued.len().to_string()
    };
    lines.push(format!(
        "states: {}; two-valued states: {count}",
        if state.is_some() { "exists" } else { "none" }
    ));
    lines.push(format!("atoms: {}, contexts: {}", h.atoms().len(), h.contexts().len()));
    lines.push(format!("validation: ok{}", if report.unpasted { " (unpasted)" } else { "" }));
    if let Some(s) = &state {
        let values: Vec<String> = h
            .atoms()
            .iter()
            .map(|a| format!("{a}={}", crate::report::round_sig12(s.state.values[a])))
            .collect();
        lines.push(format!(
            "state: {}{}",
            values.join(" "),
            if s.unique { " (unique up to tolerance)" } else { "" }
        ));
    }
    for tv in &two_valued {
        let ones: Vec<&str> = tv
            .values
            .iter()
            .filter(|(_, &v)| v == 1)
            .map(|(k, _)| k.as_str())
            .collect();
        lines.push(format!("two-valued: {}", ones.join(" ")));
    }
    emit(out, &(lines.join("\n") + "\n"))
}

fn read_table_file(path: &Path) -> Result<Vec<f64>, Error> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::Usage(format!("{}: `{s}` is not a number", path.display())))
        })
        .collect()
}

fn parse_pair(spec: &str, k: usize) -> Result<(usize, usize), Error> {
    let bad = || Error::Usage(format!("pair `{spec}` must look like 1-2 with indices in 1..={k}"));
    let (a, b) = spec.split_once('-').ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || b == 0 || a > k || b > k || a == b {
        return Err(bad());
    }
    Ok((a - 1, b - 1))
}

fn cmd_gen(cmd: &GenCommand, out: &mut dyn Write) -> Result<(), Error> {
    match cmd {
        GenCommand::Classical(args) => {
            let distribution = match &args.table {
                Some(path) => ClassicalDistribution::Table(read_table_file(path)?),
                None => ClassicalDistribution::Random {
                    seed: args.dist_seed.unwrap_or(args.seed),
                },
            };
            let sample = gen_classical(&ClassicalModelSpec {
                observables: args.observables,
                distribution,
                records: args.n,
                seed: args.seed,
            })?;
            std::fs::create_dir_all(&args.out).map_err(io_err(&args.out))?;
            let records = args.out.join("records");
            let exact = args.out.join("exact.json");
            write_file(&records, &sample.dataset.to_text())?;
            write_file(&exact, &sample.exact.to_json())?;
            emit(out, &format!("{}\n{}\n", records.display(), exact.display()))
        }
        GenCommand::Quantum(args) => {
            let k = args.angles.len();
            let pairs = args
                .pairs
                .as_ref()
                .map(|ps| ps.iter().map(|p| parse_pair(p, k)).collect::<Result<Vec<_>, _>>())
                .transpose()?;
            let sample = gen_quantum(&QubitModelSpec {
                angles: args.angles.clone(),
                pairs,
                trials: args.n,
                seed: args.seed,
            })?;
            std::fs::create_dir_all(&args.out).map_err(io_err(&args.out))?;
            let pairs = args.out.join("pairs");
            let exact = args.out.join("exact.json");
            write_file(&pairs, &sample.dataset.to_text())?;
            write_file(&exact, &sample.exact.to_json())?;
            emit(out, &format!("{}\n{}\n", pairs.display(), exact.display()))
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<(), Error> {
    match &cli.command {
        Command::Pers(a) => cmd_pers(a, out),
        Command::Triple(a) => cmd_triple(a, out),
        Command::Lp(a) => cmd_lp(a, out),
        Command::Greechie(a) => cmd_greechie(a, out),
        Command::Gen(g) => cmd_gen(g, out),
    }
}

/// Parses `args` (program name first) and runs the selected command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
