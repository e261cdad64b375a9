mod document;
mod input;
mod render;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use binsub_core::f2codes::{code_summary, sigma_from_code, CodeError, DEFAULT_WEIGHT_CAP};
use binsub_core::nilpotent_numerics::{format_rational, hirsch, poly_pc, witt};
use binsub_core::projection_analysis::{
    analyze, AnalysisError, AnalysisOptions, ProfileOptions, UnknownReason,
};
use binsub_core::search::{self, SearchError, SearchMode, SearchQuery, Surjectivity};
use binsub_core::sigma_model::{
    build_array, builtin_b0, builtin_b1, builtin_b1_diagonal, validate_spec, SigmaError, SubgroupModel,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde::Serialize;

use document::{
    InputEcho, MatrixDocument, ReportDocument, SearchDocument, TableDocument, Timing, WeightsDocument,
    SCHEMA_VERSION,
};

#[derive(Parser)]
#[command(name = "binsub", version, about = "Analyze and search binary subgroups of products of free groups")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Surjection profile and derived invariants of a model.
    Analyze(AnalyzeArgs),
    /// Search single-σ models.
    Search(SearchArgs),
    /// Conversions between σ and binary codes.
    #[command(subcommand)]
    Code(CodeCommand),
    /// Exact values of Witt numbers, Hirsch lengths and p_c.
    Table(TableArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Builtin {
    B0,
    B1,
}

#[derive(Args)]
struct ModelArgs {
    /// σ file (text or JSON); ignored with --builtin.
    path: Option<PathBuf>,
    #[arg(long, value_enum)]
    builtin: Option<Builtin>,
    /// Number of factors for --builtin.
    #[arg(long)]
    m: Option<usize>,
    /// Number of letters; repeats a single σ line.
    #[arg(long)]
    r: Option<usize>,
    /// Adjoin the diagonal element of each letter.
    #[arg(long)]
    diagonal: bool,
    /// Which witness to take from a search document.
    #[arg(long, default_value_t = 0)]
    witness: usize,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Leave levels above this undecided.
    #[arg(long)]
    max_k: Option<usize>,
    /// Seconds allowed per profile level.
    #[arg(long, env = "BINSUB_BUDGET")]
    budget: Option<f64>,
    /// Omit timing so output is byte-stable.
    #[arg(long)]
    no_timing: bool,
    /// Also write the JSON document here.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    MinRows,
    Count,
    Enumerate,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value_t = Mode::MinRows)]
    mode: Mode,
    /// Row count for count and enumerate.
    #[arg(long)]
    l: Option<usize>,
    #[arg(long, default_value_t = 10)]
    limit: usize,
    #[arg(long)]
    diagonal: bool,
    /// Target finite index instead of surjection.
    #[arg(long = "virtual", conflicts_with = "f2")]
    virtual_: bool,
    /// Target surjection mod 2.
    #[arg(long)]
    f2: bool,
    /// Count ordered lists instead of sets.
    #[arg(long)]
    ordered: bool,
    /// Wall-clock budget in seconds.
    #[arg(long, env = "BINSUB_BUDGET")]
    budget: Option<f64>,
    #[arg(long)]
    no_timing: bool,
    /// Also write the JSON document here (readable by `analyze`).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CodeCommand {
    /// Read a 0/1 generator matrix and print the σ whose array it is.
    ToSigma { path: PathBuf },
    /// Print the binary array of an inline σ such as 1,2,4.
    FromSigma {
        sigma: String,
        #[arg(long)]
        diagonal: bool,
    },
    /// Dimensions and minimum weights of each letter's code and its dual.
    Weights(ModelArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct TableArgs {
    /// W_n(K) for n = 1..N.
    #[arg(long, num_args = 2, value_names = ["K", "N"])]
    witt: Option<Vec<u32>>,
    /// h(K, c) for c = 1..C.
    #[arg(long, num_args = 2, value_names = ["K", "C"])]
    hirsch: Option<Vec<u32>>,
    /// p_C(T), T an integer or fraction p/q.
    #[arg(long, num_args = 2, value_names = ["C", "T"])]
    pc: Option<Vec<String>>,
}

enum Failure {
    /// Bad input: exit 2.
    Input(String),
    /// Budget ran out; partial output already printed: exit 3.
    Budget,
    /// Should not happen: exit 4.
    Internal(String),
}

impl From<SigmaError> for Failure {
    fn from(e: SigmaError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::InvariantBreach(_) => Failure::Internal(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn budget(seconds: Option<f64>) -> Result<Option<Duration>, Failure> {
    seconds
        .map(|s| Duration::try_from_secs_f64(s).map_err(|_| Failure::Input(format!("invalid budget {s}"))))
        .transpose()
}

fn emit<T: Serialize>(format: Format, doc: &T, text: impl FnOnce(&T) -> String) {
    match format {
        Format::Text => print!("{}", text(doc)),
        Format::Json => println!("{}", serde_json::to_string_pretty(doc).expect("documents serialize")),
    }
}

fn write_json<T: Serialize>(path: Option<&Path>, doc: &T) -> Outcome {
    if let Some(p) = path {
        let body = serde_json::to_string_pretty(doc).expect("documents serialize") + "\n";
        std::fs::write(p, body).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn load_model(args: &ModelArgs) -> Result<SubgroupModel, Failure> {
    if let Some(b) = args.builtin {
        let m = args
            .m
            .ok_or_else(|| Failure::Input("--builtin needs --m".into()))?;
        let r = args.r.unwrap_or(1);
        let model = match (b, args.diagonal) {
            (Builtin::B0, d) => SubgroupModel::new(builtin_b0(m, r)?.spec().clone(), d),
            (Builtin::B1, true) => builtin_b1_diagonal(m, r)?,
            (Builtin::B1, false) => builtin_b1(m, r)?,
        };
        return Ok(model);
    }
    let path = args
        .path
        .as_ref()
        .ok_or_else(|| Failure::Input("give a σ file or --builtin".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let parsed = input::parse_input(&text, args.r, args.witness)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(SubgroupModel::new(parsed.spec, parsed.diagonal || args.diagonal))
}

fn cmd_analyze(args: &AnalyzeArgs, format: Format) -> Outcome {
    let model = load_model(&args.model)?;
    let options = AnalysisOptions {
        profile: ProfileOptions {
            max_k: args.max_k,
            per_k_budget: budget(args.budget)?,
        },
        weight_cap: DEFAULT_WEIGHT_CAP,
    };
    let start = Instant::now();
    let report = analyze(&model, &options)?;
    let timing = (!args.no_timing).then(|| Timing {
        wall_time_ms: start.elapsed().as_millis() as u64,
        threads: rayon::current_num_threads(),
    });
    let timed_out = report.profile.has_unknown(UnknownReason::TimeBudget);
    let doc = ReportDocument::new(&model, report, timing);
    emit(format, &doc, render::report);
    write_json(args.output.as_deref(), &doc)?;
    if timed_out {
        return Err(Failure::Budget);
    }
    Ok(())
}

fn cmd_search(args: &SearchArgs, format: Format) -> Outcome {
    let need_l = || {
        args.l
            .ok_or_else(|| Failure::Input("--l is required for this mode".into()))
    };
    let mode = match args.mode {
        Mode::MinRows => SearchMode::MinRows,
        Mode::Count => SearchMode::Count { l: need_l()? },
        Mode::Enumerate => SearchMode::Enumerate {
            l: need_l()?,
            limit: args.limit,
        },
    };
    let surjectivity = if args.virtual_ {
        Surjectivity::VirtualOverZ
    } else if args.f2 {
        Surjectivity::OverF2
    } else {
        Surjectivity::OverZ
    };
    let mut query = SearchQuery::new(args.m, args.k, mode)
        .with_diagonal(args.diagonal)
        .with_surjectivity(surjectivity)
        .with_budget(budget(args.budget)?);
    if args.ordered {
        query = query.ordered();
    }
    let (result, timed_out) = match search::run(&query) {
        Ok(r) => (r, false),
        Err(SearchError::TimeBudgetExceeded(partial)) => (*partial, true),
        Err(SearchError::Analysis(e)) => return Err(e.into()),
        Err(e @ SearchError::Overflow) => return Err(Failure::Internal(e.to_string())),
        Err(e) => return Err(Failure::Input(e.to_string())),
    };
    let result = if args.no_timing { result.without_timing() } else { result };
    let doc = SearchDocument::new(result, Some(rayon::current_num_threads()));
    emit(format, &doc, render::search);
    write_json(args.output.as_deref(), &doc)?;
    if timed_out {
        return Err(Failure::Budget);
    }
    Ok(())
}

fn code_failure(e: CodeError) -> Failure {
    match e {
        CodeError::InvariantBreach { .. } => Failure::Internal(e.to_string()),
        _ => Failure::Input(e.to_string()),
    }
}

fn cmd_code(cmd: &CodeCommand, format: Format) -> Outcome {
    match cmd {
        CodeCommand::ToSigma { path } => {
            let text =
                std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            let rows = input::parse_matrix(&text).map_err(Failure::Input)?;
            let spec = sigma_from_code(&rows).map_err(code_failure)?;
            let doc = MatrixDocument {
                schema_version: SCHEMA_VERSION,
                kind: "code_to_sigma".into(),
                sigma: spec.sigma(0).to_vec(),
                rows,
            };
            emit(format, &doc, render::matrix);
        }
        CodeCommand::FromSigma { sigma, diagonal } => {
            let raw = input::parse_inline(sigma).map_err(Failure::Input)?;
            let spec = validate_spec(&[raw])?;
            let array = build_array(spec.sigma(0));
            let mut rows = array.to_rows();
            if *diagonal {
                rows.push(vec![1; spec.m()]);
            }
            let doc = MatrixDocument {
                schema_version: SCHEMA_VERSION,
                kind: "code_from_sigma".into(),
                sigma: spec.sigma(0).to_vec(),
                rows,
            };
            emit(format, &doc, render::matrix);
        }
        CodeCommand::Weights(args) => {
            let model = load_model(args)?;
            let doc = WeightsDocument {
                schema_version: SCHEMA_VERSION,
                kind: "code_weights".into(),
                input: InputEcho::of(&model),
                codes: (0..model.r())
                    .map(|i| code_summary(&model, i, DEFAULT_WEIGHT_CAP))
                    .collect(),
            };
            emit(format, &doc, render::weights);
        }
    }
    Ok(())
}

fn parse_rational(t: &str) -> Result<BigRational, Failure> {
    let bad = || Failure::Input(format!("'{t}' is not an integer or fraction"));
    match t.split_once('/') {
        Some((p, q)) => {
            let p = p.trim().parse().map_err(|_| bad())?;
            let q: num_bigint::BigInt = q.trim().parse().map_err(|_| bad())?;
            if q == num_bigint::BigInt::from(0) {
                return Err(bad());
            }
            Ok(BigRational::new(p, q))
        }
        None => Ok(BigRational::from_integer(t.trim().parse().map_err(|_| bad())?)),
    }
}

fn cmd_table(args: &TableArgs, format: Format) -> Outcome {
    let numerics = |e: binsub_core::nilpotent_numerics::NumericsError| Failure::Input(e.to_string());
    let doc = if let Some(v) = &args.witt {
        let (k, n) = (v[0], v[1]);
        let rows = (1..=n)
            .map(|i| Ok((i.to_string(), witt(i, k).map_err(numerics)?.to_string())))
            .collect::<Result<Vec<_>, Failure>>()?;
        TableDocument {
            schema_version: SCHEMA_VERSION,
            kind: "table".into(),
            argument: "n".into(),
            function: format!("W_n({k})"),
            rows,
        }
    } else if let Some(v) = &args.hirsch {
        let (k, c) = (v[0], v[1]);
        let rows = (1..=c)
            .map(|i| Ok((i.to_string(), hirsch(k, i).map_err(numerics)?.to_string())))
            .collect::<Result<Vec<_>, Failure>>()?;
        TableDocument {
            schema_version: SCHEMA_VERSION,
            kind: "table".into(),
            argument: "c".into(),
            function: format!("h({k},c)"),
            rows,
        }
    } else {
        let v = args.pc.as_ref().expect("clap requires one table");
        let c: u32 = v[0]
            .parse()
            .map_err(|_| Failure::Input(format!("'{}' is not a class", v[0])))?;
        let t = parse_rational(&v[1])?;
        let value = poly_pc(c, &t).map_err(numerics)?;
        TableDocument {
            schema_version: SCHEMA_VERSION,
            kind: "table".into(),
            argument: "t".into(),
            function: format!("p_{c}(t)"),
            rows: vec![(format_rational(&t), format_rational(&value))],
        }
    };
    emit(format, &doc, render::table);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    }
    let outcome = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a, cli.format),
        Command::Search(a) => cmd_search(a, cli.format),
        Command::Code(c) => cmd_code(c, cli.format),
        Command::Table(t) => cmd_table(t, cli.format),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Budget) => {
            eprintln!("error: time budget exceeded; output is partial");
            ExitCode::from(3)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(4)
        }
    }
}
